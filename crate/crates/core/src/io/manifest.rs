//! Plain-text study manifests: per-study volume paths plus named cohort
//! roles (pretrain, finetune, validation, test, ...).
//!
//! Format, one statement per line, `#` comments allowed:
//!
//! ```text
//! study <id>
//! flair <path>        # likewise t2 / t1 / t1c / labels, all optional
//! role pretrain <id> [<id> ...]
//! ```
//!
//! Paths are resolved relative to the manifest file. Roles may overlap
//! (the fine-tuning cohort is typically a subset of the pre-training one);
//! an id may not appear twice within the same role.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::mvol::mvol_read;
use crate::volume::{Sequence, Study};

#[derive(Debug, Clone, Default)]
pub struct ManifestEntry {
    pub id: String,
    pub sequence_paths: [Option<PathBuf>; 4],
    pub label_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub studies: Vec<ManifestEntry>,
    pub roles: BTreeMap<String, Vec<String>>,
    base_dir: PathBuf,
}

impl Manifest {
    pub fn new(base_dir: PathBuf) -> Self {
        Manifest { base_dir, ..Default::default() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut manifest = Manifest::new(base_dir);

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let keyword = parts.next().unwrap();
            let rest: Vec<&str> = parts.collect();
            let bad = |msg: String| Error::data(format!("manifest line {}: {msg}", lineno + 1));

            match keyword {
                "study" => {
                    let [id] = rest.as_slice() else {
                        return Err(bad("study takes exactly one id".into()));
                    };
                    if manifest.studies.iter().any(|e| e.id == *id) {
                        return Err(bad(format!("duplicate study id `{id}`")));
                    }
                    manifest
                        .studies
                        .push(ManifestEntry { id: id.to_string(), ..Default::default() });
                }
                "flair" | "t2" | "t1" | "t1c" | "labels" => {
                    let [path] = rest.as_slice() else {
                        return Err(bad(format!("{keyword} takes exactly one path")));
                    };
                    let entry = manifest
                        .studies
                        .last_mut()
                        .ok_or_else(|| bad(format!("{keyword} before any study line")))?;
                    let path = PathBuf::from(path);
                    if keyword == "labels" {
                        entry.label_path = Some(path);
                    } else {
                        let seq = Sequence::parse(keyword).expect("keyword is a sequence");
                        entry.sequence_paths[seq.index()] = Some(path);
                    }
                }
                "role" => {
                    if rest.len() < 2 {
                        return Err(bad("role takes a name and at least one id".into()));
                    }
                    let name = rest[0].to_string();
                    let ids: Vec<String> = rest[1..].iter().map(|s| s.to_string()).collect();
                    let slot = manifest.roles.entry(name.clone()).or_default();
                    for id in ids {
                        if slot.contains(&id) {
                            return Err(bad(format!("id `{id}` listed twice in role `{name}`")));
                        }
                        slot.push(id);
                    }
                }
                other => return Err(bad(format!("unknown keyword `{other}`"))),
            }
        }

        for ids in manifest.roles.values() {
            for id in ids {
                if !manifest.studies.iter().any(|e| &e.id == id) {
                    return Err(Error::data(format!("role references unknown study `{id}`")));
                }
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("# lesionforge manifest\n");
        for e in &self.studies {
            out.push_str(&format!("study {}\n", e.id));
            for seq in Sequence::ALL {
                if let Some(p) = &e.sequence_paths[seq.index()] {
                    out.push_str(&format!(
                        "{} {}\n",
                        seq.name().to_ascii_lowercase(),
                        p.display()
                    ));
                }
            }
            if let Some(p) = &e.label_path {
                out.push_str(&format!("labels {}\n", p.display()));
            }
        }
        for (role, ids) in &self.roles {
            out.push_str(&format!("role {} {}\n", role, ids.join(" ")));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn entry(&self, id: &str) -> Result<&ManifestEntry> {
        self.studies
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::data(format!("unknown study `{id}`")))
    }

    /// Study ids assigned to a role, in manifest order.
    pub fn role(&self, name: &str) -> Result<&[String]> {
        self.roles
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::data(format!("manifest defines no `{name}` role")))
    }

    /// Reads every volume of one study from disk.
    pub fn load_study(&self, id: &str) -> Result<Study<f32>> {
        let entry = self.entry(id)?;
        let mut sequences = Vec::new();
        for seq in Sequence::ALL {
            if let Some(rel) = &entry.sequence_paths[seq.index()] {
                let vol = mvol_read(&self.base_dir.join(rel))?.into_intensity()?;
                sequences.push((seq, vol));
            }
        }
        let labels = match &entry.label_path {
            Some(rel) => Some(mvol_read(&self.base_dir.join(rel))?.into_labels()?),
            None => None,
        };
        Study::new(sequences, labels)
    }
}
