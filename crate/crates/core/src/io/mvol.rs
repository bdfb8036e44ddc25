//! MVOL: the volume container.
//!
//! Layout: magic `MVL1`; u8 kind (0 = f32 intensity, 1 = u8 label);
//! 3 x u32 dims little-endian (nx, ny, nz); raw voxels x-fastest.
//! Readers reject unknown magic and kinds, and truncated payloads, naming
//! the byte offset of the problem.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Dims, LabelVolume, Volume};

const MAGIC: &[u8; 4] = b"MVL1";
const KIND_INTENSITY: u8 = 0;
const KIND_LABEL: u8 = 1;
const HEADER_LEN: u64 = 4 + 1 + 12;

/// A decoded MVOL file: either field kind.
#[derive(Debug, Clone)]
pub enum MvolData {
    Intensity(Volume<f32>),
    Label(LabelVolume),
}

impl MvolData {
    pub fn dims(&self) -> Dims {
        match self {
            MvolData::Intensity(v) => v.dims,
            MvolData::Label(v) => v.dims,
        }
    }

    pub fn into_intensity(self) -> Result<Volume<f32>> {
        match self {
            MvolData::Intensity(v) => Ok(v),
            MvolData::Label(_) => Err(Error::data("expected an intensity volume, got labels")),
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            MvolData::Label(v) => Ok(v),
            MvolData::Intensity(_) => Err(Error::data("expected a label volume, got intensity")),
        }
    }
}

pub fn mvol_write(volume: &Volume<f32>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_INTENSITY, volume.dims)?;
    for v in &volume.voxels {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn mvol_write_labels(labels: &LabelVolume, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_LABEL, labels.dims)?;
    w.write_all(&labels.voxels)?;
    w.flush()?;
    Ok(())
}

fn write_header<W: Write>(w: &mut W, kind: u8, dims: Dims) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[kind])?;
    for d in [dims.nx, dims.ny, dims.nz] {
        let d = u32::try_from(d)
            .map_err(|_| Error::parameter(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

pub fn mvol_read(path: &Path) -> Result<MvolData> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact_at(&mut r, &mut magic, 0)?;
    if &magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:02x?}, expected \"MVL1\"")));
    }

    let mut kind = [0u8; 1];
    read_exact_at(&mut r, &mut kind, 4)?;
    let kind = kind[0];
    if kind != KIND_INTENSITY && kind != KIND_LABEL {
        return Err(Error::format(4, format!("unknown volume kind {kind}")));
    }

    let mut dim_bytes = [0u8; 12];
    read_exact_at(&mut r, &mut dim_bytes, 5)?;
    let d = |i: usize| u32::from_le_bytes(dim_bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
    let dims = Dims::new(d(0), d(1), d(2));
    let n = dims.len();

    match kind {
        KIND_INTENSITY => {
            let mut payload = vec![0u8; n * 4];
            read_exact_at(&mut r, &mut payload, HEADER_LEN)?;
            reject_trailing(&mut r, HEADER_LEN + payload.len() as u64)?;
            let voxels = payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Ok(MvolData::Intensity(Volume::new(dims, voxels)?))
        }
        _ => {
            let mut voxels = vec![0u8; n];
            read_exact_at(&mut r, &mut voxels, HEADER_LEN)?;
            reject_trailing(&mut r, HEADER_LEN + voxels.len() as u64)?;
            if let Some(i) = voxels.iter().position(|&c| c > 4) {
                return Err(Error::format(
                    HEADER_LEN + i as u64,
                    format!("label value {} outside 0..=4", voxels[i]),
                ));
            }
            Ok(MvolData::Label(LabelVolume::new(dims, voxels)?))
        }
    }
}

/// `read_exact` that reports the file offset where the data ran out.
fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    let mut filled = 0usize;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => {
                return Err(Error::format(
                    offset + filled as u64,
                    format!("truncated: expected {} more bytes", buf.len() - filled),
                ))
            }
            k => filled += k,
        }
    }
    Ok(())
}

fn reject_trailing<R: Read>(r: &mut R, offset: u64) -> Result<()> {
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::format(offset, "trailing bytes after payload"));
    }
    Ok(())
}
