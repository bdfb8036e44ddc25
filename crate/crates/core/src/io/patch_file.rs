//! MPB1: vectorized patch batches on disk, so extraction and training can
//! run as separate commands.
//!
//! Layout, little-endian: magic `MPB1`; u8 n_sequences; u8 flags (bit 0
//! labels present, bit 1 centers present); u16 patch_size; u32 n_patches;
//! f32 data rows; u8 labels (if present); 3 x u32 centers (if present).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::patches::PatchBatch;
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"MPB1";

pub fn write_patches<F: Scalar>(batch: &PatchBatch<F>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[batch.n_sequences() as u8])?;
    let mut flags = 0u8;
    if batch.labels.is_some() {
        flags |= 1;
    }
    if batch.centers.is_some() {
        flags |= 2;
    }
    w.write_all(&[flags])?;
    w.write_all(&(batch.patch_size() as u16).to_le_bytes())?;
    w.write_all(&(batch.len() as u32).to_le_bytes())?;
    for v in batch.data() {
        w.write_all(&(v.to_f64_s() as f32).to_le_bytes())?;
    }
    if let Some(labels) = &batch.labels {
        w.write_all(labels)?;
    }
    if let Some(centers) = &batch.centers {
        for &(x, y, z) in centers {
            for c in [x, y, z] {
                w.write_all(&(c as u32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_patches(path: &Path) -> Result<PatchBatch<f32>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut pos = 0u64;
    let mut fill = |r: &mut BufReader<File>, buf: &mut [u8], pos: &mut u64| -> Result<()> {
        let mut filled = 0usize;
        while filled < buf.len() {
            match r.read(&mut buf[filled..])? {
                0 => {
                    return Err(Error::format(
                        *pos + filled as u64,
                        format!("truncated: expected {} more bytes", buf.len() - filled),
                    ))
                }
                k => filled += k,
            }
        }
        *pos += buf.len() as u64;
        Ok(())
    };

    let mut magic = [0u8; 4];
    fill(&mut r, &mut magic, &mut pos)?;
    if &magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:02x?}, expected \"MPB1\"")));
    }
    let mut head = [0u8; 2];
    fill(&mut r, &mut head, &mut pos)?;
    let (n_seq, flags) = (head[0] as usize, head[1]);
    let mut p16 = [0u8; 2];
    fill(&mut r, &mut p16, &mut pos)?;
    let patch_size = u16::from_le_bytes(p16) as usize;
    let mut n32 = [0u8; 4];
    fill(&mut r, &mut n32, &mut pos)?;
    let n = u32::from_le_bytes(n32) as usize;

    let vec_len = n_seq * patch_size * patch_size;
    let mut raw = vec![0u8; n * vec_len * 4];
    fill(&mut r, &mut raw, &mut pos)?;
    let data: Vec<f32> =
        raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();

    let labels = if flags & 1 != 0 {
        let mut l = vec![0u8; n];
        fill(&mut r, &mut l, &mut pos)?;
        Some(l)
    } else {
        None
    };
    let centers = if flags & 2 != 0 {
        let mut raw = vec![0u8; n * 12];
        fill(&mut r, &mut raw, &mut pos)?;
        Some(
            raw.chunks_exact(12)
                .map(|b| {
                    let c = |i: usize| {
                        u32::from_le_bytes(b[i * 4..i * 4 + 4].try_into().unwrap()) as usize
                    };
                    (c(0), c(1), c(2))
                })
                .collect(),
        )
    } else {
        None
    };

    PatchBatch::new(data, labels, centers, patch_size, n_seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_with_labels_and_centers() {
        let p = 3usize;
        let n = 5usize;
        let data: Vec<f32> = (0..n * p * p * 2).map(|i| i as f32 * 0.5 - 3.0).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 5) as u8).collect();
        let centers: Vec<(usize, usize, usize)> = (0..n).map(|i| (i + 1, 2 * i, i)).collect();
        let batch = PatchBatch::new(data, Some(labels), Some(centers), p, 2).unwrap();

        let dir = std::env::temp_dir().join("lesionforge-mpb-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("batch.mpb");
        write_patches(&batch, &path).unwrap();
        let back = read_patches(&path).unwrap();
        assert_eq!(batch, back);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = std::env::temp_dir().join("lesionforge-mpb-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.mpb");
        std::fs::write(&path, b"QQQQrest").unwrap();
        assert!(matches!(read_patches(&path), Err(Error::Format { offset: 0, .. })));
    }
}
