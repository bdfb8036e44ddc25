//! NNW1: the network checkpoint format.
//!
//! Layout, all little-endian: magic `NNW1`; u32 layer count; per layer
//! u32 in_dim, u32 out_dim, u8 activation code (0 sigmoid, 1 linear,
//! 2 softmax), then row-major f32 weights, then f32 biases.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, LayerSpec, Network};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"NNW1";

/// Writes a checkpoint; parameters are stored as f32 whatever the in-memory
/// scalar type.
pub fn write_checkpoint<F: Scalar>(net: &Network<F>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for layer in net.layers() {
        w.write_all(&(layer.spec.input_dim as u32).to_le_bytes())?;
        w.write_all(&(layer.spec.output_dim as u32).to_le_bytes())?;
        w.write_all(&[layer.spec.activation.code()])?;
        for v in layer.weights.iter().chain(layer.biases.iter()) {
            w.write_all(&(v.to_f64_s() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Network<f32>> {
    let mut r = Offset { inner: BufReader::new(File::open(path)?), pos: 0 };

    let mut magic = [0u8; 4];
    r.fill(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:02x?}, expected \"NNW1\"")));
    }
    let n_layers = r.u32()? as usize;
    if n_layers == 0 {
        return Err(Error::format(4, "checkpoint has zero layers"));
    }

    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let code_at = r.pos;
        let mut code = [0u8; 1];
        r.fill(&mut code)?;
        let activation = Activation::from_code(code[0])
            .ok_or_else(|| Error::format(code_at, format!("unknown activation code {}", code[0])))?;
        let spec = LayerSpec::new(in_dim, out_dim, activation)
            .map_err(|e| Error::format(code_at, e.to_string()))?;
        let mut weights = vec![0.0f32; spec.weight_count()];
        for w in weights.iter_mut() {
            *w = r.f32()?;
        }
        let mut biases = vec![0.0f32; out_dim];
        for b in biases.iter_mut() {
            *b = r.f32()?;
        }
        layers.push(DenseLayer::new(spec, weights, biases)?);
    }
    Network::new(layers)
}

/// SHA-256 of a file's bytes, hex-encoded; used as the network digest in
/// provenance records and map sidecars.
pub fn file_digest(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut file = File::open(path)?;
    std::io::copy(&mut file, &mut hasher)?;
    let out = hasher.finalize();
    Ok(out.iter().map(|b| format!("{b:02x}")).collect())
}

struct Offset<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Offset<R> {
    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        let mut filled = 0usize;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..])? {
                0 => {
                    return Err(Error::format(
                        self.pos + filled as u64,
                        format!("truncated: expected {} more bytes", buf.len() - filled),
                    ))
                }
                k => filled += k,
            }
        }
        self.pos += buf.len() as u64;
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn f32(&mut self) -> Result<f32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }
}
