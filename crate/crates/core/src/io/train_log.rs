//! Tab-separated training log: one line per epoch with
//! `epoch  train_loss  val_loss  val_accuracy  lr`; the accuracy column is
//! `-` for reconstruction training, which has none.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

pub struct TrainLog {
    out: BufWriter<File>,
}

impl TrainLog {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# epoch\ttrain_loss\tval_loss\tval_accuracy\tlr")?;
        Ok(TrainLog { out })
    }

    pub fn epoch(
        &mut self,
        epoch: usize,
        train_loss: f64,
        val_loss: f64,
        val_accuracy: Option<f64>,
        lr: f64,
    ) -> Result<()> {
        let acc = match val_accuracy {
            Some(a) => format!("{a:.6}"),
            None => "-".to_string(),
        };
        writeln!(self.out, "{epoch}\t{train_loss:.8}\t{val_loss:.8}\t{acc}\t{lr:.8}")?;
        self.out.flush()?;
        Ok(())
    }
}
