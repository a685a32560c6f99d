//! On-disk formats: weight checkpoints, resumable training state, run
//! configuration and the loss log.

mod binary;
mod checkpoint;
mod run_config;
mod state;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Role, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use run_config::{parse_run_config, read_run_config, RunConfig};
pub use state::{decode_state, encode_state, load_state, save_state, STATE_MAGIC};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut f = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(tmp, e))?;
    f.sync_all().map_err(|e| Error::io(tmp, e))?;
    drop(f);
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

/// `step,loss` rows, steps counted from 1.
pub fn loss_csv(history: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in history.iter().enumerate() {
        out.push_str(&format!("{},{l:.9}\n", i + 1));
    }
    out
}
