//! Versioned TOML checkpoints of decoder weight sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{at, Error, Result};
use crate::wbp::{WeightMode, WeightSet};

pub const CHECKPOINT_FORMAT: &str = "commlearn-weights";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    mode: WeightMode,
    temporal_sharing: bool,
    iterations: usize,
    num_vars: usize,
    num_edges: usize,
    llr_clip: f64,
    damping: Vec<f64>,
    channel: Vec<f64>,
    message: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_channel: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_message: Option<Vec<f64>>,
}

pub fn checkpoint_to_string(w: &WeightSet) -> Result<String> {
    let (output_channel, output_message) = match w.output_values() {
        Some((c, m)) => (Some(c.to_vec()), Some(m.to_vec())),
        None => (None, None),
    };
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        mode: w.mode(),
        temporal_sharing: w.temporal_sharing(),
        iterations: w.iterations(),
        num_vars: w.num_vars(),
        num_edges: w.num_edges(),
        llr_clip: w.llr_clip(),
        damping: w.damping_values().to_vec(),
        channel: w.channel_values().to_vec(),
        message: w.message_values().to_vec(),
        output_channel,
        output_message,
    };
    toml::to_string(&file).map_err(|e| Error::Parse(e.to_string()))
}

pub fn checkpoint_from_str(text: &str) -> Result<WeightSet> {
    let file: CheckpointFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported checkpoint {} v{}",
            file.format, file.version
        )));
    }
    let output = match (file.output_channel, file.output_message) {
        (Some(c), Some(m)) => Some((c, m)),
        (None, None) => None,
        _ => return Err(Error::Parse("output weights must come in pairs".into())),
    };
    WeightSet::from_parts(
        file.mode,
        file.temporal_sharing,
        file.iterations,
        file.num_vars,
        file.num_edges,
        file.llr_clip,
        file.channel,
        file.message,
        output,
        file.damping,
    )
}

pub fn save_checkpoint(w: &WeightSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), checkpoint_to_string(w)?).map_err(at(path.as_ref()))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<WeightSet> {
    checkpoint_from_str(&std::fs::read_to_string(path.as_ref()).map_err(at(path.as_ref()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut w = WeightSet::with_shape(WeightMode::FullyWeighted, false, 3, 4, 6)
            .with_per_iteration_damping(0.7)
            .with_untied_output();
        for (i, x) in w.message_values_mut().iter_mut().enumerate() {
            *x = 1.0 / (i as f64 + 3.0);
        }
        let text = checkpoint_to_string(&w).unwrap();
        let back = checkpoint_from_str(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(checkpoint_to_string(&back).unwrap(), text);
    }

    #[test]
    fn wrong_version_rejected() {
        let w = WeightSet::with_shape(WeightMode::Plain, false, 2, 3, 4);
        let text = checkpoint_to_string(&w)
            .unwrap()
            .replace("version = 1", "version = 9");
        assert!(checkpoint_from_str(&text).is_err());
    }
}
