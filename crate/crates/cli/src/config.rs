//! Experiment configuration files.
//!
//! One TOML file describes any experiment; each subcommand reads the
//! sections it needs and the whole resolved file is echoed into the run
//! metadata.

use std::path::{Path, PathBuf};

use commlearn::codes::{builtin_matrix, load_alist, BinaryMatrix, TannerGraph};
use commlearn::ldbp::{FirMethod, LdbpExperimentConfig};
use commlearn::sim::{BerConfig, StoppingRule};
use commlearn::train::{load_checkpoint, DataSource, TrainConfig};
use commlearn::wbp::{WeightMode, WeightSet};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BerSweep,
    TrainDecoder,
    RrdEval,
    LdbpSim,
    LdbpTrain,
    FilterDesign,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Self::BerSweep => "ber-sweep",
            Self::TrainDecoder => "train-decoder",
            Self::RrdEval => "rrd-eval",
            Self::LdbpSim => "ldbp-sim",
            Self::LdbpTrain => "ldbp-train",
            Self::FilterDesign => "filter-design",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    pub kind: Option<Kind>,
    /// Master seed; overrides the seeds inside the sections.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub code: CodeSection,
    pub decoder: DecoderSection,
    pub sweep: SweepSection,
    pub rrd: RrdSection,
    pub train: TrainConfig,
    pub ldbp: LdbpExperimentConfig,
    pub ldbp_train: LdbpTrainSection,
    pub filter: FilterSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeSection {
    /// Built-in name such as `bch-63-36-cr`, or a path to an alist file.
    pub matrix: String,
}

impl Default for CodeSection {
    fn default() -> Self {
        Self {
            matrix: "bch-63-36-cr".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSection {
    pub mode: WeightMode,
    pub iterations: usize,
    pub damping: f64,
    pub temporal_sharing: bool,
    /// Trained weights; when set, mode, iterations and damping are ignored.
    pub checkpoint: Option<PathBuf>,
}

impl Default for DecoderSection {
    fn default() -> Self {
        Self {
            mode: WeightMode::Plain,
            iterations: 20,
            damping: 1.0,
            temporal_sharing: false,
            checkpoint: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub ebn0_db: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_frames: u64,
    pub data_source: DataSource,
    /// Noiseless channel; every row must come back error free.
    pub zero_noise: bool,
    /// Reruns one emitted row: the single grid point uses this seed directly.
    pub row_seed: Option<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let stopping = StoppingRule::default();
        Self {
            ebn0_db: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            min_bit_errors: stopping.min_bit_errors,
            max_frames: stopping.max_frames,
            data_source: DataSource::RandomCodewords,
            zero_noise: false,
            row_seed: None,
        }
    }
}

impl SweepSection {
    pub fn validate(&self) -> CliResult<()> {
        if self.ebn0_db.is_empty() {
            return Err(CliError::Config("sweep.ebn0_db must not be empty".into()));
        }
        if self
            .ebn0_db
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
        {
            return Err(CliError::Config(
                "sweep.ebn0_db must be sorted ascending".into(),
            ));
        }
        if self.min_bit_errors == 0 || self.max_frames == 0 {
            return Err(CliError::Config(
                "sweep.min_bit_errors and sweep.max_frames must be at least 1".into(),
            ));
        }
        if self.row_seed.is_some() && self.ebn0_db.len() != 1 {
            return Err(CliError::Config(
                "sweep.row_seed needs exactly one Eb/N0 value".into(),
            ));
        }
        Ok(())
    }

    pub fn ber_config(&self) -> BerConfig {
        BerConfig {
            stopping: StoppingRule {
                min_bit_errors: self.min_bit_errors,
                max_frames: self.max_frames,
            },
            data_source: self.data_source,
            zero_noise: self.zero_noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrdSection {
    pub blocks: usize,
    pub iterations_per_permutation: usize,
    pub mixing: f64,
    pub damping: f64,
    pub early_exit: bool,
}

impl Default for RrdSection {
    fn default() -> Self {
        Self {
            blocks: 10,
            iterations_per_permutation: 2,
            mixing: 0.5,
            damping: 0.9,
            early_exit: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdbpTrainSection {
    pub launch_power_dbm: f64,
    /// Filter repeated in every step of the initial bank.
    pub init: FirMethod,
    /// Start from a saved bank instead.
    pub init_bank: Option<PathBuf>,
    pub eval_bursts: usize,
}

impl Default for LdbpTrainSection {
    fn default() -> Self {
        Self {
            launch_power_dbm: 0.0,
            init: FirMethod::LsCo { ceiling: 1.0 },
            init_bank: None,
            eval_bursts: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub design: FirMethod,
    /// Tap count; the link's when absent.
    pub taps: Option<usize>,
    /// Frequency points in the response table.
    pub response_points: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            design: FirMethod::Ls,
            taps: None,
            response_points: 257,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::Parse(path.to_path_buf(), e))?;
        // relative paths inside the file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.decoder.checkpoint.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.ldbp_train.init_bank.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.out.as_mut() {
            resolve(p);
        }
        if looks_like_path(&cfg.code.matrix) {
            let mut p = PathBuf::from(&cfg.code.matrix);
            resolve(&mut p);
            cfg.code.matrix = p.to_string_lossy().into_owned();
        }
        Ok(cfg)
    }

    /// Checks the kind and applies the master seed to every section.
    pub fn resolve(mut self, kind: Kind, seed_override: Option<u64>) -> CliResult<Self> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(CliError::Config(format!(
                    "config is for {} but the subcommand is {}",
                    k.name(),
                    kind.name()
                )));
            }
        }
        self.kind = Some(kind);
        if seed_override.is_some() {
            self.seed = seed_override;
        }
        let seed = *self.seed.get_or_insert(0);
        if seed > i64::MAX as u64 {
            return Err(CliError::Config(format!(
                "seed {seed} exceeds {}",
                i64::MAX
            )));
        }
        self.train.seed = seed;
        self.ldbp.seed = seed;
        self.ldbp.train.seed = seed;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn looks_like_path(s: &str) -> bool {
    s.contains('/') || s.contains('\\') || s.ends_with(".alist")
}

impl CodeSection {
    pub fn matrix(&self) -> CliResult<BinaryMatrix> {
        if looks_like_path(&self.matrix) {
            Ok(load_alist(&self.matrix)?)
        } else {
            Ok(builtin_matrix(&self.matrix)?)
        }
    }
}

impl DecoderSection {
    /// Weights of the configured decoder with `iterations` iterations.
    pub fn weights(&self, graph: &TannerGraph, iterations: usize) -> CliResult<WeightSet> {
        let w = match &self.checkpoint {
            Some(path) => load_checkpoint(path)?,
            None => WeightSet::new(self.mode, self.temporal_sharing, iterations, graph)
                .with_damping(self.damping),
        };
        w.validate(graph)?;
        Ok(w)
    }
}
