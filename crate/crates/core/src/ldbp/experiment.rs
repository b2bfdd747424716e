//! Launch-power sweeps comparing equalizers.

use serde::{Deserialize, Serialize};

use super::filters::{FilterBank, FirMethod};
use super::link::{
    pooled_effective_snr_db, simulate_burst, train_ldbp, Burst, Equalizer, LdbpTrainConfig,
    LinkConfig,
};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Dispersion compensation only.
    Linear,
    /// Frequency-domain backpropagation.
    DbpFft,
    /// The least-squares filter repeated in every step.
    Ls,
    /// The frequency-sampling filter repeated in every step.
    Fds,
    /// Jointly trained filters.
    Ldbp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::DbpFft => "dbp-fft",
            Self::Ls => "ls",
            Self::Fds => "fds",
            Self::Ldbp => "ldbp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdbpExperimentConfig {
    pub link: LinkConfig,
    pub launch_powers_dbm: Vec<f64>,
    pub methods: Vec<Method>,
    pub eval_bursts: usize,
    pub dbp_steps_per_span: usize,
    /// Filter repeated in every step of the untrained bank.
    pub ldbp_init: FirMethod,
    pub train: LdbpTrainConfig,
    pub seed: u64,
    /// Reruns one emitted row: the single launch power uses this seed
    /// directly instead of one derived from `seed`.
    pub row_seed: Option<u64>,
}

impl Default for LdbpExperimentConfig {
    fn default() -> Self {
        Self {
            link: LinkConfig::default(),
            launch_powers_dbm: vec![-12.0, -9.0, -6.0, -3.0, 0.0, 3.0],
            methods: vec![
                Method::Linear,
                Method::DbpFft,
                Method::Ls,
                Method::Fds,
                Method::Ldbp,
            ],
            eval_bursts: 4,
            dbp_steps_per_span: 50,
            ldbp_init: FirMethod::LsCo { ceiling: 1.0 },
            train: LdbpTrainConfig::default(),
            seed: 0,
            row_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LdbpRow {
    pub launch_power_dbm: f64,
    pub method: Method,
    pub taps_total: usize,
    pub effective_snr_db: f64,
    /// Seed of this launch power's bursts and training.
    pub seed: u64,
}

/// Result of one sweep: rows in (power, method) order plus the trained
/// banks per power.
#[derive(Clone, Debug)]
pub struct LdbpExperiment {
    pub rows: Vec<LdbpRow>,
    pub trained: Vec<(f64, FilterBank)>,
}

/// Evaluation bursts of launch-power row `seed`.
pub fn evaluation_bursts(
    cfg: &LdbpExperimentConfig,
    power_dbm: f64,
    seed: u64,
) -> Result<Vec<Burst>> {
    (0..cfg.eval_bursts as u64)
        .map(|i| simulate_burst(&cfg.link, power_dbm, derive_seed(seed, 1000 + i)))
        .collect()
}

pub fn run_ldbp_experiment(cfg: &LdbpExperimentConfig) -> Result<LdbpExperiment> {
    cfg.link.validate()?;
    if cfg.launch_powers_dbm.is_empty() || cfg.methods.is_empty() || cfg.eval_bursts == 0 {
        return Err(Error::InvalidArgument(
            "experiment needs launch powers, methods and evaluation bursts".into(),
        ));
    }
    if cfg.row_seed.is_some() && cfg.launch_powers_dbm.len() != 1 {
        return Err(Error::InvalidArgument(
            "a row seed needs exactly one launch power".into(),
        ));
    }
    let ls = cfg.link.repeated_bank(FirMethod::Ls)?;
    let fds = cfg.link.repeated_bank(FirMethod::Fds { grid: None })?;
    let init = cfg.link.repeated_bank(cfg.ldbp_init)?;
    let mut rows = Vec::new();
    let mut trained = Vec::new();
    for (p, &power) in cfg.launch_powers_dbm.iter().enumerate() {
        let seed = cfg
            .row_seed
            .unwrap_or_else(|| derive_seed(cfg.seed, p as u64));
        let bursts = evaluation_bursts(cfg, power, seed)?;
        for &method in &cfg.methods {
            let (eq, taps_total) = match method {
                Method::Linear => (Equalizer::Linear, 0),
                Method::DbpFft => (
                    Equalizer::DbpFft {
                        steps_per_span: cfg.dbp_steps_per_span,
                    },
                    0,
                ),
                Method::Ls => (Equalizer::Filters(ls.clone()), ls.total_taps()),
                Method::Fds => (Equalizer::Filters(fds.clone()), fds.total_taps()),
                Method::Ldbp => {
                    let train_cfg = LdbpTrainConfig {
                        seed: derive_seed(seed, 1),
                        ..cfg.train.clone()
                    };
                    let out = train_ldbp(&cfg.link, power, &init, &train_cfg)?;
                    let taps = out.bank.total_taps();
                    trained.push((power, out.bank.clone()));
                    (Equalizer::Filters(out.bank), taps)
                }
            };
            let snr = pooled_effective_snr_db(&cfg.link, &bursts, &eq)?;
            log::info!("P = {power} dBm, {}: {snr:.2} dB", method.name());
            rows.push(LdbpRow {
                launch_power_dbm: power,
                method,
                taps_total,
                effective_snr_db: snr,
                seed,
            });
        }
    }
    Ok(LdbpExperiment { rows, trained })
}
