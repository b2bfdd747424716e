//! End-to-end link simulation, receiver equalizers and learned-filter
//! training.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chain::{effective_snr_db, ldbp_forward, normalized_mse, LdbpTape};
use super::fiber::{cd_compensate, dbp_frequency_domain, ssfm_propagate, FiberParams};
use super::filters::{FilterBank, FirDesign, FirMethod};
use super::signal::{
    convolve_real_same, integer_sps, matched_filter, matched_taps, random_burst, resample_fft,
    sample_symbols, ComplexSignal, PulseConfig,
};
use crate::error::{Error, Result};
use crate::grad::{ldbp_backward, Differentiable, GradientVector};
use crate::rng::{derive_seed, seeded};
use crate::train::{clip_gradient, optimizer_step, ClipMode, OptimizerConfig, OptimizerState};

/// Transmitter, fiber and receiver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub fiber: FiberParams,
    pub symbol_rate: f64,
    pub pulse: PulseConfig,
    pub payload_symbols: usize,
    /// Samples per symbol of the reference propagation.
    pub sim_oversampling: usize,
    pub sim_steps_per_span: usize,
    /// Samples per symbol seen by the equalizers.
    pub eq_oversampling: usize,
    pub eq_steps_per_span: usize,
    pub taps: usize,
    pub symmetric: bool,
    /// Signal band edge as a fraction of the equalizer's Nyquist frequency;
    /// `None` uses the pulse bandwidth.
    pub band_fraction: Option<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let pulse = PulseConfig::default();
        Self {
            fiber: FiberParams::default(),
            symbol_rate: 10.7e9,
            payload_symbols: 4096 - 2 * pulse.guard_symbols,
            pulse,
            sim_oversampling: 4,
            sim_steps_per_span: 50,
            eq_oversampling: 2,
            eq_steps_per_span: 2,
            taps: 5,
            symmetric: true,
            band_fraction: None,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        if self.eq_oversampling < 2 || self.sim_oversampling < self.eq_oversampling {
            return Err(Error::InvalidArgument(
                "need 2 <= eq_oversampling <= sim_oversampling".into(),
            ));
        }
        if self.payload_symbols == 0 || self.sim_steps_per_span == 0 || self.eq_steps_per_span == 0
        {
            return Err(Error::InvalidArgument(
                "link counts must be positive".into(),
            ));
        }
        if !(self.symbol_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "symbol rate must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn eq_sample_rate(&self) -> f64 {
        self.symbol_rate * self.eq_oversampling as f64
    }

    pub fn band_fraction(&self) -> f64 {
        self.band_fraction
            .unwrap_or((1.0 + self.pulse.rolloff) / self.eq_oversampling as f64)
            .min(1.0)
    }

    pub fn fir_design(&self, method: FirMethod) -> FirDesign {
        FirDesign::new(method, self.taps, self.band_fraction())
    }

    /// The same designed filter in every equalizer step.
    pub fn repeated_bank(&self, method: FirMethod) -> Result<FilterBank> {
        FilterBank::for_link(
            &self.fiber,
            self.eq_steps_per_span,
            self.eq_sample_rate(),
            &self.fir_design(method),
            self.symmetric,
        )
    }
}

/// One simulated burst at the equalizer sampling rate.
#[derive(Clone, Debug)]
pub struct Burst {
    pub symbols: Vec<Complex64>,
    pub received: ComplexSignal,
    pub launch_power_dbm: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Random symbols sent through the reference propagation and resampled to
/// the equalizer rate.
pub fn simulate_burst(link: &LinkConfig, launch_power_dbm: f64, seed: u64) -> Result<Burst> {
    link.validate()?;
    let mut rng = seeded(seed, 0);
    let (_, symbols, mut tx) = random_burst(
        &link.pulse,
        link.payload_symbols,
        link.symbol_rate,
        link.sim_oversampling,
        &mut rng,
    )?;
    let amp = dbm_to_watts(launch_power_dbm).sqrt();
    tx.samples.iter_mut().for_each(|z| *z *= amp);
    let rx = ssfm_propagate(
        &tx,
        &link.fiber,
        link.sim_steps_per_span,
        derive_seed(seed, 1),
    )?;
    let eq_len = rx.len() * link.eq_oversampling / link.sim_oversampling;
    let received = resample_fft(&rx, eq_len)?;
    Ok(Burst {
        symbols,
        received,
        launch_power_dbm,
    })
}

/// Receiver-side compensation applied before the matched filter.
#[derive(Clone, Debug)]
pub enum Equalizer {
    /// Ideal single-filter dispersion compensation.
    Linear,
    /// Frequency-domain backpropagation with the given steps per span.
    DbpFft { steps_per_span: usize },
    /// Time-domain filter chain.
    Filters(FilterBank),
}

/// Equalized, matched-filtered payload symbols of `burst`.
pub fn recover(link: &LinkConfig, burst: &Burst, eq: &Equalizer) -> Result<Vec<Complex64>> {
    let out = match eq {
        Equalizer::Linear => cd_compensate(&burst.received, &link.fiber)?,
        Equalizer::DbpFft { steps_per_span } => {
            dbp_frequency_domain(&burst.received, &link.fiber, *steps_per_span)?
        }
        Equalizer::Filters(bank) => super::chain::ldbp_apply(&burst.received, bank)?,
    };
    matched_filter(&out, &link.pulse, burst.symbols.len())
}

/// Effective SNR over all bursts' symbols pooled.
pub fn pooled_effective_snr_db(link: &LinkConfig, bursts: &[Burst], eq: &Equalizer) -> Result<f64> {
    let mut rec = Vec::new();
    let mut sent = Vec::new();
    for b in bursts {
        rec.extend(recover(link, b, eq)?);
        sent.extend_from_slice(&b.symbols);
    }
    effective_snr_db(&rec, &sent)
}

/// Gain-normalized symbol MSE of a filter bank as a function of its free
/// taps, averaged over bursts.
pub struct LdbpObjective<'a> {
    pub link: &'a LinkConfig,
    pub bursts: &'a [Burst],
    pub template: FilterBank,
}

impl LdbpObjective<'_> {
    fn bank(&self, params: &[f64]) -> Result<FilterBank> {
        let mut bank = self.template.clone();
        bank.set_params(params)?;
        Ok(bank)
    }

    fn burst_loss(
        &self,
        bank: &FilterBank,
        burst: &Burst,
        with_grad: bool,
    ) -> Result<(f64, Option<GradientVector>)> {
        let sps = integer_sps(&burst.received)?;
        let h = matched_taps(&self.link.pulse, sps);
        let mut tape = LdbpTape::default();
        let out = ldbp_forward(
            &burst.received.samples,
            bank,
            with_grad.then_some(&mut tape),
        );
        let filtered = convolve_real_same(&out, &h);
        let rec = sample_symbols(&filtered, &self.link.pulse, sps, burst.symbols.len())?;
        let (loss, adj) = normalized_mse(&rec, &burst.symbols)?;
        if !with_grad {
            return Ok((loss, None));
        }
        let mut g_filtered = vec![Complex64::new(0.0, 0.0); filtered.len()];
        let start = self.link.pulse.guard_symbols * sps;
        for (k, a) in adj.iter().enumerate() {
            g_filtered[start + k * sps] = *a;
        }
        // the matched filter is real and symmetric, so its adjoint is itself
        let g_out = convolve_real_same(&g_filtered, &h);
        let (grad, _) = ldbp_backward(bank, &tape, &g_out)?;
        Ok((loss, Some(grad)))
    }
}

impl Differentiable for LdbpObjective<'_> {
    fn num_params(&self) -> usize {
        self.template.num_params()
    }

    fn value(&self, params: &[f64]) -> Result<f64> {
        let bank = self.bank(params)?;
        let mut sum = 0.0;
        for b in self.bursts {
            sum += self.burst_loss(&bank, b, false)?.0;
        }
        Ok(sum / self.bursts.len() as f64)
    }

    fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, GradientVector)> {
        let bank = self.bank(params)?;
        let mut sum = 0.0;
        let mut grad = vec![0.0; self.num_params()];
        for b in self.bursts {
            let (l, g) = self.burst_loss(&bank, b, true)?;
            sum += l;
            for (a, x) in grad.iter_mut().zip(g.expect("gradient requested").values()) {
                *a += x;
            }
        }
        let scale = 1.0 / self.bursts.len() as f64;
        Ok((
            sum * scale,
            GradientVector::new(grad.iter().map(|g| g * scale).collect())?,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdbpTrainConfig {
    pub optimizer: OptimizerConfig,
    /// Optimizer steps; each uses one burst.
    pub iterations: usize,
    /// Bursts simulated for the run and cycled through in order.
    pub bursts: usize,
    /// Global-norm gradient clip; `None` disables it.
    pub grad_clip: Option<f64>,
    pub seed: u64,
}

impl Default for LdbpTrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig {
                learning_rate: 1e-3,
                ..OptimizerConfig::default()
            },
            iterations: 1000,
            bursts: 4,
            grad_clip: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LdbpTrainOutcome {
    pub bank: FilterBank,
    /// `(iteration, loss)` before each step.
    pub log: Vec<(usize, f64)>,
}

/// Bursts used for training at `launch_power_dbm`.
pub fn training_bursts(
    link: &LinkConfig,
    launch_power_dbm: f64,
    cfg: &LdbpTrainConfig,
) -> Result<Vec<Burst>> {
    (0..cfg.bursts as u64)
        .map(|i| simulate_burst(link, launch_power_dbm, derive_seed(cfg.seed, i)))
        .collect()
}

/// Jointly optimizes every filter of `bank_init` on `bursts`.
pub fn train_ldbp_on(
    link: &LinkConfig,
    bursts: &[Burst],
    bank_init: &FilterBank,
    cfg: &LdbpTrainConfig,
) -> Result<LdbpTrainOutcome> {
    cfg.optimizer.validate()?;
    bank_init.validate()?;
    if bursts.is_empty() && cfg.iterations > 0 {
        return Err(Error::InvalidArgument("no training bursts".into()));
    }
    let mut params = bank_init.to_params();
    let mut state = OptimizerState::new(params.len());
    let mut log = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let burst = std::slice::from_ref(&bursts[it % bursts.len()]);
        let obj = LdbpObjective {
            link,
            bursts: burst,
            template: bank_init.clone(),
        };
        let (loss, grad) = obj.value_and_gradient(&params)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch: 0,
                minibatch: it,
                loss,
            });
        }
        log.push((it, loss));
        let grad = match cfg.grad_clip {
            Some(c) => clip_gradient(&grad, c, ClipMode::GlobalNorm)?,
            None => grad,
        };
        optimizer_step(&mut params, &grad, &cfg.optimizer, &mut state)?;
    }
    let mut bank = bank_init.clone();
    bank.set_params(&params)?;
    bank.normalize_last_step(link.band_fraction());
    bank.validate()?;
    let (lo, hi) = bank.band_gain_range_db(link.band_fraction());
    log::info!("trained filters: in-band gain within [{lo:.2}, {hi:.2}] dB");
    Ok(LdbpTrainOutcome { bank, log })
}

/// Simulates `cfg.bursts` bursts at `launch_power_dbm` and trains on them.
pub fn train_ldbp(
    link: &LinkConfig,
    launch_power_dbm: f64,
    bank_init: &FilterBank,
    cfg: &LdbpTrainConfig,
) -> Result<LdbpTrainOutcome> {
    if cfg.iterations == 0 {
        return Ok(LdbpTrainOutcome {
            bank: bank_init.clone(),
            log: Vec::new(),
        });
    }
    let bursts = training_bursts(link, launch_power_dbm, cfg)?;
    train_ldbp_on(link, &bursts, bank_init, cfg)
}
