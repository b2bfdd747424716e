//! Short FIR approximations of one backpropagation step's inverse
//! dispersion, and the per-step filter bank used by the learned chain.
//!
//! A filter with taps `h[0..n]` (n odd, centre `c = (n - 1) / 2`) has the
//! response `H(t) = sum_k h[k] exp(-j t (k - c))` at normalized frequency
//! `t = w / fs`. The target for a step of length `d` is
//! `D(t) = exp(-j (beta2 / 2) (t fs)^2 d)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{at, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum FirMethod {
    /// Least squares over the signal band.
    Ls,
    /// Least squares over the band with the out-of-band magnitude capped at
    /// `ceiling`.
    LsCo { ceiling: f64 },
    /// Inverse DFT of the target sampled on a `grid`-point grid (the tap
    /// count when `None`), keeping the central taps.
    Fds { grid: Option<usize> },
}

impl FirMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ls => "ls",
            Self::LsCo { .. } => "ls-co",
            Self::Fds { .. } => "fds",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirDesign {
    pub method: FirMethod,
    pub taps: usize,
    /// Edge of the signal band as a fraction of the Nyquist frequency.
    pub band_fraction: f64,
}

impl FirDesign {
    pub fn new(method: FirMethod, taps: usize, band_fraction: f64) -> Self {
        Self {
            method,
            taps,
            band_fraction,
        }
    }
}

/// Single-step inverse-dispersion response at normalized frequency `t`
/// (radians per sample).
pub fn inverse_dispersion_response(
    t: f64,
    step_delta: f64,
    beta2: f64,
    sample_rate: f64,
) -> Complex64 {
    let w = t * sample_rate;
    Complex64::from_polar(1.0, -0.5 * beta2 * w * w * step_delta)
}

/// Frequency response of centered taps at normalized frequency `t`.
pub fn fir_response(taps: &[Complex64], t: f64) -> Complex64 {
    let c = (taps.len() as f64 - 1.0) / 2.0;
    taps.iter()
        .enumerate()
        .map(|(k, &h)| h * Complex64::from_polar(1.0, -t * (k as f64 - c)))
        .sum()
}

/// `int_{-tc}^{tc} exp(j t m) dt`.
fn band_integral(m: i64, tc: f64) -> f64 {
    if m == 0 {
        2.0 * tc
    } else {
        2.0 * (tc * m as f64).sin() / m as f64
    }
}

/// Composite Simpson quadrature of `f` over `[a, b]`.
fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, intervals: usize) -> Complex64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Solves `(Q_in + mu Q_out) h = b` for the band-limited LS problem.
fn ls_solve(n: usize, tc: f64, mu: f64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let q = DMatrix::from_fn(n, n, |k, l| {
        let m = k as i64 - l as i64;
        let inband = band_integral(m, tc);
        let full = if m == 0 {
            2.0 * std::f64::consts::PI
        } else {
            0.0
        };
        inband + mu * (full - inband)
    });
    let svd = q.svd(true, true);
    let tol = 1e-13 * svd.singular_values.max();
    let re = DVector::from_iterator(n, rhs.iter().map(|z| z.re));
    let im = DVector::from_iterator(n, rhs.iter().map(|z| z.im));
    let solve = |b: DVector<f64>| {
        svd.solve(&b, tol)
            .map_err(|e| Error::InvalidArgument(format!("least-squares solve failed: {e}")))
    };
    let (hr, hi) = (solve(re)?, solve(im)?);
    Ok((0..n).map(|k| Complex64::new(hr[k], hi[k])).collect())
}

/// Largest `|H|` outside the band, on a dense grid.
fn max_out_of_band_gain(taps: &[Complex64], tc: f64) -> f64 {
    let points = 2048;
    (0..=points)
        .map(|i| tc + (std::f64::consts::PI - tc) * i as f64 / points as f64)
        .map(|t| {
            fir_response(taps, t)
                .norm()
                .max(fir_response(taps, -t).norm())
        })
        .fold(0.0, f64::max)
}

/// Forces exact `h[k] = h[n - 1 - k]`.
pub fn symmetrize(taps: &mut [Complex64]) {
    let n = taps.len();
    for k in 0..n / 2 {
        let avg = (taps[k] + taps[n - 1 - k]) * 0.5;
        taps[k] = avg;
        taps[n - 1 - k] = avg;
    }
}

/// Designs a filter approximating the inverse dispersion of a step of
/// length `step_delta` (metres).
pub fn design_fir(
    design: &FirDesign,
    step_delta: f64,
    beta2: f64,
    sample_rate: f64,
) -> Result<Vec<Complex64>> {
    let n = design.taps;
    if n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "tap count must be odd, got {n}"
        )));
    }
    if !(design.band_fraction > 0.0 && design.band_fraction <= 1.0) {
        return Err(Error::InvalidArgument(
            "band fraction must lie in (0, 1]".into(),
        ));
    }
    let tc = design.band_fraction * std::f64::consts::PI;
    let d = |t: f64| inverse_dispersion_response(t, step_delta, beta2, sample_rate);
    let c = (n as i64 - 1) / 2;
    let mut taps = match design.method {
        FirMethod::Ls | FirMethod::LsCo { .. } => {
            let rhs: Vec<Complex64> = (0..n as i64)
                .map(|k| {
                    let m = (k - c) as f64;
                    simpson(|t| d(t) * Complex64::from_polar(1.0, t * m), -tc, tc, 4096)
                })
                .collect();
            let plain = ls_solve(n, tc, 0.0, &rhs)?;
            match design.method {
                FirMethod::LsCo { ceiling } => constrained(n, tc, ceiling, &rhs, plain)?,
                _ => plain,
            }
        }
        FirMethod::Fds { grid } => {
            let g = grid.unwrap_or(n);
            if g < n {
                return Err(Error::InvalidArgument(
                    "FDS grid smaller than the tap count".into(),
                ));
            }
            fds_taps(n, g, &d)
        }
    };
    symmetrize(&mut taps);
    Ok(taps)
}

fn constrained(
    n: usize,
    tc: f64,
    ceiling: f64,
    rhs: &[Complex64],
    plain: Vec<Complex64>,
) -> Result<Vec<Complex64>> {
    if !(ceiling > 0.0) {
        return Err(Error::InvalidArgument(
            "out-of-band ceiling must be positive".into(),
        ));
    }
    if max_out_of_band_gain(&plain, tc) <= ceiling {
        return Ok(plain);
    }
    // the out-of-band gain falls as the penalty weight grows
    let (mut lo, mut hi) = (0.0f64, 1e-6f64);
    loop {
        let h = ls_solve(n, tc, hi, rhs)?;
        if max_out_of_band_gain(&h, tc) <= ceiling {
            break;
        }
        lo = hi;
        hi *= 10.0;
        if hi > 1e8 {
            return Err(Error::Infeasible(format!(
                "no {n}-tap filter keeps the out-of-band gain below {ceiling}"
            )));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let h = ls_solve(n, tc, mid, rhs)?;
        if max_out_of_band_gain(&h, tc) <= ceiling {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ls_solve(n, tc, hi, rhs)
}

/// Central `n` taps of the `g`-point inverse DFT of `d` sampled at
/// `t_m = 2 pi m / g`.
fn fds_taps(n: usize, g: usize, d: &impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let mut spec: Vec<Complex64> = (0..g)
        .map(|m| {
            let m = if m < g.div_ceil(2) {
                m as f64
            } else {
                m as f64 - g as f64
            };
            d(2.0 * std::f64::consts::PI * m / g as f64)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(g).process(&mut spec);
    let c = (n - 1) / 2;
    (0..n)
        .map(|k| {
            // tap offset k - c maps to circular index (k - c) mod g
            let idx = (k as isize - c as isize).rem_euclid(g as isize) as usize;
            spec[idx] / g as f64
        })
        .collect()
}

pub const FILTER_BANK_FORMAT: &str = "commlearn-filter-bank";
pub const FILTER_BANK_VERSION: u32 = 1;

/// Per-step FIR filters and the fixed nonlinear phase of each step. Step `i`
/// rotates each sample by `exp(j nl_phase[i] |x|^2)` and then filters.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    pub taps: Vec<Vec<Complex64>>,
    pub symmetric: bool,
    pub nl_phase: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterBankFile {
    format: String,
    version: u32,
    steps: usize,
    taps_per_step: usize,
    symmetric: bool,
    nl_phase: Vec<f64>,
    /// `taps[step][k] = [re, im]`
    taps: Vec<Vec<[f64; 2]>>,
}

impl FilterBank {
    /// Same taps in every step.
    pub fn repeated(taps: Vec<Complex64>, nl_phase: Vec<f64>, symmetric: bool) -> Result<Self> {
        let bank = Self {
            taps: vec![taps; nl_phase.len()],
            symmetric,
            nl_phase,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn steps(&self) -> usize {
        self.taps.len()
    }

    pub fn taps_per_step(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn total_taps(&self) -> usize {
        self.taps.iter().map(Vec::len).sum()
    }

    /// Rescales the last filter to unit mean in-band power gain. The last
    /// filter acts after the final nonlinearity, so under a gain-normalized
    /// loss its scale is free and only this rescaling pins it down.
    pub fn normalize_last_step(&mut self, band_fraction: f64) {
        let tc = band_fraction.clamp(0.0, 1.0) * std::f64::consts::PI;
        let points = 512;
        let Some(last) = self.taps.last_mut() else {
            return;
        };
        let mean = (0..=points)
            .map(|i| fir_response(last, -tc + 2.0 * tc * i as f64 / points as f64).norm_sqr())
            .sum::<f64>()
            / (points + 1) as f64;
        if mean > 0.0 && mean.is_finite() {
            let s = mean.sqrt().recip();
            last.iter_mut().for_each(|z| *z *= s);
        }
    }

    /// Smallest and largest in-band power gain of any step, in dB.
    pub fn band_gain_range_db(&self, band_fraction: f64) -> (f64, f64) {
        let tc = band_fraction.clamp(0.0, 1.0) * std::f64::consts::PI;
        let points = 512;
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);
        for taps in &self.taps {
            for i in 0..=points {
                let t = -tc + 2.0 * tc * i as f64 / points as f64;
                let g = 10.0 * fir_response(taps, t).norm_sqr().log10();
                range = (range.0.min(g), range.1.max(g));
            }
        }
        range
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.taps_per_step();
        if self.taps.is_empty() || n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "filter bank needs steps with odd tap counts".into(),
            ));
        }
        if self.taps.iter().any(|t| t.len() != n) || self.nl_phase.len() != self.taps.len() {
            return Err(Error::ShapeMismatch("filter bank arrays disagree".into()));
        }
        let finite = self
            .taps
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite || self.nl_phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("filter bank".into()));
        }
        if self.symmetric {
            for t in &self.taps {
                if (0..n).any(|k| t[k] != t[n - 1 - k]) {
                    return Err(Error::InvalidArgument("taps are not symmetric".into()));
                }
            }
        }
        Ok(())
    }

    /// Independent taps per step: the first `(n + 1) / 2` when symmetric.
    pub fn free_taps_per_step(&self) -> usize {
        let n = self.taps_per_step();
        if self.symmetric {
            n.div_ceil(2)
        } else {
            n
        }
    }

    /// Number of real trainable parameters.
    pub fn num_params(&self) -> usize {
        2 * self.steps() * self.free_taps_per_step()
    }

    /// Free taps as interleaved `(re, im)` pairs, step-major.
    pub fn to_params(&self) -> Vec<f64> {
        let f = self.free_taps_per_step();
        self.taps
            .iter()
            .flat_map(|t| t[..f].iter().flat_map(|z| [z.re, z.im]))
            .collect()
    }

    /// Inverse of [`FilterBank::to_params`]; mirrors symmetric taps.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} filter parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let n = self.taps_per_step();
        let f = self.free_taps_per_step();
        let symmetric = self.symmetric;
        for (t, chunk) in self.taps.iter_mut().zip(params.chunks(2 * f)) {
            for k in 0..f {
                let z = Complex64::new(chunk[2 * k], chunk[2 * k + 1]);
                t[k] = z;
                if symmetric {
                    t[n - 1 - k] = z;
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        let file = FilterBankFile {
            format: FILTER_BANK_FORMAT.into(),
            version: FILTER_BANK_VERSION,
            steps: self.steps(),
            taps_per_step: self.taps_per_step(),
            symmetric: self.symmetric,
            nl_phase: self.nl_phase.clone(),
            taps: self
                .taps
                .iter()
                .map(|t| t.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: FilterBankFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.format != FILTER_BANK_FORMAT || file.version != FILTER_BANK_VERSION {
            return Err(Error::Parse(format!(
                "unsupported filter bank {} v{}",
                file.format, file.version
            )));
        }
        let bank = Self {
            taps: file
                .taps
                .iter()
                .map(|t| t.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect(),
            symmetric: file.symmetric,
            nl_phase: file.nl_phase,
        };
        if bank.steps() != file.steps || bank.taps_per_step() != file.taps_per_step {
            return Err(Error::Parse(
                "declared shape does not match the tap arrays".into(),
            ));
        }
        bank.validate()?;
        Ok(bank)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_toml()?).map_err(at(path.as_ref()))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path.as_ref()).map_err(at(path.as_ref()))?)
    }
}
