//! Central finite differences against analytic gradients.

use super::GradientVector;
use crate::error::Result;

/// A scalar function of a flat parameter vector with an analytic gradient.
pub trait Differentiable {
    fn num_params(&self) -> usize;

    fn value(&self, params: &[f64]) -> Result<f64>;

    fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, GradientVector)>;

    /// Activity pattern of every clip in the forward pass. A parameter whose
    /// perturbation changes this pattern sits on a kink and is not compared.
    fn clip_pattern(&self, _params: &[f64]) -> Result<Vec<bool>> {
        Ok(Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub max_relative_error: f64,
    /// Index attaining the maximum, if any parameter was compared.
    pub worst_index: Option<usize>,
    pub checked: Vec<usize>,
    /// Parameters skipped because a perturbation toggled a clip.
    pub excluded: Vec<usize>,
}

impl FdReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error <= tolerance
    }
}

/// Compares `f`'s gradient with central differences at the `probe` indices
/// (all parameters when `None`). The step for parameter `i` is
/// `step * max(1, |theta_i|)`; relative error is
/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn finite_diff_check(
    f: &impl Differentiable,
    params: &[f64],
    step: f64,
    probe: Option<&[usize]>,
) -> Result<FdReport> {
    let (_, grad) = f.value_and_gradient(params)?;
    let base_pattern = f.clip_pattern(params)?;
    let all: Vec<usize>;
    let indices = match probe {
        Some(ix) => ix,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    let mut report = FdReport {
        max_relative_error: 0.0,
        worst_index: None,
        checked: Vec::new(),
        excluded: Vec::new(),
    };
    let mut theta = params.to_vec();
    for &i in indices {
        let h = step * params[i].abs().max(1.0);
        theta[i] = params[i] + h;
        let plus_pattern = f.clip_pattern(&theta)?;
        let plus = f.value(&theta)?;
        theta[i] = params[i] - h;
        let minus_pattern = f.clip_pattern(&theta)?;
        let minus = f.value(&theta)?;
        theta[i] = params[i];
        if plus_pattern != base_pattern || minus_pattern != base_pattern {
            report.excluded.push(i);
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        let analytic = grad.values()[i];
        let denom = numeric.abs().max(analytic.abs()).max(1e-8);
        let err = (numeric - analytic).abs() / denom;
        if report.worst_index.is_none() || err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_index = Some(i);
        }
        report.checked.push(i);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Square;

    impl Differentiable for Square {
        fn num_params(&self) -> usize {
            1
        }
        fn value(&self, p: &[f64]) -> Result<f64> {
            Ok(p[0] * p[0])
        }
        fn value_and_gradient(&self, p: &[f64]) -> Result<(f64, GradientVector)> {
            Ok((p[0] * p[0], GradientVector::new(vec![2.0 * p[0]])?))
        }
    }

    struct Clipped;

    impl Differentiable for Clipped {
        fn num_params(&self) -> usize {
            1
        }
        fn value(&self, p: &[f64]) -> Result<f64> {
            Ok(p[0].clamp(-1.0, 1.0))
        }
        fn value_and_gradient(&self, p: &[f64]) -> Result<(f64, GradientVector)> {
            let g = if p[0].abs() < 1.0 { 1.0 } else { 0.0 };
            Ok((self.value(p)?, GradientVector::new(vec![g])?))
        }
        fn clip_pattern(&self, p: &[f64]) -> Result<Vec<bool>> {
            Ok(vec![p[0].abs() >= 1.0])
        }
    }

    #[test]
    fn quadratic_matches() {
        let r = finite_diff_check(&Square, &[2.0], 1e-5, None).unwrap();
        assert!(r.max_relative_error < 1e-9, "{r:?}");
        assert_eq!(r.checked, vec![0]);
    }

    #[test]
    fn clip_boundary_is_excluded() {
        let r = finite_diff_check(&Clipped, &[1.0], 1e-5, None).unwrap();
        assert_eq!(r.excluded, vec![0]);
        assert!(r.checked.is_empty());
    }
}
