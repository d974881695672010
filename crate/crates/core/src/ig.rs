//! Integrated gradients with a polynomial-fitted integrand and an
//! energy-ledgered approximate matvec.
//!
//! The pipeline samples analytic input gradients at `n` uniform points
//! along the straight line from a baseline to the input, fits each
//! feature's gradient samples with a degree-`n-1` polynomial through a
//! Vandermonde solve, integrates the fit with the composite trapezoidal
//! rule over `t` sub-intervals, and scales by the input-baseline
//! difference. The Vandermonde inverse is computed exactly in double
//! precision; only the inverse-times-samples matvec runs on the
//! approximate multiplier, with feature columns distributed across workers
//! by [`op_accel`]. A dense trapezoidal oracle over raw gradients
//! ([`ig_oracle`]) provides the unaccelerated reference.

use crate::apxnum::{ApproxLevel, EnergyLedger};
use crate::parexec::{op_accel, CxMatrix, RowOp, WorkPlan};
use crate::tinymodel::TinyModel;
use crate::{Error, Result};

/// Upper bound on interpolation nodes: the uniform-node monomial
/// Vandermonde becomes numerically useless much past this.
pub const MAX_NODES: usize = 12;

/// Sample count for [`ig_oracle`] matching its documented default.
pub const ORACLE_STEPS: usize = 2048;

/// Settings for one attribution run.
#[derive(Clone, Copy, Debug)]
pub struct IGConfig {
    /// Interpolation nodes along the path, `2..=12`.
    pub n: usize,
    /// Trapezoid sub-intervals for integrating the fit, at least 1.
    pub t: usize,
    /// Which model output to explain.
    pub class_index: usize,
    /// Approximation level of the coefficient matvec.
    pub level: ApproxLevel,
    /// Worker count for the distributed matvec.
    pub workers: usize,
}

impl IGConfig {
    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_NODES {
            return Err(Error::InvalidArgument(format!(
                "interpolation nodes must be in 2..={MAX_NODES}, got {}",
                self.n
            )));
        }
        if self.t == 0 {
            return Err(Error::InvalidArgument(
                "integration needs at least 1 sub-interval".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument(
                "worker count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Gradient samples along the interpolation path.
#[derive(Clone, Debug)]
pub struct PathSamples {
    /// `alpha_i = i/(n-1)`: 0 and 1 included, strictly increasing.
    pub alphas: Vec<f64>,
    /// Interpolated inputs `x' + alpha_i * delta`, one row per node.
    pub inputs: Vec<Vec<f64>>,
    /// `n x d`: analytic gradient of the explained output at each node.
    pub grads: Vec<Vec<f64>>,
    /// `x - x'`.
    pub delta: Vec<f64>,
}

/// A per-feature polynomial fit of the gradient samples.
#[derive(Clone, Debug)]
pub struct PolyFit {
    /// Vandermonde matrix `v[i][j] = alpha_i^j`.
    pub v: Vec<Vec<f64>>,
    /// `n x d` coefficients, ascending degree down the rows; column `j`
    /// is feature `j`'s polynomial.
    pub coeffs: Vec<Vec<f64>>,
}

/// Final attribution vector and its completeness diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    /// One attribution per input feature.
    pub values: Vec<f64>,
    /// `|sum(values) - (f(x) - f(x'))|` for the explained class.
    pub completeness_gap: f64,
}

/// Samples analytic gradients at `cfg.n` uniform points on the straight
/// line from `baseline` to `x`.
pub fn sample_path(
    m: &TinyModel,
    x: &[f64],
    baseline: &[f64],
    cfg: &IGConfig,
) -> Result<PathSamples> {
    cfg.validate()?;
    if x.len() != baseline.len() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} features, baseline {}",
            x.len(),
            baseline.len()
        )));
    }
    let delta: Vec<f64> = x.iter().zip(baseline).map(|(a, b)| a - b).collect();
    let mut alphas = Vec::with_capacity(cfg.n);
    let mut inputs = Vec::with_capacity(cfg.n);
    let mut grads = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let alpha = i as f64 / (cfg.n - 1) as f64;
        let point: Vec<f64> = baseline
            .iter()
            .zip(&delta)
            .map(|(b, d)| b + alpha * d)
            .collect();
        grads.push(m.input_gradient(&point, cfg.class_index)?);
        alphas.push(alpha);
        inputs.push(point);
    }
    Ok(PathSamples {
        alphas,
        inputs,
        grads,
        delta,
    })
}

/// Builds the monomial Vandermonde matrix `V[i][j] = alpha_i^j` in exact
/// double precision. Nodes must be pairwise distinct.
pub fn compute_vandermonde(alphas: &[f64]) -> Result<Vec<Vec<f64>>> {
    if alphas.is_empty() {
        return Err(Error::EmptyInput("interpolation nodes"));
    }
    for i in 0..alphas.len() {
        for j in i + 1..alphas.len() {
            if alphas[i] == alphas[j] {
                return Err(Error::DuplicateNodes { left: i, right: j });
            }
        }
    }
    Ok(alphas
        .iter()
        .map(|&a| {
            let mut row = Vec::with_capacity(alphas.len());
            let mut p = 1.0;
            for _ in 0..alphas.len() {
                row.push(p);
                p *= a;
            }
            row
        })
        .collect())
}

/// Inverts a square matrix by Gaussian elimination with partial pivoting,
/// all in double precision. Pivots below 1e-12 are treated as singular.
fn invert(v: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = v.len();
    // Augmented [V | I].
    let mut a: Vec<Vec<f64>> = v
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            r
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .expect("non-empty column");
        let pivot = a[pivot_row][col];
        if pivot.abs() < 1e-12 {
            return Err(Error::SingularMatrix {
                pivot: pivot.abs(),
                column: col,
            });
        }
        a.swap(col, pivot_row);
        for i in 0..n {
            if i == col {
                continue;
            }
            let factor = a[i][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..2 * n {
                let sub = factor * a[col][j];
                a[i][j] -= sub;
            }
        }
    }
    Ok(a.iter()
        .enumerate()
        .map(|(i, row)| {
            let pivot = row[i];
            row[n..].iter().map(|&x| x / pivot).collect()
        })
        .collect())
}

/// Fits per-feature polynomials: inverts `v` exactly, then multiplies the
/// inverse into each feature's gradient column on the approximate
/// multiplier at `cfg.level`, columns distributed across `cfg.workers`.
pub fn compute_pol(
    v: &[Vec<f64>],
    grads: &[Vec<f64>],
    cfg: &IGConfig,
    ledger: &mut EnergyLedger,
) -> Result<PolyFit> {
    cfg.validate()?;
    let n = v.len();
    if n == 0 || v.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(
            "Vandermonde matrix must be square and non-empty".into(),
        ));
    }
    if grads.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} gradient rows for {n} interpolation nodes",
            grads.len()
        )));
    }
    let d = grads[0].len();
    if d == 0 || grads.iter().any(|row| row.len() != d) {
        return Err(Error::ShapeMismatch(
            "gradient rows must be non-empty and equal length".into(),
        ));
    }

    let v_inv = invert(v)?;

    // One parexec row per feature column; op_accel's final transpose
    // returns coefficients in (degree, feature) orientation directly.
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| grads.iter().map(|row| row[j]).collect())
        .collect();
    let plan = WorkPlan::new(
        cfg.workers,
        RowOp::Poly {
            matrix: v_inv,
            level: cfg.level,
        },
    )?;
    let out = op_accel(&CxMatrix::from_real_rows(&columns)?, &plan, ledger)?;
    Ok(PolyFit {
        v: v.to_vec(),
        coeffs: out.re_rows(),
    })
}

/// Evaluates `coeffs` (ascending degree) at `alpha` by Horner's rule.
fn eval_poly(coeffs: &[Vec<f64>], feature: usize, alpha: f64) -> f64 {
    coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, row| acc * alpha + row[feature])
}

/// Composite trapezoidal integral of each fitted polynomial over [0, 1]
/// with `cfg.t` sub-intervals; polynomial evaluation is exact double
/// precision.
pub fn integrate(fit: &PolyFit, cfg: &IGConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = fit.coeffs.first().map_or(0, Vec::len);
    let t = cfg.t;
    Ok((0..d)
        .map(|j| {
            (1..=t)
                .map(|k| {
                    let lo = eval_poly(&fit.coeffs, j, (k - 1) as f64 / t as f64);
                    let hi = eval_poly(&fit.coeffs, j, k as f64 / t as f64);
                    (lo + hi) / (2 * t) as f64
                })
                .sum()
        })
        .collect())
}

/// End-to-end accelerated attribution: sample, fit, integrate, scale by
/// the input-baseline difference, and report the completeness gap.
pub fn attribute(
    m: &TinyModel,
    x: &[f64],
    baseline: &[f64],
    cfg: &IGConfig,
    ledger: &mut EnergyLedger,
) -> Result<Attribution> {
    let samples = sample_path(m, x, baseline, cfg)?;
    let v = compute_vandermonde(&samples.alphas)?;
    let fit = compute_pol(&v, &samples.grads, cfg, ledger)?;
    let integrals = integrate(&fit, cfg)?;
    let values: Vec<f64> = integrals
        .iter()
        .zip(&samples.delta)
        .map(|(g, d)| g * d)
        .collect();
    finish(m, x, baseline, cfg.class_index, values)
}

/// Dense double-precision reference: trapezoidal sum of raw analytic
/// gradients over `steps` intervals, no fitting, no approximation.
pub fn ig_oracle(
    m: &TinyModel,
    x: &[f64],
    baseline: &[f64],
    class_index: usize,
    steps: usize,
) -> Result<Attribution> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "oracle needs at least 1 integration step".into(),
        ));
    }
    if x.len() != baseline.len() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} features, baseline {}",
            x.len(),
            baseline.len()
        )));
    }
    let d = x.len();
    let delta: Vec<f64> = x.iter().zip(baseline).map(|(a, b)| a - b).collect();
    let mut sums = vec![0.0f64; d];
    let mut prev = m.input_gradient(baseline, class_index)?;
    for k in 1..=steps {
        let alpha = k as f64 / steps as f64;
        let point: Vec<f64> = baseline
            .iter()
            .zip(&delta)
            .map(|(b, dv)| b + alpha * dv)
            .collect();
        let grad = m.input_gradient(&point, class_index)?;
        for j in 0..d {
            sums[j] += (prev[j] + grad[j]) / (2 * steps) as f64;
        }
        prev = grad;
    }
    let values: Vec<f64> = sums.iter().zip(&delta).map(|(g, dv)| g * dv).collect();
    finish(m, x, baseline, class_index, values)
}

fn finish(
    m: &TinyModel,
    x: &[f64],
    baseline: &[f64],
    class_index: usize,
    values: Vec<f64>,
) -> Result<Attribution> {
    let fx = m.forward(x)?[class_index];
    let fb = m.forward(baseline)?[class_index];
    let completeness_gap = (values.iter().sum::<f64>() - (fx - fb)).abs();
    Ok(Attribution {
        values,
        completeness_gap,
    })
}
