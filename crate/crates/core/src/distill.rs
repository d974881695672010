//! Kernel distillation by spectral deconvolution, and the occlusion
//! contribution factor built on it.
//!
//! Given an input map `X` and a same-shaped response map `Y`, the
//! distilled kernel is `K = IFFT2(FFT2(Y) / (FFT2(X) + guard))`, where both
//! 2-D transforms run as two row passes of [`op_accel`] (the transpose
//! between passes turns the second row pass into the column pass) and the
//! per-bin division is exact complex double precision. The guard is a
//! Tikhonov-style shift along each bin's own phase, `eps * e^{i arg F_X}`,
//! with `eps` relative to the largest spectral magnitude, so
//! near-singular bins stop exploding without biasing the phase.
//!
//! The contribution of one input feature is measured by occlusion: zero
//! the entry, convolve the perturbed map with the kernel through the same
//! approximate FFT path, and report `C = Y - X' (*) K` (`(*)` is circular
//! convolution, matching FFT semantics) plus its mean magnitude.

use crate::apxfft::LevelSchedule;
use crate::apxnum::EnergyLedger;
use crate::parexec::{op_accel, CxMatrix, RowOp, WorkPlan};
use crate::{Error, Result};
use num_complex::Complex64;

/// Default relative regularization for spectral division.
pub const DEFAULT_EPS_REL: f64 = 1e-6;

/// An input map and its same-shaped response map, both with power-of-two
/// sides.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponsePair {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl ResponsePair {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self> {
        validate_map(&x, "input map")?;
        validate_map(&y, "response map")?;
        if x.len() != y.len() || x[0].len() != y[0].len() {
            return Err(Error::ShapeMismatch(format!(
                "input map is {}x{}, response map is {}x{}",
                x.len(),
                x[0].len(),
                y.len(),
                y[0].len()
            )));
        }
        Ok(ResponsePair { x, y })
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[Vec<f64>] {
        &self.y
    }

    pub fn rows(&self) -> usize {
        self.x.len()
    }

    pub fn cols(&self) -> usize {
        self.x[0].len()
    }
}

fn validate_map(m: &[Vec<f64>], what: &'static str) -> Result<()> {
    if m.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    if !m.len().is_power_of_two() {
        return Err(Error::BadLength { what, len: m.len() });
    }
    let cols = m[0].len();
    if !cols.is_power_of_two() {
        return Err(Error::BadLength { what, len: cols });
    }
    for row in m {
        if row.len() != cols {
            return Err(Error::ShapeMismatch(format!("{what} has ragged rows")));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("map entry"));
        }
    }
    Ok(())
}

/// A kernel recovered by [`distill`], together with the absolute
/// regularization magnitude that was applied during spectral division.
#[derive(Clone, Debug, PartialEq)]
pub struct DistilledKernel {
    pub kernel: Vec<Vec<f64>>,
    pub epsilon: f64,
}

/// Occlusion result: the contribution map `C` and its mean |C| summary.
#[derive(Clone, Debug, PartialEq)]
pub struct ContributionFactor {
    pub map: Vec<Vec<f64>>,
    pub scalar: f64,
}

/// 2-D approximate FFT: two row passes, each transposing, so orientation
/// is restored.
fn fft2(
    m: &CxMatrix,
    sched: &LevelSchedule,
    workers: usize,
    ledger: &mut EnergyLedger,
) -> Result<CxMatrix> {
    let plan = WorkPlan::new(workers, RowOp::Fft(sched.clone()))?;
    let once = op_accel(m, &plan, ledger)?;
    op_accel(&once, &plan, ledger)
}

fn ifft2(
    m: &CxMatrix,
    sched: &LevelSchedule,
    workers: usize,
    ledger: &mut EnergyLedger,
) -> Result<CxMatrix> {
    let plan = WorkPlan::new(workers, RowOp::Ifft(sched.clone()))?;
    let once = op_accel(m, &plan, ledger)?;
    op_accel(&once, &plan, ledger)
}

fn real_rows(m: &CxMatrix) -> Vec<Vec<f64>> {
    m.re_rows()
}

/// Recovers the convolution kernel relating `pair.x` to `pair.y` through
/// the approximate FFT at `sched`, regularizing spectral division with a
/// relative epsilon (`eps_rel` of the largest input-spectrum magnitude;
/// bins whose magnitude is exactly zero are replaced by the epsilon
/// itself).
pub fn distill(
    pair: &ResponsePair,
    sched: &LevelSchedule,
    workers: usize,
    eps_rel: f64,
    ledger: &mut EnergyLedger,
) -> Result<DistilledKernel> {
    if !(eps_rel > 0.0 && eps_rel.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization epsilon must be positive and finite, got {eps_rel}"
        )));
    }
    if pair.x.iter().all(|row| row.iter().all(|&v| v == 0.0)) {
        return Err(Error::DegenerateInput("input map is identically zero"));
    }

    let fx = fft2(&CxMatrix::from_real_rows(&pair.x)?, sched, workers, ledger)?;
    let fy = fft2(&CxMatrix::from_real_rows(&pair.y)?, sched, workers, ledger)?;

    let max_mag = (0..fx.rows())
        .flat_map(|i| fx.row(i).iter().map(|c| c.norm()).collect::<Vec<_>>())
        .fold(0.0f64, f64::max);
    if max_mag == 0.0 {
        return Err(Error::DegenerateInput(
            "input spectrum vanished under quantization",
        ));
    }
    let eps = eps_rel * max_mag;

    let quotient: Vec<Vec<Complex64>> = (0..fx.rows())
        .map(|i| {
            fx.row(i)
                .iter()
                .zip(fy.row(i))
                .map(|(&den, &num)| {
                    let mag = den.norm();
                    let guarded = if mag == 0.0 {
                        Complex64::new(eps, 0.0)
                    } else {
                        // den + eps * e^{i arg den} == den * (1 + eps/|den|)
                        den * (1.0 + eps / mag)
                    };
                    num / guarded
                })
                .collect()
        })
        .collect();

    let k = ifft2(&CxMatrix::from_rows(quotient)?, sched, workers, ledger)?;
    Ok(DistilledKernel {
        kernel: real_rows(&k),
        epsilon: eps,
    })
}

/// Occludes one input entry (flat row-major index), convolves the
/// perturbed map with `kernel` through the approximate FFT, and returns
/// `C = Y - X' (*) K` with its mean-magnitude scalar.
pub fn contribution_factor(
    pair: &ResponsePair,
    kernel: &DistilledKernel,
    occluded_index: usize,
    sched: &LevelSchedule,
    workers: usize,
    ledger: &mut EnergyLedger,
) -> Result<ContributionFactor> {
    let (h, w) = (pair.rows(), pair.cols());
    if occluded_index >= h * w {
        return Err(Error::IndexOutOfBounds {
            index: occluded_index,
            len: h * w,
        });
    }
    if kernel.kernel.len() != h || kernel.kernel[0].len() != w {
        return Err(Error::ShapeMismatch(format!(
            "kernel is {}x{}, maps are {h}x{w}",
            kernel.kernel.len(),
            kernel.kernel[0].len()
        )));
    }

    let mut xp = pair.x.clone();
    xp[occluded_index / w][occluded_index % w] = 0.0;

    let fxp = fft2(&CxMatrix::from_real_rows(&xp)?, sched, workers, ledger)?;
    let fk = fft2(
        &CxMatrix::from_real_rows(&kernel.kernel)?,
        sched,
        workers,
        ledger,
    )?;

    let product: Vec<Vec<Complex64>> = (0..fxp.rows())
        .map(|i| {
            fxp.row(i)
                .iter()
                .zip(fk.row(i))
                .map(|(&a, &b)| a * b)
                .collect()
        })
        .collect();
    let z = ifft2(&CxMatrix::from_rows(product)?, sched, workers, ledger)?;

    let map: Vec<Vec<f64>> = pair
        .y
        .iter()
        .enumerate()
        .map(|(i, yrow)| {
            yrow.iter()
                .zip(z.row(i))
                .map(|(&y, zc)| y - zc.re)
                .collect()
        })
        .collect();
    let scalar = map.iter().flatten().map(|c| c.abs()).sum::<f64>() / (h * w) as f64;
    Ok(ContributionFactor { map, scalar })
}
