//! Exact Shapley values by full coalition enumeration, with the
//! weight-times-contribution products on the approximate multiplier.
//!
//! For a model output `f` and an input `x` with baseline `x'`, feature
//! `i`'s Shapley value is the coalition sum
//! `phi_i = sum over S not containing i of |S|!(n-|S|-1)!/n! * (f(S+i) - f(S))`,
//! where `f(S)` evaluates the model on an input that takes coalition
//! members from `x` and everything else from the baseline. Enumeration is
//! exact with a hard cap of [`MAX_FEATURES`] features; there is no
//! sampling estimator.
//!
//! Model forwards stay in double precision and are the parallel part:
//! coalition values are independent, so bitmask ranges are split across
//! workers. Only the weight-times-contribution product runs on the
//! approximate multiplier, and that reduction is sequential in ascending
//! bitmask order, which makes results bit-identical for every worker
//! count. Two reference routes back the accelerated path: the same
//! coalition formula in pure double precision ([`shapley_oracle`]) and the
//! definitional average over feature orderings ([`permutation_average`]).
//!
//! A "feature" here is one model input scalar. Coarser features (patches
//! of an image, say) are expressed by [`shapley_grouped`], which toggles
//! whole index groups together; the groups must partition the input.

use crate::apxnum::{approx_multiply, ApproxLevel, ApproxValue, EnergyLedger};
use crate::parexec::partition;
use crate::tinymodel::TinyModel;
use crate::{Error, Result};

/// Hard cap on exactly enumerated features: `2^n * n` coalition terms.
pub const MAX_FEATURES: usize = 12;

/// Cap for the factorial-cost permutation oracle (`8! = 40320` orderings,
/// each re-evaluating the model from scratch).
pub const MAX_ORACLE_FEATURES: usize = 8;

/// Settings for one Shapley run.
#[derive(Clone, Debug)]
pub struct ShapleyConfig {
    /// Number of features to attribute, `1..=12`.
    pub n_features: usize,
    /// Which model output to explain.
    pub class_index: usize,
    /// Approximation level of the weight-times-contribution products.
    pub level: ApproxLevel,
    /// Worker count for the coalition forwards.
    pub workers: usize,
    /// Reference input supplying values for absent features.
    pub baseline: Vec<f64>,
}

/// Attribution vector and its efficiency diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyResult {
    /// One Shapley value per feature.
    pub values: Vec<f64>,
    /// `|sum(values) - (f(x) - f(x'))|` for the explained class.
    pub efficiency_gap: f64,
}

/// `0..=12` factorials; all fit easily in 64 bits.
fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// The coalition weight `|S|! (n - |S| - 1)! / n!` for a coalition of
/// size `s_size` out of `n` features.
///
/// Both factorial products are formed exactly in integers (`12!` is far
/// below 2^53, so even the conversion is exact) and divided once in
/// double, so the result is the correctly rounded weight.
pub fn shapley_weight(s_size: usize, n: usize) -> Result<f64> {
    if n == 0 || n > MAX_FEATURES {
        return Err(Error::InvalidArgument(format!(
            "feature count must be in 1..={MAX_FEATURES}, got {n}"
        )));
    }
    if s_size >= n {
        return Err(Error::InvalidArgument(format!(
            "coalition size {s_size} must be below the feature count {n}"
        )));
    }
    let num = factorial(s_size) * factorial(n - 1 - s_size);
    Ok(num as f64 / factorial(n) as f64)
}

/// An input that takes group members of `mask` from `x` and everything
/// else from the baseline.
fn masked_input(x: &[f64], baseline: &[f64], groups: &[Vec<usize>], mask: u32) -> Vec<f64> {
    let mut out = baseline.to_vec();
    for (g, members) in groups.iter().enumerate() {
        if mask & (1 << g) != 0 {
            for &j in members {
                out[j] = x[j];
            }
        }
    }
    out
}

/// What adding lone feature `feature` to coalition `subset` (a bitmask
/// over scalar features) does to the explained output: `f(S+i) - f(S)`.
///
/// Both coalition inputs are built per the masking rule above and pushed
/// through the model in double precision.
pub fn marginal_contribution(
    m: &TinyModel,
    x: &[f64],
    baseline: &[f64],
    subset: u32,
    feature: usize,
    class_index: usize,
) -> Result<f64> {
    let n = x.len();
    check_explained_input(m, x, baseline, class_index)?;
    if n > MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            features: n,
            max: MAX_FEATURES,
        });
    }
    if feature >= n {
        return Err(Error::IndexOutOfBounds {
            index: feature,
            len: n,
        });
    }
    if n < 32 && subset >> n != 0 {
        return Err(Error::InvalidArgument(format!(
            "coalition mask {subset:#b} has bits beyond the {n} features"
        )));
    }
    if subset & (1 << feature) != 0 {
        return Err(Error::FeatureInSubset(feature));
    }
    let groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let with = m.forward(&masked_input(x, baseline, &groups, subset | (1 << feature)))?;
    let without = m.forward(&masked_input(x, baseline, &groups, subset))?;
    Ok(with[class_index] - without[class_index])
}

/// Shared validation for every attribution entry point.
fn check_explained_input(
    m: &TinyModel,
    x: &[f64],
    baseline: &[f64],
    class_index: usize,
) -> Result<()> {
    if x.len() != m.input_len() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} scalars but the model takes {}",
            x.len(),
            m.input_len()
        )));
    }
    if baseline.len() != x.len() {
        return Err(Error::LengthMismatch {
            what: "input vs baseline",
            left: x.len(),
            right: baseline.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("attribution input"));
    }
    if baseline.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("attribution baseline"));
    }
    if class_index >= m.output_dim() {
        return Err(Error::ClassIndex {
            class: class_index,
            outputs: m.output_dim(),
        });
    }
    Ok(())
}

/// Validates `groups` as a partition of the model's input indices and the
/// config against it.
fn check_groups(m: &TinyModel, cfg: &ShapleyConfig, groups: &[Vec<usize>]) -> Result<()> {
    if cfg.n_features == 0 {
        return Err(Error::InvalidArgument(
            "attribution needs at least 1 feature".into(),
        ));
    }
    if cfg.n_features > MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            features: cfg.n_features,
            max: MAX_FEATURES,
        });
    }
    if cfg.workers == 0 {
        return Err(Error::InvalidArgument(
            "worker count must be at least 1".into(),
        ));
    }
    if groups.len() != cfg.n_features {
        return Err(Error::LengthMismatch {
            what: "feature groups vs n_features",
            left: groups.len(),
            right: cfg.n_features,
        });
    }
    let d = m.input_len();
    let mut seen = vec![false; d];
    for (g, members) in groups.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::EmptyInput("feature group"));
        }
        for &j in members {
            if j >= d {
                return Err(Error::IndexOutOfBounds { index: j, len: d });
            }
            if seen[j] {
                return Err(Error::InvalidArgument(format!(
                    "input index {j} appears in more than one feature group"
                )));
            }
            seen[j] = true;
        }
        let _ = g;
    }
    if let Some(j) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidArgument(format!(
            "input index {j} belongs to no feature group"
        )));
    }
    Ok(())
}

/// The explained output for every coalition bitmask, `2^n` forwards split
/// across `workers` contiguous mask ranges. Forwards are pure double
/// precision, so the table is bit-identical for every worker count.
fn coalition_values(
    m: &TinyModel,
    x: &[f64],
    cfg: &ShapleyConfig,
    groups: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let total = 1usize << cfg.n_features;
    let ranges = partition(total, cfg.workers);
    let run = |range: std::ops::Range<usize>| -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(range.len());
        for mask in range {
            let input = masked_input(x, &cfg.baseline, groups, mask as u32);
            vals.push(m.forward(&input)?[cfg.class_index]);
        }
        Ok(vals)
    };

    let mut per_worker: Vec<Result<Vec<f64>>> = Vec::with_capacity(ranges.len());
    if ranges.len() == 1 {
        per_worker.push(run(ranges[0].clone()));
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|range| {
                    let range = range.clone();
                    scope.spawn(move || run(range))
                })
                .collect();
            for handle in handles {
                per_worker.push(handle.join().expect("coalition worker panicked"));
            }
        });
    }

    let mut fvals = Vec::with_capacity(total);
    for worker in per_worker {
        fvals.extend(worker?);
    }
    Ok(fvals)
}

/// Core enumeration shared by the accelerated and double-precision paths:
/// `multiply` turns each (weight, contribution) pair into a product.
fn enumerate_values(
    fvals: &[f64],
    n: usize,
    mut multiply: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<ShapleyResult> {
    let mut weights = Vec::with_capacity(n);
    for s in 0..n {
        weights.push(shapley_weight(s, n)?);
    }

    let mut values = vec![0.0f64; n];
    for (i, value) in values.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0..fvals.len() {
            if mask & bit != 0 {
                continue;
            }
            let cb = fvals[mask | bit] - fvals[mask];
            *value += multiply(weights[mask.count_ones() as usize], cb)?;
        }
    }

    let span = fvals[fvals.len() - 1] - fvals[0];
    let efficiency_gap = (values.iter().sum::<f64>() - span).abs();
    Ok(ShapleyResult {
        values,
        efficiency_gap,
    })
}

/// Exact Shapley attribution of `x` with the weight-times-contribution
/// products run at `cfg.level` and charged to `ledger`; each input scalar
/// is its own feature.
///
/// Coalition forwards are split across `cfg.workers`; the weighted
/// reduction is sequential in ascending coalition bitmask, so the result
/// and the energy charge are independent of the worker count. On failure
/// nothing is charged.
pub fn shapley(
    m: &TinyModel,
    x: &[f64],
    cfg: &ShapleyConfig,
    ledger: &mut EnergyLedger,
) -> Result<ShapleyResult> {
    let groups: Vec<Vec<usize>> = (0..m.input_len()).map(|i| vec![i]).collect();
    shapley_grouped(m, x, cfg, &groups, ledger)
}

/// [`shapley`] over coarse features: group `g` toggles every input index
/// in `groups[g]` together. The groups must partition the input indices,
/// so efficiency still compares against `f(x) - f(x')` exactly.
pub fn shapley_grouped(
    m: &TinyModel,
    x: &[f64],
    cfg: &ShapleyConfig,
    groups: &[Vec<usize>],
    ledger: &mut EnergyLedger,
) -> Result<ShapleyResult> {
    check_explained_input(m, x, &cfg.baseline, cfg.class_index)?;
    check_groups(m, cfg, groups)?;
    let fvals = coalition_values(m, x, cfg, groups)?;

    let mut local = EnergyLedger::new();
    let result = enumerate_values(&fvals, cfg.n_features, |w, cb| {
        let p = approx_multiply(
            ApproxValue::from_f64(w),
            ApproxValue::from_f64(cb),
            cfg.level,
            &mut local,
        )?;
        Ok(p.to_f64())
    })?;
    ledger.merge(&local);
    Ok(result)
}

/// The coalition formula in pure double precision: same enumeration, same
/// accumulation order, exact products, no energy. `cfg.level` is ignored.
pub fn shapley_oracle(m: &TinyModel, x: &[f64], cfg: &ShapleyConfig) -> Result<ShapleyResult> {
    let groups: Vec<Vec<usize>> = (0..m.input_len()).map(|i| vec![i]).collect();
    check_explained_input(m, x, &cfg.baseline, cfg.class_index)?;
    check_groups(m, cfg, &groups)?;
    let fvals = coalition_values(m, x, cfg, &groups)?;
    enumerate_values(&fvals, cfg.n_features, |w, cb| Ok(w * cb))
}

/// The definitional route: average each feature's marginal contribution
/// over every one of the `n!` feature orderings, evaluating the model
/// afresh for each coalition step rather than reusing a value table.
///
/// Costs `2 n * n!` forwards, so it is capped at [`MAX_ORACLE_FEATURES`]
/// features. `cfg.level` and `cfg.workers` are ignored: this is a pure
/// double-precision reference.
pub fn permutation_average(m: &TinyModel, x: &[f64], cfg: &ShapleyConfig) -> Result<Vec<f64>> {
    check_explained_input(m, x, &cfg.baseline, cfg.class_index)?;
    let n = cfg.n_features;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "attribution needs at least 1 feature".into(),
        ));
    }
    if n > MAX_ORACLE_FEATURES {
        return Err(Error::TooManyFeatures {
            features: n,
            max: MAX_ORACLE_FEATURES,
        });
    }
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "permutation oracle covers scalar features only: input has {} scalars, config says {n}",
            x.len()
        )));
    }

    let mut sums = vec![0.0f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    walk_orderings(m, x, cfg, &mut order, 0, &mut sums)?;
    let count = factorial(n) as f64;
    Ok(sums.into_iter().map(|s| s / count).collect())
}

/// Recursively visits every ordering of `order[at..]` in lexicographic
/// order, adding each prefix step's marginal contribution to `sums`.
fn walk_orderings(
    m: &TinyModel,
    x: &[f64],
    cfg: &ShapleyConfig,
    order: &mut Vec<usize>,
    at: usize,
    sums: &mut [f64],
) -> Result<()> {
    let n = order.len();
    if at == n {
        let mut mask = 0u32;
        for &i in order.iter() {
            let cb = marginal_contribution(m, x, &cfg.baseline, mask, i, cfg.class_index)?;
            sums[i] += cb;
            mask |= 1 << i;
        }
        return Ok(());
    }
    for pick in at..n {
        order.swap(at, pick);
        walk_orderings(m, x, cfg, order, at + 1, sums)?;
        order.swap(at, pick);
    }
    Ok(())
}
