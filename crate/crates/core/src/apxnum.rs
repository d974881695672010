//! Configurable approximate bfloat16 multiplier with energy accounting.
//!
//! Values are bfloat16: 1 sign bit, 8 exponent bits (bias 127), 7 mantissa
//! bits. Multiplication models a truncated hardware multiplier with twelve
//! accuracy levels. At level `k` the 16-bit product of the two 8-bit
//! significands (implicit leading one included) has its lowest `11 - k` bits
//! dropped and replaced by the constant `(2^(11-k) - 1) / 2`, the expected
//! value of the discarded part. Level 11 drops nothing and is exact; level 0
//! drops eleven bits and is the cheapest. The compensated product is then
//! rounded to nearest (ties to even) back into bfloat16.
//!
//! Every multiply is charged to an [`EnergyLedger`] at the level it ran.
//! Ledgers store only per-level counts, so totals are exact integers scaled
//! by the [`EnergyTable`] costs and independent of merge order.
//!
//! Additions are always exact to bfloat16 precision: the truncation scheme
//! applies to multiplier partial products only.

use crate::{Error, Result};

/// Number of supported approximation levels (`0..=11`).
pub const LEVEL_COUNT: usize = 12;

const SIGN_MASK: u16 = 0x8000;
const EXP_MASK: u16 = 0x7F80;
const MAN_MASK: u16 = 0x007F;

/// A bfloat16 value stored as its raw bit pattern.
///
/// Equality and hashing are bitwise, which is what the reproducibility tests
/// need: `-0.0 != +0.0` and `NAN == NAN` here, unlike IEEE comparison on the
/// decoded floats.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default)]
pub struct ApproxValue(u16);

impl ApproxValue {
    pub const ZERO: ApproxValue = ApproxValue(0x0000);
    pub const ONE: ApproxValue = ApproxValue(0x3F80);
    pub const INFINITY: ApproxValue = ApproxValue(0x7F80);
    pub const NAN: ApproxValue = ApproxValue(0x7FC0);
    /// Largest finite value, `(2 - 2^-7) * 2^127`.
    pub const MAX: ApproxValue = ApproxValue(0x7F7F);

    /// Wraps a raw bit pattern.
    pub const fn from_bits(bits: u16) -> Self {
        ApproxValue(bits)
    }

    /// Returns the raw bit pattern.
    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Encodes an `f64`, rounding to nearest with ties to even.
    ///
    /// The conversion rounds directly from the double — it never goes through
    /// `f32`, so there is no double rounding. Signed zeros survive; NaN maps
    /// to the canonical quiet NaN; values past the overflow threshold
    /// `(2 - 2^-8) * 2^127` become infinity of the right sign.
    pub fn from_f64(v: f64) -> Self {
        if v.is_nan() {
            return Self::NAN;
        }
        let sign = ((v.to_bits() >> 48) as u16) & SIGN_MASK;
        let a = v.abs();
        if a == 0.0 {
            return ApproxValue(sign);
        }
        if a == f64::INFINITY {
            return ApproxValue(sign | EXP_MASK);
        }
        let bits = a.to_bits();
        let exp_field = (bits >> 52) as i32;
        if exp_field == 0 {
            // f64 subnormals sit below 2^-1022, far under half the smallest
            // bfloat16 subnormal (2^-134): they all round to zero.
            return ApproxValue(sign);
        }
        let sig = (1u64 << 52) | (bits & ((1u64 << 52) - 1));
        ApproxValue(sign | round_magnitude(sig, exp_field - 1023))
    }

    /// Encodes an `f32`, rounding to nearest with ties to even.
    pub fn from_f32(v: f32) -> Self {
        // Bias trick: adding 0x7FFF plus the bit that will become the result
        // LSB implements round-to-nearest-even in one integer add.
        if v.is_nan() {
            return Self::NAN;
        }
        let bits = v.to_bits() as u64;
        let lsb = (bits >> 16) & 1;
        ApproxValue(((bits + 0x7FFF + lsb) >> 16) as u16)
    }

    /// Decodes to `f32` exactly (every bfloat16 value is an `f32`).
    pub fn to_f32(self) -> f32 {
        f32::from_bits((self.0 as u32) << 16)
    }

    /// Decodes to `f64` exactly.
    pub fn to_f64(self) -> f64 {
        self.to_f32() as f64
    }

    pub fn is_nan(self) -> bool {
        self.0 & EXP_MASK == EXP_MASK && self.0 & MAN_MASK != 0
    }

    pub fn is_infinite(self) -> bool {
        self.0 & EXP_MASK == EXP_MASK && self.0 & MAN_MASK == 0
    }

    pub fn is_finite(self) -> bool {
        self.0 & EXP_MASK != EXP_MASK
    }

    /// True for both zeros.
    pub fn is_zero(self) -> bool {
        self.0 & !SIGN_MASK == 0
    }

    /// True for nonzero values with a zero exponent field.
    pub fn is_subnormal(self) -> bool {
        self.0 & EXP_MASK == 0 && self.0 & MAN_MASK != 0
    }

    pub fn is_sign_negative(self) -> bool {
        self.0 & SIGN_MASK != 0
    }

}

/// Sign flip; exact.
impl std::ops::Neg for ApproxValue {
    type Output = Self;

    fn neg(self) -> Self {
        ApproxValue(self.0 ^ SIGN_MASK)
    }
}

impl std::fmt::Debug for ApproxValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ApproxValue(0x{:04X} = {})", self.0, self.to_f32())
    }
}

impl std::fmt::Display for ApproxValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_f32())
    }
}

/// Rounds `sig * 2^(exp - 52)` (with `sig` in `[2^52, 2^53)`) to the nearest
/// bfloat16 magnitude, ties to even, returning the sign-free bit pattern.
fn round_magnitude(sig: u64, mut exp: i32) -> u16 {
    if exp >= -126 {
        // Normal candidate: keep an 8-bit significand.
        let (kept, up) = split_round(sig, 45);
        let mut kept = kept + up as u64;
        if kept == 1 << 8 {
            kept = 1 << 7;
            exp += 1;
        }
        if exp > 127 {
            return EXP_MASK; // overflow rounds to infinity
        }
        (((exp + 127) as u16) << 7) | (kept as u16 & MAN_MASK)
    } else {
        // Subnormal candidate: value = m * 2^-133 with m in 0..=127 after
        // rounding. m == 128 is exactly the smallest normal's bit pattern.
        let shift = -(exp + 81);
        if shift >= 64 {
            return 0;
        }
        let (m, up) = split_round(sig, shift as u32);
        (m + up as u64) as u16
    }
}

/// Splits off the low `shift` bits of `sig`, reporting whether
/// round-to-nearest-even increments the kept part.
fn split_round(sig: u64, shift: u32) -> (u64, bool) {
    debug_assert!((1..=63).contains(&shift));
    let kept = sig >> shift;
    let rem = sig & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    (kept, rem > half || (rem == half && kept & 1 == 1))
}

/// An approximation level in `0..=11`.
///
/// Level `k` drops the lowest `11 - k` bits of the 16-bit significand
/// product; level 11 is exact multiplication.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ApproxLevel(u8);

impl ApproxLevel {
    /// Coarsest level: eleven product bits dropped.
    pub const MIN: ApproxLevel = ApproxLevel(0);
    /// Exact multiplication: no product bits dropped.
    pub const EXACT: ApproxLevel = ApproxLevel(11);

    /// Validates and wraps a raw level.
    pub fn new(level: u8) -> Result<Self> {
        if level as usize >= LEVEL_COUNT {
            return Err(Error::InvalidLevel(level));
        }
        Ok(ApproxLevel(level))
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    /// Number of low product bits dropped at this level.
    pub const fn dropped_bits(self) -> u32 {
        11 - self.0 as u32
    }

    /// All twelve levels, coarsest first.
    pub fn all() -> impl Iterator<Item = ApproxLevel> {
        (0..LEVEL_COUNT as u8).map(ApproxLevel)
    }
}

impl std::fmt::Display for ApproxLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-level energy cost of one multiply, normalised so level 11 costs 1.0.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTable {
    cost: [f64; LEVEL_COUNT],
}

/// Default per-multiply costs: `0.45 + 0.05 * level`.
///
/// Written out as literals so `cost(11)` is exactly `1.0` and the
/// cheapest-to-exact ratio is exactly `0.45`.
const DEFAULT_COSTS: [f64; LEVEL_COUNT] = [
    0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 1.00,
];

impl EnergyTable {
    /// Validates a cost table: finite, positive, strictly increasing with
    /// level, and normalised so the exact level costs exactly 1.0.
    pub fn new(cost: [f64; LEVEL_COUNT]) -> Result<Self> {
        for (k, &c) in cost.iter().enumerate() {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::InvalidEnergyTable(format!(
                    "cost for level {k} must be finite and positive, got {c}"
                )));
            }
            if k > 0 && c <= cost[k - 1] {
                return Err(Error::InvalidEnergyTable(format!(
                    "costs must increase strictly with level, but cost[{k}] = {c} <= cost[{}] = {}",
                    k - 1,
                    cost[k - 1]
                )));
            }
        }
        if cost[LEVEL_COUNT - 1] != 1.0 {
            return Err(Error::InvalidEnergyTable(format!(
                "cost for level 11 is the exact-multiply reference and must be 1.0, got {}",
                cost[LEVEL_COUNT - 1]
            )));
        }
        Ok(EnergyTable { cost })
    }

    /// Cost of one multiply at `level`.
    pub fn cost(&self, level: ApproxLevel) -> f64 {
        self.cost[level.get() as usize]
    }

    pub fn costs(&self) -> &[f64; LEVEL_COUNT] {
        &self.cost
    }
}

impl Default for EnergyTable {
    fn default() -> Self {
        EnergyTable {
            cost: DEFAULT_COSTS,
        }
    }
}

/// Counts of approximate multiplies per level.
///
/// The ledger never stores floating-point totals: energy is derived on
/// demand as `sum(count[k] * cost[k])`, so merging ledgers is plain integer
/// addition and the result does not depend on merge order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnergyLedger {
    counts: [u64; LEVEL_COUNT],
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charges one multiply at `level`.
    #[inline]
    pub fn record(&mut self, level: ApproxLevel) {
        self.counts[level.get() as usize] += 1;
    }

    /// Multiplies recorded at `level`.
    pub fn count(&self, level: ApproxLevel) -> u64 {
        self.counts[level.get() as usize]
    }

    /// Per-level counts, index = level.
    pub fn counts(&self) -> &[u64; LEVEL_COUNT] {
        &self.counts
    }

    /// Total number of multiplies across all levels.
    pub fn multiplies(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Total energy in units of one exact multiply.
    pub fn total(&self, table: &EnergyTable) -> f64 {
        self.counts
            .iter()
            .zip(table.costs())
            .map(|(&n, &c)| n as f64 * c)
            .sum()
    }

    /// Adds another ledger's counts into this one.
    pub fn merge(&mut self, other: &EnergyLedger) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&n| n == 0)
    }
}

/// Multiplies two finite bfloat16 values at the given approximation level and
/// charges one multiply to the ledger.
///
/// Semantics of the hardware model:
/// * the result sign is the XOR of the operand signs and is never corrupted
///   by the truncation;
/// * subnormal operands are flushed to zero (the significand datapath has no
///   leading-one for them), so any product with a subnormal or zero operand
///   is a correctly signed zero;
/// * for normal operands with significands `sa, sb` in `[128, 255]` the raw
///   product `p = sa * sb` has its lowest `d = 11 - level` bits replaced by
///   `(2^d - 1) / 2`, and the compensated product is rounded to nearest
///   (ties to even) into bfloat16.
///
/// At level 11 this is exactly the correctly rounded bfloat16 product.
/// Relative error against the exact product never exceeds `2^-3` at any
/// level, and the compensation keeps the expected signed error near zero.
pub fn approx_multiply(
    a: ApproxValue,
    b: ApproxValue,
    level: ApproxLevel,
    ledger: &mut EnergyLedger,
) -> Result<ApproxValue> {
    if !a.is_finite() {
        return Err(Error::NonFinite("left multiply operand"));
    }
    if !b.is_finite() {
        return Err(Error::NonFinite("right multiply operand"));
    }
    ledger.record(level);
    Ok(multiply_finite(a, b, level))
}

/// The multiplier datapath, sans validation and energy accounting.
#[inline]
fn multiply_finite(a: ApproxValue, b: ApproxValue, level: ApproxLevel) -> ApproxValue {
    let sign = (a.0 ^ b.0) & SIGN_MASK;
    let (sa, ea) = match normal_parts(a) {
        Some(parts) => parts,
        None => return ApproxValue(sign),
    };
    let (sb, eb) = match normal_parts(b) {
        Some(parts) => parts,
        None => return ApproxValue(sign),
    };
    let p = sa * sb; // in [2^14, 2^16)
    let mask = (1u32 << level.dropped_bits()) - 1;
    // Work at twice the product scale so the half-ulp compensation
    // (2^d - 1) / 2 stays integral: v2 = 2 * (p - p mod 2^d) + (2^d - 1).
    let v2 = (((p & !mask) as u64) << 1) | mask as u64;
    // v2 has at most 18 significant bits and the exponent is well inside
    // f64's range, so this value is exact.
    let value = v2 as f64 * pow2(ea + eb - 15);
    let magnitude = ApproxValue::from_f64(value);
    ApproxValue(sign | magnitude.0)
}

/// Significand (implicit one included, `128..=255`) and unbiased exponent of
/// a normal value; `None` flushes zeros and subnormals.
#[inline]
fn normal_parts(v: ApproxValue) -> Option<(u32, i32)> {
    let exp_field = (v.0 & EXP_MASK) >> 7;
    if exp_field == 0 {
        return None;
    }
    Some((0x80 | (v.0 & MAN_MASK) as u32, exp_field as i32 - 127))
}

/// `2^e` for `e` in the normal f64 exponent range; exact.
#[inline]
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((1023 + e) as u64) << 52)
}

/// Adds two finite bfloat16 values exactly (to bfloat16 precision).
///
/// The sum is formed in `f64`, where it is exact, and rounded once to
/// nearest-even. Addition carries no approximation and no energy charge.
pub fn exact_add(a: ApproxValue, b: ApproxValue) -> Result<ApproxValue> {
    if !a.is_finite() {
        return Err(Error::NonFinite("left add operand"));
    }
    if !b.is_finite() {
        return Err(Error::NonFinite("right add operand"));
    }
    Ok(ApproxValue::from_f64(a.to_f64() + b.to_f64()))
}

/// Subtracts `b` from `a` exactly (to bfloat16 precision).
pub fn exact_sub(a: ApproxValue, b: ApproxValue) -> Result<ApproxValue> {
    exact_add(a, b.neg())
}

/// Mean signed relative error of the approximate multiplier at `level`,
/// measured against the exact (level 11) product over `trials` random
/// operand pairs drawn from the seeded sampler.
///
/// Operands are uniform over normal bfloat16 values with exponents in
/// `[-8, 8)`, which keeps every product far from overflow and underflow.
/// The error of each trial is `(approx - exact) / exact` on the decoded
/// values; at level 11 the report is exactly `0.0`. Use at least 10^4
/// trials for a stable estimate.
pub fn bias_report(level: ApproxLevel, trials: u64, seed: u64) -> f64 {
    debug_assert!(trials > 0);
    let mut rng = crate::rng::stream(seed, crate::rng::STREAM_BIAS);
    let mut sum = 0.0;
    for _ in 0..trials {
        let a = random_normal_operand(&mut rng);
        let b = random_normal_operand(&mut rng);
        let approx = multiply_finite(a, b, level).to_f64();
        let exact = multiply_finite(a, b, ApproxLevel::EXACT).to_f64();
        sum += (approx - exact) / exact;
    }
    sum / trials as f64
}

/// Uniform positive normal bfloat16 with exponent in `[-8, 8)`.
fn random_normal_operand<R: rand::Rng>(rng: &mut R) -> ApproxValue {
    let man = rng.gen_range(0u16..128);
    let exp = rng.gen_range(-8i32..8);
    ApproxValue(((exp + 127) as u16) << 7 | man)
}
