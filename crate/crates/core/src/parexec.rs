//! Row-partitioned parallel runner for 1-D operations over matrix rows.
//!
//! [`op_accel`] splits a matrix's rows into contiguous blocks — the first
//! `M mod W` workers take `ceil(M/W)` rows, the rest `floor(M/W)` — runs the
//! chosen row operation on every row, re-assembles the rows in their
//! original order, and returns the transpose. Applying it twice with an FFT
//! row op therefore computes a separable 2-D transform: the first call
//! transforms rows, the transpose turns columns into rows, and the second
//! call finishes the job.
//!
//! Workers model execution parallelism only, never numerics: each worker
//! owns a disjoint row slice and a private [`EnergyLedger`], rows are merged
//! by index and ledgers by integer addition, so outputs and energy totals
//! are bit-identical for every worker count. A failed run charges nothing
//! to the caller's ledger.

use crate::apxfft::{ax_fft, ax_ifft, ComplexSignal, LevelSchedule};
use crate::apxnum::{approx_multiply, ApproxLevel, ApproxValue, EnergyLedger};
use crate::{Error, Result};
use num_complex::Complex64;
use std::ops::Range;

/// A dense complex matrix stored row-major, the unit of work for
/// [`op_accel`].
#[derive(Clone, Debug, PartialEq)]
pub struct CxMatrix {
    data: Vec<Complex64>,
    rows: usize,
    cols: usize,
}

impl CxMatrix {
    /// Builds from equal-length rows; at least one row and one column.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyInput("matrix"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "ragged matrix: row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(CxMatrix {
            data,
            rows: rows.len(),
            cols,
        })
    }

    /// Builds a real-valued matrix (imaginary lanes zero).
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    /// Real parts, row by row.
    pub fn re_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|c| c.re).collect())
            .collect()
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|c| c.im == 0.0)
    }

    fn transpose(&self) -> CxMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        CxMatrix {
            data,
            rows: self.cols,
            cols: self.rows,
        }
    }
}

/// The per-row operation [`op_accel`] applies.
#[derive(Clone, Debug)]
pub enum RowOp {
    /// Forward approximate FFT; rows must have power-of-two length matching
    /// the schedule.
    Fft(LevelSchedule),
    /// Inverse approximate FFT, same shape rules as `Fft`.
    Ifft(LevelSchedule),
    /// Real square matvec `out = matrix * row`: every product goes through
    /// the approximate multiplier at one level, while accumulation is
    /// exact double precision in index order (multipliers are approximated;
    /// the accumulator register is wide, as in systolic matrix units).
    /// Rows must be real; `matrix` must be `cols x cols`.
    Poly {
        matrix: Vec<Vec<f64>>,
        level: ApproxLevel,
    },
}

/// Worker count plus the row operation to distribute.
#[derive(Clone, Debug)]
pub struct WorkPlan {
    workers: usize,
    op: RowOp,
}

impl WorkPlan {
    /// Validates the worker count (>= 1) and, for `Poly`, that the matrix
    /// is square, non-empty, and finite.
    pub fn new(workers: usize, op: RowOp) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidArgument(
                "worker count must be at least 1".into(),
            ));
        }
        if let RowOp::Poly { matrix, .. } = &op {
            if matrix.is_empty() {
                return Err(Error::EmptyInput("poly matrix"));
            }
            for (i, row) in matrix.iter().enumerate() {
                if row.len() != matrix.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "poly matrix must be square: row {i} has {} entries, expected {}",
                        row.len(),
                        matrix.len()
                    )));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("poly matrix entry"));
                }
            }
        }
        Ok(WorkPlan { workers, op })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn op(&self) -> &RowOp {
        &self.op
    }
}

/// The machine's available parallelism, for callers that want a default
/// worker count (capping at the row count happens inside [`op_accel`]).
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Contiguous row ranges: the first `m % w` workers get one extra row.
pub(crate) fn partition(m: usize, w: usize) -> Vec<Range<usize>> {
    let w = w.min(m).max(1);
    let base = m / w;
    let extra = m % w;
    let mut ranges = Vec::with_capacity(w);
    let mut start = 0;
    for i in 0..w {
        let len = base + usize::from(i < extra);
        ranges.push(start..start + len);
        start += len;
    }
    ranges
}

/// Applies `plan.op` to every row of `x` across `plan.workers` workers and
/// returns the transposed result (an `M x N` input becomes `N x M`).
///
/// All shape validation happens before any work is spawned, so errors are
/// identical for every worker count. On success the per-worker ledgers are
/// merged into `ledger`; on failure nothing is charged.
pub fn op_accel(x: &CxMatrix, plan: &WorkPlan, ledger: &mut EnergyLedger) -> Result<CxMatrix> {
    validate(x, plan.op())?;

    let ranges = partition(x.rows(), plan.workers());
    let mut worker_out: Vec<(Result<Vec<Vec<Complex64>>>, EnergyLedger)> =
        Vec::with_capacity(ranges.len());

    if ranges.len() == 1 {
        let mut local = EnergyLedger::new();
        let res = run_rows(x, ranges[0].clone(), plan.op(), &mut local);
        worker_out.push((res, local));
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|range| {
                    let range = range.clone();
                    scope.spawn(move || {
                        let mut local = EnergyLedger::new();
                        let res = run_rows(x, range, plan.op(), &mut local);
                        (res, local)
                    })
                })
                .collect();
            for handle in handles {
                worker_out.push(handle.join().expect("row worker panicked"));
            }
        });
    }

    // Workers hold ordered row slices, so scanning in worker order yields
    // the earliest failing row; nothing is merged if anything failed.
    let mut assembled: Vec<Vec<Complex64>> = Vec::with_capacity(x.rows());
    let mut merged = EnergyLedger::new();
    for (res, local) in worker_out {
        assembled.extend(res?);
        merged.merge(&local);
    }
    ledger.merge(&merged);

    Ok(CxMatrix::from_rows(assembled)?.transpose())
}

/// Shape checks shared by every worker count.
fn validate(x: &CxMatrix, op: &RowOp) -> Result<()> {
    match op {
        RowOp::Fft(sched) | RowOp::Ifft(sched) => {
            if !x.cols().is_power_of_two() {
                return Err(Error::BadLength {
                    what: "transform row",
                    len: x.cols(),
                });
            }
            let stages = x.cols().trailing_zeros() as usize;
            if sched.len() != stages {
                return Err(Error::ScheduleMismatch {
                    expected: stages,
                    found: sched.len(),
                });
            }
        }
        RowOp::Poly { matrix, .. } => {
            if matrix.len() != x.cols() {
                return Err(Error::ShapeMismatch(format!(
                    "poly matrix is {0}x{0} but rows have {1} columns",
                    matrix.len(),
                    x.cols()
                )));
            }
            if !x.is_real() {
                return Err(Error::ShapeMismatch(
                    "poly rows must be real (zero imaginary parts)".into(),
                ));
            }
        }
    }
    Ok(())
}

fn run_rows(
    x: &CxMatrix,
    range: Range<usize>,
    op: &RowOp,
    ledger: &mut EnergyLedger,
) -> Result<Vec<Vec<Complex64>>> {
    range.map(|i| apply_row(x.row(i), op, ledger)).collect()
}

fn apply_row(row: &[Complex64], op: &RowOp, ledger: &mut EnergyLedger) -> Result<Vec<Complex64>> {
    match op {
        RowOp::Fft(sched) => {
            let signal = ComplexSignal::from_complex64(row)?;
            Ok(ax_fft(&signal, sched, ledger)?.to_complex64())
        }
        RowOp::Ifft(sched) => {
            let signal = ComplexSignal::from_complex64(row)?;
            Ok(ax_ifft(&signal, sched, ledger)?.to_complex64())
        }
        RowOp::Poly { matrix, level } => {
            let encoded: Vec<ApproxValue> =
                row.iter().map(|c| ApproxValue::from_f64(c.re)).collect();
            let mut out = Vec::with_capacity(matrix.len());
            for mrow in matrix {
                let mut acc = 0.0f64;
                for (&m, &v) in mrow.iter().zip(&encoded) {
                    let p = approx_multiply(ApproxValue::from_f64(m), v, *level, ledger)?;
                    acc += p.to_f64();
                }
                out.push(Complex64::new(acc, 0.0));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apxnum::EnergyTable;
    use std::f64::consts::PI;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> CxMatrix {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        CxMatrix::from_rows(
            (0..rows)
                .map(|_| (0..cols).map(|_| Complex64::new(next(), next())).collect())
                .collect(),
        )
        .unwrap()
    }

    /// Double-precision 2-D DFT oracle (naive, O(n^4)).
    fn dft_2d(x: &CxMatrix) -> CxMatrix {
        let (m, n) = (x.rows(), x.cols());
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; m];
        for u in 0..m {
            for v in 0..n {
                let mut sum = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    for j in 0..n {
                        let angle =
                            -2.0 * PI * ((u * i) as f64 / m as f64 + (v * j) as f64 / n as f64);
                        sum += x.get(i, j) * Complex64::new(angle.cos(), angle.sin());
                    }
                }
                out[u][v] = sum;
            }
        }
        CxMatrix::from_rows(out).unwrap()
    }

    fn exact_plan(workers: usize, stages: usize) -> WorkPlan {
        WorkPlan::new(
            workers,
            RowOp::Fft(LevelSchedule::uniform(ApproxLevel::EXACT, stages)),
        )
        .unwrap()
    }

    #[test]
    fn partition_follows_ceil_floor_rule() {
        let sizes = |m, w| -> Vec<usize> { partition(m, w).iter().map(|r| r.len()).collect() };
        assert_eq!(sizes(5, 2), vec![3, 2]);
        assert_eq!(sizes(8, 4), vec![2, 2, 2, 2]);
        assert_eq!(sizes(7, 3), vec![3, 2, 2]);
        assert_eq!(sizes(3, 8), vec![1, 1, 1]); // capped at row count
        assert_eq!(sizes(1, 1), vec![1]);
        // Ranges are contiguous and cover everything.
        let ranges = partition(11, 4);
        assert_eq!(ranges[0].start, 0);
        assert_eq!(ranges.last().unwrap().end, 11);
        for pair in ranges.windows(2) {
            assert_eq!(pair[0].end, pair[1].start);
        }
    }

    #[test]
    fn output_has_transposed_shape() {
        let x = seeded_matrix(3, 4, 1);
        let plan = WorkPlan::new(
            2,
            RowOp::Poly {
                matrix: vec![vec![0.0; 4]; 4],
                level: ApproxLevel::EXACT,
            },
        )
        .unwrap();
        // Real input required for poly.
        let x = CxMatrix::from_real_rows(&x.re_rows()).unwrap();
        let mut ledger = EnergyLedger::new();
        let y = op_accel(&x, &plan, &mut ledger).unwrap();
        assert_eq!((y.rows(), y.cols()), (4, 3));
    }

    #[test]
    fn worker_count_never_changes_bits_or_energy() {
        let x = seeded_matrix(8, 16, 7);
        let table = EnergyTable::default();
        let mut base_ledger = EnergyLedger::new();
        let sched = LevelSchedule::from_u8(&[2, 5, 11, 0]).unwrap();
        let base = op_accel(
            &x,
            &WorkPlan::new(1, RowOp::Fft(sched.clone())).unwrap(),
            &mut base_ledger,
        )
        .unwrap();
        for workers in [2usize, 4, 8, 16] {
            let mut ledger = EnergyLedger::new();
            let got = op_accel(
                &x,
                &WorkPlan::new(workers, RowOp::Fft(sched.clone())).unwrap(),
                &mut ledger,
            )
            .unwrap();
            assert_eq!(got.rows(), base.rows());
            for i in 0..got.rows() {
                for j in 0..got.cols() {
                    let (a, b) = (got.get(i, j), base.get(i, j));
                    assert_eq!(
                        a.re.to_bits(),
                        b.re.to_bits(),
                        "re at ({i},{j}) W={workers}"
                    );
                    assert_eq!(
                        a.im.to_bits(),
                        b.im.to_bits(),
                        "im at ({i},{j}) W={workers}"
                    );
                }
            }
            assert_eq!(ledger, base_ledger, "ledger differs at W={workers}");
            assert_eq!(ledger.total(&table), base_ledger.total(&table));
        }
    }

    #[test]
    fn double_application_is_a_2d_fft() {
        // Encode once so the oracle sees exactly what the bf16 path sees.
        let raw = seeded_matrix(8, 8, 42);
        let enc_rows: Vec<Vec<Complex64>> = (0..raw.rows())
            .map(|i| {
                ComplexSignal::from_complex64(raw.row(i))
                    .unwrap()
                    .to_complex64()
            })
            .collect();
        let x = CxMatrix::from_rows(enc_rows).unwrap();

        let plan = exact_plan(3, 3);
        let mut ledger = EnergyLedger::new();
        let once = op_accel(&x, &plan, &mut ledger).unwrap();
        let twice = op_accel(&once, &plan, &mut ledger).unwrap();

        let want = dft_2d(&x);
        // Transposing twice restores orientation, so `twice` aligns with the
        // oracle directly. Tolerance: 8 bfloat16 ulps of each magnitude.
        for i in 0..8 {
            for j in 0..8 {
                let (got, exact) = (twice.get(i, j), want.get(i, j));
                let ulp = 2f64.powi(-8) * exact.norm().max(1.0);
                assert!(
                    (got - exact).norm() <= 8.0 * ulp,
                    "({i},{j}): got {got}, want {exact}"
                );
            }
        }
        // Energy: two passes x 8 rows x 4 * (8/2) * 3 stages multiplies.
        assert_eq!(ledger.multiplies(), 2 * 8 * 4 * 4 * 3);
    }

    #[test]
    fn poly_rows_run_the_approximate_matvec() {
        // Identity matrix reproduces (the bf16 encoding of) each row,
        // transposed.
        let x = CxMatrix::from_real_rows(&[vec![1.0, 2.0, 3.0], vec![-0.5, 0.25, 8.0]]).unwrap();
        let eye = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let plan = WorkPlan::new(
            2,
            RowOp::Poly {
                matrix: eye,
                level: ApproxLevel::EXACT,
            },
        )
        .unwrap();
        let mut ledger = EnergyLedger::new();
        let y = op_accel(&x, &plan, &mut ledger).unwrap();
        assert_eq!((y.rows(), y.cols()), (3, 2));
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(y.get(i, j).re, x.get(j, i).re);
                assert_eq!(y.get(i, j).im, 0.0);
            }
        }
        // Every multiply is charged, including the zero-operand ones.
        assert_eq!(ledger.multiplies(), 2 * 9);

        // Known matvec at exact level: all values bf16-representable.
        let m = vec![vec![0.5, 0.25], vec![-1.0, 2.0]];
        let x = CxMatrix::from_real_rows(&[vec![2.0, 4.0]]).unwrap();
        let plan = WorkPlan::new(
            1,
            RowOp::Poly {
                matrix: m,
                level: ApproxLevel::EXACT,
            },
        )
        .unwrap();
        let y = op_accel(&x, &plan, &mut ledger).unwrap();
        // [0.5*2 + 0.25*4, -1*2 + 2*4] = [2, 6], transposed to a column.
        assert_eq!((y.rows(), y.cols()), (2, 1));
        assert_eq!(y.get(0, 0).re, 2.0);
        assert_eq!(y.get(1, 0).re, 6.0);
    }

    #[test]
    fn validation_rejects_bad_shapes_before_spawning() {
        let mut ledger = EnergyLedger::new();
        // Non-power-of-two rows for FFT.
        let x = seeded_matrix(2, 6, 1);
        let plan = exact_plan(2, 2);
        assert!(matches!(
            op_accel(&x, &plan, &mut ledger),
            Err(Error::BadLength { .. })
        ));
        // Wrong schedule length.
        let x = seeded_matrix(2, 8, 1);
        assert!(matches!(
            op_accel(&x, &plan, &mut ledger),
            Err(Error::ScheduleMismatch { .. })
        ));
        // Poly on complex rows.
        let plan = WorkPlan::new(
            1,
            RowOp::Poly {
                matrix: vec![vec![1.0; 8]; 8],
                level: ApproxLevel::EXACT,
            },
        )
        .unwrap();
        assert!(matches!(
            op_accel(&x, &plan, &mut ledger),
            Err(Error::ShapeMismatch(_))
        ));
        // Poly matrix size vs row length.
        let x = CxMatrix::from_real_rows(&[vec![1.0, 2.0]]).unwrap();
        let plan = WorkPlan::new(
            1,
            RowOp::Poly {
                matrix: vec![vec![1.0; 3]; 3],
                level: ApproxLevel::EXACT,
            },
        )
        .unwrap();
        assert!(matches!(
            op_accel(&x, &plan, &mut ledger),
            Err(Error::ShapeMismatch(_))
        ));
        // Nothing was charged by any failed call.
        assert!(ledger.is_empty());

        // Constructor-level validation.
        assert!(matches!(
            WorkPlan::new(0, RowOp::Fft(LevelSchedule::new(vec![]))),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            WorkPlan::new(
                1,
                RowOp::Poly {
                    matrix: vec![vec![1.0, 2.0]],
                    level: ApproxLevel::EXACT
                }
            ),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            CxMatrix::from_rows(vec![]),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            CxMatrix::from_rows(vec![vec![Complex64::new(1.0, 0.0)], vec![]]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn ifft_rows_invert_fft_rows() {
        let x = seeded_matrix(4, 16, 9);
        let sched = LevelSchedule::uniform(ApproxLevel::EXACT, 4);
        let fwd = WorkPlan::new(3, RowOp::Fft(sched.clone())).unwrap();
        let inv = WorkPlan::new(2, RowOp::Ifft(sched)).unwrap();
        let mut ledger = EnergyLedger::new();
        // fft rows -> transpose -> ifft of *columns*... undo by applying the
        // pair twice: (ifft o T o fft o T) row-wise leaves rows transformed
        // and restored. Simplest check: fft then ifft on the transposed
        // intermediate recovers the transpose of the input.
        let mid = op_accel(&x, &fwd, &mut ledger).unwrap();
        let back = op_accel(&mid.transpose(), &inv, &mut ledger).unwrap();
        // `back` is transpose(ifft(fft(x rows))) = transpose(~x).
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let got = back.get(j, i);
                let want = ComplexSignal::from_complex64(x.row(i))
                    .unwrap()
                    .to_complex64()[j];
                assert!(
                    (got - want).norm() <= 0.05,
                    "({i},{j}): got {got}, want {want}"
                );
            }
        }
    }
}
