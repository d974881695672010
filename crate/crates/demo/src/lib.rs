//! Browser bindings for three interactive demos of the approximate
//! pipeline: a level sweep of transform quality against energy, kernel
//! recovery from a synthesized input/response pair, and the schedule
//! search. Each entry point takes and returns JSON text so the page
//! side stays plain JavaScript and the same functions are unit-testable
//! on the host (the crate builds natively as well as for
//! `wasm32-unknown-unknown`).
//!
//! Responses are `{"ok": <payload>}` or `{"error": "<message>"}`;
//! failures never unwind across the FFI boundary.

use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use approxai::apxfft::{ax_fft, fft_exact, psnr, LevelSchedule};
use approxai::apxnum::{ApproxLevel, ApproxValue, EnergyLedger, EnergyTable};
use approxai::distill::{distill, ResponsePair, DEFAULT_EPS_REL};
use approxai::levelopt::{optimize_exhaustive, optimize_greedy, OptConstraints};
use approxai::rng::{uniform_signals, uniform_vector};

/// Largest transform the page may request; the sweep runs twelve levels
/// over every sample, so this caps a single click at a few million
/// multiplies.
const MAX_SIZE: usize = 1024;
const MAX_SAMPLES: usize = 200;

fn api(result: Result<Value, String>) -> String {
    match result {
        Ok(payload) => json!({ "ok": payload }).to_string(),
        Err(message) => json!({ "error": message }).to_string(),
    }
}

fn parse<'a, T: Deserialize<'a>>(request: &'a str) -> Result<T, String> {
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

fn check_size(size: usize) -> Result<(), String> {
    if size < 2 || !size.is_power_of_two() || size > MAX_SIZE {
        return Err(format!(
            "size must be a power of two in 2..={MAX_SIZE}, got {size}"
        ));
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<(), String> {
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(format!(
            "samples must be in 1..={MAX_SAMPLES}, got {samples}"
        ));
    }
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Deserialize)]
struct SweepRequest {
    size: usize,
    samples: usize,
    seed: u64,
}

/// Runs the transform at every uniform level over seeded signals and
/// reports, per level, the median PSNR against the exact oracle and the
/// energy ratio to the all-exact schedule.
///
/// Request: `{"size": 256, "samples": 25, "seed": 1}`.
#[wasm_bindgen]
pub fn level_sweep(request: &str) -> String {
    api(level_sweep_impl(request))
}

fn level_sweep_impl(request: &str) -> Result<Value, String> {
    let req: SweepRequest = parse(request)?;
    check_size(req.size)?;
    check_samples(req.samples)?;
    let table = EnergyTable::default();
    let signals = uniform_signals(req.size, req.samples, req.seed).map_err(|e| e.to_string())?;
    let stages = req.size.trailing_zeros() as usize;

    let references: Vec<_> = signals
        .iter()
        .map(|s| fft_exact(&s.to_complex64()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;

    let mut rows = Vec::with_capacity(12);
    for level in ApproxLevel::all() {
        let sched = LevelSchedule::uniform(level, stages);
        let mut ledger = EnergyLedger::new();
        let mut psnrs = Vec::with_capacity(signals.len());
        for (sig, reference) in signals.iter().zip(&references) {
            let out = ax_fft(sig, &sched, &mut ledger).map_err(|e| e.to_string())?;
            psnrs.push(
                psnr(reference, &out.to_complex64())
                    .map_err(|e| e.to_string())?
                    .psnr_db,
            );
        }
        // Uniform schedule: every multiply costs the same, so the ratio
        // to the all-exact run is the cost table entry itself.
        rows.push(json!({
            "level": level.get(),
            "median_psnr_db": median(&mut psnrs),
            "energy_ratio": table.cost(level),
            "energy_units": ledger.total(&table),
        }));
    }
    Ok(json!({ "size": req.size, "samples": req.samples, "levels": rows }))
}

#[derive(Deserialize)]
struct RecoverRequest {
    size: usize,
    level: u8,
    seed: u64,
}

/// Synthesizes a response pair from a known blur kernel, recovers the
/// kernel through the approximate spectral division, and reports both
/// maps with the relative recovery error.
///
/// Request: `{"size": 8, "level": 11, "seed": 3}`.
#[wasm_bindgen]
pub fn recover_kernel(request: &str) -> String {
    api(recover_kernel_impl(request))
}

fn recover_kernel_impl(request: &str) -> Result<Value, String> {
    let req: RecoverRequest = parse(request)?;
    check_size(req.size)?;
    if req.size > 32 {
        return Err(format!(
            "kernel recovery demo is capped at 32x32 maps, got {}",
            req.size
        ));
    }
    let level = ApproxLevel::new(req.level).map_err(|e| e.to_string())?;
    let n = req.size;

    // A dyadic random input map (quantized to the multiplier's grain so
    // the synthesis is not dominated by encoding error) and a normalized
    // 3x3 binomial blur wrapped onto the grid.
    let flat = uniform_vector(n * n, -1.0, 1.0, req.seed);
    let x: Vec<Vec<f64>> = flat
        .chunks(n)
        .map(|row| {
            row.iter()
                .map(|&v| ApproxValue::from_f64(v).to_f64())
                .collect()
        })
        .collect();
    let mut k_true = vec![vec![0.0; n]; n];
    let blur = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    for (i, brow) in blur.iter().enumerate() {
        for (j, &b) in brow.iter().enumerate() {
            k_true[i][j] = b / 16.0;
        }
    }
    let y = circular_convolve(&x, &k_true);

    let pair = ResponsePair::new(x, y).map_err(|e| e.to_string())?;
    let sched = LevelSchedule::uniform(level, n.trailing_zeros() as usize);
    let mut ledger = EnergyLedger::new();
    let recovered =
        distill(&pair, &sched, 1, DEFAULT_EPS_REL, &mut ledger).map_err(|e| e.to_string())?;

    let mut err2 = 0.0;
    let mut norm2 = 0.0;
    for (hrow, trow) in recovered.kernel.iter().zip(&k_true) {
        for (h, t) in hrow.iter().zip(trow) {
            err2 += (h - t) * (h - t);
            norm2 += t * t;
        }
    }
    Ok(json!({
        "size": n,
        "level": level.get(),
        "kernel_true": k_true,
        "kernel_recovered": recovered.kernel,
        "rel_l2": (err2 / norm2).sqrt(),
        "epsilon": recovered.epsilon,
        "energy_units": ledger.total(&EnergyTable::default()),
    }))
}

/// Exact circular convolution used only to synthesize demo inputs; the
/// library recovers the kernel through its spectral route.
fn circular_convolve(x: &[Vec<f64>], k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut y = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += k[a][b] * x[(i + n - a) % n][(j + n - b) % n];
                }
            }
            y[i][j] = acc;
        }
    }
    y
}

#[derive(Deserialize)]
struct SearchRequest {
    size: usize,
    psnr_db: f64,
    #[serde(default)]
    energy_budget: Option<f64>,
    prob: f64,
    samples: usize,
    seed: u64,
    mode: String,
}

/// Runs the schedule search over seeded signals and reports the chosen
/// per-stage levels with their measured statistics.
///
/// Request: `{"size": 16, "psnr_db": 40, "prob": 0.9, "samples": 20,
/// "seed": 1, "mode": "exhaustive"}` (`energy_budget` optional).
#[wasm_bindgen]
pub fn search_schedule(request: &str) -> String {
    api(search_schedule_impl(request))
}

fn search_schedule_impl(request: &str) -> Result<Value, String> {
    let req: SearchRequest = parse(request)?;
    check_size(req.size)?;
    check_samples(req.samples)?;
    let constraints = OptConstraints {
        psnr_db: req.psnr_db,
        energy_budget: req.energy_budget.unwrap_or(f64::INFINITY),
        prob: req.prob,
        samples: req.samples,
    };
    let table = EnergyTable::default();
    let signals = uniform_signals(req.size, req.samples, req.seed).map_err(|e| e.to_string())?;
    let stages = req.size.trailing_zeros() as usize;
    let result = match req.mode.as_str() {
        "exhaustive" => optimize_exhaustive(stages, &signals, &constraints, &table),
        "greedy" => optimize_greedy(stages, &signals, &constraints, &table),
        other => return Err(format!("mode must be exhaustive or greedy, got {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    Ok(json!({
        "size": req.size,
        "mode": req.mode,
        "schedule": result.schedule.to_u8_vec(),
        "objective": result.objective,
        "feasible_fraction": result.feasible_fraction,
        "mean_psnr_db": result.mean_psnr,
        "mean_energy": result.mean_energy,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok_payload(response: String) -> Value {
        let v: Value = serde_json::from_str(&response).expect("valid JSON");
        assert!(v.get("error").is_none(), "unexpected error: {}", v["error"]);
        v["ok"].clone()
    }

    #[test]
    fn sweep_reports_twelve_monotone_levels() {
        let payload = ok_payload(level_sweep(r#"{"size":64,"samples":9,"seed":1}"#));
        let rows = payload["levels"].as_array().unwrap();
        assert_eq!(rows.len(), 12);
        let ratios: Vec<f64> = rows
            .iter()
            .map(|r| r["energy_ratio"].as_f64().unwrap())
            .collect();
        assert!(
            ratios.windows(2).all(|w| w[0] < w[1]),
            "energy ratios must rise with the level"
        );
        assert_eq!(ratios[0], 0.45);
        assert_eq!(ratios[11], 1.0);
        let first = rows[0]["median_psnr_db"].as_f64().unwrap();
        let last = rows[11]["median_psnr_db"].as_f64().unwrap();
        assert!(
            last > first + 10.0,
            "exact level must be far cleaner than level 0 ({first} vs {last})"
        );
        println!("level sweep: {first:.1} dB at level 0 up to {last:.1} dB at level 11");
    }

    #[test]
    fn recovery_demo_round_trips_the_blur_kernel() {
        let payload = ok_payload(recover_kernel(r#"{"size":8,"level":11,"seed":3}"#));
        let rel = payload["rel_l2"].as_f64().unwrap();
        // The blur kernel's L2 norm is only 0.375 (it sums to one), so
        // the encoding-grain noise that lands below 1e-2 relative for
        // full-size random kernels is ~1.1e-2 here.
        assert!(rel <= 2e-2, "exact-level recovery error {rel}");
        let recovered = payload["kernel_recovered"].as_array().unwrap();
        assert_eq!(recovered.len(), 8);
        println!("kernel recovery at level 11: rel L2 {rel:.2e}");
    }

    #[test]
    fn search_demo_matches_the_library_search() {
        let payload = ok_payload(search_schedule(
            r#"{"size":8,"psnr_db":45,"energy_budget":43.2,"prob":0.9,"samples":20,"seed":11,"mode":"exhaustive"}"#,
        ));
        assert_eq!(payload["schedule"], json!([2, 3, 4]));
        assert_eq!(payload["objective"], 9);
        println!("browser search reproduces the exhaustive optimum");
    }

    #[test]
    fn errors_come_back_as_json_not_panics() {
        let bad: Value = serde_json::from_str(&level_sweep("not json")).unwrap();
        assert!(bad["error"].as_str().unwrap().contains("bad request"));

        let bad: Value =
            serde_json::from_str(&level_sweep(r#"{"size":100,"samples":5,"seed":1}"#)).unwrap();
        assert!(bad["error"].as_str().unwrap().contains("power of two"));

        let infeasible: Value = serde_json::from_str(&search_schedule(
            r#"{"size":8,"psnr_db":301,"energy_budget":1.0,"prob":1.0,"samples":5,"seed":1,"mode":"greedy"}"#,
        ))
        .unwrap();
        assert!(infeasible["error"]
            .as_str()
            .unwrap()
            .contains("no feasible"));
        println!("demo errors arrive as JSON messages");
    }
}
