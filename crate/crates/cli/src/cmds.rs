//! The five subcommand bodies.
//!
//! Every command follows the same shape: load and digest all inputs
//! (fail-fast — nothing is written if any input is missing or
//! malformed), resolve defaults from the config file, compute, then
//! write the report and artifacts in one pass at the end.

use std::path::{Path, PathBuf};

use serde_json::json;

use approxai::apxfft::{ax_fft, fft_exact, psnr, LevelSchedule};
use approxai::apxnum::{ApproxLevel, EnergyLedger, EnergyTable};
use approxai::config::{RunConfig, CONFIG_ENV_VAR};
use approxai::distill::{contribution_factor, distill, ResponsePair};
use approxai::ig::{self, IGConfig};
use approxai::io::{matrix_from_csv, matrix_to_csv, matrix_to_pgm, vector_from_csv, vector_to_csv};
use approxai::levelopt::{optimize_exhaustive, optimize_greedy, OptConstraints};
use approxai::parexec::default_workers;
use approxai::rng::uniform_signals;
use approxai::shapley::{self, ShapleyConfig};
use approxai::tinymodel::model_from_json;
use approxai::Error;

use crate::report::{write_outputs, Artifact, Report, ReportBuilder};
use crate::{
    BenchArgs, Cli, CliError, Command, DistillArgs, ExplainKind, IgArgs, OptMode, OptimizeArgs,
    ShapleyArgs,
};

/// Settings shared by every subcommand after config resolution.
struct Settings {
    cfg: RunConfig,
    workers: usize,
    seed: u64,
    out_dir: PathBuf,
    table: EnergyTable,
}

/// Entry point called by `main` once clap has parsed the invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut b = ReportBuilder::new();
    let cfg = load_config(&mut b, cli.config.as_deref())?;
    let settings = Settings {
        workers: cli.workers.or(cfg.workers).unwrap_or_else(default_workers),
        seed: cli.seed.or(cfg.seed).unwrap_or(1),
        out_dir: cli
            .out_dir
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        table: cfg.energy_table()?,
        cfg,
    };
    if settings.workers == 0 {
        return Err(CliError::Msg("worker count must be at least 1".into()));
    }
    let (report, artifacts) = match cli.command {
        Command::Explain { kind } => match kind {
            ExplainKind::Ig(a) => cmd_ig(b, &settings, &a)?,
            ExplainKind::Shapley(a) => cmd_shapley(b, &settings, &a)?,
            ExplainKind::Distill(a) => cmd_distill(b, &settings, &a)?,
        },
        Command::OptimizeLevels(a) => cmd_optimize(b, &settings, &a)?,
        Command::Bench(a) => cmd_bench(b, &settings, &a)?,
    };
    let path = write_outputs(&settings.out_dir, &report, &artifacts)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Loads the effective config with the same precedence as
/// [`RunConfig::resolve`], digesting the file when one is read.
fn load_config(b: &mut ReportBuilder, explicit: Option<&Path>) -> Result<RunConfig, CliError> {
    let path: Option<PathBuf> = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
    };
    match path {
        Some(p) => Ok(RunConfig::from_json(&b.load(&p)?)?),
        None => Ok(RunConfig::default()),
    }
}

/// Single-level resolution: flag, then config, then exact.
fn resolve_level(flag: Option<u8>, cfg: &RunConfig) -> Result<ApproxLevel, CliError> {
    Ok(ApproxLevel::new(
        flag.or(cfg.level).unwrap_or(ApproxLevel::EXACT.get()),
    )?)
}

/// Staged-schedule resolution: `--schedule`, then `--level`, then the
/// config's schedule, then the config's level, then all-exact. The
/// schedule length must match the transform's stage count.
fn resolve_schedule(
    flag_schedule: &Option<String>,
    flag_level: Option<u8>,
    cfg: &RunConfig,
    stages: usize,
) -> Result<LevelSchedule, CliError> {
    let listed: Option<Vec<u8>> = match flag_schedule {
        Some(text) => Some(parse_level_list(text)?),
        None => match flag_level {
            Some(_) => None,
            None => cfg.schedule.clone(),
        },
    };
    match listed {
        Some(levels) => {
            if levels.len() != stages {
                return Err(CliError::Msg(format!(
                    "schedule lists {} stages but the transform has {stages}",
                    levels.len()
                )));
            }
            Ok(LevelSchedule::from_u8(&levels)?)
        }
        None => {
            let level = resolve_level(flag_level, cfg)?;
            Ok(LevelSchedule::uniform(level, stages))
        }
    }
}

fn parse_level_list(text: &str) -> Result<Vec<u8>, CliError> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u8>()
                .map_err(|_| CliError::Msg(format!("bad level {tok:?} in schedule list")))
        })
        .collect()
}

/// Baseline flag: the literal `zeros` or a CSV vector path.
fn load_baseline(b: &mut ReportBuilder, spec: &str, len: usize) -> Result<Vec<f64>, CliError> {
    if spec == "zeros" {
        Ok(vec![0.0; len])
    } else {
        Ok(vector_from_csv(&b.load(Path::new(spec))?)?)
    }
}

/// Stage count of a power-of-two transform size.
fn pow2_stages(size: usize) -> Result<usize, CliError> {
    if size < 2 || !size.is_power_of_two() {
        return Err(CliError::Core(Error::BadLength {
            what: "transform size",
            len: size,
        }));
    }
    Ok(size.trailing_zeros() as usize)
}

/// Median of a list of PSNR values (all finite; the meter caps at its
/// ceiling). Even-length lists average the two central values.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("PSNR values are finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn cmd_ig(
    mut b: ReportBuilder,
    s: &Settings,
    a: &IgArgs,
) -> Result<(Report, Vec<Artifact>), CliError> {
    let model = model_from_json(&b.load(&a.model)?)?;
    let x = vector_from_csv(&b.load(&a.input)?)?;
    let baseline = load_baseline(&mut b, &a.baseline, x.len())?;
    let level = resolve_level(a.level, &s.cfg)?;
    let cfg = IGConfig {
        n: a.steps,
        t: a.t,
        class_index: a.class,
        level,
        workers: s.workers,
    };
    let mut ledger = EnergyLedger::new();
    let att = ig::attribute(&model, &x, &baseline, &cfg, &mut ledger)?;
    let payload = json!({
        "method": "ig",
        "class_index": a.class,
        "nodes": a.steps,
        "trapezoid_intervals": a.t,
        "values": att.values,
        "completeness_gap": att.completeness_gap,
        "files": { "values_csv": "attribution.csv" },
    });
    let artifacts = vec![Artifact {
        name: "attribution.csv",
        contents: vector_to_csv(&att.values),
    }];
    let report = b.finish(
        s.seed,
        s.workers,
        None,
        Some(level.get()),
        ledger.total(&s.table),
        None,
        payload,
    );
    Ok((report, artifacts))
}

fn cmd_shapley(
    mut b: ReportBuilder,
    s: &Settings,
    a: &ShapleyArgs,
) -> Result<(Report, Vec<Artifact>), CliError> {
    let model = model_from_json(&b.load(&a.model)?)?;
    let x = vector_from_csv(&b.load(&a.input)?)?;
    let baseline = load_baseline(&mut b, &a.baseline, x.len())?;
    let groups: Option<Vec<Vec<usize>>> = match &a.groups {
        Some(path) => Some(
            serde_json::from_str(&b.load(path)?)
                .map_err(|e| CliError::Msg(format!("groups {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let n_features = groups.as_ref().map_or(x.len(), |g| g.len());
    // The user-facing cap can be stricter than the library's; the
    // library still enforces its own 12-feature enumeration limit.
    if n_features > a.features_cap {
        return Err(CliError::Core(Error::TooManyFeatures {
            features: n_features,
            max: a.features_cap,
        }));
    }
    let level = resolve_level(a.level, &s.cfg)?;
    let cfg = ShapleyConfig {
        n_features,
        class_index: a.class,
        level,
        workers: s.workers,
        baseline,
    };
    let mut ledger = EnergyLedger::new();
    let result = match &groups {
        Some(g) => shapley::shapley_grouped(&model, &x, &cfg, g, &mut ledger)?,
        None => shapley::shapley(&model, &x, &cfg, &mut ledger)?,
    };
    let payload = json!({
        "method": "shapley",
        "class_index": a.class,
        "features": n_features,
        "groups": groups,
        "values": result.values,
        "efficiency_gap": result.efficiency_gap,
        "files": { "values_csv": "shapley.csv" },
    });
    let artifacts = vec![Artifact {
        name: "shapley.csv",
        contents: vector_to_csv(&result.values),
    }];
    let report = b.finish(
        s.seed,
        s.workers,
        None,
        Some(level.get()),
        ledger.total(&s.table),
        None,
        payload,
    );
    Ok((report, artifacts))
}

fn cmd_distill(
    mut b: ReportBuilder,
    s: &Settings,
    a: &DistillArgs,
) -> Result<(Report, Vec<Artifact>), CliError> {
    let x = matrix_from_csv(&b.load(&a.input)?)?;
    let y = matrix_from_csv(&b.load(&a.response)?)?;
    let pair = ResponsePair::new(x, y)?;
    let stages = pow2_stages(pair.cols())?;
    let sched = resolve_schedule(&a.schedule, a.level, &s.cfg, stages)?;
    let mut ledger = EnergyLedger::new();
    let kernel = distill(&pair, &sched, s.workers, a.eps_rel, &mut ledger)?;

    let mut artifacts = vec![
        Artifact {
            name: "kernel.csv",
            contents: matrix_to_csv(&kernel.kernel),
        },
        Artifact {
            name: "kernel.pgm",
            contents: matrix_to_pgm(&kernel.kernel)?,
        },
    ];
    let occlusion = match a.occlude {
        Some(index) => {
            let c = contribution_factor(&pair, &kernel, index, &sched, s.workers, &mut ledger)?;
            artifacts.push(Artifact {
                name: "contribution.csv",
                contents: matrix_to_csv(&c.map),
            });
            artifacts.push(Artifact {
                name: "contribution.pgm",
                contents: matrix_to_pgm(&c.map)?,
            });
            json!({
                "index": index,
                "scalar": c.scalar,
                "files": {
                    "map_csv": "contribution.csv",
                    "map_pgm": "contribution.pgm",
                },
            })
        }
        None => serde_json::Value::Null,
    };
    let payload = json!({
        "method": "distill",
        "rows": pair.rows(),
        "cols": pair.cols(),
        "epsilon": kernel.epsilon,
        "eps_rel": a.eps_rel,
        "occlusion": occlusion,
        "files": { "kernel_csv": "kernel.csv", "kernel_pgm": "kernel.pgm" },
    });
    let report = b.finish(
        s.seed,
        s.workers,
        Some(sched.to_u8_vec()),
        None,
        ledger.total(&s.table),
        None,
        payload,
    );
    Ok((report, artifacts))
}

fn cmd_optimize(
    b: ReportBuilder,
    s: &Settings,
    a: &OptimizeArgs,
) -> Result<(Report, Vec<Artifact>), CliError> {
    let stages = pow2_stages(a.size)?;
    let psnr_db = a.psnr_db.or(s.cfg.psnr_db).ok_or_else(|| {
        CliError::Msg("--psnr-db is required (or set psnr_db in the config)".into())
    })?;
    let energy_budget = a
        .energy_budget
        .or(s.cfg.energy_budget)
        .unwrap_or(f64::INFINITY);
    let prob = a.prob.or(s.cfg.prob).unwrap_or(0.9);
    let samples = a.samples.or(s.cfg.samples).unwrap_or(100);
    let constraints = OptConstraints {
        psnr_db,
        energy_budget,
        prob,
        samples,
    };
    let sigs = uniform_signals(a.size, samples, s.seed)?;
    let result = match a.mode {
        OptMode::Exhaustive => optimize_exhaustive(stages, &sigs, &constraints, &s.table)?,
        OptMode::Greedy => optimize_greedy(stages, &sigs, &constraints, &s.table)?,
    };
    let schedule = result.schedule.to_u8_vec();
    let payload = json!({
        "method": "optimize-levels",
        "mode": match a.mode {
            OptMode::Exhaustive => "exhaustive",
            OptMode::Greedy => "greedy",
        },
        "size": a.size,
        "constraints": {
            "psnr_db": psnr_db,
            // null means unbounded: JSON has no infinity literal.
            "energy_budget": if energy_budget.is_finite() {
                json!(energy_budget)
            } else {
                serde_json::Value::Null
            },
            "prob": prob,
            "samples": samples,
        },
        "schedule": schedule,
        "objective": result.objective,
        "feasible_fraction": result.feasible_fraction,
        "mean_psnr_db": result.mean_psnr,
        "mean_energy_per_transform": result.mean_energy,
    });
    let report = b.finish(
        s.seed,
        s.workers,
        Some(schedule.clone()),
        None,
        result.mean_energy,
        Some(result.mean_psnr),
        payload,
    );
    Ok((report, Vec::new()))
}

fn cmd_bench(
    b: ReportBuilder,
    s: &Settings,
    a: &BenchArgs,
) -> Result<(Report, Vec<Artifact>), CliError> {
    let stages = pow2_stages(a.size)?;
    let sched = resolve_schedule(&a.schedule, a.level, &s.cfg, stages)?;
    let exact = LevelSchedule::uniform(ApproxLevel::EXACT, stages);
    let samples = a.samples.or(s.cfg.samples).unwrap_or(100);
    let sigs = uniform_signals(a.size, samples, s.seed)?;

    let mut led_sched = EnergyLedger::new();
    let mut led_exact = EnergyLedger::new();
    let mut psnrs = Vec::with_capacity(sigs.len());
    for sig in &sigs {
        let reference = fft_exact(&sig.to_complex64())?;
        let approx = ax_fft(sig, &sched, &mut led_sched)?;
        ax_fft(sig, &exact, &mut led_exact)?;
        psnrs.push(psnr(&reference, &approx.to_complex64())?.psnr_db);
    }
    let energy_schedule = led_sched.total(&s.table);
    let energy_exact = led_exact.total(&s.table);
    // Both runs perform the same number of multiplies, so the ratio is
    // the ratio of mean costs per multiply. Normalizing before dividing
    // keeps uniform-schedule ratios exact (all-0 is the cost ratio to
    // the bit); dividing the raw totals would double-round through the
    // shared count.
    let mean_cost = |led: &EnergyLedger| -> f64 {
        let n = led.multiplies() as f64;
        led.counts()
            .iter()
            .zip(s.table.costs())
            .map(|(&c, &cost)| (c as f64 / n) * cost)
            .sum()
    };
    let ratio = mean_cost(&led_sched) / mean_cost(&led_exact);
    let median_psnr = median(&mut psnrs);

    let payload = json!({
        "method": "bench",
        "size": a.size,
        "samples": samples,
        "energy_ratio": ratio,
        "energy_schedule_units": energy_schedule,
        "energy_exact_units": energy_exact,
        "median_psnr_db": median_psnr,
    });
    let report = b.finish(
        s.seed,
        s.workers,
        Some(sched.to_u8_vec()),
        None,
        energy_schedule,
        Some(median_psnr),
        payload,
    );
    Ok((report, Vec::new()))
}
