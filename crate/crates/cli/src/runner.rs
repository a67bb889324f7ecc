//! Protocol execution: turns a parsed configuration into CSV rows,
//! optional traces and a stdout summary.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use passage_core::{
    compare_models, dark_state_0, darkness_residual, run_transfer_traced, Error, ModelKind,
    ModelParams, Pulse, PulsePair, PulseSchedule, RunSettings, Trajectory,
};

use crate::config::{KChoice, ModelChoice, Protocol, RunConfig};
use crate::output;

/// Failure classes mapped to exit codes by `main`.
#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration or inputs (exit 2).
    Config(String),
    /// Propagation failed (exit 3).
    Numerical(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "{m}"),
            RunError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

/// Everything a protocol produces; `main` does the file I/O.
pub struct RunOutcome {
    pub header: &'static str,
    pub rows: Vec<String>,
    /// `(file name, trajectory)` pairs, already filtered by `--trace`.
    pub traces: Vec<(String, Trajectory)>,
    /// Human-readable summary for stdout.
    pub summary: Vec<String>,
    /// Per-point sweep failures; non-empty means a partial result (exit 4).
    pub failures: Vec<String>,
}

fn schedule(config: &RunConfig) -> PulseSchedule {
    PulseSchedule {
        peak_a: config.pulses.c_a,
        peak_b: config.pulses.c_b,
        width_frac: config.pulses.width_frac,
        offset_frac: config.pulses.offset_frac,
        center_frac: config.pulses.center_frac,
    }
}

fn model_params(config: &RunConfig, t_total: f64) -> ModelParams {
    let mut params = ModelParams {
        model_kind: match config.run.model {
            ModelChoice::Eliminated => ModelKind::Eliminated,
            ModelChoice::Full => ModelKind::Full,
        },
        delta_g: config.model.delta_g,
        delta_r: config.model.delta_r,
        gamma: config.model.gamma,
        kappa: config.model.kappa,
        g_a: config.model.g_a,
        g_b: config.model.g_b,
        delta0: config.model.delta0,
        k_max: match config.model.k {
            KChoice::Auto => 0, // replaced by the bandwidth rule at run time
            KChoice::Fixed(k) => k,
        },
        compensate_light_shift: config.model.compensate_light_shift,
        include_s11_shift: config.model.include_s11_shift,
        pulses: schedule(config).materialize(t_total),
        ..Default::default()
    };
    params.set_length(config.model.length);
    params
}

fn settings(config: &RunConfig) -> RunSettings {
    RunSettings {
        steps_exponent: config.integrator.steps_exponent,
        samples: config.integrator.samples,
        fidelity_tol: config.integrator.fidelity_tol,
        max_halvings: config.integrator.max_halvings,
        k_tol: config.integrator.k_tol,
        max_k_doublings: config.integrator.max_k_doublings,
        auto_k: matches!(config.model.k, KChoice::Auto),
        // A negative offset in the config is a deliberate request to run
        // the reversed ordering.
        allow_reversed_pulses: config.pulses.offset_frac < 0.0,
    }
}

/// Setup-stage errors are configuration problems; anything that happens
/// mid-integration is numerical.
fn classify(err: Error) -> RunError {
    match err {
        Error::NumericalFailure { .. } | Error::SeriesNotConvergent => {
            RunError::Numerical(err.to_string())
        }
        _ => RunError::Config(err.to_string()),
    }
}

pub fn execute(config: &RunConfig, jobs: usize, want_trace: bool) -> Result<RunOutcome, RunError> {
    match config.run.protocol {
        Protocol::Transfer => transfer(config, want_trace),
        Protocol::SweepLength => sweep_length(config, jobs, want_trace),
        Protocol::ScanT => scan_t(config, want_trace),
        Protocol::CompareModels => compare(config),
        Protocol::DarkCheck => dark_check(config),
    }
}

fn transfer(config: &RunConfig, want_trace: bool) -> Result<RunOutcome, RunError> {
    let t_total = config.run.t_total;
    let params = model_params(config, t_total);
    let alpha = C64::new(config.run.alpha_re, config.run.alpha_im);
    let beta = C64::new(config.run.beta_re, config.run.beta_im);
    let (result, trajectory) =
        run_transfer_traced(&params, t_total, alpha, beta, &settings(config)).map_err(classify)?;

    let row = output::transfer_row(config.model.length, t_total, &result);
    let summary = vec![format!(
        "transfer: L={} T={} epsilon={} fidelity={} norm_loss={}",
        config.model.length,
        t_total,
        result.epsilon.map(|e| e.to_string()).unwrap_or_else(|| "undefined".into()),
        result.fidelity_superposition,
        result.norm_loss
    )];
    let traces = if want_trace { vec![("trace.csv".to_string(), trajectory)] } else { Vec::new() };
    Ok(RunOutcome {
        header: output::TRANSFER_HEADER,
        rows: vec![row],
        traces,
        summary,
        failures: Vec::new(),
    })
}

fn sweep_length(config: &RunConfig, jobs: usize, want_trace: bool) -> Result<RunOutcome, RunError> {
    let t_total = config.run.t_total;
    let lengths = &config.sweep.lengths;
    let base = model_params(config, t_total);
    let run_settings = settings(config);

    let jobs = jobs.max(1).min(lengths.len());
    let next = AtomicUsize::new(0);
    type Slot = Option<Result<(passage_core::TransferResult, Trajectory), Error>>;
    let slots: Mutex<Vec<Slot>> = Mutex::new(vec![None; lengths.len()]);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= lengths.len() {
                    break;
                }
                let mut point = base.clone();
                point.set_length(lengths[i]);
                let outcome = run_transfer_traced(
                    &point,
                    t_total,
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 0.0),
                    &run_settings,
                );
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let slots = slots.into_inner().unwrap();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (i, (length, slot)) in lengths.iter().zip(slots).enumerate() {
        match slot.expect("every index visited") {
            Ok((result, trajectory)) => {
                rows.push(output::transfer_row(*length, t_total, &result));
                summary.push(format!(
                    "L={length}: epsilon={} pi0={} K={}",
                    result.epsilon.map(|e| e.to_string()).unwrap_or_else(|| "undefined".into()),
                    result.pi0.map(|p| p.to_string()).unwrap_or_else(|| "undefined".into()),
                    result.k_used
                ));
                if want_trace {
                    traces.push((format!("trace_{i:03}.csv"), trajectory));
                }
            }
            Err(err) => failures.push(format!("L={length}: {err}")),
        }
    }
    if rows.is_empty() {
        return Err(RunError::Numerical(format!(
            "all sweep points failed; first failure: {}",
            failures.first().cloned().unwrap_or_default()
        )));
    }
    Ok(RunOutcome { header: output::TRANSFER_HEADER, rows, traces, summary, failures })
}

fn scan_t(config: &RunConfig, want_trace: bool) -> Result<RunOutcome, RunError> {
    let sched = schedule(config);
    let run_settings = settings(config);
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (i, &t_total) in config.sweep.times.iter().enumerate() {
        let mut params = model_params(config, t_total);
        params.pulses = sched.materialize(t_total);
        match run_transfer_traced(
            &params,
            t_total,
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            &run_settings,
        ) {
            Ok((result, trajectory)) => {
                rows.push(output::transfer_row(config.model.length, t_total, &result));
                summary.push(format!(
                    "T={t_total}: epsilon={} max_cav_pop={}",
                    result.epsilon.map(|e| e.to_string()).unwrap_or_else(|| "undefined".into()),
                    result.max_cav_pop
                ));
                if want_trace {
                    traces.push((format!("trace_{i:03}.csv"), trajectory));
                }
            }
            Err(err) => failures.push(format!("T={t_total}: {err}")),
        }
    }
    if rows.is_empty() {
        return Err(RunError::Numerical(format!(
            "all scan points failed; first failure: {}",
            failures.first().cloned().unwrap_or_default()
        )));
    }
    Ok(RunOutcome { header: output::TRANSFER_HEADER, rows, traces, summary, failures })
}

fn compare(config: &RunConfig) -> Result<RunOutcome, RunError> {
    if config.run.model != ModelChoice::Full {
        return Err(RunError::Config(
            "compare-models needs run.model = full (the eliminated side is derived)".into(),
        ));
    }
    let t_total = config.run.t_total;
    let params = model_params(config, t_total);
    let outcome = compare_models(&params, t_total, &settings(config)).map_err(classify)?;
    let row = format!(
        "{},{},{},{},{},{}",
        config.model.delta_g,
        t_total,
        outcome.epsilon_full,
        outcome.epsilon_eliminated,
        outcome.max_saturation,
        outcome.regime_violated
    );
    let summary = vec![format!(
        "compare-models: epsilon_full={} epsilon_eliminated={} max_saturation={}{}",
        outcome.epsilon_full,
        outcome.epsilon_eliminated,
        outcome.max_saturation,
        if outcome.regime_violated { " (elimination regime violated)" } else { "" }
    )];
    Ok(RunOutcome {
        header: output::COMPARE_HEADER,
        rows: vec![row],
        traces: Vec::new(),
        summary,
        failures: Vec::new(),
    })
}

/// Draws admissible dark-state parameter sets (gamma = 0, delta_r = 0) and
/// reports the largest verification residual.
fn dark_check(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
    let mut rows = Vec::new();
    let mut max_residual = 0.0f64;
    for draw in 0..config.run.draws {
        let mut params = ModelParams {
            kappa: rng.gen_range(0.0..0.5),
            nu: rng.gen_range(0.1..2.0),
            k_max: rng.gen_range(0..=64),
            delta0: rng.gen_range(0.02..1.0),
            pulses: PulsePair::new(
                Pulse::new(rng.gen_range(0.05..3.0), rng.gen_range(0.0..10.0), rng.gen_range(0.5..5.0)),
                Pulse::new(rng.gen_range(0.05..3.0), rng.gen_range(0.0..10.0), rng.gen_range(0.5..5.0)),
            ),
            ..Default::default()
        };
        params.length = rng.gen_range(0.25..16.0);
        // Sample near the node-B pulse so at least one drive is alive.
        let t = params.pulses.b.center + rng.gen_range(-1.0..1.0) * params.pulses.b.width;
        let state = dark_state_0(&params, t).map_err(classify)?;
        let residual = darkness_residual(&state, &params, t).map_err(classify)?;
        max_residual = max_residual.max(residual);
        rows.push(format!("{draw},{residual}"));
    }
    let summary = vec![format!("dark-check: draws={} max_residual={max_residual}", config.run.draws)];
    Ok(RunOutcome {
        header: output::DARK_CHECK_HEADER,
        rows,
        traces: Vec::new(),
        summary,
        failures: Vec::new(),
    })
}
