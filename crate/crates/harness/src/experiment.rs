//! Runs an expanded config and writes its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lrsense::accel::{run_with_accel, ClampReport};
use lrsense::diagnostics::{default_window, fit_linear_rate, fit_power_rate, RateFit, TraceField, TraceRecord};
use lrsense::optimizer::{run, GDConfig, GDState, RunFailure};
use lrsense::problem::{
    init_asymmetric_imbalanced, init_symmetric, init_toy, make_ground_truth, make_measurements, Parameterization,
};
use lrsense::sensing::{estimate_rip_delta, make_gaussian_operator, make_identity_operator, MeasurementOperator, RipEstimate};
use lrsense::toycase::toy_equivalence;
use lrsense::Seed;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FitKind, Mode, RunSpec};
use crate::error::{io_err, Result};
use crate::svg::{render_plot, Axes, Series};
use crate::trace_csv::trace_csv_string;

/// Salt separating the operator stream from the initialization seeds.
pub const OPERATOR_SALT: u64 = 0x6f70_6572_6174_6f72;
const RIP_SALT: u64 = 0x7269_705f_7072_6f62;
const RIP_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitPhase {
    /// Whole run (non-accelerated modes).
    Tail,
    /// Records up to and including the fire iteration.
    PreFire,
    /// Records after the fire iteration.
    PostFire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub field: String,
    pub phase: FitPhase,
    pub fit: Option<RateFit>,
    /// Why `fit` is missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub label: String,
    pub trace_file: String,
    pub spec: RunSpec,
    pub records: usize,
    pub final_t: Option<usize>,
    pub final_loss_fro2: Option<f64>,
    pub final_loss_spec: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub fits: Vec<FitEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rip: Option<RipEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fire_iteration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<ClampReport>,
    /// Largest gap between full gradient descent and the scalar recursions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy_max_deviation: Option<f64>,
    pub warnings: Vec<String>,
    /// Set when the run stopped early, e.g. on divergence; the trace holds
    /// the records up to that point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_seconds: f64,
}

impl RunSummary {
    pub fn fit(&self, field: TraceField, phase: FitPhase) -> Option<&RateFit> {
        self.fits
            .iter()
            .find(|e| e.field == field.name() && e.phase == phase)
            .and_then(|e| e.fit.as_ref())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub rip: Option<RipEstimate>,
    pub runs: Vec<RunOutput>,
}

#[derive(Debug, Serialize)]
struct ExperimentSummary<'a> {
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    rip: Option<&'a RipEstimate>,
    runs: Vec<&'a RunSummary>,
}

/// The shared measurement operator of a config.
pub fn build_operator(cfg: &ExperimentConfig) -> Result<MeasurementOperator> {
    Ok(if cfg.m == 0 {
        make_identity_operator(cfg.n, cfg.n)
    } else {
        make_gaussian_operator(cfg.n, cfg.n, cfg.m, Seed(cfg.seed).derive(OPERATOR_SALT))?
    })
}

/// RIP probe on the shared operator, at the largest rank a residual
/// `F G^T - Sigma` can have.
pub fn rip_for(cfg: &ExperimentConfig, op: &MeasurementOperator) -> Result<RipEstimate> {
    rip_probe(cfg, op, None, RIP_TRIALS)
}

/// RIP probe with an explicit rank (default `max(k) + r`) and trial count.
pub fn rip_probe(cfg: &ExperimentConfig, op: &MeasurementOperator, rank: Option<usize>, trials: usize) -> Result<RipEstimate> {
    let k_max = cfg.k.to_vec().into_iter().max().unwrap_or(1);
    let rank = rank.unwrap_or((k_max + cfg.r).min(cfg.n));
    Ok(estimate_rip_delta(op, rank, trials, Seed(cfg.seed).derive(RIP_SALT))?)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let specs = cfg.expand()?;
    let op = build_operator(cfg)?;
    let rip = if op.is_identity() { None } else { Some(rip_for(cfg, &op)?) };
    let mut runs = Vec::with_capacity(specs.len());
    for spec in specs {
        runs.push(execute_run(cfg, spec, &op, rip)?);
    }
    Ok(ExperimentOutput {
        config: cfg.clone(),
        rip,
        runs,
    })
}

pub fn trace_file_name(cfg: &ExperimentConfig, index: usize) -> String {
    format!("{}-run{index:02}.csv", cfg.name)
}

/// Runs one expanded spec. Configuration errors are returned; failures of
/// the optimization itself (divergence) end up in the summary.
pub fn execute_run(
    cfg: &ExperimentConfig,
    spec: RunSpec,
    op: &MeasurementOperator,
    rip: Option<RipEstimate>,
) -> Result<RunOutput> {
    let started = Instant::now();
    let truth = make_ground_truth(spec.n, spec.r, &spec.singulars)?;
    let param = match spec.mode {
        Mode::Symmetric => Parameterization::Symmetric,
        _ => Parameterization::Asymmetric,
    };
    let instance = make_measurements(truth, op.clone(), spec.k, param)?;
    let gd = GDConfig {
        eta: spec.eta,
        t_max: spec.t_max,
        stop_loss: spec.stop_loss,
        log_stride: spec.log_stride,
    };
    let seed = Seed(spec.seed);
    let mut warnings = instance.warnings.clone();
    let mut fire_iteration = None;
    let mut clamp = None;
    let mut toy_max_deviation = None;
    let outcome: std::result::Result<Vec<TraceRecord>, RunFailure> = match spec.mode {
        Mode::Symmetric => {
            let x = init_symmetric(spec.n, spec.k, spec.alpha, seed)?;
            run(&instance, GDState::symmetric(x), &gd, &mut [])
        }
        Mode::Asymmetric => {
            let (f, g) = init_asymmetric_imbalanced(spec.n, spec.k, spec.alpha, spec.ratio, seed)?;
            run(&instance, GDState::asymmetric(f, g), &gd, &mut [])
        }
        Mode::Accel => {
            let (f, g) = init_asymmetric_imbalanced(spec.n, spec.k, spec.alpha, spec.ratio, seed)?;
            let accel = spec.accel.expect("accel runs carry an accel config");
            run_with_accel(&instance, GDState::asymmetric(f, g), &gd, &accel, &mut []).map(|out| {
                fire_iteration = out.fire_iteration;
                clamp = out.clamp;
                warnings.extend(out.warnings);
                out.trace
            })
        }
        Mode::Toy => {
            let (f, g) = init_toy(spec.n, spec.r, spec.k, spec.alpha)?;
            toy_max_deviation = Some(toy_equivalence(spec.n, spec.r, spec.eta, spec.alpha, spec.t_max)?);
            run(&instance, GDState::asymmetric(f, g), &gd, &mut [])
        }
    };
    let (trace, error) = match outcome {
        Ok(trace) => (trace, None),
        Err(RunFailure { error, trace }) => (trace, Some(error.to_string())),
    };
    let fits = fit_all(cfg, &trace, fire_iteration);
    let last = trace.last();
    let summary = RunSummary {
        index: spec.index,
        label: spec.label.clone(),
        trace_file: trace_file_name(cfg, spec.index),
        records: trace.len(),
        final_t: last.map(|r| r.t),
        final_loss_fro2: last.map(|r| r.loss_fro2),
        final_loss_spec: last.map(|r| r.loss_spec),
        final_train_loss: last.map(|r| r.train_loss),
        fits,
        rip,
        fire_iteration,
        clamp,
        toy_max_deviation,
        warnings,
        error,
        wall_seconds: started.elapsed().as_secs_f64(),
        spec,
    };
    Ok(RunOutput { trace, summary })
}

fn fit_one(trace: &[TraceRecord], field: TraceField, kind: FitKind, floor: f64, window: Option<[usize; 2]>) -> std::result::Result<RateFit, String> {
    let (a, b) = match window {
        Some([a, b]) => (a, b),
        None => default_window(trace, field, floor)
            .ok_or_else(|| format!("fewer than 3 records of {field} above {floor:e}"))?,
    };
    let fit = match kind {
        FitKind::Linear => fit_linear_rate(trace, field, a, b),
        FitKind::Power => fit_power_rate(trace, field, a.max(1), b),
    };
    fit.map_err(|e| e.to_string())
}

fn fit_all(cfg: &ExperimentConfig, trace: &[TraceRecord], fire: Option<usize>) -> Vec<FitEntry> {
    let mut out = Vec::new();
    for field in cfg.fit_fields() {
        let mut push = |phase, result: std::result::Result<RateFit, String>| {
            let (fit, note) = match result {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e)),
            };
            out.push(FitEntry {
                field: field.name().to_string(),
                phase,
                fit,
                note,
            });
        };
        match fire {
            Some(t_fire) => {
                let split = trace.partition_point(|r| r.t <= t_fire);
                let (pre, post) = trace.split_at(split);
                push(FitPhase::PreFire, fit_one(pre, field, cfg.fit.kind, cfg.fit.floor, None));
                push(FitPhase::PostFire, fit_one(post, field, cfg.fit.kind, cfg.fit.floor, None));
            }
            None => push(
                FitPhase::Tail,
                fit_one(trace, field, cfg.fit.kind, cfg.fit.floor, cfg.fit.window),
            ),
        }
    }
    out
}

/// Combined plot of the primary fit field across all runs of an experiment.
pub fn experiment_svg(out: &ExperimentOutput) -> Result<String> {
    let field = out.config.fit_fields()[0];
    let series = out
        .runs
        .iter()
        .map(|run| {
            // Records at or below zero cannot be drawn on the log axis; an
            // exactly converged tail is cut there.
            let usable: Vec<TraceRecord> = run
                .trace
                .iter()
                .take_while(|r| r.get(field).is_none_or(|v| v > 0.0))
                .cloned()
                .collect();
            Series::from_trace(run.summary.label.clone(), &usable, field)
        })
        .collect::<Result<Vec<_>>>()?;
    render_plot(&format!("{} ({field})", out.config.name), &series, Axes::LogY)
}

pub fn summary_json(out: &ExperimentOutput) -> Result<String> {
    let summary = ExperimentSummary {
        config: &out.config,
        rip: out.rip.as_ref(),
        runs: out.runs.iter().map(|r| &r.summary).collect(),
    };
    Ok(serde_json::to_string_pretty(&summary)? + "\n")
}

#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub svg: PathBuf,
}

/// Writes `<dir>/<name>-runNN.csv`, `<dir>/<name>-summary.json` and
/// `<dir>/<name>.svg`.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut traces = Vec::new();
    for run in &out.runs {
        let path = dir.join(&run.summary.trace_file);
        std::fs::write(&path, trace_csv_string(&run.trace)).map_err(io_err(&path))?;
        traces.push(path);
    }
    let summary = dir.join(format!("{}-summary.json", out.config.name));
    std::fs::write(&summary, summary_json(out)?).map_err(io_err(&summary))?;
    let svg = dir.join(format!("{}.svg", out.config.name));
    std::fs::write(&svg, experiment_svg(out)?).map_err(io_err(&svg))?;
    Ok(WrittenFiles { traces, summary, svg })
}
