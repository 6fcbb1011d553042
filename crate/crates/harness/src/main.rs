use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lrsense_harness::config::ExperimentConfig;
use lrsense_harness::core::diagnostics::{default_window, fit_linear_rate, fit_power_rate, TraceField};
use lrsense_harness::experiment::{build_operator, rip_probe, run_experiment, write_outputs, ExperimentOutput};
use lrsense_harness::presets::{preset, PRESET_NAMES};
use lrsense_harness::toycheck::{toy_report, ToyParams};
use lrsense_harness::trace_csv::read_trace_csv;
use lrsense_harness::{Error, Result};

#[derive(Parser)]
#[command(name = "lrsense", version, about = "Gradient descent experiments for low-rank matrix sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named preset.
    Preset {
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the preset names.
    ListPresets,
    /// Probe the restricted isometry constant of a config's operator.
    RipEstimate {
        config: PathBuf,
        /// Probe rank; defaults to max(k) + r.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Fit a convergence rate to one column of a trace CSV.
    RateFit {
        trace: PathBuf,
        #[arg(long)]
        field: String,
        /// Inclusive iteration range `start,end`; defaults to the last half
        /// of the records above --floor.
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
        #[arg(long, value_enum, default_value_t = Kind::Linear)]
        kind: Kind,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
    },
    /// Compare full gradient descent on the toy problem with its scalar
    /// recursions and check the loss bounds.
    ToyCheck {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 500)]
        steps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Linear,
    Power,
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected `start,end`")?;
    let a = a.trim().parse().map_err(|e| format!("start: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("end: {e}"))?;
    if a >= b {
        return Err(format!("start {a} must be below end {b}"));
    }
    Ok((a, b))
}

fn report(out: &ExperimentOutput, dir: &std::path::Path) -> Result<()> {
    let files = write_outputs(out, dir)?;
    if let Some(rip) = &out.rip {
        println!(
            "rip (rank {}, {} probes): delta_low={:.4} delta_high={:.4}",
            rip.rank_probed, rip.trials, rip.delta_low, rip.delta_high
        );
    }
    for run in &out.runs {
        let s = &run.summary;
        let mut line = format!(
            "[{}] {}: t={} loss_fro2={:.3e}",
            s.index,
            s.label,
            s.final_t.unwrap_or(0),
            s.final_loss_fro2.unwrap_or(f64::NAN)
        );
        for fit in s.fits.iter().filter_map(|e| e.fit.map(|f| (e, f))) {
            let (entry, f) = fit;
            let rate = match (f.rho(), f.exponent()) {
                (Some(rho), _) => format!("rho={rho:.6}"),
                (_, Some(p)) => format!("exponent={p:.4}"),
                _ => unreachable!(),
            };
            line += &format!(" {}[{:?}] {rate} r2={:.4}", entry.field, entry.phase, f.r2);
        }
        if let Some(t) = s.fire_iteration {
            line += &format!(" fired@{t}");
        }
        if let Some(e) = &s.error {
            line += &format!(" ERROR: {e}");
        }
        println!("{line}");
        for w in &s.warnings {
            println!("    warning: {w}");
        }
    }
    println!("wrote {} traces, {}, {}", files.traces.len(), files.summary.display(), files.svg.display());
    Ok(())
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            report(&run_experiment(&cfg)?, &out)?;
        }
        Command::Preset { name, out } => {
            let cfg = preset(&name)?;
            report(&run_experiment(&cfg)?, &out)?;
        }
        Command::ListPresets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
        }
        Command::RipEstimate { config, rank, trials } => {
            let cfg = ExperimentConfig::load(&config)?;
            if cfg.m == 0 {
                return Err(Error::Config {
                    field: "m".into(),
                    message: "the identity operator (m = 0) is an exact isometry; nothing to estimate".into(),
                });
            }
            let op = build_operator(&cfg)?;
            let est = rip_probe(&cfg, &op, rank, trials)?;
            println!("{}", serde_json::to_string_pretty(&est)?);
        }
        Command::RateFit {
            trace,
            field,
            window,
            kind,
            floor,
        } => {
            let field: TraceField = field.parse()?;
            let records = read_trace_csv(&trace)?;
            let (a, b) = match window {
                Some(w) => w,
                None => default_window(&records, field, floor).ok_or_else(|| Error::Trace {
                    path: trace.clone(),
                    message: format!("fewer than 3 positive records of {field}"),
                })?,
            };
            let fit = match kind {
                Kind::Linear => fit_linear_rate(&records, field, a, b)?,
                Kind::Power => fit_power_rate(&records, field, a.max(1), b)?,
            };
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
        Command::ToyCheck { n, r, eta, alpha, steps } => {
            let rep = toy_report(ToyParams { n, r, eta, alpha, steps })?;
            println!(
                "max deviation from recursions: {:.3e}\nsignal time: {:?}\nbound checks: {} records, {} violations",
                rep.max_deviation,
                rep.signal_time,
                rep.checked,
                rep.violations.len()
            );
            for v in rep.violations.iter().take(10) {
                println!("    t={} loss={:e} lower={:e} upper={:?}", v.t, v.loss, v.lower, v.upper);
            }
            return Ok(rep.max_deviation <= 1e-9 && rep.violations.is_empty());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
