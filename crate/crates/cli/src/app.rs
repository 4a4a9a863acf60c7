//! Argument parsing and command dispatch.
//!
//! Exit codes: 0 on success, 1 when a run or a check fails, 2 for
//! configuration problems (including command-line misuse, which clap
//! reports itself).

use crate::config::{ConfigError, RunConfig};
use crate::plot;
use clap::{Parser, Subcommand};
use resjump::experiment::{self, SweepConfig, FAST_EPS_GRID, FULL_EPS_GRID};
use resjump::{
    find_resonance, integrate, predict_crossing, run_checks, CheckOptions, ConvergenceTable,
    ErrorRow, PredictionInputs, SimConfig, SlopeFit, StepPolicy,
};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

pub const TOLERANCE_SCALE_VAR: &str = "RESJUMP_TOLERANCE_SCALE";

#[derive(Debug, Parser)]
#[command(
    name = "resjump",
    version,
    about = "Resonance-crossing prediction for slowly driven one-frequency Hamiltonian systems"
)]
pub struct Cli {
    /// JSON run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override the perturbation strength ε.
    #[arg(long, global = true)]
    pub eps: Option<f64>,

    /// Override the entry angle φ₋.
    #[arg(long, global = true, value_name = "ANGLE")]
    pub phi0: Option<f64>,

    /// Reduced sweep: 8 phases over the short ε ladder.
    #[arg(long, global = true)]
    pub fast: bool,

    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Sweep worker thread count.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Predict the post-crossing action and angle from entry data alone.
    Predict,
    /// Integrate the reference trajectory and write its samples.
    Simulate,
    /// Run the ε × phase convergence sweep and fit the error orders.
    Sweep,
    /// Run the self-check suite.
    Verify,
    /// Print the effective configuration after overrides.
    PrintConfig,
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> ExitCode {
    let cfg = match effective_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.cmd {
        Cmd::Predict => cmd_predict(&cfg),
        Cmd::Simulate => cmd_simulate(&cfg),
        Cmd::Sweep => cmd_sweep(&cfg),
        Cmd::Verify => cmd_verify(),
        Cmd::PrintConfig => cmd_print_config(&cfg),
    };
    match result {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<std::io::Error>() {
            // Reader hung up (e.g. piped into head); not a failure.
            Some(ioe) if ioe.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
            _ => {
                let code = if e.downcast_ref::<ConfigError>().is_some() {
                    2
                } else {
                    1
                };
                eprintln!("error: {e:#}");
                ExitCode::from(code)
            }
        },
    }
}

/// File config with command-line overrides folded in, so that `print-config`
/// shows exactly what the other commands will run.
fn effective_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(eps) = cli.eps {
        cfg.eps = eps;
    }
    if let Some(phi0) = cli.phi0 {
        cfg.phi_minus = phi0;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(n) = cli.threads {
        cfg.threads = Some(n);
    }
    if cli.fast {
        cfg.n_phi = 8;
        cfg.eps_list = Some(FAST_EPS_GRID.to_vec());
    }
    Ok(cfg)
}

fn step_policy(cfg: &RunConfig) -> StepPolicy {
    match cfg.fixed_step {
        Some(h) => StepPolicy::Fixed(h),
        None => StepPolicy::Auto {
            steps_per_period: cfg.steps_per_period,
        },
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn cmd_predict(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let model = cfg.build_model()?;
    let geom = find_resonance(&model, cfg.window)?;
    let inputs = PredictionInputs::new(&model, cfg.eps, cfg.i_minus, cfg.phi_minus, geom)?;
    let report = predict_crossing(&inputs)?;

    std::io::stdout().write_all(report.pretty().as_bytes())?;
    let csv = format!(
        "{}\n{}\n",
        resjump::PredictionReport::csv_header(),
        report.csv_row()
    );
    let path = write_out(&cfg.out_dir, "report.csv", &csv)?;
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let model = cfg.build_model()?;
    let geom = find_resonance(&model, cfg.window)?;
    let sim = SimConfig::new(cfg.eps, cfg.i_minus, cfg.phi_minus, cfg.window)
        .with_step(step_policy(cfg))
        .with_sampling(sampling_times(cfg, geom.tau_star));
    let samples = integrate(&model, &sim)?;

    let mut csv = String::from("tau,i,chi,phi\n");
    for s in &samples {
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", s.tau, s.i, s.chi, s.phi);
    }
    let path = write_out(&cfg.out_dir, "trajectory.csv", &csv)?;

    let end = samples.last().expect("sampling is nonempty");
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{} samples over tau in [{}, {}] (crossing at {:.6})",
        samples.len(),
        cfg.window.0,
        cfg.window.1,
        geom.tau_star
    )?;
    writeln!(out, "exit action {:+.16e}", end.i)?;
    writeln!(out, "exit angle  {:+.16e}", end.phi)?;
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

/// Entry, crossing, and exit, plus `simulate_samples` equally spaced interior
/// times; sorted along the window direction with near-duplicates dropped.
fn sampling_times(cfg: &RunConfig, tau_star: f64) -> Vec<f64> {
    let (lo, hi) = cfg.window;
    let span = hi - lo;
    let mut times = vec![lo, tau_star, hi];
    let n = cfg.simulate_samples;
    for k in 1..=n {
        times.push(lo + span * k as f64 / (n + 1) as f64);
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    if span < 0.0 {
        times.reverse();
    }
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * span.abs());
    times
}

fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let model = cfg.build_model()?;
    let sweep = SweepConfig {
        n_phi: cfg.n_phi,
        eps_values: cfg.eps_list.clone().unwrap_or_else(|| FULL_EPS_GRID.to_vec()),
        i_minus: cfg.i_minus,
        window: cfg.window,
        step: step_policy(cfg),
        threads: cfg.threads,
    };
    sweep.validate().map_err(|e| ConfigError(e.to_string()))?;

    let (cells, failures) = experiment::run_cells(&model, &sweep)?;
    if !failures.is_empty() {
        let path = write_out(&cfg.out_dir, "cells.csv", &experiment::cells_csv(&cells))?;
        eprintln!(
            "{} of {} cells failed; completed cells in {}",
            failures.len(),
            cells.len() + failures.len(),
            path.display()
        );
        for f in failures.iter().take(5) {
            eprintln!("  {f}");
        }
        if failures.len() > 5 {
            eprintln!("  ... {} more", failures.len() - 5);
        }
        return Ok(ExitCode::from(1));
    }

    let table = experiment::tabulate(&sweep, cells)?;
    write_out(&cfg.out_dir, "cells.csv", &table.cells_csv())?;
    write_out(&cfg.out_dir, "errors.csv", &table.errors_csv())?;
    write_out(&cfg.out_dir, "errors.dat", &gnuplot_dat(&table.rows))?;
    write_out(&cfg.out_dir, "fit.txt", &table.fit_report())?;
    for (name, title, column, fit) in error_plots(&table) {
        write_out(&cfg.out_dir, name, &plot::loglog_svg(title, &column, fit))?;
    }

    let mut out = std::io::stdout().lock();
    out.write_all(table.fit_report().as_bytes())?;
    if table.degenerate {
        writeln!(out, "note: a zero error column was left unfitted")?;
    }
    eprintln!("wrote sweep artifacts to {}", cfg.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

/// Raw per-ε error columns; pair with `set logscale xy` when plotting.
fn gnuplot_dat(rows: &[ErrorRow]) -> String {
    let mut s = String::from("# eps e_i e_phi e_classical\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:.16e} {:.16e} {:.16e} {:.16e}",
            r.eps, r.e_i, r.e_phi, r.e_classical
        );
    }
    s
}

type PlotSpec<'a> = (&'static str, &'static str, Vec<(f64, f64)>, Option<&'a SlopeFit>);

fn error_plots(table: &ConvergenceTable) -> Vec<PlotSpec<'_>> {
    let column = |pick: fn(&ErrorRow) -> f64| -> Vec<(f64, f64)> {
        table
            .rows
            .iter()
            .filter(|r| pick(r) > 0.0)
            .map(|r| (r.eps.ln(), pick(r).ln()))
            .collect()
    };
    vec![
        (
            "err_action.svg",
            "action error vs eps",
            column(|r| r.e_i),
            table.fit_i.as_ref(),
        ),
        (
            "err_angle.svg",
            "angle error vs eps",
            column(|r| r.e_phi),
            table.fit_phi.as_ref(),
        ),
        (
            "err_classical.svg",
            "classical action error vs eps",
            column(|r| r.e_classical),
            table.fit_classical.as_ref(),
        ),
    ]
}

fn cmd_verify() -> anyhow::Result<ExitCode> {
    let scale = match std::env::var(TOLERANCE_SCALE_VAR) {
        Ok(text) => text.parse::<f64>().map_err(|e| {
            ConfigError(format!("{TOLERANCE_SCALE_VAR}={text:?}: {e}"))
        })?,
        Err(_) => 1.0,
    };
    let results = run_checks(&CheckOptions {
        tolerance_scale: scale,
    });
    let mut out = std::io::stdout().lock();
    out.write_all(resjump::render_table(&results).as_bytes())?;
    if resjump::all_passed(&results) {
        writeln!(out, "all checks passed")?;
        Ok(ExitCode::SUCCESS)
    } else {
        writeln!(out, "FAILED")?;
        Ok(ExitCode::from(1))
    }
}

fn cmd_print_config(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(cfg)?)?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn overrides_reach_the_effective_config() {
        let cli = parse(&[
            "resjump", "predict", "--eps", "0.004", "--phi0", "1.25", "--out", "elsewhere",
            "--threads", "3",
        ]);
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.eps, 0.004);
        assert_eq!(cfg.phi_minus, 1.25);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.threads, Some(3));
    }

    #[test]
    fn fast_flag_shrinks_the_sweep() {
        let cfg = effective_config(&parse(&["resjump", "sweep", "--fast"])).unwrap();
        assert_eq!(cfg.n_phi, 8);
        assert_eq!(cfg.eps_list.as_deref(), Some(&FAST_EPS_GRID[..]));
    }

    #[test]
    fn sampling_times_are_ordered_and_deduplicated() {
        let cfg = RunConfig {
            simulate_samples: 7,
            ..RunConfig::default()
        };
        let times = sampling_times(&cfg, 1.0);
        assert_eq!(times.first(), Some(&0.0));
        assert_eq!(times.last(), Some(&2.0));
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        // 0.25-spaced interior grid hits the crossing exactly once.
        assert_eq!(times.iter().filter(|&&t| t == 1.0).count(), 1);
        assert_eq!(times.len(), 9);
    }

    #[test]
    fn missing_subcommand_is_a_usage_error() {
        assert!(Cli::try_parse_from(["resjump"]).is_err());
    }
}
