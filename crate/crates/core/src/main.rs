use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thermal_hbt::experiments::{
    emit_results, run, ExperimentKind, ExperimentSpec, OutputFormat, RunResult,
};

#[derive(Parser)]
#[command(name = "thermal-hbt", version, about = "Far-field intensity correlations of pseudo-thermal light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-detector arrival-time-difference histogram.
    TemporalHistogram(Common),
    /// Monte Carlo g2 over the D2 scan for each D1 position.
    SpatialScan(Common),
    /// Monte Carlo g2 and correlation width for each source diameter.
    SourceSizeScan(Common),
    /// Closed-form g2 curves only.
    AnalyticCurve(Common),
    /// Brute-force Fock-space moment identities.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with experiment keys; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

fn build_spec(kind: ExperimentKind, args: &Common) -> thermal_hbt::Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => ExperimentSpec::default(),
    };
    spec.kind = kind;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.realizations {
        spec.realizations = n;
    }
    spec.validate()?;
    Ok(spec)
}

fn report(result: &RunResult) {
    for c in &result.curves {
        let vis = c
            .visibility
            .map(|v| format!("{:.4} +- {:.4}", v.mean, v.stderr))
            .unwrap_or_else(|| format!("{:.6}", c.analytic_visibility));
        let jack = c
            .visibility_jackknife
            .map(|v| format!(" (jackknife {:.4} +- {:.4})", v.mean, v.stderr))
            .unwrap_or_default();
        println!(
            "{:<16} argmax {:+.3} mm  visibility {}{}  max|dg2| {:.4}",
            c.label,
            c.argmax_position * 1e3,
            vis,
            jack,
            c.max_abs_deviation
        );
    }
    for t in &result.singles {
        println!(
            "singles D{}: {} positions, max deviation {:.2} sigma",
            t.detector,
            t.positions.len(),
            t.max_deviation_sigma
        );
    }
    for w in &result.widths {
        println!(
            "a = {:7.1} um  first zero {:.4} mm (analytic {:.4} mm, {:+.2}%)",
            w.source_diameter * 1e6,
            w.estimate.fitted_first_zero * 1e3,
            w.analytic_width * 1e3,
            100.0 * w.relative_error
        );
    }
    if let Some(t) = &result.temporal {
        println!(
            "singles {} / {}, coincidences {} in window, g2 = {:.4} +- {:.4} (analytic {:.4})",
            t.singles_d1,
            t.singles_d2,
            t.coincidences,
            t.g2_from_counts,
            t.g2_from_counts_stderr,
            t.g2_window_analytic
        );
        for r in &t.ratios {
            println!(
                "peak/baseline over {:9.3e} s: {:.4} +- {:.4} (analytic {:.4})",
                r.width, r.measured, r.stderr, r.analytic
            );
        }
        println!(
            "baseline chi2 {:.1} over {} channels (95% critical {:.1})",
            t.baseline_chi2, t.baseline_channels, t.baseline_chi2_critical
        );
    }
    if let Some(o) = &result.oracle {
        println!("n_max {}  basis {}", o.n_max, o.basis_size);
        for r in &o.rows {
            println!(
                "{:<4} {:<42} max deviation {:.3e} over {} cases",
                if r.pass { "PASS" } else { "FAIL" },
                r.identity,
                r.max_deviation,
                r.cases
            );
        }
    }
    for n in &result.notices {
        eprintln!("notice: {n}");
    }
}

fn execute(kind: ExperimentKind, args: &Common) -> thermal_hbt::Result<bool> {
    let spec = build_spec(kind, args)?;
    let format: OutputFormat = args.format.parse()?;
    let result = run(&spec)?;
    report(&result);
    let files = emit_results(&result, format, &args.out)?;
    println!(
        "{} files written to {} in {:.1} s",
        files.len(),
        args.out.display(),
        result.runtime_s
    );
    Ok(result.oracle.as_ref().is_none_or(|o| o.all_pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::TemporalHistogram(a) => (ExperimentKind::TemporalHistogram, a),
        Command::SpatialScan(a) => (ExperimentKind::SpatialScan, a),
        Command::SourceSizeScan(a) => (ExperimentKind::SourceSizeScan, a),
        Command::AnalyticCurve(a) => (ExperimentKind::AnalyticCurve, a),
        Command::OracleCheck(a) => (ExperimentKind::OracleCheck, a),
    };
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: oracle identities failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
