use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ris_crb::ModelVariant;
use ris_crb_cli::output::{emit_csv, emit_plot_script, per_bandwidth_path, write_csv, SweepAxis};
use ris_crb_cli::sweep::{parse_conditionings, parse_variants};
use ris_crb_cli::validate::run_validation;
use ris_crb_cli::{load_scenario, run_single, sweep_bandwidth, sweep_ris_size, CliError, Conditioning, Result, SweepResult};

/// Cramér-Rao bounds on the pose of a target-mounted RIS.
#[derive(Parser)]
#[command(name = "ris-crb", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Verb {
    /// One row for the scenario's bandwidth.
    Single,
    /// Rows for every bandwidth in `sweep.bandwidths`.
    SweepBandwidth,
    /// Rows for every side in `sweep.sides`, one CSV per bandwidth.
    SweepRisSize,
    /// Oracle suite on the size-reduced scenario.
    Validate,
}

#[derive(Args)]
struct Opts {
    /// Scenario file, or a bundled name (paper_fig2a, paper_fig2b, paper_fig3).
    #[arg(long, global = true, default_value = "paper_fig2a")]
    scenario: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gnuplot script path; needs --out.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// all, or a comma-separated list of nf-wb, nf-nb, ff-wb, ff-nb.
    #[arg(long, global = true)]
    variants: Option<String>,
    /// all, or a comma-separated list of full, known-orientation, known-position.
    #[arg(long, global = true)]
    conditioning: Option<String>,
    /// Initial Gauss-Legendre node count.
    #[arg(long, global = true)]
    quadrature_nodes: Option<usize>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the oracle report and per-bound failures to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.opts.workers {
        Some(0) => return fail(&CliError::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => return fail(&CliError::Usage(e.to_string())),
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let o = &cli.opts;
    let mut scenario = load_scenario(&o.scenario)?;
    if let Some(k) = o.quadrature_nodes {
        scenario.quadrature.nodes = k;
        scenario.quadrature.validate()?;
    }
    if o.plot.is_some() && o.out.is_none() {
        return Err(CliError::Usage("--plot needs --out".into()));
    }
    let variants = match &o.variants {
        Some(v) => parse_variants(v).ok_or_else(|| CliError::Usage(format!("bad --variants {v:?}")))?,
        None if matches!(cli.verb, Verb::Single) => vec![scenario.variant],
        None => ModelVariant::ALL.to_vec(),
    };
    let conditionings = match &o.conditioning {
        Some(c) => parse_conditionings(c).ok_or_else(|| CliError::Usage(format!("bad --conditioning {c:?}")))?,
        None if matches!(cli.verb, Verb::Single) => vec![scenario.conditioning],
        None => Conditioning::ALL.to_vec(),
    };

    if matches!(cli.verb, Verb::Validate) || o.verbose {
        let report = run_validation(&scenario)?;
        if matches!(cli.verb, Verb::Validate) {
            print!("{}", report.to_text());
        } else {
            eprint!("{}", report.to_text());
        }
        if !report.passed() {
            return Err(CliError::Oracle(report.failed_checks().join(", ")));
        }
        if matches!(cli.verb, Verb::Validate) {
            return Ok(ExitCode::SUCCESS);
        }
    }

    match cli.verb {
        Verb::Single => {
            let mut result = SweepResult::default();
            for &v in &variants {
                for &c in &conditionings {
                    let mut s = scenario.clone();
                    s.variant = v;
                    s.conditioning = c;
                    let r = run_single(&s);
                    result.rows.extend(r.rows);
                    result.failures.extend(r.failures);
                }
            }
            write(&result, o.out.as_deref(), o.plot.as_deref(), SweepAxis::Bandwidth)?;
            for f in &result.failures {
                eprintln!("error: {f}");
            }
            Ok(if result.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Verb::SweepBandwidth => {
            let bandwidths = sweep_values(&scenario.sweep.bandwidths, scenario.signal.bandwidth);
            let result = sweep_bandwidth(&scenario, &bandwidths, &variants, &conditionings)?;
            report_failures(&result, o.verbose);
            write(&result, o.out.as_deref(), o.plot.as_deref(), SweepAxis::Bandwidth)?;
            Ok(ExitCode::SUCCESS)
        }
        Verb::SweepRisSize => {
            let bandwidths = sweep_values(&scenario.sweep.bandwidths, scenario.signal.bandwidth);
            let sides = sweep_values(&scenario.sweep.sides, scenario.side());
            if bandwidths.len() > 1 && o.out.is_none() {
                return Err(CliError::Usage("sweep-ris-size over several bandwidths needs --out".into()));
            }
            for &b in &bandwidths {
                let result = sweep_ris_size(&scenario, &sides, b, &variants, &conditionings)?;
                report_failures(&result, o.verbose);
                let out = o.out.as_deref().map(|p| if bandwidths.len() > 1 { per_bandwidth_path(p, b) } else { p.to_path_buf() });
                let plot = o.plot.as_deref().map(|p| if bandwidths.len() > 1 { per_bandwidth_path(p, b) } else { p.to_path_buf() });
                write(&result, out.as_deref(), plot.as_deref(), SweepAxis::Side)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Verb::Validate => unreachable!("handled above"),
    }
}

fn sweep_values(listed: &[f64], fallback: f64) -> Vec<f64> {
    if listed.is_empty() {
        vec![fallback]
    } else {
        listed.to_vec()
    }
}

fn report_failures(result: &SweepResult, verbose: bool) {
    if result.failures.is_empty() {
        return;
    }
    eprintln!("warning: {} bound(s) could not be computed", result.failures.len());
    if verbose {
        for f in &result.failures {
            eprintln!("  {f}");
        }
    }
}

fn write(result: &SweepResult, out: Option<&Path>, plot: Option<&Path>, axis: SweepAxis) -> Result<()> {
    match out {
        Some(path) => {
            emit_csv(result, path)?;
            if let Some(script) = plot {
                emit_plot_script(result, path, script, axis)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(result, &mut lock)?;
            lock.flush().map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    Ok(())
}
