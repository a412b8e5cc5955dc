use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flatqst::config::{Opts, RunConfig, DEFAULT_SAMPLES};
use flatqst::ensemble::{run_ensemble, summarize, sweep_w, Execution, Observable};
use flatqst::output::{self, Params};
use flatqst::validate::{self, run_validation, ValidateOptions};
use flatqst::Error;
use flatqst_core::dynamics::{transfer_trace, TimeGrid};
use flatqst_core::lattice::{ChainSpec, DisorderSpec};
use flatqst_core::realization::{Realization, RealizationRecord, RunOptions};
use flatqst_core::spectral::ZERO_MODE_TOL;
use flatqst_core::stats::fraction_above;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Quantum-state transfer through the flat band of a disordered diamond chain.
#[derive(Debug, Parser)]
#[command(name = "flatqst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// |f_R(t)|, fidelity and envelope for one realization -> trace.csv
    Trace,
    /// Maximum fidelity per realization -> scan.csv
    Scan,
    /// Per-realization records and summary -> records.csv, summary.json
    Ensemble,
    /// Ensemble means and MADs over a list of W -> sweep.csv, sweep.json
    Sweep,
    /// Check the numerical invariants on fresh random samples
    Validate {
        /// Tolerance for the invariant checks
        #[arg(long, default_value_t = validate::DEFAULT_TOL)]
        tol: f64,
        /// Corrupt the channel matrix before the symmetry check (test hook)
        #[arg(long)]
        inject_asymmetry: bool,
    },
}

enum Failure {
    Usage(String),
    Validation,
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        use flatqst_core::Error as Core;
        match e {
            Error::Core(Core::InvalidParameter(_) | Core::DisorderTooWide(_) | Core::InvalidBins(_)) => {
                Failure::Usage(e.to_string())
            }
            Error::Core(_) => Failure::Numerical(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<flatqst_core::Error> for Failure {
    fn from(e: flatqst_core::Error) -> Self {
        Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION),
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = cli.opts.load()?.resolve()?;
    let spec = ChainSpec::new(cfg.cells, cfg.j, cfg.g)?;
    if let Some(ratio) = spec.weak_coupling_violation() {
        eprintln!("warning: gN/J = {ratio} exceeds 0.5; the flat-band picture assumes g ≪ J/N");
    }
    match cli.command {
        Command::Trace => trace(&cfg, &spec),
        Command::Scan => scan(&cfg, &spec),
        Command::Ensemble => ensemble(&cfg, &spec),
        Command::Sweep => sweep(&cfg, &spec),
        Command::Validate { tol, inject_asymmetry } => {
            let dis = DisorderSpec::new(cfg.width()?, cfg.kind, cfg.seed)?;
            let opts = ValidateOptions {
                tol,
                samples: cfg.samples.unwrap_or(validate::DEFAULT_SAMPLES),
                inject_asymmetry,
            };
            let checks = run_validation(&spec, &dis, &opts);
            for c in &checks {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                print!("{verdict} {:<22} worst={:e} threshold={:e}", c.name, c.worst, c.threshold);
                if !c.passed() {
                    print!(" failures={}", c.failures);
                }
                match &c.note {
                    Some(note) => println!(" ({note})"),
                    None => println!(),
                }
            }
            if checks.iter().all(|c| c.passed()) {
                Ok(())
            } else {
                let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
                eprintln!("failing invariants: {}", failed.join(", "));
                Err(Failure::Validation)
            }
        }
    }
}

fn create(cfg: &RunConfig, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Failure::Usage(format!("{}: {e}", cfg.out.display())))?;
    let path = cfg.out.join(name);
    let f = File::create(&path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn run_options(cfg: &RunConfig, scan_fidelity: bool) -> RunOptions {
    RunOptions {
        zero_mode_tol: ZERO_MODE_TOL,
        window: Some(cfg.window),
        points_per_period: cfg.points_per_period,
        scan_fidelity,
    }
}

fn params(cfg: &RunConfig, width: f64, samples: u64) -> Params {
    Params {
        cells: cfg.cells,
        j: cfg.j,
        g: cfg.g,
        width,
        dist: cfg.dist_name().into(),
        seed: cfg.seed,
        samples,
        window: cfg.window,
        bins: cfg.bins_label(),
    }
}

fn numerical_failures(records: &[RealizationRecord]) -> Result<(), Failure> {
    let failed = records.iter().filter(|r| r.flags.numerical_failure).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} of {} realizations failed", records.len())));
    }
    Ok(())
}

fn trace(cfg: &RunConfig, spec: &ChainSpec) -> Result<(), Failure> {
    let dis = DisorderSpec::new(cfg.width()?, cfg.kind, cfg.seed)?;
    let r = Realization::sample(spec, &dis, cfg.index, ZERO_MODE_TOL)?;
    let sol = &r.solution;
    let (s, rr) = r.ends();
    let grid = TimeGrid::resolving(r.full.max_abs_eigenvalue(), cfg.window, cfg.points_per_period);
    let trace = transfer_trace(&r.full, s, rr, sol, grid);
    output::write_trace(create(cfg, "trace.csv")?, &trace)?;

    println!("tau = {}", sol.tau);
    println!("deltaEps = {}", sol.delta_eps);
    println!("Csr = {}", r.summary.csr);
    if sol.no_transfer {
        println!("no-transfer");
    }
    if let Some(d) = r.doublets {
        if sol.delta_eps == 0.0 {
            println!("deltaEps_full = {} (effective doublet is degenerate)", d.delta_eps);
        } else {
            let rel = (d.delta_eps - sol.delta_eps).abs() / sol.delta_eps;
            if rel > 0.01 {
                println!("deltaEps_full = {} (differs from the effective value by {:.1}%)", d.delta_eps, 100.0 * rel);
            }
        }
    }
    write_done(&cfg.out.join("trace.csv"));
    Ok(())
}

fn scan(cfg: &RunConfig, spec: &ChainSpec) -> Result<(), Failure> {
    let dis = DisorderSpec::new(cfg.width()?, cfg.kind, cfg.seed)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let records = run_ensemble(spec, &dis, samples, &run_options(cfg, true), Execution::with_threads(cfg.threads))?;
    output::write_scan(create(cfg, "scan.csv")?, &records)?;
    let f: Vec<f64> = records.iter().map(|r| r.fmax).collect();
    if let Some(m) = flatqst_core::stats::moments(f.iter().copied()) {
        println!("Fmax mean = {} mad = {} (n = {})", m.mean, m.mad, m.count);
        println!("fraction above 2/3 = {}", fraction_above(&f, 2.0 / 3.0));
    }
    write_done(&cfg.out.join("scan.csv"));
    numerical_failures(&records)
}

fn ensemble(cfg: &RunConfig, spec: &ChainSpec) -> Result<(), Failure> {
    let width = cfg.width()?;
    let dis = DisorderSpec::new(width, cfg.kind, cfg.seed)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let histogrammed = cfg.observables.clone().unwrap_or_else(|| Observable::ALL.to_vec());
    let scan = histogrammed.iter().any(|o| o.needs_scan());
    let records = run_ensemble(spec, &dis, samples, &run_options(cfg, scan), Execution::with_threads(cfg.threads))?;
    let stats = summarize(&records, &histogrammed, &cfg.bins)?;
    output::write_records(create(cfg, "records.csv")?, &records)?;
    output::write_json(create(cfg, "summary.json")?, &output::summary_json(&params(cfg, width, samples), &stats))?;

    println!("count = {} flagged = {} failed = {}", stats.count, stats.flagged, stats.failed);
    for o in &histogrammed {
        if let Some(m) = stats.moments(o.name()) {
            println!("{o}: mean = {} mad = {}", m.mean, m.mad);
        }
    }
    write_done(&cfg.out.join("records.csv"));
    numerical_failures(&records)
}

fn sweep(cfg: &RunConfig, spec: &ChainSpec) -> Result<(), Failure> {
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let observables = cfg.observables.clone().unwrap_or_else(|| Observable::SWEEP_DEFAULT.to_vec());
    let scan = observables.iter().any(|o| o.needs_scan());
    let points = sweep_w(
        spec,
        &cfg.widths,
        cfg.kind,
        cfg.seed,
        samples,
        &run_options(cfg, scan),
        &observables,
        &cfg.bins,
        Execution::with_threads(cfg.threads),
    )?;
    output::write_sweep(create(cfg, "sweep.csv")?, spec.cells, &points, &observables)?;
    output::write_json(create(cfg, "sweep.json")?, &output::sweep_json(&params(cfg, f64::NAN, samples), &points))?;
    for p in &points {
        print!("W = {}", p.width);
        for o in &observables {
            if let Some(m) = p.stats.moments(o.name()) {
                print!("  {o} = {:.4} ± {:.4}", m.mean, m.mad);
            }
        }
        println!();
    }
    write_done(&cfg.out.join("sweep.csv"));
    let failed: usize = points.iter().map(|p| p.stats.failed).sum();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} realizations failed")));
    }
    Ok(())
}

fn write_done(path: &Path) {
    eprintln!("wrote {}", path.display());
}
