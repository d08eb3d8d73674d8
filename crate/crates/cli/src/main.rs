//! `sbl`: synthetic problems, solver runs, criterion verification and figure data.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbl_core::harness::bench::bench;
use sbl_core::harness::datagen::{generate, DictionaryKind, SyntheticSpec};
use sbl_core::harness::figures::{self, Table, DEFAULT_CASES};
use sbl_core::harness::io::{self, ProblemMeta};
use sbl_core::harness::record::run;
use sbl_core::harness::verify::{verify, VerifyConfig};
use sbl_core::harness::HarnessError;
use sbl_core::quadrature::QuadratureError;
use sbl_core::solver::{SolverConfig, SolverError, SweepOrder};
use sbl_core::{QuadratureSpec, ScaleFamilyPrior};

/// Largest tolerated decrease of the log evidence in one update at `kappa <= 1`.
const MONOTONE_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "sbl",
    version,
    about = "Sparse Bayesian learning with executable pruning criteria"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for data generation, section sampling and the solver.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Relative tolerance of the adaptive quadrature.
    #[arg(long, global = true)]
    quad_rel_tol: Option<f64>,

    /// Panel budget of the adaptive quadrature.
    #[arg(long, global = true)]
    quad_max_subdiv: Option<usize>,

    /// Pruning threshold: a column is kept when mu^2 > kappa sigma^2.
    #[arg(long, global = true)]
    kappa: Option<f64>,

    /// Output file (or directory for `generate` and multi-case figures).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a stored or freshly generated problem and write its run record.
    Solve {
        /// Directory written by `generate`; otherwise a problem is generated from the spec flags.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Check the pruning criteria against the numeric maximizer on random sections.
    Verify {
        #[arg(long, default_value_t = 1000)]
        n_sections: usize,
        /// Extra sections with mu = sigma exactly.
        #[arg(long, default_value_t = 0)]
        boundary_cases: usize,
    },
    /// Section, tangent and remainders on [-4, 4].
    Figure1 {
        #[arg(long, requires = "sigma2")]
        mu: Option<f64>,
        #[arg(long, requires = "mu")]
        sigma2: Option<f64>,
    },
    /// Section, tangent and prior densities at two precisions on [-4, 4].
    Figure2 {
        #[arg(long, requires = "sigma2")]
        mu: Option<f64>,
        #[arg(long, requires = "mu")]
        sigma2: Option<f64>,
        /// Two increasing precisions; defaults to the 99% mass rule on [-1/2, 1/2].
        #[arg(long, num_args = 2, value_names = ["GAMMA1", "GAMMA2"])]
        gammas: Option<Vec<f64>>,
        /// Prior as JSON, e.g. '{"family": "student_t", "dof": 5.0}'.
        #[arg(long, value_parser = parse_prior, default_value = r#"{"family":"gaussian"}"#)]
        prior: ScaleFamilyPrior,
    },
    /// Write a synthetic problem to the `--out` directory.
    Generate {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Repeated planted-recovery trials with seeds seed, seed + 1, ...
    Bench {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DictionaryArg {
    GaussianIid,
    DctOvercomplete,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepOrderArg {
    Cyclic,
    LargestGain,
}

#[derive(Args)]
struct SpecArgs {
    /// JSON synthetic spec; the flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, conflicts_with = "noiseless")]
    snr_db: Option<f64>,
    #[arg(long)]
    noiseless: bool,
    #[arg(long, value_enum)]
    dictionary: Option<DictionaryArg>,
    /// Weight prior as JSON.
    #[arg(long, value_parser = parse_prior)]
    weight_prior: Option<ScaleFamilyPrior>,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON solver config; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    evidence_rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    sweep_order: Option<SweepOrderArg>,
}

fn parse_prior(s: &str) -> Result<ScaleFamilyPrior, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum CliError {
    /// Bad flags, files or values.
    Input(String),
    /// A run finished but broke an invariant it is expected to keep.
    Violation(String),
    /// A numerical failure during an otherwise valid run.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Violation(_) | Self::Runtime(_) => 1,
            Self::Input(_) => 2,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        let msg = e.to_string();
        match e {
            HarnessError::Io { .. }
            | HarnessError::Parse { .. }
            | HarnessError::Json { .. }
            | HarnessError::Spec(_)
            | HarnessError::Prior(_)
            | HarnessError::Quadrature(QuadratureError::InvalidSpec(_))
            | HarnessError::Solver(SolverError::InvalidConfig(_)) => Self::Input(msg),
            _ => Self::Runtime(msg),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        HarnessError::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Input(m) => ("input error", m),
                CliError::Violation(m) => ("invariant violation", m),
                CliError::Runtime(m) => ("error", m),
            };
            eprintln!("sbl: {kind}: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve {
            problem,
            spec,
            config,
        } => cmd_solve(cli, problem.as_deref(), spec, config),
        Command::Verify {
            n_sections,
            boundary_cases,
        } => cmd_verify(cli, *n_sections, *boundary_cases),
        Command::Figure1 { mu, sigma2 } => {
            cmd_figure(cli, "figure1", case_list(*mu, *sigma2), |mu, s2| {
                figures::figure1(mu, s2)
            })
        }
        Command::Figure2 {
            mu,
            sigma2,
            gammas,
            prior,
        } => {
            let gammas = match gammas.as_deref() {
                Some([g1, g2]) => (*g1, *g2),
                Some(_) => return Err(CliError::Input("--gammas takes two values".into())),
                None => figures::default_figure2_gammas(prior)?,
            };
            cmd_figure(cli, "figure2", case_list(*mu, *sigma2), |mu, s2| {
                figures::figure2(mu, s2, gammas, prior)
            })
        }
        Command::Generate { spec } => cmd_generate(cli, spec),
        Command::Bench {
            trials,
            spec,
            config,
        } => cmd_bench(cli, *trials, spec, config),
    }
}

fn quadrature_spec(cli: &Cli) -> Result<QuadratureSpec, CliError> {
    let mut q = QuadratureSpec::default();
    if let Some(t) = cli.quad_rel_tol {
        q.rel_tol = t;
    }
    if let Some(n) = cli.quad_max_subdiv {
        q.max_subdivisions = n;
    }
    q.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(q)
}

fn synthetic_spec(cli: &Cli, args: &SpecArgs) -> Result<SyntheticSpec, CliError> {
    let mut spec: SyntheticSpec = match &args.spec {
        Some(path) => io::read_json(path)?,
        None => SyntheticSpec::default(),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(m) = args.m {
        spec.m = m;
    }
    if let Some(k) = args.k {
        spec.k = k;
    }
    if args.noiseless {
        spec.snr_db = None;
    } else if let Some(snr) = args.snr_db {
        spec.snr_db = Some(snr);
    }
    if let Some(d) = args.dictionary {
        spec.dictionary_kind = match d {
            DictionaryArg::GaussianIid => DictionaryKind::GaussianIid,
            DictionaryArg::DctOvercomplete => DictionaryKind::DctOvercomplete,
        };
    }
    if let Some(p) = args.weight_prior {
        spec.weight_prior = p;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn solver_config(cli: &Cli, args: &ConfigArgs) -> Result<SolverConfig, CliError> {
    let mut config: SolverConfig = match &args.config {
        Some(path) => io::read_json(path)?,
        None => SolverConfig::default(),
    };
    if let Some(k) = cli.kappa {
        config.kappa = k;
    }
    if let Some(s) = args.max_sweeps {
        config.max_sweeps = s;
    }
    if let Some(t) = args.evidence_rel_tol {
        config.evidence_rel_tol = t;
    }
    if let Some(o) = args.sweep_order {
        config.sweep_order = match o {
            SweepOrderArg::Cyclic => SweepOrder::Cyclic,
            SweepOrderArg::LargestGain => SweepOrder::LargestGain,
        };
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(config)
}

/// Updates maximize their section only at `kappa <= 1`; larger thresholds
/// prune columns with a finite maximizer and may lower the evidence.
fn check_monotone(config: &SolverConfig, min_delta: f64) -> Result<(), CliError> {
    if config.kappa <= 1.0 && min_delta < -MONOTONE_TOL {
        return Err(CliError::Violation(format!(
            "log evidence decreased by {:e} in one update",
            -min_delta
        )));
    }
    Ok(())
}

fn format_support(support: &[usize]) -> String {
    let items: Vec<String> = support.iter().map(usize::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn cmd_solve(
    cli: &Cli,
    problem_dir: Option<&Path>,
    spec: &SpecArgs,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let config = solver_config(cli, config)?;
    let record = match problem_dir {
        Some(dir) => {
            let (problem, meta) = io::read_problem(dir)?;
            run(&problem, &config, meta.spec.as_ref(), meta.planted.as_ref())?
        }
        None => {
            let spec = synthetic_spec(cli, spec)?;
            let (problem, planted) = generate(&spec)?;
            run(&problem, &config, Some(&spec), Some(&planted))?
        }
    };
    if let Some(out) = &cli.out {
        io::write_json(out, &record)?;
    }
    println!("support: {}", format_support(&record.recovered_support));
    if !record.planted_support.is_empty() {
        println!("planted: {}", format_support(&record.planted_support));
    }
    match record.nmse {
        Some(v) => println!("nmse: {v:e}"),
        None => println!("nmse: n/a"),
    }
    println!(
        "sweeps: {} (converged: {})",
        record.sweeps, record.converged
    );
    println!("log evidence: {}", record.log_evidence);
    check_monotone(&config, record.min_update_delta)
}

fn cmd_verify(cli: &Cli, n_sections: usize, boundary_cases: usize) -> Result<(), CliError> {
    let mut config = VerifyConfig {
        n_sections,
        boundary_cases,
        quadrature: quadrature_spec(cli)?,
        ..Default::default()
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(k) = cli.kappa {
        config.kappa = k;
    }
    let report = verify(&config)?;
    match &cli.out {
        Some(out) => io::write_json(out, &report)?,
        None => {
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{text}");
        }
    }
    eprintln!(
        "sections: {}, boundary: {}, violations: {}",
        report.sections.len(),
        report.boundary.len(),
        report.violations.len()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Violation(format!(
            "violations at sections {:?}",
            report.violations
        )))
    }
}

fn case_list(mu: Option<f64>, sigma2: Option<f64>) -> Vec<(f64, f64)> {
    match (mu, sigma2) {
        (Some(mu), Some(s2)) => vec![(mu, s2)],
        _ => DEFAULT_CASES.to_vec(),
    }
}

/// One case goes to `--out` (or stdout); several go to `<out>/<name>_mu<mu>_sigma2_<s2>.csv`.
fn cmd_figure<F>(cli: &Cli, name: &str, cases: Vec<(f64, f64)>, make: F) -> Result<(), CliError>
where
    F: Fn(f64, f64) -> Result<Table, HarnessError>,
{
    if let [(mu, s2)] = cases[..] {
        let table = make(mu, s2)?;
        return match &cli.out {
            Some(out) => Ok(io::write_rows(out, Some(&table.header), table.rows)?),
            None => write_table_stdout(&table),
        };
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| {
        CliError::from(HarnessError::Io {
            path: dir.clone(),
            source: e,
        })
    })?;
    for (mu, s2) in cases {
        let table = make(mu, s2)?;
        let path = dir.join(format!("{name}_mu{mu}_sigma2_{s2}.csv"));
        io::write_rows(&path, Some(&table.header), table.rows)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn write_table_stdout(table: &Table) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    let mut emit = || -> std::io::Result<()> {
        writeln!(out, "{}", table.header.join(","))?;
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(|&v| io::format_number(v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    };
    match emit() {
        // reader closed early, e.g. `| head`
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn cmd_generate(cli: &Cli, args: &SpecArgs) -> Result<(), CliError> {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| CliError::Input("generate needs --out <dir>".into()))?;
    let spec = synthetic_spec(cli, args)?;
    let (problem, planted) = generate(&spec)?;
    let meta = ProblemMeta {
        noise_precision: problem.noise_precision(),
        rows: problem.rows(),
        columns: problem.columns(),
        spec: Some(spec),
        planted: Some(planted.clone()),
    };
    io::write_problem(out, &problem, &meta)?;
    println!(
        "wrote {} ({} x {}, support {})",
        out.display(),
        problem.rows(),
        problem.columns(),
        format_support(&planted.support)
    );
    Ok(())
}

fn cmd_bench(
    cli: &Cli,
    trials: usize,
    spec: &SpecArgs,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let spec = synthetic_spec(cli, spec)?;
    let config = solver_config(cli, config)?;
    let report = bench(&spec, &config, trials)?;
    if let Some(out) = &cli.out {
        io::write_json(out, &report)?;
    }
    let s = &report.summary;
    println!("trials: {}", s.trials);
    println!("exact recoveries: {}", s.exact_recoveries);
    println!("converged: {}", s.converged);
    println!("median nmse: {:e}", s.median_nmse);
    println!("mean sweeps: {:.1}", s.mean_sweeps);
    println!("min update delta: {:e}", s.min_update_delta);
    println!("wall time: {:.2} s", s.total_wall_time_s);
    for r in &report.records {
        check_monotone(&config, r.min_update_delta)?;
    }
    Ok(())
}
