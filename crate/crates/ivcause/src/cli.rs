//! Command-line front end.
//!
//! Exit codes are shared by every subcommand: 0 success, 1 computation
//! failure, 2 I/O failure, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ivcause_core::estimators::{
    iv_just_identified_with, ols_adj_with, ols_with, tsls_with, DiagValue, FitOptions, Method,
};
use ivcause_core::ivsearch::{evaluate_all, sweep, threshold_grid, SearchCriteria, Thresholds};
use ivcause_core::simulate::{generate, planted_instrument_fixture, DgpConfig, REPLICATE_METHODS};
use ivcause_core::{CorrelationReport, Dataset};

use crate::io::{load_table_path, write_table_path, TableError};
use crate::{parallel, report, svg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) => EXIT_COMPUTE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Compute(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ivcause_core::Error> for CliError {
    fn from(e: ivcause_core::Error) -> Self {
        match e {
            ivcause_core::Error::UnknownVariable(_) => CliError::Usage(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Compute(format!("invalid input table: {other}")),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "ivcause",
    version,
    about = "Average treatment effects under unmeasured confounding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo comparison of the OLS, OLS+adj, IV and IV+adj estimators.
    Simulate(SimulateArgs),
    /// Write one simulated dataset as CSV.
    Generate(GenerateArgs),
    /// Estimate the treatment effect on a CSV table.
    Estimate(EstimateArgs),
    /// Screen a table for instrument/confounder pairs.
    Search(SearchArgs),
    /// Pearson or partial correlation with a Fisher-z interval.
    Corr(CorrArgs),
}

#[derive(Debug, Args)]
pub struct DgpArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta_ya: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta_yu: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha_az: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_au: f64,
    #[arg(long, default_value_t = 2.938)]
    pub sigma_a: f64,
    #[arg(long, default_value_t = 3.045)]
    pub sigma_y: f64,
}

impl DgpArgs {
    fn config(&self, seed: u64) -> DgpConfig {
        DgpConfig {
            beta_ya: self.beta_ya,
            beta_yu: self.beta_yu,
            alpha_az: self.alpha_az,
            alpha_au: self.alpha_au,
            sigma_a: self.sigma_a,
            sigma_y: self.sigma_y,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of Monte Carlo replicates.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Sample size of each replicate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(10..))]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write boxplot.svg.
    #[arg(long)]
    pub svg: bool,
    /// Worker threads (0 = automatic). Overrides IV_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub dgp: DgpArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureKind {
    /// Columns z, u, a, y from the structural simulation.
    Dgp,
    /// 22-variable screening table with one valid instrument.
    Planted,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FixtureKind::Dgp)]
    pub kind: FixtureKind,
    #[command(flatten)]
    pub dgp: DgpArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub treatment: String,
    #[arg(long)]
    pub outcome: String,
    /// Instrument column(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub instrument: Vec<String>,
    /// Measured confounder column(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub confounders: Vec<String>,
    /// Methods to run (ols, ols_adj, iv, tsls, iv_adj); default: all whose roles are given.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Data are already centered; fit without an intercept.
    #[arg(long)]
    pub no_intercept: bool,
    /// Adjust for each confounder separately instead of jointly.
    #[arg(long)]
    pub per_confounder: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub treatment: String,
    #[arg(long)]
    pub outcome: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub confounders: Vec<String>,
    /// Candidate instruments; default: every other column.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub instruments: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.5)]
    pub tau_relevance: f64,
    #[arg(long, default_value_t = 0.4)]
    pub tau_independence: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau_exclusion: f64,
    #[arg(long, value_delimiter = ',')]
    pub sweep_relevance: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_independence: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_exclusion: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Output directory; without it, passing candidates go to stdout as JSON lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Two variables, optionally a third to condition on.
    #[arg(num_args = 2..=3, required = true)]
    pub names: Vec<String>,
    /// Conditioning variable for a partial correlation.
    #[arg(long)]
    pub given: Option<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => run_simulate(&a),
        Command::Generate(a) => run_generate(&a),
        Command::Estimate(a) => run_estimate(&a),
        Command::Search(a) => run_search(&a),
        Command::Corr(a) => run_corr(&a),
    }
}

fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--level must be in (0, 1), got {level}")))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    load_table_path(path).map_err(|e| match e {
        TableError::Io(io) => io_err(path, io),
        other => CliError::Compute(format!("{}: {other}", path.display())),
    })
}

fn require_columns(d: &Dataset, names: &[&String]) -> Result<(), CliError> {
    match names.iter().find(|n| !d.contains(n)) {
        Some(missing) => Err(CliError::Usage(format!("unknown variable `{missing}`"))),
        None => Ok(()),
    }
}

pub fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = args.dgp.config(args.seed);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let threads = match args.threads {
        Some(t) => t,
        None => parallel::threads_from_env().map_err(CliError::Usage)?,
    };
    let table = parallel::monte_carlo(&cfg, args.n as usize, args.reps as usize, threads)?;
    let stats = report::replicate_boxstats(&table);

    ensure_dir(&args.out)?;
    write_file(&args.out.join("replicates.csv"), &report::replicates_csv(&table))?;
    let stats = match stats {
        Ok(s) => s,
        // fewer than five replicates: no box summary
        Err(ivcause_core::Error::InsufficientSample { .. }) => Default::default(),
        Err(e) => return Err(e.into()),
    };
    let json = serde_json::to_string_pretty(&stats).expect("box stats serialize");
    write_file(&args.out.join("boxstats.json"), &(json + "\n"))?;

    if args.svg {
        if stats.is_empty() {
            return Err(CliError::Usage("--svg needs at least 5 replicates".into()));
        }
        let boxes: Vec<(&str, _)> = REPLICATE_METHODS
            .iter()
            .map(|m| (m.as_str(), stats[m.as_str()]))
            .collect();
        write_file(&args.out.join("boxplot.svg"), &svg::boxplot_svg(&boxes, cfg.beta_ya))?;
    }

    let mut out = std::io::stdout().lock();
    for (m, s) in &stats {
        let _ = writeln!(out, "{m:8} median {:.4}  IQR [{:.4}, {:.4}]", s.median, s.q1, s.q3);
    }
    Ok(())
}

pub fn run_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let d = match args.kind {
        FixtureKind::Dgp => {
            let cfg = args.dgp.config(args.seed);
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            generate(&cfg, args.n as usize)?
        }
        FixtureKind::Planted => planted_instrument_fixture(args.seed, args.n as usize)?,
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_table_path(&args.out, &d).map_err(|e| match e {
        TableError::Io(io) => io_err(&args.out, io),
        other => CliError::Compute(other.to_string()),
    })
}

fn default_methods(args: &EstimateArgs) -> Vec<Method> {
    let mut m = vec![Method::Ols];
    if !args.confounders.is_empty() {
        m.push(Method::OlsAdj);
    }
    if !args.instrument.is_empty() {
        m.push(Method::Iv);
        if !args.confounders.is_empty() {
            m.push(Method::IvAdj);
        }
    }
    m
}

pub fn run_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    check_level(args.level)?;
    let methods: Vec<Method> = if args.methods.is_empty() {
        default_methods(args)
    } else {
        args.methods
            .iter()
            .map(|s| s.parse::<Method>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    for m in &methods {
        let needs_instrument = matches!(m, Method::Iv | Method::Tsls | Method::IvAdj);
        let needs_confounders = matches!(m, Method::OlsAdj | Method::IvAdj);
        if needs_instrument && args.instrument.is_empty() {
            return Err(CliError::Usage(format!("method `{m}` needs --instrument")));
        }
        if needs_confounders && args.confounders.is_empty() {
            return Err(CliError::Usage(format!("method `{m}` needs --confounders")));
        }
    }

    let d = load(&args.input)?;
    let roles: Vec<&String> = [&args.treatment, &args.outcome]
        .into_iter()
        .chain(&args.instrument)
        .chain(&args.confounders)
        .collect();
    require_columns(&d, &roles)?;

    let a = d.column(&args.treatment)?;
    let y = d.column(&args.outcome)?;
    let z = d.select(&args.instrument)?;
    let opts = FitOptions {
        intercept: !args.no_intercept,
        level: args.level,
    };

    // confounder sets: all jointly, or one at a time
    let sets: Vec<Vec<String>> = if args.per_confounder {
        args.confounders.iter().map(|c| vec![c.clone()]).collect()
    } else {
        vec![args.confounders.clone()]
    };

    let mut estimates = Vec::new();
    for m in &methods {
        match m {
            Method::Ols => estimates.push(ols_with(a, y, &opts)?),
            Method::Iv if z.len() == 1 => estimates.push(iv_just_identified_with(z[0], a, y, &opts)?),
            Method::Iv | Method::Tsls => estimates.push(tsls_with(&z, a, &[], y, &opts)?),
            Method::OlsAdj | Method::IvAdj => {
                for set in &sets {
                    let u = d.select(set)?;
                    let mut e = if *m == Method::OlsAdj {
                        ols_adj_with(a, &u, y, &opts)?
                    } else {
                        tsls_with(&z, a, &u, y, &opts)?
                    };
                    e.diagnostics
                        .insert("confounders".into(), DiagValue::Text(set.join(",")));
                    estimates.push(e);
                }
            }
        }
    }
    for e in &estimates {
        for (_, w) in e.warnings() {
            eprintln!("warning ({}): {w}", e.method);
        }
    }

    let json = report::estimates_json(&estimates) + "\n";
    match &args.out {
        Some(path) => write_file(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

pub fn run_search(args: &SearchArgs) -> Result<(), CliError> {
    check_level(args.level)?;
    let d = load(&args.input)?;
    let roles: Vec<&String> = [&args.treatment, &args.outcome]
        .into_iter()
        .chain(&args.confounders)
        .collect();
    require_columns(&d, &roles)?;
    let thresholds = Thresholds::new(args.tau_relevance, args.tau_independence, args.tau_exclusion);
    thresholds.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut criteria = match &args.instruments {
        Some(list) => {
            let list: Vec<String> = list.iter().filter(|s| !s.is_empty()).cloned().collect();
            require_columns(&d, &list.iter().collect::<Vec<_>>())?;
            SearchCriteria::new(
                &args.treatment,
                &args.outcome,
                args.confounders.clone(),
                list,
                thresholds,
            )
        }
        None => SearchCriteria::with_default_instruments(
            &d,
            &args.treatment,
            &args.outcome,
            args.confounders.clone(),
            thresholds,
        ),
    };
    criteria.level = args.level;
    if criteria.instrument_pool.is_empty() {
        return Err(CliError::Usage("instrument pool is empty".into()));
    }
    criteria.validate(&d).map_err(|e| CliError::Usage(e.to_string()))?;

    let all = evaluate_all(&d, &criteria)?;
    for w in &all.warnings {
        eprintln!("warning: {w}");
    }
    let passing: Vec<_> = all.candidates.iter().filter(|c| c.passed).cloned().collect();

    let sweeping =
        !(args.sweep_relevance.is_empty() && args.sweep_independence.is_empty() && args.sweep_exclusion.is_empty());
    let cells = if sweeping {
        let pick = |v: &Vec<f64>, default: f64| if v.is_empty() { vec![default] } else { v.clone() };
        let grid = threshold_grid(
            &pick(&args.sweep_relevance, args.tau_relevance),
            &pick(&args.sweep_independence, args.tau_independence),
            &pick(&args.sweep_exclusion, args.tau_exclusion),
        );
        for t in &grid {
            t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Some(sweep(&d, &criteria, &grid)?.0)
    } else {
        None
    };

    match &args.out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join("candidates.jsonl"), &report::candidates_jsonl(&passing))?;
            write_file(&dir.join("candidates.csv"), &report::candidates_csv(&all.candidates))?;
            if let Some(cells) = &cells {
                let json = serde_json::to_string_pretty(cells).expect("sweep serializes") + "\n";
                write_file(&dir.join("sweep.json"), &json)?;
                write_file(&dir.join("sweep.csv"), &report::sweep_csv(cells))?;
            }
            println!(
                "{} of {} instrument/confounder pairs pass (relevance >= {}, independence <= {}, exclusion <= {})",
                passing.len(),
                all.candidates.len(),
                thresholds.relevance,
                thresholds.independence,
                thresholds.exclusion
            );
        }
        None => {
            print!("{}", report::candidates_jsonl(&passing));
            if let Some(cells) = &cells {
                print!("{}", report::sweep_csv(cells));
            }
        }
    }
    Ok(())
}

pub fn run_corr(args: &CorrArgs) -> Result<(), CliError> {
    check_level(args.level)?;
    let (x, y, given) = match (args.names.as_slice(), &args.given) {
        ([x, y], g) => (x, y, g.as_ref()),
        ([x, y, g], None) => (x, y, Some(g)),
        ([_, _, _], Some(_)) => {
            return Err(CliError::Usage(
                "conditioning variable given both positionally and with --given".into(),
            ))
        }
        _ => return Err(CliError::Usage("corr takes two or three variable names".into())),
    };
    let d = load(&args.input)?;
    let mut roles = vec![x, y];
    roles.extend(given);
    require_columns(&d, &roles)?;
    let rep = match given {
        None => CorrelationReport::pearson_named(&d, x, y, args.level)?,
        Some(g) => CorrelationReport::partial_named(&d, x, y, g, args.level)?,
    };
    println!("{}", serde_json::to_string(&rep).expect("report serializes"));
    Ok(())
}
