//! `rsosim` command-line interface.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{parse_population, ConfigError, FileConfig};
use output::{ConditionSummary, RunManifest};
use rsosim_core::sim::{find_flip, run_experiment, worked_example, ExperimentKind, Metric};
use rsosim_core::{MethodId, MethodSpec, TestId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCOMPLETE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rsosim", version, about = "Monte Carlo study of outlier correction on samples without contamination")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment matrix and write the results CSV plus a manifest.
    Run(RunArgs),
    /// Dump one annotated sample pair with before/after p-values as JSON.
    Example(ExampleArgs),
    /// Spread of the plain Type I estimate against the number of sampled pairs.
    Calibrate(RunArgs),
    /// List outlier methods and statistical tests.
    ListMethods,
    /// List experiment kinds.
    ListExperiments,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML experiment matrix.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Experiment kind: filters the config, or selects a preset without one.
    #[arg(long, value_name = "NAME")]
    pub experiment: Option<String>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Replicates per condition (repetitions per sampling count for `calibrate`).
    #[arg(long, value_name = "N")]
    pub reps: Option<usize>,
    #[arg(long, value_name = "PATH", default_value = "results.csv")]
    pub out: PathBuf,
    /// Worker threads; defaults to the available cores.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ExampleArgs {
    /// Method label, e.g. `sigma2`, `mad:3`, `winsorize:0.1`.
    #[arg(long, default_value = "sigma2")]
    pub method: String,
    #[arg(long, default_value = "normal")]
    pub distribution: String,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
    /// Try this many seeds from `--seed` and print the first one where
    /// correction turns a non-significant comparison significant.
    #[arg(long, value_name = "N")]
    pub scan: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(args) => run(&args, false),
        Command::Calibrate(args) => run(&args, true),
        Command::Example(args) => example(&args),
        Command::ListMethods => {
            print!("{}", list_methods());
            EXIT_OK
        }
        Command::ListExperiments => {
            print!("{}", list_experiments());
            EXIT_OK
        }
    }
}

pub fn list_methods() -> String {
    let mut s = String::from("methods:\n");
    for id in MethodId::ALL {
        s += &format!("  {:<12} {}\n", id.as_str(), id.description());
    }
    s += "  parameters: mad:<threshold> (default 2.24), winsorize:<limit per tail> (0.05), grubbs:<alpha> (0.05), <sigma method>:n for the n divisor\n";
    s += "tests:\n";
    for id in [TestId::Ttest, TestId::MannWhitney, TestId::Permutation] {
        s += &format!("  {:<12} {}\n", id.as_str(), id.description());
    }
    s += "  parameters: permutation:<count> (default 600)\n";
    s
}

pub fn list_experiments() -> String {
    let mut s = String::new();
    for kind in ExperimentKind::ALL {
        let selection = if kind.selects_by_default() { "selected" } else { "all" };
        s += &format!(
            "{:<20} reps={:<7} samples={:<9} {}\n",
            kind.as_str(),
            kind.default_reps(),
            selection,
            kind.description()
        );
    }
    s
}

fn load(args: &RunArgs, calibrate: bool) -> Result<FileConfig, ConfigError> {
    let requested = match &args.experiment {
        Some(name) => Some(
            name.parse::<ExperimentKind>()
                .map_err(|e| ConfigError { key: "--experiment".into(), message: e.to_string() })?,
        ),
        None => None,
    };
    let kind = if calibrate {
        if requested.is_some_and(|k| k != ExperimentKind::CalibrateSampling) {
            return Err(ConfigError {
                key: "--experiment".into(),
                message: "calibrate only runs calibrate_sampling".into(),
            });
        }
        Some(ExperimentKind::CalibrateSampling)
    } else {
        requested
    };
    let mut file = match (&args.config, kind) {
        (Some(path), _) => FileConfig::load(path)?,
        (None, Some(kind)) => FileConfig::preset(kind),
        (None, None) => {
            return Err(ConfigError {
                key: String::new(),
                message: "run needs --config PATH or --experiment NAME".into(),
            })
        }
    };
    if let Some(kind) = kind {
        file.retain_kind(kind);
        if file.experiments.is_empty() {
            return Err(ConfigError {
                key: "--experiment".into(),
                message: format!("no [[experiment]] block of kind {kind}"),
            });
        }
    }
    if let Some(seed) = args.seed {
        file.set_seed(seed);
    }
    if let Some(reps) = args.reps {
        if calibrate {
            for block in &mut file.experiments {
                block.calibration.get_or_insert_with(Default::default).repetitions = Some(reps);
            }
        } else {
            file.set_reps(reps);
        }
    }
    Ok(file)
}

/// `results.csv` -> `results.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn run(args: &RunArgs, calibrate: bool) -> i32 {
    let file = match load(args, calibrate) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let configs = match file.expand() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if jobs == 0 {
        eprintln!("config error: --jobs: must be at least 1");
        return EXIT_CONFIG;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {jobs} workers: {e}");
            return EXIT_FAILURE;
        }
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return EXIT_FAILURE;
        }
    }
    let mut csv_out = match csv::Writer::from_path(&args.out) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", args.out.display());
            return EXIT_FAILURE;
        }
    };

    let started = output::now();
    let mut conditions = Vec::new();
    let mut status = "complete";
    let mut table = String::new();
    let result = (|| -> Result<(), String> {
        csv_out.write_record(output::CSV_HEADER).map_err(|e| e.to_string())?;
        for (i, cfg) in configs.iter().enumerate() {
            eprintln!(
                "[{}/{}] {} {} n={}",
                i + 1,
                configs.len(),
                cfg.experiment,
                cfg.distribution.kind.label(),
                cfg.n
            );
            let mut summary = ConditionSummary {
                experiment: cfg.experiment.as_str().into(),
                distribution: cfg.distribution.kind.label().into(),
                n: cfg.n,
                rows: 0,
                incomplete: Vec::new(),
                error: None,
            };
            match pool.install(|| run_experiment(cfg)) {
                Ok(report) => {
                    summary.rows = output::write_report(&mut csv_out, &report).map_err(|e| e.to_string())?;
                    for m in &report.incomplete {
                        if m.attempts == 0 {
                            eprintln!("warning: {} cannot flag any sample of n={}; skipped", m.method, cfg.n);
                        } else {
                            eprintln!(
                                "warning: {} stopped after {} draws with {}/{} selected replicates",
                                m.method, m.attempts, m.accepted, m.requested
                            );
                        }
                    }
                    if !report.is_complete() {
                        status = "incomplete";
                    }
                    summary.incomplete = report.incomplete.clone();
                    if calibrate {
                        table += &calibration_table(&report);
                    }
                    conditions.push(summary);
                }
                Err(e) => {
                    summary.error = Some(e.to_string());
                    conditions.push(summary);
                    return Err(e.to_string());
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = &result {
        eprintln!("error: {e}");
        status = "failed";
    }

    let manifest = RunManifest {
        tool: "rsosim",
        version: env!("CARGO_PKG_VERSION"),
        command: if calibrate { "calibrate" } else { "run" }.into(),
        started,
        finished: output::now(),
        master_seed: file.seed,
        jobs,
        results: args.out.display().to_string(),
        status,
        config_toml: file.to_toml(),
        conditions,
    };
    let path = manifest_path(&args.out);
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(|e| e.to_string())
        .and_then(|json| std::fs::write(&path, json + "\n").map_err(|e| e.to_string()));
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_FAILURE;
    }
    if calibrate {
        print!("{table}");
    }
    match status {
        "complete" => EXIT_OK,
        "incomplete" => EXIT_INCOMPLETE,
        _ => EXIT_FAILURE,
    }
}

fn calibration_table(report: &rsosim_core::sim::ExperimentReport) -> String {
    let mut s = format!(
        "{} n={}\n{:>10} {:>10} {:>10} {:>12}\n",
        report.config.distribution.kind.label(),
        report.config.n,
        "pairs",
        "mean %",
        "sd %",
        "in [4.6,5.4]"
    );
    let means = report.measurements.iter().filter(|m| m.metric == Metric::Type1Mean);
    let sds = report.measurements.iter().filter(|m| m.metric == Metric::Type1Sd);
    let bands = report.measurements.iter().filter(|m| m.metric == Metric::WithinBand);
    for ((mean, sd), band) in means.zip(sds).zip(bands) {
        s += &format!(
            "{:>10} {:>10.3} {:>10.3} {:>12.2}\n",
            mean.reps,
            100.0 * mean.value,
            100.0 * sd.value,
            band.value
        );
    }
    s
}

fn example(args: &ExampleArgs) -> i32 {
    let parsed = args
        .method
        .parse::<MethodSpec>()
        .map_err(|e| ConfigError { key: "--method".into(), message: e.to_string() })
        .and_then(|m| parse_population(&args.distribution).map(|p| (m, p)));
    let (method, population) = match parsed {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let found = match args.scan {
        Some(count) => find_flip(&method, &population, args.n, args.seed, count),
        None => worked_example(&method, &population, args.n, args.seed).map(Some),
    };
    let ex = match found {
        Ok(Some(ex)) => ex,
        Ok(None) => {
            eprintln!("no flipping pair among {} seeds", args.scan.unwrap_or(0));
            return EXIT_INCOMPLETE;
        }
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let json = serde_json::to_string_pretty(&ex).expect("example serializes") + "\n";
    let written = match &args.out {
        Some(path) => std::fs::write(path, json),
        None => std::io::stdout().write_all(json.as_bytes()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

