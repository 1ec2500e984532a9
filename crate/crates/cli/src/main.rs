use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anchored_langevin::error::Error;
use anchored_langevin::experiments::{
    checks, emit_results, format_float, laplace_table_csv, run_experiment, ExperimentResult, ExperimentSpec,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alang", version, about = "Anchored Langevin experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments in a spec file and write their results.
    Run {
        spec: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override the seed of every experiment in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a suite and write the iterations-to-threshold table.
    Table {
        suite: PathBuf,
        #[arg(long, default_value = "table")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the fast identity and estimator checks.
    Check {
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '.' {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn run_dir(base: &Path, i: usize, spec: &ExperimentSpec, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let mu = spec.mu.map(|m| format!("-mu{m}")).unwrap_or_default();
    base.join(format!("{i:03}-{}-{}{mu}-eta{}", spec.kind, slug(&spec.row_label()), spec.eta))
}

fn load(path: &Path, seed: Option<u64>) -> Result<Vec<ExperimentSpec>, Error> {
    let mut specs = ExperimentSpec::load(path)?;
    if let Some(s) = seed {
        specs.iter_mut().for_each(|spec| spec.seed = s);
    }
    Ok(specs)
}

fn run_all(specs: &[ExperimentSpec], out: &Path) -> Result<Vec<ExperimentResult>, Error> {
    let mut results = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        log::info!("running {} / {} (eta = {}, mu = {:?})", spec.kind, spec.row_label(), spec.eta, spec.mu);
        let res = run_experiment(spec)?;
        let dir = run_dir(out, i, spec, specs.len());
        emit_results(&res, &dir)?;
        let thr = res.iterations_to_threshold.map(|v| format!(", iterations to threshold {}", format_float(v)));
        println!(
            "{}: final {} {} in {:.1}s{} -> {}",
            spec.row_label(),
            res.primary().name,
            format_float(res.final_metric()),
            res.wall_seconds,
            thr.unwrap_or_default(),
            dir.display()
        );
        results.push(res);
    }
    Ok(results)
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let threads = match &cli.command {
        Command::Run { threads, .. } | Command::Table { threads, .. } | Command::Check { threads } => *threads,
    };
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match cli.command {
        Command::Run { spec, out, seed, .. } => {
            let specs = load(&spec, seed)?;
            run_all(&specs, &out)?;
            Ok(true)
        }
        Command::Table { suite, out, seed, .. } => {
            let specs = load(&suite, seed)?;
            if let Some(bad) = specs.iter().find(|s| s.threshold.is_none()) {
                return Err(Error::Spec(format!("suite entry {} has no threshold", bad.row_label())));
            }
            let results = run_all(&specs, &out.join("runs"))?;
            let table = laplace_table_csv(&results);
            let path = out.join("table.csv");
            std::fs::write(&path, &table).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            print!("{table}");
            Ok(true)
        }
        Command::Check { .. } => {
            let outcomes = checks::run_checks()?;
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_spec() {
                2
            } else if e.is_numeric() {
                3
            } else {
                1
            })
        }
    }
}
