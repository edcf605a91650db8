use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use reflectlab_core::rational::parse_rational;
use reflectlab_core::verify::summary_csv;
use reflectlab_core::{Error, Result, TestReport, Verdict};

mod config;
mod experiment;

use config::{ExperimentConfig, Kind};
use experiment::Outcome;

const SEED_ENV: &str = "REFLECTLAB_SEED";

#[derive(Parser)]
#[command(name = "reflectlab", version, about = "Reflection experiments on sampled paths")]
struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        law: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        dump_paths: Option<usize>,
    },
    /// Print the level sequence and the ladder times of a few draws.
    Ladder {
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value = "2")]
        b: String,
        /// Number of ladder steps.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        law: Option<String>,
        #[arg(long, default_value_t = 5)]
        paths: u64,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the non-dyadic triple sweep and the digit formula for g.
    Lemmas {
        #[arg(long, default_value_t = 200)]
        range: i64,
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate E[X at T_-2 ^ T_c] under the two-sign counterexample law.
    DemoCounterexample {
        #[arg(long, default_value = "3")]
        c: String,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RunRecord<'a> {
    timestamp: u64,
    config: &'a ExperimentConfig,
    reports: &'a [TestReport],
    verdict: Verdict,
}

fn overall(reports: &[TestReport]) -> Verdict {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn base_config(kind: Kind) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(r#"{{"kind": "{}"}}"#, serde_json::to_value(kind).unwrap().as_str().unwrap()))
        .expect("minimal config is valid")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn paths_csv(config: &ExperimentConfig) -> Result<String> {
    let sampler = reflectlab_core::Sampler::new(config.law()?, config.seed)?;
    let mut out = String::from("path,t,x\n");
    for i in 0..config.dump_paths as u64 {
        let p = sampler.sample(i);
        for (t, x) in p.knots().into_iter().zip(p.knot_values()) {
            let _ = writeln!(out, "{i},{t},{x}");
        }
    }
    Ok(out)
}

fn print_reports(reports: &[TestReport]) {
    for r in reports {
        match r.headline() {
            Some(s) => println!("{}: {} ({} = {}, threshold {})", r.name, r.verdict, s.name, s.value, s.threshold),
            None => println!("{}: {}", r.name, r.verdict),
        }
        for f in r.failures.iter().take(3) {
            println!("  {f}");
        }
    }
}

fn finish(config: &ExperimentConfig, outcome: Outcome) -> Result<Verdict> {
    print!("{}", outcome.text);
    print_reports(&outcome.reports);
    let verdict = overall(&outcome.reports);
    if let Some(dir) = &config.output {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let record = RunRecord {
            timestamp,
            config,
            reports: &outcome.reports,
            verdict,
        };
        let json = serde_json::to_string_pretty(&record).map_err(|e| Error::Config(e.to_string()))?;
        write_file(dir, "report.json", &(json + "\n"))?;
        write_file(dir, "summary.csv", &summary_csv(&outcome.reports))?;
        for (name, table) in &outcome.tables {
            write_file(dir, name, table)?;
        }
        if config.dump_paths > 0 {
            write_file(dir, "paths.csv", &paths_csv(config)?)?;
        }
    }
    println!("verdict: {verdict}");
    Ok(verdict)
}

fn execute(cli: Cli) -> Result<Verdict> {
    let (config, counterexample) = match cli.command {
        Command::Run {
            config,
            seed,
            n,
            output,
            law,
            horizon,
            dt,
            steps,
            dump_paths,
        } => {
            let mut c = ExperimentConfig::load(&config)?;
            if let Some(s) = seed_from_env()? {
                c.seed = s;
            }
            c.seed = seed.unwrap_or(c.seed);
            c.n = n.or(c.n);
            c.output = output.or(c.output);
            c.law = law.or(c.law);
            c.horizon = horizon.or(c.horizon);
            c.dt = dt.or(c.dt);
            c.steps = steps.or(c.steps);
            c.dump_paths = dump_paths.unwrap_or(c.dump_paths);
            (c, None)
        }
        Command::Ladder {
            a,
            b,
            n,
            law,
            paths,
            seed,
            output,
        } => {
            let mut c = base_config(Kind::Ladder);
            c.a = Some(a);
            c.b = Some(b);
            c.steps = Some(n);
            c.law = law;
            c.n = Some(paths);
            c.seed = seed;
            c.output = output;
            (c, None)
        }
        Command::Lemmas { range, max_n, output } => {
            let mut c = base_config(Kind::Lemmas);
            c.range = Some(range);
            c.max_n = Some(max_n);
            c.output = output;
            (c, None)
        }
        Command::DemoCounterexample { c: level, n, seed, output } => {
            let cv = parse_rational(&level)?;
            let mut c = base_config(Kind::Bound);
            c.law = Some("counterexample".into());
            c.horizon = Some(experiment::counterexample_horizon(&cv));
            c.rules = vec![format!("min(T(-2),T({level}))")];
            c.a = Some("1".into());
            c.b = Some("1".into());
            c.bound_cap = Some(reflectlab_core::rational::to_f64(&cv).max(2.0));
            c.n = Some(n);
            c.seed = seed;
            c.output = output;
            (c, Some(cv))
        }
    };
    config.validate()?;
    let workers = cli.workers.or(config.workers);
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let outcome = match &counterexample {
        Some(c) => experiment::counterexample(c, config.draws(100_000), config.seed)?,
        None => experiment::run(&config)?,
    };
    finish(&config, outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(Verdict::Fail) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
