mod commands;
mod config;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use anyhow::Result;
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};
use tvcpd_core::Method;

use config::{parse_interval, ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "tvcpd", version, about = "Changepoint detection in dated document streams")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_method)]
    method: Option<Method>,
    /// Window length L in data-bearing dates.
    #[arg(long = "window-l", global = true)]
    window_l: Option<usize>,
    /// Candidate interval as START:END.
    #[arg(long, global = true, value_parser = parse_interval)]
    interval: Option<[NaiveDate; 2]>,
    #[arg(long = "seed-data", global = true)]
    seed_data: Option<u64>,
    #[arg(long = "seed-split", global = true)]
    seed_split: Option<u64>,
    #[arg(long = "seed-train", global = true)]
    seed_train: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Download one Guardian section into corpus JSONL (needs GUARDIAN_API_KEY).
    Fetch {
        #[arg(long)]
        section: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic benchmark with a known changepoint.
    Benchgen,
    /// Compute an indicator curve and predicted changepoint.
    Detect {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long = "min-words")]
        min_words: Option<usize>,
    },
    /// Score changepoint predictions against events.
    Eval {
        /// Prediction JSON files written by `detect`.
        #[arg(long = "predictions", required = true, num_args = 1..)]
        predictions: Vec<PathBuf>,
        /// Events CSV or a benchmark manifest.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Benchmark generation, detection and evaluation in one run.
    Pipeline,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: tvcpd_core::Error| e.to_string())
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = g.method {
        cfg.detect.method = m;
    }
    if let Some(l) = g.window_l {
        cfg.detect.window_l = l;
    }
    if let Some(i) = g.interval {
        cfg.data.interval = Some(i);
    }
    if let Some(s) = g.seed_data {
        cfg.seeds.data = s;
    }
    if let Some(s) = g.seed_split {
        cfg.seeds.split = s;
    }
    if let Some(s) = g.seed_train {
        cfg.seeds.train = s;
    }
    if let Some(d) = &g.out_dir {
        cfg.out_dir = d.clone();
    }
    match &cli.command {
        Command::Fetch { section, out } => {
            if section.is_some() {
                cfg.fetch.section = section.clone();
            }
            if out.is_some() {
                cfg.fetch.out = out.clone();
            }
        }
        Command::Detect {
            corpus,
            events,
            min_words,
        } => {
            if corpus.is_some() {
                cfg.data.corpus = corpus.clone();
            }
            if events.is_some() {
                cfg.data.events = events.clone();
            }
            if let Some(n) = min_words {
                cfg.data.min_words = *n;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<&'static str> {
    match &cli.command {
        Command::Fetch { .. } => commands::fetch(cfg).map(|_| "fetch"),
        Command::Benchgen => commands::benchgen(cfg).map(|_| "benchgen"),
        Command::Detect { .. } => {
            let corpus = cfg
                .data
                .corpus
                .clone()
                .ok_or_else(|| ConfigError("data.corpus: required but not set".into()))?;
            commands::detect(cfg, &corpus, true).map(|_| "detect")
        }
        Command::Eval { predictions, events } => {
            commands::eval(cfg, predictions, events.as_deref()).map(|_| "eval")
        }
        Command::Pipeline => commands::pipeline(cfg).map(|_| "pipeline"),
    }
}

fn log_run(cfg: &RunConfig, command: &str, started: SystemTime, elapsed: f64, status: &str) {
    let Ok(mut f) = std::fs::create_dir_all(&cfg.out_dir).and_then(|_| {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(cfg.out_dir.join("run.log"))
    }) else {
        return;
    };
    let at: DateTime<Utc> = started.into();
    let _ = writeln!(
        f,
        "{} {command} {status} elapsed={elapsed:.3}s config_hash={}",
        at.to_rfc3339(),
        cfg.hash()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(j) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let started = SystemTime::now();
    let clock = Instant::now();
    let result = run(&cli, &cfg);
    let elapsed = clock.elapsed().as_secs_f64();
    match result {
        Ok(name) => {
            log_run(&cfg, name, started, elapsed, "ok");
            ExitCode::SUCCESS
        }
        Err(e) => {
            log_run(&cfg, "command", started, elapsed, "failed");
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
