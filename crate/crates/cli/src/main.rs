use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::Value;
use workbench_core::eval::replay::load_reports;
use workbench_core::eval::task::{load_task, BenchmarkManifest};
use workbench_core::eval::{merge_timeline, replay_task, summarize_runs, write_benchmark, write_run, LabelFile, ReplayOptions, TimelineEvent, DEFAULT_GAP_MS};
use workbench_core::extract::SnapshotStore;
use workbench_core::guidance::GuidanceConfig;
use workbench_core::llm::{Gateway, LlmConfig, ProviderKind};
use workbench_core::session::{serve, Session};

#[derive(Parser)]
#[command(name = "workbench", version, about = "Replay benchmark tasks, summarize runs, and serve engine sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay one task, or every task of a benchmark, and write run files.
    Replay(ReplayArgs),
    /// Per difficulty and guidance type: counts, latency and labeled accuracy.
    Summarize(SummarizeArgs),
    /// Merge interaction events into active periods.
    Timeline(TimelineArgs),
    /// Serve one session over stdin and stdout.
    Serve(ServeArgs),
    /// Write the bundled benchmark (tasks, pages, manifest).
    GenBenchmark {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Scripted,
    Live,
}

impl From<Provider> for ProviderKind {
    fn from(p: Provider) -> Self {
        match p {
            Provider::Scripted => ProviderKind::Scripted,
            Provider::Live => ProviderKind::Live,
        }
    }
}

#[derive(Args)]
struct LlmArgs {
    #[arg(long, value_enum, default_value = "scripted")]
    provider: Provider,
    /// Chat-completions endpoint for the live provider.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

impl LlmArgs {
    fn config(&self) -> LlmConfig {
        let mut c = LlmConfig { kind: self.provider.into(), ..LlmConfig::default() };
        if let Some(e) = &self.endpoint {
            c.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            c.model = m.clone();
        }
        if let Some(t) = self.timeout_ms {
            c.timeout_ms = t;
        }
        c
    }
}

#[derive(Args)]
struct ReplayArgs {
    /// A task file.
    #[arg(long, conflicts_with = "benchmark", required_unless_present = "benchmark")]
    task: Option<PathBuf>,
    /// A benchmark directory with a benchmark.json manifest.
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = ReplayOptions::default().step_budget)]
    step_budget: usize,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Directory of *.report.json files.
    #[arg(long)]
    runs: PathBuf,
    /// Labels file: {"labels": [{"task", "entry", "labeler", "label"}]}.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TimelineArgs {
    /// A JSON array of events, or a run report.
    #[arg(long)]
    events: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GAP_MS)]
    threshold_ms: u64,
}

#[derive(Args)]
struct ServeArgs {
    /// Snapshot directory with a manifest.json to preload.
    #[arg(long)]
    pages: Option<PathBuf>,
    /// Fixture file for the scripted provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn replay(args: ReplayArgs) -> Result<()> {
    let paths = match (&args.task, &args.benchmark) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(dir)) => BenchmarkManifest::load(dir)?.task_paths(dir),
        (None, None) => bail!("give --task or --benchmark"),
    };
    let config = args.llm.config();
    let opts = ReplayOptions { step_budget: args.step_budget, ..ReplayOptions::default() };
    let mut failed = 0;
    for path in &paths {
        let task = load_task(path)?;
        info!("replaying {} ({})", task.task.id, path.display());
        match replay_task(&task, config.kind, &config, opts) {
            Ok(run) => {
                write_run(&args.out, &run)?;
                let r = &run.report;
                println!(
                    "{:<24} {:<6} steps={:<3} guidance={:<3} invalid={:<2} version={:<3} hash={}",
                    r.task_id,
                    r.difficulty.as_str(),
                    r.steps,
                    r.entries.len(),
                    r.invalid_actions.len(),
                    r.final_version,
                    &r.final_hash[..12.min(r.final_hash.len())]
                );
            }
            Err(e) => {
                failed += 1;
                warn!("{}: {e}", task.task.id);
                println!("{:<24} failed: {e}", task.task.id);
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} replays failed", paths.len());
    }
    Ok(())
}

fn summarize(args: SummarizeArgs) -> Result<()> {
    let reports = load_reports(&args.runs)?;
    let labels: LabelFile = match &args.labels {
        Some(p) => serde_json::from_value(read_json(p)?).with_context(|| format!("labels in {}", p.display()))?,
        None => LabelFile::default(),
    };
    let summary = summarize_runs(&reports, &labels.labels)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print!("{}", summary.to_table());
    }
    Ok(())
}

fn timeline(args: TimelineArgs) -> Result<()> {
    let raw = read_json(&args.events)?;
    let events = raw.get("timeline").cloned().unwrap_or(raw);
    let events: Vec<TimelineEvent> = serde_json::from_value(events).context("expected an array of {timestamp, category}")?;
    let blocks = merge_timeline(&events, args.threshold_ms)?;
    println!("{}", serde_json::to_string_pretty(&blocks)?);
    Ok(())
}

fn serve_stdio(args: ServeArgs) -> Result<()> {
    let mut config = args.llm.config();
    config.fixtures = args.fixtures.map(|p| p.display().to_string());
    let gateway = Gateway::from_config(config)?;
    let mut session = Session::new(gateway, GuidanceConfig::default());
    if let Some(dir) = &args.pages {
        let mut store = SnapshotStore::new();
        let pages = store.load_dir(dir)?;
        info!("loaded {} pages from {}", pages.len(), dir.display());
        session.store = store;
    }
    let stdin = io::stdin();
    let mut reader = BufReader::new(stdin.lock());
    let mut writer = io::stdout().lock();
    serve(&mut session, &mut reader, &mut writer)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Replay(a) => replay(a),
        Command::Summarize(a) => summarize(a),
        Command::Timeline(a) => timeline(a),
        Command::Serve(a) => serve_stdio(a),
        Command::GenBenchmark { out } => {
            let manifest = write_benchmark(&out)?;
            println!("wrote {} tasks to {}", manifest.tasks.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
