use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cdasim::config::ExperimentConfig;
use cdasim::engine::{run_session_sequential, run_session_threaded, DelayKind, Parallelism};
use cdasim::exchange::write_tape_csv;
use cdasim::harness::{
    self, build_roster, format_table, read_detail_csv, summarize_rows, write_summary_csv,
    SweepConfig,
};
use cdasim::session::EngineMode;
use cdasim::Algo;

#[derive(Parser)]
#[command(name = "cdasim", version, about = "Continuous double auction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and print each algorithm's average profit per trader.
    Run(RunArgs),
    /// Sweep every population ratio and write detail and summary CSVs.
    Sweep(SweepArgs),
    /// Re-aggregate a detail CSV into per-ratio and total win counts.
    Summary(SummaryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Seq,
    Threaded,
}

impl From<ModeArg> for EngineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Seq => EngineMode::Sequential,
            ModeArg::Threaded => EngineMode::Threaded,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParallelismArg {
    Serialized,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum DelayKindArg {
    Sleep,
    Spin,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Two algorithms, e.g. AA,ZIC.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    algos: Option<Vec<Algo>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Traders per side.
    #[arg(long)]
    per_side: Option<usize>,
    /// Threaded sessions: wall-clock seconds.
    #[arg(long)]
    wall_duration: Option<f64>,
    /// Threaded sessions: virtual seconds per wall second.
    #[arg(long)]
    time_scale: Option<f64>,
    #[arg(long, value_enum)]
    parallelism: Option<ParallelismArg>,
    #[arg(long, value_enum)]
    delay_kind: Option<DelayKindArg>,
    #[arg(long)]
    queue_capacity: Option<usize>,
    /// Injected delay in ms per call, e.g. --delay GDX=10 (repeatable).
    #[arg(long = "delay", value_parser = parse_delay)]
    delays: Vec<(Algo, f64)>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// A-traders per side; defaults to half the population.
    #[arg(long)]
    ratio: Option<usize>,
    /// Where to write the transaction tape.
    #[arg(long, default_value = "tape.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Sessions per ratio.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent sessions (default: all cores for seq, 1 for threaded).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SummaryArgs {
    /// Detail CSV written by `sweep`.
    detail: PathBuf,
    /// Write the summary CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_delay(s: &str) -> Result<(Algo, f64), String> {
    let (algo, ms) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ALGO=MS, got {s:?}"))?;
    let algo: Algo = algo.parse().map_err(|e| format!("{e}"))?;
    let ms: f64 = ms.parse().map_err(|_| format!("bad delay {ms:?}"))?;
    if !(ms >= 0.0) {
        return Err("delay must be non-negative".into());
    }
    Ok((algo, ms))
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let e = &mut cfg.engine;
        if let Some(m) = self.mode {
            e.mode = m.into();
        }
        if let Some(v) = self.wall_duration {
            e.wall_duration = v;
        }
        if let Some(v) = self.time_scale {
            e.time_scale = v;
        }
        if let Some(v) = self.queue_capacity {
            e.queue_capacity = v;
        }
        if let Some(p) = self.parallelism {
            e.parallelism = match p {
                ParallelismArg::Serialized => Parallelism::Serialized,
                ParallelismArg::Full => Parallelism::Full,
            };
        }
        if let Some(k) = self.delay_kind {
            e.delay_kind = match k {
                DelayKindArg::Sleep => DelayKind::Sleep,
                DelayKindArg::Spin => DelayKind::Spin,
            };
        }
        for &(algo, ms) in &self.delays {
            e.delay.insert(algo, ms);
        }
        let s = &mut cfg.sweep;
        if let Some(a) = &self.algos {
            s.algos = a.clone();
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.per_side {
            s.per_side = v;
        }
        if s.algos.len() != 2 || s.algos[0] == s.algos[1] {
            bail!("--algos needs two different algorithms, e.g. AA,ZIC");
        }
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let (a, b) = (cfg.sweep.algos[0], cfg.sweep.algos[1]);
    let per_side = cfg.sweep.per_side;
    let count_a = args.ratio.unwrap_or(per_side / 2);
    if count_a > per_side {
        bail!("--ratio {count_a} exceeds {per_side} traders per side");
    }
    let schedule = cdasim::market::ScheduleConfig {
        n_per_side: per_side,
        ..cfg.schedule.clone()
    };
    let roster = build_roster(a, b, count_a, per_side);
    let session = cfg
        .engine
        .session_config(roster, cfg.sweep.seed, &schedule, &cfg.traders);
    let result = match cfg.engine.mode {
        EngineMode::Sequential => run_session_sequential(&session)?,
        EngineMode::Threaded => run_session_threaded(&cfg.engine.threaded_config(session))?,
    };
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_tape_csv(&result.transactions(), file)?;

    let mut out = io::stdout().lock();
    for (algo, v) in &result.appt_by_algo {
        writeln!(out, "APPT {algo}: {v:.3}")?;
    }
    writeln!(out, "trades: {}", result.tape.len())?;
    if let Some(lat) = &result.latency {
        for (algo, l) in lat {
            writeln!(
                out,
                "latency {algo}: quote mean {:.1}us p99 {:.1}us, respond mean {:.1}us p99 {:.1}us",
                l.quote.mean_us, l.quote.p99_us, l.respond.mean_us, l.respond.p99_us
            )?;
        }
    }
    writeln!(out, "tape: {}", args.out.display())?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let mut sc = SweepConfig::new(
        cfg.sweep.algos[0],
        cfg.sweep.algos[1],
        args.n.unwrap_or(cfg.sweep.n),
        cfg.sweep.seed,
    );
    sc.per_side = cfg.sweep.per_side;
    sc.schedule = cfg.schedule;
    sc.traders = cfg.traders;
    sc.engine = cfg.engine;
    sc.jobs = args.jobs.or(cfg.sweep.jobs);
    let out = args
        .out
        .or(cfg.sweep.out)
        .unwrap_or_else(|| PathBuf::from("results"));

    let quiet = args.quiet;
    let progress = move |done: usize, total: usize| {
        if !quiet && (done % 50 == 0 || done == total) {
            eprint!("\r{done}/{total} sessions");
            if done == total {
                eprintln!();
            }
        }
    };
    let result = harness::run_sweep_with(&sc, &progress)?;
    let (detail, summary) = harness::write_sweep_csv(&result, &out)?;
    for ex in &result.exclusions {
        eprintln!(
            "excluded ratio {} trial {} (seed {}): {}",
            ex.ratio_a, ex.trial, ex.seed, ex.error
        );
    }
    for (a, t, e) in &result.conservation_failures {
        eprintln!("surplus check failed at ratio {a} trial {t}: {e}");
    }
    print!("{}", format_table(sc.algo_a, sc.algo_b, &result.ratios));
    println!("detail: {}", detail.display());
    println!("summary: {}", summary.display());
    if !result.conservation_failures.is_empty() {
        bail!("{} sessions violated surplus conservation", result.conservation_failures.len());
    }
    Ok(())
}

fn summary(args: SummaryArgs) -> Result<()> {
    let file = File::open(&args.detail).with_context(|| format!("opening {}", args.detail.display()))?;
    let rows = read_detail_csv(file)?;
    let ratios = summarize_rows(&rows);
    match &args.out {
        Some(p) => {
            write_summary_csv(&ratios, File::create(p)?)?;
            if let Some(first) = rows.first() {
                print!("{}", format_table(first.algo_a, first.algo_b, &ratios));
            }
        }
        None => write_summary_csv(&ratios, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Summary(a) => summary(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
