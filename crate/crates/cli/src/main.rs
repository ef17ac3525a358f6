//! Command-line driver: drain benchmarks, approximate-queue error sweeps,
//! scheduler simulations, SVG plots and the queue selection guide.
//!
//! Exit status is 0 on success, 1 for bad flags or configuration and 2 when
//! a run fails after starting.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use pktsched::bench::{
    emit_plot, preset_errors, run_bench, run_error_sweep, select_queue_guide, write_csv, BenchConfig,
    BenchError, BenchQueue, Fill, OccupancyLevel, RangeKind, SweepConfig,
};
use pktsched::gradient_pq::Rounding;
use pktsched::sched::{PolicyConfig, SchedError};
use pktsched::sim::{run_sim, share_config, Arrival, FlowLoad, SizeDist, Workload};

#[derive(Parser)]
#[command(name = "pktsched-cli", version, about = "Bucketed priority queue benchmarks and scheduler simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fill a queue, drain it under timing and report Mops.
    Bench(BenchArgs),
    /// Single-lookup error statistics of the approximate queue.
    ErrorSweep(SweepArgs),
    /// Run a workload through a scheduling tree in virtual time.
    Sim(SimArgs),
    /// Recommend a queue for a workload shape.
    Guide(GuideArgs),
    /// Render a bench or sweep CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Queue kinds to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "cffs")]
    queue: Vec<BenchQueue>,
    #[arg(long, default_value_t = 10_000)]
    num_buckets: usize,
    /// Average packets per bucket; a comma separated list runs each value.
    #[arg(long, value_delimiter = ',', conflicts_with = "occupancy")]
    pkts_per_bucket: Vec<f64>,
    /// Fraction of nonempty buckets; a comma separated list runs each value.
    #[arg(long, value_delimiter = ',')]
    occupancy: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML file whose keys override the flags for every run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 16)]
    alpha: u32,
    /// Occupancy grid; defaults to 0.3 through 1.0 in steps of 0.1.
    #[arg(long, value_delimiter = ',')]
    occupancies: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Report the named occupancy patterns instead of the random sweep.
    #[arg(long)]
    presets: bool,
    /// Round the estimate up instead of to nearest (presets only).
    #[arg(long)]
    ceil: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Scheduling tree as TOML. Without it, one share node serves the flows
    /// given by `--shares`.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Share weights for the built-in single-node tree, one flow each.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    shares: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    duration_ms: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e9)]
    line_rate_bps: f64,
    #[arg(long, default_value_t = 32)]
    flow_cap: usize,
    /// Bytes per flow turn; 0 serves one packet per turn.
    #[arg(long, default_value_t = 10_240)]
    batch_bytes: u64,
    #[arg(long, value_enum, default_value_t = SizeArg::Mtu)]
    size: SizeArg,
    /// Packet size for `--size fixed`.
    #[arg(long, default_value_t = 1500)]
    size_bytes: u32,
    /// Poisson arrivals at this rate per flow instead of backlogged sources.
    #[arg(long)]
    rate_bps: Option<f64>,
    /// Workload TOML whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON lines event trace destination.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SizeArg {
    Mtu,
    Fixed,
    Mixed,
}

#[derive(Args)]
struct GuideArgs {
    /// Number of distinct priority levels.
    #[arg(long)]
    levels: usize,
    #[arg(long, value_enum, default_value_t = RangeArg::Any)]
    range: RangeArg,
    /// `dense`, `sparse`, `any` or a nonempty-bucket ratio in [0, 1].
    #[arg(long, default_value = "any")]
    occupancy: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    Fixed,
    Moving,
    Any,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    /// SVG destination; the CSV path with an `.svg` extension when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Failure split by exit status.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<SchedError> for Failure {
    fn from(e: SchedError) -> Self {
        match e {
            SchedError::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Cmd::Bench(a) => bench(a),
        Cmd::ErrorSweep(a) => sweep(a),
        Cmd::Sim(a) => sim(a),
        Cmd::Guide(a) => guide(a),
        Cmd::Plot(a) => plot(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

/// Serializes `base`, replaces every top-level key present in the TOML file
/// at `path` and deserializes the result.
fn overlay<T: Serialize + DeserializeOwned>(base: &T, path: Option<&Path>) -> Result<T, Failure> {
    let mut merged = toml::Table::try_from(base).map_err(|e| Failure::Config(e.to_string()))?;
    let origin = match path {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let file: toml::Table =
                toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            merged.extend(file);
            path.display().to_string()
        }
        None => "flags".to_string(),
    };
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e| Failure::Config(format!("{origin}: {e}")))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let fills: Vec<Fill> = if !a.occupancy.is_empty() {
        a.occupancy.iter().map(|&o| Fill::Occupancy(o)).collect()
    } else if !a.pkts_per_bucket.is_empty() {
        a.pkts_per_bucket.iter().map(|&p| Fill::PacketsPerBucket(p)).collect()
    } else {
        vec![Fill::PacketsPerBucket(1.0)]
    };
    let mut cfgs = Vec::new();
    for &queue in &a.queue {
        for &fill in &fills {
            let base = BenchConfig {
                queue,
                num_buckets: a.num_buckets,
                fill,
                reps: a.reps,
                warmup: a.warmup,
                seed: a.seed,
            };
            let cfg = overlay(&base, a.config.as_deref())?;
            cfg.validate()?;
            cfgs.push(cfg);
        }
    }
    // A config file can pin the queue and fill, which collapses the grid.
    cfgs.dedup();
    let mut rows = Vec::with_capacity(cfgs.len());
    for cfg in &cfgs {
        rows.push(run_bench(cfg)?);
    }
    write_csv(sink(a.out.as_deref())?, &rows)?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let mut base = SweepConfig::standard(a.alpha);
    if !a.occupancies.is_empty() {
        base.occupancies = a.occupancies;
    }
    base.seeds = a.seeds;
    base.trials = a.trials;
    let cfg = overlay(&base, a.config.as_deref())?;
    let out = sink(a.out.as_deref())?;
    if a.presets {
        let rounding = if a.ceil { Rounding::Ceil } else { Rounding::Nearest };
        write_csv(out, &preset_errors(cfg.alpha, rounding)?)?;
    } else {
        write_csv(out, &run_error_sweep(&cfg)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimRow {
    flow: u32,
    packets_out: u64,
    bytes_out: u64,
    throughput_bps: f64,
}

fn sim(a: SimArgs) -> Result<(), Failure> {
    let policy = match &a.policy {
        Some(p) => PolicyConfig::from_file(p)?,
        None => {
            if a.shares.is_empty() || a.shares.iter().any(|s| !(*s > 0.0)) {
                return Err(Failure::Config("shares must be positive".into()));
            }
            share_config(&a.shares)
        }
    };
    let mut base = Workload::backlogged(a.duration_ms * 1_000_000);
    base.seed = a.seed;
    base.line_rate_bps = a.line_rate_bps;
    base.flow_cap = a.flow_cap;
    base.batch_bytes = a.batch_bytes;
    base.trace = a.trace.is_some();
    base.size = match a.size {
        SizeArg::Mtu => SizeDist::Mtu,
        SizeArg::Fixed => SizeDist::Fixed { bytes: a.size_bytes },
        SizeArg::Mixed => SizeDist::Mixed,
    };
    if let Some(r) = a.rate_bps {
        base.arrival = Arrival::Rate;
        base.flows = policy.flows.iter().map(|f| FlowLoad::new(f.id).rate(r)).collect();
    }
    let w: Workload = overlay(&base, a.config.as_deref())?;
    w.validate()?;
    let m = run_sim(&policy, &w)?;
    if let Some(p) = &a.trace {
        let f = File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
        m.write_trace(io::BufWriter::new(f))?;
    }
    let rows: Vec<SimRow> = m
        .flows
        .iter()
        .map(|(&flow, fm)| SimRow {
            flow,
            packets_out: fm.packets_out,
            bytes_out: fm.bytes_out,
            throughput_bps: m.throughput_bps(flow),
        })
        .collect();
    write_csv(sink(a.out.as_deref())?, &rows)?;
    Ok(())
}

fn guide(a: GuideArgs) -> Result<(), Failure> {
    let range = match a.range {
        RangeArg::Fixed => RangeKind::Fixed,
        RangeArg::Moving => RangeKind::Moving,
        RangeArg::Any => RangeKind::Any,
    };
    let occ = match a.occupancy.as_str() {
        "dense" => OccupancyLevel::Dense,
        "sparse" => OccupancyLevel::Sparse,
        "any" => OccupancyLevel::Any,
        s => match s.parse::<f64>() {
            Ok(r) if (0.0..=1.0).contains(&r) => OccupancyLevel::from_ratio(r),
            _ => return Err(Failure::Config(format!("occupancy {s:?} is not dense, sparse, any or a ratio in [0, 1]"))),
        },
    };
    println!("{}", select_queue_guide(a.levels, range, occ));
    Ok(())
}

fn plot(a: PlotArgs) -> Result<(), Failure> {
    if !a.csv.exists() {
        return Err(Failure::Config(format!("{} does not exist", a.csv.display())));
    }
    let path = emit_plot(&a.csv, a.out.as_deref())?;
    println!("{}", path.display());
    Ok(())
}
