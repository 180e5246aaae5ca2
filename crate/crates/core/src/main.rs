use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ssdsim::engine::{run_logged, simulate};
use ssdsim::experiment::{compare_tables, parse_csv, run_plan, write_csv, ExperimentPlan, ResultRow};
use ssdsim::timing::{
    conventional_read_cycle, conventional_read_path, per_byte_cycle, tpmin_conventional, tpmin_proposed_board,
    tpmin_proposed_pad, ClockSpec,
};
use ssdsim::topology::apply_host_cap;
use ssdsim::units::{exact_ns, MB};
use ssdsim::workload::{gen_sequential, parse_trace, serialize_trace, Trace};
use ssdsim::{CellKind, InterfaceKind, Op, Settings};

#[derive(Parser)]
#[command(name = "ssdsim", version, about = "Trace-driven SSD channel/way simulator")]
struct Cli {
    /// TOML settings file; every key has a default.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration over a trace.
    Simulate(SimulateArgs),
    /// Run a sweep and write CSV.
    Sweep(SweepArgs),
    /// Print the clock-period derivation for each interface.
    Timing(TimingArgs),
    /// Run the reference sweep and compare it with the published tables.
    Verify(VerifyArgs),
    /// Write a sequential trace.
    GenTrace(GenTraceArgs),
}

#[derive(Args)]
struct Shape {
    #[arg(long)]
    cell: Option<CellKind>,
    #[arg(long)]
    interface: Option<InterfaceKind>,
    #[arg(long)]
    channels: Option<u32>,
    #[arg(long)]
    ways: Option<u32>,
}

#[derive(Args)]
struct SequentialArgs {
    #[arg(long, default_value = "write")]
    op: Op,
    /// Total bytes (suffixes k, m, g are powers of 1024).
    #[arg(long, default_value = "64m", value_parser = parse_size)]
    total: u64,
    #[arg(long, default_value = "64k", value_parser = parse_size)]
    chunk: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    shape: Shape,
    /// Trace file (`R|W offset length` per line). Without it a sequential
    /// trace is generated.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    seq: SequentialArgs,
    /// Write a tab-separated event log here.
    #[arg(long)]
    event_log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Way,
    Channel,
    Reference,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML plan file (shapes, interfaces, cells, modes, total_bytes, chunk_bytes).
    #[arg(long, conflicts_with = "preset")]
    plan: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "way")]
    preset: Preset,
    #[arg(long, value_parser = parse_size)]
    total: Option<u64>,
    /// CSV destination; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, default_value = "slc")]
    cell: CellKind,
}

#[derive(Args)]
struct VerifyArgs {
    /// Allowed relative bandwidth error.
    #[arg(long, default_value_t = 0.20)]
    tolerance: f64,
    /// Compare an existing results CSV instead of simulating.
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long, value_parser = parse_size)]
    total: Option<u64>,
}

#[derive(Args)]
struct GenTraceArgs {
    #[command(flatten)]
    seq: SequentialArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_size(text: &str) -> Result<u64, String> {
    let t = text.trim().to_ascii_lowercase();
    let (digits, mult) = match t.chars().last() {
        Some('k') => (&t[..t.len() - 1], 1u64 << 10),
        Some('m') => (&t[..t.len() - 1], 1 << 20),
        Some('g') => (&t[..t.len() - 1], 1 << 30),
        _ => (&t[..], 1),
    };
    digits
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(mult))
        .ok_or_else(|| format!("bad size `{text}`"))
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn note_mlc_energy(rows: &[ResultRow]) {
    if rows.iter().any(|r| r.key.cell == CellKind::Mlc) {
        eprintln!("note: MLC energy uses power constants fitted to SLC data (extrapolated)");
    }
}

fn simulate_cmd(settings: &Settings, args: &SimulateArgs) -> Result<()> {
    let mut s = settings.clone();
    if let Some(v) = args.shape.cell {
        s.cell_kind = v;
    }
    if let Some(v) = args.shape.interface {
        s.interface = v;
    }
    if let Some(v) = args.shape.channels {
        s.channels = v;
    }
    if let Some(v) = args.shape.ways {
        s.ways = v;
    }
    let config = s.ssd_config()?;
    let trace: Trace = match &args.trace {
        Some(p) => parse_trace(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => gen_sequential(args.seq.total, args.seq.chunk, args.seq.op)?,
    };
    let stats = match &args.event_log {
        Some(path) => {
            let (stats, log) = run_logged(&config, &trace)?;
            log.check_exclusivity().map_err(anyhow::Error::msg)?;
            log.write_tsv(output(Some(path))?)?;
            apply_host_cap(stats, &config)
        }
        None => simulate(&config, &trace)?,
    };
    let power = s.power_model()?;
    let clock = config.protocol.clock;
    println!(
        "config      {} {} {} MHz, {} ch x {} way, page {} B",
        config.profile.cell_kind,
        clock.kind,
        clock.frequency_mhz,
        config.n_channels(),
        config.n_ways(),
        config.page_size()
    );
    println!("requests    {}", trace.len());
    println!("elapsed     {:.3} us", stats.elapsed.as_us());
    for (op, bw) in [(Op::Read, stats.read_bandwidth), (Op::Write, stats.write_bandwidth)] {
        if let Some(bw) = bw {
            let energy = power.energy_per_byte(clock.kind, bw)?;
            println!("{:<11} {:.2} MB/s, {:.4} nJ/B", op.key(), bw / MB, energy);
        }
    }
    println!("aggregate   {:.2} MB/s", stats.aggregate_bandwidth / MB);
    println!("capped      {}", stats.capped);
    let busy: Vec<String> = stats
        .per_channel_busy
        .iter()
        .map(|b| format!("{:.1}%", 100.0 * b.as_secs() / stats.elapsed.as_secs()))
        .collect();
    println!("channel use {}", busy.join(" "));
    if config.profile.cell_kind == CellKind::Mlc {
        eprintln!("note: MLC energy uses power constants fitted to SLC data (extrapolated)");
    }
    Ok(())
}

fn sweep_cmd(settings: &Settings, args: &SweepArgs) -> Result<()> {
    let mut plan = match &args.plan {
        Some(p) => ExperimentPlan::from_toml(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => match args.preset {
            Preset::Way => ExperimentPlan::way_sweep(),
            Preset::Channel => ExperimentPlan::channel_sweep(),
            Preset::Reference => ExperimentPlan::reference(),
        },
    };
    if let Some(t) = args.total {
        plan.total_bytes = t;
    }
    let rows = run_plan(&plan, settings)?;
    let mut out = output(args.out.as_ref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    note_mlc_energy(&rows);
    Ok(())
}

fn timing_cmd(settings: &Settings, args: &TimingArgs) -> Result<()> {
    let p = settings.timing_params(args.cell)?;
    let rows = [
        ("read path", conventional_read_path(&p)),
        ("conv read cycle (path / (1 + alpha))", conventional_read_cycle(&p)),
        ("t_byte", p.t_byte.exact()),
        ("conv tp_min", tpmin_conventional(&p)),
        ("ddr tp_min, board", tpmin_proposed_board(p.t_s, p.t_h, p.t_diff, p.t_byte).exact()),
        ("ddr tp_min, pad", tpmin_proposed_pad(p.t_ios, p.t_ioh, p.t_byte).exact()),
    ];
    println!("alpha = {}", p.alpha);
    for (label, value) in rows {
        println!("{label:<38} {:>8.3} ns", exact_ns(value));
    }
    for kind in InterfaceKind::ALL {
        let clock = match settings.freq_mhz {
            Some(mhz) => ClockSpec::at_frequency(kind, mhz, &p)?,
            None => ClockSpec::resolve(kind, &p)?,
        };
        println!(
            "{:<5} {:>3} MHz  t_p {:.3} ns  per byte {:.3} ns",
            kind.key(),
            clock.frequency_mhz,
            exact_ns(clock.t_p()),
            exact_ns(per_byte_cycle(&clock))
        );
    }
    Ok(())
}

fn verify_cmd(settings: &Settings, args: &VerifyArgs) -> Result<bool> {
    if !(args.tolerance >= 0.0) {
        bail!("tolerance must be non-negative");
    }
    let rows = match &args.results {
        Some(p) => parse_csv(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => {
            let mut plan = ExperimentPlan::reference();
            if let Some(t) = args.total {
                plan.total_bytes = t;
            }
            run_plan(&plan, settings)?
        }
    };
    let report = compare_tables(&rows, args.tolerance);
    println!("{report}");
    Ok(report.passed())
}

fn gen_trace_cmd(args: &GenTraceArgs) -> Result<()> {
    let trace = gen_sequential(args.seq.total, args.seq.chunk, args.seq.op)?;
    let mut out = output(args.out.as_ref())?;
    out.write_all(serialize_trace(&trace).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<bool> {
        let settings = match &cli.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        match &cli.command {
            Command::Simulate(a) => simulate_cmd(&settings, a).map(|_| true),
            Command::Sweep(a) => sweep_cmd(&settings, a).map(|_| true),
            Command::Timing(a) => timing_cmd(&settings, a).map(|_| true),
            Command::Verify(a) => verify_cmd(&settings, a),
            Command::GenTrace(a) => gen_trace_cmd(a).map(|_| true),
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
