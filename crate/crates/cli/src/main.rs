use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qdispatch::analyzers::{analyze, thresholds, EquilibriumOutcome};
use qdispatch::economy::{max_completed_index, parse_economy_text, validate_economy, write_economy_text, Economy};
use qdispatch::ingest::{aggregate, build_economy, parse_timestamp, parse_trips, EconomyParams, FareRate, TripFilter};
use qdispatch::partition::{bins, default_partition, validate_layout, BinLayout, OrderedPartition};
use qdispatch::report::{format_value, metric_values, outcome_record, METRICS, OUTCOME_HEADER, SIMULATION_COLUMNS};
use qdispatch::sim::{empirical_outcome, run_replications, ArrivalModel, SimConfig, SimulationTrace, TraceLevel};
use qdispatch::sweep::{run_sweep, write_sweep, SweepFormat, SweepParameter, SweepSpec};
use qdispatch::Mechanism;

#[derive(Parser)]
#[command(name = "qdispatch", version, about = "Equilibrium analysis and simulation of dispatch mechanisms for a driver queue")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium outcome of one or all mechanisms.
    Analyze(AnalyzeArgs),
    /// Outcomes over a grid of driver arrival rates or patience levels.
    Sweep(SweepArgs),
    /// Monte Carlo run of a mechanism under its equilibrium strategy.
    Simulate(SimulateArgs),
    /// Build an economy file from trip records.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct EconomyArgs {
    /// Economy file.
    #[arg(long)]
    economy: PathBuf,
    /// Override the driver arrival rate.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Override rider patience.
    #[arg(long)]
    patience: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    economy: EconomyArgs,
    /// first-best, strict, direct, random, randomized or all.
    #[arg(long, default_value = "all")]
    mechanism: String,
    /// Ordered partition for randomized FIFO, e.g. "{1},{2,3}".
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Lambda,
    Patience,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Wide,
    Long,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    economy: PathBuf,
    #[arg(long, value_enum)]
    param: Param,
    /// Comma-separated values, or start:stop:step.
    #[arg(long)]
    grid: String,
    /// Comma-separated mechanisms, or all. First best is always included.
    #[arg(long, default_value = "all")]
    mechanism: String,
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, value_enum, default_value = "wide")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arrivals {
    Poisson,
    Deterministic,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    economy: EconomyArgs,
    /// strict, direct, random or randomized.
    #[arg(long)]
    mechanism: String,
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of replications, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Drivers per unit of mass.
    #[arg(long, default_value_t = 50)]
    scale: u32,
    #[arg(long, default_value_t = 20_000.0)]
    horizon: f64,
    #[arg(long, default_value_t = 5_000.0)]
    warmup: f64,
    /// Time per dispatch attempt.
    #[arg(long, default_value_t = 0.0)]
    offer_latency: f64,
    #[arg(long, value_enum, default_value = "poisson")]
    arrivals: Arrivals,
    /// Write every event of the first replication as NDJSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rate {
    MeanOfRatios,
    RatioOfMeans,
}

#[derive(Args)]
struct IngestArgs {
    /// Trip-record CSV.
    #[arg(long)]
    trips: PathBuf,
    /// Economy file to write.
    #[arg(long)]
    out: PathBuf,
    /// Keep trips from this pickup tract only.
    #[arg(long)]
    origin: Option<String>,
    /// Keep trips starting at or after this time.
    #[arg(long)]
    from: Option<String>,
    /// Keep trips starting before this time.
    #[arg(long)]
    until: Option<String>,
    /// Driver waiting cost per minute.
    #[arg(long, default_value = "1/3")]
    c: String,
    #[arg(long, default_value = "1/3")]
    c0: String,
    /// Minimum relocation time in minutes.
    #[arg(long, default_value_t = 10.0)]
    t0: f64,
    /// Driver arrivals per minute.
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 12)]
    patience: u32,
    /// Total rider arrivals per minute.
    #[arg(long, default_value_t = 12.0)]
    total_demand: f64,
    #[arg(long, default_value_t = 30)]
    min_trips: u64,
    #[arg(long, value_enum, default_value = "mean-of-ratios")]
    fare_rate: Rate,
}

/// Bad input (exit 2) or a failure while running (exit 1).
enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Ingest(a) => cmd_ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.trim().parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn load_economy(path: &Path) -> Outcome<Economy<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(runtime)?;
    let raw = parse_economy_text::<f64>(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(invalid)?;
    validate_economy(&raw).map_err(invalid)
}

fn economy_from(args: &EconomyArgs) -> Outcome<Economy<f64>> {
    let mut e = load_economy(&args.economy)?;
    if let Some(l) = args.lambda {
        e = e.with_driver_rate(l).map_err(invalid)?;
    }
    if let Some(p) = args.patience {
        e = e.with_patience(p).map_err(invalid)?;
    }
    Ok(e)
}

fn parse_partition(s: &str) -> Outcome<OrderedPartition> {
    s.parse::<OrderedPartition>()
        .with_context(|| format!("partition `{s}`"))
        .map_err(invalid)
}

fn parse_mechanisms(s: &str) -> Outcome<Vec<Mechanism>> {
    if s == "all" {
        return Ok(Mechanism::ALL.to_vec());
    }
    s.split(',').map(|m| m.trim().parse::<Mechanism>().map_err(invalid)).collect()
}

/// Layout for randomized FIFO: the given partition, else the default one.
fn layout_for(e: &Economy<f64>, partition: Option<&str>) -> Outcome<(BinLayout<f64>, bool)> {
    let (p, defaulted) = match partition {
        Some(s) => (parse_partition(s)?, false),
        None => (default_partition(e), true),
    };
    let layout = bins(e, &p).map_err(invalid)?;
    let report = validate_layout(e, &layout);
    if !report.passed() {
        let msg: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(invalid(anyhow!("partition {p} does not fit the economy: {}", msg.join("; "))));
    }
    Ok((layout, defaulted))
}

fn output(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(runtime)?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn describe(e: &Economy<f64>) -> String {
    let j = max_completed_index(e);
    let n: Vec<String> = thresholds(e).iter().map(|&x| format_value(x)).collect();
    format!(
        "{} destinations, lambda {}, c {}, c0 {}, P {}; {}-supplied, J = {j}, thresholds n = ({})",
        e.len(),
        format_value(e.driver_rate()),
        format_value(e.driver_cost()),
        format_value(e.platform_cost()),
        e.patience(),
        if e.is_over_supplied() { "over" } else { "under" },
        n.join(", ")
    )
}

fn cmd_analyze(args: AnalyzeArgs) -> Outcome<()> {
    let e = economy_from(&args.economy)?;
    let mechanisms = parse_mechanisms(&args.mechanism)?;
    let mut layout = None;
    if mechanisms.contains(&Mechanism::RandomizedFifo) {
        let (l, defaulted) = layout_for(&e, args.partition.as_deref())?;
        if defaulted {
            eprintln!("randomized FIFO uses the default partition {}", l.partition());
        }
        layout = Some(l);
    } else if let Some(p) = &args.partition {
        parse_partition(p)?;
    }
    let outcomes: Vec<EquilibriumOutcome<f64>> = mechanisms
        .iter()
        .map(|&m| analyze(&e, m, layout.as_ref()).map_err(invalid))
        .collect::<Outcome<_>>()?;

    eprintln!("{}", describe(&e));
    if let Some(l) = &layout {
        let bounds: Vec<String> = (1..=l.len())
            .map(|k| {
                let (lb, ub) = l.bin(k);
                format!("[{}, {}]", format_value(lb), format_value(ub))
            })
            .collect();
        eprintln!("bins for {}: {}", l.partition(), bounds.join(" "));
    }
    for o in &outcomes {
        eprintln!(
            "{:<11} T {:>10}  R {:>10}  Q* {:>10}  u* {:>10}  sd {:>10}",
            o.mechanism.name(),
            format_value(o.throughput),
            format_value(o.net_revenue),
            format_value(o.queue_length),
            format_value(o.payoff_mean),
            format_value(o.payoff_sd())
        );
    }
    let mut out = output(args.out.as_deref())?;
    qdispatch::report::write_outcomes(&mut out, outcomes.iter().map(|o| (o, e.driver_rate(), e.patience())))
        .map_err(runtime)?;
    out.flush().map_err(runtime)
}

fn parse_grid(s: &str) -> Outcome<Vec<f64>> {
    let bad = || invalid(anyhow!("bad grid `{s}`; expected a,b,c or start:stop:step"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [list] => list
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| parse_fraction(t).ok_or_else(bad))
            .collect(),
        [a, b, step] => {
            let (a, b, step) = (
                parse_fraction(a).ok_or_else(bad)?,
                parse_fraction(b).ok_or_else(bad)?,
                parse_fraction(step).ok_or_else(bad)?,
            );
            if step <= 0.0 || b < a {
                return Err(bad());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + step * k as f64).collect())
        }
        _ => Err(bad()),
    }
}

fn cmd_sweep(args: SweepArgs) -> Outcome<()> {
    let template = load_economy(&args.economy)?;
    let spec = SweepSpec {
        parameter: match args.param {
            Param::Lambda => SweepParameter::Lambda,
            Param::Patience => SweepParameter::Patience,
        },
        grid: parse_grid(&args.grid)?,
        template,
        mechanisms: parse_mechanisms(&args.mechanism)?,
        partition: args.partition.as_deref().map(parse_partition).transpose()?,
    };
    let rows = run_sweep(&spec).map_err(invalid)?;
    for r in &rows {
        if let Err(err) = &r.outcome {
            eprintln!("{} at {} = {}: {err}", r.mechanism, spec.parameter, format_value(r.x));
        }
    }
    let format = match args.format {
        Format::Wide => SweepFormat::Wide,
        Format::Long => SweepFormat::Long,
    };
    let mut out = output(args.out.as_deref())?;
    write_sweep(&mut out, spec.parameter, &rows, format).map_err(runtime)?;
    out.flush().map_err(runtime)
}

fn relative_error(got: f64, want: f64) -> String {
    if want == 0.0 || !want.is_finite() || !got.is_finite() {
        return "-".into();
    }
    format!("{:+.2}%", 100.0 * (got - want) / want.abs())
}

fn cmd_simulate(args: SimulateArgs) -> Outcome<()> {
    let e = economy_from(&args.economy)?;
    let mechanism: Mechanism = args.mechanism.parse().map_err(invalid)?;
    if mechanism == Mechanism::FirstBest {
        return Err(invalid(anyhow!("first best dispatches on arrival; there is nothing to simulate")));
    }
    let layout = if mechanism == Mechanism::RandomizedFifo {
        let (l, defaulted) = layout_for(&e, args.partition.as_deref())?;
        if defaulted {
            eprintln!("no partition given; using the default partition {}", l.partition());
        }
        Some(l)
    } else {
        None
    };
    if args.seeds == 0 {
        return Err(invalid(anyhow!("--seeds must be at least 1")));
    }
    let cfg = SimConfig {
        scale: args.scale,
        horizon: args.horizon,
        warmup: args.warmup,
        offer_latency: args.offer_latency,
        seed: args.seed,
        arrival_model: match args.arrivals {
            Arrivals::Poisson => ArrivalModel::Poisson,
            Arrivals::Deterministic => ArrivalModel::Deterministic,
        },
        trace_level: if args.trace.is_some() { TraceLevel::Full } else { TraceLevel::Summary },
        ..SimConfig::default()
    };
    cfg.validate().map_err(invalid)?;
    let want = analyze(&e, mechanism, layout.as_ref()).map_err(invalid)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|k| args.seed + k).collect();
    let traces = if let Some(path) = &args.trace {
        // only the first replication keeps its events
        let first = run_replications(&e, mechanism, layout.as_ref(), &cfg, &seeds[..1]).map_err(runtime)?;
        write_trace(path, &first[0])?;
        let rest_cfg = SimConfig {
            trace_level: TraceLevel::Summary,
            ..cfg.clone()
        };
        let mut all = first;
        all.extend(run_replications(&e, mechanism, layout.as_ref(), &rest_cfg, &seeds[1..]).map_err(runtime)?);
        all
    } else {
        run_replications(&e, mechanism, layout.as_ref(), &cfg, &seeds).map_err(runtime)?
    };

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let mut header: Vec<&str> = OUTCOME_HEADER.to_vec();
    header.extend(SIMULATION_COLUMNS);
    w.write_record(header).map_err(runtime)?;
    let mut sums = [0.0; 9];
    for t in &traces {
        let got = empirical_outcome(t, &e, &cfg);
        if got.zero_throughput {
            eprintln!("seed {}: no trips completed after warmup", t.seed);
        }
        if got.censored > 0 {
            eprintln!("seed {}: {} drivers still queued at the end were left out", t.seed, got.censored);
        }
        for (s, v) in sums.iter_mut().zip(metric_values(&got.outcome)) {
            *s += v / traces.len() as f64;
        }
        let mut row = outcome_record(&got.outcome, e.driver_rate(), e.patience());
        row.extend([t.seed.to_string(), cfg.scale.to_string(), format_value(cfg.horizon)]);
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;

    eprintln!("{}", describe(&e));
    eprintln!("{} over {} seed(s), scale {}, horizon {}", mechanism, traces.len(), cfg.scale, cfg.horizon);
    eprintln!("{:<17} {:>12} {:>12} {:>9}", "metric", "simulated", "analyzer", "error");
    for ((name, got), want) in METRICS.iter().zip(sums).zip(metric_values(&want)) {
        eprintln!(
            "{:<17} {:>12.4} {:>12.4} {:>9}",
            name,
            got,
            want,
            relative_error(got, want)
        );
    }
    Ok(())
}

fn write_trace(path: &Path, trace: &SimulationTrace) -> Outcome<()> {
    let file = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(runtime)?;
    let mut w = BufWriter::new(file);
    trace.write_ndjson(&mut w).map_err(runtime)?;
    w.flush().map_err(runtime)
}

fn cmd_ingest(args: IngestArgs) -> Outcome<()> {
    let time = |s: &Option<String>| -> Outcome<_> {
        s.as_deref()
            .map(|t| parse_timestamp(t).ok_or_else(|| invalid(anyhow!("bad timestamp `{t}`"))))
            .transpose()
    };
    let filter = TripFilter {
        origin: args.origin.clone(),
        from: time(&args.from)?,
        until: time(&args.until)?,
    };
    let cost = |s: &str, name: &str| parse_fraction(s).ok_or_else(|| invalid(anyhow!("bad --{name} `{s}`")));
    let params = EconomyParams {
        driver_cost: cost(&args.c, "c")?,
        platform_cost: cost(&args.c0, "c0")?,
        min_relocation: args.t0,
        driver_rate: args.lambda,
        patience: args.patience,
        total_demand_rate: args.total_demand,
        min_trip_count: args.min_trips,
    };
    let file = File::open(&args.trips)
        .with_context(|| format!("opening {}", args.trips.display()))
        .map_err(runtime)?;
    let parsed = parse_trips(io::BufReader::new(file), &filter).map_err(invalid)?;
    for m in parsed.malformed.iter().take(20) {
        eprintln!("line {}: skipped: {}", m.line, m.reason);
    }
    if parsed.malformed.len() > 20 {
        eprintln!("... {} malformed rows in total", parsed.malformed.len());
    }
    eprintln!(
        "{} trips kept, {} without a dropoff tract, {} outside the filter, {} malformed",
        parsed.records.len(),
        parsed.missing_destination,
        parsed.filtered_out,
        parsed.skipped()
    );
    let rate = match args.fare_rate {
        Rate::MeanOfRatios => FareRate::MeanOfRatios,
        Rate::RatioOfMeans => FareRate::RatioOfMeans,
    };
    let stats = aggregate(&parsed.records, rate);
    let e = build_economy(&stats, &params).map_err(invalid)?;
    eprintln!("{}", describe(&e));
    fs::write(&args.out, write_economy_text(&e))
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(runtime)
}
