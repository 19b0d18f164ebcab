//! `zebra` — event retrieval over multi-dimensional time series via a
//! Morton-code secondary index.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use zebra_cli::bench::{self, BenchResult};
use zebra_cli::format::StoreDir;
use zebra_cli::ingest::ingest_csv;
use zebra_cli::synth::{self, Generator, Maneuver, ManeuverKind, ScenarioSpec};
use zebra_core::detect::{self, Detector};
use zebra_core::mask::{parse_mask, SearchMask};
use zebra_core::quant::{DimSpec, QuantizationConfig};
use zebra_core::store::Store;

#[derive(Parser)]
#[command(
    name = "zebra",
    about = "Morton-order event retrieval over multi-dimensional time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic annotated recording as ingest CSV.
    Generate(GenerateArgs),
    /// Build a store directory (log, Morton index, manifest) from CSV.
    Ingest(IngestArgs),
    /// Run a search mask against a store and print matching events.
    Query(QueryArgs),
    /// Export the (time, code) stripe spectrum of a store.
    Spectrum(SpectrumArgs),
    /// Verify index completeness and manifest consistency of a store.
    Audit(AuditArgs),
    /// Reproduce the query-duration experiment across detectors,
    /// stage counts and store sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Recording length in seconds.
    #[arg(long)]
    duration_s: f64,
    /// Sample rate; must divide 1000 ms evenly.
    #[arg(long, default_value_t = 100)]
    rate_hz: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Background noise bound in m/s^2.
    #[arg(long, default_value_t = 0.25)]
    noise_amp: f64,
    /// Background resting point, `ax,ay`.
    #[arg(long, default_value = "0,0", value_parser = parse_pair, allow_hyphen_values = true)]
    noise_center: (f64, f64),
    /// Maneuver to embed as `kind:t_ms:magnitude`
    /// (kind is `braking` or `lane_change`); repeatable.
    #[arg(long = "maneuver", value_parser = parse_maneuver)]
    maneuvers: Vec<Maneuver>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth annotations CSV path.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Input CSV (`t_ms,v0,...`; header optional).
    #[arg(long)]
    csv: PathBuf,
    /// Store directory to create.
    #[arg(long)]
    store: PathBuf,
    /// Per-dimension quantization as `min:max:bits`; repeat once per
    /// dimension.
    #[arg(long = "dim", value_parser = parse_dim, required = true, allow_hyphen_values = true)]
    dims: Vec<DimSpec>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    store: PathBuf,
    /// Mask file; the mask name defaults to the file stem.
    #[arg(long)]
    mask: PathBuf,
    /// `bf-primitive`, `bf-improved`, `sfc`, or `all` (runs every
    /// detector and fails on any disagreement).
    #[arg(long, default_value = "sfc")]
    detector: String,
    /// Write events CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = 1)]
    bucket_ms: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    store: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory for the generated benchmark stores.
    #[arg(long)]
    work_dir: PathBuf,
    /// Store sizes (entry counts), ascending.
    #[arg(
        long,
        default_value = "100000,1000000,10000000,30000000",
        value_delimiter = ','
    )]
    sizes: Vec<usize>,
    /// Stage counts to benchmark.
    #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
    stages: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    masks_per_stage: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Timed repetitions per cell (median is reported).
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Reuse stores already present in the work directory.
    #[arg(long)]
    reuse_stores: bool,
    /// Write results.csv and summary.csv here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Ingest(args) => ingest(args),
        Command::Query(args) => query(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Audit(args) => audit(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{text}`"))?;
    Ok((
        a.trim().parse().map_err(|_| format!("bad number `{a}`"))?,
        b.trim().parse().map_err(|_| format!("bad number `{b}`"))?,
    ))
}

fn parse_maneuver(text: &str) -> Result<Maneuver, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected `kind:t_ms:magnitude`, got `{text}`"));
    }
    let kind = ManeuverKind::parse(parts[0])
        .ok_or_else(|| format!("unknown maneuver kind `{}`", parts[0]))?;
    let t_insert_ms: i64 = parts[1]
        .parse()
        .map_err(|_| format!("bad insertion time `{}`", parts[1]))?;
    let magnitude: f64 = parts[2]
        .parse()
        .map_err(|_| format!("bad magnitude `{}`", parts[2]))?;
    Ok(Maneuver {
        kind,
        t_insert_ms,
        magnitude,
    })
}

fn parse_dim(text: &str) -> Result<DimSpec, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected `min:max:bits`, got `{text}`"));
    }
    let min: f64 = parts[0].parse().map_err(|_| format!("bad min `{}`", parts[0]))?;
    let max: f64 = parts[1].parse().map_err(|_| format!("bad max `{}`", parts[1]))?;
    let bits: u32 = parts[2].parse().map_err(|_| format!("bad bits `{}`", parts[2]))?;
    Ok(DimSpec::new(min, max, bits))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let spec = ScenarioSpec {
        duration_s: args.duration_s,
        sample_rate_hz: args.rate_hz,
        rng_seed: args.seed,
        maneuvers: args.maneuvers,
        noise_amplitude: args.noise_amp,
        noise_center: [args.noise_center.0, args.noise_center.1],
    };
    let generator = Generator::new(&spec)?;
    let out = File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    synth::write_csv(&generator, BufWriter::new(out))?;
    eprintln!(
        "wrote {} samples ({} maneuvers) to {}",
        generator.len(),
        generator.annotations().len(),
        args.out.display()
    );
    if let Some(path) = args.annotations {
        let out = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        synth::write_annotations_csv(&generator, BufWriter::new(out))?;
        eprintln!("wrote annotations to {}", path.display());
    }
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let config = QuantizationConfig::new(args.dims)?;
    let file = File::open(&args.csv).with_context(|| format!("opening {}", args.csv.display()))?;
    let started = Instant::now();
    let store = ingest_csv(BufReader::with_capacity(1 << 20, file), config)?;
    let dir = StoreDir::write(&args.store, &store)?;
    eprintln!(
        "ingested {} samples into {} in {:.2} s",
        store.len(),
        dir.root().display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn open_store(path: &Path) -> Result<Store> {
    StoreDir::new(path)
        .open()
        .with_context(|| format!("opening store {}", path.display()))
}

fn load_mask(path: &Path) -> Result<SearchMask> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mask = parse_mask(&text).with_context(|| format!("parsing {}", path.display()))?;
    if mask.name().is_empty() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "mask".into());
        Ok(mask.with_name(stem))
    } else {
        Ok(mask)
    }
}

fn events_csv(events: &[zebra_core::mask::Event], mask: &str, detector: Detector) -> String {
    let mut out = String::from("t_start_ms,t_end_ms,mask_name,detector\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.t_start_ms,
            e.t_end_ms,
            mask,
            detector.name()
        ));
    }
    out
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn query(args: QueryArgs) -> Result<()> {
    let store = open_store(&args.store)?;
    let mask = load_mask(&args.mask)?;
    let detector = match args.detector.as_str() {
        "bf-primitive" => Some(Detector::BfPrimitive),
        "bf-improved" => Some(Detector::BfImproved),
        "sfc" => Some(Detector::Sfc),
        "all" => None,
        other => bail!("unknown detector `{other}` (bf-primitive, bf-improved, sfc, all)"),
    };
    match detector {
        Some(d) => {
            let started = Instant::now();
            let events = detect::detect(d, &store, &mask)?;
            let elapsed = started.elapsed();
            write_or_print(&events_csv(&events, mask.name(), d), args.out.as_deref())?;
            eprintln!(
                "{}: {} event(s) in {} us",
                d.name(),
                events.len(),
                elapsed.as_micros()
            );
        }
        None => {
            // Run everything, verify equivalence, report the index-backed
            // events. Any disagreement is a hard failure.
            bench::verify_store_matrix(
                &args.store.display().to_string(),
                &store,
                std::slice::from_ref(&mask),
                false,
            )?;
            let events = detect::detect(Detector::Sfc, &store, &mask)?;
            write_or_print(
                &events_csv(&events, mask.name(), Detector::Sfc),
                args.out.as_deref(),
            )?;
            eprintln!("all detectors agree: {} event(s)", events.len());
        }
    }
    Ok(())
}

fn spectrum(args: SpectrumArgs) -> Result<()> {
    let store = open_store(&args.store)?;
    let mut out = String::from("t_ms,code\n");
    for (t, code) in store.spectrum(args.bucket_ms)? {
        out.push_str(&format!("{t},{code}\n"));
    }
    write_or_print(&out, args.out.as_deref())
}

fn audit(args: AuditArgs) -> Result<()> {
    let dir = StoreDir::new(&args.store);
    let manifest = dir.read_manifest()?;
    let store = dir.open()?;
    store.audit().context("index audit failed")?;
    println!(
        "ok: {} entries, {} dims, time range [{}, {}] ms",
        manifest.entry_count,
        manifest.config.dims(),
        manifest.t_min_ms,
        manifest.t_max_ms
    );
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    if args.sizes.is_empty() || args.stages.is_empty() {
        bail!("need at least one size and one stage count");
    }
    let config = bench::bench_quant_config();
    let total = *args.sizes.last().unwrap();
    let scenario = bench::bench_scenario(args.seed, total, &args.sizes);

    // Transform phase: one recording, one store per ladder prefix. This
    // runs once; every query below reuses the stores unchanged.
    let dirs: Vec<StoreDir> = if args.reuse_stores {
        args.sizes
            .iter()
            .map(|n| StoreDir::new(args.work_dir.join(format!("store_{n}"))))
            .collect()
    } else {
        let started = Instant::now();
        let dirs = synth::scale_corpus(&scenario, &config, &args.sizes, &args.work_dir)?;
        eprintln!(
            "built {} store(s) under {} in {:.1} s",
            dirs.len(),
            args.work_dir.display(),
            started.elapsed().as_secs_f64()
        );
        dirs
    };

    // Masks qualify against the largest store: each must detect at least
    // one event there.
    let largest = dirs.last().unwrap();
    let filter_store = largest.open()?;
    let mut masks: Vec<SearchMask> = Vec::new();
    for &stages in &args.stages {
        masks.extend(bench::qualified_masks(
            args.seed,
            stages,
            args.masks_per_stage,
            &bench::BENCH_BOUNDS,
            &filter_store,
            20_000,
        )?);
    }
    eprintln!("qualified {} masks", masks.len());

    let mut results: Vec<BenchResult> = Vec::new();
    let label_of = |n: usize| format!("store_{n}");
    // Largest store is already in memory; bench it first, then the rest.
    results.extend(bench::run_store_matrix(
        &label_of(filter_store.len()),
        &filter_store,
        &masks,
        &Detector::ALL,
        args.repetitions,
    )?);
    drop(filter_store);
    for dir in dirs.iter().rev().skip(1) {
        let store = dir.open()?;
        results.extend(bench::run_store_matrix(
            &label_of(store.len()),
            &store,
            &masks,
            &Detector::ALL,
            args.repetitions,
        )?);
    }
    results.sort_by(|a, b| {
        (a.stage_count, a.store_entries, a.detector.name(), &a.mask_name).cmp(&(
            b.stage_count,
            b.store_entries,
            b.detector.name(),
            &b.mask_name,
        ))
    });

    let rows = bench::summarize(&results);
    print!("{}", bench::summary_table(&rows));
    if let Some(out_dir) = args.out_dir {
        fs::create_dir_all(&out_dir)?;
        fs::write(out_dir.join("results.csv"), bench::results_csv(&results))?;
        fs::write(out_dir.join("summary.csv"), bench::summary_csv(&rows))?;
        eprintln!("wrote results.csv and summary.csv to {}", out_dir.display());
    }
    Ok(())
}
