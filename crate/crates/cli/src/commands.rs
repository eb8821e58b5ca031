use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use mkdist::classify::{
    distance_matrix, evaluate, kappa_sweep, read_labels, write_sweep_csv, ClassificationReport, DistanceMatrix,
    LabeledDataset, LabeledItem, Metric, SweepConfig, SweepRow, DEFAULT_KAPPAS,
};
use mkdist::imaging::{downsample_bicubic, l2_distance, load_pgm, to_distribution, GrayImage};
use mkdist::oracle::lp_distance;
use mkdist::synth::{generate_images, samples_to_dataset, write_samples, SynthSpec};
use mkdist::transport::{quantize_jointly, unbalanced_distance};
use mkdist::{balanced_distance, Grid, GroundCost, MassDistribution};

/// Bad flag values; exits with status 1.
#[derive(Debug)]
pub struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&v| v > 0);
        match (parse(w), parse(h)) {
            (Some(width), Some(height)) => Ok(Size { width, height }),
            _ => Err(format!("expected positive WIDTHxHEIGHT, got {s:?}")),
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Mk,
    L2,
}

#[derive(Parser, Debug)]
#[command(name = "mkdist", version, about = "Monge-Kantorovich distances between grayscale images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distance between two PGM images.
    Distance(DistanceArgs),
    /// Pairwise distance matrix of a labeled image directory.
    Matrix(MatrixArgs),
    /// Repeated nearest-neighbour evaluation of a distance matrix.
    Classify(ClassifyArgs),
    /// Error rate across creation/destruction prices, plus l2.
    Sweep(SweepArgs),
    /// Write a synthetic labeled dataset.
    Synth(SynthArgs),
    /// Compare the flow solver with the dense LP on random instances.
    OracleCheck(OracleArgs),
    /// Time single-pair solves across prices and image sizes.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TransportFlags {
    /// Ground cost exponent.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Quantization units per distribution.
    #[arg(long, default_value_t = 1_000_000)]
    pub resolution: u64,
    /// Scale each image to unit mass first.
    #[arg(long)]
    pub normalize: bool,
    /// Resample every image to this size first.
    #[arg(long, value_name = "WxH")]
    pub resize: Option<Size>,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    pub image_a: PathBuf,
    pub image_b: PathBuf,
    #[arg(long, value_enum, default_value = "mk")]
    pub metric: MetricKind,
    /// Creation/destruction price; balanced transport when omitted.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[command(flatten)]
    pub transport: TransportFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    /// Directory holding `<id>.pgm` files.
    #[arg(long)]
    pub dir: PathBuf,
    /// `id,label` CSV; defaults to `<dir>/labels.csv`. Fixes the item order.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mk")]
    pub metric: MetricKind,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[command(flatten)]
    pub transport: TransportFlags,
    /// Worker threads.
    #[arg(long, env = "MKDIST_WORKERS")]
    pub workers: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 1000)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-repeat report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SynthFlags {
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 60)]
    pub per_class: usize,
    #[arg(long, value_name = "WxH", default_value = "29x24")]
    pub size: Size,
    #[arg(long, default_value_t = 2.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub blobs: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub blob_sigma: f64,
    #[arg(long, default_value_t = 12.0)]
    pub template_mass: f64,
    #[arg(long = "synth-seed", default_value_t = 2008)]
    pub synth_seed: u64,
}

impl SynthFlags {
    fn spec(&self) -> SynthSpec {
        SynthSpec {
            classes: self.classes,
            per_class: self.per_class,
            width: self.size.width,
            height: self.size.height,
            jitter_px: self.jitter,
            noise_sigma: self.noise,
            blob_counts: self.blobs.clone(),
            blob_sigma: self.blob_sigma,
            template_mass: self.template_mass,
            seed: self.synth_seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, conflicts_with = "synth")]
    pub dir: Option<PathBuf>,
    #[arg(long, requires = "dir")]
    pub labels: Option<PathBuf>,
    /// Use a generated dataset instead of a directory.
    #[arg(long)]
    pub synth: bool,
    #[command(flatten)]
    pub spec: SynthFlags,
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    #[command(flatten)]
    pub transport: TransportFlags,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 1000)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "MKDIST_WORKERS")]
    pub workers: Option<usize>,
    /// Table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub spec: SynthFlags,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Largest grid side.
    #[arg(long, default_value_t = 4)]
    pub max_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub resolution: u64,
    /// Relative tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_name = "WxH", default_value = "29x24", value_delimiter = ',')]
    pub size: Vec<Size>,
    #[arg(long, value_delimiter = ',', default_value = "1,16,32")]
    pub kappas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub resolution: u64,
    /// Timed runs per cell; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Distance(a) => cmd_distance(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn check_transport(t: &TransportFlags) -> Result<()> {
    if !(t.p > 0.0 && t.p.is_finite()) {
        return usage(format!("--p must be positive, got {}", t.p));
    }
    if t.resolution == 0 {
        return usage("--resolution must be at least 1");
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return usage(format!("--kappa must be positive and finite, got {kappa}"));
    }
    Ok(())
}

fn workers(flag: Option<usize>) -> Result<usize> {
    match flag {
        Some(0) => usage("--workers must be positive"),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load_image(path: &Path, resize: Option<Size>) -> Result<GrayImage> {
    let image = load_pgm(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match resize {
        Some(s) => downsample_bicubic(&image, s.width, s.height)?,
        None => image,
    })
}

fn load_distribution(path: &Path, t: &TransportFlags) -> Result<MassDistribution> {
    Ok(to_distribution(&load_image(path, t.resize)?, 1.0, t.normalize)?)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_distance(a: DistanceArgs) -> Result<()> {
    check_transport(&a.transport)?;
    if let Some(k) = a.kappa {
        check_kappa(k)?;
    }
    let f0 = load_distribution(&a.image_a, &a.transport)?;
    let f1 = load_distribution(&a.image_b, &a.transport)?;
    if f0.grid() != f1.grid() {
        let (g0, g1) = (f0.grid(), f1.grid());
        bail!(
            "images differ in size: {}x{} and {}x{} (use --resize)",
            g0.width(),
            g0.height(),
            g1.width(),
            g1.height()
        );
    }
    match a.metric {
        MetricKind::L2 => {
            let value = l2_distance(&f0, &f1)?;
            if a.json {
                print_json(&json!({ "metric": "l2", "value": value }))
            } else {
                println!("{value}");
                Ok(())
            }
        }
        MetricKind::Mk => {
            let cost = GroundCost::new(*f0.grid(), *f1.grid(), a.transport.p)?;
            let r = match a.kappa {
                Some(k) => unbalanced_distance(&f0, &f1, &cost, k, a.transport.resolution)?,
                None => balanced_distance(&f0, &f1, &cost, a.transport.resolution)?,
            };
            if a.json {
                print_json(&json!({
                    "metric": "mk",
                    "value": r.value,
                    "kappa": r.kappa,
                    "p": a.transport.p,
                    "resolution": a.transport.resolution,
                    "plan_entries": r.plan.len(),
                    "created_mass": r.created_mass,
                    "destroyed_mass": r.destroyed_mass,
                    "edges_before_prune": r.stats.edges_before_prune,
                    "edges_after_prune": r.stats.edges_after_prune,
                    "simplex_iterations": r.stats.simplex_iterations,
                    "quantization_unit": r.stats.quantization_unit,
                    "quantization_error_bound": r.stats.quantization_error_bound,
                }))
            } else {
                println!("{}", r.value);
                Ok(())
            }
        }
    }
}

fn read_label_file(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_labels(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Items in labels-file order; every PGM in `dir` needs a label and every
/// label a file.
fn load_dataset(dir: &Path, labels: Option<&Path>, t: &TransportFlags) -> Result<LabeledDataset> {
    let labels_path = labels.map_or_else(|| dir.join("labels.csv"), Path::to_path_buf);
    let rows = read_label_file(&labels_path)?;
    let known: HashSet<&str> = rows.iter().map(|(id, _)| id.as_str()).collect();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    files.sort();
    for f in &files {
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if !known.contains(stem) {
            bail!("no label for file {} in {}", f.display(), labels_path.display());
        }
    }
    let items = rows
        .iter()
        .map(|(id, label)| {
            let path = dir.join(format!("{id}.pgm"));
            if !path.exists() {
                bail!("label {id:?} has no image file {}", path.display());
            }
            Ok(LabeledItem { id: id.clone(), distribution: load_distribution(&path, t)?, label: label.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset::new(items)?)
}

fn cmd_matrix(a: MatrixArgs) -> Result<()> {
    check_transport(&a.transport)?;
    let metric = match a.metric {
        MetricKind::L2 => Metric::L2,
        MetricKind::Mk => {
            let Some(kappa) = a.kappa else { return usage("--metric mk needs --kappa") };
            check_kappa(kappa)?;
            Metric::Mk { kappa, p: a.transport.p, resolution: a.transport.resolution }
        }
    };
    let workers = workers(a.workers)?;
    let data = load_dataset(&a.dir, a.labels.as_deref(), &a.transport)?;
    let matrix = distance_matrix(&data, metric, workers)?;
    let mut out = open_out(a.out.as_deref())?;
    matrix.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn report_json(r: &ClassificationReport) -> Value {
    json!({
        "repeats": r.repeats,
        "mean_error": r.mean_error,
        "ci_low": r.ci_low,
        "ci_high": r.ci_high,
        "seed": r.seed,
        "train_fraction": r.train_fraction,
        "per_repeat_error": r.per_repeat_error,
    })
}

fn check_split(train_frac: f64, repeats: usize) -> Result<()> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return usage(format!("--train-frac must lie in (0, 1), got {train_frac}"));
    }
    if repeats == 0 {
        return usage("--repeats must be at least 1");
    }
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    check_split(a.train_frac, a.repeats)?;
    let file = File::open(&a.matrix).with_context(|| format!("opening {}", a.matrix.display()))?;
    let matrix = DistanceMatrix::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", a.matrix.display()))?;
    let rows = read_label_file(&a.labels)?;
    if rows.len() != matrix.len() {
        bail!("{} labels for a {}x{} matrix", rows.len(), matrix.len(), matrix.len());
    }
    let mut classes: Vec<&str> = Vec::new();
    let labels: Vec<usize> = rows
        .iter()
        .map(|(_, l)| match classes.iter().position(|c| c == l) {
            Some(k) => k,
            None => {
                classes.push(l);
                classes.len() - 1
            }
        })
        .collect();
    let report = evaluate(&matrix, &labels, a.train_frac, a.repeats, a.seed)?;
    if let Some(path) = &a.out {
        let mut out = open_out(Some(path))?;
        report.write_csv(&mut out)?;
        out.flush()?;
    }
    if a.json {
        let mut v = report_json(&report);
        v["metric"] = json!(matrix.tag());
        print_json(&v)
    } else {
        println!("{}: {}", matrix.tag(), report.summary());
        Ok(())
    }
}

fn print_sweep(rows: &[SweepRow]) {
    println!("{:<24} {:>10} {:>10} {:>10}", "metric", "mean", "ci_low", "ci_high");
    for row in rows {
        let r = &row.report;
        println!("{:<24} {:>10.4} {:>10.4} {:>10.4}", row.metric, r.mean_error, r.ci_low, r.ci_high);
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    check_transport(&a.transport)?;
    check_split(a.train_frac, a.repeats)?;
    let kappas = a.kappas.clone().unwrap_or_else(|| DEFAULT_KAPPAS.to_vec());
    if kappas.is_empty() {
        return usage("--kappas is empty");
    }
    for &k in &kappas {
        check_kappa(k)?;
    }
    let data = match (&a.dir, a.synth) {
        (Some(dir), false) => load_dataset(dir, a.labels.as_deref(), &a.transport)?,
        (None, true) => {
            let spec = a.spec.spec();
            if let Err(e) = spec.validate() {
                return usage(e.to_string());
            }
            let samples = generate_images(&spec)?;
            let samples = match a.transport.resize {
                Some(s) => samples
                    .into_iter()
                    .map(|mut x| {
                        x.image = downsample_bicubic(&x.image, s.width, s.height)?;
                        Ok(x)
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => samples,
            };
            let data = samples_to_dataset(&samples)?;
            if a.transport.normalize {
                normalized(&data)?
            } else {
                data
            }
        }
        _ => return usage("give either --dir or --synth"),
    };
    let config = SweepConfig {
        kappas,
        p: a.transport.p,
        resolution: a.transport.resolution,
        train_fraction: a.train_frac,
        repeats: a.repeats,
        seed: a.seed,
        workers: workers(a.workers)?,
    };
    let rows = kappa_sweep(&data, &config)?;
    if let Some(path) = &a.out {
        let mut out = open_out(Some(path))?;
        write_sweep_csv(&rows, &mut out)?;
        out.flush()?;
    }
    if a.json {
        let table: Vec<Value> = rows
            .iter()
            .map(|row| {
                json!({
                    "metric": row.metric,
                    "kappa": row.kappa,
                    "mean_error": row.report.mean_error,
                    "ci_low": row.report.ci_low,
                    "ci_high": row.report.ci_high,
                })
            })
            .collect();
        print_json(&json!({ "items": data.len(), "repeats": a.repeats, "seed": a.seed, "rows": table }))
    } else {
        print_sweep(&rows);
        Ok(())
    }
}

fn normalized(data: &LabeledDataset) -> Result<LabeledDataset> {
    let items = data
        .items()
        .iter()
        .map(|it| {
            let total = it.distribution.total_mass();
            let distribution = if total > 0.0 { it.distribution.scaled(1.0 / total)? } else { it.distribution.clone() };
            Ok(LabeledItem { distribution, ..it.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset::new(items)?)
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = a.spec.spec();
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    let samples = generate_images(&spec)?;
    write_samples(&samples, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} images to {}", samples.len(), a.out.display());
    Ok(())
}

fn random_distribution(rng: &mut ChaCha8Rng, grid: Grid) -> Result<MassDistribution> {
    let mass = (0..grid.len()).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) }).collect();
    Ok(MassDistribution::new(grid, mass)?)
}

fn cmd_oracle_check(a: OracleArgs) -> Result<()> {
    if a.max_size == 0 || a.trials == 0 || a.resolution == 0 {
        return usage("--trials, --max-size and --resolution must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut matched = 0;
    let mut failures = Vec::new();
    for trial in 0..a.trials {
        let mut grid = Grid::new(rng.random_range(1..=a.max_size), rng.random_range(1..=a.max_size))?;
        // keep the dense LP within its size limit
        while grid.len() * grid.len() > mkdist::oracle::MAX_PAIRS {
            grid = Grid::new(grid.width().div_ceil(2), grid.height())?;
        }
        let kappa = [0.25, 1.0, 4.0][rng.random_range(0..3)];
        let f0 = random_distribution(&mut rng, grid)?;
        let mut f1 = random_distribution(&mut rng, grid)?;
        if f0.is_zero() && f1.is_zero() {
            f1 = MassDistribution::delta(grid, 0, 1.0)?;
        }
        let cost = GroundCost::euclidean(grid);
        let flow = unbalanced_distance(&f0, &f1, &cost, kappa, a.resolution)?.value;
        let (q0, q1) = quantize_jointly(&f0, &f1, a.resolution)?;
        let lp = lp_distance(&q0, &q1, &cost, kappa)?.value;
        let scale = flow.abs().max(lp.abs());
        if (flow - lp).abs() <= a.tolerance * scale {
            matched += 1;
        } else {
            failures.push(json!({
                "trial": trial,
                "grid": format!("{}x{}", grid.width(), grid.height()),
                "kappa": kappa,
                "flow": flow,
                "lp": lp,
            }));
        }
    }
    if a.json {
        print_json(&json!({ "trials": a.trials, "matched": matched, "failures": failures }))?;
    } else {
        println!("{matched}/{} matched", a.trials);
        for f in &failures {
            eprintln!("mismatch: {f}");
        }
    }
    if matched != a.trials {
        bail!("{} of {} trials disagree with the LP", a.trials - matched, a.trials);
    }
    Ok(())
}

fn random_image(rng: &mut ChaCha8Rng, size: Size) -> Result<GrayImage> {
    let px = (0..size.width * size.height).map(|_| rng.random_range(0.0..=1.0)).collect();
    Ok(GrayImage::new(size.width, size.height, px)?)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    if a.repeats == 0 || a.resolution == 0 {
        return usage("--repeats and --resolution must be positive");
    }
    if !(a.p > 0.0 && a.p.is_finite()) {
        return usage("--p must be positive");
    }
    for &k in &a.kappas {
        check_kappa(k)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::new();
    if !a.json {
        println!("{:<8} {:>8} {:>12} {:>12} {:>10} {:>12}", "size", "kappa", "edges", "pairs", "pivots", "seconds");
    }
    for &size in &a.size {
        let f0 = to_distribution(&random_image(&mut rng, size)?, 1.0, false)?;
        let f1 = to_distribution(&random_image(&mut rng, size)?, 1.0, false)?;
        let cost = GroundCost::new(*f0.grid(), *f1.grid(), a.p)?;
        for &kappa in &a.kappas {
            let mut best = Duration::MAX;
            let mut last = None;
            for _ in 0..a.repeats {
                let t = Instant::now();
                let r = unbalanced_distance(&f0, &f1, &cost, kappa, a.resolution)?;
                best = best.min(t.elapsed());
                last = Some(r);
            }
            let r = last.expect("at least one run");
            let secs = best.as_secs_f64();
            if !a.json {
                println!(
                    "{:<8} {:>8} {:>12} {:>12} {:>10} {:>12.6}",
                    size.to_string(),
                    kappa,
                    r.stats.edges_after_prune,
                    r.stats.edges_before_prune,
                    r.stats.simplex_iterations,
                    secs
                );
            }
            rows.push(json!({
                "size": size.to_string(),
                "kappa": kappa,
                "value": r.value,
                "edges_after_prune": r.stats.edges_after_prune,
                "edges_before_prune": r.stats.edges_before_prune,
                "simplex_iterations": r.stats.simplex_iterations,
                "seconds": secs,
            }));
        }
    }
    if a.json {
        print_json(&json!({ "resolution": a.resolution, "p": a.p, "rows": rows }))?;
    }
    Ok(())
}
