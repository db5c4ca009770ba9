//! The `rbv-sensor` command line.

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rbv_core::analysis::{
    feature_report, feature_report_csv, pearson_matrix, subset_csv, subset_search_with_progress, top_pairs_graph,
    CorrelationScope, SearchOptions,
};
use rbv_core::chaos::{ChaosParams, Topology};
use rbv_core::data::{
    csv_schema, generate_synthetic, load_csv, stratified_folds, write_csv, AttractorSpec, Dataset, ScalerKind,
    ScalerParams,
};
use rbv_core::hgb::{export_hgb, parse_hgb, render_hgb, HgbModel, HgbParams, HgbTrainer, HGB_MAGIC};
use rbv_core::lognnet::{LogNNetClassifier, LogNNetTrainer, TrainParams};
use rbv_core::quantize::{
    parse_model, quantize, ram_budget, render_model, QuantizedModel, RamOverheads, RamSizes, DEFAULT_SCALE_FACTOR,
    MAGIC,
};
use rbv_core::validate::{accuracy, cross_validate, Trainer};
use rbv_core::wire::{encode_reply, FrameParser};

use crate::protocol::ServiceResponse;
use crate::router::{EdgeNode, RouteOutcome, RoutePolicy, ENDPOINT_ENV};
use crate::service::serve_cloud;

/// Feature tuples of size 3 over more features than this need `--full-sweep`.
pub const TRIPLE_SWEEP_LIMIT: usize = 15;

#[derive(Debug, Parser)]
#[command(
    name = "rbv-sensor",
    version,
    about = "Blood-value diagnosis: LogNNet edge model, HGB cloud model, analysis tools"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Model file to read.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output file (or directory for `analyze`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled dataset as CSV.
    GenData(GenData),
    /// Train a float LogNNet classifier (JSON).
    TrainLognnet(TrainLognnet),
    /// Train a gradient-boosting classifier (HGB1).
    TrainHgb(TrainHgb),
    /// Quantize a LogNNet classifier to a LOGNNET1 library plus scaler sidecar.
    Quantize(QuantizeArgs),
    /// Validate a LOGNNET1 or HGB1 file and write it back in canonical form.
    ExportModel,
    /// Validate a LOGNNET1 or HGB1 file and print a summary.
    ImportModel,
    /// Predict every record of a CSV file.
    Predict(PredictArgs),
    /// Correlation matrices and single-feature threshold report.
    Analyze(DataArg),
    /// Rank feature subsets of size 1, 2 or 3 by cross-validated accuracy.
    Search(SearchArgs),
    /// Run the cloud service.
    Serve(ServeArgs),
    /// Read `T`/`FN` frames from stdin and answer each with a class digit.
    Edge(EdgeArgs),
    /// Print the device RAM budget.
    Rambudget(RamArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Separable,
    Cruciform,
    Xor,
    Correlated,
}

#[derive(Debug, Args)]
pub struct GenData {
    #[arg(long, value_enum, default_value_t = ShapeArg::Cruciform)]
    pub shape: ShapeArg,
    /// Number of features; 51 uses the blood-value names.
    #[arg(long, default_value_t = 51)]
    pub features: usize,
    #[arg(long, default_value_t = 500)]
    pub n_per_class: usize,
    /// In-class correlation of the planted pair for `correlated`.
    #[arg(long, default_value_t = 0.9)]
    pub correlation: f64,
    /// Overrides the shape's noise level.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Labeled CSV file.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalerArg {
    Minmax,
    Robust,
    None,
}

#[derive(Debug, Args)]
pub struct TrainLognnet {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ScalerArg::Minmax)]
    pub scaler: ScalerArg,
    #[arg(long, default_value_t = 50)]
    pub reservoir: usize,
    #[arg(long, default_value_t = 20)]
    pub hidden: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HgbArgs {
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 31)]
    pub max_leaves: usize,
    #[arg(long, default_value_t = 20)]
    pub min_samples_leaf: usize,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 255)]
    pub max_bins: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

impl HgbArgs {
    fn params(&self, seed: u64) -> HgbParams {
        HgbParams {
            trees: self.trees,
            learning_rate: self.learning_rate,
            max_leaves: self.max_leaves,
            min_samples_leaf: self.min_samples_leaf,
            l2: self.l2,
            max_bins: self.max_bins,
            max_depth: self.max_depth,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainHgb {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub hgb: HgbArgs,
    /// Pick learning rate, tree count and leaf count from a small grid by
    /// cross-validated accuracy before the final fit.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long, default_value_t = DEFAULT_SCALE_FACTOR)]
    pub scale_factor: u32,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// Cloud endpoint; defaults to $SENSOR_CLOUD_ADDR, then 127.0.0.1:7878.
    #[arg(long)]
    pub cloud: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub connect_timeout_ms: u64,
    #[arg(long, default_value_t = 1000)]
    pub response_timeout_ms: u64,
    #[arg(long, default_value_t = 1)]
    pub retries: u32,
}

impl RouteArgs {
    fn policy(&self) -> RoutePolicy {
        let mut p = RoutePolicy::from_env();
        if let Some(addr) = &self.cloud {
            p.endpoint = addr.clone();
        }
        p.connect_timeout_ms = self.connect_timeout_ms;
        p.response_timeout_ms = self.response_timeout_ms;
        p.retries = self.retries;
        p
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Scaler sidecar for a LOGNNET1 model; defaults to `<model>.scaler.json`
    /// when that file exists.
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// With a LOGNNET1 model: ask the cloud service first, fall back locally.
    #[arg(long)]
    pub route: bool,
    #[command(flatten)]
    pub net: RouteArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrainerArg {
    Hgb,
    Lognnet,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub size: u8,
    /// Use only the first N features.
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = TrainerArg::Hgb)]
    pub trainer: TrainerArg,
    /// Allow triple sweeps over more than 15 features.
    #[arg(long)]
    pub full_sweep: bool,
    #[command(flatten)]
    pub hgb: HgbArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = crate::router::DEFAULT_ENDPOINT)]
    pub bind: String,
}

#[derive(Debug, Args)]
pub struct EdgeArgs {
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Never contact the cloud.
    #[arg(long)]
    pub offline: bool,
    #[command(flatten)]
    pub net: RouteArgs,
}

#[derive(Debug, Args)]
pub struct RamArgs {
    /// `S,P,M,outputs`.
    #[arg(long, default_value = "51,50,20,2")]
    pub topology: String,
    #[arg(long, default_value_t = 4)]
    pub float_bytes: usize,
    #[arg(long, default_value_t = 2)]
    pub int_bytes: usize,
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed,
        model: cli.model,
        out: cli.out,
    };
    match cli.command {
        Command::GenData(a) => gen_data(&ctx, &a),
        Command::TrainLognnet(a) => train_lognnet(&ctx, &a),
        Command::TrainHgb(a) => train_hgb_cmd(&ctx, &a),
        Command::Quantize(a) => quantize_cmd(&ctx, &a),
        Command::ExportModel => export_model(&ctx),
        Command::ImportModel => import_model(&ctx),
        Command::Predict(a) => predict(&ctx, &a),
        Command::Analyze(a) => analyze(&ctx, &a),
        Command::Search(a) => search(&ctx, &a),
        Command::Serve(a) => serve(&ctx, &a),
        Command::Edge(a) => edge(&ctx, &a),
        Command::Rambudget(a) => rambudget(&a),
    }
}

struct Ctx {
    seed: u64,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn model(&self) -> Result<&Path> {
        self.model.as_deref().ok_or_else(|| anyhow!("--model is required"))
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("--out is required"))
    }

    /// Writes to `--out`, or stdout when absent.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn load_labeled(path: &Path) -> Result<Dataset> {
    let schema = csv_schema(path)?;
    let d = load_csv(path, &schema).with_context(|| format!("loading {}", path.display()))?;
    if !d.is_labeled() {
        bail!("{} has unlabeled records", path.display());
    }
    Ok(d)
}

fn sidecar_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".scaler.json");
    PathBuf::from(s)
}

enum AnyModel {
    Hgb(HgbModel),
    Edge(QuantizedModel),
    Float(LogNNetClassifier),
}

fn read_model(path: &Path) -> Result<AnyModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or("");
    let ctx = || format!("parsing {}", path.display());
    if first.starts_with("HGB") {
        Ok(AnyModel::Hgb(parse_hgb(&text).with_context(ctx)?))
    } else if first.starts_with('{') {
        Ok(AnyModel::Float(serde_json::from_str(&text).with_context(ctx)?))
    } else {
        Ok(AnyModel::Edge(parse_model(&text).with_context(ctx)?))
    }
}

fn read_scaler(path: &Path) -> Result<ScalerParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn edge_scaler(model: &Path, explicit: Option<&Path>) -> Result<Option<ScalerParams>> {
    match explicit {
        Some(p) => read_scaler(p).map(Some),
        None => {
            let side = sidecar_path(model);
            if side.exists() {
                read_scaler(&side).map(Some)
            } else {
                Ok(None)
            }
        }
    }
}

fn gen_data(ctx: &Ctx, a: &GenData) -> Result<()> {
    let mut spec = match a.shape {
        ShapeArg::Separable => AttractorSpec::separable(a.features),
        ShapeArg::Cruciform => AttractorSpec::cruciform(a.features),
        ShapeArg::Xor => AttractorSpec::xor(a.features),
        ShapeArg::Correlated => AttractorSpec::class_correlation(a.features, a.correlation),
    };
    if let Some(noise) = a.noise {
        spec.noise = noise;
    }
    let d = generate_synthetic(&spec, a.n_per_class, ctx.seed)?;
    let out = ctx.out()?;
    write_csv(&d, out)?;
    eprintln!(
        "wrote {} records x {} features to {}",
        d.len(),
        d.feature_count(),
        out.display()
    );
    Ok(())
}

fn train_lognnet(ctx: &Ctx, a: &TrainLognnet) -> Result<()> {
    let d = load_labeled(&a.data)?;
    let defaults = TrainParams::default();
    let trainer = LogNNetTrainer {
        shape: Topology::new(d.feature_count(), a.reservoir, a.hidden, 1)?,
        chaos: ChaosParams::default(),
        params: TrainParams {
            epochs: a.epochs.unwrap_or(defaults.epochs),
            learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
            batch_size: a.batch_size.unwrap_or(defaults.batch_size),
            ..defaults
        },
        scaling: match a.scaler {
            ScalerArg::Minmax => Some(ScalerKind::MinMax),
            ScalerArg::Robust => Some(ScalerKind::Robust),
            ScalerArg::None => None,
        },
    };
    let model = trainer.train(&d, ctx.seed)?;
    let acc = accuracy(&model, &d)?;
    let out = ctx.out()?;
    fs::write(out, serde_json::to_string_pretty(&model)? + "\n")?;
    println!("topology {} training accuracy {acc}", model.model.topology);
    Ok(())
}

const GRID_LR: [f64; 3] = [0.05, 0.1, 0.2];
const GRID_TREES: [usize; 3] = [50, 100, 200];
const GRID_LEAVES: [usize; 2] = [15, 31];

fn train_hgb_cmd(ctx: &Ctx, a: &TrainHgb) -> Result<()> {
    let d = load_labeled(&a.data)?;
    let mut params = a.hgb.params(ctx.seed);
    if a.grid {
        let folds = stratified_folds(&d, a.folds, ctx.seed)?;
        let mut best: Option<(f64, HgbParams)> = None;
        for lr in GRID_LR {
            for trees in GRID_TREES {
                for max_leaves in GRID_LEAVES {
                    let candidate = HgbParams {
                        learning_rate: lr,
                        trees,
                        max_leaves,
                        ..params.clone()
                    };
                    let trainer = HgbTrainer {
                        params: candidate.clone(),
                    };
                    let cv = cross_validate(&trainer, &d, &folds, ctx.seed)?;
                    eprintln!("grid lr={lr} trees={trees} leaves={max_leaves} cv={}", cv.mean_accuracy);
                    if best.as_ref().is_none_or(|(acc, _)| cv.mean_accuracy > *acc) {
                        best = Some((cv.mean_accuracy, candidate));
                    }
                }
            }
        }
        let (acc, chosen) = best.expect("non-empty grid");
        println!(
            "grid choice lr={} trees={} leaves={} cv accuracy {acc}",
            chosen.learning_rate, chosen.trees, chosen.max_leaves
        );
        params = chosen;
    }
    let model = HgbTrainer { params }.fit(&d, ctx.seed)?;
    export_hgb(&model, ctx.out()?)?;
    println!(
        "trees {} training accuracy {}",
        model.trees.len(),
        accuracy(&model, &d)?
    );
    Ok(())
}

fn quantize_cmd(ctx: &Ctx, a: &QuantizeArgs) -> Result<()> {
    let AnyModel::Float(c) = read_model(ctx.model()?)? else {
        bail!("quantize needs a LogNNet JSON model from train-lognnet");
    };
    let q = quantize(&c.model, a.scale_factor)?;
    let out = ctx.out()?;
    fs::write(out, render_model(&q))?;
    let side = sidecar_path(out);
    match &c.scaler {
        Some(s) => fs::write(&side, serde_json::to_string_pretty(s)? + "\n")?,
        None if side.exists() => fs::remove_file(&side)?,
        None => {}
    }
    println!("{MAGIC} topology {} scale {}", q.topology, q.scale_factor);
    Ok(())
}

fn export_model(ctx: &Ctx) -> Result<()> {
    let text = match read_model(ctx.model()?)? {
        AnyModel::Hgb(m) => render_hgb(&m),
        AnyModel::Edge(q) => render_model(&q),
        AnyModel::Float(c) => serde_json::to_string_pretty(&c)? + "\n",
    };
    fs::write(ctx.out()?, text)?;
    Ok(())
}

fn import_model(ctx: &Ctx) -> Result<()> {
    match read_model(ctx.model()?)? {
        AnyModel::Hgb(m) => println!(
            "{HGB_MAGIC} features {} trees {} learning_rate {} base_score {}",
            m.feature_count(),
            m.trees.len(),
            m.params.learning_rate,
            m.base_score
        ),
        AnyModel::Edge(q) => println!("{MAGIC} topology {} scale {}", q.topology, q.scale_factor),
        AnyModel::Float(c) => println!("lognnet-json topology {}", c.model.topology),
    }
    Ok(())
}

fn prediction_csv(rows: &[ServiceResponse]) -> String {
    let mut out = String::from("row,class,confidence,model\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{}\n", r.class, r.confidence, r.tag));
    }
    out
}

fn predict(ctx: &Ctx, a: &PredictArgs) -> Result<()> {
    let model_path = ctx.model()?;
    let schema = csv_schema(&a.data)?;
    let d = load_csv(&a.data, &schema).with_context(|| format!("loading {}", a.data.display()))?;
    let mut rows = Vec::with_capacity(d.len());
    match read_model(model_path)? {
        AnyModel::Hgb(m) => {
            if a.route {
                bail!("--route needs an edge (LOGNNET1) model");
            }
            for r in d.records() {
                rows.push(crate::service::predict_response(&m, &r.values).map_err(|e| anyhow!("{e}"))?);
            }
        }
        AnyModel::Edge(q) => {
            let node = EdgeNode::new(q, edge_scaler(model_path, a.scaler.as_deref())?, a.net.policy());
            for r in d.records() {
                let outcome = if a.route {
                    node.route(&r.values)?
                } else {
                    node.offline(&r.values)?
                };
                rows.push(outcome.response);
            }
        }
        AnyModel::Float(c) => {
            for r in d.records() {
                let o = c.predict(&r.values)?;
                rows.push(ServiceResponse {
                    class: o.predicted_class,
                    confidence: o.confidence().clamp(0.0, 1.0),
                    tag: crate::protocol::ModelTag::EdgeLogNNet,
                });
            }
        }
    }
    ctx.emit(&prediction_csv(&rows))
}

fn analyze(ctx: &Ctx, a: &DataArg) -> Result<()> {
    let d = load_labeled(&a.data)?;
    let dir = ctx.out()?;
    fs::create_dir_all(dir)?;
    for (scope, name) in [
        (CorrelationScope::All, "correlation_all.csv"),
        (CorrelationScope::Positive, "correlation_positive.csv"),
        (CorrelationScope::Negative, "correlation_negative.csv"),
    ] {
        fs::write(dir.join(name), pearson_matrix(&d, scope)?.to_csv()?)?;
    }
    let mut report = feature_report(&d)?;
    fs::write(dir.join("features.csv"), feature_report_csv(&report)?)?;
    report.sort_by(|x, y| {
        let acc = |r: &rbv_core::analysis::FeatureReport| r.cut.map_or(0.0, |c| c.accuracy);
        acc(y).total_cmp(&acc(x))
    });
    println!("{:<14} {:>10} {:>10}", "feature", "r", "A_th");
    for r in report.iter().take(10) {
        let corr = r.r_diagnosis.map_or("-".to_string(), |v| format!("{v:.3}"));
        let acc = r.cut.map_or("-".to_string(), |c| format!("{:.4}", c.accuracy));
        println!("{:<14} {corr:>10} {acc:>10}", r.feature);
    }
    Ok(())
}

fn search(ctx: &Ctx, a: &SearchArgs) -> Result<()> {
    let full = load_labeled(&a.data)?;
    let n = a.features.unwrap_or(full.feature_count()).min(full.feature_count());
    let d = full.select_features(&(0..n).collect::<Vec<_>>())?;
    let size = a.size as usize;
    if size == 3 && n > TRIPLE_SWEEP_LIMIT && !a.full_sweep {
        bail!("a triple sweep over {n} features needs --full-sweep (limit {TRIPLE_SWEEP_LIMIT} without it)");
    }
    let folds = stratified_folds(&d, a.folds, ctx.seed)?;
    let opts = SearchOptions {
        seed: ctx.seed,
        workers: a.workers,
        shuffle: None,
    };
    let step = |done: usize, total: usize| {
        if a.full_sweep && (done.is_multiple_of(100) || done == total) {
            eprintln!("search {done}/{total}");
        }
    };
    let results = match a.trainer {
        TrainerArg::Hgb => {
            let trainer = HgbTrainer {
                params: a.hgb.params(ctx.seed),
            };
            subset_search_with_progress(&d, size, &trainer, &folds, a.top, &opts, &step)?
        }
        TrainerArg::Lognnet => {
            subset_search_with_progress(&d, size, &LogNNetTrainer::default(), &folds, a.top, &opts, &step)?
        }
    };
    if size == 2 {
        let g = top_pairs_graph(&results, results.len())?;
        if let Some(&(hub, degree)) = g.hubs.first() {
            eprintln!("most connected feature {} ({degree} pairs)", d.feature_names()[hub]);
        }
    }
    ctx.emit(&subset_csv(&results, d.feature_names())?)
}

fn serve(ctx: &Ctx, a: &ServeArgs) -> Result<()> {
    let AnyModel::Hgb(m) = read_model(ctx.model()?)? else {
        bail!("serve needs an HGB1 model");
    };
    let service = serve_cloud(m, a.bind.as_str()).with_context(|| format!("binding {}", a.bind))?;
    println!("listening on {}", service.local_addr());
    io::stdout().flush()?;
    service.wait();
    Ok(())
}

fn edge(ctx: &Ctx, a: &EdgeArgs) -> Result<()> {
    let model_path = ctx.model()?;
    let AnyModel::Edge(q) = read_model(model_path)? else {
        bail!("edge needs a LOGNNET1 model");
    };
    let policy = a.net.policy();
    if !a.offline {
        eprintln!(
            "cloud endpoint {} (override with --cloud or {ENDPOINT_ENV})",
            policy.endpoint
        );
    }
    let node = EdgeNode::new(q, edge_scaler(model_path, a.scaler.as_deref())?, policy);
    let mut parser = FrameParser::new();
    let mut stdin = io::stdin().lock();
    let mut stdout = BufWriter::new(io::stdout().lock());
    let mut answered = Vec::new();
    let mut failures = 0usize;
    let mut buf = [0u8; 4096];
    loop {
        let n = match stdin.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        };
        for frame in parser.feed(&buf[..n]) {
            let index = answered.len() + failures;
            if frame.is_malformed() {
                eprintln!("frame {index}: malformed values at {:?} read as 0", frame.malformed);
            }
            let routed: Result<RouteOutcome, _> = if a.offline {
                node.offline(&frame.values)
            } else {
                node.route(&frame.values)
            };
            match routed {
                Ok(o) => {
                    stdout.write_all(&[encode_reply(o.response.class)?])?;
                    stdout.flush()?;
                    if let Some(reason) = &o.fallback_reason {
                        eprintln!("frame {index}: cloud unavailable ({reason}), answered locally");
                    }
                    answered.push(o.response);
                }
                Err(e) => {
                    eprintln!("frame {index}: {e}");
                    failures += 1;
                }
            }
        }
    }
    if parser.pending() {
        eprintln!("input ended inside a frame; partial frame dropped");
    }
    if let Some(path) = &ctx.out {
        fs::write(path, prediction_csv(&answered))?;
    }
    if failures > 0 {
        bail!("{failures} frame(s) could not be classified");
    }
    Ok(())
}

fn rambudget(a: &RamArgs) -> Result<()> {
    let parts: Vec<usize> = a
        .topology
        .split([',', ':'])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad topology `{}`", a.topology))?;
    let [s, p, m, outputs] = parts[..] else {
        bail!("topology needs four numbers S,P,M,outputs, got `{}`", a.topology);
    };
    if outputs < 2 {
        bail!("at least two outputs are required");
    }
    let t = Topology::new(s, p, m, outputs - 1)?;
    let b = ram_budget(
        &t,
        RamSizes {
            float_bytes: a.float_bytes,
            int_bytes: a.int_bytes,
        },
        RamOverheads::default(),
    );
    println!("topology {t}");
    print!("{b}");
    Ok(())
}
