//! Command-line front end. `main` parses arguments and hands them to [`run`].
//!
//! Every command writes its artifacts plus a `<artifact>.manifest.json`
//! describing how they were made, and holds a lock file in the output
//! directory while it runs.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchConfig};
use crate::data::{self, FrameFormat, SynthConfig, DEFAULT_EXTENT};
use crate::error::{Error, Result};
use crate::forecaster::{self, LossMode, StateChunk, TrainConfig};
use crate::metrics::{self, MetricRow};
use crate::report::{self, Series};
use crate::set_to_cluster::{self, HebbianConfig, DEFAULT_DECODE_THRESHOLD};
use crate::types::{Cluster, Codebook, Frame, Split, StateVector, DEFAULT_CHUNK_LEN};

const SPLIT_RATIOS: (usize, usize, usize) = (8, 1, 1);

#[derive(Parser, Debug)]
#[command(name = "swarmcast", version, about = "Hebbian clustering and forecasting of multi-agent swarms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic multi-agent scenario as JSONL frames.
    Synth(SynthArgs),
    /// Train the Hebbian codebook on a frames file.
    TrainClusters(TrainClustersArgs),
    /// Encode every frame into a state vector (CSV, one row per frame).
    Encode(EncodeArgs),
    /// Train the recurrent forecaster on encoded chunks.
    TrainForecaster(TrainForecasterArgs),
    /// Roll the forecaster out on selected chunks.
    Predict(PredictArgs),
    /// Score predictions against encoded ground truth.
    Eval(EvalArgs),
    /// Render SVG charts and cluster snapshots.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Time the encoder against per-frame Lloyd refits.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Auto,
    Jsonl,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Random split, merge, spawn and death events.
    Random,
    /// One scripted split or merge per 50-frame chunk, no random events.
    Scripted,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct FramesInput {
    /// Frames file (JSONL or CSV, raw map units).
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Map extent; coordinates are divided by it.
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub frames: usize,
    #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Preset::Random)]
    pub preset: Preset,
    /// Initial number of groups.
    #[arg(long)]
    pub groups: Option<usize>,
    /// Number of rally sites (0 = free roaming).
    #[arg(long)]
    pub sites: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    /// Also write the event log as JSON.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainClustersArgs {
    #[command(flatten)]
    pub input: FramesInput,
    #[arg(long, short = 'k', default_value_t = 64)]
    pub k: usize,
    /// Hebbian learning rate.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Frames per update batch.
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Held-out average distance per epoch (CSV).
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub input: FramesInput,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainForecasterArgs {
    /// Encoded states CSV.
    #[arg(long, conflicts_with = "frames")]
    pub states: Option<PathBuf>,
    /// Frames file, encoded on the fly with `--codebook`.
    #[arg(long, requires = "codebook")]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Training log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 25)]
    pub observe: usize,
    #[arg(long, default_value_t = 25)]
    pub predict: usize,
    #[arg(long, default_value_t = forecaster::DEFAULT_PROJECTION)]
    pub projection: usize,
    #[arg(long, default_value_t = forecaster::DEFAULT_HIDDEN)]
    pub hidden: usize,
    #[arg(long, default_value_t = 5.0)]
    pub clip: f64,
    /// Disable gradient-norm clipping.
    #[arg(long)]
    pub no_clip: bool,
    /// Use the loss `(s - alpha * o)^2` on unscaled states.
    #[arg(long)]
    pub literal_loss: bool,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long, conflicts_with = "frames")]
    pub states: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Restrict to these chunk ids.
    #[arg(long, value_delimiter = ',')]
    pub chunk: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_DECODE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Encoded ground-truth states CSV.
    #[arg(long)]
    pub states: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// Frames file for Silhouette and average distance.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    #[arg(long, default_value_t = DEFAULT_DECODE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum ReportCommand {
    /// Agents, centroids and cluster circles for one frame.
    Scatter(ScatterArgs),
    /// Train/validation loss curves from a training log.
    Loss(ChartArgs),
    /// Per-step prediction error from an eval metrics file.
    Steps(ChartArgs),
    /// Average-distance history from train-clusters.
    History(ChartArgs),
}

#[derive(Args, Debug)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub input: FramesInput,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub frame_index: i64,
    /// Draw the predicted clusters for this frame instead of the encoded ones.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DECODE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 512.0)]
    pub size: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ChartArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![100, 400])]
    pub n: Vec<usize>,
    #[arg(long, short = 'k', value_delimiter = ',', default_values_t = vec![16, 32, 64, 128])]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 20])]
    pub iters: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub frames: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

// ---------------------------------------------------------------------------
// Manifests and locking

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new(command: &'static str, config: impl Serialize, seed: Option<u64>) -> Self {
        RunManifest {
            tool: "swarmcast",
            version: concat!("v", env!("CARGO_PKG_VERSION")),
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.display().to_string());
        self
    }

    fn time(&mut self, what: &str, since: Instant) {
        self.timings_ms
            .insert(what.to_string(), since.elapsed().as_secs_f64() * 1e3);
    }

    /// Records the outputs and writes the manifest next to the first one.
    fn finish(mut self, outputs: &[&Path]) -> Result<()> {
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        let Some(first) = outputs.first() else { return Ok(()) };
        let path = manifest_path(first);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

/// Exclusive lock on an output directory, released on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub const FILE: &'static str = ".swarmcast.lock";

    pub fn acquire(artifact: &Path) -> Result<OutputLock> {
        let dir = match artifact.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(Self::FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(dir.display().to_string()))
            }
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut out = create(path)?;
    f(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load(input: &FramesInput) -> Result<Vec<Frame>> {
    let format = match input.format {
        FormatArg::Auto => FrameFormat::from_path(&input.frames),
        FormatArg::Jsonl => FrameFormat::Jsonl,
        FormatArg::Csv => FrameFormat::Csv,
    };
    data::load_frames(&input.frames, format, input.extent)
}

fn load_auto(path: &Path, extent: f64) -> Result<Vec<Frame>> {
    data::load_frames(path, FrameFormat::from_path(path), extent)
}

// ---------------------------------------------------------------------------
// State files

/// Writes `frame,s_0,..,s_{k-1}` rows with round-trip float formatting.
pub fn write_states_csv<W: Write>(mut out: W, k: usize, rows: &[(i64, StateVector)]) -> std::io::Result<()> {
    write!(out, "frame")?;
    for i in 0..k {
        write!(out, ",s_{i}")?;
    }
    writeln!(out)?;
    for (frame, s) in rows {
        write!(out, "{frame}")?;
        for v in s.values() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn parse_states_csv(text: &str, origin: &str) -> Result<(usize, Vec<(i64, StateVector)>)> {
    let parse_err = |line: usize, reason: String| Error::Parse {
        location: format!("{origin}:{line}"),
        reason,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok((0, Vec::new()));
    };
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first().map(|c| c.trim()) != Some("frame") {
        return Err(parse_err(1, "expected header starting with `frame`".into()));
    }
    let k = cols.len() - 1;
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != k + 1 {
            return Err(parse_err(i + 1, format!("expected {} fields, got {}", k + 1, fields.len())));
        }
        let frame: i64 = fields[0]
            .parse()
            .map_err(|e| parse_err(i + 1, format!("frame index: {e}")))?;
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(i + 1, format!("value `{f}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{origin}:{}", i + 1)));
        }
        rows.push((frame, StateVector(values)));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateFrame(w[0].0));
    }
    Ok((k, rows))
}

pub fn read_states_csv(path: &Path) -> Result<(usize, Vec<(i64, StateVector)>)> {
    parse_states_csv(&read_text(path)?, &path.display().to_string())
}

fn encode_all(frames: &[Frame], codebook: &Codebook) -> Vec<(i64, StateVector)> {
    frames
        .iter()
        .map(|f| {
            (
                f.index,
                set_to_cluster::encode_frame(f, codebook, codebook.min_radius),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Predictions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Observe,
    Predict,
}

/// One predicted state, as written by `predict`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub chunk_id: usize,
    pub split: Split,
    pub frame: i64,
    /// 1-based position in the rollout.
    pub step: usize,
    pub window: Window,
    pub alpha: f64,
    pub state: Vec<f64>,
    pub clusters: Vec<Cluster>,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                location: format!("{}:{}", path.display(), i + 1),
                reason: e.to_string(),
            })
        })
        .collect()
}

fn split_matches(sel: SplitArg, split: Split) -> bool {
    match sel {
        SplitArg::All => true,
        SplitArg::Train => split == Split::Train,
        SplitArg::Val => split == Split::Val,
        SplitArg::Test => split == Split::Test,
    }
}

// ---------------------------------------------------------------------------
// Commands

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::TrainClusters(a) => cmd_train_clusters(&a),
        Command::Encode(a) => cmd_encode(&a),
        Command::TrainForecaster(a) => cmd_train_forecaster(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Report(r) => cmd_report(&r),
        Command::Bench(a) => cmd_bench(&a),
    }
}

pub fn synth_config(args: &SynthArgs) -> SynthConfig {
    let mut cfg = match args.preset {
        Preset::Random => SynthConfig {
            frames: args.frames,
            seed: args.seed,
            ..SynthConfig::default()
        },
        Preset::Scripted => SynthConfig::scripted_events(args.frames, DEFAULT_CHUNK_LEN, args.seed),
    };
    if let Some(g) = args.groups {
        cfg.n_groups = g;
        cfg.min_groups = cfg.min_groups.min(g);
        cfg.max_groups = cfg.max_groups.max(g);
    }
    if let Some(s) = args.sites {
        cfg.n_sites = s;
    }
    cfg
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let cfg = synth_config(args);
    let scenario = data::synth_scenario_with_events(&cfg)?;
    write_with(&args.out, |w| data::write_frames_jsonl(w, &scenario.frames, args.extent))?;
    let mut outputs = vec![args.out.as_path()];
    if let Some(ev) = &args.events {
        let text = serde_json::to_string_pretty(&scenario.events).expect("events serialize");
        std::fs::write(ev, text + "\n").map_err(|e| Error::io(ev, e))?;
        outputs.push(ev);
    }
    log::info!(
        "{} frames, {} events -> {}",
        scenario.frames.len(),
        scenario.events.len(),
        args.out.display()
    );
    let mut m = RunManifest::new("synth", (&cfg, args.preset, args.extent), Some(args.seed));
    m.time("total", start);
    m.finish(&outputs)
}

pub fn cmd_train_clusters(args: &TrainClustersArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let frames = load(&args.input)?;
    let cfg = HebbianConfig {
        k: args.k,
        learning_rate: args.eta,
        batch_frames: args.batch,
        epochs: args.epochs,
        seed: args.seed,
        ..HebbianConfig::default()
    };
    // train on the training chunks, track distance on validation chunks
    let (train, heldout): (Vec<Frame>, Vec<Frame>) = match data::chunk_and_split_default(&frames) {
        Ok(split) if !split.val.is_empty() => (
            split.train.iter().flat_map(|c| c.frames.clone()).collect(),
            split.val.iter().flat_map(|c| c.frames.clone()).collect(),
        ),
        _ => (frames.clone(), frames.clone()),
    };
    let trained = set_to_cluster::train_codebook(&train, &heldout, &cfg)?;
    if trained.diverged {
        log::warn!("codebook training diverged; kept the last finite codebook");
    }
    set_to_cluster::save_codebook(&trained.codebook, &args.out)?;
    log::info!(
        "avg distance {:.6} -> {:.6}",
        trained.history[0],
        trained.history.last().copied().unwrap_or(f64::NAN)
    );
    let mut outputs = vec![args.out.as_path()];
    if let Some(h) = &args.history {
        write_with(h, |w| {
            writeln!(w, "epoch,avg_distance")?;
            for (i, d) in trained.history.iter().enumerate() {
                writeln!(w, "{i},{d}")?;
            }
            Ok(())
        })?;
        outputs.push(h);
    }
    let mut m = RunManifest::new("train-clusters", &cfg, Some(args.seed)).input(&args.input.frames);
    m.time("total", start);
    m.finish(&outputs)
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let codebook = set_to_cluster::load_codebook(&args.codebook)?;
    let frames = load(&args.input)?;
    if frames.is_empty() {
        log::warn!("{} has no frames; writing an empty states file", args.input.frames.display());
    }
    let rows = encode_all(&frames, &codebook);
    write_with(&args.out, |w| write_states_csv(w, codebook.k(), &rows))?;
    let mut m = RunManifest::new("encode", serde_json::json!({ "extent": args.input.extent }), None)
        .input(&args.input.frames)
        .input(&args.codebook);
    m.time("total", start);
    m.finish(&[&args.out])
}

fn state_rows(
    states: Option<&Path>,
    frames: Option<&Path>,
    codebook: Option<&Codebook>,
    extent: f64,
) -> Result<(usize, Vec<(i64, StateVector)>)> {
    match (states, frames, codebook) {
        (Some(s), _, _) => read_states_csv(s),
        (None, Some(f), Some(cb)) => Ok((cb.k(), encode_all(&load_auto(f, extent)?, cb))),
        _ => Err(Error::InvalidConfig(
            "give either --states or --frames with --codebook".into(),
        )),
    }
}

pub fn train_config(args: &TrainForecasterArgs) -> TrainConfig {
    TrainConfig {
        alpha: args.alpha,
        lr: args.lr,
        batch_chunks: args.batch,
        epochs: args.epochs,
        observe_len: args.observe,
        predict_len: args.predict,
        seed: args.seed,
        grad_clip: (!args.no_clip).then_some(args.clip),
        loss_mode: if args.literal_loss {
            LossMode::Literal
        } else {
            LossMode::Scaled
        },
        patience: args.patience,
    }
}

pub fn cmd_train_forecaster(args: &TrainForecasterArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let cfg = train_config(args);
    cfg.validate()?;
    let codebook = args
        .codebook
        .as_deref()
        .map(set_to_cluster::load_codebook)
        .transpose()?;
    let (k, rows) = state_rows(args.states.as_deref(), args.frames.as_deref(), codebook.as_ref(), args.extent)?;
    let chunks = forecaster::chunk_states(&rows, cfg.chunk_len(), SPLIT_RATIOS);
    let by = |s: Split| -> Vec<StateChunk> { chunks.iter().filter(|c| c.split == s).cloned().collect() };
    let (train, val) = (by(Split::Train), by(Split::Val));
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    log::info!("{} train / {} val chunks, k={k}", train.len(), val.len());
    let model = forecaster::build_model_with(k, args.projection, args.hidden, args.seed)?;
    let out = forecaster::train(model, &train, &val, &cfg)?;
    forecaster::save_model(&args.out, &out.model, &cfg)?;
    let mut outputs = vec![args.out.as_path()];
    if let Some(log_path) = &args.log {
        write_with(log_path, |w| forecaster::write_training_log(w, &out.history))?;
        outputs.push(log_path);
    }
    let mut m = RunManifest::new(
        "train-forecaster",
        serde_json::json!({
            "train": cfg,
            "projection": args.projection,
            "hidden": args.hidden,
            "best_epoch": out.best_epoch,
        }),
        Some(args.seed),
    );
    for p in [&args.states, &args.frames, &args.codebook].into_iter().flatten() {
        m = m.input(p);
    }
    m.time("total", start);
    m.finish(&outputs)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let saved = forecaster::load_model(&args.model)?;
    let codebook = set_to_cluster::load_codebook(&args.codebook)?;
    if codebook.k() != saved.model.k {
        return Err(Error::length("codebook k vs model k", saved.model.k, codebook.k()));
    }
    let cfg = &saved.config;
    let (k, rows) = state_rows(args.states.as_deref(), args.frames.as_deref(), Some(&codebook), args.extent)?;
    if k != saved.model.k && !rows.is_empty() {
        return Err(Error::length("state width vs model k", saved.model.k, k));
    }
    let chunks = forecaster::chunk_states(&rows, cfg.chunk_len(), SPLIT_RATIOS);
    let selected: Vec<&StateChunk> = chunks
        .iter()
        .filter(|c| split_matches(args.split, c.split))
        .filter(|c| args.chunk.is_empty() || args.chunk.contains(&c.id))
        .collect();
    if selected.is_empty() {
        log::warn!("no chunks selected");
    }
    let mut records = Vec::new();
    for c in selected {
        let pred = forecaster::rollout_with(&saved.model, &c.states[..cfg.observe_len], cfg)?;
        for (t, s) in pred.into_iter().enumerate() {
            let frame = c.start_frame + t as i64 + 1;
            let clusters = set_to_cluster::decode(&s, &codebook, args.threshold, frame)?.clusters;
            records.push(PredictionRecord {
                chunk_id: c.id,
                split: c.split,
                frame,
                step: t + 1,
                window: if t + 1 < cfg.observe_len {
                    Window::Observe
                } else {
                    Window::Predict
                },
                alpha: cfg.alpha,
                state: s.0,
                clusters,
            });
        }
    }
    write_with(&args.out, |w| {
        for r in &records {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    let mut m = RunManifest::new(
        "predict",
        serde_json::json!({
            "split": format!("{:?}", args.split).to_lowercase(),
            "chunks": args.chunk,
            "threshold": args.threshold,
            "extent": args.extent,
        }),
        None,
    )
    .input(&args.model)
    .input(&args.codebook);
    for p in [&args.states, &args.frames].into_iter().flatten() {
        m = m.input(p);
    }
    m.time("total", start);
    m.finish(&[&args.out])
}

/// Metric rows for a set of predictions against encoded ground truth.
pub fn evaluate_predictions(
    records: &[PredictionRecord],
    truth: &BTreeMap<i64, StateVector>,
    codebook: &Codebook,
    frames: Option<&BTreeMap<i64, Frame>>,
    threshold: f64,
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    let mut chunk_ids: Vec<usize> = records.iter().map(|r| r.chunk_id).collect();
    chunk_ids.dedup();
    let (mut pred_sum, mut pers_sum, mut jac_sum, mut n_chunks) = (0.0, 0.0, 0.0, 0usize);

    for id in chunk_ids {
        let recs: Vec<&PredictionRecord> = records.iter().filter(|r| r.chunk_id == id).collect();
        let mut window_mse = Vec::new();
        let mut pers_mse = Vec::new();
        let mut final_jaccard = None;
        let first_predict = recs.iter().find(|r| r.window == Window::Predict).map(|r| r.frame);
        let last_observed = first_predict.and_then(|f| truth.get(&(f - 1)));
        for r in &recs {
            let Some(t) = truth.get(&r.frame) else {
                log::warn!("no ground truth for frame {}", r.frame);
                continue;
            };
            if t.len() != r.state.len() || t.len() != codebook.k() {
                return Err(Error::length("state width", codebook.k(), r.state.len()));
            }
            let p = StateVector(r.state.clone());
            let loss = metrics::rollout_mse(std::slice::from_ref(&p), std::slice::from_ref(t), r.alpha)?;
            let (c, f) = (Some(id), Some(r.frame));
            rows.push(MetricRow::new(c, f, "mse_scaled", loss.mean_scaled));
            rows.push(MetricRow::new(c, f, "mse_unscaled", loss.mean_unscaled));
            rows.push(MetricRow::new(c, f, "clusters_pred", metrics::cluster_count(&p, threshold) as f64));
            rows.push(MetricRow::new(c, f, "clusters_true", metrics::cluster_count(t, threshold) as f64));
            let j = metrics::jaccard(&p.active(threshold), &t.active(threshold));
            rows.push(MetricRow::new(c, f, "jaccard", j));
            if let Some(frame) = frames.and_then(|m| m.get(&r.frame)) {
                let labels = set_to_cluster::assign_frame(frame, codebook);
                if let Ok(s) = metrics::silhouette(&frame.agents, &labels) {
                    rows.push(MetricRow::new(c, f, "silhouette", s.mean));
                }
            }
            if r.window == Window::Predict {
                window_mse.push(loss.mean_unscaled);
                final_jaccard = Some(j);
                if let Some(last) = last_observed {
                    let pl = metrics::rollout_mse(std::slice::from_ref(last), std::slice::from_ref(t), 1.0)?;
                    pers_mse.push(pl.mean_unscaled);
                }
            }
        }
        if window_mse.is_empty() {
            continue;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (pm, jm) = (mean(&window_mse), final_jaccard.unwrap_or(f64::NAN));
        rows.push(MetricRow::new(Some(id), None, "predict_mse_unscaled", pm));
        rows.push(MetricRow::new(Some(id), None, "final_jaccard", jm));
        pred_sum += pm;
        jac_sum += jm;
        if pers_mse.len() == window_mse.len() {
            let pe = mean(&pers_mse);
            rows.push(MetricRow::new(Some(id), None, "persistence_mse_unscaled", pe));
            pers_sum += pe;
        } else {
            pers_sum = f64::NAN;
        }
        n_chunks += 1;
    }
    if n_chunks > 0 {
        let n = n_chunks as f64;
        rows.push(MetricRow::new(None, None, "mean_predict_mse_unscaled", pred_sum / n));
        rows.push(MetricRow::new(None, None, "mean_persistence_mse_unscaled", pers_sum / n));
        rows.push(MetricRow::new(None, None, "mean_final_jaccard", jac_sum / n));
    }
    if let Some(frames) = frames {
        let used: Vec<Frame> = records
            .iter()
            .filter_map(|r| frames.get(&r.frame).cloned())
            .collect();
        if let Ok(d) = metrics::avg_distance(&used, codebook) {
            rows.push(MetricRow::new(None, None, "avg_distance", d));
        }
    }
    Ok(rows)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let codebook = set_to_cluster::load_codebook(&args.codebook)?;
    let records = read_predictions(&args.predictions)?;
    let (_, truth) = read_states_csv(&args.states)?;
    let truth: BTreeMap<i64, StateVector> = truth.into_iter().collect();
    let frames = args
        .frames
        .as_deref()
        .map(|p| load_auto(p, args.extent))
        .transpose()?
        .map(|fs| fs.into_iter().map(|f| (f.index, f)).collect::<BTreeMap<_, _>>());
    let rows = evaluate_predictions(&records, &truth, &codebook, frames.as_ref(), args.threshold)?;
    write_with(&args.out, |w| metrics::write_metrics_csv(w, &rows))?;
    let mut m = RunManifest::new("eval", serde_json::json!({ "threshold": args.threshold }), None)
        .input(&args.predictions)
        .input(&args.states)
        .input(&args.codebook);
    if let Some(f) = &args.frames {
        m = m.input(f);
    }
    m.time("total", start);
    m.finish(&[&args.out])
}

/// Reads a simple CSV into a header and rows of raw fields.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_text(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            location: path.display().to_string(),
            reason: "empty file".into(),
        })?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    Ok((header, rows))
}

fn column(path: &Path, header: &[String], name: &str) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
        location: path.display().to_string(),
        reason: format!("missing column `{name}`"),
    })
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

pub fn cmd_report(cmd: &ReportCommand) -> Result<()> {
    let start = Instant::now();
    let (svg, out, name, inputs): (String, &Path, &'static str, Vec<&Path>) = match cmd {
        ReportCommand::Scatter(a) => {
            let codebook = set_to_cluster::load_codebook(&a.codebook)?;
            let frames = load(&a.input)?;
            let frame = frames
                .into_iter()
                .find(|f| f.index == a.frame_index)
                .ok_or_else(|| Error::InvalidConfig(format!("frame {} not in file", a.frame_index)))?;
            let state = match &a.predictions {
                Some(p) => {
                    let recs = read_predictions(p)?;
                    let r = recs.into_iter().find(|r| r.frame == a.frame_index).ok_or_else(|| {
                        Error::InvalidConfig(format!("no prediction for frame {}", a.frame_index))
                    })?;
                    StateVector(r.state)
                }
                None => set_to_cluster::encode_frame(&frame, &codebook, codebook.min_radius),
            };
            let clusters = set_to_cluster::decode(&state, &codebook, a.threshold, frame.index)?;
            let mut inputs = vec![a.input.frames.as_path(), a.codebook.as_path()];
            inputs.extend(a.predictions.as_deref());
            (report::scatter_svg(&frame, Some(&clusters), a.size), &a.out, "report-scatter", inputs)
        }
        ReportCommand::Loss(a) => {
            let (h, rows) = read_table(&a.input)?;
            let (e, tr, va) = (
                column(&a.input, &h, "epoch")?,
                column(&a.input, &h, "train_loss")?,
                column(&a.input, &h, "val_loss")?,
            );
            let pick = |c: usize| rows.iter().map(|r| (num(&r[e]), num(&r[c]))).collect();
            let series = [
                Series { name: "train", points: pick(tr) },
                Series { name: "validation", points: pick(va) },
            ];
            (
                report::line_chart_svg("forecaster loss (alpha-scaled)", "epoch", &series, true),
                &a.out,
                "report-loss",
                vec![a.input.as_path()],
            )
        }
        ReportCommand::Steps(a) => {
            let (h, rows) = read_table(&a.input)?;
            let (f, m, v) = (
                column(&a.input, &h, "frame_index")?,
                column(&a.input, &h, "metric")?,
                column(&a.input, &h, "value")?,
            );
            let c = column(&a.input, &h, "chunk_id")?;
            // average each metric over chunks by rollout position
            let mut starts: BTreeMap<String, i64> = BTreeMap::new();
            for r in rows.iter().filter(|r| !r[f].is_empty()) {
                let fi: i64 = r[f].parse().unwrap_or(0);
                starts.entry(r[c].clone()).and_modify(|s| *s = (*s).min(fi)).or_insert(fi);
            }
            let mut acc: BTreeMap<(&str, i64), (f64, usize)> = BTreeMap::new();
            for r in rows.iter().filter(|r| !r[f].is_empty()) {
                let metric = match r[m].as_str() {
                    "mse_scaled" => "mse_scaled",
                    "mse_unscaled" => "mse_unscaled",
                    _ => continue,
                };
                let step = r[f].parse::<i64>().unwrap_or(0) - starts[&r[c]] + 1;
                let e = acc.entry((metric, step)).or_insert((0.0, 0));
                e.0 += num(&r[v]);
                e.1 += 1;
            }
            let series: Vec<Series> = ["mse_scaled", "mse_unscaled"]
                .into_iter()
                .map(|name| Series {
                    name,
                    points: acc
                        .iter()
                        .filter(|((m, _), _)| *m == name)
                        .map(|((_, s), (sum, n))| (*s as f64, sum / *n as f64))
                        .collect(),
                })
                .collect();
            (
                report::line_chart_svg("per-step prediction error", "rollout step", &series, true),
                &a.out,
                "report-steps",
                vec![a.input.as_path()],
            )
        }
        ReportCommand::History(a) => {
            let (h, rows) = read_table(&a.input)?;
            let (e, d) = (column(&a.input, &h, "epoch")?, column(&a.input, &h, "avg_distance")?);
            let series = [Series {
                name: "avg distance",
                points: rows.iter().map(|r| (num(&r[e]), num(&r[d]))).collect(),
            }];
            (
                report::line_chart_svg("held-out average distance", "epoch", &series, true),
                &a.out,
                "report-history",
                vec![a.input.as_path()],
            )
        }
    };
    let _lock = OutputLock::acquire(out)?;
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    let mut m = RunManifest::new(name, serde_json::Value::Null, None);
    for p in inputs {
        m = m.input(p);
    }
    m.time("total", start);
    m.finish(&[out])
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let start = Instant::now();
    let _lock = OutputLock::acquire(&args.out)?;
    let cfg = BenchConfig {
        ns: args.n.clone(),
        ks: args.k.clone(),
        lloyd_iters: args.iters.clone(),
        frames: args.frames,
        repeats: args.repeats,
        seed: args.seed,
    };
    let rows = bench::run_bench(&cfg)?;
    write_with(&args.out, |w| bench::write_bench_csv(w, &rows))?;
    let mut m = RunManifest::new("bench", &cfg, Some(args.seed));
    m.time("total", start);
    m.finish(&[&args.out])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_csv_round_trip() {
        let rows = vec![
            (3, StateVector(vec![0.0, 0.1 + 0.2, 1e-17])),
            (4, StateVector(vec![0.012_345_678_901_234_5, 0.0, 0.5])),
        ];
        let mut buf = Vec::new();
        write_states_csv(&mut buf, 3, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("frame,s_0,s_1,s_2\n"));
        let (k, back) = parse_states_csv(&text, "mem").unwrap();
        assert_eq!(k, 3);
        assert_eq!(back, rows);
    }

    #[test]
    fn states_csv_errors() {
        assert_eq!(parse_states_csv("", "mem").unwrap(), (0, vec![]));
        assert!(matches!(
            parse_states_csv("frame,s_0\n1,0.1,0.2\n", "mem"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_states_csv("x,s_0\n", "mem"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_states_csv("frame,s_0\n1,0.1\n1,0.2\n", "mem"),
            Err(Error::DuplicateFrame(1))
        ));
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.json");
        let lock = OutputLock::acquire(&out).unwrap();
        assert!(matches!(OutputLock::acquire(&out), Err(Error::Locked(_))));
        drop(lock);
        assert!(OutputLock::acquire(&out).is_ok());
    }

    #[test]
    fn manifest_sits_next_to_artifact() {
        assert_eq!(
            manifest_path(Path::new("/x/y/model.json")),
            PathBuf::from("/x/y/model.json.manifest.json")
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
