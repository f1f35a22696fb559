//! The `toolsense` command line.
//!
//! Every subcommand resolves its parameters in three layers: built-in
//! defaults, the `params` object of an optional `--config` file, then flags.
//! The resolved parameters, with input paths made absolute, are written to
//! `config.echo.json` in the output directory; passing that file back through
//! `--config` reproduces every output byte for byte.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{RunKey, Source, SplitMode};
use crate::error::{Error, Result};
use crate::eval::{
    boxplot_svg, build_splits, distribution_report, evaluate, fraction_sweep, stratified_subset, subject_protocol,
    sweep_svg, Regime, DEFAULT_FRACTIONS,
};
use crate::features::{read_feature_csv, write_feature_csv, WindowParams};
use crate::ingest::{load_manifest, write_run_csv, DEFAULT_CLEANING_K};
use crate::io::write_atomic;
use crate::model::{data_fingerprint, train, Init, Provenance, Sample, TrainConfig};
use crate::pipeline::{
    clean_rows, default_mode, featurize_runs, fit_train_normalization, removal_by_source, run_keys, PreparedSplit,
};
use crate::synth::{generate_dataset, DatasetSpec};
use crate::{Checkpoint, Normalization, Row};

pub const ECHO_FILE: &str = "config.echo.json";
pub const LOG_ENV: &str = "TOOLSENSE_LOG";

#[derive(Debug, Parser)]
#[command(name = "toolsense", version, about = "Power-tool task recognition pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// JSON file with `command`, `seed` and `params` keys, e.g. a previous
    /// `config.echo.json`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; falls back to the config, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; only changes speed, never results.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Synthesize robot and human runs plus a manifest.
    Generate(GenerateArgs),
    /// Validate a manifest's runs and report outlier cleaning.
    Ingest(DatasetArgs),
    /// Windowed features, outlier cleaning and train-fitted normalization.
    Featurize(DatasetArgs),
    /// Train a model on one source's split. Robot runs use the pretraining
    /// split, which has no test runs and so writes no `eval.json`.
    Train(TrainArgs),
    /// Continue training a checkpoint on a fraction of the human split.
    Finetune(TrainArgs),
    /// Score a checkpoint on a split's test runs.
    Evaluate(EvaluateArgs),
    /// Zero-shot versus fine-tuned accuracy over training fractions.
    Sweep(ExperimentArgs),
    /// In- and out-of-distribution results per human subject.
    Subjects(ExperimentArgs),
    /// Robot versus human sensor distributions.
    CompareDist(DatasetArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Ingest(_) => "ingest",
            Command::Featurize(_) => "featurize",
            Command::Train(_) => "train",
            Command::Finetune(_) => "finetune",
            Command::Evaluate(_) => "evaluate",
            Command::Sweep(_) => "sweep",
            Command::Subjects(_) => "subjects",
            Command::CompareDist(_) => "compare-dist",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Robot runs per task.
    #[arg(long)]
    pub robot_runs: Option<u32>,
    /// Number of human subjects.
    #[arg(long)]
    pub human_subjects: Option<usize>,
    /// Runs per task for each human subject.
    #[arg(long)]
    pub human_runs: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Dataset manifest written by `generate`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Window length in seconds.
    #[arg(long)]
    pub window_seconds: Option<f64>,
    /// Fraction of a window shared with the next one.
    #[arg(long)]
    pub overlap: Option<f64>,
    /// MAD multiplier for outlier cleaning.
    #[arg(long)]
    pub clean_k: Option<f64>,
    #[arg(long)]
    pub no_clean: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Feature CSV written by `featurize`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Normalization JSON written by `featurize`.
    #[arg(long)]
    pub normalization: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: FeatureArgs,
    /// Starting checkpoint; required for `finetune`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `robot` or `human`.
    #[arg(long)]
    pub source: Option<Source>,
    /// Hold this subject out instead of the in-distribution split.
    #[arg(long)]
    pub held_out: Option<String>,
    /// Share of the training split to use, in (0, 1].
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Maximum training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: FeatureArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `robot` or `human`.
    #[arg(long)]
    pub source: Option<Source>,
    #[arg(long)]
    pub held_out: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: FeatureArgs,
    /// Robot-pretrained checkpoint.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Seeds used are `seed .. seed + num_seeds`.
    #[arg(long)]
    pub num_seeds: Option<u64>,
    /// Maximum training epochs per model.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub robot_runs_per_task: u32,
    pub human_subjects: usize,
    pub human_runs_per_task: u32,
    /// Templates and stochasticity; non-empty `counts` replace the three
    /// fields above.
    pub dataset: DatasetSpec,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            robot_runs_per_task: 8,
            human_subjects: 4,
            human_runs_per_task: 9,
            dataset: DatasetSpec::default(),
        }
    }
}

impl GenerateParams {
    pub fn spec(&self) -> DatasetSpec {
        if !self.dataset.counts.is_empty() {
            return self.dataset.clone();
        }
        let subjects: Vec<String> = (1..=self.human_subjects).map(|i| format!("h{i:02}")).collect();
        let refs: Vec<&str> = subjects.iter().map(String::as_str).collect();
        self.dataset
            .clone()
            .with_subjects(Source::Robot, &["robot"], self.robot_runs_per_task)
            .with_subjects(Source::Human, &refs, self.human_runs_per_task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetParams {
    pub manifest: PathBuf,
    pub window: WindowParams,
    /// `None` disables outlier cleaning.
    pub clean_k: Option<f64>,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("dataset.manifest.json"),
            window: WindowParams::default(),
            clean_k: Some(DEFAULT_CLEANING_K),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInputs {
    pub features: PathBuf,
    pub normalization: PathBuf,
}

impl Default for FeatureInputs {
    fn default() -> Self {
        Self {
            features: PathBuf::from("features.csv"),
            normalization: PathBuf::from("normalization.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    #[serde(flatten)]
    pub inputs: FeatureInputs,
    pub checkpoint: Option<PathBuf>,
    pub source: Source,
    pub split: SplitMode,
    /// Stratified share of the training split actually used.
    pub fraction: f64,
    pub train: TrainConfig,
}

impl TrainParams {
    fn defaults(source: Source) -> Self {
        Self {
            inputs: FeatureInputs::default(),
            checkpoint: None,
            source,
            split: default_mode(source),
            fraction: 1.0,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateParams {
    #[serde(flatten)]
    pub inputs: FeatureInputs,
    pub checkpoint: PathBuf,
    pub source: Source,
    pub split: SplitMode,
    /// Label recorded in the report.
    pub regime: Regime,
}

impl Default for EvaluateParams {
    fn default() -> Self {
        Self {
            inputs: FeatureInputs::default(),
            checkpoint: PathBuf::from("model.ckpt"),
            source: Source::Human,
            split: SplitMode::InDistribution,
            regime: Regime::FineTuned,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    #[serde(flatten)]
    pub inputs: FeatureInputs,
    pub checkpoint: PathBuf,
    pub num_seeds: u64,
    /// Sweep only.
    pub fractions: Vec<f64>,
    pub train: TrainConfig,
}

impl ExperimentParams {
    fn defaults(num_seeds: u64) -> Self {
        Self {
            inputs: FeatureInputs::default(),
            checkpoint: PathBuf::from("model.ckpt"),
            num_seeds,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            train: TrainConfig::default(),
        }
    }
}

/// What `config.echo.json` holds, and what `--config` accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: Value,
}

/// Recursively overlays `patch` onto `base`; objects merge key by key, any
/// other value replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn layered<P: Serialize + DeserializeOwned>(defaults: P, file: Option<&RunConfig>) -> Result<P> {
    let Some(cfg) = file else { return Ok(defaults) };
    if cfg.params.is_null() {
        return Ok(defaults);
    }
    let mut v = serde_json::to_value(defaults)?;
    merge(&mut v, cfg.params.clone());
    serde_json::from_value(v).map_err(|e| Error::Config(format!("bad params: {e}")))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    path.canonicalize().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(&dir.join(name), text.as_bytes())
}

fn write_echo<P: Serialize>(dir: &Path, command: &str, seed: u64, params: &P) -> Result<()> {
    let echo = RunConfig {
        command: Some(command.to_string()),
        seed: Some(seed),
        params: serde_json::to_value(params)?,
    };
    write_json(dir, ECHO_FILE, &echo)
}

fn apply_dataset_flags(p: &mut DatasetParams, a: &DatasetArgs) -> Result<()> {
    if let Some(m) = &a.manifest {
        p.manifest = m.clone();
    }
    if let Some(w) = a.window_seconds {
        p.window.window_seconds = w;
    }
    if let Some(o) = a.overlap {
        p.window.overlap_fraction = o;
    }
    if let Some(k) = a.clean_k {
        p.clean_k = Some(k);
    }
    if a.no_clean {
        p.clean_k = None;
    }
    p.manifest = absolute(&p.manifest)?;
    Ok(())
}

fn apply_feature_flags(p: &mut FeatureInputs, a: &FeatureArgs) -> Result<()> {
    if let Some(f) = &a.features {
        p.features = f.clone();
    }
    if let Some(n) = &a.normalization {
        p.normalization = n.clone();
    }
    p.features = absolute(&p.features)?;
    p.normalization = absolute(&p.normalization)?;
    Ok(())
}

fn split_mode(held_out: &Option<String>, current: SplitMode) -> SplitMode {
    match held_out {
        Some(s) => SplitMode::OutOfDistribution {
            held_out_subject: s.clone(),
        },
        None => current,
    }
}

/// Parses argv and runs the chosen subcommand.
pub fn run(cli: Cli) -> Result<()> {
    let file = cli.global.config.as_deref().map(read_config).transpose()?;
    let name = cli.command.name();
    if let Some(c) = file.as_ref().and_then(|f| f.command.as_deref()) {
        if c != name {
            return Err(Error::Config(format!("config is for `{c}`, not `{name}`")));
        }
    }
    let seed = cli.global.seed.or(file.as_ref().and_then(|f| f.seed)).unwrap_or(0);
    let out = cli.global.out.clone();
    let file = file.as_ref();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cli.global.jobs)))?;
    let jobs = cli.global.jobs.max(1);
    pool.install(|| match &cli.command {
        Command::Generate(a) => {
            let mut p = layered(GenerateParams::default(), file)?;
            if let Some(n) = a.robot_runs {
                p.robot_runs_per_task = n;
            }
            if let Some(n) = a.human_subjects {
                p.human_subjects = n;
            }
            if let Some(n) = a.human_runs {
                p.human_runs_per_task = n;
            }
            cmd_generate(&p, seed, &out)
        }
        Command::Ingest(a) => {
            let mut p = layered(DatasetParams::default(), file)?;
            apply_dataset_flags(&mut p, a)?;
            cmd_ingest(&p, seed, &out)
        }
        Command::Featurize(a) => {
            let mut p = layered(DatasetParams::default(), file)?;
            apply_dataset_flags(&mut p, a)?;
            cmd_featurize(&p, seed, &out)
        }
        Command::Train(a) | Command::Finetune(a) => {
            let fine_tune = matches!(cli.command, Command::Finetune(_));
            let source = if fine_tune { Source::Human } else { Source::Robot };
            let mut p = layered(TrainParams::defaults(source), file)?;
            apply_feature_flags(&mut p.inputs, &a.data)?;
            if let Some(c) = &a.checkpoint {
                p.checkpoint = Some(c.clone());
            }
            p.checkpoint = p.checkpoint.as_deref().map(absolute).transpose()?;
            if fine_tune && p.checkpoint.is_none() {
                return Err(Error::Config("finetune needs --checkpoint".into()));
            }
            if let Some(s) = a.source {
                p.source = s;
            }
            p.split = split_mode(&a.held_out, p.split);
            if let Some(f) = a.fraction {
                p.fraction = f;
            }
            if let Some(e) = a.epochs {
                p.train.epochs = e;
            }
            p.train.seed = seed;
            cmd_train(&p, name, seed, &out)
        }
        Command::Evaluate(a) => {
            let mut p = layered(EvaluateParams::default(), file)?;
            apply_feature_flags(&mut p.inputs, &a.data)?;
            if let Some(c) = &a.checkpoint {
                p.checkpoint = c.clone();
            }
            p.checkpoint = absolute(&p.checkpoint)?;
            if let Some(s) = a.source {
                p.source = s;
            }
            p.split = split_mode(&a.held_out, p.split);
            cmd_evaluate(&p, seed, &out)
        }
        Command::Sweep(a) | Command::Subjects(a) => {
            let sweep = matches!(cli.command, Command::Sweep(_));
            let mut p = layered(ExperimentParams::defaults(if sweep { 5 } else { 1 }), file)?;
            apply_feature_flags(&mut p.inputs, &a.data)?;
            if let Some(c) = &a.checkpoint {
                p.checkpoint = c.clone();
            }
            p.checkpoint = absolute(&p.checkpoint)?;
            if let Some(n) = a.num_seeds {
                p.num_seeds = n;
            }
            if let Some(e) = a.epochs {
                p.train.epochs = e;
            }
            p.train.seed = seed;
            if sweep {
                cmd_sweep(&p, seed, &out, jobs)
            } else {
                cmd_subjects(&p, seed, &out, jobs)
            }
        }
        Command::CompareDist(a) => {
            let mut p = layered(DatasetParams::default(), file)?;
            apply_dataset_flags(&mut p, a)?;
            cmd_compare_dist(&p, seed, &out)
        }
    })
}

pub fn cmd_generate(p: &GenerateParams, seed: u64, out: &Path) -> Result<()> {
    let spec = p.spec();
    let (runs, manifest) = generate_dataset(&spec, seed)?;
    for (run, entry) in runs.iter().zip(&manifest.entries) {
        let mut buf = Vec::new();
        write_run_csv(run, &mut buf).map_err(|e| Error::Io {
            path: out.join(&entry.path),
            source: e,
        })?;
        write_atomic(&out.join(&entry.path), &buf)?;
    }
    write_atomic(&out.join("dataset.manifest.json"), manifest.to_json()?.as_bytes())?;
    log::info!("generated {} runs into {}", runs.len(), out.display());
    write_echo(out, "generate", seed, p)
}

#[derive(Debug, Serialize)]
struct RunSummary {
    run: RunKey,
    samples: usize,
    duration_s: f64,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    runs: Vec<RunSummary>,
    total_samples: usize,
    windows: usize,
    windows_kept: usize,
    cleaning: Vec<crate::pipeline::GroupCleaning>,
    removal_by_source: Vec<(Source, f64)>,
}

struct Loaded {
    runs: Vec<crate::SensorRun>,
    rows: Vec<Row>,
    cleaning: Vec<crate::pipeline::GroupCleaning>,
    /// Windows before cleaning.
    windows: usize,
}

fn load_rows(p: &DatasetParams) -> Result<Loaded> {
    let runs = load_manifest(&p.manifest)?.load_runs()?;
    let rows: Vec<Row> = featurize_runs(&runs, p.window)?;
    let windows = rows.len();
    let (rows, cleaning) = match p.clean_k {
        Some(k) => clean_rows(rows, k)?,
        None => (rows, Vec::new()),
    };
    Ok(Loaded {
        runs,
        rows,
        cleaning,
        windows,
    })
}

pub fn cmd_ingest(p: &DatasetParams, seed: u64, out: &Path) -> Result<()> {
    let Loaded {
        runs,
        rows,
        cleaning,
        windows,
    } = load_rows(p)?;
    let summary = IngestSummary {
        runs: runs
            .iter()
            .map(|r| RunSummary {
                run: r.key().clone(),
                samples: r.len(),
                duration_s: r.duration_s(),
            })
            .collect(),
        total_samples: runs.iter().map(|r| r.len()).sum(),
        windows,
        windows_kept: rows.len(),
        removal_by_source: removal_by_source(&cleaning),
        cleaning,
    };
    write_json(out, "ingest.json", &summary)?;
    write_echo(out, "ingest", seed, p)
}

pub fn cmd_featurize(p: &DatasetParams, seed: u64, out: &Path) -> Result<()> {
    let Loaded { rows, cleaning, .. } = load_rows(p)?;
    let norm = fit_train_normalization(&rows)?;
    let mut buf = Vec::new();
    write_feature_csv(&rows, &mut buf).map_err(|e| Error::Io {
        path: out.join("features.csv"),
        source: e,
    })?;
    write_atomic(&out.join("features.csv"), &buf)?;
    write_json(out, "normalization.json", &norm)?;
    write_json(out, "cleaning.json", &cleaning)?;
    write_echo(out, "featurize", seed, p)
}

fn load_features(inputs: &FeatureInputs) -> Result<(Vec<Row>, Normalization)> {
    let file = std::fs::File::open(&inputs.features).map_err(|e| Error::Io {
        path: inputs.features.clone(),
        source: e,
    })?;
    let rows = read_feature_csv(std::io::BufReader::new(file), &inputs.features.display().to_string())?;
    let text = std::fs::read_to_string(&inputs.normalization).map_err(|e| Error::Io {
        path: inputs.normalization.clone(),
        source: e,
    })?;
    let norm: Normalization = serde_json::from_str(&text)?;
    norm.validate()?;
    Ok((rows, norm))
}

fn prepare(rows: &[Row], norm: &Normalization, source: Source, mode: &SplitMode) -> Result<PreparedSplit<f64>> {
    let rows: Vec<Row> = rows.iter().filter(|r| r.run.source == source).cloned().collect();
    let keys = run_keys(&rows);
    if keys.is_empty() {
        return Err(Error::Split(format!("no {source} runs in the feature file")));
    }
    let split = build_splits(&keys, mode.clone())?;
    Ok(PreparedSplit::new(&rows, split, norm))
}

#[derive(Debug, Serialize)]
struct TrainOutput<'a> {
    train_windows: usize,
    log: &'a crate::model::TrainLog,
}

pub fn cmd_train(p: &TrainParams, command: &str, seed: u64, out: &Path) -> Result<()> {
    p.train.validate()?;
    let (rows, norm) = load_features(&p.inputs)?;
    let data = prepare(&rows, &norm, p.source, &p.split)?;
    let labels: Vec<usize> = data.train.iter().map(|s| s.label).collect();
    let subset = stratified_subset(&labels, &data.train_runs, p.fraction, seed).ok_or_else(|| {
        Error::Config(format!(
            "fraction {} leaves a task without training windows",
            p.fraction
        ))
    })?;
    let train_set: Vec<Sample<f64>> = subset.iter().map(|&i| data.train[i].clone()).collect();
    let (init, regime) = match &p.checkpoint {
        Some(path) => (Init::FromCheckpoint(Checkpoint::load(path)?.params), Regime::FineTuned),
        None => (
            Init::Random {
                dims: p.train.layer_dims(),
            },
            Regime::ZeroShot,
        ),
    };
    let (params, log) = train(&train_set, &data.val, &p.train, init)?;
    let provenance = Provenance {
        data_fingerprint: data_fingerprint(&train_set),
        seed,
        epochs: log.epochs.len(),
    };
    // Pretraining splits hold no test runs.
    let report = if data.test.is_empty() {
        None
    } else {
        Some(evaluate(
            &params,
            &data.test,
            regime,
            p.fraction,
            data.split.clone(),
            seed,
        )?)
    };
    Checkpoint::new(params, provenance).save(&out.join("model.ckpt"))?;
    write_json(
        out,
        "train_log.json",
        &TrainOutput {
            train_windows: train_set.len(),
            log: &log,
        },
    )?;
    if let Some(report) = report {
        log::info!("{command}: test accuracy {:.4}", report.accuracy);
        write_json(out, "eval.json", &report)?;
    }
    write_echo(out, command, seed, p)
}

pub fn cmd_evaluate(p: &EvaluateParams, seed: u64, out: &Path) -> Result<()> {
    let (rows, norm) = load_features(&p.inputs)?;
    let data = prepare(&rows, &norm, p.source, &p.split)?;
    let ckpt: Checkpoint = Checkpoint::load(&p.checkpoint)?;
    let report = evaluate(
        &ckpt.params,
        &data.test,
        p.regime,
        1.0,
        data.split.clone(),
        ckpt.provenance.seed,
    )?;
    write_json(out, "eval.json", &report)?;
    write_echo(out, "evaluate", seed, p)
}

fn seeds(base: u64, n: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::Config("num_seeds must be positive".into()));
    }
    Ok((0..n).map(|i| base.wrapping_add(i)).collect())
}

pub fn cmd_sweep(p: &ExperimentParams, seed: u64, out: &Path, jobs: usize) -> Result<()> {
    p.train.validate()?;
    let (rows, norm) = load_features(&p.inputs)?;
    let human = prepare(&rows, &norm, Source::Human, &SplitMode::InDistribution)?;
    let ckpt: Checkpoint = Checkpoint::load(&p.checkpoint)?;
    let table = fraction_sweep(
        &human,
        &ckpt.params,
        &p.fractions,
        &seeds(seed, p.num_seeds)?,
        &p.train,
        jobs,
    )?;
    write_atomic(&out.join("sweep.csv"), table.to_csv().as_bytes())?;
    write_atomic(&out.join("sweep.svg"), sweep_svg(&table).as_bytes())?;
    write_echo(out, "sweep", seed, p)
}

pub fn cmd_subjects(p: &ExperimentParams, seed: u64, out: &Path, jobs: usize) -> Result<()> {
    p.train.validate()?;
    let (rows, norm) = load_features(&p.inputs)?;
    let ckpt: Checkpoint = Checkpoint::load(&p.checkpoint)?;
    let table = subject_protocol(&rows, &norm, &ckpt.params, &seeds(seed, p.num_seeds)?, &p.train, jobs)?;
    log::info!(
        "subjects: mean ID fine-tuned {:.4}, mean OoD fine-tuned {:.4}, mean boost {:.4}",
        table.mean_id_fine_tuned(),
        table.mean_ood_fine_tuned(),
        table.mean_boost()
    );
    write_atomic(&out.join("subjects.csv"), table.to_csv().as_bytes())?;
    write_echo(out, "subjects", seed, p)
}

pub fn cmd_compare_dist(p: &DatasetParams, seed: u64, out: &Path) -> Result<()> {
    let runs = load_manifest(&p.manifest)?.load_runs()?;
    let report = distribution_report(&runs, p.window)?;
    write_atomic(&out.join("distribution.csv"), report.to_csv().as_bytes())?;
    write_atomic(&out.join("boxplot.svg"), boxplot_svg(&report).as_bytes())?;
    write_echo(out, "compare-dist", seed, p)
}

/// One-line JSON error for stderr.
pub fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}
