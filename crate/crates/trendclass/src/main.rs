//! Command-line front end: corpus generation, feature extraction, feature
//! selection, model training, scoring, evaluation, delay sweeps, and
//! temporal-shift robustness runs.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or I/O errors.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use trendclass::classify::{LabeledSeries, TrainedKnnDtw, TrainedKnnFlat, TrainedModel, WordBags};
use trendclass::error::{Error, Result};
use trendclass::features::{extract_matrix, Lexicons, TrendFeaturesDoc};
use trendclass::ingest::{load_manifest, load_tweets, window_slices};
use trendclass::pipeline::{
    build_dataset, cross_validate, delay_sweep, instance_seed, shift_experiment, ClassifierKind,
    EvaluationReport, ExperimentConfig, FeatureSetEvaluator,
};
use trendclass::synth::{tweet_file, write_corpus, SynthParams};

#[derive(Parser)]
#[command(
    name = "trendclass",
    about = "Classify trending hashtags as promoted or organic",
    version
)]
struct Cli {
    /// Number of worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus.
    Synth(SynthArgs),
    /// Extract per-trend feature matrices from a corpus.
    Extract(ExtractArgs),
    /// Run greedy forward feature selection with cross-validation.
    Select(SelectArgs),
    /// Train a final model on all instances with a fixed feature set.
    Train(TrainArgs),
    /// Score instances with a trained model.
    Classify(ClassifyArgs),
    /// Cross-validate a fixed feature set.
    Evaluate(EvaluateArgs),
    /// Re-run selection and evaluation across classification delays.
    DelaySweep(DelaySweepArgs),
    /// Evaluate a frozen feature set under temporal shifts.
    ShiftTest(ShiftTestArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (manifest.jsonl + tweets/).
    #[arg(long)]
    out: PathBuf,
    /// JSON parameter file; omitted fields use the defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    promoted_trends: Option<usize>,
    #[arg(long)]
    organic_trends: Option<usize>,
    /// Erase every class difference (labels keep their counts but carry no
    /// signal).
    #[arg(long)]
    class_blind: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Corpus directory produced by `synth` (or laid out the same way).
    #[arg(long)]
    corpus: PathBuf,
    /// Output features file, one JSON document per trend.
    #[arg(long)]
    out: PathBuf,
    /// Directory with replacement lexicons (defaults to the bundled set).
    #[arg(long)]
    lexicons: Option<PathBuf>,
}

/// Experiment parameters shared by the evaluation commands. A config file
/// provides the base values; explicit flags override it.
#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; omitted fields use the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// knn_dtw, sax_vsm, or knn_flat.
    #[arg(long)]
    classifier: Option<String>,
    /// Classification delay in minutes (multiple of the window slide).
    #[arg(long)]
    delay: Option<i64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    observation_len: Option<usize>,
    #[arg(long)]
    min_auc_gain: Option<f64>,
    #[arg(long)]
    max_selected: Option<usize>,
    /// Re-run selection inside every training fold.
    #[arg(long)]
    nested: bool,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: path.clone(),
                    line: e.line(),
                    message: e.to_string(),
                })?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(c) = &self.classifier {
            config.classifier = ClassifierKind::from_str(c)?;
        }
        if let Some(d) = self.delay {
            config.delay_minutes = d;
        }
        if let Some(f) = self.folds {
            config.folds = f;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(l) = self.observation_len {
            config.observation_len = l;
        }
        if let Some(g) = self.min_auc_gain {
            config.min_auc_gain = g;
        }
        if let Some(m) = self.max_selected {
            config.max_selected = m;
        }
        if self.nested {
            config.nested = true;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Features file produced by `extract`.
    #[arg(long)]
    features: PathBuf,
    /// Output selection report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the pooled ROC curve as CSV (fpr,tpr per line).
    #[arg(long)]
    roc_csv: Option<PathBuf>,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    /// Comma-separated feature identifiers to train on.
    #[arg(long)]
    use_features: String,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Output scores file (JSON map from hashtag to score).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    features: PathBuf,
    /// Comma-separated feature identifiers to evaluate.
    #[arg(long)]
    use_features: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    roc_csv: Option<PathBuf>,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct DelaySweepArgs {
    #[arg(long)]
    features: PathBuf,
    /// Comma-separated delays in minutes, e.g. "-40,0,40,120".
    #[arg(long, allow_hyphen_values = true)]
    delays: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args)]
struct ShiftTestArgs {
    #[arg(long)]
    features: PathBuf,
    /// Comma-separated shift standard deviations in window steps.
    #[arg(long, default_value = "0,1,2,4,8")]
    sigmas: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    experiment: ExperimentArgs,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: failed to configure {jobs} worker threads: {e}");
            std::process::exit(1);
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::Extract(args) => run_extract(args),
        Command::Select(args) => run_select(args),
        Command::Train(args) => run_train(args),
        Command::Classify(args) => run_classify(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::DelaySweep(args) => run_delay_sweep(args),
        Command::ShiftTest(args) => run_shift_test(args),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    out.write_all(b"\n").map_err(io_err(path))?;
    Ok(())
}

/// Sidecar recording what produced an output: config hash, seed, and the
/// hashes of the lexicon bundle. Kept separate from the report itself so
/// report payloads stay byte-identical across reruns.
fn write_provenance(out: &Path, command: &str, config_json: &str, seed: u64) -> Result<()> {
    #[derive(Serialize)]
    struct Provenance<'a> {
        command: &'a str,
        seed: u64,
        config_sha256: String,
        lexicon_sha256: BTreeMap<&'static str, String>,
        unix_time: u64,
    }
    let lexicon_sha256 = Lexicons::bundled_sources()
        .iter()
        .map(|(name, contents)| (*name, hex(&Sha256::digest(contents.as_bytes()))))
        .collect();
    let record = Provenance {
        command,
        seed,
        config_sha256: hex(&Sha256::digest(config_json.as_bytes())),
        lexicon_sha256,
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut path = out.as_os_str().to_owned();
    path.push(".provenance.json");
    write_json(Path::new(&path), &record)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_roc_csv(path: &Path, report: &EvaluationReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    out.write_all(b"fpr,tpr\n").map_err(io_err(path))?;
    for (fpr, tpr) in &report.roc_points {
        writeln!(out, "{fpr},{tpr}").map_err(io_err(path))?;
    }
    Ok(())
}

fn load_docs(path: &Path) -> Result<Vec<TrendFeaturesDoc>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: TrendFeaturesDoc = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        doc.validate().map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        })?;
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyInput("features file"));
    }
    Ok(docs)
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid {what} value {s:?}")))
        })
        .collect()
}

fn feature_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let mut params = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?
        }
        None => SynthParams::default(),
    };
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(n) = args.promoted_trends {
        params.promoted.trend_count = n;
    }
    if let Some(n) = args.organic_trends {
        params.organic.trend_count = n;
    }
    if args.class_blind {
        params = params.class_blind();
    }
    let records = write_corpus(&args.out, &params)?;
    let promoted = records.iter().filter(|r| r.label.is_promoted()).count();
    let params_json =
        serde_json::to_string(&params).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    write_provenance(
        &args.out.join("manifest.jsonl"),
        "synth",
        &params_json,
        params.seed,
    )?;
    println!(
        "wrote {} trends ({} promoted, {} organic) to {}",
        records.len(),
        promoted,
        records.len() - promoted,
        args.out.display()
    );
    Ok(())
}

fn run_extract(args: ExtractArgs) -> Result<()> {
    let lexicons = match &args.lexicons {
        Some(dir) => Lexicons::load_dir(dir)?,
        None => Lexicons::bundled(),
    };
    let manifest_path = args.corpus.join("manifest.jsonl");
    let manifest = load_manifest(&manifest_path)?;
    let windowing = trendclass::WindowingConfig::default();
    let mut out = BufWriter::new(File::create(&args.out).map_err(io_err(&args.out))?);
    for (i, trend) in manifest.iter().enumerate() {
        let tweets = load_tweets(
            &tweet_file(&args.corpus, &trend.hashtag),
            &trend.hashtag,
            trend.trending_time,
            trendclass::ingest::DEFAULT_HALF_SPAN,
        )?;
        let windows = window_slices(&tweets, &windowing, trend.trending_time)?;
        let matrix = extract_matrix(&tweets, &windows, &lexicons);
        let doc = TrendFeaturesDoc::new(trend.hashtag.clone(), trend.label, matrix);
        serde_json::to_writer(&mut out, &doc)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        out.write_all(b"\n").map_err(io_err(&args.out))?;
        eprintln!("[{}/{}] {}", i + 1, manifest.len(), trend.hashtag);
    }
    println!(
        "wrote {} feature documents to {}",
        manifest.len(),
        args.out.display()
    );
    Ok(())
}

fn config_json(config: &ExperimentConfig) -> Result<String> {
    serde_json::to_string(config).map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn run_select(args: SelectArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let docs = load_docs(&args.features)?;
    let dataset = build_dataset(&docs, &config)?;
    let evaluator = FeatureSetEvaluator::new(&dataset, &config)?;
    let result = evaluator.select()?;
    write_json(&args.out, &result)?;
    if let Some(csv) = &args.roc_csv {
        write_roc_csv(csv, &result.report)?;
    }
    write_provenance(&args.out, "select", &config_json(&config)?, config.seed)?;
    println!(
        "selected {} features, mean AUC {:.4} (+/- {:.4})",
        result.selected.len(),
        result.report.mean_auc,
        result.report.auc_std_error
    );
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let feature_ids = feature_list(&args.use_features);
    if feature_ids.is_empty() {
        return Err(Error::EmptyInput("feature list"));
    }
    let docs = load_docs(&args.features)?;
    let dataset = build_dataset(&docs, &config)?;
    let feature_idx: Vec<usize> = feature_ids
        .iter()
        .map(|id| dataset.feature_index(id))
        .collect::<Result<_>>()?;
    let instances: Vec<LabeledSeries> = (0..dataset.len())
        .map(|i| LabeledSeries {
            hashtag: dataset.hashtags[i].clone(),
            label: dataset.labels[i],
            series: feature_idx
                .iter()
                .map(|&f| dataset.series[f][i].clone())
                .collect(),
        })
        .collect();
    let k = config.k.min(instances.len());
    let model = match config.classifier {
        ClassifierKind::KnnDtw => TrainedModel::KnnDtw(TrainedKnnDtw::train(
            &feature_ids,
            &instances,
            k,
            config.coarsen_width,
        )?),
        ClassifierKind::SaxVsm => TrainedModel::SaxVsm(WordBags::train(
            &feature_ids,
            &instances,
            config.sax_word_length,
            config.sax_alphabet_size,
        )?),
        ClassifierKind::KnnFlat => {
            TrainedModel::KnnFlat(TrainedKnnFlat::train(&feature_ids, &instances, k)?)
        }
    };
    write_json(&args.out, &model)?;
    write_provenance(&args.out, "train", &config_json(&config)?, config.seed)?;
    println!(
        "trained {} model on {} instances, wrote {}",
        config.classifier.name(),
        instances.len(),
        args.out.display()
    );
    Ok(())
}

fn run_classify(args: ClassifyArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let text = std::fs::read_to_string(&args.model).map_err(io_err(&args.model))?;
    let model: TrainedModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: args.model.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let docs = load_docs(&args.features)?;
    let dataset = build_dataset(&docs, &config)?;
    let feature_idx: Vec<usize> = model
        .features()
        .iter()
        .map(|id| dataset.feature_index(id))
        .collect::<Result<_>>()?;
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for i in 0..dataset.len() {
        let query: Vec<Vec<f64>> = feature_idx
            .iter()
            .map(|&f| dataset.series[f][i].clone())
            .collect();
        let score =
            model.score_aligned(&query, instance_seed(config.seed, &dataset.hashtags[i]))?;
        scores.insert(dataset.hashtags[i].clone(), score);
    }
    write_json(&args.out, &scores)?;
    println!(
        "scored {} instances, wrote {}",
        scores.len(),
        args.out.display()
    );
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let feature_ids = feature_list(&args.use_features);
    let docs = load_docs(&args.features)?;
    let dataset = build_dataset(&docs, &config)?;
    let report = cross_validate(&dataset, &feature_ids, &config)?;
    write_json(&args.out, &report)?;
    if let Some(csv) = &args.roc_csv {
        write_roc_csv(csv, &report)?;
    }
    write_provenance(&args.out, "evaluate", &config_json(&config)?, config.seed)?;
    println!(
        "mean AUC {:.4} (+/- {:.4}), best F1 {:.4} at threshold {:.4}",
        report.mean_auc, report.auc_std_error, report.best_f1, report.best_threshold
    );
    Ok(())
}

fn run_delay_sweep(args: DelaySweepArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let delays: Vec<i64> = parse_list(&args.delays, "delay")?;
    if delays.is_empty() {
        return Err(Error::EmptyInput("delay list"));
    }
    let docs = load_docs(&args.features)?;
    let points = delay_sweep(&docs, &delays, &config)?;
    write_json(&args.out, &points)?;
    write_provenance(
        &args.out,
        "delay-sweep",
        &config_json(&config)?,
        config.seed,
    )?;
    for p in &points {
        println!(
            "delay {:>6} min: AUC {:.4} ({} features)",
            p.delay_minutes,
            p.mean_auc,
            p.selected.len()
        );
    }
    Ok(())
}

fn run_shift_test(args: ShiftTestArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let sigmas: Vec<f64> = parse_list(&args.sigmas, "sigma")?;
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("sigma list"));
    }
    let docs = load_docs(&args.features)?;
    let report = shift_experiment(&docs, &sigmas, &config)?;
    write_json(&args.out, &report)?;
    write_provenance(&args.out, "shift-test", &config_json(&config)?, config.seed)?;
    for p in &report.points {
        println!("sigma {:>5.1}: AUC {:.4}", p.sigma, p.mean_auc);
    }
    Ok(())
}
