//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 on usage
//! errors, 2 on data errors.

use std::collections::BTreeMap;
use std::io::{Read as _, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::artifact::ModelArtifact;
use crate::corpus::{
    build_dataset, group_by_article, read_acl_arc, read_article_dir, read_jsonl, read_split, read_tsv, split_groups,
    split_stats, tree_stats, write_split, CorpusConfig, CorpusSplit, LabeledSentence, NeighborScope, StatsTable,
    DEFAULT_FRACTIONS, STATS_FILE,
};
use crate::error::{Error, Result};
use crate::eval::{
    cross_corpus, downsample, ranked_csv, ranked_report, ratio_sweep, sweep_csv, NamedCorpus, SWEEP_RATIOS,
};
use crate::features::Representation;
use crate::neural::AttentionVariant;
use crate::pipeline::{feature_importances, train_model, ModelFamily, TrainSpec};
use crate::service::{self, respond, PredictRequest, ServiceConfig};
use crate::textrep::load_embeddings;

#[derive(Debug, Parser)]
#[command(name = "citeworth", version, about = "Citation-worthiness detection")]
pub struct Cli {
    /// Print machine-readable JSON instead of plain text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Key-value file (`key = value` per line) providing defaults under the flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Decision threshold: a sentence is citation-worthy when p >= threshold.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a directory of JATS articles into train/valid/test files.
    BuildCorpus {
        xml_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Train, validation and test fractions.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        fractions: Option<Vec<f64>>,
        /// Use the corpus' own 5%/95% length quantiles as filter bounds.
        #[arg(long)]
        quantile_bounds: bool,
        #[arg(long, value_enum)]
        neighbor_scope: Option<Scope>,
    },
    /// Corpus statistics of a dataset directory or file.
    Stats { dataset: PathBuf },
    /// Train a model and write it to a model file.
    Train {
        dataset: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
        /// Write the per-epoch curve of a neural model as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Evaluate a model file on a test dataset.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
        /// Dataset directory (its test part is used) or dataset file.
        #[arg(long)]
        test: PathBuf,
    },
    /// Retrain at several non-citing:citing ratios and evaluate on the test part.
    DownsampleSweep {
        dataset: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        /// Write the result table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the down-sampled training sets under this directory.
        #[arg(long)]
        save_splits: Option<PathBuf>,
    },
    /// Train on each corpus and on a combined sample, test on every corpus.
    CrossCorpus {
        /// `name=path`, at least two.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<String>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score sentences with a model file.
    Predict {
        #[arg(long)]
        model_file: PathBuf,
        /// Text file (`-` for standard input); a `.json` file is read as a service request.
        #[arg(long = "in", conflicts_with = "text", required_unless_present = "text")]
        input: Option<PathBuf>,
        /// Inline text to score.
        #[arg(long)]
        text: Option<String>,
        /// Section type given to every sentence.
        #[arg(long)]
        section: Option<String>,
        /// Score each sentence without its neighbors.
        #[arg(long)]
        no_context: bool,
        /// Rescore with the first pass' decisions as neighbor flags.
        #[arg(long)]
        two_pass: bool,
    },
    /// Top-k ranked sentences of a model, or top-k feature importances.
    Report {
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long, value_enum, default_value_t = ReportKind::Sentences)]
        kind: ReportKind,
        /// Required for sentence reports.
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Dataset: sentences are ranked on its test part; importances are fitted on its train part.
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        contextual: Option<bool>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP prediction API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Allowed CORS origin; repeatable. Any origin when absent.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: Option<ModelFamily>,
    #[arg(long)]
    pub attention: Option<AttentionVariant>,
    /// Use neighboring sentences as context (`--contextual false` to disable).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub contextual: Option<bool>,
    /// Pre-trained word vectors in `token v1 ... vd` text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    Paragraph,
    Section,
    Article,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Sentences,
    Features,
}

/// Keys accepted in a `--config` file.
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "threshold",
    "model",
    "attention",
    "contextual",
    "embeddings",
    "epochs",
    "min_df",
    "representation",
    "topics",
    "ngram_max",
    "alphas",
    "lambdas",
    "cv_folds",
    "trees",
    "max_features",
    "hidden",
    "word_dim",
    "char_dim",
    "char_hidden",
    "mlp_hidden",
    "dropout",
    "l2",
    "learning_rate",
    "batch_size",
    "patience",
    "max_vocab",
    "ratios",
    "top_k",
    "port",
];

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            e => Failure::Data(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl Failure {
    fn into_error(self) -> Error {
        match self {
            Failure::Usage(m) => Error::InvalidArgument(m),
            Failure::Data(e) => e,
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// `key = value` settings from a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !CONFIG_KEYS.contains(&k) {
                return Err(Error::InvalidArgument(format!("config line {}: unknown key {k:?}", n + 1)));
            }
            values.insert(k.to_owned(), v.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.values
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse()
                            .map_err(|_| Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

struct Ctx<'a> {
    json: bool,
    seed: u64,
    threshold: f64,
    /// The threshold came from a flag or the config file.
    threshold_set: bool,
    config: RunConfig,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit<T: Serialize>(&mut self, value: &T, text: &str) -> CliResult {
        if self.json {
            writeln!(self.out, "{}", serde_json::to_string_pretty(value).map_err(Error::from)?)?;
        } else {
            write!(self.out, "{text}")?;
        }
        Ok(())
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        Ok(match flag {
            Some(v) => Some(v),
            None => self.config.get(key)?,
        })
    }

    fn spec(&self, args: &ModelArgs) -> CliResult<TrainSpec> {
        let family = self
            .pick(args.model, "model")?
            .ok_or_else(|| usage("--model is required (enlr, rf or neural)"))?;
        let mut spec = TrainSpec::new(family).with_seed(self.seed);
        let c = &self.config;
        if let Some(v) = self.pick(args.contextual, "contextual")? {
            spec.contextual = v;
        }
        if let Some(v) = self.pick(args.attention, "attention")? {
            spec.neural.attention = v;
        }
        if let Some(v) = self.pick(args.epochs, "epochs")? {
            spec.train.max_epochs = v;
        }
        macro_rules! set {
            ($key:literal => $($target:tt)+) => {
                if let Some(v) = c.get($key)? {
                    $($target)+ = v;
                }
            };
        }
        set!("min_df" => spec.featurizer.min_df);
        set!("topics" => spec.featurizer.lda.topics);
        set!("cv_folds" => spec.enlr.cv_folds);
        set!("trees" => spec.rf.trees);
        set!("hidden" => spec.neural.hidden);
        set!("word_dim" => spec.neural.word_dim);
        set!("char_dim" => spec.neural.char_dim);
        set!("char_hidden" => spec.neural.char_hidden);
        set!("mlp_hidden" => spec.neural.mlp_hidden);
        set!("dropout" => spec.neural.dropout);
        set!("l2" => spec.neural.l2);
        set!("learning_rate" => spec.train.learning_rate);
        set!("batch_size" => spec.train.batch_size);
        set!("patience" => spec.train.patience);
        if let Some(v) = c.get::<usize>("max_features")? {
            spec.rf.max_features = Some(v);
        }
        if let Some(v) = c.get::<usize>("max_vocab")? {
            spec.neural.max_vocab = Some(v);
        }
        if let Some(v) = c.get::<usize>("ngram_max")? {
            spec.featurizer.ngram_range = (1, v);
        }
        if let Some(v) = c.get::<String>("representation")? {
            spec.featurizer.representation = match v.as_str() {
                "tfidf" => Representation::Tfidf,
                "topics" => Representation::Topics,
                _ => return Err(usage(format!("representation must be tfidf or topics, got {v:?}"))),
            };
        }
        if let Some(v) = c.list("alphas")? {
            spec.enlr.alphas = v;
        }
        if let Some(v) = c.list("lambdas")? {
            spec.enlr.lambdas = v;
        }
        spec.train.threshold = self.threshold;
        Ok(spec)
    }

    fn train(&self, args: &ModelArgs, split: &CorpusSplit) -> Result<crate::pipeline::TrainOutcome> {
        let spec = self.spec(args).map_err(Failure::into_error)?;
        let embeddings = match self.pick(args.embeddings.clone(), "embeddings").map_err(Failure::into_error)? {
            Some(p) => Some(load_embeddings(&p)?),
            None => None,
        };
        train_model(&spec, split, embeddings.as_ref())
    }
}

fn sentences_of(path: &Path) -> Result<Vec<LabeledSentence>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => read_tsv(path),
        Some("txt") => read_acl_arc(path),
        _ => read_jsonl(path),
    }
}

/// A dataset directory as written by `build-corpus`, or a single dataset
/// file (`.jsonl`, `.tsv`, or ACL-ARC `.txt`) split by article.
pub fn load_split(path: &Path, seed: u64) -> Result<CorpusSplit> {
    if path.is_dir() {
        read_split(path)
    } else {
        split_groups(group_by_article(sentences_of(path)?), DEFAULT_FRACTIONS, seed)
    }
}

/// The test part of a dataset directory, or a whole dataset file as test.
pub fn load_test(path: &Path) -> Result<CorpusSplit> {
    if path.is_dir() {
        read_split(path)
    } else {
        Ok(CorpusSplit {
            test: sentences_of(path)?,
            ..Default::default()
        })
    }
}

fn require(path: &Path) -> CliResult {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Data(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        ))))
    }
}

fn write_or_print(ctx: &mut Ctx, out: Option<&Path>, csv: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, csv)?,
        None => write!(ctx.out, "{csv}")?,
    }
    Ok(())
}

fn metrics_text(e: &crate::pipeline::Evaluation) -> String {
    let (m, c) = (&e.metrics, &e.counts);
    format!(
        "precision\t{:.4}\nrecall\t{:.4}\nf1\t{:.4}\ntp\t{}\nfp\t{}\nfn\t{}\ntn\t{}\n",
        m.precision, m.recall, m.f1, c.tp, c.fp, c.fn_, c.tn
    )
}

fn predict_request(input: Option<&Path>, text: Option<&str>, section: Option<String>) -> CliResult<PredictRequest> {
    let raw = |raw_text: String| PredictRequest {
        raw_text: Some(raw_text),
        sentences: None,
        section_type: section.clone(),
        contextual: true,
        threshold: 0.5,
        two_pass: false,
    };
    match (input, text) {
        (_, Some(t)) => Ok(raw(t.to_owned())),
        (Some(p), None) if p == Path::new("-") => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(raw(s))
        }
        (Some(p), None) if p.extension().is_some_and(|e| e == "json") => {
            let bytes = std::fs::read(p)?;
            serde_json::from_slice(&bytes).map_err(|e| Failure::Data(Error::Json(e)))
        }
        (Some(p), None) => Ok(raw(std::fs::read_to_string(p)?)),
        (None, None) => Err(usage("one of --in and --text is required")),
    }
}

fn execute(cmd: Command, ctx: &mut Ctx) -> CliResult {
    match cmd {
        Command::BuildCorpus {
            xml_dir,
            out,
            fractions,
            quantile_bounds,
            neighbor_scope,
        } => {
            require(&xml_dir)?;
            let fractions = match fractions.as_deref() {
                Some([a, b, c]) => [*a, *b, *c],
                Some(_) => return Err(usage("--fractions takes three values")),
                None => DEFAULT_FRACTIONS,
            };
            let config = CorpusConfig {
                quantile_bounds,
                neighbor_scope: match neighbor_scope {
                    Some(Scope::Paragraph) => NeighborScope::Paragraph,
                    Some(Scope::Section) => NeighborScope::Section,
                    Some(Scope::Article) | None => NeighborScope::Article,
                },
                ..Default::default()
            };
            let (trees, failures) = read_article_dir(&xml_dir, &config.segmenter)?;
            for (p, e) in &failures {
                writeln!(ctx.err, "skipped {}: {e}", p.display())?;
            }
            let split = build_dataset(&trees, fractions, ctx.seed, &config)?;
            let stats = tree_stats(&trees, split.all());
            write_split(&out, &split, &stats)?;
            let text = format!(
                "{}train\t{}\nvalidation\t{}\ntest\t{}\nskipped files\t{}\n",
                stats.to_tsv(),
                split.train.len(),
                split.validation.len(),
                split.test.len(),
                failures.len()
            );
            ctx.emit(
                &json!({
                    "stats": stats,
                    "train": split.train.len(),
                    "validation": split.validation.len(),
                    "test": split.test.len(),
                    "skipped": failures.iter().map(|(p, _)| p.display().to_string()).collect::<Vec<_>>(),
                }),
                &text,
            )
        }
        Command::Stats { dataset } => {
            require(&dataset)?;
            let stored = dataset.join(STATS_FILE);
            let stats: StatsTable = if dataset.is_dir() && stored.is_file() {
                serde_json::from_slice(&std::fs::read(&stored)?).map_err(Error::from)?
            } else if dataset.is_dir() {
                split_stats(&read_split(&dataset)?)
            } else {
                crate::corpus::corpus_stats(&sentences_of(&dataset)?)
            };
            let text = stats.to_tsv();
            ctx.emit(&stats, &text)
        }
        Command::Train {
            dataset,
            model,
            out,
            history,
        } => {
            require(&dataset)?;
            let split = load_split(&dataset, ctx.seed)?;
            let outcome = ctx.train(&model, &split)?;
            ModelArtifact::new(outcome.model.clone()).save(&out)?;
            if let (Some(p), Some(h)) = (&history, &outcome.history) {
                std::fs::write(p, h.to_csv())?;
            }
            let valid = if split.validation.is_empty() {
                None
            } else {
                Some(outcome.model.evaluate(&split, &split.validation, ctx.threshold)?)
            };
            let mut text = format!("model\t{}\nwritten\t{}\n", outcome.model.family(), out.display());
            if let Some(e) = &valid {
                text.push_str(&metrics_text(e));
            }
            ctx.emit(
                &json!({
                    "family": outcome.model.family(),
                    "model_file": out,
                    "validation": valid,
                    "cv": outcome.cv,
                    "history": outcome.history,
                }),
                &text,
            )
        }
        Command::Evaluate { model_file, test } => {
            require(&model_file)?;
            require(&test)?;
            let artifact = ModelArtifact::load(&model_file)?;
            let split = load_test(&test)?;
            let e = artifact.model.evaluate(&split, &split.test, ctx.threshold)?;
            let text = metrics_text(&e);
            ctx.emit(&e, &text)
        }
        Command::DownsampleSweep {
            dataset,
            model,
            ratios,
            out,
            save_splits,
        } => {
            require(&dataset)?;
            let ratios = match ratios {
                Some(r) => r,
                None => ctx.config.list("ratios")?.unwrap_or_else(|| SWEEP_RATIOS.to_vec()),
            };
            let split = load_split(&dataset, ctx.seed)?;
            if let Some(dir) = &save_splits {
                for &r in &ratios {
                    let d = downsample(&split, r, ctx.seed)?;
                    let sub = dir.join(format!("ratio-{r}"));
                    write_split(&sub, &d.split, &split_stats(&d.split))?;
                }
            }
            let rows = ratio_sweep(&split, &ratios, ctx.seed, ctx.threshold, |s| {
                ctx.train(&model, s).map(|o| o.model)
            })?;
            for r in rows.iter().filter(|r| r.unreachable) {
                writeln!(ctx.err, "ratio {} exceeds the natural ratio; training set left unchanged", r.ratio)?;
            }
            if ctx.json {
                ctx.emit(&rows, "")?;
                if let Some(p) = &out {
                    std::fs::write(p, sweep_csv(&rows))?;
                }
                Ok(())
            } else {
                write_or_print(ctx, out.as_deref(), &sweep_csv(&rows))
            }
        }
        Command::CrossCorpus { corpora, model, out } => {
            let mut named = Vec::new();
            for c in &corpora {
                let (name, path) = c
                    .split_once('=')
                    .ok_or_else(|| usage(format!("--corpus expects name=path, got {c:?}")))?;
                let path = Path::new(path);
                require(path)?;
                named.push(NamedCorpus {
                    name: name.to_owned(),
                    split: load_split(path, ctx.seed)?,
                });
            }
            let table = cross_corpus(&named, ctx.seed, ctx.threshold, |s| ctx.train(&model, s).map(|o| o.model))?;
            if ctx.json {
                ctx.emit(&table, "")?;
                if let Some(p) = &out {
                    std::fs::write(p, table.to_csv())?;
                }
                Ok(())
            } else {
                write_or_print(ctx, out.as_deref(), &table.to_csv())
            }
        }
        Command::Predict {
            model_file,
            input,
            text,
            section,
            no_context,
            two_pass,
        } => {
            require(&model_file)?;
            if let Some(p) = input.as_deref().filter(|p| *p != Path::new("-")) {
                require(p)?;
            }
            let artifact = ModelArtifact::load(&model_file)?;
            let mut req = predict_request(input.as_deref(), text.as_deref(), section)?;
            let from_file = input.as_deref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
            if !from_file || ctx.threshold_set {
                req.threshold = ctx.threshold;
            }
            if no_context {
                req.contextual = false;
            }
            if two_pass {
                req.two_pass = true;
            }
            let resp = respond(&artifact, &req)?;
            let text: String = resp
                .sentences
                .iter()
                .map(|s| format!("{:.6}\t{}\t{}\t{}\n", s.probability, u8::from(s.worthy), s.section_type, s.text))
                .collect();
            ctx.emit(&resp, &text)
        }
        Command::Report {
            top_k,
            kind,
            model_file,
            test,
            contextual,
            out,
        } => {
            require(&test)?;
            let k = ctx.pick(top_k, "top_k")?.unwrap_or(20);
            match kind {
                ReportKind::Sentences => {
                    let model_file = model_file.ok_or_else(|| usage("--model-file is required for sentence reports"))?;
                    require(&model_file)?;
                    let artifact = ModelArtifact::load(&model_file)?;
                    let split = load_test(&test)?;
                    let rows = ranked_report(&artifact.model, &split, &split.test, k, ctx.threshold)?;
                    if ctx.json {
                        ctx.emit(&rows, "")
                    } else {
                        write_or_print(ctx, out.as_deref(), &ranked_csv(&rows))
                    }
                }
                ReportKind::Features => {
                    let args = ModelArgs {
                        model: Some(ModelFamily::Rf),
                        attention: None,
                        contextual,
                        embeddings: None,
                        epochs: None,
                    };
                    let spec = ctx.spec(&args)?;
                    let report = feature_importances(&spec, &load_split(&test, ctx.seed)?)?;
                    if let Some(p) = &out {
                        std::fs::write(p, report.to_csv())?;
                    }
                    let top = crate::linear_models::ImportanceReport {
                        features: report.top(k).to_vec(),
                        categories: report.categories.clone(),
                    };
                    let text = format!("{}\n{}", top.to_csv(), top.categories_csv());
                    ctx.emit(&top, &text)
                }
            }
        }
        Command::Serve {
            port,
            model_file,
            host,
            cors_origins,
        } => {
            let port = ctx.pick(port, "port")?.unwrap_or(8080);
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|_| usage(format!("invalid address {host}:{port}")))?;
            let app = service::router(
                service::load_for_service(&model_file),
                &ServiceConfig { cors_origins },
            )?;
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(service::serve(addr, app))?;
            Ok(())
        }
    }
}

fn run_parsed(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = match &cli.config {
        Some(p) => {
            require(p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get("seed")?.unwrap_or(42),
    };
    let threshold = match cli.threshold {
        Some(t) => Some(t),
        None => config.get("threshold")?,
    };
    let threshold_set = threshold.is_some();
    let threshold = threshold.unwrap_or(0.5);
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(usage(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let mut ctx = Ctx {
        json: cli.json,
        seed,
        threshold,
        threshold_set,
        config,
        out,
        err,
    };
    execute(cli.command, &mut ctx)
}

/// Runs the command line on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                1
            } else {
                let _ = write!(out, "{rendered}");
                0
            };
        }
    };
    match run_parsed(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}\n\n{}", Cli::command().render_usage());
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
