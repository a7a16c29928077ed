//! Experiment configuration: a flat sectioned key-value file.
//!
//! ```text
//! [dataset]
//! name = sample
//! path = data/sample_reviews.csv
//! format = csv
//! text_column = text
//! label_column = label
//!
//! [pipeline]
//! words_to_keep = 200
//! weighting = tfidf_smooth_l2
//!
//! [split]
//! train_fraction = 0.8
//! seed = 42
//!
//! [run]
//! seed = 7
//! upsample = false
//! out = runs/sample-nb
//!
//! [model.nb]
//! smoothing = 1.0
//! ```
//!
//! Exactly one `model.*` section must be present. Lines starting with `#`
//! or `;` are comments; unknown sections or keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pgmtext::baselines::TrainConfig;
use pgmtext::bayesnet::{Metric, ScoreConfig};
use pgmtext::corpus::SplitSpec;
use pgmtext::fingerprint_hex;
use pgmtext::hmm::HmmTrainConfig;
use pgmtext::textprep::{PipelineConfig, Weighting};

use crate::{CliError, Result};

#[derive(Debug, Clone)]
pub enum DatasetFormat {
    Csv { text_column: String, label_column: String, delimiter: u8 },
    Arff,
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    pub format: DatasetFormat,
}

/// Bayesian-network search choice; `Naive` keeps the fixed base structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnSearch {
    Naive,
    K2,
    HillClimb,
    RepeatedHillClimb,
    Lagd,
    Tabu,
    Tan,
}

impl BnSearch {
    pub fn as_str(self) -> &'static str {
        match self {
            BnSearch::Naive => "naive",
            BnSearch::K2 => "k2",
            BnSearch::HillClimb => "hill_climb",
            BnSearch::RepeatedHillClimb => "repeated_hill_climb",
            BnSearch::Lagd => "lagd",
            BnSearch::Tabu => "tabu",
            BnSearch::Tan => "tan",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "naive" => Some(BnSearch::Naive),
            "k2" => Some(BnSearch::K2),
            "hill_climb" => Some(BnSearch::HillClimb),
            "repeated_hill_climb" => Some(BnSearch::RepeatedHillClimb),
            "lagd" => Some(BnSearch::Lagd),
            "tabu" => Some(BnSearch::Tabu),
            "tan" => Some(BnSearch::Tan),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BayesNetParams {
    pub score: ScoreConfig,
    pub search: BnSearch,
    pub smoothing: f64,
    pub max_steps: usize,
    pub restarts: usize,
    pub tabu_length: usize,
    pub look_ahead: usize,
    pub good_ops: usize,
}

impl Default for BayesNetParams {
    fn default() -> Self {
        Self {
            score: ScoreConfig::default(),
            search: BnSearch::Naive,
            smoothing: 0.5,
            max_steps: 100,
            restarts: 3,
            tabu_length: 5,
            look_ahead: 2,
            good_ops: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Nb { smoothing: f64 },
    Logreg(TrainConfig),
    Svm(TrainConfig),
    BayesNet(BayesNetParams),
    Hmm(HmmTrainConfig),
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Nb { .. } => "nb",
            ModelSpec::Logreg(_) => "logreg",
            ModelSpec::Svm(_) => "svm",
            ModelSpec::BayesNet(_) => "bayesnet",
            ModelSpec::Hmm(_) => "hmm",
        }
    }

    /// Report row label, e.g. `bayesnet-tan-k2`.
    pub fn display_name(&self) -> String {
        match self {
            ModelSpec::BayesNet(p) => {
                format!("bayesnet-{}-{}", p.search.as_str(), p.score.metric.as_str())
            }
            other => other.kind().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub pipeline: PipelineConfig,
    pub stopwords_path: Option<PathBuf>,
    pub split: SplitSpec,
    pub seed: u64,
    pub upsample: bool,
    pub out: PathBuf,
    pub model: ModelSpec,
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_sections(text: &str, origin: &Path) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            let name = line[1..line.len() - 1].trim().to_string();
            if sections.contains_key(&name) {
                return Err(CliError::Config(format!(
                    "{}:{}: duplicate section [{name}]",
                    origin.display(),
                    i + 1
                )));
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected `key = value`",
                origin.display(),
                i + 1
            )));
        };
        let Some(section) = &current else {
            return Err(CliError::Config(format!(
                "{}:{}: key outside any section",
                origin.display(),
                i + 1
            )));
        };
        let map = sections.get_mut(section).expect("section exists");
        if map
            .insert(key.trim().to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(CliError::Config(format!(
                "{}:{}: duplicate key `{}`",
                origin.display(),
                i + 1,
                key.trim()
            )));
        }
    }
    Ok(sections)
}

struct SectionReader<'a> {
    name: &'a str,
    map: BTreeMap<String, String>,
}

impl<'a> SectionReader<'a> {
    fn new(name: &'a str, map: BTreeMap<String, String>) -> Self {
        Self { name, map }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| CliError::Config(format!("[{}] is missing `{}`", self.name, key)))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::Config(format!("[{}] has a bad value for `{key}`: `{v}`", self.name))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(CliError::Config(format!("[{}] has unknown key `{key}`", self.name)));
        }
        Ok(())
    }
}

fn parse_bool(name: &str, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("[{name}] has a bad flag for `{key}`: `{v}`"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|_| CliError::MissingPath(path.to_path_buf()))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut sections = parse_sections(text, origin)?;

        let mut dataset = SectionReader::new(
            "dataset",
            sections
                .remove("dataset")
                .ok_or_else(|| CliError::Config("missing [dataset] section".into()))?,
        );
        let path = PathBuf::from(dataset.required("path")?);
        let name = dataset
            .take("name")
            .unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".to_string())
            });
        let format = match dataset.take("format").as_deref() {
            None | Some("csv") => {
                let delimiter = match dataset.take("delimiter") {
                    None => b',',
                    Some(d) if d.len() == 1 => d.as_bytes()[0],
                    Some(d) => {
                        return Err(CliError::Config(format!(
                            "[dataset] delimiter must be one character, got `{d}`"
                        )))
                    }
                };
                DatasetFormat::Csv {
                    text_column: dataset.required("text_column")?,
                    label_column: dataset.required("label_column")?,
                    delimiter,
                }
            }
            Some("arff") => DatasetFormat::Arff,
            Some(other) => {
                return Err(CliError::Config(format!("[dataset] unknown format `{other}`")))
            }
        };
        dataset.finish()?;

        let mut pipe = SectionReader::new(
            "pipeline",
            sections.remove("pipeline").unwrap_or_default(),
        );
        let words_to_keep: usize = pipe.parse("words_to_keep", 1000)?;
        if words_to_keep == 0 {
            return Err(CliError::Config("[pipeline] words_to_keep must be >= 1".into()));
        }
        let weighting = match pipe.take("weighting") {
            None => Weighting::TfIdfSmoothL2,
            Some(w) => Weighting::parse(&w).ok_or_else(|| {
                CliError::Config(format!("[pipeline] unknown weighting `{w}`"))
            })?,
        };
        let lowercase = match pipe.take("lowercase") {
            None => true,
            Some(v) => parse_bool("pipeline", "lowercase", &v)?,
        };
        let min_token_length: usize = pipe.parse("min_token_length", 1)?;
        let stopwords_path = pipe.take("stopwords").map(PathBuf::from);
        pipe.finish()?;
        let mut pipeline = PipelineConfig::new(words_to_keep);
        pipeline.weighting = weighting;
        pipeline.lowercase = lowercase;
        pipeline.min_token_length = min_token_length.max(1);

        let mut split = SectionReader::new(
            "split",
            sections.remove("split").unwrap_or_default(),
        );
        let train_fraction: f64 = split.parse("train_fraction", 0.8)?;
        let split_seed: u64 = split.parse("seed", 0)?;
        split.finish()?;
        let split = SplitSpec::new(train_fraction, split_seed)
            .map_err(|e| CliError::Config(e.to_string()))?;

        let mut run = SectionReader::new("run", sections.remove("run").unwrap_or_default());
        let seed: u64 = run.parse("seed", 0)?;
        let upsample = match run.take("upsample") {
            None => false,
            Some(v) => parse_bool("run", "upsample", &v)?,
        };
        let out = PathBuf::from(run.take("out").unwrap_or_else(|| "run-output".to_string()));
        run.finish()?;

        let model_sections: Vec<String> = sections
            .keys()
            .filter(|k| k.starts_with("model."))
            .cloned()
            .collect();
        if model_sections.len() != 1 {
            return Err(CliError::Config(format!(
                "exactly one model section required, found {}",
                model_sections.len()
            )));
        }
        let model_name = model_sections.into_iter().next().expect("one section");
        let mut model_reader = SectionReader::new(
            &model_name,
            sections.remove(&model_name).expect("model section present"),
        );
        let model = build_model(&model_name, &mut model_reader, seed)?;
        model_reader.finish()?;

        if let Some(section) = sections.keys().next() {
            return Err(CliError::Config(format!("unknown section [{section}]")));
        }

        Ok(Self {
            dataset: DatasetConfig { name, path, format },
            pipeline,
            stopwords_path,
            split,
            seed,
            upsample,
            out,
            model,
        })
    }

    /// Canonical re-serialization of the resolved config; its fingerprint
    /// is the config hash recorded in manifests.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[dataset]\n");
        s.push_str(&format!("name = {}\n", self.dataset.name));
        s.push_str(&format!("path = {}\n", self.dataset.path.display()));
        match &self.dataset.format {
            DatasetFormat::Csv { text_column, label_column, delimiter } => {
                s.push_str("format = csv\n");
                s.push_str(&format!("text_column = {text_column}\n"));
                s.push_str(&format!("label_column = {label_column}\n"));
                s.push_str(&format!("delimiter = {}\n", *delimiter as char));
            }
            DatasetFormat::Arff => s.push_str("format = arff\n"),
        }
        s.push_str("[pipeline]\n");
        s.push_str(&format!("words_to_keep = {}\n", self.pipeline.words_to_keep));
        s.push_str(&format!("weighting = {}\n", self.pipeline.weighting.as_str()));
        s.push_str(&format!("lowercase = {}\n", self.pipeline.lowercase));
        s.push_str(&format!("min_token_length = {}\n", self.pipeline.min_token_length));
        s.push_str(&format!(
            "stopwords = {}\n",
            self.stopwords_path
                .as_ref()
                .map_or("-".to_string(), |p| p.display().to_string())
        ));
        s.push_str("[split]\n");
        s.push_str(&format!("train_fraction = {}\n", self.split.train_fraction));
        s.push_str(&format!("seed = {}\n", self.split.seed));
        s.push_str("[run]\n");
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("upsample = {}\n", self.upsample));
        match &self.model {
            ModelSpec::Nb { smoothing } => {
                s.push_str("[model.nb]\n");
                s.push_str(&format!("smoothing = {smoothing}\n"));
            }
            ModelSpec::Logreg(c) | ModelSpec::Svm(c) => {
                s.push_str(&format!("[model.{}]\n", self.model.kind()));
                s.push_str(&format!("learning_rate = {}\n", c.learning_rate));
                s.push_str(&format!("decay = {}\n", c.decay));
                s.push_str(&format!("l2_lambda = {}\n", c.l2_lambda));
                s.push_str(&format!("epochs = {}\n", c.epochs));
            }
            ModelSpec::BayesNet(p) => {
                s.push_str("[model.bayesnet]\n");
                s.push_str(&format!("metric = {}\n", p.score.metric.as_str()));
                s.push_str(&format!("search = {}\n", p.search.as_str()));
                s.push_str(&format!("alpha = {}\n", p.score.alpha));
                s.push_str(&format!("max_parents = {}\n", p.score.max_parents));
                s.push_str(&format!("smoothing = {}\n", p.smoothing));
                s.push_str(&format!("max_steps = {}\n", p.max_steps));
                s.push_str(&format!("restarts = {}\n", p.restarts));
                s.push_str(&format!("tabu_length = {}\n", p.tabu_length));
                s.push_str(&format!("look_ahead = {}\n", p.look_ahead));
                s.push_str(&format!("good_ops = {}\n", p.good_ops));
            }
            ModelSpec::Hmm(c) => {
                s.push_str("[model.hmm]\n");
                s.push_str(&format!("n_states = {}\n", c.n_states));
                s.push_str(&format!("symbol_cap = {}\n", c.symbol_cap));
                s.push_str(&format!("max_iters = {}\n", c.max_iters));
                s.push_str(&format!("tol = {}\n", c.tol));
            }
        }
        s
    }

    pub fn config_hash(&self) -> String {
        fingerprint_hex(self.canonical_string().as_bytes())
    }
}

fn build_model(name: &str, r: &mut SectionReader, seed: u64) -> Result<ModelSpec> {
    match name {
        "model.nb" => Ok(ModelSpec::Nb { smoothing: r.parse("smoothing", 1.0)? }),
        "model.logreg" | "model.svm" => {
            let defaults = TrainConfig::default();
            let cfg = TrainConfig {
                learning_rate: r.parse("learning_rate", defaults.learning_rate)?,
                decay: r.parse("decay", defaults.decay)?,
                l2_lambda: r.parse("l2_lambda", defaults.l2_lambda)?,
                epochs: r.parse("epochs", defaults.epochs)?,
                seed,
                smoothing: defaults.smoothing,
            };
            if cfg.learning_rate <= 0.0 {
                return Err(CliError::Config("learning_rate must be positive".into()));
            }
            if name == "model.logreg" {
                Ok(ModelSpec::Logreg(cfg))
            } else {
                Ok(ModelSpec::Svm(cfg))
            }
        }
        "model.bayesnet" => {
            let defaults = BayesNetParams::default();
            let metric = match r.take("metric") {
                None => defaults.score.metric,
                Some(m) => Metric::parse(&m)
                    .ok_or_else(|| CliError::Config(format!("unknown metric `{m}`")))?,
            };
            let search = match r.take("search") {
                None => defaults.search,
                Some(s) => BnSearch::parse(&s)
                    .ok_or_else(|| CliError::Config(format!("unknown search `{s}`")))?,
            };
            let score = ScoreConfig {
                metric,
                alpha: r.parse("alpha", defaults.score.alpha)?,
                max_parents: r.parse("max_parents", defaults.score.max_parents)?,
                structure_prior: 0.0,
            };
            Ok(ModelSpec::BayesNet(BayesNetParams {
                score,
                search,
                smoothing: r.parse("smoothing", defaults.smoothing)?,
                max_steps: r.parse("max_steps", defaults.max_steps)?,
                restarts: r.parse("restarts", defaults.restarts)?,
                tabu_length: r.parse("tabu_length", defaults.tabu_length)?,
                look_ahead: r.parse("look_ahead", defaults.look_ahead)?,
                good_ops: r.parse("good_ops", defaults.good_ops)?,
            }))
        }
        "model.hmm" => {
            let defaults = HmmTrainConfig::default();
            Ok(ModelSpec::Hmm(HmmTrainConfig {
                n_states: r.parse("n_states", defaults.n_states)?,
                symbol_cap: r.parse("symbol_cap", defaults.symbol_cap)?,
                max_iters: r.parse("max_iters", defaults.max_iters)?,
                tol: r.parse("tol", defaults.tol)?,
                seed,
            }))
        }
        other => Err(CliError::Config(format!("unknown model section [{other}]"))),
    }
}
