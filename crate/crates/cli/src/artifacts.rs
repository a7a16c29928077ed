//! On-disk run artifacts: the manifest, split document files, vocabulary,
//! feature matrices and the model wrapper.
//!
//! Every file is written from deterministic content (no timestamps), so a
//! rerun with the same config and seed reproduces identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pgmtext::corpus::Dataset;
use pgmtext::fingerprint_hex;
use pgmtext::textprep::{FeatureMatrix, Vocabulary};

use crate::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const TRAIN_DOCS_FILE: &str = "train.csv";
pub const TEST_DOCS_FILE: &str = "test.csv";
pub const VOCAB_FILE: &str = "vocabulary.tsv";
pub const TRAIN_MATRIX_FILE: &str = "train.matrix.txt";
pub const TEST_MATRIX_FILE: &str = "test.matrix.txt";
pub const MODEL_FILE: &str = "model.txt";
pub const TRAIN_LOG_FILE: &str = "train.log";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_CSV_FILE: &str = "report.csv";

/// Key-value manifest recording what `prepare` produced.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub config_hash: String,
    /// Fingerprint of the raw dataset file; guards against stale artifacts
    /// when the data changes under an unchanged config.
    pub data_hash: String,
    pub dataset: String,
    pub seed: u64,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub upsample: bool,
    pub weighting: String,
    pub words_to_keep: usize,
    pub lowercase: bool,
    pub min_token_length: usize,
    pub vocab_hash: String,
    pub classes: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::from("pgmtext manifest v1\n");
        s.push_str(&format!("config_hash = {}\n", self.config_hash));
        s.push_str(&format!("data_hash = {}\n", self.data_hash));
        s.push_str(&format!("dataset = {}\n", self.dataset));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("split_seed = {}\n", self.split_seed));
        s.push_str(&format!("train_fraction = {}\n", self.train_fraction));
        s.push_str(&format!("upsample = {}\n", self.upsample));
        s.push_str(&format!("weighting = {}\n", self.weighting));
        s.push_str(&format!("words_to_keep = {}\n", self.words_to_keep));
        s.push_str(&format!("lowercase = {}\n", self.lowercase));
        s.push_str(&format!("min_token_length = {}\n", self.min_token_length));
        s.push_str(&format!("vocab_hash = {}\n", self.vocab_hash));
        s.push_str(&format!("classes = {}\n", self.classes.join("\t")));
        s.push_str(&format!("train_rows = {}\n", self.train_rows));
        s.push_str(&format!("test_rows = {}\n", self.test_rows));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("pgmtext manifest v1") {
            return Err(CliError::Artifact("bad manifest header".into()));
        }
        let mut kv = BTreeMap::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| CliError::Artifact(format!("bad manifest line `{line}`")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<String> {
            kv.get(k)
                .cloned()
                .ok_or_else(|| CliError::Artifact(format!("manifest missing `{k}`")))
        };
        let parse_field = |k: &str| -> Result<String> { get(k) };
        Ok(Self {
            config_hash: parse_field("config_hash")?,
            data_hash: parse_field("data_hash")?,
            dataset: parse_field("dataset")?,
            seed: get("seed")?.parse().map_err(|_| CliError::Artifact("bad seed".into()))?,
            split_seed: get("split_seed")?
                .parse()
                .map_err(|_| CliError::Artifact("bad split_seed".into()))?,
            train_fraction: get("train_fraction")?
                .parse()
                .map_err(|_| CliError::Artifact("bad train_fraction".into()))?,
            upsample: get("upsample")? == "true",
            weighting: parse_field("weighting")?,
            words_to_keep: get("words_to_keep")?
                .parse()
                .map_err(|_| CliError::Artifact("bad words_to_keep".into()))?,
            lowercase: get("lowercase")? == "true",
            min_token_length: get("min_token_length")?
                .parse()
                .map_err(|_| CliError::Artifact("bad min_token_length".into()))?,
            vocab_hash: parse_field("vocab_hash")?,
            classes: get("classes")?.split('\t').map(str::to_string).collect(),
            train_rows: get("train_rows")?
                .parse()
                .map_err(|_| CliError::Artifact("bad train_rows".into()))?,
            test_rows: get("test_rows")?
                .parse()
                .map_err(|_| CliError::Artifact("bad test_rows".into()))?,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text =
            fs::read_to_string(&path).map_err(|_| CliError::MissingPath(path.clone()))?;
        Self::parse(&text)
    }
}

/// Writes a split dataset as `id,text,label` CSV.
pub fn write_documents(path: &Path, data: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(pgmtext::corpus::CorpusError::from)?;
    writer
        .write_record(["id", "text", "label"])
        .map_err(pgmtext::corpus::CorpusError::from)?;
    for doc in data.documents() {
        writer
            .write_record([&doc.id, &doc.text, &doc.label])
            .map_err(pgmtext::corpus::CorpusError::from)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a split dataset back, keeping the label order from the manifest.
pub fn read_documents(path: &Path, classes: &[String]) -> Result<Dataset> {
    if !path.exists() {
        return Err(CliError::MissingPath(path.to_path_buf()));
    }
    let mut reader =
        csv::Reader::from_path(path).map_err(pgmtext::corpus::CorpusError::from)?;
    let mut documents = Vec::new();
    for record in reader.records() {
        let record = record.map_err(pgmtext::corpus::CorpusError::from)?;
        documents.push(pgmtext::corpus::Document {
            id: record.get(0).unwrap_or_default().to_string(),
            text: record.get(1).unwrap_or_default().to_string(),
            label: record.get(2).unwrap_or_default().to_string(),
        });
    }
    Dataset::with_labels(documents, classes.to_vec()).map_err(CliError::from)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn load_vocabulary(dir: &Path) -> Result<(Arc<Vocabulary>, String)> {
    let path = dir.join(VOCAB_FILE);
    let bytes = fs::read(&path).map_err(|_| CliError::MissingPath(path.clone()))?;
    let hash = fingerprint_hex(&bytes);
    let vocab = Vocabulary::read(BufReader::new(bytes.as_slice()))?;
    Ok((Arc::new(vocab), hash))
}

pub fn load_matrix(
    dir: &Path,
    file: &str,
    classes: Vec<String>,
    vocab: Arc<Vocabulary>,
) -> Result<FeatureMatrix> {
    let path = dir.join(file);
    let bytes = fs::read(&path).map_err(|_| CliError::MissingPath(path.clone()))?;
    FeatureMatrix::read(BufReader::new(bytes.as_slice()), classes, vocab).map_err(CliError::from)
}

/// Model wrapper: a small header naming the model kind and the vocabulary
/// it was trained against, followed by the module-native body.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub kind: String,
    pub vocab_hash: String,
    pub weighting: String,
    pub body: Vec<u8>,
}

impl ModelFile {
    pub fn render(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"pgmtext model v1\n");
        out.extend_from_slice(format!("kind = {}\n", self.kind).as_bytes());
        out.extend_from_slice(format!("vocab_hash = {}\n", self.vocab_hash).as_bytes());
        out.extend_from_slice(format!("weighting = {}\n", self.weighting).as_bytes());
        out.extend_from_slice(b"---\n");
        out.extend_from_slice(&self.body);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let text = String::from_utf8_lossy(bytes);
        let mut kind = None;
        let mut vocab_hash = None;
        let mut weighting = None;
        let mut offset = 0usize;
        let mut lines_seen = 0;
        for line in text.lines() {
            offset += line.len() + 1;
            lines_seen += 1;
            match lines_seen {
                1 => {
                    if line != "pgmtext model v1" {
                        return Err(CliError::Artifact("bad model header".into()));
                    }
                }
                _ if line == "---" => {
                    let body = bytes[offset..].to_vec();
                    return Ok(Self {
                        kind: kind.ok_or_else(|| CliError::Artifact("model missing kind".into()))?,
                        vocab_hash: vocab_hash
                            .ok_or_else(|| CliError::Artifact("model missing vocab_hash".into()))?,
                        weighting: weighting
                            .ok_or_else(|| CliError::Artifact("model missing weighting".into()))?,
                        body,
                    });
                }
                _ => {
                    let (k, v) = line
                        .split_once(" = ")
                        .ok_or_else(|| CliError::Artifact(format!("bad model line `{line}`")))?;
                    match k {
                        "kind" => kind = Some(v.to_string()),
                        "vocab_hash" => vocab_hash = Some(v.to_string()),
                        "weighting" => weighting = Some(v.to_string()),
                        other => {
                            return Err(CliError::Artifact(format!(
                                "unknown model header key `{other}`"
                            )))
                        }
                    }
                }
            }
        }
        Err(CliError::Artifact("model file has no body separator".into()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|_| CliError::MissingPath(path.to_path_buf()))?;
        Self::parse(&bytes)
    }
}

/// Resolves a model path: explicit flag or `<out>/model.txt`.
pub fn model_path(out: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| out.join(MODEL_FILE), Path::to_path_buf)
}
