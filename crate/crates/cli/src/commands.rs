//! The prepare / train / evaluate / benchmark / report pipeline.

use std::collections::HashSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use pgmtext::baselines::{
    predict_linear, train_linear_svm, train_logreg, train_multinomial_nb, LinearModel,
    NaiveBayesModel,
};
use pgmtext::bayesnet::{
    base_structure, estimate_cpts, learn_tan, network_score, search_hill_climb, search_k2,
    search_lagd, search_repeated_hill_climb, search_tabu, BayesNetClassifier, DiscreteData,
    SearchResult,
};
use pgmtext::corpus::{self, Dataset};
use pgmtext::eval::{average_metrics, format_report, AveragedMetrics, ConfusionMatrix, NamedResult};
use pgmtext::hmm::{classify_sequence, train_class_hmms, ClassHmmBank};
use pgmtext::textprep::{
    normalize_text_opts, tokenize, vectorize_dataset, vectorize_with_vocab, FeatureMatrix,
    PipelineConfig, Weighting,
};
use pgmtext::{fingerprint_hex, fmt_g12};

use crate::artifacts::{
    self, load_matrix, load_vocabulary, model_path, write_bytes, write_documents, Manifest,
    ModelFile, MODEL_FILE, REPORT_CSV_FILE, REPORT_TEXT_FILE, TEST_DOCS_FILE, TEST_MATRIX_FILE,
    TRAIN_DOCS_FILE, TRAIN_LOG_FILE, TRAIN_MATRIX_FILE, VOCAB_FILE,
};
use crate::config::{BnSearch, DatasetFormat, ExperimentConfig, ModelSpec};
use crate::{CliError, Result};

/// Everything `prepare` materializes, kept in memory for the next stage.
pub struct Prepared {
    pub manifest: Manifest,
    pub train_docs: Dataset,
    pub test_docs: Dataset,
    pub train_matrix: FeatureMatrix,
    pub test_matrix: FeatureMatrix,
}

fn resolve_pipeline(cfg: &ExperimentConfig) -> Result<PipelineConfig> {
    let mut pipeline = cfg.pipeline.clone();
    if let Some(path) = &cfg.stopwords_path {
        let text = fs::read_to_string(path).map_err(|_| CliError::MissingPath(path.clone()))?;
        let set: HashSet<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        pipeline.stopwords = Some(set);
    }
    Ok(pipeline)
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    if !cfg.dataset.path.exists() {
        return Err(CliError::MissingPath(cfg.dataset.path.clone()));
    }
    let data = match &cfg.dataset.format {
        DatasetFormat::Csv { text_column, label_column, delimiter } => corpus::load_csv_with(
            &cfg.dataset.path,
            text_column,
            label_column,
            &corpus::CsvOptions { delimiter: *delimiter },
        )?,
        DatasetFormat::Arff => corpus::load_arff(&cfg.dataset.path)?,
    };
    Ok(data)
}

fn dataset_fingerprint(cfg: &ExperimentConfig) -> Result<String> {
    let bytes = fs::read(&cfg.dataset.path)
        .map_err(|_| CliError::MissingPath(cfg.dataset.path.clone()))?;
    Ok(fingerprint_hex(&bytes))
}

/// Splits, optionally upsamples, vectorizes and writes all artifacts.
pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    fs::create_dir_all(&cfg.out)?;
    let pipeline = resolve_pipeline(cfg)?;
    let data = load_dataset(cfg)?;
    let (mut train_docs, test_docs) = corpus::stratified_split(&data, &cfg.split)?;
    if cfg.upsample {
        train_docs = corpus::upsample_minority(&train_docs, cfg.seed)?;
    }

    let train_matrix = vectorize_dataset(&train_docs, &pipeline)?;
    let test_matrix = vectorize_with_vocab(&test_docs, &pipeline, train_matrix.vocab())?;

    let vocab_bytes = train_matrix.vocab().to_bytes();
    let manifest = Manifest {
        config_hash: cfg.config_hash(),
        data_hash: dataset_fingerprint(cfg)?,
        dataset: cfg.dataset.name.clone(),
        seed: cfg.seed,
        split_seed: cfg.split.seed,
        train_fraction: cfg.split.train_fraction,
        upsample: cfg.upsample,
        weighting: pipeline.weighting.as_str().to_string(),
        words_to_keep: pipeline.words_to_keep,
        lowercase: pipeline.lowercase,
        min_token_length: pipeline.min_token_length,
        vocab_hash: fingerprint_hex(&vocab_bytes),
        classes: train_docs.labels().to_vec(),
        train_rows: train_matrix.n_rows(),
        test_rows: test_matrix.n_rows(),
    };

    write_documents(&cfg.out.join(TRAIN_DOCS_FILE), &train_docs)?;
    write_documents(&cfg.out.join(TEST_DOCS_FILE), &test_docs)?;
    write_bytes(&cfg.out.join(VOCAB_FILE), &vocab_bytes)?;
    write_bytes(&cfg.out.join(TRAIN_MATRIX_FILE), &train_matrix.to_bytes())?;
    write_bytes(&cfg.out.join(TEST_MATRIX_FILE), &test_matrix.to_bytes())?;
    write_bytes(&cfg.out.join(artifacts::MANIFEST_FILE), manifest.render().as_bytes())?;

    Ok(Prepared { manifest, train_docs, test_docs, train_matrix, test_matrix })
}

/// Loads prepared artifacts, re-running `prepare` when they are missing or
/// were produced by a different config.
pub fn ensure_prepared(cfg: &ExperimentConfig) -> Result<Prepared> {
    match Manifest::load(&cfg.out) {
        Ok(manifest)
            if manifest.config_hash == cfg.config_hash()
                && dataset_fingerprint(cfg).is_ok_and(|h| h == manifest.data_hash) =>
        {
            let (vocab, vocab_hash) = load_vocabulary(&cfg.out)?;
            if vocab_hash != manifest.vocab_hash {
                return Err(CliError::VocabHashMismatch {
                    expected: manifest.vocab_hash.clone(),
                    found: vocab_hash,
                });
            }
            let train_matrix = load_matrix(
                &cfg.out,
                TRAIN_MATRIX_FILE,
                manifest.classes.clone(),
                Arc::clone(&vocab),
            )?;
            let test_matrix = load_matrix(
                &cfg.out,
                TEST_MATRIX_FILE,
                manifest.classes.clone(),
                Arc::clone(&vocab),
            )?;
            let train_docs =
                artifacts::read_documents(&cfg.out.join(TRAIN_DOCS_FILE), &manifest.classes)?;
            let test_docs =
                artifacts::read_documents(&cfg.out.join(TEST_DOCS_FILE), &manifest.classes)?;
            Ok(Prepared { manifest, train_docs, test_docs, train_matrix, test_matrix })
        }
        _ => cmd_prepare(cfg),
    }
}

fn search_log(lines: &mut String, label: &str, result: &SearchResult) {
    for (i, score) in result.trace.iter().enumerate() {
        lines.push_str(&format!("{label} step {i} score {}\n", fmt_g12(*score)));
    }
}

fn train_bayesnet(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
) -> Result<(BayesNetClassifier, String)> {
    let ModelSpec::BayesNet(params) = &cfg.model else { unreachable!() };
    let data = DiscreteData::from_feature_matrix(&prepared.train_matrix);
    let n_features = data.n_vars().saturating_sub(1);
    if n_features > 500 && !matches!(params.search, BnSearch::Naive | BnSearch::Tan) {
        eprintln!(
            "note: `search = {}` scans feature pairs every step; {n_features} features will be \
             slow. `search = tan` or a smaller words_to_keep scales better.",
            params.search.as_str()
        );
    }
    let mut log = String::new();

    let dag = match params.search {
        BnSearch::Naive => {
            let dag = base_structure(data.n_vars());
            let score = network_score(&data, &dag, &params.score)?;
            log.push_str(&format!("naive step 0 score {}\n", fmt_g12(score)));
            dag
        }
        BnSearch::Tan => {
            let dag = learn_tan(&data, &params.score)?;
            let score = network_score(&data, &dag, &params.score)?;
            log.push_str(&format!("tan step 0 score {}\n", fmt_g12(score)));
            dag
        }
        BnSearch::K2 => {
            let order: Vec<usize> = (1..data.n_vars()).collect();
            let result = search_k2(&data, &order, &params.score)?;
            search_log(&mut log, "k2", &result);
            result.dag
        }
        BnSearch::HillClimb => {
            let result = search_hill_climb(&data, &params.score, params.max_steps)?;
            search_log(&mut log, "hill_climb", &result);
            result.dag
        }
        BnSearch::RepeatedHillClimb => {
            let result =
                search_repeated_hill_climb(&data, &params.score, params.restarts, cfg.seed)?;
            search_log(&mut log, "repeated_hill_climb", &result);
            result.dag
        }
        BnSearch::Lagd => {
            let result = search_lagd(&data, &params.score, params.look_ahead, params.good_ops)?;
            search_log(&mut log, "lagd", &result);
            result.dag
        }
        BnSearch::Tabu => {
            let result =
                search_tabu(&data, &params.score, params.tabu_length, params.max_steps)?;
            search_log(&mut log, "tabu", &result);
            result.dag
        }
    };

    let model = estimate_cpts(&data, &dag, params.smoothing, prepared.manifest.classes.clone())?;
    Ok((model, log))
}

fn tokenize_docs(data: &Dataset, pipeline: &PipelineConfig) -> Vec<Vec<String>> {
    data.documents()
        .iter()
        .map(|d| tokenize(&normalize_text_opts(&d.text, pipeline.lowercase), pipeline))
        .collect()
}

fn train_hmm(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<(ClassHmmBank, String)> {
    let ModelSpec::Hmm(params) = &cfg.model else { unreachable!() };
    let pipeline = resolve_pipeline(cfg)?;
    let docs = tokenize_docs(&prepared.train_docs, &pipeline);
    let labels: Vec<usize> = prepared
        .train_docs
        .documents()
        .iter()
        .map(|d| prepared.train_docs.label_index(&d.label).expect("label set covers docs"))
        .collect();
    let bank = train_class_hmms(&docs, &labels, prepared.train_docs.labels(), params)?;
    let mut log = String::new();
    for (label, trace) in bank.class_labels().iter().zip(&bank.training_traces) {
        for (i, ll) in trace.iter().enumerate() {
            log.push_str(&format!("class {label} iter {i} loglik {}\n", fmt_g12(*ll)));
        }
    }
    Ok((bank, log))
}

/// Trains the configured model and writes `model.txt` plus `train.log`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let prepared = ensure_prepared(cfg)?;
    let weighting = cfg.pipeline.weighting.as_str().to_string();
    let vocab_hash = prepared.manifest.vocab_hash.clone();

    let (body, log) = match &cfg.model {
        ModelSpec::Nb { smoothing } => {
            let model = train_multinomial_nb(&prepared.train_matrix, *smoothing)?;
            (model.to_bytes(), "nb trained\n".to_string())
        }
        ModelSpec::Logreg(train_cfg) => {
            let model = train_logreg(&prepared.train_matrix, train_cfg)?;
            let mut log = String::new();
            for (epoch, loss) in model.epoch_objectives.iter().enumerate() {
                log.push_str(&format!("epoch {epoch} loss {}\n", fmt_g12(*loss)));
            }
            (model.to_bytes(), log)
        }
        ModelSpec::Svm(train_cfg) => {
            let model = train_linear_svm(&prepared.train_matrix, train_cfg)?;
            let mut log = String::new();
            for (epoch, obj) in model.epoch_objectives.iter().enumerate() {
                log.push_str(&format!("epoch {epoch} objective {}\n", fmt_g12(*obj)));
            }
            (model.to_bytes(), log)
        }
        ModelSpec::BayesNet(_) => {
            let (model, log) = train_bayesnet(cfg, &prepared)?;
            (model.to_bytes(), log)
        }
        ModelSpec::Hmm(_) => {
            let (bank, log) = train_hmm(cfg, &prepared)?;
            (bank.to_bytes(), log)
        }
    };

    let wrapper = ModelFile {
        kind: cfg.model.kind().to_string(),
        vocab_hash: if matches!(cfg.model, ModelSpec::Hmm(_)) { "-".into() } else { vocab_hash },
        weighting: if matches!(cfg.model, ModelSpec::Hmm(_)) { "-".into() } else { weighting },
        body,
    };
    let path = cfg.out.join(MODEL_FILE);
    write_bytes(&path, &wrapper.render())?;
    write_bytes(&cfg.out.join(TRAIN_LOG_FILE), log.as_bytes())?;
    Ok(path)
}

fn predict_matrix(model: &ModelFile, matrix: &FeatureMatrix) -> Result<Vec<u32>> {
    let body = BufReader::new(model.body.as_slice());
    let preds: Vec<u32> = match model.kind.as_str() {
        "nb" => {
            let nb = NaiveBayesModel::read(body)?;
            matrix
                .rows()
                .iter()
                .map(|row| nb.predict(row).map(|(c, _)| c as u32))
                .collect::<std::result::Result<_, _>>()?
        }
        "logreg" | "svm" => {
            let linear = LinearModel::read(body)?;
            matrix
                .rows()
                .iter()
                .map(|row| predict_linear(&linear, row).map(|(c, _)| c as u32))
                .collect::<std::result::Result<_, _>>()?
        }
        "bayesnet" => {
            let bn = BayesNetClassifier::read(body)?;
            matrix
                .rows()
                .iter()
                .map(|row| bn.predict_sparse(row).map(|(c, _)| c as u32))
                .collect::<std::result::Result<_, _>>()?
        }
        other => return Err(CliError::Artifact(format!("cannot evaluate model kind `{other}`"))),
    };
    Ok(preds)
}

/// Evaluates a trained model, writing the text and CSV reports. Returns
/// the averaged metrics for aggregation.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    explicit_model: Option<&Path>,
    external_data: Option<&Path>,
) -> Result<AveragedMetrics> {
    let model = ModelFile::load(&model_path(&cfg.out, explicit_model))?;
    let manifest = Manifest::load(&cfg.out)?;

    let (truths, preds): (Vec<u32>, Vec<u32>) = if model.kind == "hmm" {
        let bank = ClassHmmBank::read(BufReader::new(model.body.as_slice()))?;
        let pipeline = resolve_pipeline(cfg)?;
        let docs = match external_data {
            Some(path) => load_external(cfg, path, &manifest.classes)?,
            None => artifacts::read_documents(&cfg.out.join(TEST_DOCS_FILE), &manifest.classes)?,
        };
        let tokenized = tokenize_docs(&docs, &pipeline);
        let truths: Vec<u32> = docs
            .documents()
            .iter()
            .map(|d| docs.label_index(&d.label).expect("label set covers docs") as u32)
            .collect();
        let preds: Vec<u32> = tokenized
            .iter()
            .map(|tokens| {
                let seq = bank.vocab().encode(tokens);
                classify_sequence(&bank, &seq).map(|(c, _)| c as u32)
            })
            .collect::<std::result::Result<_, _>>()?;
        (truths, preds)
    } else {
        let (vocab, vocab_hash) = load_vocabulary(&cfg.out)?;
        if vocab_hash != model.vocab_hash {
            return Err(CliError::VocabHashMismatch {
                expected: model.vocab_hash.clone(),
                found: vocab_hash,
            });
        }
        let matrix = match external_data {
            Some(path) => {
                let docs = load_external(cfg, path, &manifest.classes)?;
                let mut pipeline = resolve_pipeline(cfg)?;
                pipeline.weighting = Weighting::parse(&model.weighting).ok_or_else(|| {
                    CliError::Artifact(format!("model has unknown weighting `{}`", model.weighting))
                })?;
                vectorize_with_vocab(&docs, &pipeline, &vocab)?
            }
            None => load_matrix(&cfg.out, TEST_MATRIX_FILE, manifest.classes.clone(), vocab)?,
        };
        (matrix.labels().to_vec(), predict_matrix(&model, &matrix)?)
    };

    let cm = ConfusionMatrix::from_indices(&truths, &preds, &manifest.classes)?;
    let metrics = average_metrics(&cm)?;
    let report = format_report(&[NamedResult {
        classifier: cfg.model.display_name(),
        dataset: cfg.dataset.name.clone(),
        metrics,
    }]);
    write_bytes(&cfg.out.join(REPORT_TEXT_FILE), report.text.as_bytes())?;
    write_bytes(&cfg.out.join(REPORT_CSV_FILE), report.csv.as_bytes())?;
    Ok(metrics)
}

/// Loads an external dataset and realigns its label set to the class
/// order the model was trained with.
fn load_external(cfg: &ExperimentConfig, path: &Path, classes: &[String]) -> Result<Dataset> {
    if !path.exists() {
        return Err(CliError::MissingPath(path.to_path_buf()));
    }
    let raw = match &cfg.dataset.format {
        DatasetFormat::Csv { text_column, label_column, delimiter } => corpus::load_csv_with(
            path,
            text_column,
            label_column,
            &corpus::CsvOptions { delimiter: *delimiter },
        )?,
        DatasetFormat::Arff => corpus::load_arff(path)?,
    };
    let documents = raw.documents().to_vec();
    Dataset::with_labels(documents, classes.to_vec()).map_err(CliError::from)
}

/// One benchmark cell result.
pub struct CellOutcome {
    pub classifier: String,
    pub dataset: String,
    pub outcome: std::result::Result<AveragedMetrics, String>,
    pub log_dir: PathBuf,
}

/// Runs each experiment end to end (prepare, train, evaluate) under
/// `out/<config-stem>/`, then aggregates a summary grid, the combined CSV
/// and per-dataset plot data. Individual failures are recorded and the run
/// continues.
pub fn cmd_benchmark(config_paths: &[PathBuf], out: &Path) -> Result<(String, bool)> {
    fs::create_dir_all(out)?;
    let mut configs = Vec::new();
    for path in config_paths {
        let mut cfg = ExperimentConfig::load(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".to_string());
        cfg.out = out.join(&stem);
        configs.push(cfg);
    }

    let cells: Vec<CellOutcome> = configs
        .par_iter()
        .map(|cfg| {
            let outcome = cmd_train(cfg)
                .and_then(|_| cmd_evaluate(cfg, None, None))
                .map_err(|e| e.to_string());
            CellOutcome {
                classifier: cfg.model.display_name(),
                dataset: cfg.dataset.name.clone(),
                outcome,
                log_dir: cfg.out.clone(),
            }
        })
        .collect();

    let results: Vec<NamedResult> = cells
        .iter()
        .filter_map(|c| {
            c.outcome.as_ref().ok().map(|m| NamedResult {
                classifier: c.classifier.clone(),
                dataset: c.dataset.clone(),
                metrics: *m,
            })
        })
        .collect();
    let report = format_report(&results);
    write_bytes(&out.join("results.csv"), report.csv.as_bytes())?;
    write_bytes(&out.join("results.txt"), report.text.as_bytes())?;

    let grid = render_grid(&cells);
    write_bytes(&out.join("benchmark_grid.txt"), grid.as_bytes())?;
    write_plot_data(out, &cells)?;

    let mut any_failed = false;
    for cell in &cells {
        if let Err(message) = &cell.outcome {
            any_failed = true;
            eprintln!(
                "benchmark cell {}/{} failed: {message} (logs in {})",
                cell.classifier,
                cell.dataset,
                cell.log_dir.display()
            );
        }
    }
    Ok((grid, any_failed))
}

/// Weighted-F1 grid (classifier rows, dataset columns) with `85.80` style
/// percentage cells; failed cells render as `ERR`.
fn render_grid(cells: &[CellOutcome]) -> String {
    let mut classifiers: Vec<String> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    for cell in cells {
        if !classifiers.contains(&cell.classifier) {
            classifiers.push(cell.classifier.clone());
        }
        if !datasets.contains(&cell.dataset) {
            datasets.push(cell.dataset.clone());
        }
    }
    let cell_text = |c: &str, d: &str| -> String {
        cells
            .iter()
            .find(|cell| cell.classifier == c && cell.dataset == d)
            .map_or(String::from("-"), |cell| match &cell.outcome {
                Ok(m) => format!("{:.2}", m.weighted.f1 * 100.0),
                Err(_) => "ERR".to_string(),
            })
    };

    let mut widths = vec![
        classifiers.iter().map(String::len).max().unwrap_or(10).max("classifier".len())
    ];
    for d in &datasets {
        let w = classifiers
            .iter()
            .map(|c| cell_text(c, d).len())
            .max()
            .unwrap_or(3)
            .max(d.len());
        widths.push(w);
    }

    let mut s = String::new();
    s.push_str(&format!("{:<width$}", "classifier", width = widths[0]));
    for (i, d) in datasets.iter().enumerate() {
        s.push_str(&format!("  {:>width$}", d, width = widths[i + 1]));
    }
    s.push('\n');
    for c in &classifiers {
        s.push_str(&format!("{:<width$}", c, width = widths[0]));
        for (i, d) in datasets.iter().enumerate() {
            s.push_str(&format!("  {:>width$}", cell_text(c, d), width = widths[i + 1]));
        }
        s.push('\n');
    }
    s
}

/// Per-dataset weighted-metric rows plus a summary file, shaped for bar
/// charts (classifier vs metric).
fn write_plot_data(out: &Path, cells: &[CellOutcome]) -> Result<()> {
    let plot_dir = out.join("plot_data");
    fs::create_dir_all(&plot_dir)?;
    let mut datasets: Vec<String> = Vec::new();
    for cell in cells {
        if !datasets.contains(&cell.dataset) {
            datasets.push(cell.dataset.clone());
        }
    }
    for dataset in &datasets {
        let mut csv = String::from("classifier,precision,recall,f1\n");
        for cell in cells.iter().filter(|c| &c.dataset == dataset) {
            if let Ok(m) = &cell.outcome {
                csv.push_str(&format!(
                    "{},{:.4},{:.4},{:.4}\n",
                    cell.classifier, m.weighted.precision, m.weighted.recall, m.weighted.f1
                ));
            }
        }
        write_bytes(&plot_dir.join(format!("{dataset}.csv")), csv.as_bytes())?;
    }
    let mut summary = String::from("classifier,dataset,weighted_f1_percent\n");
    for cell in cells {
        if let Ok(m) = &cell.outcome {
            summary.push_str(&format!(
                "{},{},{:.2}\n",
                cell.classifier,
                cell.dataset,
                m.weighted.f1 * 100.0
            ));
        }
    }
    write_bytes(&plot_dir.join("summary.csv"), summary.as_bytes())?;
    Ok(())
}

/// Re-renders a results CSV (as written by evaluate/benchmark) as an
/// aligned text table.
pub fn cmd_report(results_csv: &Path, format: &str) -> Result<String> {
    if !results_csv.exists() {
        return Err(CliError::MissingPath(results_csv.to_path_buf()));
    }
    let text = fs::read_to_string(results_csv)?;
    if format == "csv" {
        return Ok(text);
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record.map_err(corpus::CorpusError::from)?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Ok(String::new());
    }
    let cols = rows[0].len();
    let mut widths = vec![0usize; cols];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut s = String::new();
    for (ri, row) in rows.iter().enumerate() {
        for (i, cell) in row.iter().enumerate() {
            s.push_str(&format!("{:<width$}  ", cell, width = widths[i]));
        }
        s.push('\n');
        if ri == 0 {
            for width in &widths {
                s.push_str(&format!("{}  ", "-".repeat(*width)));
            }
            s.push('\n');
        }
    }
    Ok(s)
}
