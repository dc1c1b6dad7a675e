//! The per-epoch generate, score, select, train loop, and the analyses run
//! on its outputs.

mod analysis;
mod report;

pub use analysis::{
    build_natural_robustness_set, correlation_study, mean_max_probability, RobustnessSet, Stage, StudyConfig,
    StudyResult,
};
pub use report::{write_curves_csv, write_pca_csv};

use crate::ir::{ParsedProgram, Program};
use crate::scorer::{
    argmax, embed, featurize_source, loss_of, score_batch, train_step, ExternalScorer, FeatureVector, Hyper,
    ModelState, ScoreRequest, ScorerBackend, ScorerError,
};
use crate::selection::{
    build_search_space, provenance, select_indices, Candidate, Operator, ProvenanceRecord, SelectionConfig,
    SelectionError, SpaceConfig, Strategy,
};
use crate::stats::{interclass_distance, mean_std, pca_project, StatsError};
use crate::text::TextOpConfig;
use crate::util::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("program {id} does not parse: {message}")]
    InvalidProgram { id: String, message: String },
    #[error("program id {0} appears in both train and test")]
    OverlappingIds(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("no test program was classified correctly")]
    NoCorrectPredictions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScorerChoice {
    BuiltIn,
    /// One child process per repetition, speaking the line protocol.
    External {
        program: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default = "default_window")]
        window: usize,
    },
}

fn default_window() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub early_stop_patience: usize,
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    pub strategy: Strategy,
    /// Samples trained on per epoch; `None` means |train|.
    pub k: Option<usize>,
    pub include_originals: bool,
    pub operators: Vec<Operator>,
    pub batch_size: usize,
    pub dim: usize,
    pub hyper: Hyper,
    pub text: TextOpConfig,
    pub scorer: ScorerChoice,
    /// When positive, this fraction of train is held out and monitored for
    /// early stopping instead of the test set.
    pub holdout_fraction: f64,
    /// Evaluate the final model on a refactored copy of the test set.
    pub robustness_seed: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            early_stop_patience: 20,
            repetitions: 5,
            seeds: vec![0, 1, 2, 3, 4],
            strategy: Strategy::MaxLoss,
            k: None,
            include_originals: true,
            operators: Operator::all(),
            batch_size: 32,
            dim: 1 << 12,
            hyper: Hyper::default(),
            text: TextOpConfig::default(),
            scorer: ScorerChoice::BuiltIn,
            holdout_fraction: 0.0,
            robustness_seed: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.seeds.len() != self.repetitions {
            return bad(format!("{} seeds for {} repetitions", self.seeds.len(), self.repetitions));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if !self.dim.is_power_of_two() {
            return bad(format!("dim {} is not a power of two", self.dim));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad(format!("holdout_fraction {} outside [0, 1)", self.holdout_fraction));
        }
        if self.operators.is_empty() && !self.include_originals {
            return bad("no operators and no originals leaves nothing to train on".into());
        }
        self.text.validate().map_err(|e| ExperimentError::InvalidConfig(e.to_string()))
    }

    /// Seeds `0..n`.
    pub fn with_repetitions(mut self, n: usize) -> Self {
        self.repetitions = n;
        self.seeds = (0..n as u64).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy of the selected samples, each taken just before
    /// its minibatch step.
    pub train_loss: f64,
    pub test_accuracy: f64,
    /// Accuracy on the held-out split, when one is configured.
    pub monitor_accuracy: f64,
    pub pool_size: usize,
    pub skipped: usize,
    pub selected: usize,
    pub selected_operators: BTreeMap<String, usize>,
    /// Not serialized, so reports stay byte-identical across reruns.
    #[serde(skip)]
    pub wall_clock: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub x: f64,
    pub y: f64,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Test accuracy of the restored best model.
    pub accuracy: f64,
    pub robust_accuracy: Option<f64>,
    pub robustness_unchanged: Option<usize>,
    /// Mean max probability over correctly classified test programs.
    pub confidence: Option<f64>,
    pub interclass_distance: Option<f64>,
    pub pca: Vec<PcaPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        Summary { values, mean, std }
    }

    fn of_present(values: impl Iterator<Item = Option<f64>>) -> Option<Self> {
        let v: Option<Vec<f64>> = values.collect();
        v.filter(|v| !v.is_empty()).map(Summary::of)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunReport>,
    pub accuracy: Summary,
    pub robust_accuracy: Option<Summary>,
    pub confidence: Option<Summary>,
    pub interclass_distance: Option<Summary>,
}

/// Receives the per-epoch provenance of every candidate.
pub trait Observer: Sync {
    fn on_epoch(&self, seed: u64, records: &[ProvenanceRecord]);
}

pub struct NoObserver;

impl Observer for NoObserver {
    fn on_epoch(&self, _seed: u64, _records: &[ProvenanceRecord]) {}
}

/// Parsed train and test programs sharing one class universe.
pub(crate) struct Dataset {
    pub train: Vec<ParsedProgram>,
    pub test: Vec<ParsedProgram>,
    pub classes: usize,
}

pub(crate) fn prepare(train: &[Program], test: &[Program]) -> Result<Dataset, ExperimentError> {
    if train.is_empty() {
        return Err(ExperimentError::EmptyDataset("train"));
    }
    if test.is_empty() {
        return Err(ExperimentError::EmptyDataset("test"));
    }
    let train_ids: BTreeSet<&str> = train.iter().map(|p| p.id.as_str()).collect();
    if let Some(p) = test.iter().find(|p| train_ids.contains(p.id.as_str())) {
        return Err(ExperimentError::OverlappingIds(p.id.clone()));
    }
    let parse = |ps: &[Program]| -> Result<Vec<ParsedProgram>, ExperimentError> {
        ps.iter()
            .map(|p| {
                ParsedProgram::new(p.clone())
                    .map_err(|e| ExperimentError::InvalidProgram { id: p.id.clone(), message: e.to_string() })
            })
            .collect()
    };
    let classes = train.iter().chain(test).map(|p| p.label).max().unwrap_or(0) + 1;
    Ok(Dataset { train: parse(train)?, test: parse(test)?, classes: classes.max(2) })
}

pub(crate) fn featurize_all(programs: &[Program], dim: usize) -> Vec<(FeatureVector, usize)> {
    programs.par_iter().map(|p| (featurize_source(&p.content, p.lang, dim), p.label)).collect()
}

pub(crate) fn accuracy(model: &ModelState, data: &[(FeatureVector, usize)]) -> Result<f64, ScorerError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, y) in data {
        if argmax(&embed(model, x)?) == *y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// One shuffled pass over `data` in minibatches. Returns the mean
/// per-sample loss observed before each step.
pub(crate) fn train_epoch(
    model: &mut ModelState,
    data: &[(FeatureVector, usize)],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, ScorerError> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for chunk in order.chunks(batch_size) {
        let batch: Vec<(&FeatureVector, usize)> = chunk.iter().map(|&i| (&data[i].0, data[i].1)).collect();
        for (x, y) in &batch {
            total += loss_of(model, x, *y)?.loss;
        }
        train_step(model, &batch)?;
    }
    Ok(if data.is_empty() { 0.0 } else { total / data.len() as f64 })
}

pub(crate) fn new_backend(choice: &ScorerChoice) -> Result<ScorerBackend, ScorerError> {
    Ok(match choice {
        ScorerChoice::BuiltIn => ScorerBackend::BuiltIn,
        ScorerChoice::External { program, args, window } => {
            ScorerBackend::External(ExternalScorer::spawn(program, args, *window)?)
        }
    })
}

pub(crate) fn score_candidates(
    backend: &mut ScorerBackend,
    model: &ModelState,
    cands: &mut [Candidate],
) -> Result<(), ScorerError> {
    let requests: Vec<ScoreRequest> = cands
        .iter()
        .map(|c| ScoreRequest { id: c.id.clone(), text: c.content.clone(), lang: c.lang, label: c.label })
        .collect();
    let scored = score_batch(backend, model, &requests)?;
    for (c, s) in cands.iter_mut().zip(scored) {
        c.loss = Some(s.loss);
    }
    Ok(())
}

fn split_holdout(train: &[ParsedProgram], fraction: f64, seed: u64) -> (Vec<ParsedProgram>, Vec<ParsedProgram>) {
    if fraction <= 0.0 {
        return (train.to_vec(), Vec::new());
    }
    let mut idx: Vec<usize> = (0..train.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &["holdout"])));
    let held = ((train.len() as f64 * fraction).round() as usize).clamp(1, train.len().saturating_sub(1).max(1));
    let mut held_idx: Vec<usize> = idx[..held].to_vec();
    held_idx.sort_unstable();
    let keep: Vec<ParsedProgram> =
        (0..train.len()).filter(|i| held_idx.binary_search(i).is_err()).map(|i| train[i].clone()).collect();
    (keep, held_idx.into_iter().map(|i| train[i].clone()).collect())
}

struct RunOutput {
    report: RunReport,
    model: ModelState,
}

fn run_once(
    data: &Dataset,
    cfg: &TrainConfig,
    operators: &[Operator],
    seed: u64,
    observer: &dyn Observer,
) -> Result<RunOutput, ExperimentError> {
    let (train, held_out) = split_holdout(&data.train, cfg.holdout_fraction, seed);
    let hyper = Hyper { seed: derive_seed(seed, &["init"]), ..cfg.hyper.clone() };
    let mut model = ModelState::new(data.classes, cfg.dim, hyper)?;
    let mut backend = new_backend(&cfg.scorer)?;
    let test_programs: Vec<Program> = data.test.iter().map(|p| p.program.clone()).collect();
    let test_x = featurize_all(&test_programs, cfg.dim);
    let held_x = featurize_all(&held_out.iter().map(|p| p.program.clone()).collect::<Vec<_>>(), cfg.dim);
    let k = cfg.k.unwrap_or(train.len());
    let space_cfg = |epoch| SpaceConfig { seed, epoch, include_originals: cfg.include_originals, text: cfg.text.clone() };

    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, ModelState)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut space = build_search_space(&train, operators, &space_cfg(epoch));
        if space.candidates.is_empty() {
            return Err(ExperimentError::EmptyDataset("search space"));
        }
        if cfg.strategy != Strategy::Random {
            score_candidates(&mut backend, &model, &mut space.candidates)?;
        }
        let sel = SelectionConfig {
            strategy: cfg.strategy,
            k,
            seed: derive_seed(seed, &[&epoch.to_string(), "select"]),
            include_originals: cfg.include_originals,
        };
        let losses: Vec<Option<f64>> = space.candidates.iter().map(|c| c.loss).collect();
        let mut picked = select_indices(&losses, &sel)?;
        observer.on_epoch(seed, &provenance(epoch, &space.candidates, &picked));
        // Training order must not depend on how the strategy ranked things.
        picked.sort_unstable();
        let mut histogram = BTreeMap::new();
        for &i in &picked {
            *histogram.entry(space.candidates[i].operator.slug().to_string()).or_insert(0) += 1;
        }
        let chosen: Vec<Program> = picked
            .iter()
            .map(|&i| {
                let c = &space.candidates[i];
                Program { id: c.id.clone(), lang: c.lang, content: c.content.clone(), label: c.label, io_pairs: vec![] }
            })
            .collect();
        let xs = featurize_all(&chosen, cfg.dim);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[&epoch.to_string(), "shuffle"]));
        let train_loss = train_epoch(&mut model, &xs, cfg.batch_size, &mut rng)?;
        let test_accuracy = accuracy(&model, &test_x)?;
        let monitor_accuracy = if held_x.is_empty() { test_accuracy } else { accuracy(&model, &held_x)? };
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            test_accuracy,
            monitor_accuracy,
            pool_size: space.candidates.len(),
            skipped: space.skips.len(),
            selected: picked.len(),
            selected_operators: histogram,
            wall_clock: started.elapsed(),
        });
        if best.as_ref().is_none_or(|(acc, _, _)| monitor_accuracy > *acc) {
            best = Some((monitor_accuracy, epoch, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                stopped_early = true;
                break;
            }
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    let eval = evaluate(&model, &test_programs, cfg.robustness_seed)?;
    Ok(RunOutput {
        report: RunReport {
            seed,
            epochs,
            best_epoch,
            stopped_early,
            accuracy: eval.accuracy,
            robust_accuracy: eval.robust_accuracy,
            robustness_unchanged: eval.robustness_unchanged,
            confidence: eval.confidence,
            interclass_distance: eval.interclass_distance,
            pca: eval.pca,
        },
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub robust_accuracy: Option<f64>,
    pub robustness_unchanged: Option<usize>,
    pub confidence: Option<f64>,
    pub interclass_distance: Option<f64>,
    /// Test embeddings (logits) projected on their top two principal axes.
    pub pca: Vec<PcaPoint>,
}

/// Accuracy, natural robustness, confidence and class separation of a
/// trained model on `test`.
pub fn evaluate(model: &ModelState, test: &[Program], robustness_seed: Option<u64>) -> Result<Evaluation, ExperimentError> {
    if test.is_empty() {
        return Err(ExperimentError::EmptyDataset("test"));
    }
    let test_x = featurize_all(test, model.dim);
    let (robust_accuracy, robustness_unchanged) = match robustness_seed {
        Some(rs) => {
            let set = build_natural_robustness_set(test, rs)?;
            let xs = featurize_all(&set.programs, model.dim);
            (Some(accuracy(model, &xs)?), Some(set.unchanged.len()))
        }
        None => (None, None),
    };
    let confidence = match mean_max_probability(model, test) {
        Ok(v) => Some(v),
        Err(ExperimentError::NoCorrectPredictions) => None,
        Err(e) => return Err(e),
    };
    let embeddings: Vec<Vec<f64>> = test_x.iter().map(|(x, _)| embed(model, x)).collect::<Result<_, _>>()?;
    let (pca, interclass_distance) = match pca_project(&embeddings, 2) {
        Ok(p) => {
            let labelled: Vec<(Vec<f64>, usize)> = p.points.iter().cloned().zip(test_x.iter().map(|t| t.1)).collect();
            let distance = interclass_distance(&labelled).ok();
            let points = labelled.into_iter().map(|(v, class)| PcaPoint { x: v[0], y: v[1], class }).collect();
            (points, distance)
        }
        // A model that maps every program to the same logits has no axes.
        Err(_) => (Vec::new(), None),
    };
    Ok(Evaluation { accuracy: accuracy(model, &test_x)?, robust_accuracy, robustness_unchanged, confidence, interclass_distance, pca })
}

fn run_all(
    train: &[Program],
    test: &[Program],
    cfg: &TrainConfig,
    operators: &[Operator],
    observer: &dyn Observer,
) -> Result<(ExperimentReport, Vec<ModelState>), ExperimentError> {
    cfg.validate()?;
    let data = prepare(train, test)?;
    let outputs: Vec<RunOutput> =
        cfg.seeds.par_iter().map(|&s| run_once(&data, cfg, operators, s, observer)).collect::<Result<_, _>>()?;
    let runs: Vec<RunReport> = outputs.iter().map(|o| o.report.clone()).collect();
    let report = ExperimentReport {
        accuracy: Summary::of(runs.iter().map(|r| r.accuracy).collect()),
        robust_accuracy: Summary::of_present(runs.iter().map(|r| r.robust_accuracy)),
        confidence: Summary::of_present(runs.iter().map(|r| r.confidence)),
        interclass_distance: Summary::of_present(runs.iter().map(|r| r.interclass_distance)),
        runs,
    };
    Ok((report, outputs.into_iter().map(|o| o.model).collect()))
}

/// GenCode: every epoch rebuilds the search space from all configured
/// operators, scores it with the current model, keeps the top K and
/// trains one pass over them. Returns the report and the best model of
/// each repetition.
pub fn run_gencode_with_models(
    train: &[Program],
    test: &[Program],
    cfg: &TrainConfig,
    observer: &dyn Observer,
) -> Result<(ExperimentReport, Vec<ModelState>), ExperimentError> {
    run_all(train, test, cfg, &cfg.operators, observer)
}

pub fn run_gencode(train: &[Program], test: &[Program], cfg: &TrainConfig) -> Result<ExperimentReport, ExperimentError> {
    Ok(run_gencode_with_models(train, test, cfg, &NoObserver)?.0)
}

/// The same loop with the originals as the whole search space.
pub fn run_no_aug_with_models(
    train: &[Program],
    test: &[Program],
    cfg: &TrainConfig,
    observer: &dyn Observer,
) -> Result<(ExperimentReport, Vec<ModelState>), ExperimentError> {
    let cfg = TrainConfig { include_originals: true, ..cfg.clone() };
    run_all(train, test, &cfg, &[], observer)
}

pub fn run_no_aug(train: &[Program], test: &[Program], cfg: &TrainConfig) -> Result<ExperimentReport, ExperimentError> {
    Ok(run_no_aug_with_models(train, test, cfg, &NoObserver)?.0)
}

pub fn evaluate_accuracy(model: &ModelState, programs: &[Program]) -> Result<f64, ExperimentError> {
    Ok(accuracy(model, &featurize_all(programs, model.dim))?)
}
