use crate::checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
use crate::dataset::{ingest_dataset, write_dataset, DatasetError};
use gencode_core::corpus::{generate_corpus, CorpusConfig, CorpusError};
use gencode_core::experiments::{
    correlation_study, evaluate, run_gencode_with_models, run_no_aug_with_models, write_curves_csv, write_pca_csv,
    ExperimentError, ExperimentReport, Observer, Stage, StudyConfig, TrainConfig,
};
use gencode_core::ir::ParsedProgram;
use gencode_core::scorer::ScorerError;
use gencode_core::selection::{build_search_space, write_jsonl, Operator, ProvenanceRecord, SpaceConfig};
use gencode_core::stats::{mean_std, wilcoxon_signed_rank, SignedRank};
use gencode_core::text::TextOpConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock measurements; written next to the artifacts but not hashed.
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Scorer(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Scorer(_) => 4,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ScorerError> for CliError {
    fn from(e: ScorerError) -> Self {
        match e {
            ScorerError::ScorerUnavailable(_) | ScorerError::ProtocolViolation(_) => CliError::Scorer(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            ExperimentError::Scorer(s) => s.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gencode,
    NoAug,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenCorpusCommand {
    #[serde(default)]
    pub corpus: CorpusConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentCommand {
    pub dataset: PathBuf,
    #[serde(default = "Operator::all")]
    pub operators: Vec<Operator>,
    #[serde(default)]
    pub include_originals: bool,
    #[serde(default)]
    pub epoch: usize,
    #[serde(default)]
    pub text: TextOpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCommand {
    pub train: PathBuf,
    pub test: PathBuf,
    pub method: Method,
    #[serde(default)]
    pub config: TrainConfig,
    /// Write every candidate's loss and selection flag per epoch.
    #[serde(default)]
    pub provenance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCommand {
    pub checkpoint: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub robustness_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyCommand {
    pub train: PathBuf,
    pub test: PathBuf,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub config: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsCommand {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandConfig {
    GenCorpus(GenCorpusCommand),
    Augment(AugmentCommand),
    Train(TrainCommand),
    Eval(EvalCommand),
    Study(StudyCommand),
    Stats(StatsCommand),
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub bt_endpoint: Option<String>,
    pub command: CommandConfig,
}

impl RunConfig {
    /// Absolute paths, the back-translation endpoint pushed into every
    /// text-op config, and the global seed into every sub-config.
    pub fn resolved(&self) -> Result<RunConfig, CliError> {
        let abs = |p: &Path| std::path::absolute(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())));
        let mut cfg = self.clone();
        cfg.output_dir = abs(&self.output_dir)?;
        let endpoint = self.bt_endpoint.clone();
        let set_bt = |t: &mut TextOpConfig| {
            if endpoint.is_some() {
                t.bt_endpoint = endpoint.clone();
            }
        };
        match &mut cfg.command {
            CommandConfig::GenCorpus(c) => c.corpus.seed = self.seed,
            CommandConfig::Augment(c) => {
                c.dataset = abs(&c.dataset)?;
                set_bt(&mut c.text);
            }
            CommandConfig::Train(c) => {
                c.train = abs(&c.train)?;
                c.test = abs(&c.test)?;
                set_bt(&mut c.config.text);
            }
            CommandConfig::Eval(c) => {
                c.checkpoint = abs(&c.checkpoint)?;
                c.test = abs(&c.test)?;
            }
            CommandConfig::Study(c) => {
                c.train = abs(&c.train)?;
                c.test = abs(&c.test)?;
                c.config.seed = self.seed;
                set_bt(&mut c.config.train.text);
            }
            CommandConfig::Stats(c) => {
                c.a = abs(&c.a)?;
                c.b = abs(&c.b)?;
            }
        }
        Ok(cfg)
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: RunConfig,
    /// Relative path to sha256 of every artifact.
    pub artifacts: BTreeMap<String, String>,
}

struct Artifacts {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Artifacts {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.hashes.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    fn put_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.put(name, &bytes)
    }
}

fn parsed(programs: Vec<gencode_core::ir::Program>) -> Result<Vec<ParsedProgram>, CliError> {
    programs
        .into_iter()
        .map(|p| {
            let id = p.id.clone();
            ParsedProgram::new(p).map_err(|e| CliError::Data(format!("program {id}: {e}")))
        })
        .collect()
}

/// Provenance rows buffered per (seed, epoch) so the file does not depend
/// on thread scheduling.
struct ProvenanceSink(Mutex<BTreeMap<(u64, usize), Vec<ProvenanceRecord>>>);

impl Observer for ProvenanceSink {
    fn on_epoch(&self, seed: u64, records: &[ProvenanceRecord]) {
        let epoch = records.first().map_or(0, |r| r.epoch);
        self.0.lock().expect("not poisoned").insert((seed, epoch), records.to_vec());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    Test { mean_a: f64, mean_b: f64, result: SignedRank },
    Unavailable { reason: String },
}

fn compare(a: &[f64], b: &[f64]) -> Comparison {
    match wilcoxon_signed_rank(a, b) {
        Ok(result) => Comparison::Test { mean_a: mean_std(a).0, mean_b: mean_std(b).0, result },
        Err(e) => Comparison::Unavailable { reason: e.to_string() },
    }
}

fn read_report(path: &Path) -> Result<ExperimentReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn run(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    match &cfg.command {
        CommandConfig::GenCorpus(c) => {
            let corpus = generate_corpus(&c.corpus)?;
            let mut buf = Vec::new();
            write_dataset(&mut buf, &corpus.train)?;
            out.put("train.jsonl", &buf)?;
            let mut buf = Vec::new();
            write_dataset(&mut buf, &corpus.test)?;
            out.put("test.jsonl", &buf)?;
        }
        CommandConfig::Augment(c) => {
            c.text.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let programs = parsed(ingest_dataset(&c.dataset)?)?;
            let space_cfg =
                SpaceConfig { seed: cfg.seed, epoch: c.epoch, include_originals: c.include_originals, text: c.text.clone() };
            let space = build_search_space(&programs, &c.operators, &space_cfg);
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &space.candidates)?;
            out.put("candidates.jsonl", &buf)?;
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &space.skips)?;
            out.put("skips.jsonl", &buf)?;
        }
        CommandConfig::Train(c) => {
            let train = ingest_dataset(&c.train)?;
            let test = ingest_dataset(&c.test)?;
            let sink = ProvenanceSink(Mutex::new(BTreeMap::new()));
            let (report, models) = match c.method {
                Method::Gencode => run_gencode_with_models(&train, &test, &c.config, &sink)?,
                Method::NoAug => run_no_aug_with_models(&train, &test, &c.config, &sink)?,
            };
            out.put_json("report.json", &report)?;
            for run in &report.runs {
                let mut buf = Vec::new();
                write_curves_csv(&mut buf, run)?;
                out.put(&format!("curves/seed-{}.csv", run.seed), &buf)?;
            }
            let mut buf = Vec::new();
            write_pca_csv(&mut buf, &report.runs[0].pca)?;
            out.put("pca.csv", &buf)?;
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &models[0])?;
            out.put("model.gcf", &buf)?;
            if c.provenance {
                let rows: Vec<ProvenanceRecord> =
                    sink.0.into_inner().expect("not poisoned").into_values().flatten().collect();
                let mut buf = Vec::new();
                write_jsonl(&mut buf, &rows)?;
                out.put("provenance.jsonl", &buf)?;
            }
            let timings: BTreeMap<String, Vec<f64>> = report
                .runs
                .iter()
                .map(|r| (r.seed.to_string(), r.epochs.iter().map(|e| e.wall_clock.as_secs_f64()).collect()))
                .collect();
            fs::write(out.dir.join(TIMINGS_FILE), serde_json::to_vec_pretty(&timings).expect("serializable"))?;
        }
        CommandConfig::Eval(c) => {
            let model = read_checkpoint(fs::File::open(&c.checkpoint).map_err(|e| {
                CliError::Data(format!("{}: {e}", c.checkpoint.display()))
            })?)?;
            let test = ingest_dataset(&c.test)?;
            let eval = evaluate(&model, &test, c.robustness_seed)?;
            out.put_json("eval.json", &eval)?;
            let mut buf = Vec::new();
            write_pca_csv(&mut buf, &eval.pca)?;
            out.put("pca.csv", &buf)?;
        }
        CommandConfig::Study(c) => {
            let train = ingest_dataset(&c.train)?;
            let test = ingest_dataset(&c.test)?;
            let mut results = Vec::new();
            for &stage in &c.stages {
                let r = correlation_study(&train, &test, stage, &c.config)?;
                let mut csv = String::from("mean_loss,accuracy\n");
                for (l, a) in &r.points {
                    csv.push_str(&format!("{l},{a}\n"));
                }
                let name = serde_json::to_value(stage).expect("serializable");
                out.put(&format!("points-{}.csv", name.as_str().expect("string")), csv.as_bytes())?;
                results.push(r);
            }
            out.put_json("study.json", &results)?;
        }
        CommandConfig::Stats(c) => {
            let (a, b) = (read_report(&c.a)?, read_report(&c.b)?);
            let mut stats = BTreeMap::new();
            stats.insert("accuracy", compare(&a.accuracy.values, &b.accuracy.values));
            if let (Some(ra), Some(rb)) = (&a.robust_accuracy, &b.robust_accuracy) {
                stats.insert("robust_accuracy", compare(&ra.values, &rb.values));
            }
            out.put_json("stats.json", &stats)?;
        }
    }
    Ok(())
}

/// Run one configuration and write its artifacts and manifest.
pub fn execute(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let cfg = cfg.resolved()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Artifacts { dir: cfg.output_dir.clone(), hashes: BTreeMap::new() };
    run(&cfg, &mut out)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config_sha256: cfg.sha256(),
        config: cfg.clone(),
        artifacts: out.hashes,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    fs::write(cfg.output_dir.join(MANIFEST_FILE), bytes)?;
    Ok(manifest)
}

/// Re-run the configuration recorded in a manifest, optionally into a
/// different directory.
pub fn replay(manifest: &Path, output_dir: Option<&Path>) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(manifest).map_err(|e| CliError::Data(format!("{}: {e}", manifest.display())))?;
    let recorded: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", manifest.display())))?;
    let mut cfg = recorded.config;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir.to_path_buf();
    }
    execute(&cfg)
}
