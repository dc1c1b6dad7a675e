use gencode_cli::checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
use gencode_cli::dataset::{parse_dataset, DatasetError};
use gencode_cli::{
    execute, replay, AugmentCommand, CliError, CommandConfig, GenCorpusCommand, Method, RunConfig, TrainCommand,
    MANIFEST_FILE, TIMINGS_FILE,
};
use gencode_core::corpus::CorpusConfig;
use gencode_core::experiments::TrainConfig;
use gencode_core::scorer::{Hyper, ModelState, Optimizer};
use gencode_core::selection::Operator;
use gencode_core::text::TextOpConfig;
use std::path::Path;
use std::process::Command;

const THREE: &str = r#"{"id":"a","lang":"java-lite","code":"int f(int x) { return x; }","label":0}
{"id":"b","lang":"py-lite","code":"def f(x):\n    return x\n","label":1}

{"id":"c","lang":"java-lite","code":"int g(int x) { return x + 1; }","label":1,"io_pairs":[]}
"#;

#[test]
fn ingest_three_lines() {
    let programs = parse_dataset(THREE).unwrap();
    assert_eq!(programs.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
}

#[test]
fn ingest_errors() {
    let missing = "{\"id\":\"a\",\"lang\":\"java-lite\",\"code\":\"int f() { return 1; }\",\"label\":0}\n\
                   {\"id\":\"b\",\"lang\":\"java-lite\",\"code\":\"int f() { return 1; }\"}\n";
    assert!(matches!(parse_dataset(missing), Err(DatasetError::MalformedLine { line: 2, .. })));
    let sparse = THREE.replace("\"label\":1", "\"label\":2");
    match parse_dataset(&sparse) {
        Err(DatasetError::SparseLabels { classes: 3, missing }) => assert_eq!(missing, vec![1]),
        other => panic!("{other:?}"),
    }
    let dup = THREE.replace("\"id\":\"c\"", "\"id\":\"a\"");
    assert!(matches!(parse_dataset(&dup), Err(DatasetError::DuplicateId { line: 4, .. })));
}

#[test]
fn checkpoint_round_trip() {
    let hyper = Hyper { learning_rate: 0.25, l2: 0.5, seed: 9, optimizer: Optimizer::Sgd, init_scale: 0.1 };
    let mut model = ModelState::new(3, 16, hyper).unwrap();
    model.step_count = 41;
    model.weights[5] = -0.0;
    model.weights[6] = f64::MIN_POSITIVE;
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model).unwrap();
    assert_eq!(&buf[..4], b"GCF1");
    assert_eq!(buf.len(), 4 + 2 + 4 + 4 + 8 + 8 + 8 + 8 + 1 + 8 + 3 * 16 * 8);
    let back = read_checkpoint(buf.as_slice()).unwrap();
    assert_eq!(back.hyper, model.hyper);
    assert_eq!((back.classes, back.dim, back.step_count), (3, 16, 41));
    let bits = |m: &ModelState| m.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&model));

    let mut other = buf.clone();
    other[4] = 2;
    assert!(matches!(read_checkpoint(other.as_slice()), Err(CheckpointError::Version(2))));
    let mut magic = buf.clone();
    magic[0] = b'X';
    assert!(matches!(read_checkpoint(magic.as_slice()), Err(CheckpointError::BadMagic)));
    assert!(matches!(read_checkpoint(&buf[..buf.len() - 3]), Err(CheckpointError::Corrupt(_))));
}

fn gen_corpus(dir: &Path, classes: usize, train: usize, test: usize) {
    let cfg = RunConfig {
        seed: 5,
        output_dir: dir.to_path_buf(),
        bt_endpoint: None,
        command: CommandConfig::GenCorpus(GenCorpusCommand {
            corpus: CorpusConfig { classes, train_per_class: train, test_per_class: test, ..CorpusConfig::default() },
        }),
    };
    execute(&cfg).unwrap();
}

#[test]
fn augment_bound() {
    let tmp = tempfile::tempdir().unwrap();
    gen_corpus(&tmp.path().join("data"), 10, 1, 1);
    let cfg = RunConfig {
        seed: 1,
        output_dir: tmp.path().join("aug"),
        bt_endpoint: None,
        command: CommandConfig::Augment(AugmentCommand {
            dataset: tmp.path().join("data/train.jsonl"),
            operators: Operator::all(),
            include_originals: false,
            epoch: 0,
            text: TextOpConfig::default(),
        }),
    };
    let m = execute(&cfg).unwrap();
    let read = |n: &str| std::fs::read_to_string(tmp.path().join("aug").join(n)).unwrap();
    let cands = read("candidates.jsonl").lines().count();
    let skips = read("skips.jsonl").lines().count();
    assert!(cands <= 230 && cands > 0);
    assert_eq!(cands + skips, 230);
    assert_eq!(m.artifacts.keys().collect::<Vec<_>>(), ["candidates.jsonl", "skips.jsonl"]);
}

#[test]
fn manifest_replays_identically() {
    let tmp = tempfile::tempdir().unwrap();
    gen_corpus(&tmp.path().join("data"), 3, 4, 2);
    let cfg = RunConfig {
        seed: 2,
        output_dir: tmp.path().join("run"),
        bt_endpoint: None,
        command: CommandConfig::Train(TrainCommand {
            train: tmp.path().join("data/train.jsonl"),
            test: tmp.path().join("data/test.jsonl"),
            method: Method::Gencode,
            config: TrainConfig {
                epochs: 2,
                dim: 1 << 10,
                robustness_seed: Some(3),
                ..TrainConfig::default().with_repetitions(2)
            },
            provenance: true,
        }),
    };
    let first = execute(&cfg).unwrap();
    assert!(tmp.path().join("run").join(TIMINGS_FILE).exists());
    assert!(!first.artifacts.contains_key(TIMINGS_FILE));
    for name in ["report.json", "model.gcf", "pca.csv", "provenance.jsonl", "curves/seed-0.csv", "curves/seed-1.csv"] {
        assert!(first.artifacts.contains_key(name), "{name}");
    }
    let second = replay(&tmp.path().join("run").join(MANIFEST_FILE), Some(&tmp.path().join("again"))).unwrap();
    assert_eq!(first.artifacts, second.artifacts);
    for name in first.artifacts.keys() {
        let a = std::fs::read(tmp.path().join("run").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("again").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn run_config_rejects_unknown_keys() {
    let json = r#"{"seed":0,"output_dir":"x","command":{"gen-corpus":{"corpus":{}}},"extra":1}"#;
    assert!(serde_json::from_str::<RunConfig>(json).is_err());
    let json = r#"{"seed":0,"output_dir":"x","command":{"gen-corpus":{"corpus":{"classes":3,"colour":1}}}}"#;
    assert!(serde_json::from_str::<RunConfig>(json).is_err());
    let ok = r#"{"seed":0,"output_dir":"x","command":{"gen-corpus":{"corpus":{"classes":3}}}}"#;
    let cfg: RunConfig = serde_json::from_str(ok).unwrap();
    assert!(cfg.resolved().unwrap().output_dir.is_absolute());
}

#[test]
fn error_families_map_to_exit_codes() {
    assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
    assert_eq!(CliError::Data(String::new()).exit_code(), 3);
    assert_eq!(CliError::Scorer(String::new()).exit_code(), 4);

    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_gencode");
    let code = |args: &[&str]| Command::new(bin).args(args).current_dir(tmp.path()).output().unwrap().status.code();
    let corpus = ["gen-corpus", "--out", "d", "--classes", "3", "--train-per-class", "2", "--test-per-class", "1"];
    assert_eq!(code(&corpus), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(2));
    let train = ["train", "--out", "t", "--train", "d/train.jsonl", "--test", "d/test.jsonl"];
    assert_eq!(code(&[&train[..], &["--epochs", "0"]].concat()), Some(2));
    assert_eq!(code(&["train", "--out", "t", "--train", "missing.jsonl", "--test", "d/test.jsonl"]), Some(3));
    assert_eq!(code(&["gen-corpus", "--out", "d2", "--classes", "1"]), Some(3));
    let external = r#"{"epochs": 1, "repetitions": 1, "seeds": [0],
        "scorer": {"kind": "external", "program": "/nonexistent/scorer", "args": []}}"#;
    std::fs::write(tmp.path().join("cfg.json"), external).unwrap();
    assert_eq!(code(&[&train[..], &["--config", "cfg.json"]].concat()), Some(4));
}
