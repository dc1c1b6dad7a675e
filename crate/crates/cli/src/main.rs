use clap::{Args, Parser, Subcommand};
use gencode_cli::{
    execute, replay, AugmentCommand, CliError, CommandConfig, EvalCommand, GenCorpusCommand, Method, RunConfig,
    StatsCommand, StudyCommand, TrainCommand,
};
use gencode_core::corpus::{CorpusConfig, LangMix};
use gencode_core::experiments::{Stage, StudyConfig, TrainConfig};
use gencode_core::selection::{Operator, Strategy};
use gencode_core::text::TextOpConfig;
use serde::de::DeserializeOwned;
use std::path::PathBuf;
use std::process::ExitCode;

/// Parse a kebab-case enum value through its serde representation.
fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Parser)]
#[command(name = "gencode", version, about = "Generation-and-selection data augmentation for code classifiers")]
struct Cli {
    /// Back-translation service; without it the offline stub is used.
    #[arg(long, global = true, env = "GENCODE_BT_URL")]
    bt_endpoint: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory for artifacts and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic corpus as train.jsonl and test.jsonl.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 50)]
        train_per_class: usize,
        #[arg(long, default_value_t = 20)]
        test_per_class: usize,
        #[arg(long, value_parser = kebab::<LangMix>, default_value = "both")]
        langs: LangMix,
    },
    /// Build one epoch's search space.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_delimiter = ',')]
        operators: Option<Vec<Operator>>,
        #[arg(long)]
        include_originals: bool,
        #[arg(long, default_value_t = 0)]
        epoch: usize,
    },
    /// Train with GenCode or without augmentation.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_parser = kebab::<Method>, default_value = "gencode")]
        method: Method,
        /// TrainConfig JSON; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = kebab::<Strategy>)]
        strategy: Option<Strategy>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Number of repetitions; seeds are seed, seed+1, ...
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        operators: Option<Vec<Operator>>,
        #[arg(long)]
        robustness_seed: Option<u64>,
        #[arg(long)]
        provenance: bool,
    },
    /// Evaluate a checkpoint on a test set.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        robustness_seed: Option<u64>,
    },
    /// Correlation between group loss and fine-tuned accuracy.
    Study {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = kebab::<Stage>, default_value = "early,mid,late")]
        stages: Vec<Stage>,
        #[arg(long)]
        groups: Option<usize>,
    },
    /// Wilcoxon signed-rank test between two report.json files.
    Stats {
        #[command(flatten)]
        common: Common,
        a: PathBuf,
        b: PathBuf,
    },
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_json<T: DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn build(cli: Cli) -> Result<Option<RunConfig>, CliError> {
    let bt_endpoint = cli.bt_endpoint;
    let wrap = |common: Common, command| RunConfig { seed: common.seed, output_dir: common.out, bt_endpoint: bt_endpoint.clone(), command };
    let cfg = match cli.command {
        Command::Run { config, out } => {
            let mut cfg: RunConfig = load_json(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if bt_endpoint.is_some() {
                cfg.bt_endpoint = bt_endpoint.clone();
            }
            cfg
        }
        Command::GenCorpus { common, classes, train_per_class, test_per_class, langs } => {
            let corpus = CorpusConfig { classes, train_per_class, test_per_class, langs, seed: common.seed };
            wrap(common, CommandConfig::GenCorpus(GenCorpusCommand { corpus }))
        }
        Command::Augment { common, dataset, operators, include_originals, epoch } => wrap(
            common,
            CommandConfig::Augment(AugmentCommand {
                dataset,
                operators: operators.unwrap_or_else(Operator::all),
                include_originals,
                epoch,
                text: TextOpConfig::default(),
            }),
        ),
        Command::Train { common, train, test, method, config, strategy, epochs, seeds, k, operators, robustness_seed, provenance } => {
            let mut tc: TrainConfig = match &config {
                Some(p) => load_json(p)?,
                None => TrainConfig::default(),
            };
            if let Some(n) = seeds {
                tc.repetitions = n;
                tc.seeds = (0..n as u64).map(|i| common.seed + i).collect();
            } else if config.is_none() {
                tc.seeds = (0..tc.repetitions as u64).map(|i| common.seed + i).collect();
            }
            if let Some(s) = strategy {
                tc.strategy = s;
            }
            if let Some(e) = epochs {
                tc.epochs = e;
            }
            if k.is_some() {
                tc.k = k;
            }
            if let Some(ops) = operators {
                tc.operators = ops;
            }
            if robustness_seed.is_some() {
                tc.robustness_seed = robustness_seed;
            }
            tc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            wrap(common, CommandConfig::Train(TrainCommand { train, test, method, config: tc, provenance }))
        }
        Command::Eval { common, checkpoint, test, robustness_seed } => {
            wrap(common, CommandConfig::Eval(EvalCommand { checkpoint, test, robustness_seed }))
        }
        Command::Study { common, train, test, stages, groups } => {
            let mut config = StudyConfig::default();
            if let Some(g) = groups {
                config.groups = g;
            }
            wrap(common, CommandConfig::Study(StudyCommand { train, test, stages, config }))
        }
        Command::Stats { common, a, b } => wrap(common, CommandConfig::Stats(StatsCommand { a, b })),
        Command::Replay { manifest, out } => {
            let m = replay(&manifest, out.as_deref())?;
            println!("{}", m.config.output_dir.display());
            return Ok(None);
        }
    };
    Ok(Some(cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = build(cli).and_then(|cfg| match cfg {
        Some(cfg) => execute(&cfg).map(|m| println!("{}", m.config.output_dir.display())),
        None => Ok(()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
