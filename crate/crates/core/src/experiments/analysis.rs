use super::{
    accuracy, featurize_all, new_backend, prepare, score_candidates, train_epoch, ExperimentError, TrainConfig,
};
use crate::ir::{parse_source, print, Program};
use crate::refactor::{apply_refactor, eligible_kinds};
use crate::scorer::{loss_of, featurize_source, Hyper, ModelState};
use crate::selection::{build_search_space, SpaceConfig};
use crate::stats::pearson_test;
use crate::util::derive_seed;
use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSet {
    pub programs: Vec<Program>,
    /// Ids copied unchanged because no refactoring applied to them.
    pub unchanged: Vec<String>,
}

/// Each test program rewritten by one refactoring drawn uniformly from
/// those eligible for it.
pub fn build_natural_robustness_set(test: &[Program], seed: u64) -> Result<RobustnessSet, ExperimentError> {
    let rewritten: Vec<Result<(Program, bool), ExperimentError>> = test
        .par_iter()
        .map(|p| {
            let tree = p.parse().map_err(|e| ExperimentError::InvalidProgram { id: p.id.clone(), message: e.to_string() })?;
            let kinds: Vec<_> = eligible_kinds(&tree).into_iter().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[&p.id, "kind"]));
            let Some(&kind) = kinds.choose(&mut rng) else {
                return Ok((p.clone(), false));
            };
            let out = apply_refactor(kind, &tree, derive_seed(seed, &[&p.id, kind.slug()]));
            if !out.applied() {
                return Ok((p.clone(), false));
            }
            let content = print(&out.tree);
            debug_assert!(parse_source(&content, p.lang).is_ok());
            Ok((Program { content, ..p.clone() }, true))
        })
        .collect();
    let mut set = RobustnessSet { programs: Vec::with_capacity(test.len()), unchanged: Vec::new() };
    for r in rewritten {
        let (p, changed) = r?;
        if !changed {
            set.unchanged.push(p.id.clone());
        }
        set.programs.push(p);
    }
    Ok(set)
}

/// Mean max probability over the correctly classified programs only.
pub fn mean_max_probability(model: &ModelState, test: &[Program]) -> Result<f64, ExperimentError> {
    if test.is_empty() {
        return Err(ExperimentError::EmptyDataset("test"));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for p in test {
        let pred = loss_of(model, &featurize_source(&p.content, p.lang, model.dim), p.label)?;
        if pred.predicted_class == p.label {
            sum += pred.max_probability;
            n += 1;
        }
    }
    if n == 0 {
        return Err(ExperimentError::NoCorrectPredictions);
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Early,
    Mid,
    Late,
}

impl Stage {
    /// Epochs of plain training before the groups are scored.
    pub fn pretrain_epochs(self) -> usize {
        match self {
            Stage::Early => 0,
            Stage::Mid => 10,
            Stage::Late => 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub groups: usize,
    /// Candidates per group; `None` means |train|.
    pub group_size: Option<usize>,
    pub finetune_epochs: usize,
    /// Overrides the stage's own pre-training budget.
    pub pretrain_epochs: Option<usize>,
    /// Optimizer for the per-group fine-tuning; `None` reuses `train.hyper`.
    pub finetune_hyper: Option<Hyper>,
    pub seed: u64,
    /// Operators, features, optimizer and scorer. `train.hyper.init_scale`
    /// must be positive for the Early stage, where a zero model would give
    /// every group the same loss.
    pub train: TrainConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let train = TrainConfig { hyper: Hyper { init_scale: 0.05, ..Hyper::default() }, ..TrainConfig::default() };
        StudyConfig {
            groups: 100,
            group_size: None,
            finetune_epochs: 3,
            pretrain_epochs: None,
            finetune_hyper: None,
            seed: 0,
            train,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub stage: Stage,
    pub pcc: f64,
    pub p_value: f64,
    /// (mean loss under the stage model, accuracy after fine-tuning)
    pub points: Vec<(f64, f64)>,
}

/// Correlation between a group's mean loss under the stage model and the
/// accuracy reached after briefly fine-tuning on that group.
pub fn correlation_study(
    train: &[Program],
    test: &[Program],
    stage: Stage,
    cfg: &StudyConfig,
) -> Result<StudyResult, ExperimentError> {
    if cfg.groups < 3 {
        return Err(ExperimentError::InvalidConfig(format!("need at least 3 groups, got {}", cfg.groups)));
    }
    let tc = &cfg.train;
    if tc.batch_size == 0 || !tc.dim.is_power_of_two() {
        return Err(ExperimentError::InvalidConfig("batch_size and dim".into()));
    }
    let data = prepare(train, test)?;
    let seed = cfg.seed;
    let hyper = Hyper { seed: derive_seed(seed, &["init"]), ..tc.hyper.clone() };
    let mut model = ModelState::new(data.classes, tc.dim, hyper)?;
    let train_x = featurize_all(train, tc.dim);
    let test_x = featurize_all(test, tc.dim);
    for epoch in 0..cfg.pretrain_epochs.unwrap_or(stage.pretrain_epochs()) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["pretrain", &epoch.to_string()]));
        train_epoch(&mut model, &train_x, tc.batch_size, &mut rng)?;
    }
    if let Some(h) = &cfg.finetune_hyper {
        let fresh = ModelState::new(data.classes, tc.dim, h.clone())?;
        model = ModelState { hyper: h.clone(), moments: fresh.moments, step_count: 0, ..model };
    }

    let space_cfg = SpaceConfig { seed, epoch: 0, include_originals: true, text: tc.text.clone() };
    let mut space = build_search_space(&data.train, &tc.operators, &space_cfg);
    let mut backend = new_backend(&tc.scorer)?;
    score_candidates(&mut backend, &model, &mut space.candidates)?;
    let size = cfg.group_size.unwrap_or(train.len()).min(space.candidates.len());
    if size == 0 {
        return Err(ExperimentError::EmptyDataset("search space"));
    }
    let all_x = featurize_all(
        &space
            .candidates
            .iter()
            .map(|c| Program { id: c.id.clone(), lang: c.lang, content: c.content.clone(), label: c.label, io_pairs: vec![] })
            .collect::<Vec<_>>(),
        tc.dim,
    );

    let points: Vec<(f64, f64)> = (0..cfg.groups)
        .into_par_iter()
        .map(|g| {
            let group_seed = derive_seed(seed, &["group", &g.to_string()]);
            let mut rng = ChaCha8Rng::seed_from_u64(group_seed);
            let mut members = index::sample(&mut rng, space.candidates.len(), size).into_vec();
            members.sort_unstable();
            let mean_loss =
                members.iter().map(|&i| space.candidates[i].loss.expect("scored")).sum::<f64>() / size as f64;
            let xs: Vec<_> = members.iter().map(|&i| all_x[i].clone()).collect();
            let mut m = model.clone();
            for _ in 0..cfg.finetune_epochs {
                train_epoch(&mut m, &xs, tc.batch_size, &mut rng)?;
            }
            Ok((mean_loss, accuracy(&m, &test_x)?))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let (losses, accs): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    let c = pearson_test(&losses, &accs)?;
    Ok(StudyResult { stage, pcc: c.r, p_value: c.p_value, points })
}
