//! Per-epoch search space construction and loss-guided top-K selection.

use crate::ir::{print, render_tokens, tokenize, Lang, ParsedProgram};
use crate::refactor::{apply_refactor, RefactorKind};
use crate::text::{apply_text_op, TextOpConfig, TextOpKind};
use crate::util::derive_seed;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use thiserror::Error;

/// One of the 23 transformation operators, or the untransformed program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    Refactor(RefactorKind),
    Text(TextOpKind),
    Original,
}

impl Operator {
    /// The 18 refactorings followed by the 5 text operators.
    pub fn all() -> Vec<Operator> {
        RefactorKind::ALL
            .into_iter()
            .map(Operator::Refactor)
            .chain(TextOpKind::ALL.into_iter().map(Operator::Text))
            .collect()
    }

    pub fn slug(self) -> &'static str {
        match self {
            Operator::Refactor(k) => k.slug(),
            Operator::Text(k) => k.slug(),
            Operator::Original => "original",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Operator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "original" {
            return Ok(Operator::Original);
        }
        s.parse()
            .map(Operator::Refactor)
            .or_else(|_| s.parse().map(Operator::Text))
            .map_err(|_| format!("unknown operator `{s}`"))
    }
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.slug())
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// `<origin id>/<operator slug>`
    pub id: String,
    pub origin_id: String,
    pub operator: Operator,
    pub content: String,
    pub lang: Lang,
    pub label: usize,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub origin_id: String,
    pub operator: Operator,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchSpace {
    pub candidates: Vec<Candidate>,
    pub skips: Vec<SkipRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceConfig {
    pub seed: u64,
    pub epoch: usize,
    pub include_originals: bool,
    pub text: TextOpConfig,
}

/// Seed for one (epoch, program, operator) cell.
pub fn candidate_seed(seed: u64, epoch: usize, origin_id: &str, op: Operator) -> u64 {
    derive_seed(seed, &[&epoch.to_string(), origin_id, op.slug()])
}

fn generate(p: &ParsedProgram, op: Operator, cfg: &SpaceConfig) -> Result<Candidate, SkipRecord> {
    let program = &p.program;
    let skip = |reason: String| SkipRecord { origin_id: program.id.clone(), operator: op, reason };
    let seed = candidate_seed(cfg.seed, cfg.epoch, &program.id, op);
    let content = match op {
        Operator::Original => program.content.clone(),
        Operator::Refactor(kind) => {
            let out = apply_refactor(kind, &p.tree, seed);
            if !out.applied() {
                return Err(skip(format!("{:?}: {}", out.status, out.note)));
            }
            print(&out.tree)
        }
        Operator::Text(kind) => {
            let tokens = tokenize(&program.content, program.lang).map_err(|e| skip(e.to_string()))?;
            let out = apply_text_op(kind, &tokens, &cfg.text.with_seed(seed)).map_err(|e| skip(e.to_string()))?;
            let text = render_tokens(&out);
            if text == program.content {
                return Err(skip("no change".into()));
            }
            text
        }
    };
    Ok(Candidate {
        id: format!("{}/{}", program.id, op.slug()),
        origin_id: program.id.clone(),
        operator: op,
        content,
        lang: program.lang,
        label: program.label,
        loss: None,
    })
}

/// Every operator applied once to every program, program-major, with the
/// originals appended at the end when requested.
pub fn build_search_space(programs: &[ParsedProgram], operators: &[Operator], cfg: &SpaceConfig) -> SearchSpace {
    let cells: Vec<Vec<Result<Candidate, SkipRecord>>> = programs
        .par_iter()
        .map(|p| operators.iter().filter(|op| **op != Operator::Original).map(|op| generate(p, *op, cfg)).collect())
        .collect();
    let mut space = SearchSpace::default();
    for r in cells.into_iter().flatten() {
        match r {
            Ok(c) => space.candidates.push(c),
            Err(s) => space.skips.push(s),
        }
    }
    if cfg.include_originals {
        for p in programs {
            space.candidates.push(generate(p, Operator::Original, cfg).expect("originals always exist"));
        }
    }
    space
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    MaxLoss,
    MinLoss,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    pub k: usize,
    pub seed: u64,
    pub include_originals: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("candidate {0} has no loss")]
    UnscoredCandidate(String),
    #[error("k must be at least 1")]
    ZeroK,
}

/// Indices chosen from `losses`. MaxLoss returns them in (loss desc,
/// index asc) order, MinLoss in (loss asc, index asc) order, Random in
/// sampling order.
pub fn select_indices(losses: &[Option<f64>], cfg: &SelectionConfig) -> Result<Vec<usize>, SelectionError> {
    rank(losses, cfg, |i| format!("#{i}"))
}

pub fn select(cands: &[Candidate], cfg: &SelectionConfig) -> Result<Vec<String>, SelectionError> {
    let losses: Vec<Option<f64>> = cands.iter().map(|c| c.loss).collect();
    let picked = rank(&losses, cfg, |i| cands[i].id.clone())?;
    Ok(picked.into_iter().map(|i| cands[i].id.clone()).collect())
}

fn rank(losses: &[Option<f64>], cfg: &SelectionConfig, name: impl Fn(usize) -> String) -> Result<Vec<usize>, SelectionError> {
    if cfg.k == 0 {
        return Err(SelectionError::ZeroK);
    }
    let k = cfg.k.min(losses.len());
    if cfg.strategy == Strategy::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        return Ok(index::sample(&mut rng, losses.len(), k).into_vec());
    }
    let scored: Vec<f64> = losses
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| SelectionError::UnscoredCandidate(name(i))))
        .collect::<Result<_, _>>()?;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    match cfg.strategy {
        Strategy::MaxLoss => order.sort_by(|&a, &b| scored[b].total_cmp(&scored[a]).then(a.cmp(&b))),
        Strategy::MinLoss => order.sort_by(|&a, &b| scored[a].total_cmp(&scored[b]).then(a.cmp(&b))),
        Strategy::Random => unreachable!(),
    }
    order.truncate(k);
    Ok(order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub epoch: usize,
    pub candidate_id: String,
    pub origin_id: String,
    pub operator: Operator,
    pub loss: Option<f64>,
    pub selected: bool,
}

pub fn provenance(epoch: usize, cands: &[Candidate], selected: &[usize]) -> Vec<ProvenanceRecord> {
    let mut chosen = vec![false; cands.len()];
    for &i in selected {
        chosen[i] = true;
    }
    cands
        .iter()
        .zip(chosen)
        .map(|(c, selected)| ProvenanceRecord {
            epoch,
            candidate_id: c.id.clone(),
            origin_id: c.origin_id.clone(),
            operator: c.operator,
            loss: c.loss,
            selected,
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(mut out: impl Write, rows: &[T]) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests;
