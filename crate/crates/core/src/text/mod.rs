//! Token-level edits that are allowed to break syntax: synonym
//! replacement, random insertion, line swap, random deletion, and
//! back-translation.

mod bt;

pub use bt::{back_translate, back_translate_as, stub_translate, BtClient, StubDictionary};

use crate::ir::lexer::is_keyword;
use crate::ir::{render_tokens, tokenize_lenient, Lang, Token, TokenKind};
use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextOpKind {
    SynonymReplacement,
    RandomInsertion,
    RandomSwap,
    RandomDeletion,
    BackTranslation,
}

impl TextOpKind {
    pub const ALL: [TextOpKind; 5] = [
        TextOpKind::SynonymReplacement,
        TextOpKind::RandomInsertion,
        TextOpKind::RandomSwap,
        TextOpKind::RandomDeletion,
        TextOpKind::BackTranslation,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            TextOpKind::SynonymReplacement => "synonym-replacement",
            TextOpKind::RandomInsertion => "random-insertion",
            TextOpKind::RandomSwap => "random-swap",
            TextOpKind::RandomDeletion => "random-deletion",
            TextOpKind::BackTranslation => "back-translation",
        }
    }
}

impl fmt::Display for TextOpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for TextOpKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TextOpKind::ALL
            .into_iter()
            .find(|k| k.slug() == s)
            .ok_or_else(|| format!("unknown text operator `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextOpError {
    #[error("empty token sequence")]
    EmptyInput,
    #[error("back-translation endpoint unreachable: {0}")]
    BtUnreachable(String),
    #[error("malformed back-translation response: {0}")]
    MalformedResponse(String),
    #[error("invalid text-op config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextOpConfig {
    /// Fraction of eligible units edited per application, in (0, 1].
    pub rate: f64,
    pub synonym_table: BTreeMap<String, Vec<String>>,
    pub bt_endpoint: Option<String>,
    pub seed: u64,
    /// Fall back to the offline dictionary when the endpoint is absent or down.
    pub bt_stub: bool,
    pub bt_pivot: String,
    pub bt_timeout_ms: u64,
    pub bt_max_in_flight: usize,
}

impl Default for TextOpConfig {
    fn default() -> Self {
        TextOpConfig {
            rate: 0.1,
            synonym_table: default_synonyms(),
            bt_endpoint: None,
            seed: 0,
            bt_stub: true,
            bt_pivot: "de".into(),
            bt_timeout_ms: 5_000,
            bt_max_in_flight: 4,
        }
    }
}

impl TextOpConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        TextOpConfig { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), TextOpError> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(TextOpError::InvalidConfig(format!("rate {} outside (0, 1]", self.rate)));
        }
        if self.bt_max_in_flight == 0 {
            return Err(TextOpError::InvalidConfig("bt_max_in_flight must be at least 1".into()));
        }
        for (word, replacements) in &self.synonym_table {
            if let Some(bad) = std::iter::once(word).chain(replacements).find(|w| !is_identifier(w)) {
                return Err(TextOpError::InvalidConfig(format!("synonym entry `{bad}` is not an identifier")));
            }
        }
        Ok(())
    }
}

/// Valid in both front-ends and not reserved in either.
pub fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_keyword(word, Lang::JavaLite)
        && !is_keyword(word, Lang::PyLite)
}

/// The synonym table shipped with the crate.
pub fn default_synonyms() -> BTreeMap<String, Vec<String>> {
    serde_json::from_str(include_str!("../../data/synonyms.json")).expect("bundled synonym table is valid JSON")
}

/// `max(1, ceil(rate * n))`, never more than `n`.
fn units(rate: f64, n: usize) -> usize {
    ((rate * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1))
}

pub fn apply_text_op(kind: TextOpKind, tokens: &[Token], cfg: &TextOpConfig) -> Result<Vec<Token>, TextOpError> {
    if tokens.is_empty() {
        return Err(TextOpError::EmptyInput);
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = match kind {
        TextOpKind::SynonymReplacement => synonym_replacement(tokens, &cfg.synonym_table, cfg.rate, &mut rng),
        TextOpKind::RandomInsertion => random_insertion(tokens, cfg.rate, &mut rng),
        TextOpKind::RandomSwap => random_swap(tokens, cfg.rate, &mut rng),
        TextOpKind::RandomDeletion => random_deletion(tokens, cfg.rate, &mut rng),
        TextOpKind::BackTranslation => {
            let lang = infer_lang(tokens);
            let text = back_translate_as(&render_tokens(tokens), lang, cfg)?;
            let relexed = tokenize_lenient(&text, lang);
            if relexed.is_empty() {
                return Err(TextOpError::MalformedResponse("translation is empty".into()));
            }
            relexed
        }
    };
    settle_trailing(&mut out);
    Ok(out)
}

/// py-lite streams carry indentation tokens or `def`; everything else is
/// treated as java-lite.
pub fn infer_lang(tokens: &[Token]) -> Lang {
    let py = tokens
        .iter()
        .any(|t| matches!(t.kind, TokenKind::Indent | TokenKind::Dedent) || t.is(TokenKind::Keyword, "def"));
    if py {
        Lang::PyLite
    } else {
        Lang::JavaLite
    }
}

/// Only the final token may carry trailing trivia.
fn settle_trailing(tokens: &mut [Token]) {
    let mut tail = String::new();
    for t in tokens.iter_mut() {
        tail.push_str(&std::mem::take(&mut t.trailing));
    }
    if let Some(last) = tokens.last_mut() {
        last.trailing = tail;
    }
}

fn synonym_replacement(
    tokens: &[Token],
    table: &BTreeMap<String, Vec<String>>,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Token> {
    let mut out = tokens.to_vec();
    let sites: Vec<usize> = (0..tokens.len())
        .filter(|&i| tokens[i].kind == TokenKind::Identifier && table.get(&tokens[i].text).is_some_and(|r| !r.is_empty()))
        .collect();
    if sites.is_empty() {
        return out;
    }
    let mut picked = index::sample(rng, sites.len(), units(rate, sites.len())).into_vec();
    picked.sort_unstable();
    for p in picked {
        let t = &mut out[sites[p]];
        let choice = table[&t.text].choose(rng).expect("non-empty list").clone();
        t.text = choice;
    }
    out
}

fn random_insertion(tokens: &[Token], rate: f64, rng: &mut ChaCha8Rng) -> Vec<Token> {
    let mut out = tokens.to_vec();
    let content: Vec<&Token> = tokens.iter().filter(|t| !t.kind.is_layout()).collect();
    if content.is_empty() {
        return out;
    }
    for _ in 0..units(rate, content.len()) {
        let mut copy = (*content.choose(rng).expect("non-empty")).clone();
        copy.leading = " ".into();
        copy.trailing.clear();
        let at = rng.random_range(0..out.len());
        out.insert(at, copy);
    }
    out
}

/// Split into `[sep, line, sep, line, ..., sep]`, where separators are
/// runs of layout tokens and lines are runs of content tokens.
fn split_lines(tokens: &[Token]) -> (Vec<Vec<Token>>, Vec<Vec<Token>>) {
    let mut seps = vec![Vec::new()];
    let mut lines: Vec<Vec<Token>> = Vec::new();
    for t in tokens {
        if t.kind.is_layout() {
            if seps.len() == lines.len() {
                seps.push(Vec::new());
            }
            seps.last_mut().unwrap().push(t.clone());
        } else {
            if seps.len() > lines.len() {
                lines.push(Vec::new());
            }
            lines.last_mut().unwrap().push(t.clone());
        }
    }
    if seps.len() == lines.len() {
        seps.push(Vec::new());
    }
    (seps, lines)
}

/// Statement lines of a token stream, as produced by layout tokens.
pub fn lines_of(tokens: &[Token]) -> Vec<Vec<Token>> {
    split_lines(tokens).1
}

fn random_swap(tokens: &[Token], rate: f64, rng: &mut ChaCha8Rng) -> Vec<Token> {
    let (seps, mut lines) = split_lines(tokens);
    if lines.len() < 2 {
        return tokens.to_vec();
    }
    for _ in 0..units(rate, lines.len()) {
        let pair = index::sample(rng, lines.len(), 2);
        lines.swap(pair.index(0), pair.index(1));
    }
    let mut out = Vec::with_capacity(tokens.len());
    for (i, sep) in seps.into_iter().enumerate() {
        out.extend(sep);
        if let Some(line) = lines.get_mut(i) {
            out.append(line);
        }
    }
    out
}

fn random_deletion(tokens: &[Token], rate: f64, rng: &mut ChaCha8Rng) -> Vec<Token> {
    let n = tokens.len();
    let keep = (((1.0 - rate) * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n);
    let mut kept = index::sample(rng, n, keep).into_vec();
    kept.sort_unstable();
    kept.into_iter().map(|i| tokens[i].clone()).collect()
}

#[cfg(test)]
mod tests;
