//! Back-translation: an HTTP client for a paraphrasing service and an
//! offline stand-in that round-trips identifier words through a lossy
//! bilingual dictionary.

use super::{TextOpConfig, TextOpError};
use crate::ir::{render_tokens, tokenize_lenient, Lang, TokenKind};
use serde_json::json;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::Duration;

/// Source word → pivot word → canonical source word. Several source words
/// share a pivot, so the round trip loses information.
#[derive(Debug, Clone, Default)]
pub struct StubDictionary {
    forward: BTreeMap<String, String>,
    backward: BTreeMap<String, String>,
}

impl StubDictionary {
    /// Tab-separated lines: `pivot  canonical  [other words...]`. `#` starts a comment line.
    pub fn parse(tsv: &str) -> Result<Self, String> {
        let mut dict = StubDictionary::default();
        for (n, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [pivot, canonical, others @ ..] = cols.as_slice() else {
                return Err(format!("line {}: expected at least two columns", n + 1));
            };
            if dict.backward.insert(pivot.to_string(), canonical.to_string()).is_some() {
                return Err(format!("line {}: duplicate pivot `{pivot}`", n + 1));
            }
            for word in std::iter::once(canonical).chain(others) {
                if let Some(prev) = dict.forward.insert(word.to_string(), pivot.to_string()) {
                    if prev != *pivot {
                        return Err(format!("line {}: `{word}` already maps to `{prev}`", n + 1));
                    }
                }
            }
        }
        Ok(dict)
    }

    pub fn bundled() -> &'static StubDictionary {
        static DICT: OnceLock<StubDictionary> = OnceLock::new();
        DICT.get_or_init(|| {
            StubDictionary::parse(include_str!("../../data/bt_dictionary.tsv")).expect("bundled dictionary is well formed")
        })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn round_trip(&self, word: &str) -> Option<&str> {
        let pivot = self.forward.get(word)?;
        self.backward.get(pivot).map(String::as_str)
    }

    /// Translate each word of an identifier (split on `_` and camelCase
    /// humps), keeping the original casing style per word.
    pub fn translate_identifier(&self, ident: &str) -> String {
        let mut out = String::with_capacity(ident.len());
        let mut word = String::new();
        let flush = |word: &mut String, out: &mut String| {
            if word.is_empty() {
                return;
            }
            let lower = word.to_ascii_lowercase();
            match self.round_trip(&lower) {
                Some(back) if word.len() > 1 && word.chars().all(|c| c.is_ascii_uppercase()) => {
                    out.push_str(&back.to_ascii_uppercase())
                }
                Some(back) if word.starts_with(|c: char| c.is_ascii_uppercase()) => {
                    let mut chars = back.chars();
                    out.extend(chars.next().map(|c| c.to_ascii_uppercase()));
                    out.push_str(chars.as_str());
                }
                Some(back) => out.push_str(back),
                None => out.push_str(word),
            }
            word.clear();
        };
        let mut prev_lower = false;
        for c in ident.chars() {
            if !c.is_ascii_alphabetic() {
                flush(&mut word, &mut out);
                out.push(c);
                prev_lower = false;
                continue;
            }
            if c.is_ascii_uppercase() && prev_lower {
                flush(&mut word, &mut out);
            }
            word.push(c);
            prev_lower = c.is_ascii_lowercase();
        }
        flush(&mut word, &mut out);
        out
    }
}

/// Offline back-translation. Identifiers reached through `.` (such as
/// `System.out.println`) are left alone.
pub fn stub_translate(source: &str, lang: Lang, dict: &StubDictionary) -> String {
    let mut tokens = tokenize_lenient(source, lang);
    let dotted: Vec<bool> = (0..tokens.len())
        .map(|i| {
            let dot = |j: Option<usize>| j.and_then(|j| tokens.get(j)).is_some_and(|t| t.is(TokenKind::Punct, "."));
            dot(i.checked_sub(1)) || dot(Some(i + 1))
        })
        .collect();
    for (t, dotted) in tokens.iter_mut().zip(dotted) {
        if t.kind == TokenKind::Identifier && !dotted {
            t.text = dict.translate_identifier(&t.text);
        }
    }
    render_tokens(&tokens)
}

fn guess_lang(source: &str) -> Lang {
    if source.lines().any(|l| l.trim_start().starts_with("def ")) {
        Lang::PyLite
    } else {
        Lang::JavaLite
    }
}

pub fn back_translate(source: &str, cfg: &TextOpConfig) -> Result<String, TextOpError> {
    back_translate_as(source, guess_lang(source), cfg)
}

pub fn back_translate_as(source: &str, lang: Lang, cfg: &TextOpConfig) -> Result<String, TextOpError> {
    match &cfg.bt_endpoint {
        Some(url) => match BtClient::shared(url, cfg).translate(source) {
            Err(TextOpError::BtUnreachable(_)) if cfg.bt_stub => {}
            other => return other,
        },
        None if !cfg.bt_stub => return Err(TextOpError::BtUnreachable("no endpoint configured".into())),
        None => {}
    }
    Ok(stub_translate(source, lang, StubDictionary::bundled()))
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Gate {
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut busy = self.busy.lock().unwrap();
        while *busy >= self.limit {
            busy = self.freed.wait(busy).unwrap();
        }
        *busy += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// HTTP client for `POST {"text", "pivot"} -> {"text"}`. Safe to share
/// between threads; at most `max_in_flight` requests run at once.
#[derive(Debug)]
pub struct BtClient {
    agent: ureq::Agent,
    endpoint: String,
    pivot: String,
    gate: Gate,
}

impl BtClient {
    pub fn new(endpoint: &str, pivot: &str, timeout: Duration, max_in_flight: usize) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        BtClient {
            agent: ureq::Agent::new_with_config(config),
            endpoint: endpoint.to_string(),
            pivot: pivot.to_string(),
            gate: Gate { limit: max_in_flight.max(1), busy: Mutex::new(0), freed: Condvar::new() },
        }
    }

    /// One client per (endpoint, pivot, timeout, cap), so the cap holds
    /// across every caller in the process.
    pub fn shared(endpoint: &str, cfg: &TextOpConfig) -> Arc<BtClient> {
        type Key = (String, String, u64, usize);
        static CLIENTS: OnceLock<Mutex<HashMap<Key, Arc<BtClient>>>> = OnceLock::new();
        let key = (endpoint.to_string(), cfg.bt_pivot.clone(), cfg.bt_timeout_ms, cfg.bt_max_in_flight);
        let mut map = CLIENTS.get_or_init(Default::default).lock().unwrap();
        map.entry(key)
            .or_insert_with(|| {
                Arc::new(BtClient::new(
                    endpoint,
                    &cfg.bt_pivot,
                    Duration::from_millis(cfg.bt_timeout_ms),
                    cfg.bt_max_in_flight,
                ))
            })
            .clone()
    }

    pub fn translate(&self, text: &str) -> Result<String, TextOpError> {
        let _permit = self.gate.acquire();
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(json!({ "text": text, "pivot": self.pivot }))
            .map_err(|e| TextOpError::BtUnreachable(format!("{}: {e}", self.endpoint)))?;
        if response.status() != 200 {
            return Err(TextOpError::MalformedResponse(format!("status {}", response.status().as_u16())));
        }
        let body: serde_json::Value =
            response.body_mut().read_json().map_err(|e| TextOpError::MalformedResponse(e.to_string()))?;
        body.get("text")
            .and_then(|t| t.as_str())
            .map(str::to_string)
            .ok_or_else(|| TextOpError::MalformedResponse("missing `text` field".into()))
    }

    /// Translate a batch with up to `max_in_flight` concurrent requests;
    /// results come back in input order.
    pub fn translate_many(&self, texts: &[String]) -> Vec<Result<String, TextOpError>> {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<String, TextOpError>>>> = texts.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..self.gate.limit.min(texts.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(text) = texts.get(i) else { break };
                    *slots[i].lock().unwrap() = Some(self.translate(text));
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot filled")).collect()
    }
}
