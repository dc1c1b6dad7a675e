//! Line-delimited JSON scoring over a child's stdio or a TCP socket.
//!
//! Request:  `{"id": "...", "text": "...", "label": 3}`
//! Response: `{"id": "...", "loss": 0.4, "max_prob": 0.7}`
//!
//! Up to `window` requests are outstanding at once. Responses may arrive
//! in any order and are matched by id.

use super::{ScoredCandidate, ScorerError};
use crate::ir::Lang;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub text: String,
    #[serde(skip, default = "default_lang")]
    pub lang: Lang,
    pub label: usize,
}

fn default_lang() -> Lang {
    Lang::JavaLite
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Response {
    id: String,
    loss: f64,
    max_prob: f64,
    #[serde(default)]
    predicted: Option<usize>,
}

pub struct ExternalScorer {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    window: usize,
    /// Set once the stream is in an unknown state; later batches fail fast.
    broken: Option<String>,
}

impl ExternalScorer {
    pub fn spawn(program: &str, args: &[String], window: usize) -> Result<Self, ScorerError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::ScorerUnavailable(format!("cannot start `{program}`: {e}")))?;
        let writer = child.stdin.take().expect("piped stdin");
        let reader = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalScorer {
            reader: Box::new(reader),
            writer: Box::new(writer),
            child: Some(child),
            window: window.max(1),
            broken: None,
        })
    }

    pub fn connect(addr: &str, window: usize, timeout: Duration) -> Result<Self, ScorerError> {
        let unavailable = |e: std::io::Error| ScorerError::ScorerUnavailable(format!("{addr}: {e}"));
        let stream = TcpStream::connect(addr).map_err(unavailable)?;
        stream.set_read_timeout(Some(timeout)).map_err(unavailable)?;
        stream.set_nodelay(true).map_err(unavailable)?;
        let reader = BufReader::new(stream.try_clone().map_err(unavailable)?);
        Ok(ExternalScorer { reader: Box::new(reader), writer: Box::new(stream), child: None, window: window.max(1), broken: None })
    }

    /// Score every request or fail as a whole.
    pub fn score(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoredCandidate>, ScorerError> {
        if let Some(why) = &self.broken {
            return Err(ScorerError::ScorerUnavailable(why.clone()));
        }
        let result = self.exchange(requests);
        if let Err(e) = &result {
            self.broken = Some(e.to_string());
        }
        result
    }

    fn exchange(&mut self, requests: &[ScoreRequest]) -> Result<Vec<ScoredCandidate>, ScorerError> {
        let mut position: HashMap<&str, usize> = HashMap::with_capacity(requests.len());
        for (i, r) in requests.iter().enumerate() {
            if position.insert(r.id.as_str(), i).is_some() {
                return Err(ScorerError::ProtocolViolation(format!("duplicate request id `{}`", r.id)));
            }
        }
        let mut results: Vec<Option<ScoredCandidate>> = vec![None; requests.len()];
        let mut outstanding: HashSet<&str> = HashSet::new();
        let mut sent = 0;
        let mut received = 0;
        while received < requests.len() {
            while sent < requests.len() && outstanding.len() < self.window {
                let r = &requests[sent];
                let mut line = serde_json::to_string(r).expect("request serializes");
                line.push('\n');
                self.writer
                    .write_all(line.as_bytes())
                    .map_err(|e| ScorerError::ScorerUnavailable(format!("write failed: {e}")))?;
                outstanding.insert(r.id.as_str());
                sent += 1;
            }
            self.writer.flush().map_err(|e| ScorerError::ScorerUnavailable(format!("flush failed: {e}")))?;
            let mut line = String::new();
            let n = self
                .reader
                .read_line(&mut line)
                .map_err(|e| ScorerError::ScorerUnavailable(format!("read failed: {e}")))?;
            if n == 0 {
                return Err(ScorerError::ScorerUnavailable(format!(
                    "stream closed after {received} of {} responses",
                    requests.len()
                )));
            }
            let trimmed = line.trim_end();
            let violation = || ScorerError::ProtocolViolation(trimmed.to_string());
            let resp: Response = serde_json::from_str(trimmed).map_err(|_| violation())?;
            if !outstanding.remove(resp.id.as_str()) {
                return Err(violation());
            }
            if !(resp.loss.is_finite() && resp.loss >= 0.0 && resp.max_prob > 0.0 && resp.max_prob <= 1.0) {
                return Err(violation());
            }
            let i = position[resp.id.as_str()];
            results[i] = Some(ScoredCandidate {
                id: resp.id,
                loss: resp.loss,
                predicted_class: resp.predicted.unwrap_or(requests[i].label),
                max_probability: resp.max_prob,
            });
            received += 1;
        }
        Ok(results.into_iter().map(|r| r.expect("every id answered")).collect())
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
