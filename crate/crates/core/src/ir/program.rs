use super::interp::{observe, IoMode, Value, DEFAULT_FUEL};
use super::token::Lang;
use super::{parse_source, SourceError, SyntaxTree};
use serde::{Deserialize, Serialize};

/// One input/expected-output observation of a program.
///
/// Serialized as a two-element array `[[args...], "expected"]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoPair(pub Vec<Value>, pub String);

impl IoPair {
    pub fn args(&self) -> &[Value] {
        &self.0
    }

    pub fn expected(&self) -> &str {
        &self.1
    }
}

/// A labelled source program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub id: String,
    pub lang: Lang,
    #[serde(rename = "code")]
    pub content: String,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub io_pairs: Vec<IoPair>,
}

impl Program {
    pub fn parse(&self) -> Result<SyntaxTree, SourceError> {
        parse_source(&self.content, self.lang)
    }

    /// Build io pairs by running the program itself on each argument list.
    pub fn record_io(&mut self, inputs: &[Vec<Value>]) -> Result<(), SourceError> {
        let tree = self.parse()?;
        let mode = IoMode::of(&tree);
        self.io_pairs = inputs
            .iter()
            .map(|args| IoPair(args.clone(), observe(&tree, args, DEFAULT_FUEL, mode)))
            .collect();
        Ok(())
    }
}

/// A program together with its parse tree.
#[derive(Debug, Clone)]
pub struct ParsedProgram {
    pub program: Program,
    pub tree: SyntaxTree,
}

impl ParsedProgram {
    pub fn new(program: Program) -> Result<Self, SourceError> {
        let tree = program.parse()?;
        Ok(ParsedProgram { program, tree })
    }
}

/// Check a rewritten tree against the io pairs recorded for the original.
///
/// Returns the index of the first disagreeing pair, if any. The
/// observation mode is that of the original program.
pub fn first_io_mismatch(original: &SyntaxTree, rewritten: &SyntaxTree, pairs: &[IoPair]) -> Option<usize> {
    let mode = IoMode::of(original);
    pairs
        .iter()
        .position(|p| observe(rewritten, p.args(), DEFAULT_FUEL, mode) != p.expected())
}
