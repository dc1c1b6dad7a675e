//! Generation-and-selection data augmentation for code classifiers.
//!
//! Each training epoch expands the training set with transformed copies of
//! every program (semantic-preserving refactorings and token-level edits),
//! scores every candidate by its loss under the current model, keeps the
//! highest-loss candidates up to the original set size, and trains on them.

pub mod corpus;
pub mod experiments;
pub mod ir;
pub mod refactor;
pub mod scorer;
pub mod selection;
pub mod stats;
pub mod text;
pub mod util;
