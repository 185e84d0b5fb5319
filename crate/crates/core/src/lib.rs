//! Self-explaining impact prediction for scientific abstracts.
//!
//! Documents are embedded as the average of their skip-gram word vectors and
//! classified with ridge logistic regression. Because the document logit is
//! the mean of the per-word logits, scoring a single word with the same
//! classifier (its SMER score) is an explanation with perfect fidelity.
//!
//! The crate also provides the comparison machinery: a bag-of-words
//! classifier with odds-ratio word importance, a LIME-style local surrogate
//! with global aggregations, and the evaluation harness (AUC, Extreme10%,
//! ActImpact correlation and AOPC-global curves).

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod io;
pub mod models;
pub mod smer;
pub mod synth;
pub mod targets;
pub mod xai;

pub use error::{Error, Result};
