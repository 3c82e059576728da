//! Explanation ranking engine for elementary-science question/answer pairs.
//!
//! Given a fixed tablestore of semi-structured facts and a QA pair, the crate
//! extracts six groups of sparse features per (question, answer, fact) triple
//! and trains linear rankers — a pointwise epsilon-insensitive regressor and a
//! pairwise hinge-loss classifier over within-query difference vectors — to
//! order the entire store so that the facts explaining the answer come first.
//!
//! The numeric kernel (sparse vectors, TF-IDF space, solvers) is generic over
//! the scalar type; the aliases below fix `f64` for the standard pipeline.

pub mod binio;
pub mod bundle;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod learner;
pub mod scalar;
pub mod seeding;
pub mod sparse;
pub mod textproc;
pub mod tfidf;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type of the end-to-end pipeline.
pub type Real = f64;

pub type SparseVec = sparse::SparseVector<Real>;
pub type FeatureVec = features::FeatureVector<Real>;
pub type Tfidf = tfidf::TfidfModel<Real>;
pub type Model = learner::LinearModel<Real>;
pub type Ranked = learner::RankedExplanation<Real>;
