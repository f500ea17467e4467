//! Group activity detection from person tracks.
//!
//! Pairs of people are correlated with asynchronous HMMs, people are
//! clustered into symmetric groups around seeds, each group is summarized by
//! a representative, and activities between groups are recognized from the
//! representatives.

pub mod cli;
pub mod clustering;
pub mod features;
pub mod gmm;
pub mod grad;
pub mod grouprep;
pub mod logspace;
pub mod metrics;
pub mod seqmodel;
pub mod simgen;
pub mod taxonomy;
pub mod trackio;
