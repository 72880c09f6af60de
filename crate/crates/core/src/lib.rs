//! Changepoint detection in dated document streams.
//!
//! Classifiers are trained to tell documents before a candidate date from
//! documents after it. Their balanced validation error turns into a lower
//! bound on the total variation distance between the two segments, and the
//! maximum of that indicator over candidates is the predicted changepoint.
//! A topic-model baseline, synthetic benchmark generators and an evaluation
//! harness live alongside.

pub mod benchgen;
pub mod confusion;
pub mod corpus;
pub mod detect;
pub mod error;
pub mod eval;
pub mod features;
pub mod guardian;
pub mod lda;
pub mod windows;

pub use confusion::{IndicatorCurve, Method};
pub use corpus::{CandidateGrid, CorpusIndex, Document};
pub use error::{Error, Result};
pub use features::{FeatureMatrix, Vocabulary};
pub use windows::SegmentPair;
