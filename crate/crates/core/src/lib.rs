//! Trace analytics for collaborative-tagging communities.
//!
//! The pipeline reads a trace of tag assignments (user, item, tag,
//! timestamp) and measures:
//!
//! * daily content reuse of items, tags and users ([`reuse`]),
//! * pairwise interest sharing between users and its evolution over time
//!   ([`similarity`]),
//! * the topology of the thresholded interest-sharing graph ([`graph`]),
//! * the success rate of a neighbour-based recommender under a temporal
//!   train/test split ([`recommend`]).
//!
//! [`synth`] generates traces with planted reuse rates and communities.
//!
//! Weights and statistics are generic over [`Scalar`]; the aliases at the
//! crate root fix the scalar to `f64`.

pub mod error;
pub mod graph;
pub mod ingest;
pub mod profile;
pub mod recommend;
pub mod reuse;
pub mod scalar;
pub mod similarity;
pub mod stats;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use ingest::{parse_trace, Format, PipeLayout, ValidationReport};
pub use profile::{Profiles, UserProfile};
pub use reuse::{classify, ClassifiedAssignment};
pub use scalar::Scalar;
pub use similarity::{all_pairs, pair_similarity, PairEntry, Population, SimilarityMode, SparseSimilarity};
pub use synth::{GenConfig, GroundTruth};

pub use trace::{Dimension, ItemId, TagAssignment, TagId, Timestamp, Trace, UserId};

/// Weight and statistics precision used by the command-line tool.
pub type Real = f64;

pub type DailyReuseRecord = reuse::DailyReuseRecord<Real>;
pub type ReuseSeries = reuse::ReuseSeries<Real>;
pub type ReuseSummary = reuse::ReuseSummary<Real>;
pub type SimilaritySummary = similarity::SimilaritySummary<Real>;
pub type CdfPoint = similarity::CdfPoint<Real>;
pub type InterestGraph = graph::InterestGraph<Real>;
pub type TopologyReport = graph::TopologyReport<Real>;
pub type Recommendation = recommend::Recommendation<Real>;
pub type EvalReport = recommend::EvalReport<Real>;
pub type WindowStats = similarity::WindowStats<Real>;




