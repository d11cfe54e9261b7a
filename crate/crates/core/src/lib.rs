//! Political-affinity analytics over large follower-ID sets.
//!
//! The engine ingests per-entity follower snapshots (candidates, senators,
//! NBA/NFL teams), filters fans down to politically interested exclusive
//! followers, and scores candidate preference per user from senator-follow
//! weights and candidate devotedness, aggregated at sport, state, and team
//! level. A seeded synthetic-cohort generator provides datasets with known
//! ground truth for end-to-end verification.

pub mod collector;
pub mod idset;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod registry;
pub mod report;
pub mod synth;

#[doc(hidden)]
pub mod testutil;

pub use idset::{IdSet, IdSetError, UserId};
pub use ingest::{IngestError, IngestOptions, IngestReport, Snapshot};
pub use metrics::{CandidateRoster, CongressionalWeight, MetricsError, PartyFollowCounts};
pub use pipeline::{CdrTable, GroupingLevel, PipelineError};
pub use registry::{Entity, EntityKind, League, Party, Registry, RegistryError};
