//! Channel allocation for multi-connectivity networks via preallocation
//! and combinatorial auctions.
//!
//! A [`Scenario`] places tenants and base stations; a preallocation method
//! gives every tenant a small candidate channel set; the tenants then bid
//! on all subsets of that set and an exact winner determination picks the
//! final exclusive assignment. See [`pipeline::allocate`].

pub mod assignment;
pub mod auction;
pub mod connectivity;
pub mod error;
pub mod harness;
pub mod matching;
pub mod pipeline;
pub mod prealloc;
pub mod rng;
pub mod scenario;

pub use assignment::{AssignmentMatrix, ChannelSet};
pub use auction::{Bid, BidMatrix, RcaConfig, SolveOptions, WdpSolution};
pub use connectivity::{CapacityModel, LinkModel, RayleighSelection, ScvTable};
pub use error::{Error, Result};
pub use harness::{run_comparison, run_sweep, summarize, ExperimentSpec, SummaryStats, SweepGrid};
pub use matching::{PreferenceProfile, Quotas};
pub use prealloc::{MethodTag, Preallocation};
pub use rng::{Stream, Streams};
pub use scenario::{generate_scenario, Scenario, SetupClass, UtilityBounds};
pub use pipeline::{allocate, compute_metrics, AllocateOptions, AllocationResult, Method, Metrics};
