//! Tabular skill-geometry workbench.
//!
//! Occupancy-measure polytopes of finite MDPs, exact mutual-information skill
//! learning via the minimax-KL center, disentanglement metrics, adaptation-cost
//! bounds, Wasserstein skill discovery and sample-based estimators.

pub mod adaptation;
pub mod divergences;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod geometry;
pub mod lp;
pub mod mdp;
pub mod oracle;
pub mod polytope;
pub mod repro;
pub mod transport;
pub mod wdsl;

pub use divergences::{entropy, indicator_mi, kl, klsep, lsepin, skill_mutual_information, SkillSet};
pub use error::{Error, Result};
pub use mdp::{load_mdp, occupancy, OccupancyKind, OccupancyMeasure, Policy, TabularMdp};
pub use polytope::{extreme_points, hull_membership, optimal_vertex, HullResult, Polytope};
pub use transport::{wasserstein, wsep, CostMatrix, TransportPlan};
