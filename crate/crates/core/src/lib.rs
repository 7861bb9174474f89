//! Decentralized rigidity maintenance for 3-D multi-agent frameworks.
//!
//! The crate covers the centralized rigidity algebra used as ground truth,
//! state-dependent edge weights, the per-agent estimator bank (relative
//! positions, PI consensus, distributed power iteration), the gradient
//! controller and a deterministic closed-loop simulator.

pub mod error;
pub mod graph;
pub mod rigidity;
pub mod weights;
pub mod estimators;
pub mod controller;
pub mod sim;

#[doc(hidden)]
pub mod testkit;

pub use error::{Error, Result};
pub use graph::{FrameworkFile, Graph, ObstacleSet, PositionMatrix};
pub use rigidity::{rigidity_report, RigidityReport, Tolerances, WeightedFramework};
pub use weights::{WeightField, WeightParams};
