//! Deterministic closed-loop simulation of the estimation and control stack.

pub mod engine;
pub mod scenario;
pub mod trace;

pub use engine::{measure, run, Links, Measurement, RunOutput, Simulation};
pub use scenario::{Modes, NoiseParams, Scenario, DEMO_SCENARIO, SCHEMA_VERSION};
pub use trace::{Summary, Trace, TraceRecord, TRACE_HEADER};
