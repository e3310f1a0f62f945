//! Command-line front end: configuration parsing and experiment orchestration.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod config;
pub mod run;

pub use config::{parse_config, Kind, RunConfig};
pub use run::{run, Outcome};
