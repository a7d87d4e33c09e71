//! Configuration, experiment orchestration and CSV reporting behind the
//! `dscm` binary.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod commands;
pub mod config;

pub use commands::Report;
pub use config::{LutModel, Mode, Overrides, RunConfig};

/// Process exit code for an error category.
pub fn exit_code(category: &str) -> i32 {
    match category {
        "config" => 3,
        "invalid-parameter" => 4,
        "io" => 5,
        "format" => 6,
        "numeric" => 7,
        "infeasible" => 8,
        "consistency" => 9,
        "insufficient-data" => 10,
        _ => 1,
    }
}
