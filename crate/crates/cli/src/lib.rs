//! Command-line workflows over the inference library: config parsing, CSV
//! ingestion and output, the ledger, and the simulate / pfilter / mif2 /
//! profile commands.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod ledger;

pub use commands::{cmd_mif2, cmd_pfilter, cmd_profile, cmd_simulate};
pub use config::RunConfig;

/// Process exit code for an error, per the CLI contract: 2 config, 3 data,
/// 4 model; other I/O failures exit 1.
pub fn exit_code(err: &pompkit_core::Error) -> i32 {
    use pompkit_core::Error::*;
    match err {
        Config(_) => 2,
        Data(_) => 3,
        Model(_) | Boundary { .. } | NonFiniteWeight { .. } => 4,
        Io(_) => 1,
    }
}
