//! Subcommand implementations behind the `schemnet` binary.

pub mod batch;
pub mod convert;
pub mod eval;
pub mod options;
pub mod serve;
pub mod synth;
