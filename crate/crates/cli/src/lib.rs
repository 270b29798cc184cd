//! Library behind the `rigscore` binary: report types and renderers,
//! correlation statistics, table readers, and the subcommand pipelines.
//! The binary itself only parses arguments and maps errors to exit
//! codes; everything it does is callable (and tested) from here.

pub mod pipeline;
pub mod report;
pub mod stats;
pub mod tables;
