//! File formats, parallel orbit search and the `pinchcheck` command line on
//! top of `pinchcheck-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod source;

pub use error::CliError;
