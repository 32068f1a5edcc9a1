//! File formats and the command line for streetgen.

pub mod cli;
pub mod io;

pub use cli::run;
