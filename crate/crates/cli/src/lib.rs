//! Command-line front end for `wpress-core`: configuration, dispatch,
//! structured result records, and the `verify` suites.

pub mod config;
pub mod record;
pub mod run;
pub mod suites;

pub use config::{Cli, RunConfig};
pub use record::ResultRecord;
pub use run::run;
