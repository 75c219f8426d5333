//! Command-line front end for `sdpi-est`: flat configs in, CSV or JSON
//! tables out.

pub mod commands;
pub mod config;
pub mod error;
pub mod params;
pub mod syntax;
pub mod table;

pub use commands::{run, Report};
pub use config::{parse_config, parse_flag_pairs, Config};
pub use error::{CliError, CliResult};
pub use syntax::{parse_channel, parse_grid};
pub use table::{parse_output, OutputFile, Table};

/// Environment variable that redirects relative `--out` paths.
pub const OUT_DIR_ENV: &str = "SDPI_EST_OUT_DIR";
