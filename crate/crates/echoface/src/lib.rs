//! Command-line front end for echoface: WAV and JSON/CSV file formats,
//! configuration loading and one module per subcommand.

pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;
pub mod wav;
