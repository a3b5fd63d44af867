//! The `ttg` command-line tool and HTTP service.

pub mod cli;
pub mod profile;
pub mod render;
pub mod service;

pub use cli::{run, Cli};

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
