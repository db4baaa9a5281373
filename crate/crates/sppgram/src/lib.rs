//! Command-line front end, file formats and thread-pool execution for the
//! `sppgram-core` period-detection engine.

pub mod bench;
pub mod config;
pub mod io;
pub mod parallel;
pub mod selftest;

pub use sppgram_core as core;
