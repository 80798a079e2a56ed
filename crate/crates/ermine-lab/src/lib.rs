//! Experiment harness around `ermine-core`: a seeded, thread-count-invariant
//! replication engine with rate fitting and tail-versus-bound comparison
//! ([`montecarlo`]), strict TOML configuration ([`config`]), deterministic
//! artifact emission ([`report`]), and the `ermine` command-line front end
//! ([`cli`]).
//!
//! The core crate is `no_std` and carries the mathematics; everything that
//! touches files, wall clocks, thread pools, or process exit codes lives
//! here.

// pub mod cli;
pub mod config;
pub mod montecarlo;
pub mod report;
