//! Consistency checkers for concurrent histories and a deterministic
//! replication simulator.

pub mod catalog;
pub mod checkers;
pub mod cli;
pub mod error;
pub mod gen;
pub mod history;
pub mod render;
pub mod sim;
pub mod specs;
pub mod suites;
pub mod trace;
pub mod value;
pub mod verdict;
pub mod voting;
