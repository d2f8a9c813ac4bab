//! Configuration, verification suite and experiment orchestration.

pub mod config;
pub mod run;
pub mod verify;
