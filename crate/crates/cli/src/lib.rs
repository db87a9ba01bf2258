//! Command-line entry point and HTTP service for reactive motion synthesis.

pub mod cli;
pub mod service;
pub mod synthesis;
