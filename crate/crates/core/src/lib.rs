pub mod config;
pub mod detector;
pub mod eval;
pub mod findings;
pub mod gateway;
pub mod inject;
pub mod miner;
pub mod prompt;
