pub mod bench;
pub mod cli;
pub mod curation;
pub mod dataset;
pub mod metrics;
pub mod mock;
