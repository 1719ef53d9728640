//! Instance generation, experiment orchestration, trace files and audits
//! for `bregman-kit`.

pub mod audit;
pub mod csv;
pub mod instance;
pub mod manifest;
pub mod plot;
pub mod rng;
pub mod runner;
pub mod store;
