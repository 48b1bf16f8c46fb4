//! Design-space exploration for heterogeneous chiplet platforms running
//! transformer inference.

pub mod cli;
pub mod error;
pub mod netsim;
pub mod noi;
pub mod optimizer;
pub mod pipeline;
pub mod platform;
pub mod rng;
pub mod sfc;
pub mod traffic;
pub mod workload;

pub use error::{Error, Result};
