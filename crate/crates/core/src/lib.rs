pub mod advection;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod limiter;
pub mod experiments;
pub mod metrics;
pub mod quadrature;
pub mod reconstruction;
pub mod testcases;
pub mod timestepping;
pub mod windrecon;

pub use error::{Error, Result};
