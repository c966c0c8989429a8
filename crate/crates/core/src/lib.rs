//! Delay-adaptive boundary control of multi-agent formations whose agents
//! sit on a cylinder: agent positions follow reaction-advection-diffusion
//! dynamics driven through the leader ring after an unknown input delay.

pub mod controller;
pub mod error;
pub mod estimator;
pub mod field;
pub mod history;
pub mod kernels;
pub mod manufactured;
pub mod output;
pub mod plant;
pub mod quadrature;
pub mod scenario;
pub mod sim;
pub mod special;
pub mod steady;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
