//! Bayesian VARs with time-varying parameters, stochastic volatility and
//! horseshoe shrinkage, fitted to real-time data vintages, together with the
//! machinery to compare real-time and pseudo out-of-sample forecast accuracy.

pub mod error;
pub mod factors;
pub mod forecast;
pub mod harness;
pub mod linalg;
pub mod month;
pub mod nowcast;
pub mod panel;
pub mod sampler;
pub mod score;
pub mod vintage;

pub use error::{Error, Result};
pub use month::Month;
