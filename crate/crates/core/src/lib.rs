//! RIS-assisted uplink localization: channel simulation, an LSTM active
//! sensing policy trained by reverse-mode differentiation, a Bayesian
//! Fisher-information baseline and non-adaptive baselines.

pub mod autodiff;
pub mod baselines;
pub mod bcrlb;
pub mod channel;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod geometry;
pub mod policy;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
