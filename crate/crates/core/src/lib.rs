//! Online installation of joint compute+network intents onto a vehicular
//! edge substrate, with a priority-aware scheduler, a location-aware
//! embedder, classical VNE baselines, trace-driven mobility scenarios, and
//! full metrics accounting.

pub mod baselines;
pub mod checker;
pub mod config;
pub mod error;
pub mod intents;
pub mod lam;
pub mod metrics;
pub mod pai;
pub mod scenario;
pub mod seed;
pub mod sim;
pub mod substrate;

pub use error::{Error, Result};
