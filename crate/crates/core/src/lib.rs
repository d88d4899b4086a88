//! Day-ahead HVAC set-point scheduling through interconnected recurrent
//! surrogate models, with a simulated plant, an online retraining loop and
//! rule-based / ideal-physics baselines.

pub mod composite;
pub mod datagen;
pub mod error;
pub mod idealopt;
pub mod metrics;
pub mod netcore;
pub mod online;
pub mod plant;
pub mod profile;
pub mod scheduler;

pub use error::{Error, Result};
