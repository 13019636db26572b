//! AUC optimisation from positive, negative and unlabeled data.
//!
//! The pieces are layered: [`data`] loads and generates samples, [`basis`]
//! builds kernel features, [`risk`] evaluates empirical AUC risks, [`solver`]
//! minimises the squared-loss risks in closed form, [`modelsel`] picks
//! hyperparameters by cross-validation and [`analysis`] hosts the variance
//! and prior-sensitivity studies. [`oracle`] holds slow reference versions.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod data;
pub mod error;
pub mod modelsel;
pub mod oracle;
pub mod risk;
mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use rng::{derive_seed, stream, StreamRng};
