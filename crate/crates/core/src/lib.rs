//! Simulation and measurement of causal random planar maps with
//! heavy-tailed faces and of their scaling limit, the stable shredded
//! sphere.

pub mod error;
pub mod cli;
pub mod codec;
pub mod excursion;
pub mod experiments;
pub mod explore;
pub mod heightvar;
pub mod io;
pub mod map;
pub mod metrics;
pub mod rng;
pub mod stats;
pub mod steps;

pub use error::{Error, Result};
