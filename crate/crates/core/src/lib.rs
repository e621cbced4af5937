//! Constructive refined Shapley–Folkman decompositions, k-th nonconvexity measures
//! and duality-gap bounds for separable nonconvex programs.

pub mod apps;
pub mod error;
pub mod numlin;
pub mod settings;

pub use error::{Error, Result};
pub use settings::{Caps, Settings, Tolerances};
pub mod gapbounds;
pub mod hulls;
pub mod nonconvexity;
pub mod sfdecomp;
