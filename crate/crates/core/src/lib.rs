//! Dynamical splittings, Margulis invariants and Schottky-type affine groups
//! for sl(n,R) and so(n,1).

pub mod error;
pub mod ext_affine;
pub mod json;
pub mod lie_model;
pub mod linalg;
pub mod par;
pub mod proximal;
pub mod rng;
pub mod schottky;

pub use error::{Error, Result};
pub use lie_model::{build_model, Family, LieModel, ModelSpec};
