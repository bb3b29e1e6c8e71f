//! Spotlight-resonance analysis: rotate a spotlight through the plane spanned
//! by each pair of basis vectors and record the fraction of activations that
//! fall inside a cosine cone around it. Peaks that track the basis vectors
//! indicate that a representation aligns with that basis.

pub mod activation;
pub mod autoencoder;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod io;
pub mod plot;
pub mod srm;

pub use error::{Result, SrmError};
