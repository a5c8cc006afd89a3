//! Projector phases, Bergman-type Gaussian kernels and linear symplectic
//! normal forms.
//!
//! Coordinates on R^{2n} are ordered (x_1, y_1, …, x_n, y_n) with
//! z_j = x_j + i y_j. A phase φ(α, β) has blocks A = ∂²_αφ, B = ∂_α∂_βφ,
//! C = ∂²_βφ.

pub mod critical;
pub mod error;
pub mod gauss;
pub mod geometry;
pub mod linalg;
pub mod operator;
pub mod phase;
pub mod poly;
pub mod report;
pub mod symplin;

pub use error::{Error, Result};
