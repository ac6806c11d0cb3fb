//! Computational geometric tomography for origin-symmetric bodies.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Gamma function, Gegenbauer polynomials, sphere areas.
//! - [`sphere`]: product quadrature on `S^{n-1}`, spherical-harmonic
//!   projection and diagonal multiplier operators.
//! - [`bodies`]: ball, ellipsoid, `l_p`-ball, perturbed-ball, polytope and
//!   zonotope models with radial, support and curvature data.
//! - [`sections`]: spherical Radon transform, section functions,
//!   intersection-body certificates and the section-side verifiers.
//! - [`spectral`]: Fourier multipliers of homogeneous extensions,
//!   fractional Laplacians, Parseval and positive-definiteness checks.
//! - [`shadows`]: projection functions, mixed volumes, projection-body
//!   certificates and the projection-side verifiers.

pub mod bodies;
pub mod config;
pub mod error;
pub mod report;
pub mod sections;
pub mod shadows;
pub mod spectral;
pub mod specfun;
pub mod sphere;

pub use bodies::{Body, Family, RadiusData};
pub use config::NumericConfig;
pub use error::{Error, Result};
pub use report::VerifierReport;
pub use sphere::{MultiplierSequence, SphereGrid, SphericalFunction, Spectrum};
