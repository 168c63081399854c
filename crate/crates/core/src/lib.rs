//! Directional statistics toolkit built around an upper-Riemann envelope
//! rejection sampler.
//!
//! The crate covers four layers:
//!
//! * [`special`], [`quadrature`] and [`quartic`]: numerical building blocks.
//! * [`circular`] and [`torus`]: circular densities, the curved-torus
//!   geometry and the area-weighted toroidal distributions.
//! * [`envelope`] and [`bench`]: the piecewise-constant envelope sampler,
//!   the Best–Fisher baseline and the acceptance-rate benchmark harness.
//! * [`analysis`], [`inference`] and [`ingest`]: closed-form summaries of the
//!   voncos family, maximum-likelihood fitting, goodness-of-fit tests and
//!   data loading.

pub mod analysis;
pub mod bench;
pub mod circular;
pub mod envelope;
mod error;
pub mod inference;
pub mod ingest;
pub mod quadrature;
pub mod quartic;
pub mod special;
pub mod torus;

pub use circular::{wrap_angle, CircularDensity, Density, DistParams, TWO_PI};
pub use envelope::{Envelope, HeightRule, RngStream, SampleStats};
pub use error::{Error, Result};
pub use quadrature::QuadratureSpec;
pub use torus::{ToroidalDensity, TorusGeometry, TorusPoint, VonCosParams};
