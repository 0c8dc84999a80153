//! Electromagnetic inverse scattering toolkit.
//!
//! Generates synthetic multi-static far-field data by solving the
//! time-harmonic Maxwell volume integral equation in bianisotropic media
//! with an FFT-accelerated spectral solver, and reconstructs scatterer
//! location and shape from far-field data with sampling-type indicator
//! functions (modified orthogonality sampling, factorization method,
//! plain orthogonality sampling). Sparse limited-aperture experimental
//! measurement files can be ingested and inverted with the same pipeline.
//!
//! The crate is organised along the data flow:
//!
//! * [`sphere`]: direction sets and quadrature on the unit sphere,
//! * [`em`]: plane waves, probe fields, Green's function, resolution kernels,
//! * [`material`]: voxel material models and well-posedness auditing,
//! * [`forward`]: the spectral Lippmann-Schwinger solver and far-field synthesis,
//! * [`farfield`]: the far-field data container and its ASCII format,
//! * [`operator`]: the discrete far-field operator, spectra, FM/OSM indicators,
//! * [`imaging`]: the MOSM imaging function, grid scans, exports, diagnostics,
//! * [`fresnel`]: experimental measurement file ingestion,
//! * [`oracle`]: independent closed-form references used by validation code.
//!
//! With the default `parallel` feature, grid scans and multi-direction
//! forward solves distribute over a rayon pool; without it every loop runs
//! sequentially. Results are bitwise identical either way: each work item
//! writes to its own output slot and reductions keep a fixed order.

pub mod em;
pub mod error;
pub mod farfield;
pub mod forward;
pub mod fresnel;
pub mod imaging;
pub mod linalg;
pub mod material;
pub mod operator;
pub mod oracle;
pub mod sphere;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
