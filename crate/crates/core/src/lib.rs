//! Spectra of the Dirichlet Laplacian and the 2D Stokes operator on gridded
//! planar domains, together with executable versions of the Li–Yau-type
//! lower bounds, Fourier frame bounds, the Lieb–Thirring density inequality
//! and the Navier–Stokes attractor-dimension estimate.

pub mod bounds;
pub mod cholesky;
pub mod eig;
pub mod extrapolate;
pub mod frame;
pub mod grid;
pub mod lt_attractor;
pub mod operators;
pub mod report;
pub mod sparse;
