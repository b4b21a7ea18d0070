//! Numerical toolkit for one-dimensional stochastic Volterra equations with
//! singular power-law kernels `(t - s)^{-alpha}`, `alpha in [0, 1/2)`.
//!
//! The crate covers the computational objects that appear around such
//! equations: the kernel and the probability density family it generates
//! ([`kernel`]), squared-Bessel transition densities and fractional-order
//! modified Bessel functions ([`bessel`]), drift/diffusion coefficient pairs
//! with regularity validation ([`coefficients`]), reproducible Brownian
//! grids with bridge refinement ([`driver`]), a Volterra-Euler scheme and
//! its random-field lift ([`solver`]), Yamada-Watanabe mollifier machinery
//! ([`yw`]), and end-to-end verification experiments such as common-noise
//! Picard uniqueness runs and distributional-SPDE residuals ([`verify`]).
//!
//! The crate is `no_std` (with `alloc`); all transcendentals go through
//! [`libm`], which keeps results bit-identical across platforms. IO, file
//! formats and the command line live in the companion `volterra-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bessel;
pub mod coefficients;
pub mod driver;
pub mod error;
pub mod kernel;
pub mod math;
pub mod quad;
pub mod solver;
pub mod verify;
pub mod yw;

pub use coefficients::{Coefficient, CoefficientPair, InitialCondition};
pub use driver::BrownianGrid;
pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use solver::{KernelNormalization, RandomField, VolterraSolution};
