//! Certification of quantum channels against a standard device.
//!
//! Two devices are compared through their (trace-normalized) Choi images.
//! The crate offers two pipelines:
//!
//! - **SSFB**: sub- and super-fidelity, built from overlaps `tr(J0 J1)`,
//!   purities and `tr((J0 J1)^2)` that a swap-test style circuit would
//!   estimate. See [`certify::ssfb_certify`].
//! - **VQFE**: truncated-fidelity bounds computed in the eigenbasis of the
//!   standard device, with the eigenbasis found by a classically emulated
//!   variational diagonalization. See [`certify::vqfe_certify`].
//!
//! Supporting modules provide the dense complex kernel ([`numkernel`]),
//! channel representations ([`channels`]), the fidelity functionals
//! ([`fidelity`]), random channel sampling ([`randchan`]), the variational
//! diagonalizer ([`vqsd`]) and the Monte Carlo experiment drivers
//! ([`experiments`]).

pub mod certify;
pub mod channels;
pub mod error;
pub mod experiments;
pub mod fidelity;
pub mod numkernel;
pub mod randchan;
pub mod vqsd;

pub use channels::{ChoiMatrix, DensityMatrix, KrausChannel};
pub use error::{Error, Result};
pub use numkernel::CMatrix;
