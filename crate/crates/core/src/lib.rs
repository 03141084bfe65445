//! Decoherence of two exchange-coupled electron spins in a random proton bath.
//!
//! The crate is organised by stage of the calculation:
//!
//! * [`bathgen`] places proton spins at random under distance constraints;
//! * [`spinham`] builds electron, bath and interaction Hamiltonians;
//! * [`gcce`] evolves the two-electron reduced density matrix with the
//!   generalized cluster-correlation expansion and an exact small-bath oracle;
//! * [`analytic`] holds the large-field closed forms (pair-correlation
//!   products, Gaussian free induction decay, hyperfine field maps);
//! * [`fitting`] extracts T2 / T2* from coherence curves;
//! * [`config`] and [`runner`] drive whole experiments from a config file.

pub mod analytic;
pub mod bathgen;
pub mod config;
pub mod constants;
mod error;
pub mod fitting;
pub mod gcce;
pub mod runner;
pub mod spinham;

pub use error::{Error, Result};

pub use nalgebra::Vector3;
pub use num_complex::Complex64;

pub type Vec3 = Vector3<f64>;

/// Sizes the global worker pool. Results do not depend on the count.
pub fn set_worker_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {n} worker threads: {e}")))
}
