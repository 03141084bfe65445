//! Physical constants and the unit convention used throughout the crate.
//!
//! Hamiltonians are expressed in linear frequency (Hz), gyromagnetic ratios
//! in Hz/T and lengths in ångström. Propagators carry the 2π explicitly:
//! `U(t) = exp(-i 2π H t)`.
//!
//! The electron gyromagnetic ratio is stored as a magnitude. The electron
//! Zeeman term is written `-γ_e B (S1z + S2z)`, which puts `|↓↓⟩` at
//! `+γ_e B + J/4` and `|↑↑⟩` at `-γ_e B + J/4`.

/// Electron gyromagnetic ratio magnitude, Hz/T.
pub const GAMMA_E: f64 = 2.802495e10;

/// Proton gyromagnetic ratio, Hz/T.
pub const GAMMA_P: f64 = 4.25774785e7;

/// Planck constant, J s (exact, SI 2019).
pub const PLANCK_H: f64 = 6.62607015e-34;

/// Vacuum permeability over 4π, T² m³ / J (CODATA 2018).
pub const MU0_OVER_4PI: f64 = 1.000_000_000_55e-7;

/// Metres per ångström.
pub const ANGSTROM: f64 = 1e-10;

/// Point-dipole coupling prefactor `K(r) = μ0 h γ1 γ2 / (4π r³)` in Hz for
/// `r` in ångström and `γ` in Hz/T.
pub fn dipolar_prefactor(r_angstrom: f64, gamma1: f64, gamma2: f64) -> f64 {
    let r = r_angstrom * ANGSTROM;
    MU0_OVER_4PI * PLANCK_H * gamma1 * gamma2 / (r * r * r)
}
