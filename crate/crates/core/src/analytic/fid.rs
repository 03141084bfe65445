//! Free induction decay from a static Overhauser field.

use crate::bathgen::BathConfiguration;
use crate::gcce::{CoherenceSeries, LevelPair};
use crate::spinham::ElectronSystem;
use crate::{Error, Result};

/// Overhauser spread `σ` (Hz) and `T2* = √2 / (2πσ)` (s) of the
/// `L_-1,1` coherence. An empty bath gives `(0, ∞)`.
pub fn fid_sigma_t2star(sys: &ElectronSystem, bath: &BathConfiguration) -> Result<(f64, f64)> {
    if sys.include_ee_dipolar {
        return Err(Error::UnsupportedRegime);
    }
    let var: f64 = bath
        .sites
        .iter()
        .map(|s| {
            let a = sys.hyperfine_zz_sum(&s.position, s.gamma);
            0.25 * a * a
        })
        .sum();
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return Ok((0.0, f64::INFINITY));
    }
    Ok((sigma, std::f64::consts::SQRT_2 / (2.0 * std::f64::consts::PI * sigma)))
}

fn assemble(times: &[f64], full: impl Fn(f64) -> f64) -> CoherenceSeries {
    let mut moduli: [Vec<f64>; 6] = Default::default();
    for pair in LevelPair::ALL {
        moduli[pair.index()] = match pair {
            LevelPair::SZero => vec![1.0; times.len()],
            LevelPair::MinusPlus => times.iter().map(|&t| full(t)).collect(),
            _ => times.iter().map(|&t| full(0.5 * t)).collect(),
        };
    }
    CoherenceSeries {
        times: times.to_vec(),
        moduli,
        complex: None,
        flagged: vec![false; times.len()],
    }
}

/// Gaussian FID: `L_-1,1 = exp[-(t/T2*)²]`, the four pairs involving one
/// polarized level decay at `t/2`, and `L_S,0 = 1`.
pub fn fid_analytic_series(sys: &ElectronSystem, bath: &BathConfiguration, times: &[f64]) -> Result<CoherenceSeries> {
    let (_, t2) = fid_sigma_t2star(sys, bath)?;
    Ok(assemble(times, |t| (-(t / t2).powi(2)).exp()))
}

/// Secular FID before the Gaussian approximation: `L_-1,1 = Π_n |cos(π a_n t)|`
/// with `a_n = A_1zz + A_2zz`.
pub fn fid_secular_series(sys: &ElectronSystem, bath: &BathConfiguration, times: &[f64]) -> Result<CoherenceSeries> {
    if sys.include_ee_dipolar {
        return Err(Error::UnsupportedRegime);
    }
    let a: Vec<f64> = bath
        .sites
        .iter()
        .map(|s| sys.hyperfine_zz_sum(&s.position, s.gamma))
        .collect();
    Ok(assemble(times, |t| {
        a.iter()
            .map(|&an| (std::f64::consts::PI * an * t).cos().abs())
            .product()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathgen::{BathSpec, NuclearSite};
    use crate::gcce::{gcce_coherence, linear_times, GcceOptions, PulseSequence};
    use crate::Vec3;

    fn bath_of(positions: &[[f64; 3]], sys: &ElectronSystem) -> BathConfiguration {
        let sites = positions
            .iter()
            .map(|p| NuclearSite::proton(Vec3::new(p[0], p[1], p[2])))
            .collect();
        BathConfiguration::from_sites(sites, BathSpec::default(), sys.electron_positions)
    }

    #[test]
    fn one_and_two_protons() {
        let sys = ElectronSystem::new(5.0, 0.0, 10e9, 1.0);
        let one = bath_of(&[[0.0, 0.0, 9.0]], &sys);
        let a = sys.hyperfine_zz_sum(&Vec3::new(0.0, 0.0, 9.0), one.sites[0].gamma);
        let (s1, _) = fid_sigma_t2star(&sys, &one).unwrap();
        assert!((s1 - a.abs() / 2.0).abs() < 1e-12 * s1);
        let two = bath_of(&[[0.0, 0.0, 9.0], [0.0, 0.0, -9.0]], &sys);
        let (s2, _) = fid_sigma_t2star(&sys, &two).unwrap();
        assert!((s2 - std::f64::consts::SQRT_2 * s1).abs() < 1e-12 * s2);
    }

    #[test]
    fn empty_bath_never_decays() {
        let sys = ElectronSystem::new(5.0, 0.0, 10e9, 1.0);
        let bath = bath_of(&[], &sys);
        assert_eq!(fid_sigma_t2star(&sys, &bath).unwrap(), (0.0, f64::INFINITY));
        let l = fid_analytic_series(&sys, &bath, &[0.0, 1e-3]).unwrap();
        assert!(l.moduli.iter().flatten().all(|&v| v == 1.0));
    }

    #[test]
    fn half_time_chain() {
        let sys = ElectronSystem::new(5.0, 0.0, 10e9, 1.0);
        let bath = bath_of(&[[6.0, 2.0, 1.0], [0.0, 7.0, 3.0]], &sys);
        let times = linear_times(4e-6, 41);
        let l = fid_analytic_series(&sys, &bath, &times).unwrap();
        assert!(l.moduli.iter().all(|m| m[0] == 1.0));
        for i in 0..=20 {
            let a = l.pair(LevelPair::MinusS)[2 * i];
            let b = l.pair(LevelPair::MinusPlus)[i];
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn secular_product_matches_order_one_gcce() {
        // The pseudo-secular hyperfine shifts the nuclear precession by
        // ~b²/ω_I in the polarized levels only; the shift cancels in L_-1,1
        // and fades as 1/B in the other four.
        let times = linear_times(2e-5, 21);
        let opts = GcceOptions::default().with_order(1);
        for (field, tol) in [(3.0, 1e-3), (300.0, 1e-3)] {
            let sys = ElectronSystem::new(5.0, 0.3, 10e9, field);
            let bath = bath_of(&[[6.0, 2.0, 1.0], [0.0, 7.0, 3.0], [-5.0, 1.0, -4.0]], &sys);
            let secular = fid_secular_series(&sys, &bath, &times).unwrap();
            let l = gcce_coherence(&sys, &bath, PulseSequence::Fid, &times, &opts).unwrap().into_series();
            for pair in LevelPair::ALL {
                if field < 100.0 && !matches!(pair, LevelPair::MinusPlus | LevelPair::SZero) {
                    continue;
                }
                for i in 0..times.len() {
                    let d = (secular.pair(pair)[i] - l.pair(pair)[i]).abs();
                    assert!(d < tol, "B {field} {pair} t {i}: {d}");
                }
            }
        }
    }
}
