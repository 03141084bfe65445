//! Pair-correlation approximation (PCA) of the Hahn-echo coherences.
//!
//! Starting from a random product state of the bath, every flip-flop
//! `|↓_n ↑_m⟩ → |↑_n ↓_m⟩` becomes a pseudospin starting in `|↓⟩` and
//! precessing about a level-dependent field `χ_α = (2C, 0, D + E_α)`. Each
//! coherence is a product of single-pseudospin overlaps.

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bathgen::BathConfiguration;
use crate::gcce::{CoherenceSeries, Level, LevelPair};
use crate::spinham::{pair_coupling_dnm, pure_dephasing_check, ElectronSystem};
use crate::{Error, Result, Vec3};

/// Pairs with `|d_nm|` below this many Hz are not enumerated.
pub const DEFAULT_COUPLING_FLOOR: f64 = 1.0;

const PAR_CHUNK: usize = 4096;

/// Product state of the bath: `j_n = ±1/2` per site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NuclearProductState {
    /// `true` for spin up (`j = +1/2`).
    pub up: Vec<bool>,
}

impl NuclearProductState {
    pub fn j(&self, n: usize) -> f64 {
        if self.up[n] {
            0.5
        } else {
            -0.5
        }
    }

    pub fn count_up(&self) -> usize {
        self.up.iter().filter(|&&u| u).count()
    }
}

/// Random product state with up and down counts differing by at most one.
pub fn sample_initial_state(bath: &BathConfiguration, seed: u64) -> NuclearProductState {
    let n = bath.sites.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut up: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    if n % 2 == 1 && rand::RngExt::random::<bool>(&mut rng) {
        up[n - 1] = true;
    }
    up.shuffle(&mut rng);
    NuclearProductState { up }
}

/// One flip-flop pseudospin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudospinExcitation {
    /// Site initially down.
    pub n: usize,
    /// Site initially up.
    pub m: usize,
    /// Flip-flop matrix element `C = d_nm`, Hz (same for every level).
    pub c: f64,
    /// Ising detuning `D`, Hz (same for every level).
    pub d: f64,
    /// Hyperfine contrast `E_α` in [`Level::ALL`] order, Hz.
    pub e: [f64; 4],
}

impl PseudospinExcitation {
    /// Effective field `χ_α = (2C, 0, D + E_α)`, Hz.
    pub fn chi(&self, level: Level) -> Vec3 {
        Vec3::new(2.0 * self.c, 0.0, self.d + self.e[level.index()])
    }

    /// `E_-1`, the hyperfine contrast of the pair.
    pub fn contrast(&self) -> f64 {
        self.e[Level::Minus.index()]
    }
}

/// Enumerates the pseudospins of `state` with `|d_nm| ≥ floor`.
pub fn pseudospin_fields(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    state: &NuclearProductState,
    floor: f64,
) -> Result<Vec<PseudospinExcitation>> {
    if sys.include_ee_dipolar {
        return Err(Error::UnsupportedRegime);
    }
    if state.up.len() != bath.sites.len() {
        return Err(Error::InvalidParameter("product state does not match the bath".into()));
    }
    pure_dephasing_check(sys, bath)?;
    let n = bath.sites.len();
    let a: Vec<f64> = bath
        .sites
        .iter()
        .map(|s| sys.hyperfine_zz_sum(&s.position, s.gamma))
        .collect();
    let coupling = |p: usize, q: usize| -> Result<f64> {
        let (sp, sq) = (&bath.sites[p], &bath.sites[q]);
        pair_coupling_dnm(&(sp.position - sq.position), sp.gamma, sq.gamma)
    };
    let mut dmat = vec![0.0; n * n];
    for p in 0..n {
        for q in p + 1..n {
            let d = coupling(p, q)?;
            dmat[p * n + q] = d;
            dmat[q * n + p] = d;
        }
    }
    // h_p = Σ_{q≠p} d_pq j_q
    let h: Vec<f64> = (0..n)
        .map(|p| (0..n).map(|q| dmat[p * n + q] * state.j(q)).sum())
        .collect();

    let mut out = Vec::new();
    for down in (0..n).filter(|&i| !state.up[i]) {
        for up in (0..n).filter(|&i| state.up[i]) {
            let c = dmat[down * n + up];
            if c.abs() < floor {
                continue;
            }
            let d = -4.0 * ((h[down] - c * state.j(up)) - (h[up] - c * state.j(down)));
            let e_minus = -0.5 * (a[down] - a[up]);
            out.push(PseudospinExcitation {
                n: down,
                m: up,
                c,
                d,
                e: [0.0, e_minus, 0.0, -e_minus],
            });
        }
    }
    Ok(out)
}

/// SU(2) element `[[a, -b*], [b, a*]]`.
#[derive(Debug, Clone, Copy)]
struct Su2 {
    a: C64,
    b: C64,
}

impl Su2 {
    /// `exp(-i 2π s χ·σ / 2)` for a field with `χ_y = 0`.
    fn rotation(chi: &Vec3, s: f64) -> Su2 {
        let len = chi.norm();
        if len == 0.0 {
            return Su2 {
                a: C64::from(1.0),
                b: C64::from(0.0),
            };
        }
        let (sin, cos) = (std::f64::consts::PI * len * s).sin_cos();
        Su2 {
            a: C64::new(cos, -sin * chi.z / len),
            b: C64::new(0.0, -sin * chi.x / len),
        }
    }

    fn mul(self, o: Su2) -> Su2 {
        Su2 {
            a: self.a * o.a - self.b.conj() * o.b,
            b: self.b * o.a + self.a.conj() * o.b,
        }
    }

    fn adjoint(self) -> Su2 {
        Su2 {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// `|⟨↓|U|↓⟩|`.
    fn down_overlap(self) -> f64 {
        self.a.norm()
    }
}

/// Overlaps for one pseudospin at segment length `tau`:
/// `(F_-1,0, F_0,1, F_-1,1)`; the others follow from `χ_S = χ_0`.
fn overlaps(x: &PseudospinExcitation, tau: f64) -> [f64; 3] {
    let r_minus = Su2::rotation(&x.chi(Level::Minus), tau);
    let r_plus = Su2::rotation(&x.chi(Level::Plus), tau);
    let r_zero = Su2::rotation(&x.chi(Level::Zero), 2.0 * tau);
    let echo = r_minus.mul(r_plus);
    let f_m0 = r_zero.adjoint().mul(echo).down_overlap();
    let f_01 = r_plus.mul(r_minus).adjoint().mul(r_zero).down_overlap();
    let f_m1 = r_minus.adjoint().mul(r_plus.adjoint()).mul(echo).down_overlap();
    [f_m0, f_01, f_m1]
}

/// Decoherence `f_k` of one pair for `L_-1,0` at segment length `tau`.
pub fn pair_decoherence_fk(c: f64, e: f64, d: f64, tau: f64) -> f64 {
    let x = PseudospinExcitation {
        n: 0,
        m: 0,
        c,
        d,
        e: [0.0, e, 0.0, -e],
    };
    (1.0 - overlaps(&x, tau)[0]).max(0.0)
}

/// Decoherence `g_k` of one pair for `L_-1,1` at segment length `tau`.
pub fn pair_decoherence_gk(c: f64, e: f64, d: f64, tau: f64) -> f64 {
    let x = PseudospinExcitation {
        n: 0,
        m: 0,
        c,
        d,
        e: [0.0, e, 0.0, -e],
    };
    (1.0 - overlaps(&x, tau)[2]).max(0.0)
}

/// PCA Hahn-echo coherences on a grid of total times `t = 2τ`.
pub fn pca_hahn_coherences(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    state: &NuclearProductState,
    times: &[f64],
) -> Result<CoherenceSeries> {
    let excitations = pseudospin_fields(sys, bath, state, DEFAULT_COUPLING_FLOOR)?;
    Ok(pca_from_excitations(&excitations, times))
}

/// PCA coherences for a precomputed set of pseudospins.
pub fn pca_from_excitations(excitations: &[PseudospinExcitation], times: &[f64]) -> CoherenceSeries {
    let nt = times.len();
    let partials: Vec<[Vec<f64>; 3]> = excitations
        .par_chunks(PAR_CHUNK)
        .map(|chunk| {
            let mut logs: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; nt]);
            for x in chunk {
                for (i, &t) in times.iter().enumerate() {
                    let f = overlaps(x, 0.5 * t);
                    for k in 0..3 {
                        logs[k][i] += f[k].ln();
                    }
                }
            }
            logs
        })
        .collect();
    let mut logs: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; nt]);
    for part in &partials {
        for k in 0..3 {
            for i in 0..nt {
                logs[k][i] += part[k][i];
            }
        }
    }
    let [m0, p01, m1] = logs.map(|v| v.into_iter().map(f64::exp).collect::<Vec<f64>>());
    let mut moduli: [Vec<f64>; 6] = Default::default();
    moduli[LevelPair::MinusZero.index()] = m0.clone();
    moduli[LevelPair::MinusS.index()] = m0;
    moduli[LevelPair::PlusZero.index()] = p01.clone();
    moduli[LevelPair::PlusS.index()] = p01;
    moduli[LevelPair::MinusPlus.index()] = m1;
    moduli[LevelPair::SZero.index()] = vec![1.0; nt];
    CoherenceSeries {
        times: times.to_vec(),
        moduli,
        complex: None,
        flagged: vec![false; nt],
    }
}
