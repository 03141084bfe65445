//! Coherence of the electrons coupled to a single cluster.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{CoherenceSeries, InitialState, LevelPair, PulseSequence};
use crate::bathgen::BathConfiguration;
use crate::spinham::{
    cluster_hamiltonian, cluster_hamiltonian_with_capacity, electron_eigenbasis, pi_xx_pulse, ElectronSystem,
    EnergyBasis,
};
use crate::{Error, Result};

/// Complex normalized coherences per pair in [`LevelPair::ALL`] order.
pub type ClusterCoherence = [Vec<C64>; 6];

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn to_dmatrix4(m: &nalgebra::Matrix4<C64>) -> DMatrix<C64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

fn phases(eigenvalues: &[f64], tau: f64) -> Vec<C64> {
    eigenvalues.iter().map(|&e| C64::from_polar(1.0, -TWO_PI * e * tau)).collect()
}

fn scale_rows(m: &mut DMatrix<C64>, factors: &[C64]) {
    for (i, f) in factors.iter().enumerate() {
        for v in m.row_mut(i).iter_mut() {
            *v *= f;
        }
    }
}

/// Eigendecomposition of one cluster Hamiltonian with everything needed to
/// evaluate the reduced electron coherences at arbitrary times.
///
/// With `H = V Λ V†`, `X = V† (|ψ⟩ ⊗ |b⟩)` over bath basis states `b`,
/// `G = (E ⊗ 1)† V` and `P = V† (π_xx ⊗ 1) V`, the amplitudes
/// `M[(α,b'), b] = ⟨E_α, b'|U_N|ψ, b⟩` are `G Φ X` (N = 0) or
/// `G Φ P Φ X` (N = 1) with `Φ = e^{-i2πΛτ}`.
pub struct ClusterPropagator {
    bath_dim: usize,
    eigenvalues: Vec<f64>,
    x: DMatrix<C64>,
    g: DMatrix<C64>,
    pulse: DMatrix<C64>,
    norms: [C64; 6],
}

impl ClusterPropagator {
    pub fn new(
        sys: &ElectronSystem,
        bath: &BathConfiguration,
        cluster: &[usize],
        basis: &EnergyBasis,
        psi: &InitialState,
    ) -> Result<Self> {
        let norms = psi.normalizations(basis)?;
        let h = cluster_hamiltonian(sys, bath, cluster)?;
        let bath_dim = 1usize << cluster.len();
        let dim = 4 * bath_dim;
        let eig = h.symmetric_eigen();
        let v = eig.eigenvectors;
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();

        let id = DMatrix::<C64>::identity(bath_dim, bath_dim);
        let mut initial = DMatrix::<C64>::zeros(dim, bath_dim);
        for b in 0..bath_dim {
            for e in 0..4 {
                initial[(e * bath_dim + b, b)] = psi.0[e];
            }
        }
        let x = v.adjoint() * initial;
        let g = to_dmatrix4(&basis.vectors).kronecker(&id).adjoint() * &v;
        let pulse = v.adjoint() * to_dmatrix4(&pi_xx_pulse()).kronecker(&id) * &v;
        Ok(ClusterPropagator {
            bath_dim,
            eigenvalues,
            x,
            g,
            pulse,
            norms,
        })
    }

    /// `⟨E_α, b'|U_N|ψ, b⟩` at total time `t`.
    fn amplitudes(&self, seq: PulseSequence, t: f64) -> DMatrix<C64> {
        let phi = phases(&self.eigenvalues, seq.segment(t));
        let mut y = self.x.clone();
        scale_rows(&mut y, &phi);
        if seq == PulseSequence::Hahn {
            y = &self.pulse * y;
            scale_rows(&mut y, &phi);
        }
        &self.g * y
    }

    /// Normalized coherences on the time grid.
    pub fn coherences(&self, seq: PulseSequence, times: &[f64]) -> ClusterCoherence {
        let mut out: ClusterCoherence = Default::default();
        let nb = self.bath_dim;
        let weight = 1.0 / nb as f64;
        for &t in times {
            let m = self.amplitudes(seq, t);
            for pair in LevelPair::ALL {
                let (a, b) = pair.levels();
                let mut acc = C64::from(0.0);
                for bp in 0..nb {
                    let ra = a.index() * nb + bp;
                    let rb = b.index() * nb + bp;
                    for col in 0..nb {
                        acc += m[(ra, col)] * m[(rb, col)].conj();
                    }
                }
                out[pair.index()].push(acc * weight / self.norms[pair.index()]);
            }
        }
        out
    }
}

/// Coherences of the electrons coupled only to `cluster` (interactions with
/// the rest of the bath dropped).
pub fn evolve_cluster_coherence(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    cluster: &[usize],
    seq: PulseSequence,
    times: &[f64],
    psi: Option<&InitialState>,
) -> Result<ClusterCoherence> {
    let basis = electron_eigenbasis(sys)?;
    let psi = psi.copied().unwrap_or_else(|| InitialState::equal_superposition(&basis));
    Ok(ClusterPropagator::new(sys, bath, cluster, &basis, &psi)?.coherences(seq, times))
}

/// Largest bath [`exact_reference`] accepts (total dimension 256).
pub const EXACT_MAX_SPINS: usize = 6;

/// Direct evolution of the full electron + bath density matrix, without
/// any expansion: builds `U_N` explicitly, propagates `ρ(0)` and takes the
/// partial trace over the bath.
pub fn exact_reference(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    seq: PulseSequence,
    times: &[f64],
    psi: Option<&InitialState>,
) -> Result<CoherenceSeries> {
    let k = bath.sites.len();
    if k > EXACT_MAX_SPINS {
        return Err(Error::Capacity {
            size: k,
            max: EXACT_MAX_SPINS,
        });
    }
    let basis = electron_eigenbasis(sys)?;
    let psi = psi.copied().unwrap_or_else(|| InitialState::equal_superposition(&basis));
    let norms = psi.normalizations(&basis)?;
    let all: Vec<usize> = (0..k).collect();
    let h = cluster_hamiltonian_with_capacity(sys, bath, &all, EXACT_MAX_SPINS)?;
    let nb = 1usize << k;
    let dim = 4 * nb;
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;

    let rho_s = DMatrix::from_fn(4, 4, |i, j| psi.0[i] * psi.0[j].conj());
    let rho0 = rho_s.kronecker(&(DMatrix::<C64>::identity(nb, nb) * C64::from(1.0 / nb as f64)));
    let pulse = to_dmatrix4(&pi_xx_pulse()).kronecker(&DMatrix::<C64>::identity(nb, nb));
    let levels = to_dmatrix4(&basis.vectors);

    let mut values: ClusterCoherence = Default::default();
    for &t in times {
        let tau = seq.segment(t);
        let phi = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases(
            eig.eigenvalues.as_slice(),
            tau,
        )));
        let free = v * phi * v.adjoint();
        let u = match seq {
            PulseSequence::Fid => free,
            PulseSequence::Hahn => &free * &pulse * &free,
        };
        let rho = &u * &rho0 * u.adjoint();
        let mut reduced = DMatrix::<C64>::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::from(0.0);
                for b in 0..nb {
                    acc += rho[(i * nb + b, j * nb + b)];
                }
                reduced[(i, j)] = acc;
            }
        }
        debug_assert_eq!(rho.nrows(), dim);
        let in_levels = levels.adjoint() * reduced * &levels;
        for pair in LevelPair::ALL {
            let (a, b) = pair.levels();
            values[pair.index()].push(in_levels[(a.index(), b.index())] / norms[pair.index()]);
        }
    }
    Ok(CoherenceSeries::from_complex(times.to_vec(), values, vec![false; times.len()]))
}
