//! Hamiltonians of the two-electron / proton-bath system.
//!
//! Electrons are sites 0 and 1 of every product space, followed by the
//! cluster's nuclei in the order given. All energies are in Hz and the
//! static field points along +z; the inter-electron orientation is set by
//! rotating the geometry instead.
//!
//! ```text
//! H   = H_S ⊗ 1 + 1 ⊗ H_B + H_SB
//! H_S = -γ_e B (S1z + S2z) + J S1·S2 [+ S1·P·S2]
//! H_B = -B Σ γ_n I_nz + Σ_{n<m} I_n·D_nm·I_m
//! H_SB = Σ_{j,n} S_j·A_jn·I_n
//! ```

pub mod ops;

use std::fmt;

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bathgen::{reference_electrons, BathConfiguration};
use crate::constants::{dipolar_prefactor, GAMMA_E};
use crate::{Error, Result, Vec3};
use ops::{add_one_site, add_two_site, bilinear_operator, hermitize, linear_operator};

/// Largest cluster [`cluster_hamiltonian`] accepts by default.
pub const MAX_CLUSTER_SIZE: usize = 6;

/// Point-dipole coupling tensor `-K(r) [3 r̂⊗r̂ - 1]` in Hz.
pub fn dipolar_tensor(r: &Vec3, gamma1: f64, gamma2: f64) -> Result<Matrix3<f64>> {
    let len = r.norm();
    if !(len > 0.0) {
        return Err(Error::ZeroDistance);
    }
    let k = dipolar_prefactor(len, gamma1, gamma2);
    let u = r / len;
    Ok((u * u.transpose() * 3.0 - Matrix3::identity()) * (-k))
}

/// Secular flip-flop coupling `d_nm = -(1/4) D_zz` between two nuclei, Hz.
/// Proportional to `-(1 - 3cos²θ)/R³` with θ measured from the field.
pub fn pair_coupling_dnm(r: &Vec3, gamma1: f64, gamma2: f64) -> Result<f64> {
    let len = r.norm();
    if !(len > 0.0) {
        return Err(Error::ZeroDistance);
    }
    let cos = r.z / len;
    Ok(0.25 * dipolar_prefactor(len, gamma1, gamma2) * (3.0 * cos * cos - 1.0))
}

/// Electron eigenlevels. Without electron–electron dipolar coupling these
/// are the singlet and the three `S_z` triplets; with it, the triplets are
/// the dressed states adiabatically connected to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    S,
    Minus,
    Zero,
    Plus,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::S, Level::Minus, Level::Zero, Level::Plus];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short label used in column names (`S`, `m1`, `0`, `1`).
    pub fn tag(self) -> &'static str {
        match self {
            Level::S => "S",
            Level::Minus => "m1",
            Level::Zero => "0",
            Level::Plus => "1",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::S => "S",
            Level::Minus => "-1",
            Level::Zero => "0",
            Level::Plus => "1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronSystem {
    /// Electron positions, Å.
    pub electron_positions: [Vec3; 2],
    /// Isotropic exchange J, Hz.
    pub exchange: f64,
    /// Field magnitude along +z, T.
    pub field: f64,
    /// Electron gyromagnetic ratio magnitude, Hz/T.
    pub gamma_e: f64,
    pub include_ee_dipolar: bool,
}

impl ElectronSystem {
    /// Electrons `distance` Å apart, centred on the origin, with the
    /// inter-electron vector at `tilt` radians from the field in the xz plane.
    pub fn new(distance: f64, tilt: f64, exchange: f64, field: f64) -> Self {
        let [e1, e2] = reference_electrons(distance);
        let (s, c) = tilt.sin_cos();
        let rot = Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c);
        ElectronSystem {
            electron_positions: [rot * e1, rot * e2],
            exchange,
            field,
            gamma_e: GAMMA_E,
            include_ee_dipolar: false,
        }
    }

    pub fn with_dipolar(mut self, on: bool) -> Self {
        self.include_ee_dipolar = on;
        self
    }

    pub fn separation(&self) -> Vec3 {
        self.electron_positions[0] - self.electron_positions[1]
    }

    pub fn distance(&self) -> f64 {
        self.separation().norm()
    }

    /// Angle between the inter-electron vector and the field, radians.
    pub fn tilt(&self) -> f64 {
        let d = self.separation();
        (d.z / d.norm()).clamp(-1.0, 1.0).acos()
    }

    /// Electron–electron dipolar strength D, Hz.
    pub fn dipolar_strength(&self) -> f64 {
        dipolar_prefactor(self.distance(), self.gamma_e, self.gamma_e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance() > 0.0) {
            return Err(Error::InvalidParameter("electron positions must be distinct".into()));
        }
        if !self.exchange.is_finite() || !self.field.is_finite() || !self.gamma_e.is_finite() {
            return Err(Error::InvalidParameter("exchange, field and gamma_e must be finite".into()));
        }
        Ok(())
    }

    /// Hyperfine tensor between electron `j` and a nucleus.
    pub fn hyperfine_tensor(&self, j: usize, position: &Vec3, gamma_n: f64) -> Result<Matrix3<f64>> {
        dipolar_tensor(&(position - self.electron_positions[j]), self.gamma_e, gamma_n)
    }

    /// `A_1zz + A_2zz` for a nucleus at `position`, Hz.
    pub fn hyperfine_zz_sum(&self, position: &Vec3, gamma_n: f64) -> f64 {
        self.electron_positions
            .iter()
            .map(|e| {
                let r = position - e;
                let len = r.norm();
                let cos = r.z / len;
                -dipolar_prefactor(len, self.gamma_e, gamma_n) * (3.0 * cos * cos - 1.0)
            })
            .sum()
    }
}

/// Adds `H_S` on sites 0 and 1 of an `nsites` product space.
fn add_electron_terms(h: &mut DMatrix<C64>, nsites: usize, sys: &ElectronSystem) -> Result<()> {
    let zeeman = linear_operator([0.0, 0.0, -sys.gamma_e * sys.field]);
    add_one_site(h, nsites, 0, &zeeman);
    add_one_site(h, nsites, 1, &zeeman);
    let mut coupling = Matrix3::identity() * sys.exchange;
    if sys.include_ee_dipolar {
        coupling += dipolar_tensor(&sys.separation(), sys.gamma_e, sys.gamma_e)?;
    }
    add_two_site(h, nsites, 0, 1, &bilinear_operator(&coupling));
    Ok(())
}

/// Two-electron Hamiltonian over `{↑↑, ↑↓, ↓↑, ↓↓}`, Hz.
pub fn electron_hamiltonian(sys: &ElectronSystem) -> Result<DMatrix<C64>> {
    sys.validate()?;
    let mut h = DMatrix::zeros(4, 4);
    add_electron_terms(&mut h, 2, sys)?;
    hermitize(&mut h);
    Ok(h)
}

/// Labelled eigenvectors (columns, in [`Level::ALL`] order) and energies.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBasis {
    pub vectors: Matrix4<C64>,
    pub energies: [f64; 4],
    /// True when electron–electron dipolar coupling dressed the triplets.
    pub dressed: bool,
}

impl EnergyBasis {
    pub fn vector(&self, level: Level) -> Vector4<C64> {
        self.vectors.column(level.index()).into_owned()
    }

    pub fn energy(&self, level: Level) -> f64 {
        self.energies[level.index()]
    }
}

fn basis_state(i: usize) -> Vector4<C64> {
    let mut v = Vector4::zeros();
    v[i] = C64::from(1.0);
    v
}

fn singlet() -> Vector4<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(C64::from(0.0), C64::from(s), C64::from(-s), C64::from(0.0))
}

fn triplet_zero() -> Vector4<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(C64::from(0.0), C64::from(s), C64::from(s), C64::from(0.0))
}

/// Bare exchange eigenbasis: singlet, `|↓↓⟩`, `T0`, `|↑↑⟩`.
fn bare_vectors() -> [Vector4<C64>; 4] {
    [singlet(), basis_state(3), triplet_zero(), basis_state(0)]
}

/// Eigenbasis of [`electron_hamiltonian`].
///
/// Dressed triplets are labelled by their largest overlap with the bare
/// `|↓↓⟩`, `T0`, `|↑↑⟩` states and phased so that their largest component is
/// real and positive. Fails when the overlaps do not single out a label,
/// e.g. at zero field with dipolar coupling on.
pub fn electron_eigenbasis(sys: &ElectronSystem) -> Result<EnergyBasis> {
    let h = electron_hamiltonian(sys)?;
    let bare = bare_vectors();
    let energy_of = |v: &Vector4<C64>| {
        let hv = &h * DMatrix::from_column_slice(4, 1, v.as_slice());
        let mut e = C64::from(0.0);
        for i in 0..4 {
            e += v[i].conj() * hv[i];
        }
        e.re
    };

    let dipolar_mixes = sys.include_ee_dipolar && {
        // the triplet block is diagonal in the bare basis exactly when the
        // separation is along the field
        let d = sys.separation();
        d.x != 0.0 || d.y != 0.0
    };
    if !dipolar_mixes {
        let energies = [0, 1, 2, 3].map(|i| energy_of(&bare[i]));
        return Ok(EnergyBasis {
            vectors: Matrix4::from_columns(&bare),
            energies,
            dressed: sys.include_ee_dipolar,
        });
    }

    // Diagonalise inside the triplet manifold; the singlet does not mix.
    let t = [bare[3], bare[2], bare[1]];
    let mut block = DMatrix::<C64>::zeros(3, 3);
    for a in 0..3 {
        let ha = &h * DMatrix::from_column_slice(4, 1, t[a].as_slice());
        for b in 0..3 {
            let mut z = C64::from(0.0);
            for i in 0..4 {
                z += t[b][i].conj() * ha[i];
            }
            block[(b, a)] = z;
        }
    }
    let eig = block.symmetric_eigen();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    for a in 0..3 {
        for b in 0..a {
            if (eig.eigenvalues[a] - eig.eigenvalues[b]).abs() < 1e-9 * scale {
                return Err(Error::Labeling("degenerate dressed triplet levels".into()));
            }
        }
    }

    // bare-state index in `t` for each label
    let reference = [(Level::Plus, 0usize), (Level::Zero, 1), (Level::Minus, 2)];
    let mut vectors = bare;
    let mut energies = [0.0; 4];
    energies[0] = energy_of(&bare[0]);
    let mut taken = [false; 3];
    for k in 0..3 {
        let col = eig.eigenvectors.column(k);
        let weights: Vec<f64> = (0..3).map(|i| col[i].norm_sqr()).collect();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
        if weights[order[0]] - weights[order[1]] < 1e-6 || taken[order[0]] {
            return Err(Error::Labeling(format!(
                "dressed triplet has overlaps {:.6}, {:.6}, {:.6} with the bare triplets",
                weights[0], weights[1], weights[2]
            )));
        }
        taken[order[0]] = true;
        let phase = col[order[0]].conj() / col[order[0]].norm();
        let mut v = Vector4::zeros();
        for i in 0..3 {
            v += t[i] * (col[i] * phase);
        }
        let level = reference.iter().find(|(_, i)| *i == order[0]).map(|(l, _)| *l).unwrap();
        vectors[level.index()] = v;
        energies[level.index()] = eig.eigenvalues[k];
    }
    Ok(EnergyBasis {
        vectors: Matrix4::from_columns(&vectors),
        energies,
        dressed: true,
    })
}

/// The simultaneous π pulse `exp[-iπ(S1x + S2x)] = -σx⊗σx`.
pub fn pi_xx_pulse() -> Matrix4<C64> {
    let mut p = Matrix4::zeros();
    for i in 0..4 {
        p[(i ^ 3, i)] = C64::from(-1.0);
    }
    p
}

fn check_cluster(bath: &BathConfiguration, cluster: &[usize], max: usize) -> Result<()> {
    if cluster.len() > max {
        return Err(Error::Capacity {
            size: cluster.len(),
            max,
        });
    }
    if let Some(&bad) = cluster.iter().find(|&&i| i >= bath.sites.len()) {
        return Err(Error::InvalidParameter(format!(
            "cluster index {bad} out of range for a bath of {} sites",
            bath.sites.len()
        )));
    }
    Ok(())
}

/// Full electron + cluster Hamiltonian of dimension `4·2^k`, Hz.
///
/// Interactions with nuclei outside the cluster are dropped.
pub fn cluster_hamiltonian(sys: &ElectronSystem, bath: &BathConfiguration, cluster: &[usize]) -> Result<DMatrix<C64>> {
    cluster_hamiltonian_with_capacity(sys, bath, cluster, MAX_CLUSTER_SIZE)
}

pub fn cluster_hamiltonian_with_capacity(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    cluster: &[usize],
    max_size: usize,
) -> Result<DMatrix<C64>> {
    sys.validate()?;
    check_cluster(bath, cluster, max_size)?;
    let nsites = 2 + cluster.len();
    let dim = 1usize << nsites;
    let mut h = DMatrix::zeros(dim, dim);
    add_electron_terms(&mut h, nsites, sys)?;

    for (a, &n) in cluster.iter().enumerate() {
        let site = &bath.sites[n];
        add_one_site(&mut h, nsites, 2 + a, &linear_operator([0.0, 0.0, -site.gamma * sys.field]));
        for j in 0..2 {
            let a_jn = sys.hyperfine_tensor(j, &site.position, site.gamma)?;
            add_two_site(&mut h, nsites, j, 2 + a, &bilinear_operator(&a_jn));
        }
        for (b, &m) in cluster.iter().enumerate().skip(a + 1) {
            let other = &bath.sites[m];
            let d_nm = dipolar_tensor(&(site.position - other.position), site.gamma, other.gamma)?;
            add_two_site(&mut h, nsites, 2 + a, 2 + b, &bilinear_operator(&d_nm));
        }
    }
    hermitize(&mut h);
    Ok(h)
}

/// Level-conditioned nuclear Hamiltonians in the large-field, large-exchange
/// limit, in [`Level::ALL`] order and without the constant `E_α`.
///
/// Each contains the nuclear Zeeman term, the secular flip-flop
/// `d_nm (I+_n I-_m + I-_n I+_m)` and Ising `-4 d_nm I_nz I_mz` per pair;
/// `H_-1` adds `-(1/2) Σ_n (A_1nzz + A_2nzz) I_nz` and `H_1` the opposite.
pub fn projected_nuclear_hamiltonians(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    cluster: &[usize],
) -> Result<[DMatrix<C64>; 4]> {
    if sys.include_ee_dipolar {
        return Err(Error::UnsupportedRegime);
    }
    sys.validate()?;
    check_cluster(bath, cluster, 12)?;
    let k = cluster.len();
    let dim = 1usize << k;
    let mut common = DMatrix::zeros(dim, dim);
    let mut hyperfine = DMatrix::zeros(dim, dim);
    for (a, &n) in cluster.iter().enumerate() {
        let site = &bath.sites[n];
        add_one_site(&mut common, k, a, &linear_operator([0.0, 0.0, -site.gamma * sys.field]));
        let azz = sys.hyperfine_zz_sum(&site.position, site.gamma);
        add_one_site(&mut hyperfine, k, a, &linear_operator([0.0, 0.0, -0.5 * azz]));
        for (b, &m) in cluster.iter().enumerate().skip(a + 1) {
            let other = &bath.sites[m];
            let d = pair_coupling_dnm(&(site.position - other.position), site.gamma, other.gamma)?;
            // d (I+I- + I-I+) = 2d (IxIx + IyIy)
            let t = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0 * d, 2.0 * d, -4.0 * d));
            add_two_site(&mut common, k, a, b, &bilinear_operator(&t));
        }
    }
    let minus = &common + &hyperfine;
    let plus = &common - &hyperfine;
    let mut out = [common.clone(), minus, common, plus];
    for h in &mut out {
        hermitize(h);
    }
    Ok(out)
}

/// Result of the pure-dephasing regime check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureDephasingCheck {
    /// Largest electron–nuclear coupling prefactor in the bath, Hz.
    pub max_hyperfine: f64,
    /// `min_{α≠β} |γ_n B - |E_α - E_β||`, Hz.
    pub min_gap: f64,
    pub satisfied: bool,
}

/// Checks that every hyperfine coupling is far below the detuning between
/// electron transitions and the nuclear Larmor frequency. Logs a warning
/// when it is not; never fails on physics grounds.
pub fn pure_dephasing_check(sys: &ElectronSystem, bath: &BathConfiguration) -> Result<PureDephasingCheck> {
    let basis = electron_eigenbasis(sys)?;
    let mut max_hyperfine = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut gammas: Vec<f64> = bath.sites.iter().map(|s| s.gamma).collect();
    gammas.dedup();
    for site in &bath.sites {
        for e in &sys.electron_positions {
            let r = (site.position - e).norm();
            max_hyperfine = max_hyperfine.max(2.0 * dipolar_prefactor(r, sys.gamma_e, site.gamma));
        }
    }
    for g in &gammas {
        for a in 0..4 {
            for b in 0..a {
                let gap = (basis.energies[a] - basis.energies[b]).abs();
                min_gap = min_gap.min((g * sys.field - gap).abs());
            }
        }
    }
    let satisfied = max_hyperfine < 0.1 * min_gap;
    if !satisfied {
        log::warn!(
            "outside the pure dephasing regime: hyperfine up to {max_hyperfine:.4e} Hz vs detuning {min_gap:.4e} Hz"
        );
    }
    Ok(PureDephasingCheck {
        max_hyperfine,
        min_gap,
        satisfied,
    })
}
