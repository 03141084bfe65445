//! Generalized cluster-correlation expansion of the two-electron coherences.
//!
//! For a level pair `(α, β)` the normalized coherence is
//!
//! ```text
//! L_αβ(t) = ⟨E_α| Tr_B[U_N ρ(0) U_N†] |E_β⟩ / ⟨E_α|ρ_S(0)|E_β⟩
//! U_N = e^{-i2πHτ} [π_xx e^{-i2πHτ}]^N,   τ = t / (N + 1)
//! ```
//!
//! with the bath maximally mixed at `t = 0`. The expansion factorizes `L`
//! into irreducible cluster contributions
//! `L̃_C = L_C / Π_{C' ⊊ C} L̃_C'`, computed on complex values.

mod clusters;
mod combine;
mod ensemble;
mod evolve;

use std::fmt;
use std::fmt::Write as _;

use nalgebra::Vector4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use crate::spinham::Level;
pub use clusters::{enumerate_clusters, ClusterSet, PairCriterion};
pub use combine::{cce_combine, gcce_coherence, GcceOptions, GcceResult};
pub use ensemble::{average_with, configuration, ensemble_average, mean_moduli, EnsembleResult};
pub use evolve::{evolve_cluster_coherence, exact_reference, ClusterCoherence, ClusterPropagator, EXACT_MAX_SPINS};

use crate::spinham::EnergyBasis;
use crate::{Error, Result};

/// Unordered level pair of an off-diagonal RDM element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LevelPair {
    MinusZero,
    PlusZero,
    MinusS,
    PlusS,
    MinusPlus,
    SZero,
}

impl LevelPair {
    /// Output column order.
    pub const ALL: [LevelPair; 6] = [
        LevelPair::MinusZero,
        LevelPair::PlusZero,
        LevelPair::MinusS,
        LevelPair::PlusS,
        LevelPair::MinusPlus,
        LevelPair::SZero,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn levels(self) -> (Level, Level) {
        match self {
            LevelPair::MinusZero => (Level::Minus, Level::Zero),
            LevelPair::PlusZero => (Level::Plus, Level::Zero),
            LevelPair::MinusS => (Level::Minus, Level::S),
            LevelPair::PlusS => (Level::Plus, Level::S),
            LevelPair::MinusPlus => (Level::Minus, Level::Plus),
            LevelPair::SZero => (Level::S, Level::Zero),
        }
    }

    /// CSV column name, e.g. `L_m1_0`.
    pub fn column(self) -> String {
        let (a, b) = self.levels();
        format!("L_{}_{}", a.tag(), b.tag())
    }

    /// Short name used in fit and sweep tables, e.g. `m1_0`.
    pub fn name(self) -> String {
        let (a, b) = self.levels();
        format!("{}_{}", a.tag(), b.tag())
    }

    pub fn from_name(name: &str) -> Option<Self> {
        LevelPair::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for LevelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.levels();
        write!(f, "({a},{b})")
    }
}

/// Number of π pulses between equal free-evolution segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PulseSequence {
    /// Free induction decay, N = 0.
    Fid,
    /// Hahn echo, N = 1.
    Hahn,
}

impl PulseSequence {
    pub fn from_pulses(n: u32) -> Result<Self> {
        match n {
            0 => Ok(PulseSequence::Fid),
            1 => Ok(PulseSequence::Hahn),
            _ => Err(Error::InvalidParameter(format!("unsupported pulse count {n} (0 or 1)"))),
        }
    }

    pub fn pulses(self) -> u32 {
        match self {
            PulseSequence::Fid => 0,
            PulseSequence::Hahn => 1,
        }
    }

    /// Free-evolution segment length for total time `t`.
    pub fn segment(self, t: f64) -> f64 {
        t / (self.pulses() + 1) as f64
    }
}

/// Initial electron state `|ψ⟩` over the product basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState(pub Vector4<C64>);

impl InitialState {
    /// Equal superposition `(|E_S⟩ + |E_-1⟩ + |E_0⟩ + |E_1⟩)/2`.
    pub fn equal_superposition(basis: &EnergyBasis) -> Self {
        InitialState(basis.vectors.column_sum() * C64::from(0.5))
    }

    /// `Σ_α c_α |E_α⟩` normalized; coefficients in [`Level::ALL`] order.
    pub fn from_amplitudes(basis: &EnergyBasis, amplitudes: [C64; 4]) -> Self {
        let mut v = Vector4::zeros();
        for (k, a) in amplitudes.iter().enumerate() {
            v += basis.vectors.column(k) * *a;
        }
        let norm = v.norm();
        InitialState(v / C64::from(norm))
    }

    /// `⟨E_α|ψ⟩` in [`Level::ALL`] order.
    pub fn amplitudes(&self, basis: &EnergyBasis) -> [C64; 4] {
        let mut out = [C64::from(0.0); 4];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = basis.vectors.column(k).dotc(&self.0);
        }
        out
    }

    /// `⟨E_α|ρ_S(0)|E_β⟩` for every pair; fails if any vanishes.
    pub fn normalizations(&self, basis: &EnergyBasis) -> Result<[C64; 6]> {
        let amp = self.amplitudes(basis);
        let mut out = [C64::from(0.0); 6];
        for pair in LevelPair::ALL {
            let (a, b) = pair.levels();
            let v = amp[a.index()] * amp[b.index()].conj();
            if v.norm() < 1e-12 {
                return Err(Error::UndefinedNormalization(pair));
            }
            out[pair.index()] = v;
        }
        Ok(out)
    }
}

/// Normalized coherences of the six level pairs on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSeries {
    /// Total evolution times, s.
    pub times: Vec<f64>,
    /// `|L_αβ(t)|` per pair in [`LevelPair::ALL`] order.
    pub moduli: [Vec<f64>; 6],
    /// Complex values when available (absent for ensemble means).
    pub complex: Option<[Vec<C64>; 6]>,
    /// Time points where the expansion hit the denominator guard.
    pub flagged: Vec<bool>,
}

impl CoherenceSeries {
    pub fn from_complex(times: Vec<f64>, values: [Vec<C64>; 6], flagged: Vec<bool>) -> Self {
        let moduli = values.clone().map(|v| v.iter().map(|z| z.norm()).collect());
        CoherenceSeries {
            times,
            moduli,
            complex: Some(values),
            flagged,
        }
    }

    /// Series identically equal to one.
    pub fn unit(times: Vec<f64>) -> Self {
        let n = times.len();
        CoherenceSeries::from_complex(times, std::array::from_fn(|_| vec![C64::from(1.0); n]), vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn pair(&self, pair: LevelPair) -> &[f64] {
        &self.moduli[pair.index()]
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }

    /// Moduli CSV with header `t_s,L_m1_0,L_1_0,L_m1_S,L_1_S,L_m1_1,L_S_0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s");
        for pair in LevelPair::ALL {
            out.push(',');
            out.push_str(&pair.column());
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for m in &self.moduli {
                let _ = write!(out, ",{}", m[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Companion CSV with real and imaginary parts (`re_L_m1_0,im_L_m1_0,…`).
    pub fn complex_csv(&self) -> Option<String> {
        let values = self.complex.as_ref()?;
        let mut out = String::from("t_s");
        for pair in LevelPair::ALL {
            let c = pair.column();
            let _ = write!(out, ",re_{c},im_{c}");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for v in values {
                let _ = write!(out, ",{},{}", v[i].re, v[i].im);
            }
            out.push('\n');
        }
        Some(out)
    }

    /// Parses the moduli CSV written by [`CoherenceSeries::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty coherence CSV".into()))?;
        let expected: Vec<String> = std::iter::once("t_s".to_string())
            .chain(LevelPair::ALL.iter().map(|p| p.column()))
            .collect();
        if header.split(',').collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!("unexpected coherence CSV header '{header}'")));
        }
        let mut times = Vec::new();
        let mut moduli: [Vec<f64>; 6] = Default::default();
        for (row, line) in lines.enumerate() {
            let cols: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("coherence CSV row {}: {e}", row + 1)))?;
            if cols.len() != 7 {
                return Err(Error::Parse(format!("coherence CSV row {}: expected 7 columns", row + 1)));
            }
            times.push(cols[0]);
            for k in 0..6 {
                moduli[k].push(cols[k + 1]);
            }
        }
        let n = times.len();
        Ok(CoherenceSeries {
            times,
            moduli,
            complex: None,
            flagged: vec![false; n],
        })
    }
}

/// Linear grid of `points` times from 0 to `t_max` inclusive.
pub fn linear_times(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect(),
    }
}
