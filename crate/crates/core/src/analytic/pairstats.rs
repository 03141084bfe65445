//! Geometry of the flip-flop pairs that drive the Hahn-echo decay.

use std::fmt::Write as _;

use super::pca::{pair_decoherence_fk, pair_decoherence_gk, pseudospin_fields, NuclearProductState};
use crate::bathgen::BathConfiguration;
use crate::spinham::ElectronSystem;
use crate::{Result, Vec3};

/// Histogram bin width for `θ_nm`, degrees.
pub const THETA_BIN_DEG: f64 = 5.0;

/// Which per-pair decoherence selects contributing pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairMeasure {
    /// `f_k`, decoherence of `L_-1,0`.
    #[default]
    F,
    /// `g_k`, decoherence of `L_-1,1`.
    G,
}

impl PairMeasure {
    pub fn name(self) -> &'static str {
        match self {
            PairMeasure::F => "f_k",
            PairMeasure::G => "g_k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    /// Site initially down.
    pub n: usize,
    /// Site initially up.
    pub m: usize,
    /// `|R_n - R_m|`, Å.
    pub distance: f64,
    /// Angle between `R_n - R_m` and the z axis, degrees in `[0, 180]`.
    pub theta_deg: f64,
    /// Pair midpoint, Å.
    pub center: Vec3,
    pub c: f64,
    pub e: f64,
    pub d: f64,
    /// Value of the selecting measure.
    pub decoherence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairStatistics {
    pub measure: PairMeasure,
    pub threshold: f64,
    /// Pairs above threshold, in enumeration order.
    pub pairs: Vec<PairRecord>,
    /// Counts per `θ` bin of width [`THETA_BIN_DEG`] starting at 0°.
    pub histogram: Vec<usize>,
}

impl PairStatistics {
    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    /// Bin centres, degrees.
    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.histogram.len())
            .map(|i| (i as f64 + 0.5) * THETA_BIN_DEG)
            .collect()
    }

    /// Adds another configuration's histogram into this one.
    pub fn accumulate_histogram(total: &mut [usize], other: &PairStatistics) {
        for (t, o) in total.iter_mut().zip(&other.histogram) {
            *t += o;
        }
    }

    /// `n,m,R_angstrom,theta_deg,C_hz,E_hz,D_hz,f_k` (or `g_k`).
    pub fn pairs_csv(&self) -> String {
        let mut out = format!("n,m,R_angstrom,theta_deg,C_hz,E_hz,D_hz,{}\n", self.measure.name());
        for p in &self.pairs {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.n, p.m, p.distance, p.theta_deg, p.c, p.e, p.d, p.decoherence
            )
            .unwrap();
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        histogram_csv(&self.histogram)
    }
}

/// `theta_deg,count` with bin centres.
pub fn histogram_csv(counts: &[usize]) -> String {
    let mut out = String::from("theta_deg,count\n");
    for (i, c) in counts.iter().enumerate() {
        writeln!(out, "{},{}", (i as f64 + 0.5) * THETA_BIN_DEG, c).unwrap();
    }
    out
}

fn bins() -> usize {
    (180.0 / THETA_BIN_DEG).round() as usize
}

/// Pairs whose decoherence at segment length `tau` exceeds `threshold`.
pub fn pair_statistics(
    sys: &ElectronSystem,
    bath: &BathConfiguration,
    state: &NuclearProductState,
    tau: f64,
    threshold: f64,
    measure: PairMeasure,
) -> Result<PairStatistics> {
    let excitations = pseudospin_fields(sys, bath, state, super::DEFAULT_COUPLING_FLOOR)?;
    let mut histogram = vec![0; bins()];
    let mut pairs = Vec::new();
    for x in &excitations {
        let e = x.contrast();
        let value = match measure {
            PairMeasure::F => pair_decoherence_fk(x.c, e, x.d, tau),
            PairMeasure::G => pair_decoherence_gk(x.c, e, x.d, tau),
        };
        if value <= threshold {
            continue;
        }
        let (rn, rm) = (bath.sites[x.n].position, bath.sites[x.m].position);
        let r = rn - rm;
        let distance = r.norm();
        let theta_deg = (r.z / distance).clamp(-1.0, 1.0).acos().to_degrees();
        let bin = ((theta_deg / THETA_BIN_DEG) as usize).min(histogram.len() - 1);
        histogram[bin] += 1;
        pairs.push(PairRecord {
            n: x.n,
            m: x.m,
            distance,
            theta_deg,
            center: (rn + rm) * 0.5,
            c: x.c,
            e,
            d: x.d,
            decoherence: value,
        });
    }
    Ok(PairStatistics {
        measure,
        threshold,
        pairs,
        histogram,
    })
}
