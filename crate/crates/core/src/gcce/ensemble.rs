//! Averages over random bath configurations.

use rayon::prelude::*;

use super::combine::{gcce_coherence, GcceOptions};
use super::{CoherenceSeries, PulseSequence};
use crate::bathgen::{generate_bath, reference_electrons, BathConfiguration, BathSpec};
use crate::spinham::ElectronSystem;
use crate::{Error, Result};

/// Largest tolerated fraction of configurations dropped for convergence flags.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// Pointwise mean of the per-configuration moduli.
    pub mean: CoherenceSeries,
    /// Per-configuration results in configuration-index order.
    pub per_config: Vec<CoherenceSeries>,
    /// Configuration indices left out of the mean.
    pub excluded: Vec<u64>,
}

/// Bath configuration `index` for the electron geometry of `sys`: generated
/// with the electrons on the z axis, then rotated with them to the system's
/// tilt. Configurations at different tilts therefore share random numbers.
pub fn configuration(template: &BathSpec, sys: &ElectronSystem, index: u64) -> Result<BathConfiguration> {
    let spec = template.with_config_index(index);
    let bath = generate_bath(&spec, reference_electrons(sys.distance()))?;
    let rotated = bath.rotated_about_y(sys.tilt());
    Ok(BathConfiguration {
        electron_positions: sys.electron_positions,
        ..rotated
    })
}

/// Pointwise mean of moduli, ignoring complex parts.
pub fn mean_moduli(series: &[&CoherenceSeries]) -> CoherenceSeries {
    let first = series[0];
    let n = first.len();
    let scale = 1.0 / series.len() as f64;
    let moduli = std::array::from_fn(|p| {
        (0..n)
            .map(|i| series.iter().map(|s| s.moduli[p][i]).sum::<f64>() * scale)
            .collect()
    });
    CoherenceSeries {
        times: first.times.clone(),
        moduli,
        complex: None,
        flagged: vec![false; n],
    }
}

/// Averages `f(configuration)` over `n_configs` configurations, dropping
/// flagged ones. A single configuration passes through unchanged.
pub fn average_with<F>(template: &BathSpec, sys: &ElectronSystem, n_configs: usize, f: F) -> Result<EnsembleResult>
where
    F: Fn(&BathConfiguration) -> Result<CoherenceSeries> + Sync,
{
    if n_configs == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one configuration".into()));
    }
    let per_config: Vec<CoherenceSeries> = (0..n_configs as u64)
        .into_par_iter()
        .map(|i| f(&configuration(template, sys, i)?))
        .collect::<Result<_>>()?;
    let excluded: Vec<u64> = per_config
        .iter()
        .enumerate()
        .filter(|(_, s)| s.any_flagged())
        .map(|(i, _)| i as u64)
        .collect();
    if !excluded.is_empty() {
        log::warn!("{} of {} configurations excluded for convergence flags", excluded.len(), n_configs);
    }
    if excluded.len() as f64 > MAX_EXCLUDED_FRACTION * n_configs as f64 {
        return Err(Error::TooManyExclusions {
            excluded: excluded.len(),
            total: n_configs,
        });
    }
    let kept: Vec<&CoherenceSeries> = per_config
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(&(*i as u64)))
        .map(|(_, s)| s)
        .collect();
    let mean = if n_configs == 1 {
        per_config[0].clone()
    } else {
        mean_moduli(&kept)
    };
    Ok(EnsembleResult {
        mean,
        per_config,
        excluded,
    })
}

/// gCCE coherence averaged over bath configurations `0..n_configs`.
pub fn ensemble_average(
    template: &BathSpec,
    n_configs: usize,
    sys: &ElectronSystem,
    seq: PulseSequence,
    times: &[f64],
    opts: &GcceOptions,
) -> Result<EnsembleResult> {
    average_with(template, sys, n_configs, |bath| {
        Ok(gcce_coherence(sys, bath, seq, times, opts)?.into_series())
    })
}
