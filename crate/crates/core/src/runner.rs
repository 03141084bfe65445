//! Experiment pipelines behind the command-line subcommands.
//!
//! Each pipeline computes its results first and then writes CSV files into the
//! output directory. Numbers are printed in Rust's shortest round-trip form,
//! and all parallel reductions have a fixed order. Given the same config and
//! seed, the files are byte-identical at any thread count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::RngExt;

use crate::analytic::{
    fid_analytic_series, field_maps, histogram_csv, pair_decoherence_fk, pair_decoherence_gk, pair_statistics,
    pca_hahn_coherences, sample_initial_state, FieldMapGrid, PairStatistics, Plane,
};
use crate::bathgen::{config_rng, BathConfiguration};
use crate::config::{parse_measure, FieldMapSection, PairMapSection, PairStatsSection, RunConfig};
use crate::constants::GAMMA_P;
use crate::fitting::{failure_tag, fit_series, fits_csv, DecayFit};
use crate::gcce::{
    average_with, configuration, gcce_coherence, linear_times, CoherenceSeries, EnsembleResult, GcceOptions,
    LevelPair, PulseSequence,
};
use crate::spinham::ElectronSystem;
use crate::{Error, Result};

/// Moduli of the five decaying pairs below this end the auto time grid.
const AUTO_FLOOR: f64 = 0.05;
/// Margin applied to the estimated decay time in the auto time grid.
const AUTO_MARGIN: f64 = 1.5;
const AUTO_T_START: f64 = 1e-7;
const AUTO_T_LIMIT: f64 = 1.0;
/// Salt separating the nuclear product-state seeds from bath seeds.
const STATE_SALT: u64 = 0x5eed_0f_57a7e;

/// Bath configuration `index`: read from `bath.file`, or generated.
pub fn load_bath(cfg: &RunConfig, sys: &ElectronSystem, index: u64) -> Result<BathConfiguration> {
    match &cfg.bath.file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidParameter(format!("bath file {}: {e}", path.display())))?;
            let bath = BathConfiguration::from_table(&text)?;
            let matches = bath
                .electron_positions
                .iter()
                .zip(&sys.electron_positions)
                .all(|(a, b)| (a - b).norm() < 1e-9 * (1.0 + b.norm()));
            if !matches {
                return Err(Error::InvalidParameter(format!(
                    "bath file {} was written for different electron positions",
                    path.display()
                )));
            }
            Ok(bath)
        }
        None => configuration(&cfg.bath_spec(), sys, index),
    }
}

/// Seed of the nuclear product state used with configuration `index`.
pub fn state_seed(master_seed: u64, index: u64) -> u64 {
    config_rng(master_seed ^ STATE_SALT, index).random::<u64>()
}

/// Time grid for `seq`: `[0, t_max]` with `time_points` samples.
pub fn time_grid(cfg: &RunConfig, seq: PulseSequence) -> Result<Vec<f64>> {
    let t_max = match cfg.simulation.t_max_s {
        Some(t) => t,
        None => auto_t_max(cfg, seq)?,
    };
    Ok(linear_times(t_max, cfg.simulation.time_points))
}

/// Estimated end of the decay window from the closed forms on configuration 0:
/// the Overhauser spread for the FID, the pair-correlation products for the
/// echo. Both use only the secular hyperfine and work for any regime as a
/// time scale, but the echo estimate needs the exchange-only model.
pub fn auto_t_max(cfg: &RunConfig, seq: PulseSequence) -> Result<f64> {
    let sys = cfg.electron_system();
    let bath = load_bath(cfg, &sys, 0)?;
    match seq {
        PulseSequence::Fid => {
            let var: f64 = bath
                .sites
                .iter()
                .map(|s| 0.25 * sys.hyperfine_zz_sum(&s.position, s.gamma).powi(2))
                .sum();
            if var == 0.0 {
                return Err(Error::InvalidParameter("empty bath: set simulation.t_max_s".into()));
            }
            let t2 = std::f64::consts::SQRT_2 / (2.0 * std::f64::consts::PI * var.sqrt());
            // the slowest pairs fall to AUTO_FLOOR at 2 T2* sqrt(ln 20)
            Ok(AUTO_MARGIN * 2.0 * t2 * (1.0 / AUTO_FLOOR).ln().sqrt())
        }
        PulseSequence::Hahn => {
            if sys.include_ee_dipolar {
                return Err(Error::InvalidParameter(
                    "automatic echo time grid needs the exchange-only model: set simulation.t_max_s".into(),
                ));
            }
            let plain = ElectronSystem {
                include_ee_dipolar: false,
                ..sys.clone()
            };
            let state = sample_initial_state(&bath, state_seed(cfg.simulation.seed, 0));
            let decayed = |t: f64| -> Result<bool> {
                let l = pca_hahn_coherences(&plain, &bath, &state, &[t])?;
                Ok(LevelPair::ALL
                    .iter()
                    .filter(|&&p| p != LevelPair::SZero)
                    .any(|&p| l.pair(p)[0] < AUTO_FLOOR))
            };
            let mut hi = AUTO_T_START;
            while !decayed(hi)? {
                hi *= 2.0;
                if hi > AUTO_T_LIMIT {
                    return Err(Error::InvalidParameter(
                        "no echo decay within 1 s: set simulation.t_max_s".into(),
                    ));
                }
            }
            let mut lo = hi / 2.0;
            for _ in 0..12 {
                let mid = 0.5 * (lo + hi);
                if decayed(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(AUTO_MARGIN * hi)
        }
    }
}

/// Ensemble-averaged gCCE coherence for one pulse sequence.
pub fn simulate(cfg: &RunConfig, seq: PulseSequence, times: &[f64]) -> Result<EnsembleResult> {
    let sys = cfg.electron_system();
    let opts = cfg.gcce_options();
    let evaluate = |bath: &BathConfiguration| Ok(gcce_coherence(&sys, bath, seq, times, &opts)?.into_series());
    if cfg.bath.file.is_some() {
        let series = evaluate(&load_bath(cfg, &sys, 0)?)?;
        let excluded = if series.any_flagged() { vec![0] } else { Vec::new() };
        return Ok(EnsembleResult {
            mean: series.clone(),
            per_config: vec![series],
            excluded,
        });
    }
    average_with(&cfg.bath_spec(), &sys, cfg.simulation.configs, evaluate)
}

/// One pulse sequence of a `run`.
#[derive(Debug)]
pub struct PulseResult {
    pub pulses: u32,
    pub ensemble: EnsembleResult,
    pub fits: [Result<DecayFit>; 6],
}

pub fn run(cfg: &RunConfig) -> Result<Vec<PulseResult>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &n in &cfg.simulation.pulses {
        let seq = PulseSequence::from_pulses(n)?;
        let times = time_grid(cfg, seq)?;
        log::info!("N = {n}: {} time points up to {:e} s", times.len(), times.last().unwrap());
        let ensemble = simulate(cfg, seq, &times)?;
        let fits = fit_series(&ensemble.mean, cfg.simulation.envelope_fit);
        out.push(PulseResult {
            pulses: n,
            ensemble,
            fits,
        });
    }
    Ok(out)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// Writes `coherence_N{n}.csv` and `fits_N{n}.csv` per pulse count, and each
/// configuration's moduli as `coherence_N{n}_cfg{i}.csv`. With
/// `output.complex`, every series that kept its complex values also gets a
/// `_complex` companion.
pub fn write_run(cfg: &RunConfig, results: &[PulseResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let write_series = |files: &mut Vec<PathBuf>, stem: &str, s: &CoherenceSeries| -> Result<()> {
        files.push(write_file(dir, &format!("{stem}.csv"), &s.to_csv())?);
        if cfg.output.complex {
            if let Some(text) = s.complex_csv() {
                files.push(write_file(dir, &format!("{stem}_complex.csv"), &text)?);
            }
        }
        Ok(())
    };
    for r in results {
        let n = r.pulses;
        write_series(&mut files, &format!("coherence_N{n}"), &r.ensemble.mean)?;
        files.push(write_file(dir, &format!("fits_N{n}.csv"), &fits_csv(&r.fits))?);
        for (i, s) in r.ensemble.per_config.iter().enumerate() {
            write_series(&mut files, &format!("coherence_N{n}_cfg{i}"), s)?;
        }
    }
    Ok(files)
}

/// Writes one site table per configuration: `bath_0000.txt`, ….
pub fn generate_baths(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let sys = cfg.electron_system();
    let mut files = Vec::new();
    for i in 0..cfg.simulation.configs as u64 {
        let bath = load_bath(cfg, &sys, i)?;
        if let Some(w) = &bath.warning {
            log::warn!("configuration {i}: {w:?}");
        }
        files.push(write_file(dir, &format!("bath_{i:04}.txt"), &bath.to_table())?);
    }
    Ok(files)
}

/// One sweep point: axis assignments and its per-sequence results.
#[derive(Debug)]
pub struct SweepPoint {
    pub assignment: Vec<(String, f64)>,
    pub results: Result<Vec<PulseResult>>,
}

impl SweepPoint {
    /// `param` and `value` columns: axis names and values joined by `;`.
    pub fn labels(&self) -> (String, String) {
        let names: Vec<&str> = self.assignment.iter().map(|(a, _)| a.as_str()).collect();
        let values: Vec<String> = self.assignment.iter().map(|(_, v)| v.to_string()).collect();
        (names.join(";"), values.join(";"))
    }
}

/// Runs the Cartesian product of the sweep axes. Every point uses the same
/// master seed, so points differ only by the swept parameters.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if cfg.sweep.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one axis in [sweep]".into()));
    }
    let mut points = Vec::new();
    for assignment in cfg.sweep_points() {
        let mut point_cfg = cfg.clone();
        for (axis, value) in &assignment {
            point_cfg = point_cfg.with_axis(axis, *value)?;
        }
        let results = run(&point_cfg);
        if let Err(e) = &results {
            log::warn!("sweep point {assignment:?} failed: {e}");
        } else {
            log::info!("sweep point {assignment:?} done");
        }
        points.push(SweepPoint { assignment, results });
    }
    Ok(points)
}

/// Long-format sweep table `param,value,pair,T_s,b,rmse,N`; failed fits have
/// `NaN` entries.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("param,value,pair,T_s,b,rmse,N\n");
    for point in points {
        let (param, value) = point.labels();
        let Ok(results) = &point.results else { continue };
        for r in results {
            for pair in LevelPair::ALL {
                let (t, b, rmse) = match &r.fits[pair.index()] {
                    Ok(f) => (f.t, f.b, f.rmse),
                    Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                };
                writeln!(out, "{param},{value},{},{t},{b},{rmse},{}", pair.name(), r.pulses).unwrap();
            }
        }
    }
    out
}

/// `sweep.csv`, `sweep_failures.csv` and one coherence file per point and
/// sequence under `sweep_points/`.
pub fn write_sweep(points: &[SweepPoint], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![write_file(dir, "sweep.csv", &sweep_csv(points))?];
    let mut failures = String::from("param,value,stage,error\n");
    let sub = dir.join("sweep_points");
    for (k, point) in points.iter().enumerate() {
        let (param, value) = point.labels();
        match &point.results {
            Ok(results) => {
                for r in results {
                    files.push(write_file(&sub, &format!("point_{k:03}_N{}.csv", r.pulses), &r.ensemble.mean.to_csv())?);
                    for pair in LevelPair::ALL {
                        if let Err(e) = &r.fits[pair.index()] {
                            let stage = format!("fit_N{}_{}_{}", r.pulses, pair.name(), failure_tag(e));
                            writeln!(failures, "{param},{value},{stage},\"{}\"", csv_quote(&e.to_string())).unwrap();
                        }
                    }
                }
            }
            Err(e) => {
                writeln!(failures, "{param},{value},run,\"{}\"", csv_quote(&e.to_string())).unwrap();
            }
        }
    }
    files.push(write_file(dir, "sweep_failures.csv", &failures)?);
    Ok(files)
}

fn csv_quote(s: &str) -> String {
    s.replace('"', "\"\"")
}

/// gCCE against a closed form for one configuration and sequence.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub pulses: u32,
    pub gcce: CoherenceSeries,
    pub analytic: CoherenceSeries,
    /// Deviations are also summarised where the gCCE modulus exceeds this.
    pub window_threshold: f64,
}

/// Window thresholds: the echo is compared while moduli exceed 0.2, the FID
/// while they exceed 0.05.
pub fn window_threshold(seq: PulseSequence) -> f64 {
    match seq {
        PulseSequence::Fid => 0.05,
        PulseSequence::Hahn => 0.2,
    }
}

/// Deviation summary of one pair: `(max, rms)` over all times and over the
/// window where the gCCE modulus exceeds the threshold.
pub fn deviation_stats(c: &Comparison, pair: LevelPair) -> [f64; 4] {
    let g = c.gcce.pair(pair);
    let a = c.analytic.pair(pair);
    let stats = |mask: &dyn Fn(usize) -> bool| {
        let d: Vec<f64> = (0..g.len()).filter(|&i| mask(i)).map(|i| (g[i] - a[i]).abs()).collect();
        if d.is_empty() {
            return (0.0, 0.0);
        }
        let max = d.iter().cloned().fold(0.0, f64::max);
        let rms = (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
        (max, rms)
    };
    let (max_all, rms_all) = stats(&|_| true);
    let (max_w, rms_w) = stats(&|i| g[i] > c.window_threshold);
    [max_all, rms_all, max_w, rms_w]
}

/// Runs gCCE and the matching closed form on configuration 0: PCA for the
/// echo, the Gaussian law for the FID.
pub fn compare(cfg: &RunConfig) -> Result<Vec<Comparison>> {
    cfg.validate()?;
    let sys = cfg.electron_system();
    let bath = load_bath(cfg, &sys, 0)?;
    let opts: GcceOptions = cfg.gcce_options();
    let mut out = Vec::new();
    for &n in &cfg.simulation.pulses {
        let seq = PulseSequence::from_pulses(n)?;
        let times = time_grid(cfg, seq)?;
        let gcce = gcce_coherence(&sys, &bath, seq, &times, &opts)?.into_series();
        let analytic = match seq {
            PulseSequence::Fid => fid_analytic_series(&sys, &bath, &times)?,
            PulseSequence::Hahn => {
                let state = sample_initial_state(&bath, state_seed(cfg.simulation.seed, 0));
                pca_hahn_coherences(&sys, &bath, &state, &times)?
            }
        };
        out.push(Comparison {
            pulses: n,
            gcce,
            analytic,
            window_threshold: window_threshold(seq),
        });
    }
    Ok(out)
}

/// `compare_N{n}.csv` overlays (`t_s`, then `gcce_`, `analytic_`, `absdiff_`
/// per pair column) and `compare_summary.csv`.
pub fn write_compare(results: &[Comparison], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut summary = String::from("N,pair,max_abs_diff,rms_diff,window_threshold,max_abs_diff_window,rms_diff_window\n");
    for c in results {
        let mut text = String::from("t_s");
        for pair in LevelPair::ALL {
            let col = pair.column();
            write!(text, ",gcce_{col},analytic_{col},absdiff_{col}").unwrap();
        }
        text.push('\n');
        for (i, t) in c.gcce.times.iter().enumerate() {
            write!(text, "{t}").unwrap();
            for pair in LevelPair::ALL {
                let (g, a) = (c.gcce.pair(pair)[i], c.analytic.pair(pair)[i]);
                write!(text, ",{g},{a},{}", (g - a).abs()).unwrap();
            }
            text.push('\n');
        }
        files.push(write_file(dir, &format!("compare_N{}.csv", c.pulses), &text)?);
        for pair in LevelPair::ALL {
            let [m, r, mw, rw] = deviation_stats(c, pair);
            writeln!(summary, "{},{},{m},{r},{},{mw},{rw}", c.pulses, pair.name(), c.window_threshold).unwrap();
        }
    }
    files.push(write_file(dir, "compare_summary.csv", &summary)?);
    Ok(files)
}

pub fn field_map(cfg: &RunConfig) -> Result<FieldMapGrid> {
    cfg.validate()?;
    let fm = cfg.field_map.clone().unwrap_or_else(FieldMapSection::default);
    let sys = cfg.electron_system();
    field_maps(
        &sys,
        Plane::parse(&fm.plane)?,
        fm.extent_a,
        fm.spacing_a,
        cfg.bath.min_electron_distance_a,
        GAMMA_P,
    )
}

/// `field_map.csv`, `field_gradient.csv` (magnitude) and
/// `field_gradient_components.csv`.
pub fn write_field_map(grid: &FieldMapGrid, dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_file(dir, "field_map.csv", &grid.value_csv())?,
        write_file(dir, "field_gradient.csv", &grid.gradient_csv())?,
        write_file(dir, "field_gradient_components.csv", &grid.gradient_components_csv())?,
    ])
}

/// Contributing pairs of every configuration.
pub fn pair_stats(cfg: &RunConfig) -> Result<Vec<PairStatistics>> {
    cfg.validate()?;
    let ps = cfg.pair_stats.clone().unwrap_or_else(PairStatsSection::default);
    let measure = parse_measure(&ps.measure)?;
    let sys = cfg.electron_system();
    (0..cfg.simulation.configs as u64)
        .map(|i| {
            let bath = load_bath(cfg, &sys, i)?;
            let state = sample_initial_state(&bath, state_seed(cfg.simulation.seed, i));
            pair_statistics(&sys, &bath, &state, 0.5 * ps.echo_time_s, ps.threshold, measure)
        })
        .collect()
}

/// `pairs_{i:04}.csv` per configuration, `pair_histogram.csv` summed over
/// configurations and `pair_counts.csv` (`config,count`).
pub fn write_pair_stats(stats: &[PairStatistics], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut total = vec![0usize; stats.first().map_or(0, |s| s.histogram.len())];
    let mut counts = String::from("config,count\n");
    for (i, s) in stats.iter().enumerate() {
        files.push(write_file(dir, &format!("pairs_{i:04}.csv"), &s.pairs_csv())?);
        PairStatistics::accumulate_histogram(&mut total, s);
        writeln!(counts, "{i},{}", s.count()).unwrap();
    }
    files.push(write_file(dir, "pair_histogram.csv", &histogram_csv(&total))?);
    files.push(write_file(dir, "pair_counts.csv", &counts)?);
    Ok(files)
}

/// `C_hz,E_hz,f_k,g_k` on a symmetric `(C, E)` grid at fixed `D` and echo time.
pub fn pair_map_csv(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let pm = cfg.pair_map.clone().unwrap_or_else(PairMapSection::default);
    let axis = |max: f64| linear_times(2.0 * max, pm.points).into_iter().map(move |x| x - max);
    let tau = 0.5 * pm.echo_time_s;
    let mut out = String::from("C_hz,E_hz,f_k,g_k\n");
    for c in axis(pm.c_max_hz) {
        for e in axis(pm.e_max_hz) {
            let f = pair_decoherence_fk(c, e, pm.d_hz, tau);
            let g = pair_decoherence_gk(c, e, pm.d_hz, tau);
            writeln!(out, "{c},{e},{f},{g}").unwrap();
        }
    }
    Ok(out)
}
