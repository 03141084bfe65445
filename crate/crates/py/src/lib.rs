//! Python module `twospin`.
//!
//! Coherences come back as dicts keyed by pair name (`m1_0`, `1_0`, `m1_S`,
//! `1_S`, `m1_1`, `S_0`) holding lists of moduli.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use twospin::analytic;
use twospin::bathgen::{self, BathConfiguration, BathSpec};
use twospin::config::RunConfig;
use twospin::fitting;
use twospin::gcce::{self, CoherenceSeries, GcceOptions, LevelPair, PairCriterion, PulseSequence};
use twospin::runner;
use twospin::spinham;

fn to_py(e: twospin::Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

type Curves = BTreeMap<String, Vec<f64>>;

fn curves(series: &CoherenceSeries) -> Curves {
    LevelPair::ALL
        .iter()
        .map(|p| (p.name(), series.pair(*p).to_vec()))
        .collect()
}

#[pyclass(name = "ElectronSystem", frozen)]
struct PyElectronSystem {
    inner: spinham::ElectronSystem,
}

#[pymethods]
impl PyElectronSystem {
    #[new]
    #[pyo3(signature = (distance_a=5.0, angle_deg=0.0, exchange_hz=10e9, field_t=1.0, ee_dipolar=false))]
    fn new(distance_a: f64, angle_deg: f64, exchange_hz: f64, field_t: f64, ee_dipolar: bool) -> PyResult<Self> {
        let inner = spinham::ElectronSystem::new(distance_a, angle_deg.to_radians(), exchange_hz, field_t)
            .with_dipolar(ee_dipolar);
        inner.validate().map_err(to_py)?;
        Ok(PyElectronSystem { inner })
    }

    #[getter]
    fn electron_positions(&self) -> Vec<(f64, f64, f64)> {
        self.inner.electron_positions.iter().map(|p| (p.x, p.y, p.z)).collect()
    }

    /// Electron–electron dipolar constant `D`, Hz.
    #[getter]
    fn dipolar_strength(&self) -> f64 {
        self.inner.dipolar_strength()
    }

    /// Electron energies in the order S, -1, 0, 1, Hz.
    fn energies(&self) -> PyResult<Vec<f64>> {
        Ok(spinham::electron_eigenbasis(&self.inner).map_err(to_py)?.energies.to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "ElectronSystem(distance_a={}, angle_deg={}, exchange_hz={}, field_t={}, ee_dipolar={})",
            self.inner.distance(),
            self.inner.tilt().to_degrees(),
            self.inner.exchange,
            self.inner.field,
            self.inner.include_ee_dipolar
        )
    }
}

#[pyclass(name = "Bath", frozen)]
struct PyBath {
    inner: BathConfiguration,
}

#[pymethods]
impl PyBath {
    /// Bath from explicit proton positions (Å) around `system`.
    #[new]
    fn new(system: &PyElectronSystem, positions: Vec<(f64, f64, f64)>) -> Self {
        let sites = positions
            .into_iter()
            .map(|(x, y, z)| bathgen::NuclearSite::proton(twospin::Vec3::new(x, y, z)))
            .collect();
        PyBath {
            inner: BathConfiguration::from_sites(sites, BathSpec::default(), system.inner.electron_positions),
        }
    }

    #[staticmethod]
    fn from_table(text: &str) -> PyResult<Self> {
        Ok(PyBath {
            inner: BathConfiguration::from_table(text).map_err(to_py)?,
        })
    }

    fn to_table(&self) -> String {
        self.inner.to_table()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .sites
            .iter()
            .map(|s| (s.position.x, s.position.y, s.position.z))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.sites.len()
    }
}

/// Random bath configuration `index` for `system`.
#[pyfunction]
#[pyo3(signature = (system, density_per_a3=0.01, min_electron_distance_a=5.0, min_nuclear_spacing_a=2.0, truncation_radius_a=20.0, seed=42, index=0))]
fn generate_bath(
    system: &PyElectronSystem,
    density_per_a3: f64,
    min_electron_distance_a: f64,
    min_nuclear_spacing_a: f64,
    truncation_radius_a: f64,
    seed: u64,
    index: u64,
) -> PyResult<PyBath> {
    let spec = BathSpec {
        density: density_per_a3,
        min_electron_distance: min_electron_distance_a,
        min_nuclear_spacing: min_nuclear_spacing_a,
        truncation_radius: truncation_radius_a,
        master_seed: seed,
        config_index: 0,
    };
    let inner = gcce::configuration(&spec, &system.inner, index).map_err(to_py)?;
    Ok(PyBath { inner })
}

/// gCCE coherences of one configuration.
#[pyfunction]
#[pyo3(signature = (system, bath, times, pulses=1, order=2, pair_cutoff_a=8.0))]
fn gcce_coherence(
    py: Python<'_>,
    system: &PyElectronSystem,
    bath: &PyBath,
    times: Vec<f64>,
    pulses: u32,
    order: usize,
    pair_cutoff_a: f64,
) -> PyResult<Curves> {
    let seq = PulseSequence::from_pulses(pulses).map_err(to_py)?;
    let opts = GcceOptions {
        order,
        criterion: PairCriterion::Distance(pair_cutoff_a),
        amplitudes: None,
    };
    let series = py
        .detach(|| gcce::gcce_coherence(&system.inner, &bath.inner, seq, &times, &opts))
        .map_err(to_py)?
        .into_series();
    Ok(curves(&series))
}

/// Exact coherences from full-Hilbert-space evolution (at most 6 nuclei).
#[pyfunction]
#[pyo3(signature = (system, bath, times, pulses=1))]
fn exact_coherence(system: &PyElectronSystem, bath: &PyBath, times: Vec<f64>, pulses: u32) -> PyResult<Curves> {
    let seq = PulseSequence::from_pulses(pulses).map_err(to_py)?;
    let series = gcce::exact_reference(&system.inner, &bath.inner, seq, &times, None).map_err(to_py)?;
    Ok(curves(&series))
}

/// Pair-correlation Hahn-echo coherences for a random product state.
#[pyfunction]
#[pyo3(signature = (system, bath, times, seed=0))]
fn pca_hahn(system: &PyElectronSystem, bath: &PyBath, times: Vec<f64>, seed: u64) -> PyResult<Curves> {
    let state = analytic::sample_initial_state(&bath.inner, seed);
    let series = analytic::pca_hahn_coherences(&system.inner, &bath.inner, &state, &times).map_err(to_py)?;
    Ok(curves(&series))
}

/// `(sigma_hz, t2star_s)` of the Gaussian FID.
#[pyfunction]
fn fid_t2star(system: &PyElectronSystem, bath: &PyBath) -> PyResult<(f64, f64)> {
    analytic::fid_sigma_t2star(&system.inner, &bath.inner).map_err(to_py)
}

#[pyfunction]
fn fid_analytic(system: &PyElectronSystem, bath: &PyBath, times: Vec<f64>) -> PyResult<Curves> {
    let series = analytic::fid_analytic_series(&system.inner, &bath.inner, &times).map_err(to_py)?;
    Ok(curves(&series))
}

/// `(f_k, g_k)` of one flip-flop pair at segment length `tau`.
#[pyfunction]
fn pair_decoherence(c: f64, e: f64, d: f64, tau: f64) -> (f64, f64) {
    (
        analytic::pair_decoherence_fk(c, e, d, tau),
        analytic::pair_decoherence_gk(c, e, d, tau),
    )
}

#[pyclass(name = "DecayFit", frozen, get_all)]
struct PyDecayFit {
    t: f64,
    b: f64,
    rmse: f64,
    window: (f64, f64),
    method: String,
}

#[pymethods]
impl PyDecayFit {
    fn __repr__(&self) -> String {
        format!("DecayFit(t={:e}, b={}, rmse={:e}, method='{}')", self.t, self.b, self.rmse, self.method)
    }
}

/// Stretched-exponential fit `exp[-(t/T)^b]`.
#[pyfunction]
#[pyo3(signature = (times, values, envelope=false))]
fn fit_decay(times: Vec<f64>, values: Vec<f64>, envelope: bool) -> PyResult<PyDecayFit> {
    let f = if envelope {
        fitting::fit_envelope(&times, &values)
    } else {
        fitting::fit_stretched_exponential(&times, &values)
    }
    .map_err(to_py)?;
    Ok(PyDecayFit {
        t: f.t,
        b: f.b,
        rmse: f.rmse,
        window: f.window,
        method: f.method.to_string(),
    })
}

/// Runs a TOML configuration; returns `{pulses: {"t_s": [...], pair: [...]}}`.
#[pyfunction]
fn run_config(py: Python<'_>, toml_text: &str) -> PyResult<BTreeMap<u32, Curves>> {
    let cfg = RunConfig::from_toml(toml_text).map_err(to_py)?;
    let results = py.detach(|| runner::run(&cfg)).map_err(to_py)?;
    Ok(results
        .iter()
        .map(|r| {
            let mut c = curves(&r.ensemble.mean);
            c.insert("t_s".into(), r.ensemble.mean.times.clone());
            (r.pulses, c)
        })
        .collect())
}

#[pymodule]
#[pyo3(name = "twospin")]
fn twospin_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyElectronSystem>()?;
    m.add_class::<PyBath>()?;
    m.add_class::<PyDecayFit>()?;
    m.add_function(wrap_pyfunction!(generate_bath, m)?)?;
    m.add_function(wrap_pyfunction!(gcce_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(exact_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(pca_hahn, m)?)?;
    m.add_function(wrap_pyfunction!(fid_t2star, m)?)?;
    m.add_function(wrap_pyfunction!(fid_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(pair_decoherence, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
