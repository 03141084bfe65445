//! Run configuration in TOML.
//!
//! ```toml
//! [bath]
//! density_per_a3 = 0.01
//! min_electron_distance_a = 5.0
//! min_nuclear_spacing_a = 2.0
//! truncation_radius_a = 20.0
//!
//! [electrons]
//! distance_a = 5.0
//! exchange_hz = 10000000000.0
//! field_t = 1.0
//! orientation = "parallel"
//! ee_dipolar = false
//!
//! [simulation]
//! pulses = [0, 1]
//! order = 2
//! pair_cutoff_a = 8.0
//! time_points = 201
//! configs = 20
//! seed = 42
//! envelope_fit = false
//!
//! [sweep]
//! field_t = [0.3, 1.0, 3.0, 10.0]
//!
//! [output]
//! dir = "out"
//! complex = false
//! ```
//!
//! `file = "sites.txt"` in `[bath]` replaces generation by a site table
//! written by `generate-bath` (one configuration).
//!
//! Every section and key is optional and defaults to the values above, except
//! `[sweep]`, which is absent unless given. `t_max_s` in `[simulation]` fixes
//! the time grid; without it the runner picks one. `orientation` is
//! `"parallel"`, `"perpendicular"` or `"angle_deg = φ"`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analytic::{PairMeasure, Plane};
use crate::bathgen::BathSpec;
use crate::gcce::{GcceOptions, PairCriterion, PulseSequence};
use crate::spinham::ElectronSystem;
use crate::{Error, Result};

/// Angle between the electron separation and the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    Parallel,
    Perpendicular,
    /// Degrees.
    Angle(f64),
}

impl Orientation {
    pub fn degrees(self) -> f64 {
        match self {
            Orientation::Parallel => 0.0,
            Orientation::Perpendicular => 90.0,
            Orientation::Angle(a) => a,
        }
    }

    pub fn radians(self) -> f64 {
        self.degrees().to_radians()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "parallel" => return Ok(Orientation::Parallel),
            "perpendicular" => return Ok(Orientation::Perpendicular),
            _ => {}
        }
        let bad = || Error::Parse(format!("bad orientation '{s}' (expected parallel, perpendicular or angle_deg = φ)"));
        let (key, value) = t.split_once('=').ok_or_else(bad)?;
        if key.trim() != "angle_deg" {
            return Err(bad());
        }
        let a: f64 = value.trim().parse().map_err(|_| bad())?;
        if !a.is_finite() {
            return Err(bad());
        }
        Ok(Orientation::Angle(a))
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Parallel => f.write_str("parallel"),
            Orientation::Perpendicular => f.write_str("perpendicular"),
            Orientation::Angle(a) => write!(f, "angle_deg = {a:?}"),
        }
    }
}

impl Serialize for Orientation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Orientation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Orientation::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    /// Site table to use instead of generating configurations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub density_per_a3: f64,
    pub min_electron_distance_a: f64,
    pub min_nuclear_spacing_a: f64,
    pub truncation_radius_a: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection {
            file: None,
            density_per_a3: 0.01,
            min_electron_distance_a: 5.0,
            min_nuclear_spacing_a: 2.0,
            truncation_radius_a: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectronSection {
    pub distance_a: f64,
    pub exchange_hz: f64,
    pub field_t: f64,
    pub orientation: Orientation,
    pub ee_dipolar: bool,
}

impl Default for ElectronSection {
    fn default() -> Self {
        ElectronSection {
            distance_a: 5.0,
            exchange_hz: 10e9,
            field_t: 1.0,
            orientation: Orientation::Parallel,
            ee_dipolar: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Pulse counts to run; each of 0 (FID) and 1 (Hahn echo).
    pub pulses: Vec<u32>,
    pub order: usize,
    /// Two nuclei belong to one cluster when closer than this, Å.
    pub pair_cutoff_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max_s: Option<f64>,
    pub time_points: usize,
    pub configs: usize,
    pub seed: u64,
    /// Fit the upper envelope instead of the raw curve.
    pub envelope_fit: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            pulses: vec![0, 1],
            order: 2,
            pair_cutoff_a: 8.0,
            t_max_s: None,
            time_points: 201,
            configs: 20,
            seed: 42,
            envelope_fit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write complex coherences of single-configuration runs.
    pub complex: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            complex: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapSection {
    pub plane: String,
    pub extent_a: f64,
    pub spacing_a: f64,
}

impl Default for FieldMapSection {
    fn default() -> Self {
        FieldMapSection {
            plane: "xz".into(),
            extent_a: 30.0,
            spacing_a: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairStatsSection {
    /// Total echo time `2τ`, s.
    pub echo_time_s: f64,
    pub threshold: f64,
    /// `"f"` for `f_k` or `"g"` for `g_k`.
    pub measure: String,
}

impl Default for PairStatsSection {
    fn default() -> Self {
        PairStatsSection {
            echo_time_s: 20e-6,
            threshold: 1e-3,
            measure: "f".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairMapSection {
    /// Ising detuning `D`, Hz.
    pub d_hz: f64,
    /// Total echo time `2τ`, s.
    pub echo_time_s: f64,
    /// Grid half-widths in `C` and `E`, Hz.
    pub c_max_hz: f64,
    pub e_max_hz: f64,
    /// Samples per axis.
    pub points: usize,
}

impl Default for PairMapSection {
    fn default() -> Self {
        PairMapSection {
            d_hz: 5e3,
            echo_time_s: 40e-6,
            c_max_hz: 2e3,
            e_max_hz: 50e3,
            points: 101,
        }
    }
}

/// Parameters that can be swept, by config key.
pub const SWEEP_AXES: [&str; 7] = [
    "field_t",
    "orientation",
    "exchange_hz",
    "distance_a",
    "min_electron_distance_a",
    "min_nuclear_spacing_a",
    "density_per_a3",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub electrons: ElectronSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    /// Axis name → values; `orientation` values are angles in degrees.
    /// Points are the Cartesian product in key order.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_map: Option<FieldMapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_stats: Option<PairStatsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_map: Option<PairMapSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bath: BathSection::default(),
            electrons: ElectronSection::default(),
            simulation: SimulationSection::default(),
            sweep: BTreeMap::new(),
            output: OutputSection::default(),
            field_map: None,
            pair_stats: None,
            pair_map: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML; parsing it back gives an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.sweep.keys() {
            if !SWEEP_AXES.contains(&key.as_str()) {
                return Err(Error::Parse(format!(
                    "unknown sweep axis '{key}' (expected one of {})",
                    SWEEP_AXES.join(", ")
                )));
            }
        }
        for (key, values) in &self.sweep {
            if values.is_empty() {
                return Err(Error::Parse(format!("sweep axis '{key}' has no values")));
            }
        }
        let sim = &self.simulation;
        if sim.pulses.is_empty() {
            return Err(Error::InvalidParameter("simulation.pulses is empty".into()));
        }
        for &n in &sim.pulses {
            PulseSequence::from_pulses(n)?;
        }
        if sim.time_points < 2 {
            return Err(Error::InvalidParameter("simulation.time_points must be at least 2".into()));
        }
        if sim.configs == 0 {
            return Err(Error::InvalidParameter("simulation.configs must be at least 1".into()));
        }
        if let Some(t) = sim.t_max_s {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("simulation.t_max_s must be positive, got {t}")));
            }
        }
        if self.bath.file.is_some() && sim.configs != 1 {
            return Err(Error::InvalidParameter("a bath file holds one configuration; set simulation.configs = 1".into()));
        }
        if let Some(fm) = &self.field_map {
            Plane::parse(&fm.plane)?;
        }
        if let Some(ps) = &self.pair_stats {
            self::parse_measure(&ps.measure)?;
        }
        if let Some(pm) = &self.pair_map {
            if pm.points < 2 || !(pm.echo_time_s > 0.0) {
                return Err(Error::InvalidParameter("pair_map needs points >= 2 and echo_time_s > 0".into()));
            }
        }
        self.bath_spec().validate()?;
        self.electron_system().validate()?;
        Ok(())
    }

    pub fn bath_spec(&self) -> BathSpec {
        BathSpec {
            density: self.bath.density_per_a3,
            min_electron_distance: self.bath.min_electron_distance_a,
            min_nuclear_spacing: self.bath.min_nuclear_spacing_a,
            truncation_radius: self.bath.truncation_radius_a,
            master_seed: self.simulation.seed,
            config_index: 0,
        }
    }

    pub fn electron_system(&self) -> ElectronSystem {
        let e = &self.electrons;
        ElectronSystem::new(e.distance_a, e.orientation.radians(), e.exchange_hz, e.field_t).with_dipolar(e.ee_dipolar)
    }

    pub fn gcce_options(&self) -> GcceOptions {
        GcceOptions {
            order: self.simulation.order,
            criterion: PairCriterion::Distance(self.simulation.pair_cutoff_a),
            amplitudes: None,
        }
    }

    /// Copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        match axis {
            "field_t" => c.electrons.field_t = value,
            "orientation" => c.electrons.orientation = Orientation::Angle(value),
            "exchange_hz" => c.electrons.exchange_hz = value,
            "distance_a" => c.electrons.distance_a = value,
            "min_electron_distance_a" => c.bath.min_electron_distance_a = value,
            "min_nuclear_spacing_a" => c.bath.min_nuclear_spacing_a = value,
            "density_per_a3" => c.bath.density_per_a3 = value,
            _ => return Err(Error::Parse(format!("unknown sweep axis '{axis}'"))),
        }
        Ok(c)
    }

    /// Cartesian product of the sweep axes, first axis slowest.
    pub fn sweep_points(&self) -> Vec<Vec<(String, f64)>> {
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (axis, values) in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((axis.clone(), v));
                        q
                    })
                })
                .collect();
        }
        points
    }
}

pub fn parse_measure(s: &str) -> Result<PairMeasure> {
    match s {
        "f" | "f_k" => Ok(PairMeasure::F),
        "g" | "g_k" => Ok(PairMeasure::G),
        _ => Err(Error::Parse(format!("unknown pair measure '{s}' (expected f or g)"))),
    }
}
