//! Random proton baths around the two electrons.
//!
//! Sites are placed by sequential rejection sampling inside the union of two
//! spheres of radius `truncation_radius` centred on the electrons. Proposals
//! closer than `min_electron_distance` to either electron or closer than
//! `min_nuclear_spacing` to an accepted site are rejected. The number of
//! sites is fixed up front to `round(density × accessible volume)` so that
//! configurations stay comparable across a parameter sweep.
//!
//! Every configuration draws from its own ChaCha8 stream: the generator is
//! seeded with `master_seed` and switched to stream `config_index`, so
//! configurations are reproducible independently of scheduling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::GAMMA_P;
use crate::{Error, Result, Vec3};

/// Maximum number of proposals before generation is declared infeasible.
pub const REJECTION_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Proton density, spins per Å³.
    pub density: f64,
    /// Minimum electron–proton distance R_S, Å.
    pub min_electron_distance: f64,
    /// Minimum proton–proton distance R_B, Å.
    pub min_nuclear_spacing: f64,
    /// Radius of the sampling spheres around each electron, Å.
    pub truncation_radius: f64,
    pub master_seed: u64,
    pub config_index: u64,
}

impl Default for BathSpec {
    fn default() -> Self {
        BathSpec {
            density: 0.01,
            min_electron_distance: 5.0,
            min_nuclear_spacing: 2.0,
            truncation_radius: 30.0,
            master_seed: 42,
            config_index: 0,
        }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return bad("density must be finite and non-negative");
        }
        if !(self.min_electron_distance > 0.0) {
            return bad("min_electron_distance must be positive");
        }
        if !(self.min_nuclear_spacing >= 0.0) {
            return bad("min_nuclear_spacing must be non-negative");
        }
        if !(self.truncation_radius > 0.0 && self.truncation_radius.is_finite()) {
            return bad("truncation_radius must be positive");
        }
        Ok(())
    }

    pub fn with_config_index(mut self, index: u64) -> Self {
        self.config_index = index;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearSite {
    /// Position in Å.
    pub position: Vec3,
    /// Gyromagnetic ratio in Hz/T. All sites are spin-1/2.
    pub gamma: f64,
}

impl NuclearSite {
    pub fn proton(position: Vec3) -> Self {
        NuclearSite {
            position,
            gamma: GAMMA_P,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathWarning {
    /// `min_electron_distance >= truncation_radius`: nothing can be placed.
    ExclusionCoversRegion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathConfiguration {
    pub sites: Vec<NuclearSite>,
    pub spec: BathSpec,
    pub electron_positions: [Vec3; 2],
    pub warning: Option<BathWarning>,
}

impl BathConfiguration {
    /// A configuration built from explicit sites, e.g. for tests or when
    /// loading a table.
    pub fn from_sites(sites: Vec<NuclearSite>, spec: BathSpec, electron_positions: [Vec3; 2]) -> Self {
        BathConfiguration {
            sites,
            spec,
            electron_positions,
            warning: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Rotates sites and electrons about the y axis. Rotating by φ takes an
    /// inter-electron vector along +z to `cos φ ẑ + sin φ x̂`.
    pub fn rotated_about_y(&self, angle: f64) -> Self {
        let rot = rotation_y(angle);
        BathConfiguration {
            sites: self
                .sites
                .iter()
                .map(|s| NuclearSite {
                    position: rot * s.position,
                    gamma: s.gamma,
                })
                .collect(),
            spec: self.spec,
            electron_positions: [rot * self.electron_positions[0], rot * self.electron_positions[1]],
            warning: self.warning,
        }
    }

    /// Volume accessible to protons for this configuration's geometry.
    pub fn accessible_volume(&self) -> f64 {
        accessible_volume(&self.spec, &self.electron_positions)
    }

    /// Writes the plain-text site table.
    pub fn to_table(&self) -> String {
        let s = &self.spec;
        let [e1, e2] = self.electron_positions;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# density_per_a3={} min_electron_distance_a={} min_nuclear_spacing_a={} truncation_radius_a={} master_seed={} config_index={} electron1={},{},{} electron2={},{},{}",
            s.density,
            s.min_electron_distance,
            s.min_nuclear_spacing,
            s.truncation_radius,
            s.master_seed,
            s.config_index,
            e1.x,
            e1.y,
            e1.z,
            e2.x,
            e2.y,
            e2.z
        );
        out.push_str("x_angstrom y_angstrom z_angstrom gyromagnetic_hz_per_tesla\n");
        for site in &self.sites {
            let p = site.position;
            let _ = writeln!(out, "{} {} {} {}", p.x, p.y, p.z, site.gamma);
        }
        out
    }

    /// Parses a table written by [`BathConfiguration::to_table`].
    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("bath table: missing '#' header line".into()))?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for token in header.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bath table: malformed header token '{token}'")))?;
            fields.insert(k, v);
        }
        let get = |key: &str| -> Result<&str> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("bath table: header lacks '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bath table: '{key}': {e}")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("bath table: '{key}': {e}")))
        };
        let vec3 = |key: &str| -> Result<Vec3> {
            let parts: Vec<f64> = get(key)?
                .split(',')
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("bath table: '{key}': {e}")))?;
            match parts.as_slice() {
                [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
                _ => Err(Error::Parse(format!("bath table: '{key}' needs three components"))),
            }
        };
        let spec = BathSpec {
            density: num("density_per_a3")?,
            min_electron_distance: num("min_electron_distance_a")?,
            min_nuclear_spacing: num("min_nuclear_spacing_a")?,
            truncation_radius: num("truncation_radius_a")?,
            master_seed: int("master_seed")?,
            config_index: int("config_index")?,
        };
        let electrons = [vec3("electron1")?, vec3("electron2")?];

        match lines.next() {
            Some(l) if l.split_whitespace().next() == Some("x_angstrom") => {}
            _ => return Err(Error::Parse("bath table: missing column header".into())),
        }
        let mut sites = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("bath table row {}: {e}", lineno + 1)))?;
            let [x, y, z, gamma] = cols[..] else {
                return Err(Error::Parse(format!("bath table row {}: expected 4 columns", lineno + 1)));
            };
            sites.push(NuclearSite {
                position: Vec3::new(x, y, z),
                gamma,
            });
        }
        Ok(BathConfiguration::from_sites(sites, spec, electrons))
    }
}

fn rotation_y(angle: f64) -> nalgebra::Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    nalgebra::Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Electron positions used for generation: centred on the origin, separated
/// by `distance` along z.
pub fn reference_electrons(distance: f64) -> [Vec3; 2] {
    [Vec3::new(0.0, 0.0, 0.5 * distance), Vec3::new(0.0, 0.0, -0.5 * distance)]
}

/// Volume of the union of two spheres of equal radius whose centres are
/// `separation` apart.
pub fn union_volume(radius: f64, separation: f64) -> f64 {
    let sphere = 4.0 / 3.0 * PI * radius.powi(3);
    if separation >= 2.0 * radius {
        2.0 * sphere
    } else {
        let lens = PI * (4.0 * radius + separation) * (2.0 * radius - separation).powi(2) / 12.0;
        2.0 * sphere - lens
    }
}

/// Volume available to protons: union of the sampling spheres minus the
/// union of the exclusion spheres.
pub fn accessible_volume(spec: &BathSpec, electrons: &[Vec3; 2]) -> f64 {
    let d = (electrons[0] - electrons[1]).norm();
    if spec.min_electron_distance >= spec.truncation_radius {
        return 0.0;
    }
    union_volume(spec.truncation_radius, d) - union_volume(spec.min_electron_distance, d)
}

/// Number of sites the generator places.
pub fn target_count(spec: &BathSpec, electrons: &[Vec3; 2]) -> usize {
    (spec.density * accessible_volume(spec, electrons)).round() as usize
}

/// Truncation radius at which the expected site count equals `count`.
pub fn truncation_radius_for_count(spec: &BathSpec, distance: f64, count: f64) -> f64 {
    let electrons = reference_electrons(distance);
    let expected = |r: f64| {
        let s = BathSpec {
            truncation_radius: r,
            ..*spec
        };
        spec.density * accessible_volume(&s, &electrons)
    };
    let mut lo = spec.min_electron_distance;
    let mut hi = lo + 1.0;
    while expected(hi) < count {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < count {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Deterministic random stream for one configuration.
pub fn config_rng(master_seed: u64, config_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(config_index);
    rng
}

struct SpatialHash {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl SpatialHash {
    fn new(cell: f64) -> Self {
        SpatialHash {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Vec3) -> (i64, i64, i64) {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }

    fn insert(&mut self, p: &Vec3, index: usize) {
        let key = self.key(p);
        self.cells.entry(key).or_default().push(index);
    }

    fn any_within(&self, p: &Vec3, radius: f64, points: &[Vec3]) -> bool {
        let (cx, cy, cz) = self.key(p);
        let r2 = radius * radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        if bucket.iter().any(|&i| (points[i] - p).norm_squared() < r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Generates one bath configuration. The output is a pure function of
/// `(spec, electron_positions)`.
pub fn generate_bath(spec: &BathSpec, electron_positions: [Vec3; 2]) -> Result<BathConfiguration> {
    spec.validate()?;
    let [e1, e2] = electron_positions;
    if (e1 - e2).norm() == 0.0 {
        return Err(Error::InvalidParameter("electron positions must be distinct".into()));
    }
    if spec.min_electron_distance >= spec.truncation_radius {
        if spec.density > 0.0 {
            log::warn!(
                "min electron distance {} Å covers the truncation radius {} Å; bath is empty",
                spec.min_electron_distance,
                spec.truncation_radius
            );
        }
        return Ok(BathConfiguration {
            sites: Vec::new(),
            spec: *spec,
            electron_positions,
            warning: (spec.density > 0.0).then_some(BathWarning::ExclusionCoversRegion),
        });
    }

    let target = target_count(spec, &electron_positions);
    let r = spec.truncation_radius;
    let lo = Vec3::new(e1.x.min(e2.x) - r, e1.y.min(e2.y) - r, e1.z.min(e2.z) - r);
    let hi = Vec3::new(e1.x.max(e2.x) + r, e1.y.max(e2.y) + r, e1.z.max(e2.z) + r);
    let r2 = r * r;
    let rs2 = spec.min_electron_distance.powi(2);
    let spacing = spec.min_nuclear_spacing;

    let mut rng = config_rng(spec.master_seed, spec.config_index);
    let mut points: Vec<Vec3> = Vec::with_capacity(target);
    let mut grid = SpatialHash::new(spacing.max(0.5));
    let mut proposals = 0usize;

    while points.len() < target {
        if proposals >= REJECTION_BUDGET {
            return Err(Error::Infeasible {
                placed: points.len(),
                target,
                proposals,
            });
        }
        proposals += 1;
        let p = Vec3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        );
        let d1 = (p - e1).norm_squared();
        let d2 = (p - e2).norm_squared();
        if d1 > r2 && d2 > r2 {
            continue;
        }
        if d1 < rs2 || d2 < rs2 {
            continue;
        }
        if spacing > 0.0 && grid.any_within(&p, spacing, &points) {
            continue;
        }
        grid.insert(&p, points.len());
        points.push(p);
    }

    Ok(BathConfiguration {
        sites: points.into_iter().map(NuclearSite::proton).collect(),
        spec: *spec,
        electron_positions,
        warning: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Two sites closer than the minimum spacing.
    NuclearSpacing { first: usize, second: usize, distance: f64 },
    /// A site closer than the minimum distance to an electron.
    ElectronDistance { site: usize, electron: usize, distance: f64 },
    /// A site outside the truncation radius of both electrons.
    OutsideRegion { site: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathDiagnostics {
    pub site_count: usize,
    /// Sites per Å³ of accessible volume (0 when the volume vanishes).
    pub realized_density: f64,
    /// Smallest site–site distance (∞ with fewer than two sites).
    pub min_pair_distance: f64,
    /// Smallest site–electron distance (∞ for an empty bath).
    pub min_electron_distance: f64,
    pub violations: Vec<Violation>,
}

/// Checks a configuration against its own constraints by brute force.
pub fn validate_bath(config: &BathConfiguration) -> BathDiagnostics {
    let spec = &config.spec;
    let sites = &config.sites;
    let mut violations = Vec::new();
    let mut min_pair = f64::INFINITY;
    let mut min_elec = f64::INFINITY;

    for (i, a) in sites.iter().enumerate() {
        let mut nearest_electron = f64::INFINITY;
        for (j, e) in config.electron_positions.iter().enumerate() {
            let d = (a.position - e).norm();
            min_elec = min_elec.min(d);
            nearest_electron = nearest_electron.min(d);
            if d < spec.min_electron_distance {
                violations.push(Violation::ElectronDistance {
                    site: i,
                    electron: j,
                    distance: d,
                });
            }
        }
        if nearest_electron > spec.truncation_radius {
            violations.push(Violation::OutsideRegion {
                site: i,
                distance: nearest_electron,
            });
        }
        for (j, b) in sites.iter().enumerate().skip(i + 1) {
            let d = (a.position - b.position).norm();
            min_pair = min_pair.min(d);
            if d < spec.min_nuclear_spacing {
                violations.push(Violation::NuclearSpacing {
                    first: i,
                    second: j,
                    distance: d,
                });
            }
        }
    }

    let volume = config.accessible_volume();
    BathDiagnostics {
        site_count: sites.len(),
        realized_density: if volume > 0.0 { sites.len() as f64 / volume } else { 0.0 },
        min_pair_distance: min_pair,
        min_electron_distance: min_elec,
        violations,
    }
}
