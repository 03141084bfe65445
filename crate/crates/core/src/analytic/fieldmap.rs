//! Spatial maps of the secular hyperfine field `A_1zz + A_2zz`.

use std::fmt::Write as _;

use crate::constants::dipolar_prefactor;
use crate::spinham::ElectronSystem;
use crate::{Error, Result, Vec3};

/// Plane through the origin holding the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Plane {
    #[default]
    XZ,
    XY,
    YZ,
}

impl Plane {
    /// Axis indices `(u, v)` spanning the plane.
    pub fn axes(self) -> (usize, usize) {
        match self {
            Plane::XZ => (0, 2),
            Plane::XY => (0, 1),
            Plane::YZ => (1, 2),
        }
    }

    fn axis_name(i: usize) -> &'static str {
        ["x", "y", "z"][i]
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xz" => Ok(Plane::XZ),
            "xy" => Ok(Plane::XY),
            "yz" => Ok(Plane::YZ),
            _ => Err(Error::Parse(format!("unknown plane '{s}' (expected xz, xy or yz)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::XZ => "xz",
            Plane::XY => "xy",
            Plane::YZ => "yz",
        }
    }

    fn point(self, u: f64, v: f64) -> Vec3 {
        let (a, b) = self.axes();
        let mut p = Vec3::zeros();
        p[a] = u;
        p[b] = v;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMapPoint {
    /// In-plane coordinates, Å.
    pub u: f64,
    pub v: f64,
    /// `|A_1zz + A_2zz|`, Hz.
    pub value: f64,
    /// In-plane gradient of `A_1zz + A_2zz`, Hz/Å.
    pub gradient: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldMapGrid {
    pub plane: Plane,
    /// Grid spacing, Å.
    pub spacing: f64,
    /// Points row-major in `v`, then `u`, skipping the exclusion disks.
    pub points: Vec<FieldMapPoint>,
}

impl FieldMapGrid {
    fn header(&self, value: &str) -> String {
        let (a, b) = self.plane.axes();
        format!(
            "{}_angstrom,{}_angstrom,{value}\n",
            Plane::axis_name(a),
            Plane::axis_name(b)
        )
    }

    /// `|A_1zz + A_2zz|` per point.
    pub fn value_csv(&self) -> String {
        let mut out = self.header("value");
        for p in &self.points {
            writeln!(out, "{},{},{}", p.u, p.v, p.value).unwrap();
        }
        out
    }

    /// Magnitude of the in-plane gradient per point.
    pub fn gradient_csv(&self) -> String {
        let mut out = self.header("value");
        for p in &self.points {
            writeln!(out, "{},{},{}", p.u, p.v, p.gradient[0].hypot(p.gradient[1])).unwrap();
        }
        out
    }

    /// Gradient components per point.
    pub fn gradient_components_csv(&self) -> String {
        let (a, b) = self.plane.axes();
        let (na, nb) = (Plane::axis_name(a), Plane::axis_name(b));
        let mut out = format!("{na}_angstrom,{nb}_angstrom,grad_{na}_hz_per_angstrom,grad_{nb}_hz_per_angstrom\n");
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.u, p.v, p.gradient[0], p.gradient[1]).unwrap();
        }
        out
    }
}

/// Full gradient of `A_1zz + A_2zz` at `position`, Hz/Å.
///
/// Each electron contributes `-K0 (3z²/ρ⁵ - 1/ρ³)` with `K0 = K(1 Å)`.
pub fn hyperfine_zz_gradient(sys: &ElectronSystem, position: &Vec3, gamma_n: f64) -> Vec3 {
    let k0 = dipolar_prefactor(1.0, sys.gamma_e, gamma_n);
    let mut g = Vec3::zeros();
    for e in &sys.electron_positions {
        let r = position - e;
        let rho2 = r.norm_squared();
        let rho5 = rho2 * rho2 * rho2.sqrt();
        let rho7 = rho5 * rho2;
        let z2 = r.z * r.z;
        g.x -= k0 * (3.0 * r.x / rho5 - 15.0 * z2 * r.x / rho7);
        g.y -= k0 * (3.0 * r.y / rho5 - 15.0 * z2 * r.y / rho7);
        g.z -= k0 * (9.0 * r.z / rho5 - 15.0 * z2 * r.z / rho7);
    }
    g
}

/// Samples the field on a square grid of half-width `extent` (Å) centred on
/// the origin, leaving out points within `exclusion` of either electron.
pub fn field_maps(
    sys: &ElectronSystem,
    plane: Plane,
    extent: f64,
    spacing: f64,
    exclusion: f64,
    gamma_n: f64,
) -> Result<FieldMapGrid> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {spacing}")));
    }
    if !(extent >= 0.0 && extent.is_finite()) {
        return Err(Error::InvalidParameter(format!("map extent must be non-negative, got {extent}")));
    }
    let half = (extent / spacing + 1e-9).floor() as i64;
    let (a, b) = plane.axes();
    let mut points = Vec::new();
    for iv in -half..=half {
        for iu in -half..=half {
            let (u, v) = (iu as f64 * spacing, iv as f64 * spacing);
            let r = plane.point(u, v);
            if sys.electron_positions.iter().any(|e| (r - e).norm() <= exclusion) {
                continue;
            }
            let value = sys.hyperfine_zz_sum(&r, gamma_n);
            if !value.is_finite() {
                continue;
            }
            let g = hyperfine_zz_gradient(sys, &r, gamma_n);
            points.push(FieldMapPoint {
                u,
                v,
                value: value.abs(),
                gradient: [g[a], g[b]],
            });
        }
    }
    Ok(FieldMapGrid { plane, spacing, points })
}
