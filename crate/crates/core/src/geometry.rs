//! Relay-wall frame, scan lattices and capture topologies.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Time of flight between two points, in seconds.
#[inline]
pub fn tof(a: Vec3, b: Vec3) -> f64 {
    a.distance(b) / SPEED_OF_LIGHT
}

fn check_unit(name: &str, v: Vec3) -> Result<()> {
    if !v.is_finite() || (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(NlosError::invalid(format!("{name} must be a unit vector")));
    }
    Ok(())
}

/// Planar relay wall: an origin, an orthonormal frame and a rectangular extent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RelayGeometryFields", deny_unknown_fields)]
pub struct RelayGeometry {
    origin: Vec3,
    basis_u: Vec3,
    basis_v: Vec3,
    normal: Vec3,
    extent_u: f64,
    extent_v: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelayGeometryFields {
    origin: Vec3,
    basis_u: Vec3,
    basis_v: Vec3,
    normal: Vec3,
    extent_u: f64,
    extent_v: f64,
}

impl TryFrom<RelayGeometryFields> for RelayGeometry {
    type Error = NlosError;
    fn try_from(f: RelayGeometryFields) -> Result<Self> {
        RelayGeometry::new(f.origin, f.basis_u, f.basis_v, f.normal, f.extent_u, f.extent_v)
    }
}

impl RelayGeometry {
    pub fn new(origin: Vec3, basis_u: Vec3, basis_v: Vec3, normal: Vec3, extent_u: f64, extent_v: f64) -> Result<Self> {
        if !origin.is_finite() {
            return Err(NlosError::invalid("relay origin must be finite"));
        }
        check_unit("basis_u", basis_u)?;
        check_unit("basis_v", basis_v)?;
        check_unit("normal", normal)?;
        if basis_u.dot(basis_v).abs() > UNIT_TOL
            || basis_u.dot(normal).abs() > UNIT_TOL
            || basis_v.dot(normal).abs() > UNIT_TOL
        {
            return Err(NlosError::invalid("relay frame must be orthogonal"));
        }
        if !(extent_u > 0.0 && extent_v > 0.0) || !extent_u.is_finite() || !extent_v.is_finite() {
            return Err(NlosError::invalid("relay extents must be positive"));
        }
        Ok(RelayGeometry { origin, basis_u, basis_v, normal, extent_u, extent_v })
    }

    /// Wall in the z = 0 plane centred at the world origin, facing +z.
    pub fn canonical(extent_u: f64, extent_v: f64) -> Result<Self> {
        Self::new(Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::Z, extent_u, extent_v)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }
    pub fn basis_u(&self) -> Vec3 {
        self.basis_u
    }
    pub fn basis_v(&self) -> Vec3 {
        self.basis_v
    }
    pub fn normal(&self) -> Vec3 {
        self.normal
    }
    pub fn extent_u(&self) -> f64 {
        self.extent_u
    }
    pub fn extent_v(&self) -> f64 {
        self.extent_v
    }

    /// True when the wall frame coincides with the world axes at z = 0.
    pub fn is_axis_aligned(&self) -> bool {
        let close = |a: Vec3, b: Vec3| (a - b).norm() <= UNIT_TOL;
        self.origin.z.abs() <= UNIT_TOL
            && close(self.basis_u, Vec3::X)
            && close(self.basis_v, Vec3::Y)
            && close(self.normal, Vec3::Z)
    }

    /// Coordinates of `p` in the wall frame: (u, v, height above the wall).
    pub fn to_local(&self, p: Vec3) -> (f64, f64, f64) {
        let d = p - self.origin;
        (d.dot(self.basis_u), d.dot(self.basis_v), d.dot(self.normal))
    }

    pub fn from_local(&self, u: f64, v: f64, w: f64) -> Vec3 {
        self.origin + self.basis_u * u + self.basis_v * v + self.normal * w
    }

    pub fn on_plane(&self, p: Vec3) -> bool {
        self.to_local(p).2.abs() <= 1e-9 * (1.0 + self.extent_u.max(self.extent_v))
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let (u, v, _) = self.to_local(p);
        self.on_plane(p)
            && u.abs() <= 0.5 * self.extent_u * (1.0 + 1e-12)
            && v.abs() <= 0.5 * self.extent_v * (1.0 + 1e-12)
    }

    /// Intersects the ray `from + t·dir`, t > 0, with the wall plane and returns
    /// the in-plane coordinates of the hit.
    pub fn intersect_ray(&self, from: Vec3, dir: Vec3) -> Option<(f64, f64)> {
        let denom = dir.dot(self.normal);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = (self.origin - from).dot(self.normal) / denom;
        if t <= 0.0 {
            return None;
        }
        let (u, v, _) = self.to_local(from + dir * t);
        Some((u, v))
    }
}

/// Regular cell-centred lattice of `n_u × n_v` points spanning the wall.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScanGridFields", deny_unknown_fields)]
pub struct ScanGrid {
    n_u: usize,
    n_v: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanGridFields {
    n_u: usize,
    n_v: usize,
}

impl TryFrom<ScanGridFields> for ScanGrid {
    type Error = NlosError;
    fn try_from(f: ScanGridFields) -> Result<Self> {
        ScanGrid::new(f.n_u, f.n_v)
    }
}

impl ScanGrid {
    pub fn new(n_u: usize, n_v: usize) -> Result<Self> {
        if n_u == 0 || n_v == 0 {
            return Err(NlosError::invalid("scan grid counts must be positive"));
        }
        Ok(ScanGrid { n_u, n_v })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }
    pub fn n_v(&self) -> usize {
        self.n_v
    }
    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index, `u` varying fastest.
    pub fn flat_index(&self, iu: usize, iv: usize) -> usize {
        iv * self.n_u + iu
    }

    pub fn spacing(&self, geom: &RelayGeometry) -> (f64, f64) {
        (geom.extent_u / self.n_u as f64, geom.extent_v / self.n_v as f64)
    }

    /// All lattice points in flat-index order.
    pub fn points(&self, geom: &RelayGeometry) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.len());
        for iv in 0..self.n_v {
            for iu in 0..self.n_u {
                out.push(lattice_point(self, geom, iu, iv));
            }
        }
        out
    }
}

fn lattice_point(grid: &ScanGrid, geom: &RelayGeometry, iu: usize, iv: usize) -> Vec3 {
    let u = ((iu as f64 + 0.5) / grid.n_u as f64 - 0.5) * geom.extent_u;
    let v = ((iv as f64 + 0.5) / grid.n_v as f64 - 0.5) * geom.extent_v;
    geom.origin + geom.basis_u * u + geom.basis_v * v
}

/// World position of lattice cell `(iu, iv)`.
pub fn grid_point(grid: &ScanGrid, geom: &RelayGeometry, iu: usize, iv: usize) -> Result<Vec3> {
    if iu >= grid.n_u {
        return Err(NlosError::IndexOutOfRange { index: iu, len: grid.n_u });
    }
    if iv >= grid.n_v {
        return Err(NlosError::IndexOutOfRange { index: iv, len: grid.n_v });
    }
    Ok(lattice_point(grid, geom, iu, iv))
}

/// Which relay points are illuminated and which are sensed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CaptureTopology {
    /// Laser and sensor share every scan point.
    Confocal { grid: ScanGrid },
    /// One laser spot, a lattice of sensed points.
    SingleLaser { laser: Vec3, sensors: ScanGrid },
    /// Every laser point paired with every sensor point.
    Exhaustive { lasers: ScanGrid, sensors: ScanGrid },
}

impl CaptureTopology {
    pub fn is_confocal(&self) -> bool {
        matches!(self, CaptureTopology::Confocal { .. })
    }

    /// Length of the laser axis of a transient cube (collapsed to 1 for confocal).
    pub fn n_lasers(&self) -> usize {
        match self {
            CaptureTopology::Confocal { .. } | CaptureTopology::SingleLaser { .. } => 1,
            CaptureTopology::Exhaustive { lasers, .. } => lasers.len(),
        }
    }

    pub fn n_sensors(&self) -> usize {
        match self {
            CaptureTopology::Confocal { grid } => grid.len(),
            CaptureTopology::SingleLaser { sensors, .. } | CaptureTopology::Exhaustive { sensors, .. } => sensors.len(),
        }
    }

    /// The sensed lattice.
    pub fn sensor_grid(&self) -> ScanGrid {
        match self {
            CaptureTopology::Confocal { grid } => *grid,
            CaptureTopology::SingleLaser { sensors, .. } | CaptureTopology::Exhaustive { sensors, .. } => *sensors,
        }
    }

    pub fn validate(&self, geom: &RelayGeometry) -> Result<()> {
        if let CaptureTopology::SingleLaser { laser, .. } = self {
            if !laser.is_finite() || !geom.on_plane(*laser) {
                return Err(NlosError::invalid("laser position must lie on the relay plane"));
            }
        }
        Ok(())
    }

    /// Resolved world positions of every laser and sensor.
    pub fn apertures(&self, geom: &RelayGeometry) -> Apertures {
        match self {
            CaptureTopology::Confocal { grid } => {
                Apertures { lasers: Vec::new(), sensors: grid.points(geom), confocal: true }
            }
            CaptureTopology::SingleLaser { laser, sensors } => {
                Apertures { lasers: vec![*laser], sensors: sensors.points(geom), confocal: false }
            }
            CaptureTopology::Exhaustive { lasers, sensors } => {
                Apertures { lasers: lasers.points(geom), sensors: sensors.points(geom), confocal: false }
            }
        }
    }
}

/// Materialised laser and sensor positions for a topology.
#[derive(Clone, Debug)]
pub struct Apertures {
    pub lasers: Vec<Vec3>,
    pub sensors: Vec<Vec3>,
    pub confocal: bool,
}

impl Apertures {
    pub fn n_lasers(&self) -> usize {
        if self.confocal {
            1
        } else {
            self.lasers.len()
        }
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn n_series(&self) -> usize {
        self.n_lasers() * self.n_sensors()
    }

    /// Laser and sensor positions for series `(l, s)`.
    #[inline]
    pub fn pair(&self, l: usize, s: usize) -> (Vec3, Vec3) {
        let sensor = self.sensors[s];
        if self.confocal {
            (sensor, sensor)
        } else {
            (self.lasers[l], sensor)
        }
    }

    /// Largest distance between an illuminated and a sensed point.
    pub fn max_baseline(&self) -> f64 {
        let lasers: &[Vec3] = if self.confocal { &self.sensors } else { &self.lasers };
        let mut best = 0.0f64;
        for l in lasers {
            for s in &self.sensors {
                best = best.max(l.distance(*s));
            }
        }
        best
    }
}
