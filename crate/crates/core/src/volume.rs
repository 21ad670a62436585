//! Regular voxel grids holding reconstructions.

use std::str::FromStr;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::{RelayGeometry, ScanGrid, Vec3};

/// Voxel lattice. `origin` is the minimum corner of voxel `(0, 0, 0)`, so
/// voxel `(i, j, k)` is centred at `origin + (i + ½, j + ½, k + ½) ⊙ pitch`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VolumeSpecFields", deny_unknown_fields)]
pub struct VolumeSpec {
    origin: Vec3,
    pitch: [f64; 3],
    dims: [usize; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeSpecFields {
    origin: Vec3,
    pitch: [f64; 3],
    dims: [usize; 3],
}

impl TryFrom<VolumeSpecFields> for VolumeSpec {
    type Error = NlosError;
    fn try_from(f: VolumeSpecFields) -> Result<Self> {
        VolumeSpec::new(f.origin, f.pitch, f.dims)
    }
}

impl VolumeSpec {
    pub fn new(origin: Vec3, pitch: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        if !origin.is_finite() {
            return Err(NlosError::invalid("volume origin must be finite"));
        }
        if pitch.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(NlosError::invalid("voxel pitch must be positive"));
        }
        if dims.contains(&0) {
            return Err(NlosError::invalid("volume dims must be at least 1"));
        }
        Ok(VolumeSpec { origin, pitch, dims })
    }

    /// Grid whose lateral voxels sit exactly under the scan points of `grid`
    /// on an axis-aligned wall, spanning depths `[z_min, z_min + nz·dz)`.
    pub fn aligned_to_scan(relay: &RelayGeometry, grid: &ScanGrid, z_min: f64, dz: f64, nz: usize) -> Result<Self> {
        let (du, dv) = grid.spacing(relay);
        let o = relay.origin();
        Self::new(
            Vec3::new(o.x - 0.5 * relay.extent_u(), o.y - 0.5 * relay.extent_v(), z_min),
            [du, dv, dz],
            [grid.n_u(), grid.n_v(), nz],
        )
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }
    pub fn pitch(&self) -> [f64; 3] {
        self.pitch
    }
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centre coordinate of index `i` along `axis` (0 = x, 1 = y, 2 = z).
    #[inline]
    pub fn axis_center(&self, axis: usize, i: usize) -> f64 {
        let o = [self.origin.x, self.origin.y, self.origin.z][axis];
        o + (i as f64 + 0.5) * self.pitch[axis]
    }

    #[inline]
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.axis_center(0, i), self.axis_center(1, j), self.axis_center(2, k))
    }

    /// Unflattens a row-major (z fastest) voxel index.
    #[inline]
    pub fn unflatten(&self, flat: usize) -> (usize, usize, usize) {
        let k = flat % self.dims[2];
        let j = (flat / self.dims[2]) % self.dims[1];
        let i = flat / (self.dims[1] * self.dims[2]);
        (i, j, k)
    }

    /// Continuous voxel-index coordinates of a world point.
    pub fn fractional_index(&self, p: Vec3) -> [f64; 3] {
        [
            (p.x - self.origin.x) / self.pitch[0] - 0.5,
            (p.y - self.origin.y) / self.pitch[1] - 0.5,
            (p.z - self.origin.z) / self.pitch[2] - 0.5,
        ]
    }
}

impl FromStr for VolumeSpec {
    type Err = NlosError;

    /// Parses `"nx,ny,nz,dx,dy,dz,ox,oy,oz"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 9 {
            return Err(NlosError::invalid(format!(
                "volume must be nx,ny,nz,dx,dy,dz,ox,oy,oz (got {} fields)",
                parts.len()
            )));
        }
        let int = |t: &str| t.parse::<usize>().map_err(|_| NlosError::invalid(format!("bad volume count {t:?}")));
        let num = |t: &str| t.parse::<f64>().map_err(|_| NlosError::invalid(format!("bad volume value {t:?}")));
        let dims = [int(parts[0])?, int(parts[1])?, int(parts[2])?];
        let pitch = [num(parts[3])?, num(parts[4])?, num(parts[5])?];
        let origin = Vec3::new(num(parts[6])?, num(parts[7])?, num(parts[8])?);
        VolumeSpec::new(origin, pitch, dims)
    }
}

/// Scalar field sampled on a [`VolumeSpec`], indexed `[x, y, z]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelVolume {
    spec: VolumeSpec,
    values: Array3<f64>,
}

/// Projection axis for [`max_intensity_projection`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionAxis {
    X,
    Y,
    Z,
}

impl ProjectionAxis {
    fn index(self) -> usize {
        match self {
            ProjectionAxis::X => 0,
            ProjectionAxis::Y => 1,
            ProjectionAxis::Z => 2,
        }
    }
}

impl FromStr for ProjectionAxis {
    type Err = NlosError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(ProjectionAxis::X),
            "y" | "Y" => Ok(ProjectionAxis::Y),
            "z" | "Z" => Ok(ProjectionAxis::Z),
            _ => Err(NlosError::invalid(format!("unknown axis {s:?}"))),
        }
    }
}

impl VoxelVolume {
    pub fn new(spec: VolumeSpec, values: Array3<f64>) -> Result<Self> {
        if values.dim() != spec.shape() {
            return Err(NlosError::ShapeMismatch(format!(
                "values {:?} do not match volume dims {:?}",
                values.dim(),
                spec.dims()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NlosError::Numerical("volume contains non-finite values".into()));
        }
        Ok(VoxelVolume { spec, values: values.as_standard_layout().into_owned() })
    }

    pub fn zeros(spec: VolumeSpec) -> Self {
        VoxelVolume { spec, values: Array3::zeros(spec.shape()) }
    }

    /// Builds a volume from row-major data (z fastest).
    pub fn from_flat(spec: VolumeSpec, data: Vec<f64>) -> Result<Self> {
        let values = Array3::from_shape_vec(spec.shape(), data).map_err(|e| NlosError::ShapeMismatch(e.to_string()))?;
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &VolumeSpec {
        &self.spec
    }
    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }
    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> VoxelVolume {
        VoxelVolume { spec: self.spec, values: self.values.mapv(f) }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value (first occurrence in row-major order).
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in self.values.iter().enumerate() {
            if *v > best.1 {
                best = (i, *v);
            }
        }
        self.spec.unflatten(best.0)
    }

    pub fn argmax_position(&self) -> Vec3 {
        let (i, j, k) = self.argmax();
        self.spec.voxel_center(i, j, k)
    }
}

/// Rescales so the maximum becomes 1. Volumes whose maximum is not positive
/// are returned unchanged.
pub fn normalize_volume(vol: &VoxelVolume) -> VoxelVolume {
    let m = vol.max();
    if !(m > 0.0) {
        return vol.clone();
    }
    vol.map(|v| v / m)
}

/// Maximum along `axis`; the result keeps the remaining two axes in order.
pub fn max_intensity_projection(vol: &VoxelVolume, axis: ProjectionAxis) -> Array2<f64> {
    vol.values.fold_axis(Axis(axis.index()), f64::NEG_INFINITY, |acc, v| acc.max(*v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(n: [usize; 3]) -> VolumeSpec {
        VolumeSpec::new(Vec3::ZERO, [0.1, 0.1, 0.1], n).unwrap()
    }

    #[test]
    fn spec_validation_and_parse() {
        assert!(VolumeSpec::new(Vec3::ZERO, [0.0, 1.0, 1.0], [1, 1, 1]).is_err());
        assert!(VolumeSpec::new(Vec3::ZERO, [1.0, 1.0, 1.0], [1, 0, 1]).is_err());
        let s: VolumeSpec = "32,32,64,0.03125,0.03125,0.002,-0.5,-0.5,0.935".parse().unwrap();
        assert_eq!(s.dims(), [32, 32, 64]);
        assert!((s.axis_center(2, 32) - 1.0).abs() < 1e-12);
        assert!("1,2,3".parse::<VolumeSpec>().is_err());
    }

    #[test]
    fn normalize_cases() {
        let mut v = VoxelVolume::zeros(spec([2, 2, 2]));
        assert_eq!(normalize_volume(&v), v);
        v.values[[1, 0, 1]] = 5.0;
        v.values[[0, 0, 0]] = 2.5;
        let n = normalize_volume(&v);
        assert_eq!(n.max(), 1.0);
        assert_eq!(n.values()[[0, 0, 0]], 0.5);
        assert_eq!(normalize_volume(&n), n);
    }

    #[test]
    fn mip_single_voxel() {
        let mut v = VoxelVolume::zeros(spec([3, 4, 5]));
        v.values[[2, 1, 3]] = 0.7;
        let z = max_intensity_projection(&v, ProjectionAxis::Z);
        assert_eq!(z.dim(), (3, 4));
        assert_eq!(z[[2, 1]], 0.7);
        assert_eq!(z.iter().filter(|x| **x != 0.0).count(), 1);
        let x = max_intensity_projection(&v, ProjectionAxis::X);
        assert_eq!(x.dim(), (4, 5));
        assert_eq!(x[[1, 3]], 0.7);
        let c = VoxelVolume::new(spec([2, 3, 4]), Array3::from_elem((2, 3, 4), 0.25)).unwrap();
        assert!(max_intensity_projection(&c, ProjectionAxis::Y).iter().all(|x| *x == 0.25));
    }

    proptest! {
        #[test]
        fn normalized_range(data in prop::collection::vec(0.0f64..100.0, 27)) {
            let v = VoxelVolume::from_flat(spec([3, 3, 3]), data).unwrap();
            let n = normalize_volume(&v);
            prop_assert!(n.values().iter().all(|x| (0.0..=1.0).contains(x)));
            if v.max() > 0.0 {
                prop_assert_eq!(n.max(), 1.0);
            }
            prop_assert_eq!(normalize_volume(&n), n);
        }
    }
}
