//! Hidden geometry: diffuse planar patches.

use serde::{Deserialize, Serialize};

use crate::error::{NlosError, Result};
use crate::geometry::{RelayGeometry, Vec3};

const UNIT_TOL: f64 = 1e-9;

/// Lambertian rectangle. `normal` is the reflecting side; `tangent` runs
/// along `width`, and `normal × tangent` along `height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatchFields", deny_unknown_fields)]
pub struct PlanarPatch {
    center: Vec3,
    normal: Vec3,
    tangent: Vec3,
    width: f64,
    height: f64,
    albedo: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchFields {
    center: Vec3,
    normal: Vec3,
    tangent: Vec3,
    width: f64,
    height: f64,
    #[serde(default = "default_albedo")]
    albedo: f64,
}

fn default_albedo() -> f64 {
    1.0
}

impl TryFrom<PatchFields> for PlanarPatch {
    type Error = NlosError;
    fn try_from(f: PatchFields) -> Result<Self> {
        PlanarPatch::new(f.center, f.normal, f.tangent, f.width, f.height, f.albedo)
    }
}

/// One quadrature point on a patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub position: Vec3,
    pub normal: Vec3,
    /// Albedo times the area represented by the sample.
    pub weight: f64,
    /// Coordinates along (tangent, bitangent) relative to the patch centre.
    pub local: (f64, f64),
}

impl PlanarPatch {
    pub fn new(center: Vec3, normal: Vec3, tangent: Vec3, width: f64, height: f64, albedo: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(NlosError::invalid("patch centre must be finite"));
        }
        if !normal.is_finite() || (normal.norm() - 1.0).abs() > UNIT_TOL {
            return Err(NlosError::invalid("patch normal must be a unit vector"));
        }
        if !tangent.is_finite() || (tangent.norm() - 1.0).abs() > UNIT_TOL {
            return Err(NlosError::invalid("patch tangent must be a unit vector"));
        }
        if normal.dot(tangent).abs() > UNIT_TOL {
            return Err(NlosError::invalid("patch tangent must be orthogonal to its normal"));
        }
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(NlosError::invalid("patch width and height must be positive"));
        }
        if !(albedo > 0.0 && albedo <= 1.0) {
            return Err(NlosError::invalid("patch albedo must lie in (0, 1]"));
        }
        Ok(PlanarPatch { center, normal, tangent, width, height, albedo })
    }

    /// Patch parallel to the canonical wall, reflecting towards it (normal −z).
    pub fn facing_wall(center: Vec3, width: f64, height: f64, albedo: f64) -> Result<Self> {
        Self::new(center, -Vec3::Z, Vec3::X, width, height, albedo)
    }

    /// Same patch rotated by `angle` radians about the vertical (y) axis through
    /// its centre. Positive angles turn the normal towards +x.
    pub fn rotated_about_y(&self, angle: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        let rot = |v: Vec3| Vec3::new(c * v.x - s * v.z, v.y, s * v.x + c * v.z);
        Self::new(self.center, rot(self.normal), rot(self.tangent), self.width, self.height, self.albedo)
    }

    pub fn translated(&self, offset: Vec3) -> Result<Self> {
        Self::new(self.center + offset, self.normal, self.tangent, self.width, self.height, self.albedo)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }
    pub fn normal(&self) -> Vec3 {
        self.normal
    }
    pub fn tangent(&self) -> Vec3 {
        self.tangent
    }
    pub fn bitangent(&self) -> Vec3 {
        self.normal.cross(self.tangent)
    }
    pub fn width(&self) -> f64 {
        self.width
    }
    pub fn height(&self) -> f64 {
        self.height
    }
    pub fn albedo(&self) -> f64 {
        self.albedo
    }
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn point_at(&self, a: f64, b: f64) -> Vec3 {
        self.center + self.tangent * a + self.bitangent() * b
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let (hw, hh) = (0.5 * self.width, 0.5 * self.height);
        [self.point_at(-hw, -hh), self.point_at(hw, -hh), self.point_at(hw, hh), self.point_at(-hw, hh)]
    }

    /// Sample counts along (width, height) for a lattice no coarser than `spacing`.
    pub fn lattice_dims(&self, spacing: f64) -> (usize, usize) {
        let n = |len: f64| ((len / spacing).ceil() as usize).max(1);
        (n(self.width), n(self.height))
    }

    /// Cell-centred `na × nb` lattice with equal area weights.
    pub fn lattice(&self, na: usize, nb: usize) -> Vec<SurfaceSample> {
        let weight = self.albedo * self.area() / (na * nb) as f64;
        let bitangent = self.bitangent();
        let mut out = Vec::with_capacity(na * nb);
        for jb in 0..nb {
            let b = ((jb as f64 + 0.5) / nb as f64 - 0.5) * self.height;
            for ja in 0..na {
                let a = ((ja as f64 + 0.5) / na as f64 - 0.5) * self.width;
                out.push(SurfaceSample {
                    position: self.center + self.tangent * a + bitangent * b,
                    normal: self.normal,
                    weight,
                    local: (a, b),
                });
            }
        }
        out
    }

    pub fn samples(&self, spacing: f64) -> Vec<SurfaceSample> {
        let (na, nb) = self.lattice_dims(spacing);
        self.lattice(na, nb)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub patches: Vec<PlanarPatch>,
}

impl Scene {
    pub fn new(patches: Vec<PlanarPatch>) -> Self {
        Scene { patches }
    }

    pub fn single(patch: PlanarPatch) -> Self {
        Scene { patches: vec![patch] }
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Union of two scenes (patch order: `self` first).
    pub fn union(&self, other: &Scene) -> Scene {
        let mut patches = self.patches.clone();
        patches.extend(other.patches.iter().cloned());
        Scene { patches }
    }

    /// Checks that the scene is non-empty and every patch corner lies strictly
    /// on the hidden side of the wall.
    pub fn validate(&self, relay: &RelayGeometry) -> Result<()> {
        if self.patches.is_empty() {
            return Err(NlosError::invalid("scene has no patches"));
        }
        for (i, p) in self.patches.iter().enumerate() {
            if p.corners().iter().any(|c| relay.to_local(*c).2 <= 0.0) {
                return Err(NlosError::invalid(format!("patch {i} is not in front of the relay wall")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_validation() {
        assert!(PlanarPatch::new(Vec3::Z, Vec3::Z, Vec3::Z, 1.0, 1.0, 1.0).is_err());
        assert!(PlanarPatch::facing_wall(Vec3::Z, 0.0, 1.0, 1.0).is_err());
        assert!(PlanarPatch::facing_wall(Vec3::Z, 1.0, 1.0, 0.0).is_err());
        assert!(PlanarPatch::facing_wall(Vec3::Z, 1.0, 1.0, 1.5).is_err());
        assert!(PlanarPatch::facing_wall(Vec3::Z, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn lattice_weights_sum_to_albedo_area() {
        let p = PlanarPatch::facing_wall(Vec3::Z, 0.5, 0.3, 0.8).unwrap();
        let s = p.samples(0.04);
        assert_eq!(s.len(), 13 * 8);
        let total: f64 = s.iter().map(|x| x.weight).sum();
        assert!((total - 0.8 * 0.15).abs() < 1e-12);
        for x in &s {
            assert!((x.position.z - 1.0).abs() < 1e-12);
            assert!(x.position.x.abs() <= 0.25 && x.position.y.abs() <= 0.15);
        }
    }

    #[test]
    fn rotation_keeps_frame_orthonormal() {
        let p = PlanarPatch::facing_wall(Vec3::Z, 0.5, 0.5, 1.0).unwrap();
        let r = p.rotated_about_y(30f64.to_radians()).unwrap();
        assert!((r.normal().x - 0.5).abs() < 1e-12);
        assert!(r.normal().dot(r.tangent()).abs() < 1e-12);
    }

    #[test]
    fn scene_must_be_in_front() {
        let relay = RelayGeometry::canonical(1.0, 1.0).unwrap();
        let behind = PlanarPatch::facing_wall(Vec3::new(0.0, 0.0, -1.0), 0.5, 0.5, 1.0).unwrap();
        assert!(Scene::single(behind).validate(&relay).is_err());
        assert!(Scene::default().validate(&relay).is_err());
    }
}
