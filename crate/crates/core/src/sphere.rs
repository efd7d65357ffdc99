//! Primitive geometry on the unit sphere.
//!
//! Points are plain 3-vectors. The domain of the map is the lower hemisphere
//! `y <= 0`; its boundary circle `y = 0` is referred to as the equator.
//! Rasters use the Lambert azimuthal equal-area projection centred on the
//! bottom pole `(0, -1, 0)`, which maps the hemisphere onto a disk of radius
//! `sqrt(2)` while preserving area.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2, TAU};

use crate::error::{Error, Result};

/// Values of sine/cosine closer than this to 0 or +-1 are snapped.
///
/// Quarter-turn protocols then act as exact signed coordinate permutations,
/// so points on the tiling edges stay exactly on them.
const TRIG_SNAP: f64 = 1e-15;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Normalizes `(x, y, z)` onto the unit sphere; `None` for the zero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Self::new(x / n, y / n, z / n))
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Closed lower hemisphere membership (`y <= 0`).
    pub fn in_hemisphere(&self) -> bool {
        self.y <= 0.0
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Planar coordinate in the equal-area projection disk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiskCoord {
    pub u: f64,
    pub v: f64,
}

impl DiskCoord {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn radius(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() < TRIG_SNAP {
        0.0
    } else if (v.abs() - 1.0).abs() < TRIG_SNAP {
        v.signum()
    } else {
        v
    }
}

/// `(sin, cos)` of `theta`, snapped at multiples of a quarter turn.
pub fn exact_sincos(theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (snap(s), snap(c))
}

/// A precomputed right-handed rotation about a fixed coordinate axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRotation {
    sin: f64,
    cos: f64,
}

impl AxisRotation {
    pub fn new(theta: f64) -> Self {
        let (sin, cos) = exact_sincos(theta);
        Self { sin, cos }
    }

    pub fn inverse(&self) -> Self {
        Self {
            sin: -self.sin,
            cos: self.cos,
        }
    }

    #[inline(always)]
    pub fn about_z(&self, p: SpherePoint) -> SpherePoint {
        SpherePoint::new(
            p.x * self.cos - p.y * self.sin,
            p.x * self.sin + p.y * self.cos,
            p.z,
        )
    }

    #[inline(always)]
    pub fn about_x(&self, p: SpherePoint) -> SpherePoint {
        SpherePoint::new(
            p.x,
            p.y * self.cos - p.z * self.sin,
            p.y * self.sin + p.z * self.cos,
        )
    }
}

/// Half-turn about z, applied exactly.
#[inline(always)]
pub fn half_turn_z(p: SpherePoint) -> SpherePoint {
    SpherePoint::new(-p.x, -p.y, p.z)
}

/// Half-turn about x, applied exactly.
#[inline(always)]
pub fn half_turn_x(p: SpherePoint) -> SpherePoint {
    SpherePoint::new(p.x, -p.y, -p.z)
}

pub fn rotate_z(p: SpherePoint, theta: f64) -> SpherePoint {
    AxisRotation::new(theta).about_z(p)
}

pub fn rotate_x(p: SpherePoint, theta: f64) -> SpherePoint {
    AxisRotation::new(theta).about_x(p)
}

/// Great-circle distance in radians, in `[0, pi]`.
pub fn geodesic_distance(p: SpherePoint, q: SpherePoint) -> f64 {
    // atan2 of |p x q| and p.q keeps full precision for nearby points,
    // where arccos of the clamped dot product loses half the digits.
    let cx = p.y * q.z - p.z * q.y;
    let cy = p.z * q.x - p.x * q.z;
    let cz = p.x * q.y - p.y * q.x;
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    cross.atan2(p.dot(&q)).clamp(0.0, PI)
}

/// Distance from `p` to the great circle with unit normal `n`.
pub fn plane_distance(p: SpherePoint, n: SpherePoint) -> f64 {
    p.dot(&n).abs().min(1.0).asin()
}

/// Lambert azimuthal equal-area projection about the bottom pole.
///
/// `u` runs along x and `v` along z. Fails for points above the equator.
pub fn lambert_project(p: SpherePoint) -> Result<DiskCoord> {
    if p.y > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "point ({}, {}, {}) is outside the lower hemisphere",
            p.x, p.y, p.z
        )));
    }
    let k = (2.0 / (1.0 - p.y)).sqrt();
    Ok(DiskCoord::new(k * p.x, k * p.z))
}

pub fn lambert_inverse(c: DiskCoord) -> Result<SpherePoint> {
    let r2 = c.u * c.u + c.v * c.v;
    if !(r2 <= 2.0 + 1e-12) {
        return Err(Error::OutsideDisk { u: c.u, v: c.v });
    }
    let r2 = r2.min(2.0);
    let s = (1.0 - r2 / 4.0).sqrt();
    Ok(SpherePoint::new(c.u * s, r2 / 2.0 - 1.0, c.v * s))
}

/// Radius of the projection disk.
pub const DISK_RADIUS: f64 = SQRT_2;

/// Angle of `p` about the y-axis, measured from +x towards +z, in `[0, 2pi)`.
pub fn equator_angle(p: SpherePoint) -> Result<f64> {
    if p.x == 0.0 && p.z == 0.0 {
        return Err(Error::UndefinedDirection);
    }
    let a = p.z.atan2(p.x);
    let a = if a < 0.0 { a + TAU } else { a };
    // -0.0 and tiny negatives wrap to exactly TAU
    Ok(if a >= TAU { 0.0 } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(p: SpherePoint, q: SpherePoint, tol: f64) -> bool {
        (p.x - q.x).abs() <= tol && (p.y - q.y).abs() <= tol && (p.z - q.z).abs() <= tol
    }

    #[test]
    fn quarter_turns_of_basis_vectors() {
        let r = rotate_z(SpherePoint::new(1.0, 0.0, 0.0), FRAC_PI_2);
        assert_eq!(r, SpherePoint::new(0.0, 1.0, 0.0));
        let r = rotate_x(SpherePoint::new(0.0, 1.0, 0.0), FRAC_PI_2);
        assert_eq!(r, SpherePoint::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn axis_points_are_fixed() {
        let pz = SpherePoint::new(0.0, 0.0, -1.0);
        let px = SpherePoint::new(1.0, 0.0, 0.0);
        for &t in &[0.1, 1.0, 2.5, -4.0] {
            assert_eq!(rotate_z(pz, t), pz);
            assert_eq!(rotate_x(px, t), px);
        }
    }

    #[test]
    fn zero_angle_is_identity() {
        let p = SpherePoint::normalized(0.3, -0.5, 0.2).unwrap();
        assert_eq!(rotate_z(p, 0.0), p);
        assert_eq!(rotate_x(p, 0.0), p);
    }

    #[test]
    fn geodesic_distance_cases() {
        let a = SpherePoint::new(1.0, 0.0, 0.0);
        let b = SpherePoint::new(0.0, 1.0, 0.0);
        let c = SpherePoint::new(-1.0, 0.0, 0.0);
        assert_eq!(geodesic_distance(a, a), 0.0);
        assert!((geodesic_distance(a, b) - FRAC_PI_2).abs() < 1e-15);
        assert!((geodesic_distance(a, c) - PI).abs() < 1e-15);
    }

    #[test]
    fn plane_distance_cases() {
        let n = SpherePoint::new(0.0, 0.0, 1.0);
        assert_eq!(plane_distance(SpherePoint::new(1.0, 0.0, 0.0), n), 0.0);
        assert!((plane_distance(n, n) - FRAC_PI_2).abs() < 1e-15);

        let beta = PI / 3.0;
        let n = SpherePoint::new(0.0, beta.cos(), -beta.sin());
        let d = plane_distance(SpherePoint::new(0.0, -1.0, 0.0), n);
        assert!((d - PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn lambert_center_and_rim() {
        let c = lambert_project(SpherePoint::new(0.0, -1.0, 0.0)).unwrap();
        assert_eq!(c, DiskCoord::new(0.0, 0.0));
        let c = lambert_project(SpherePoint::new(1.0, 0.0, 0.0)).unwrap();
        assert!((c.radius() - SQRT_2).abs() < 1e-15);
        assert!((c.radius() - 2.0 * (PI / 4.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn lambert_rejects_outside() {
        assert!(matches!(
            lambert_inverse(DiskCoord::new(1.2, 1.2)),
            Err(Error::OutsideDisk { .. })
        ));
        assert!(lambert_project(SpherePoint::new(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn radial_distance_matches_chord_formula() {
        // R = 2 sin(c/2) for angular distance c from the centre.
        for &c in &[0.1, 0.7, 1.2, FRAC_PI_2] {
            let p = SpherePoint::new(c.sin(), -c.cos(), 0.0);
            let d = lambert_project(p).unwrap();
            assert!((d.radius() - 2.0 * (c / 2.0).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn equator_angle_cases() {
        assert_eq!(equator_angle(SpherePoint::new(1.0, 0.0, 0.0)).unwrap(), 0.0);
        let a = equator_angle(SpherePoint::new(0.0, 0.0, 1.0)).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-15);
        let a = equator_angle(SpherePoint::new(-1.0, 0.0, 0.0)).unwrap();
        assert!((a - PI).abs() < 1e-15);
        let a = equator_angle(SpherePoint::new(1.0, 0.0, -1e-300)).unwrap();
        assert!((0.0..TAU).contains(&a));
        assert!(matches!(
            equator_angle(SpherePoint::new(0.0, -1.0, 0.0)),
            Err(Error::UndefinedDirection)
        ));
    }

    #[test]
    fn snapped_quarter_turn_hits_equator_exactly() {
        let p = rotate_z(SpherePoint::new(0.0, -1.0, 0.0), FRAC_PI_2);
        assert_eq!(p.y, 0.0);
        assert!(close(p, SpherePoint::new(1.0, 0.0, 0.0), 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hemisphere_point() -> impl Strategy<Value = SpherePoint> {
            (-1.0f64..1.0, -1.0f64..0.0, -1.0f64..1.0)
                .prop_filter_map("non-zero", |(x, y, z)| SpherePoint::normalized(x, y, z))
        }

        proptest! {
            #[test]
            fn rotations_preserve_norm_and_compose(p in hemisphere_point(), a in -7.0f64..7.0, b in -7.0f64..7.0) {
                let r = rotate_z(rotate_z(p, a), b);
                prop_assert!((r.norm() - 1.0).abs() <= 1e-12);
                prop_assert!(close(r, rotate_z(p, a + b), 1e-12));
                let r = rotate_x(rotate_x(p, a), b);
                prop_assert!((r.norm() - 1.0).abs() <= 1e-12);
                prop_assert!(close(r, rotate_x(p, a + b), 1e-12));
            }

            #[test]
            fn lambert_round_trip(p in hemisphere_point()) {
                let c = lambert_project(p).unwrap();
                prop_assert!(c.u * c.u + c.v * c.v <= 2.0 + 1e-12);
                let q = lambert_inverse(c).unwrap();
                prop_assert!(close(p, q, 1e-12));
            }

            #[test]
            fn geodesic_distance_is_symmetric(p in hemisphere_point(), q in hemisphere_point()) {
                prop_assert_eq!(geodesic_distance(p, q), geodesic_distance(q, p));
            }
        }
    }
}
