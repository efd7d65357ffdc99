//! Independent references for validating the simulator.
//!
//! [`stepwise_oracle_map`] re-derives one map step by literally rotating the
//! whole sphere with unit quaternions and folding back whatever crossed the
//! equator. The remaining functions are closed forms for single-axis
//! `(phi, 0)` protocols, where every orbit is a rotation along a circle of
//! constant height `z`.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result, Stage};
use crate::map::Protocol;
use crate::sphere::SpherePoint;

fn to_vec(p: SpherePoint) -> Vector3<f64> {
    Vector3::new(p.x, p.y, p.z)
}

fn to_point(v: Vector3<f64>) -> SpherePoint {
    SpherePoint::new(v.x, v.y, v.z)
}

/// One map step computed by whole-sphere quaternion rotations.
pub fn stepwise_oracle_map(p: SpherePoint, prot: Protocol) -> Result<SpherePoint> {
    let stages = [
        (Vector3::z_axis(), prot.alpha(), Stage::First),
        (Vector3::x_axis(), prot.beta(), Stage::Second),
    ];
    let mut v = to_vec(p);
    for (axis, angle, stage) in stages {
        v = UnitQuaternion::from_axis_angle(&axis, angle) * v;
        if v.y == 0.0 {
            return Err(Error::BoundaryPoint(stage));
        }
        if v.y > 0.0 {
            v = UnitQuaternion::from_axis_angle(&axis, PI) * v;
        }
    }
    Ok(to_point(v))
}

/// Rotation angle of a single-axis protocol, with its declared arithmetic type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SingleAxisProtocol {
    /// `phi / pi` irrational.
    Irrational { phi: f64 },
    /// `phi = pi * p / q` with `gcd(p, q) = 1`.
    Rational { p: u64, q: u64 },
}

impl SingleAxisProtocol {
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("denominator must be positive".into()));
        }
        let g = gcd(p, q);
        Ok(Self::Rational { p: p / g, q: q / g })
    }

    pub fn phi(&self) -> f64 {
        match *self {
            Self::Irrational { phi } => phi,
            Self::Rational { p, q } => PI * p as f64 / q as f64,
        }
    }

    pub fn protocol(&self) -> Result<Protocol> {
        Protocol::new(self.phi(), 0.0)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Length of the half-circle orbit at height `z`: `pi sqrt(1 - z^2)`.
pub fn arc_length_l(z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("height {z} outside (-1, 1)")));
    }
    Ok(PI * (1.0 - z * z).sqrt())
}

/// Density of an orbit at height `z` in one `eps`-fattened line.
pub fn analytic_rho(z: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let l = arc_length_l(z)?;
    Ok(if 2.0 * eps < l { 2.0 * eps / l } else { 1.0 })
}

/// Limiting coverage: 1 for irrational rotation, 0 for rational.
pub fn analytic_phi(p: SingleAxisProtocol) -> f64 {
    match p {
        SingleAxisProtocol::Irrational { .. } => 1.0,
        SingleAxisProtocol::Rational { .. } => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::PwiMap;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn oracle_quarter_turn_example() {
        let prot = Protocol::new(FRAC_PI_2, FRAC_PI_2).unwrap();
        let q = stepwise_oracle_map(SpherePoint::new(0.48, -0.6, 0.64), prot).unwrap();
        assert!((q.x + 0.6).abs() < 1e-12);
        assert!((q.y + 0.64).abs() < 1e-12);
        assert!((q.z + 0.48).abs() < 1e-12);
    }

    #[test]
    fn oracle_identity() {
        let p = SpherePoint::normalized(0.1, -0.3, 0.8).unwrap();
        assert_eq!(stepwise_oracle_map(p, Protocol::identity()).unwrap(), p);
    }

    #[test]
    fn oracle_agrees_with_map_on_a_sample() {
        let prot = Protocol::from_degrees(57.0, 32.75).unwrap();
        let m = PwiMap::new(prot);
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            let p = SpherePoint::normalized(t.sin(), -1.0 + 0.9 * (3.0 * t).cos().abs(), t.cos())
                .unwrap();
            let a = m.forward(p).unwrap().image;
            let b = stepwise_oracle_map(p, prot).unwrap();
            assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12 && (a.z - b.z).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_length_values() {
        assert!((arc_length_l(0.0).unwrap() - PI).abs() < 1e-15);
        assert!((arc_length_l(0.6).unwrap() - 0.8 * PI).abs() < 1e-15);
        assert!(arc_length_l(1.0 - 1e-12).unwrap() < 1e-5);
        assert!(arc_length_l(1.0).is_err());
        assert!(arc_length_l(-1.5).is_err());
    }

    #[test]
    fn analytic_rho_branches() {
        assert!((analytic_rho(0.0, 1e-3).unwrap() - 2e-3 / PI).abs() < 1e-18);
        // saturated branch: 2 eps >= l(z)
        assert_eq!(analytic_rho(0.999_999, 0.01).unwrap(), 1.0);
        assert!(analytic_rho(0.0, 0.0).is_err());
    }

    #[test]
    fn analytic_phi_values() {
        assert_eq!(analytic_phi(SingleAxisProtocol::Irrational { phi: 1.0 }), 1.0);
        assert_eq!(analytic_phi(SingleAxisProtocol::rational(1, 2).unwrap()), 0.0);
        assert_eq!(analytic_phi(SingleAxisProtocol::rational(2, 3).unwrap()), 0.0);
        let r = SingleAxisProtocol::rational(2, 4).unwrap();
        assert_eq!(r, SingleAxisProtocol::Rational { p: 1, q: 2 });
        assert!((r.phi() - FRAC_PI_2).abs() < 1e-15);
    }
}
