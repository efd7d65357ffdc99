//! The bi-rotation piecewise isometry.
//!
//! One step rotates the hemisphere by `alpha` about z and then by `beta`
//! about x. After each rotation any point that left the lower hemisphere is
//! carried back by an extra half-turn about the same axis, which is the same
//! as applying the four atom rotations
//!
//! ```text
//! P1: Rx(beta)      Rz(alpha)
//! P2: Rx(beta)      Rz(alpha + pi)
//! P3: Rx(beta + pi) Rz(alpha)
//! P4: Rx(beta + pi) Rz(alpha + pi)
//! ```
//!
//! The cutting line D1 is the set of points that reach the equator during the
//! first rotation and D2 the set that reaches it during the second. Distances
//! to them are measured in the frame where the line sits on the equator.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result, Stage};
use crate::sphere::{equator_angle, half_turn_x, half_turn_z, AxisRotation, SpherePoint};

/// Rotation-angle pair `(alpha, beta)` in radians, both in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    alpha: f64,
    beta: f64,
}

impl Protocol {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let ok = |a: f64| a.is_finite() && (0.0..PI).contains(&a);
        if !ok(alpha) || !ok(beta) {
            return Err(Error::InvalidProtocol { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn from_degrees(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha.to_radians(), beta.to_radians()).map_err(|_| Error::InvalidProtocol {
            alpha,
            beta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn identity() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
        }
    }
}

/// Atom of the partition, identified by which rotations needed a half-turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomId {
    P1,
    P2,
    P3,
    P4,
}

impl AtomId {
    pub fn from_flips(first: bool, second: bool) -> Self {
        match (first, second) {
            (false, false) => AtomId::P1,
            (true, false) => AtomId::P2,
            (false, true) => AtomId::P3,
            (true, true) => AtomId::P4,
        }
    }

    pub fn flips(self) -> (bool, bool) {
        match self {
            AtomId::P1 => (false, false),
            AtomId::P2 => (true, false),
            AtomId::P3 => (false, true),
            AtomId::P4 => (true, true),
        }
    }
}

/// Result of one application of the map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTrace {
    /// Image after the (folded) first rotation.
    pub intermediate: SpherePoint,
    /// Image after both rotations.
    pub image: SpherePoint,
    pub atom: AtomId,
}

/// Which cutting line a parameter addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CutLine {
    D1,
    D2,
}

/// Sided arc-length coordinate along the cutting lines.
///
/// `[0, 2pi)` addresses D2 by the equator angle of its image after a full
/// step; `[2pi, 4pi)` addresses D1 by the equator angle after the first
/// rotation. Each line is covered twice, once per side.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CutParam(f64);

impl CutParam {
    pub const PERIOD: f64 = 2.0 * TAU;

    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && (0.0..Self::PERIOD).contains(&theta) {
            Ok(Self(theta))
        } else {
            Err(Error::InvalidCutParam(theta))
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub fn line(self) -> CutLine {
        if self.0 < TAU {
            CutLine::D2
        } else {
            CutLine::D1
        }
    }

    /// Equator angle in the frame where the addressed line lies on the equator.
    pub fn equator_phi(self) -> f64 {
        match self.line() {
            CutLine::D2 => self.0,
            CutLine::D1 => self.0 - TAU,
        }
    }
}

/// Returns detected on one trace: at most one per line.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReturnBins {
    pub d1: Option<CutParam>,
    pub d2: Option<CutParam>,
}

impl ReturnBins {
    pub fn is_empty(&self) -> bool {
        self.d1.is_none() && self.d2.is_none()
    }

    pub fn len(&self) -> usize {
        self.d1.is_some() as usize + self.d2.is_some() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = CutParam> + '_ {
        self.d2.iter().chain(self.d1.iter()).copied()
    }
}

/// A protocol with its rotations precomputed; the hot path of every analysis.
#[derive(Clone, Copy, Debug)]
pub struct PwiMap {
    protocol: Protocol,
    first: AxisRotation,
    second: AxisRotation,
    has_d1: bool,
}

impl PwiMap {
    pub fn new(protocol: Protocol) -> Self {
        Self {
            protocol,
            first: AxisRotation::new(protocol.alpha),
            second: AxisRotation::new(protocol.beta),
            // with alpha = 0 nothing crosses the equator in the first stage
            has_d1: protocol.alpha != 0.0,
        }
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    /// Whether D1 is non-empty (`alpha != 0`).
    pub fn has_d1(&self) -> bool {
        self.has_d1
    }

    #[inline(always)]
    pub fn forward(&self, p: SpherePoint) -> Result<StepTrace> {
        let mut q = self.first.about_z(p);
        if q.y == 0.0 {
            return Err(Error::BoundaryPoint(Stage::First));
        }
        let flip1 = q.y > 0.0;
        if flip1 {
            q = half_turn_z(q);
        }
        let mut r = self.second.about_x(q);
        if r.y == 0.0 {
            return Err(Error::BoundaryPoint(Stage::Second));
        }
        let flip2 = r.y > 0.0;
        if flip2 {
            r = half_turn_x(r);
        }
        Ok(StepTrace {
            intermediate: q,
            image: r,
            atom: AtomId::from_flips(flip1, flip2),
        })
    }

    /// Undoes the second rotation only, choosing the branch in the hemisphere.
    pub fn undo_second(&self, p: SpherePoint) -> Result<SpherePoint> {
        let q = self.second.inverse().about_x(p);
        if q.y == 0.0 {
            return Err(Error::BoundaryPoint(Stage::Second));
        }
        Ok(if q.y > 0.0 { half_turn_x(q) } else { q })
    }

    /// Undoes the first rotation only, choosing the branch in the hemisphere.
    pub fn undo_first(&self, p: SpherePoint) -> Result<SpherePoint> {
        let q = self.first.inverse().about_z(p);
        if q.y == 0.0 {
            return Err(Error::BoundaryPoint(Stage::First));
        }
        Ok(if q.y > 0.0 { half_turn_z(q) } else { q })
    }

    pub fn inverse(&self, p: SpherePoint) -> Result<SpherePoint> {
        self.undo_first(self.undo_second(p)?)
    }

    /// Geodesic distances `(d1, d2)` from `p` to D1 and D2.
    ///
    /// `d1` is `+inf` when D1 is empty.
    pub fn cutline_distances(&self, p: SpherePoint) -> Result<(f64, f64)> {
        let t = self.forward(p)?;
        let d1 = if self.has_d1 {
            t.intermediate.y.abs().min(1.0).asin()
        } else {
            f64::INFINITY
        };
        Ok((d1, t.image.y.abs().min(1.0).asin()))
    }

    /// A point within `delta` of the line addressed by `theta`, on its side.
    ///
    /// The point just below the equator at angle `phi` is pulled back through
    /// the full inverse (D2) or through the inverse first rotation (D1).
    pub fn param_point(&self, theta: CutParam, delta: f64) -> Result<SpherePoint> {
        let phi = theta.equator_phi();
        let (s, c) = phi.sin_cos();
        let e = SpherePoint::normalized(c, -delta, s)
            .ok_or_else(|| Error::InvalidArgument(format!("bad offset {delta}")))?;
        match theta.line() {
            CutLine::D2 => self.inverse(e),
            CutLine::D1 => self.undo_first(e),
        }
    }

    /// Sided parameters of the lines a trace is within `eps` of.
    ///
    /// `sin_eps` is `sin(eps)`; callers in loops precompute it.
    #[inline(always)]
    pub fn return_bins_sin(&self, trace: &StepTrace, sin_eps: f64) -> ReturnBins {
        let mut out = ReturnBins::default();
        if self.has_d1 && trace.intermediate.y.abs() <= sin_eps {
            if let Ok(a) = equator_angle(trace.intermediate) {
                out.d1 = Some(CutParam(wrap_param(TAU + a)));
            }
        }
        if trace.image.y.abs() <= sin_eps {
            if let Ok(a) = equator_angle(trace.image) {
                out.d2 = Some(CutParam(a));
            }
        }
        out
    }

    pub fn return_bins(&self, trace: &StepTrace, eps: f64) -> ReturnBins {
        self.return_bins_sin(trace, eps.sin())
    }

    /// Per-line hit flags for one trace; the counting primitive.
    #[inline(always)]
    pub fn hits(&self, trace: &StepTrace, sin_eps: f64) -> (bool, bool) {
        (
            self.has_d1 && trace.intermediate.y.abs() <= sin_eps,
            trace.image.y.abs() <= sin_eps,
        )
    }
}

fn wrap_param(t: f64) -> f64 {
    if t >= CutParam::PERIOD {
        t - CutParam::PERIOD
    } else {
        t
    }
}

/// One step of the map for `prot`.
pub fn forward(p: SpherePoint, prot: Protocol) -> Result<StepTrace> {
    PwiMap::new(prot).forward(p)
}

pub fn inverse(p: SpherePoint, prot: Protocol) -> Result<SpherePoint> {
    PwiMap::new(prot).inverse(p)
}

pub fn cutline_distances(p: SpherePoint, prot: Protocol) -> Result<(f64, f64)> {
    PwiMap::new(prot).cutline_distances(p)
}

pub fn param_point(theta: CutParam, delta: f64, prot: Protocol) -> Result<SpherePoint> {
    PwiMap::new(prot).param_point(theta, delta)
}

pub fn return_bins(trace: &StepTrace, eps: f64, prot: Protocol) -> ReturnBins {
    PwiMap::new(prot).return_bins(trace, eps)
}
