//! Hyperbolic geometry core in Fermi coordinates.
//!
//! The hyperbolic plane is the set `{(s, r)}` with metric
//! `dr^2 + cosh^2(r) ds^2`; the curve `{r = 0}` is a geodesic (the base
//! geodesic), `s` is arc length along it and `r` the signed distance from it.
//! The vertical planes `{s = t}` are the leaves of the standard translation
//! foliation, and reflection across such a plane is the affine map
//! `s -> 2t - s`.
//!
//! Distances and circle sampling go through the hyperboloid model, with the
//! embedding `(s, r) -> (cosh r cosh s, cosh r sinh s, sinh r)` into
//! Minkowski 3-space.

use serde::{Deserialize, Serialize};

use crate::io::SchemaError;

/// A point of the hyperbolic plane in Fermi coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointH2 {
    /// Arc length along the base geodesic.
    pub s: f64,
    /// Signed distance from the base geodesic.
    pub r: f64,
}

impl PointH2 {
    pub fn new(s: f64, r: f64) -> Self {
        Self { s, r }
    }
}

/// A point of H^2 x R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointH2xR {
    pub s: f64,
    pub r: f64,
    /// Height in the R factor.
    pub z: f64,
}

impl PointH2xR {
    pub fn new(s: f64, r: f64, z: f64) -> Self {
        Self { s, r, z }
    }

    pub fn horizontal(&self) -> PointH2 {
        PointH2::new(self.s, self.r)
    }
}

/// A tangent vector in the coordinate basis `(d_s, d_r, d_z)` at some base
/// point (the base point is supplied separately where it matters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVec {
    pub a_s: f64,
    pub a_r: f64,
    pub a_z: f64,
}

impl TangentVec {
    pub const ZERO: TangentVec = TangentVec {
        a_s: 0.0,
        a_r: 0.0,
        a_z: 0.0,
    };

    pub fn new(a_s: f64, a_r: f64, a_z: f64) -> Self {
        Self { a_s, a_r, a_z }
    }

    /// The coordinate field `d_s`.
    pub fn e_s() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    /// The coordinate field `d_r`.
    pub fn e_r() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    /// The coordinate field `d_z`.
    pub fn e_z() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.a_s, c * self.a_r, c * self.a_z)
    }
}

/// Riemannian inner product of two tangent vectors at `p`:
/// `u_s v_s cosh^2(r) + u_r v_r + u_z v_z`.
pub fn metric_inner(p: PointH2xR, u: TangentVec, v: TangentVec) -> f64 {
    let c = p.r.cosh();
    u.a_s * v.a_s * c * c + u.a_r * v.a_r + u.a_z * v.a_z
}

/// Metric norm of a tangent vector at `p`.
pub fn metric_norm(p: PointH2xR, u: TangentVec) -> f64 {
    metric_inner(p, u, u).max(0.0).sqrt()
}

/// Metric cross product at `p`, computed in the orthonormal frame
/// `(d_s / cosh r, d_r, d_z)`. The result is orthogonal to both arguments
/// and `|u x v| = |u||v| sin(angle)`.
pub fn metric_cross(p: PointH2xR, u: TangentVec, v: TangentVec) -> TangentVec {
    let c = p.r.cosh();
    // frame components
    let (u1, u2, u3) = (u.a_s * c, u.a_r, u.a_z);
    let (v1, v2, v3) = (v.a_s * c, v.a_r, v.a_z);
    let w1 = u2 * v3 - u3 * v2;
    let w2 = u3 * v1 - u1 * v3;
    let w3 = u1 * v2 - u2 * v1;
    TangentVec::new(w1 / c, w2, w3)
}

/// Minkowski coordinates of a point on the hyperboloid `<x,x> = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperboloid(pub [f64; 3]);

impl Hyperboloid {
    /// Embed Fermi coordinates: `(cosh r cosh s, cosh r sinh s, sinh r)`.
    pub fn from_fermi(p: PointH2) -> Self {
        let (cr, sr) = (p.r.cosh(), p.r.sinh());
        Hyperboloid([cr * p.s.cosh(), cr * p.s.sinh(), sr])
    }

    /// Back to Fermi coordinates. Well defined since `x0^2 - x1^2 = cosh^2 r >= 1`.
    pub fn to_fermi(&self) -> PointH2 {
        let [x0, x1, x2] = self.0;
        PointH2::new((x1 / x0).atanh(), x2.asinh())
    }
}

/// Minkowski inner product `-x0 y0 + x1 y1 + x2 y2`.
fn minkowski(a: &Hyperboloid, b: &Hyperboloid) -> f64 {
    -a.0[0] * b.0[0] + a.0[1] * b.0[1] + a.0[2] * b.0[2]
}

/// Geodesic distance in the hyperbolic plane.
///
/// Closed form via the hyperboloid model,
/// `cosh d = cosh r1 cosh r2 cosh(s1 - s2) - sinh r1 sinh r2`, rearranged to
/// the cancellation-free
/// `cosh d - 1 = 2 [cosh r1 cosh r2 sinh^2(ds/2) + sinh^2(dr/2)]`
/// so that nearby points get full relative accuracy (and `d(p, p) = 0`
/// exactly).
pub fn distance_h2(p: PointH2, q: PointH2) -> f64 {
    let hs = (0.5 * (p.s - q.s)).sinh();
    let hr = (0.5 * (p.r - q.r)).sinh();
    let m = 2.0 * (p.r.cosh() * q.r.cosh() * hs * hs + hr * hr);
    // acosh(1 + m) in a form stable for small m
    (m + (m * (m + 2.0)).sqrt()).ln_1p()
}

/// Reflection across the vertical plane `{s = t}`; an isometry fixing the
/// plane pointwise.
pub fn reflect(t: f64, p: PointH2xR) -> PointH2xR {
    PointH2xR::new(2.0 * t - p.s, p.r, p.z)
}

/// Reflection of a horizontal point across the geodesic `{s = t}`.
pub fn reflect_h2(t: f64, p: PointH2) -> PointH2 {
    PointH2::new(2.0 * t - p.s, p.r)
}

/// Hyperbolic translation by `a` along the base geodesic.
pub fn translate_s(a: f64, p: PointH2xR) -> PointH2xR {
    PointH2xR::new(p.s + a, p.r, p.z)
}

/// Vertical translation by `a`.
pub fn translate_z(a: f64, p: PointH2xR) -> PointH2xR {
    PointH2xR::new(p.s, p.r, p.z + a)
}

/// Sample a hyperbolic circle of radius `rho` about `center` as `n` points,
/// positively oriented in the `(s, r)` chart, starting at the point reached
/// by the unit `d_s / cosh r` direction.
///
/// The points are generated on the hyperboloid as
/// `cosh(rho) C + sinh(rho) (cos t e1 + sin t e2)` with `(e1, e2)` the
/// orthonormal tangent frame at the center, so each sample is at hyperbolic
/// distance exactly `rho` from the center (up to rounding).
pub fn circle_sample(center: PointH2, rho: f64, n: usize) -> Result<Vec<PointH2>, SchemaError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(SchemaError::new(format!(
            "circle radius must be positive and finite, got {rho}"
        )));
    }
    if n < 8 {
        return Err(SchemaError::new(format!(
            "circle sampling needs at least 8 points, got {n}"
        )));
    }
    let c = Hyperboloid::from_fermi(center);
    let (cr, sr) = (center.r.cosh(), center.r.sinh());
    // d_s / cosh r and d_r at the center, pushed to the hyperboloid
    let e1 = [cr * center.s.sinh(), cr * center.s.cosh(), 0.0];
    let e1 = [e1[0] / cr, e1[1] / cr, e1[2] / cr];
    let e2 = [sr * center.s.cosh(), sr * center.s.sinh(), cr];
    let (chr, shr) = (rho.cosh(), rho.sinh());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
        let (ct, st) = (t.cos(), t.sin());
        let x = Hyperboloid([
            chr * c.0[0] + shr * (ct * e1[0] + st * e2[0]),
            chr * c.0[1] + shr * (ct * e1[1] + st * e2[1]),
            chr * c.0[2] + shr * (ct * e1[2] + st * e2[2]),
        ]);
        out.push(x.to_fermi());
    }
    Ok(out)
}

/// Distance from a point to the geodesic segment between `a` and `b`.
///
/// The geodesic through `a, b` spans a timelike plane in Minkowski space;
/// the distance from `x` to the full geodesic is `asinh |<x, u>|` with `u`
/// the unit spacelike normal of that plane. The foot of the perpendicular is
/// clamped to the segment by comparing Minkowski angles along the geodesic.
pub fn dist_point_segment_h2(x: PointH2, a: PointH2, b: PointH2) -> f64 {
    let xa = Hyperboloid::from_fermi(a);
    let xb = Hyperboloid::from_fermi(b);
    let xx = Hyperboloid::from_fermi(x);
    let seg = minkowski(&xa, &xb); // = -cosh(length)
    if seg > -1.0 - 1e-15 {
        // degenerate segment
        return distance_h2(x, a);
    }
    // Lorentz cross product: normal to the plane span(a, b)
    let n = [
        -(xa.0[1] * xb.0[2] - xa.0[2] * xb.0[1]),
        xa.0[2] * xb.0[0] - xa.0[0] * xb.0[2],
        xa.0[0] * xb.0[1] - xa.0[1] * xb.0[0],
    ];
    let nn = -n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
    if nn <= 0.0 {
        return distance_h2(x, a).min(distance_h2(x, b));
    }
    let nn = nn.sqrt();
    let n = Hyperboloid([n[0] / nn, n[1] / nn, n[2] / nn]);
    let h = minkowski(&xx, &n);
    // foot of perpendicular: x + <x,n> n rescaled to the hyperboloid
    let scale = (1.0 + h * h).sqrt();
    let f = Hyperboloid([
        (xx.0[0] - h * n.0[0]) / scale,
        (xx.0[1] - h * n.0[1]) / scale,
        (xx.0[2] - h * n.0[2]) / scale,
    ]);
    // the foot lies between a and b iff it is "ahead" of a toward b and
    // "ahead" of b toward a, measured by geodesic distance along the line
    let da = -minkowski(&f, &xa);
    let db = -minkowski(&f, &xb);
    let dab = -seg;
    if da <= dab && db <= dab {
        h.abs().asinh()
    } else {
        distance_h2(x, a).min(distance_h2(x, b))
    }
}
