//! Discrete surface data model: stacks of closed horizontal polylines.
//!
//! A [`SlicedSurface`] is an ordered stack of closed simple polylines in the
//! `(s, r)` chart, one per height `z`. Surfaces transverse to horizontal
//! slices are the only representation here; the rotational counterpart
//! ([`RotationalSurface`]) wraps a Delaunay profile and provides exact
//! quantities the discrete operations are validated against.

use serde::{Deserialize, Serialize};

use crate::delaunay::DelaunayProfile;
use crate::geom::{self, PointH2, PointH2xR, TangentVec};
use crate::io::SchemaError;

/// A closed simple polyline in the hyperbolic plane.
///
/// Stores distinct vertices; the closing edge from the last vertex back to
/// the first is implicit. At least 8 vertices, non-self-intersecting in the
/// `(s, r)` chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedPolyline {
    vertices: Vec<PointH2>,
}

impl ClosedPolyline {
    /// Build from distinct vertices (no repeated closing point).
    pub fn from_vertices(vertices: Vec<PointH2>) -> Result<Self, SchemaError> {
        if vertices.len() < 8 {
            return Err(SchemaError::new(format!(
                "closed curve needs at least 8 vertices, got {}",
                vertices.len()
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.s.is_finite() || !v.r.is_finite() {
                return Err(SchemaError::new(format!("non-finite vertex at index {i}")));
            }
        }
        let poly = Self { vertices };
        poly.check_simple()?;
        Ok(poly)
    }

    /// Build from an explicitly closed point list (first point repeated at
    /// the end). Rejects open polylines.
    pub fn from_closed(points: Vec<PointH2>) -> Result<Self, SchemaError> {
        if points.len() < 2 || points.first() != points.last() {
            return Err(SchemaError::new(
                "open polyline: first and last point must coincide".to_string(),
            ));
        }
        let mut v = points;
        v.pop();
        Self::from_vertices(v)
    }

    pub fn vertices(&self) -> &[PointH2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex by cyclic index.
    pub fn vertex(&self, k: isize) -> PointH2 {
        let n = self.vertices.len() as isize;
        self.vertices[(k.rem_euclid(n)) as usize]
    }

    /// Edges as vertex pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (PointH2, PointH2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Coordinate centroid (vertex average); interior for star-shaped curves.
    pub fn centroid(&self) -> PointH2 {
        let n = self.vertices.len() as f64;
        let (s, r) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |a, v| (a.0 + v.s, a.1 + v.r));
        PointH2::new(s / n, r / n)
    }

    /// Twice the signed coordinate area; positive for counterclockwise
    /// orientation in `(s, r)`.
    pub fn signed_coordinate_area2(&self) -> f64 {
        self.edges().map(|(a, b)| a.s * b.r - b.s * a.r).sum()
    }

    /// Point-in-region test in the `(s, r)` chart (ray casting, half-open
    /// rule). Points on the boundary may land on either side.
    pub fn contains(&self, p: PointH2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.r <= p.r) != (b.r <= p.r) {
                let x = a.s + (p.r - a.r) / (b.r - a.r) * (b.s - a.s);
                if x > p.s {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Hyperbolic distance from `p` to the polyline.
    pub fn distance_to(&self, p: PointH2) -> f64 {
        self.edges()
            .map(|(a, b)| geom::dist_point_segment_h2(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Min and max of the s-coordinate over vertices.
    pub fn s_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.s), hi.max(v.s))
            })
    }

    /// Reject self-intersections: O(n^2) proper-crossing test over edge
    /// pairs, skipping adjacent edges.
    fn check_simple(&self) -> Result<(), SchemaError> {
        let n = self.vertices.len();
        for i in 0..n {
            let (a1, a2) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in i + 1..n {
                // adjacent edges share a vertex; skip them (and the pair
                // (0, n-1), adjacent through the closing edge)
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (b1, b2) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_cross(a1, a2, b1, b2) {
                    return Err(SchemaError::new(format!(
                        "self-intersecting curve: edges {i} and {j} cross"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn orient(a: PointH2, b: PointH2, c: PointH2) -> f64 {
    (b.s - a.s) * (c.r - a.r) - (b.r - a.r) * (c.s - a.s)
}

/// Proper crossing test for coordinate segments, counting touching interiors
/// as crossings but ignoring exact shared endpoints.
fn segments_cross(a1: PointH2, a2: PointH2, b1: PointH2, b2: PointH2) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// One horizontal slice of a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub z: f64,
    pub curve: ClosedPolyline,
}

/// A cylindrically bounded surface as a stack of closed horizontal slice
/// curves with strictly increasing heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicedSurface {
    slices: Vec<Slice>,
    /// Optional provenance tag (generator name, file, ...).
    pub source: Option<String>,
}

impl SlicedSurface {
    pub fn new(slices: Vec<Slice>, source: Option<String>) -> Result<Self, SchemaError> {
        if slices.is_empty() {
            return Err(SchemaError::new("surface has no slices".to_string()));
        }
        for (i, w) in slices.windows(2).enumerate() {
            if !(w[0].z < w[1].z) {
                return Err(SchemaError::new(format!(
                    "slice heights must be strictly increasing: z[{i}] = {}, z[{}] = {}",
                    w[0].z,
                    i + 1,
                    w[1].z
                )));
            }
        }
        if let Some(s) = slices.iter().find(|s| !s.z.is_finite()) {
            return Err(SchemaError::new(format!("non-finite slice height {}", s.z)));
        }
        Ok(Self { slices, source })
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn z_min(&self) -> f64 {
        self.slices.first().unwrap().z
    }

    pub fn z_max(&self) -> f64 {
        self.slices.last().unwrap().z
    }

    /// Index of the slice at height `z` (exact match within 1e-12).
    pub fn slice_index_at(&self, z: f64) -> Result<usize, SchemaError> {
        self.slices
            .iter()
            .position(|s| (s.z - z).abs() <= 1e-12)
            .ok_or_else(|| SchemaError::new(format!("no slice at height {z}")))
    }

    /// Apply a horizontal translation by `a` to every vertex.
    pub fn translated_s(&self, a: f64) -> SlicedSurface {
        let slices = self
            .slices
            .iter()
            .map(|s| Slice {
                z: s.z,
                curve: ClosedPolyline {
                    vertices: s
                        .curve
                        .vertices
                        .iter()
                        .map(|v| PointH2::new(v.s + a, v.r))
                        .collect(),
                },
            })
            .collect();
        SlicedSurface {
            slices,
            source: self.source.clone(),
        }
    }

    /// Apply a vertical translation by `a` to every slice height.
    pub fn translated_z(&self, a: f64) -> SlicedSurface {
        let slices = self
            .slices
            .iter()
            .map(|s| Slice {
                z: s.z + a,
                curve: s.curve.clone(),
            })
            .collect();
        SlicedSurface {
            slices,
            source: self.source.clone(),
        }
    }
}

/// A rotationally invariant surface described by its profile.
#[derive(Debug, Clone)]
pub struct RotationalSurface {
    pub profile: DelaunayProfile,
}

impl RotationalSurface {
    pub fn new(profile: DelaunayProfile) -> Self {
        Self { profile }
    }
}

/// Per-slice-vertex unit outward normals of a sliced surface.
#[derive(Debug, Clone)]
pub struct SurfaceNormalField {
    /// `normals[j][k]` is the normal at vertex `k` of slice `j`.
    pub normals: Vec<Vec<TangentVec>>,
}

/// Slice a rotational surface at the given heights with `n_per_circle`
/// points per circle. Radii come from the profile's monotone interpolant.
pub fn slice_rotational(
    surf: &RotationalSurface,
    heights: &[f64],
    n_per_circle: usize,
) -> Result<SlicedSurface, SchemaError> {
    let mut slices = Vec::with_capacity(heights.len());
    for &z in heights {
        let rho = surf.profile.rho_of_z(z)?;
        let pts = geom::circle_sample(surf.profile.axis(), rho, n_per_circle)?;
        slices.push(Slice {
            z,
            curve: ClosedPolyline::from_vertices(pts)?,
        });
    }
    SlicedSurface::new(slices, Some("rotational".to_string()))
}

/// Exact unit outward normal of a rotational surface at a point of its
/// height-`z` slice: `sin(sigma) U - cos(sigma) d_z` with `U` the unit
/// radial direction away from the axis.
pub fn rotational_unit_normal(
    surf: &RotationalSurface,
    p: PointH2,
    z: f64,
) -> Result<TangentVec, SchemaError> {
    let axis = surf.profile.axis();
    let sin_sigma = surf.profile.sin_sigma_of_z(z)?;
    // sign of cos(sigma) from the radius slope: rho' = cos(sigma), and
    // d rho/d z = cos(sigma)/sin(sigma)
    let drho_dz = surf.profile.drho_dz(z)?;
    let cos_sigma = drho_dz * sin_sigma;
    let radial = radial_direction(axis, p);
    Ok(TangentVec::new(
        sin_sigma * radial.a_s,
        sin_sigma * radial.a_r,
        -cos_sigma,
    ))
}

/// Unit tangent at `p` of the geodesic from `center` through `p`, pointing
/// away from the center, as coordinate coefficients at `p`.
fn radial_direction(center: PointH2, p: PointH2) -> TangentVec {
    let c = geom::Hyperboloid::from_fermi(center);
    let x = geom::Hyperboloid::from_fermi(p);
    let rho = geom::distance_h2(center, p);
    let (ch, sh) = (rho.cosh(), rho.sinh());
    // gamma'(rho) = (cosh(rho) X - C) / sinh(rho) in Minkowski coordinates
    let u = [
        (ch * x.0[0] - c.0[0]) / sh,
        (ch * x.0[1] - c.0[1]) / sh,
        (ch * x.0[2] - c.0[2]) / sh,
    ];
    // invert the coordinate frame at p: E_s = (cr sinh s, cr cosh s, 0),
    // E_r = (sr cosh s, sr sinh s, cr); both Minkowski-orthogonal
    let (cr, sr) = (p.r.cosh(), p.r.sinh());
    let (cs, ss) = (p.s.cosh(), p.s.sinh());
    let e_s = [cr * ss, cr * cs, 0.0];
    let e_r = [sr * cs, sr * ss, cr];
    let mink = |a: &[f64; 3], b: &[f64; 3]| -a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let a_s = mink(&u, &e_s) / (cr * cr); // <E_s, E_s> = cosh^2 r
    let a_r = mink(&u, &e_r);
    TangentVec::new(a_s, a_r, 0.0)
}

/// Estimate unit outward normals at every slice vertex by finite
/// differences: the curve tangent from neighboring vertices, the inter-slice
/// direction from the nearest points on adjacent slice polylines (central
/// where both neighbors exist), orthonormalized through the metric cross
/// product and oriented away from the enclosed region.
pub fn estimate_normals(surf: &SlicedSurface) -> Result<SurfaceNormalField, SchemaError> {
    let slices = surf.slices();
    if slices.len() < 2 {
        return Err(SchemaError::new(
            "normal estimation needs at least 2 slices".to_string(),
        ));
    }
    let mut normals = Vec::with_capacity(slices.len());
    for j in 0..slices.len() {
        let slice = &slices[j];
        let curve = &slice.curve;
        let center = curve.centroid();
        let n = curve.len();
        let mut row = Vec::with_capacity(n);
        let (j_dn, j_up) = (j.saturating_sub(1), (j + 1).min(slices.len() - 1));
        for k in 0..n {
            let p = curve.vertex(k as isize);
            let prev = curve.vertex(k as isize - 1);
            let next = curve.vertex(k as isize + 1);
            let tangent = TangentVec::new(next.s - prev.s, next.r - prev.r, 0.0);
            if tangent.a_s == 0.0 && tangent.a_r == 0.0 {
                return Err(SchemaError::new(format!(
                    "degenerate vertex {k} in slice {j}: zero tangent"
                )));
            }
            let q_dn = if j_dn == j {
                p
            } else {
                closest_point_on_polyline(&slices[j_dn].curve, p)
            };
            let q_up = if j_up == j {
                p
            } else {
                closest_point_on_polyline(&slices[j_up].curve, p)
            };
            let dz = slices[j_up].z - slices[j_dn].z;
            let v = TangentVec::new(q_up.s - q_dn.s, q_up.r - q_dn.r, dz);
            let p3 = PointH2xR::new(p.s, p.r, slice.z);
            let mut nvec = geom::metric_cross(p3, tangent, v);
            let norm = geom::metric_norm(p3, nvec);
            if !(norm > 0.0) {
                return Err(SchemaError::new(format!(
                    "degenerate vertex {k} in slice {j}: tangent parallel to slice step"
                )));
            }
            nvec = nvec.scale(1.0 / norm);
            let outward = TangentVec::new(p.s - center.s, p.r - center.r, 0.0);
            if geom::metric_inner(p3, nvec, outward) < 0.0 {
                nvec = nvec.scale(-1.0);
            }
            row.push(nvec);
        }
        normals.push(row);
    }
    Ok(SurfaceNormalField { normals })
}

/// Coordinate-space closest point on a closed polyline (Euclidean projection
/// per segment in the `(s, r)` chart).
fn closest_point_on_polyline(curve: &ClosedPolyline, p: PointH2) -> PointH2 {
    let mut best = curve.vertex(0);
    let mut best_d2 = f64::INFINITY;
    for (a, b) in curve.edges() {
        let (es, er) = (b.s - a.s, b.r - a.r);
        let len2 = es * es + er * er;
        let t = if len2 > 0.0 {
            (((p.s - a.s) * es + (p.r - a.r) * er) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = PointH2::new(a.s + t * es, a.r + t * er);
        let d2 = (q.s - p.s).powi(2) + (q.r - p.r).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best = q;
        }
    }
    best
}

/// Lateral area of a sliced surface between heights `a < b`.
///
/// Strips between consecutive slices are split into vertex-quads and each
/// quad into two geodesic-chord triangles; triangle areas use the metric
/// cross product evaluated at the coordinate centroid. Partial strips at the
/// interval ends are prorated linearly in `z`, which makes the measure
/// exactly additive over adjacent intervals.
pub fn area_between_sliced(surf: &SlicedSurface, a: f64, b: f64) -> Result<f64, SchemaError> {
    if !(a < b) {
        return Err(SchemaError::new(format!(
            "empty height interval [{a}, {b}]"
        )));
    }
    if b <= surf.z_min() || a >= surf.z_max() {
        return Err(SchemaError::new(format!(
            "interval [{a}, {b}] does not intersect surface heights [{}, {}]",
            surf.z_min(),
            surf.z_max()
        )));
    }
    let slices = surf.slices();
    let mut total = 0.0;
    for j in 0..slices.len() - 1 {
        let (lo, hi) = (slices[j].z, slices[j + 1].z);
        let overlap = (b.min(hi) - a.max(lo)).max(0.0);
        if overlap == 0.0 {
            continue;
        }
        let frac = overlap / (hi - lo);
        total += frac * strip_area(&slices[j], &slices[j + 1]);
    }
    Ok(total)
}

fn strip_area(lo: &Slice, hi: &Slice) -> f64 {
    let n = lo.curve.len();
    let m = hi.curve.len();
    let mut area = 0.0;
    if n == m {
        // index correspondence
        for k in 0..n {
            let p00 = lo.curve.vertex(k as isize);
            let p01 = lo.curve.vertex(k as isize + 1);
            let p10 = hi.curve.vertex(k as isize);
            let p11 = hi.curve.vertex(k as isize + 1);
            area += tri_area(p00, lo.z, p01, lo.z, p11, hi.z);
            area += tri_area(p00, lo.z, p11, hi.z, p10, hi.z);
        }
    } else {
        // correspondence by nearest point on the other slice
        for k in 0..n {
            let p00 = lo.curve.vertex(k as isize);
            let p01 = lo.curve.vertex(k as isize + 1);
            let p10 = closest_point_on_polyline(&hi.curve, p00);
            let p11 = closest_point_on_polyline(&hi.curve, p01);
            area += tri_area(p00, lo.z, p01, lo.z, p11, hi.z);
            area += tri_area(p00, lo.z, p11, hi.z, p10, hi.z);
        }
    }
    area
}

fn tri_area(a: PointH2, za: f64, b: PointH2, zb: f64, c: PointH2, zc: f64) -> f64 {
    let base = PointH2xR::new(
        (a.s + b.s + c.s) / 3.0,
        (a.r + b.r + c.r) / 3.0,
        (za + zb + zc) / 3.0,
    );
    let u = TangentVec::new(b.s - a.s, b.r - a.r, zb - za);
    let v = TangentVec::new(c.s - a.s, c.r - a.r, zc - za);
    0.5 * geom::metric_norm(base, geom::metric_cross(base, u, v))
}

/// Lateral area of a rotational surface between heights `a < b`, from the
/// closed form `dA = 2 pi sinh(rho) dt` along the arc-length profile.
/// Trapezoid cells on the profile samples; partial cells prorated linearly,
/// making the measure exactly additive.
pub fn area_between_rotational(
    surf: &RotationalSurface,
    a: f64,
    b: f64,
) -> Result<f64, SchemaError> {
    if !(a < b) {
        return Err(SchemaError::new(format!(
            "empty height interval [{a}, {b}]"
        )));
    }
    let prof = &surf.profile;
    if b <= prof.z_min() || a >= prof.z_max() {
        return Err(SchemaError::new(format!(
            "interval [{a}, {b}] does not intersect profile heights [{}, {}]",
            prof.z_min(),
            prof.z_max()
        )));
    }
    let samples = prof.samples();
    let tau = std::f64::consts::TAU;
    let mut total = 0.0;
    for w in samples.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let overlap = (b.min(s1.z) - a.max(s0.z)).max(0.0);
        if overlap == 0.0 {
            continue;
        }
        let frac = overlap / (s1.z - s0.z);
        let cell = 0.5 * (s0.rho.sinh() + s1.rho.sinh()) * (s1.t - s0.t) * tau;
        total += frac * cell;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::{integrate_profile, period, tau_max, DelaunayParams};
    use crate::geom::metric_inner;

    fn unduloid(h: f64, tau: f64, z_span: f64) -> RotationalSurface {
        let p = DelaunayParams::new(h, tau).unwrap();
        RotationalSurface::new(integrate_profile(&p, PointH2::new(0.0, 0.0), z_span, 1e-3).unwrap())
    }

    fn cylinder(h: f64, z_span: f64) -> RotationalSurface {
        let p = DelaunayParams::new(h, tau_max(h).unwrap()).unwrap();
        RotationalSurface::new(integrate_profile(&p, PointH2::new(0.0, 0.0), z_span, 1e-3).unwrap())
    }

    #[test]
    fn polyline_validation() {
        let pts = geom::circle_sample(PointH2::new(0.0, 0.0), 1.0, 16).unwrap();
        assert!(ClosedPolyline::from_vertices(pts.clone()).is_ok());
        // closed form requires explicit closure
        let mut closed = pts.clone();
        closed.push(pts[0]);
        assert!(ClosedPolyline::from_closed(closed).is_ok());
        assert!(ClosedPolyline::from_closed(pts.clone()).is_err());
        // too few vertices
        assert!(ClosedPolyline::from_vertices(pts[..7].to_vec()).is_err());
        // figure-eight self-intersection
        let mut fig8 = Vec::new();
        for k in 0..16 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            fig8.push(PointH2::new((2.0 * t).sin() * 0.5 + t.cos() * 0.1, t.sin()));
        }
        assert!(ClosedPolyline::from_vertices(fig8).is_err());
    }

    #[test]
    fn surface_rejects_non_increasing_heights() {
        let c = ClosedPolyline::from_vertices(
            geom::circle_sample(PointH2::new(0.0, 0.0), 1.0, 16).unwrap(),
        )
        .unwrap();
        let bad = vec![
            Slice {
                z: 0.0,
                curve: c.clone(),
            },
            Slice {
                z: 0.0,
                curve: c.clone(),
            },
        ];
        assert!(SlicedSurface::new(bad, None).is_err());
        let good = vec![
            Slice {
                z: 0.0,
                curve: c.clone(),
            },
            Slice { z: 0.5, curve: c },
        ];
        assert!(SlicedSurface::new(good, None).is_ok());
    }

    #[test]
    fn slice_rotational_cylinder_congruent_circles() {
        let surf = cylinder(1.0, 2.0);
        let rho = crate::delaunay::cylinder_radius(1.0);
        let heights: Vec<f64> = (0..10).map(|i| 0.1 + 0.19 * i as f64).collect();
        let sliced = slice_rotational(&surf, &heights, 64).unwrap();
        for slice in sliced.slices() {
            for v in slice.curve.vertices() {
                let d = geom::distance_h2(*v, PointH2::new(0.0, 0.0));
                assert!((d - rho).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn slice_rotational_vertices_at_interpolated_radius() {
        let surf = unduloid(1.0, 0.2, 6.0);
        let heights: Vec<f64> = (0..30).map(|i| 0.05 + 3.3 * i as f64 / 29.0).collect();
        let sliced = slice_rotational(&surf, &heights, 32).unwrap();
        for (slice, &z) in sliced.slices().iter().zip(&heights) {
            let rho = surf.profile.rho_of_z(z).unwrap();
            for v in slice.curve.vertices() {
                assert!((geom::distance_h2(*v, PointH2::new(0.0, 0.0)) - rho).abs() < 1e-8);
            }
        }
        // bulge slice encloses the maximal coordinate area
        let per = period(surf.profile.params()).value().unwrap();
        let heights = vec![0.25 * per, 0.5 * per, per, 1.5 * per];
        let sliced = slice_rotational(&surf, &heights, 64).unwrap();
        let areas: Vec<f64> = sliced
            .slices()
            .iter()
            .map(|s| s.curve.signed_coordinate_area2())
            .collect();
        // heights[2] is the bulge
        assert!(areas[2] > areas[0] && areas[2] > areas[1] && areas[2] > areas[3]);
        assert!(slice_rotational(&surf, &[100.0], 64).is_err());
    }

    #[test]
    fn normals_cylinder_purely_radial() {
        let surf = cylinder(1.0, 1.0);
        let heights: Vec<f64> = (0..6).map(|i| 0.1 + 0.15 * i as f64).collect();
        let sliced = slice_rotational(&surf, &heights, 128).unwrap();
        let field = estimate_normals(&sliced).unwrap();
        for (j, slice) in sliced.slices().iter().enumerate() {
            for (k, v) in slice.curve.vertices().iter().enumerate() {
                let n = field.normals[j][k];
                let p = PointH2xR::new(v.s, v.r, slice.z);
                assert!((metric_inner(p, n, n) - 1.0).abs() < 1e-6);
                assert!(
                    metric_inner(p, n, TangentVec::e_z()).abs() < 1e-6,
                    "vertical component at slice {j} vertex {k}"
                );
                // agrees with the exact radial normal
                let exact = rotational_unit_normal(&surf, *v, slice.z).unwrap();
                let dot = metric_inner(p, n, exact);
                assert!(dot > 1.0 - 1e-5, "normal misaligned: dot = {dot}");
            }
        }
    }

    #[test]
    fn normals_match_exact_rotational_normal_first_order() {
        let surf = unduloid(1.0, 0.2, 4.2);
        let per = period(surf.profile.params()).value().unwrap();
        let errs: Vec<f64> = [80usize, 160]
            .iter()
            .map(|&m| {
                let heights: Vec<f64> = (0..=m).map(|i| 0.3 + per * i as f64 / m as f64).collect();
                let sliced = slice_rotational(&surf, &heights, 256).unwrap();
                let field = estimate_normals(&sliced).unwrap();
                let mut worst = 0.0f64;
                // interior slices only: ends use one-sided differences
                for (j, slice) in sliced.slices().iter().enumerate().skip(1).take(m - 1) {
                    for (k, v) in slice.curve.vertices().iter().enumerate() {
                        let p = PointH2xR::new(v.s, v.r, slice.z);
                        let exact = rotational_unit_normal(&surf, *v, slice.z).unwrap();
                        let n = field.normals[j][k];
                        let err = (1.0 - metric_inner(p, n, exact)).abs();
                        worst = worst.max(err);
                    }
                }
                worst
            })
            .collect();
        // alignment error shrinks under refinement of the slice spacing
        assert!(errs[1] < errs[0], "no refinement improvement: {errs:?}");
        assert!(errs[0] < 1e-2, "coarse misalignment too large: {errs:?}");
    }

    #[test]
    fn normals_at_bulge_are_horizontal() {
        let surf = unduloid(1.0, 0.2, 3.6);
        let per = period(surf.profile.params()).value().unwrap();
        let gap = per / 100.0;
        let heights = vec![per - gap, per, per + gap];
        let sliced = slice_rotational(&surf, &heights, 128).unwrap();
        let field = estimate_normals(&sliced).unwrap();
        let slice = &sliced.slices()[1];
        for (k, v) in slice.curve.vertices().iter().enumerate() {
            let p = PointH2xR::new(v.s, v.r, slice.z);
            let dot = metric_inner(p, field.normals[1][k], TangentVec::e_z());
            assert!(dot.abs() < 5e-3, "vertical component {dot} at bulge");
        }
    }

    #[test]
    fn area_cylinder_closed_form() {
        // lateral area of the cylinder: 2 pi sinh(rho*) L
        let surf = cylinder(1.0, 2.0);
        let rho = crate::delaunay::cylinder_radius(1.0);
        let got = area_between_rotational(&surf, 0.25, 1.75).unwrap();
        let expect = std::f64::consts::TAU * rho.sinh() * 1.5;
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn area_additive_and_periodic() {
        let surf = unduloid(1.0, 0.2, 17.5);
        let per = period(surf.profile.params()).value().unwrap();
        let a1 = area_between_rotational(&surf, 0.0, per).unwrap();
        let a2 = area_between_rotational(&surf, per, 2.0 * per).unwrap();
        assert!((a1 - a2).abs() / a1 < 1e-6, "period areas {a1} vs {a2}");
        // additivity over adjacent intervals
        let left = area_between_rotational(&surf, 0.3, 1.1).unwrap();
        let right = area_between_rotational(&surf, 1.1, 2.7).unwrap();
        let both = area_between_rotational(&surf, 0.3, 2.7).unwrap();
        assert!((left + right - both).abs() < 1e-10);
        // linear growth: area over [0, kP] = k * area over [0, P]
        for k in 1..=5 {
            let ak = area_between_rotational(&surf, 0.0, k as f64 * per).unwrap();
            assert!(
                (ak - k as f64 * a1).abs() / ak < 1e-6,
                "k={k}: {ak} vs {}",
                k as f64 * a1
            );
        }
        assert!(area_between_rotational(&surf, 20.0, 21.0).is_err());
        assert!(area_between_rotational(&surf, 1.0, 1.0).is_err());
    }

    #[test]
    fn sliced_area_converges_to_closed_form() {
        let surf = unduloid(1.0, 0.2, 4.2);
        let per = period(surf.profile.params()).value().unwrap();
        let exact = area_between_rotational(&surf, 0.2, 0.2 + per).unwrap();
        let err_of = |m: usize| {
            let heights: Vec<f64> = (0..=m).map(|i| 0.2 + per * i as f64 / m as f64).collect();
            let sliced = slice_rotational(&surf, &heights, 512).unwrap();
            let got = area_between_sliced(&sliced, 0.2, 0.2 + per).unwrap();
            (got - exact).abs() / exact
        };
        let (e1, e2) = (err_of(50), err_of(100));
        assert!(e2 < e1, "no convergence: {e1} -> {e2}");
        let ratio = e1 / e2;
        assert!(
            ratio > 3.0,
            "area convergence below second order: {e1} -> {e2} (ratio {ratio})"
        );
    }

    #[test]
    fn sliced_area_additive() {
        let surf = unduloid(1.0, 0.2, 3.6);
        let heights: Vec<f64> = (0..=60).map(|i| 0.1 + 3.2 * i as f64 / 60.0).collect();
        let sliced = slice_rotational(&surf, &heights, 64).unwrap();
        let left = area_between_sliced(&sliced, 0.37, 1.234).unwrap();
        let right = area_between_sliced(&sliced, 1.234, 2.9).unwrap();
        let both = area_between_sliced(&sliced, 0.37, 2.9).unwrap();
        assert!((left + right - both).abs() < 1e-10);
    }
}
