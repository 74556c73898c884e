//! The Alexandrov reflection function of a sliced surface.
//!
//! For the standard translation foliation `{s = t}` and a horizontal slice
//! curve at height `z`, three parameters describe the moving-plane sweep
//! from the right:
//!
//! * `t1` — the largest `t` with curve points in the closed half-space
//!   `{s >= t}` (attained at a vertex for polylines);
//! * `t2` — the largest `t` at which the reflection of the open right part
//!   `{s > t}` of the curve across the plane `{s = t}` stops being strictly
//!   contained in the enclosed region;
//! * `t3` — the largest `t` admitting a curve point on the plane where the
//!   surface crosses it orthogonally (the plane's normal direction lies in
//!   the tangent plane).
//!
//! The Alexandrov value at `z` is `max(t2, t3)`; the map `z -> alpha(z)` is
//! the Alexandrov function. An explicit `Empty` variant stands in for empty
//! slices (conceptually `-infinity`), surviving serialization and `max`.
//!
//! Structural checks mirror what the theory guarantees for CMC surfaces:
//! upper semicontinuity of the trace, the monotone / valley shape, and the
//! symmetry-plane conclusion when the trace is constant.

use serde::{Deserialize, Serialize};

use crate::geom::{self, PointH2};
use crate::io::SchemaError;
use crate::surface::{estimate_normals, ClosedPolyline, SlicedSurface, SurfaceNormalField};

/// Which contact mechanism produced an Alexandrov value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    T2,
    T3,
    Both,
}

/// Alexandrov value at one height: a contact parameter or the empty-slice
/// sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlexandrovValue {
    Empty,
    Value { t: f64, provenance: Provenance },
}

impl AlexandrovValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AlexandrovValue::Empty => None,
            AlexandrovValue::Value { t, .. } => Some(*t),
        }
    }

    /// Value with `Empty` mapped to negative infinity, matching the
    /// convention for empty slices.
    pub fn or_neg_inf(&self) -> f64 {
        self.as_f64().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Sampled Alexandrov function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlexandrovTrace {
    pub heights: Vec<f64>,
    pub values: Vec<AlexandrovValue>,
    /// Contact tolerance the values were computed with.
    pub tol: f64,
}

impl AlexandrovTrace {
    pub fn new(heights: Vec<f64>, values: Vec<AlexandrovValue>, tol: f64) -> Self {
        assert_eq!(heights.len(), values.len(), "trace length mismatch");
        Self {
            heights,
            values,
            tol,
        }
    }
}

/// Translation-foliation descriptor: the standard foliation `{s = t}`
/// precomposed with the horizontal translation by `shift_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoliationSpec {
    pub shift_s: f64,
}

/// Largest `t` with a curve point in `{s >= t}`: the max of the vertex
/// s-coordinates (attained at a vertex on a polyline).
pub fn t1(curve: &ClosedPolyline) -> f64 {
    curve.s_range().1
}

/// Error/empty outcomes of the contact searches.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContactError {
    #[error("empty slice")]
    Empty,
    #[error("no reflection contact above the scan floor")]
    NoContact,
    #[error("no orthogonal crossing detected")]
    NoOrthogonalCrossing,
}

/// Reflection-contact parameter `t2`.
///
/// Discrete realization: a vertex `p` with `s(p) > t + tol/4` fires at `t`
/// when its reflected image `(2t - s(p), r(p))` leaves the enclosed region
/// by more than `tol/4` in metric units at its own `r`-level (measured
/// through the sorted crossings of the curve at that level). For each vertex
/// the largest firing `t` is computable in closed form from the crossing
/// intervals, and `t2` is the maximum over vertices, which is exactly the
/// supremum a descending scan with bisection refinement would locate.
///
/// Requiring a strict exit (rather than unsigned proximity to the curve)
/// excludes the spurious near-contacts that any tolerance test produces next
/// to the fixed points of the reflection on the plane itself.
pub fn t2(curve: &ClosedPolyline, tol: f64) -> Result<f64, ContactError> {
    if curve.is_empty() {
        return Err(ContactError::Empty);
    }
    let strict = 0.25 * tol;
    let delta_out = 0.25 * tol;
    let (s_min, _) = curve.s_range();
    let floor = s_min - tol;
    let mut best: Option<f64> = None;
    for p in curve.vertices() {
        let crossings = level_crossings(curve, p.r);
        let delta_s = delta_out / p.r.cosh();
        // largest admissible reflected position
        let x0 = p.s - 2.0 * strict;
        let x_star = largest_outside_at_most(&crossings, delta_s, x0);
        if let Some(x) = x_star {
            let t_hat = 0.5 * (x + p.s);
            if t_hat >= floor {
                best = Some(best.map_or(t_hat, |b: f64| b.max(t_hat)));
            }
        }
    }
    best.ok_or(ContactError::NoContact)
}

/// Sorted s-positions where the polyline crosses the horizontal level `r`
/// (half-open rule, so the count is always even for a closed curve).
fn level_crossings(curve: &ClosedPolyline, r: f64) -> Vec<f64> {
    let mut xs = Vec::new();
    for (a, b) in curve.edges() {
        if (a.r <= r) != (b.r <= r) {
            xs.push(a.s + (r - a.r) / (b.r - a.r) * (b.s - a.s));
        }
    }
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    xs
}

/// Largest `x <= x0` clearing every inside-interval
/// `[c_0, c_1], [c_2, c_3], ...` by at least `delta`. Descends through the
/// delta-expanded intervals from the top; clamping below an interval can
/// land inside a lower overlapping one, which the next iteration handles.
fn largest_outside_at_most(crossings: &[f64], delta: f64, x0: f64) -> Option<f64> {
    if !x0.is_finite() {
        return None;
    }
    let mut cand = x0;
    let pairs = crossings.len() / 2;
    for m in (0..pairs).rev() {
        let lo = crossings[2 * m] - delta;
        let hi = crossings[2 * m + 1] + delta;
        if cand > hi {
            return Some(cand);
        }
        if cand >= lo {
            cand = lo;
        }
    }
    Some(cand)
}

/// Orthogonal-crossing parameter `t3` for slice `j`, from the estimated
/// normal field: the normalized pairing `(N, d_s)/cosh(r)` is sampled at the
/// vertices; sign changes along the curve are located by linear
/// interpolation in `s`, and isolated near-zero vertices (no incident sign
/// change) qualify when within `angle_tol`.
pub fn t3(
    surf: &SlicedSurface,
    field: &SurfaceNormalField,
    j: usize,
    angle_tol: f64,
) -> Result<f64, ContactError> {
    let slice = &surf.slices()[j];
    let curve = &slice.curve;
    if curve.is_empty() {
        return Err(ContactError::Empty);
    }
    let n = curve.len();
    let f: Vec<f64> = (0..n)
        .map(|k| {
            let v = curve.vertex(k as isize);
            let p3 = crate::geom::PointH2xR::new(v.s, v.r, slice.z);
            geom::metric_inner(p3, field.normals[j][k], crate::geom::TangentVec::e_s()) / v.r.cosh()
        })
        .collect();
    let mut best: Option<f64> = None;
    let mut push = |s: f64| {
        best = Some(best.map_or(s, |b: f64| b.max(s)));
    };
    for k in 0..n {
        let k1 = (k + 1) % n;
        let (fa, fb) = (f[k], f[k1]);
        let (va, vb) = (curve.vertex(k as isize), curve.vertex(k1 as isize));
        if fa == 0.0 {
            push(va.s);
        }
        if fa * fb < 0.0 {
            // linear interpolation of the zero crossing along the edge
            let w = fa / (fa - fb);
            push(va.s + w * (vb.s - va.s));
        }
    }
    // isolated near-orthogonal vertices without an incident sign change
    for k in 0..n {
        let prev = f[(k + n - 1) % n];
        let next = f[(k + 1) % n];
        if f[k] != 0.0 && f[k].abs() <= angle_tol && f[k] * prev > 0.0 && f[k] * next > 0.0 {
            push(curve.vertex(k as isize).s);
        }
    }
    best.ok_or(ContactError::NoOrthogonalCrossing)
}

/// Default orthogonality tolerance for `t3`.
pub const DEFAULT_ANGLE_TOL: f64 = 1e-2;

/// Alexandrov value of the slice at height `z`: `max(t2, t3)` with
/// provenance.
pub fn alexandrov_at(
    surf: &SlicedSurface,
    z: f64,
    tol: f64,
) -> Result<AlexandrovValue, SchemaError> {
    let field = estimate_normals(surf)?;
    let j = surf.slice_index_at(z)?;
    Ok(value_for_slice(surf, &field, j, tol))
}

fn value_for_slice(
    surf: &SlicedSurface,
    field: &SurfaceNormalField,
    j: usize,
    tol: f64,
) -> AlexandrovValue {
    let curve = &surf.slices()[j].curve;
    let v2 = t2(curve, tol).ok();
    let v3 = t3(surf, field, j, DEFAULT_ANGLE_TOL).ok();
    match (v2, v3) {
        (None, None) => AlexandrovValue::Empty,
        (Some(a), None) => AlexandrovValue::Value {
            t: a,
            provenance: Provenance::T2,
        },
        (None, Some(b)) => AlexandrovValue::Value {
            t: b,
            provenance: Provenance::T3,
        },
        (Some(a), Some(b)) => {
            let t = a.max(b);
            let provenance = if (a - b).abs() <= 0.25 * tol {
                Provenance::Both
            } else if a > b {
                Provenance::T2
            } else {
                Provenance::T3
            };
            AlexandrovValue::Value { t, provenance }
        }
    }
}

/// Alexandrov trace over all slice heights. Per-height computations are
/// independent; they are distributed over up to `CMC_THREADS` worker threads
/// (default: all cores) with results identical to the serial order.
pub fn alexandrov_trace(surf: &SlicedSurface, tol: f64) -> Result<AlexandrovTrace, SchemaError> {
    let field = estimate_normals(surf)?;
    let n = surf.slices().len();
    let values = parallel_map(n, |j| value_for_slice(surf, &field, j, tol));
    let heights = surf.slices().iter().map(|s| s.z).collect();
    Ok(AlexandrovTrace::new(heights, values, tol))
}

/// Alexandrov trace for the standard foliation precomposed with a horizontal
/// translation. Values are reported in the original coordinates, so for any
/// shift the trace of a fixed surface describes the same planes.
pub fn alexandrov_trace_with_foliation(
    surf: &SlicedSurface,
    foliation: &FoliationSpec,
    tol: f64,
) -> Result<AlexandrovTrace, SchemaError> {
    let moved = surf.translated_s(-foliation.shift_s);
    let mut trace = alexandrov_trace(&moved, tol)?;
    for v in trace.values.iter_mut() {
        if let AlexandrovValue::Value { t, .. } = v {
            *t += foliation.shift_s;
        }
    }
    Ok(trace)
}

/// Number of worker threads: `CMC_THREADS` if set and positive, otherwise
/// the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("CMC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn parallel_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    let threads = thread_cap().min(n.max(1));
    if threads <= 1 || n < 8 {
        return (0..n).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (c, slot) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (off, s) in slot.iter_mut().enumerate() {
                    *s = Some(f(c * chunk + off));
                }
            });
        }
    });
    out.into_iter().map(|v| v.unwrap()).collect()
}

/// Report of the discrete upper-semicontinuity surrogate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UscReport {
    /// Indices with an isolated dip below both neighboring values.
    pub violations: Vec<usize>,
}

impl UscReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Discrete upper-semicontinuity check: flags interior indices whose value
/// drops below *both* neighbors by more than `jump_tol` (an isolated dip no
/// upper-semicontinuous function can produce on refinement, while plain
/// downward steps pass). `Empty` counts as negative infinity.
pub fn check_usc(trace: &AlexandrovTrace, jump_tol: f64) -> UscReport {
    let v: Vec<f64> = trace.values.iter().map(|x| x.or_neg_inf()).collect();
    let mut violations = Vec::new();
    for k in 1..v.len().saturating_sub(1) {
        let floor = v[k - 1].min(v[k + 1]);
        if v[k] < floor - jump_tol {
            violations.push(k);
        }
    }
    UscReport { violations }
}

/// Shape classification of a trace against the monotone-or-valley structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MonotoneClass {
    Monotone,
    /// Decreasing then increasing, with the valley index.
    DownUp {
        valley: usize,
    },
    /// Interior local maxima (indices where a fall follows an earlier rise).
    Violation {
        indices: Vec<usize>,
    },
}

/// Classify a trace (no `Empty` values allowed) as monotone within the
/// `tol` deadband, decreasing-then-increasing, or a violation listing the
/// interior peak indices.
pub fn check_monotone_structure(
    trace: &AlexandrovTrace,
    tol: f64,
) -> Result<MonotoneClass, SchemaError> {
    let mut v = Vec::with_capacity(trace.values.len());
    for (k, val) in trace.values.iter().enumerate() {
        match val.as_f64() {
            Some(x) => v.push(x),
            None => {
                return Err(SchemaError::new(format!(
                    "monotone-structure check requires non-empty values (index {k})"
                )))
            }
        }
    }
    let mut rises = Vec::new();
    let mut falls = Vec::new();
    for k in 0..v.len().saturating_sub(1) {
        let d = v[k + 1] - v[k];
        if d > tol {
            rises.push(k);
        } else if d < -tol {
            falls.push(k);
        }
    }
    if rises.is_empty() || falls.is_empty() {
        return Ok(MonotoneClass::Monotone);
    }
    let first_rise = rises[0];
    let offending: Vec<usize> = falls.iter().copied().filter(|&f| f > first_rise).collect();
    if offending.is_empty() {
        // all falls precede all rises
        let valley = v
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(k, _)| k)
            .unwrap_or(0);
        return Ok(MonotoneClass::DownUp { valley });
    }
    // starts of maximal fall runs that follow a rise: the peaks
    let mut indices = Vec::new();
    let mut prev: Option<usize> = None;
    for &f in &offending {
        if prev != Some(f.wrapping_sub(1)) || prev.is_none() {
            indices.push(f);
        }
        prev = Some(f);
    }
    Ok(MonotoneClass::Violation { indices })
}

/// Symmetry-plane detection result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub plane: Option<f64>,
    /// Slice that broke the verification, if any.
    pub failing_slice: Option<usize>,
}

/// If the trace is constant within `tol`, verify that the surface is
/// setwise invariant under reflection across the constant plane (Hausdorff
/// distance of every slice to its reflection within `tol`) and return the
/// plane.
pub fn detect_symmetry_plane(
    surf: &SlicedSurface,
    trace: &AlexandrovTrace,
    tol: f64,
) -> SymmetryReport {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in &trace.values {
        match v.as_f64() {
            Some(x) => {
                lo = lo.min(x);
                hi = hi.max(x);
                sum += x;
                count += 1;
            }
            None => {
                return SymmetryReport {
                    plane: None,
                    failing_slice: None,
                }
            }
        }
    }
    if count == 0 || hi - lo > tol {
        return SymmetryReport {
            plane: None,
            failing_slice: None,
        };
    }
    let t_star = sum / count as f64;
    for (j, slice) in surf.slices().iter().enumerate() {
        // reflection is an involutive isometry, so the one-sided sup over
        // reflected vertices equals the full Hausdorff distance
        let mut worst = 0.0f64;
        for v in slice.curve.vertices() {
            let q = geom::reflect_h2(t_star, *v);
            worst = worst.max(distance_to_polyline(&slice.curve, q));
            if worst > tol {
                return SymmetryReport {
                    plane: None,
                    failing_slice: Some(j),
                };
            }
        }
    }
    SymmetryReport {
        plane: Some(t_star),
        failing_slice: None,
    }
}

/// Hyperbolic distance from a point to a polyline with a cheap coordinate
/// lower-bound prune (coordinate distance never exceeds hyperbolic
/// distance in this chart).
fn distance_to_polyline(curve: &ClosedPolyline, p: PointH2) -> f64 {
    let clamp_gap = |v: f64, lo: f64, hi: f64| -> f64 {
        if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            0.0
        }
    };
    let mut best = f64::INFINITY;
    for (a, b) in curve.edges() {
        // bounding-box coordinate distance is a lower bound for the
        // hyperbolic distance in this chart
        let gs = clamp_gap(p.s, a.s.min(b.s), a.s.max(b.s));
        let gr = clamp_gap(p.r, a.r.min(b.r), a.r.max(b.r));
        if (gs * gs + gr * gr).sqrt() >= best {
            continue;
        }
        best = best.min(geom::dist_point_segment_h2(p, a, b));
    }
    best
}
