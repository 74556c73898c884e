//! File formats: JSON schemas for surfaces, solver domains and foliations,
//! CSV for profiles, grid solutions and Alexandrov traces.
//!
//! All numbers are serialized with 17 significant digits
//! (`{:.16e}`), enough to reproduce every binary64 value exactly, so
//! save/load round-trips are bit-exact. Parsers validate the full set of
//! structural invariants and report the offending location; they are also
//! exercised as fuzz targets and must never panic on malformed input.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alexandrov::{AlexandrovTrace, AlexandrovValue, FoliationSpec, Provenance};
use crate::delaunay::{DelaunayParams, DelaunayProfile, ProfileSample};
use crate::geom::PointH2;
use crate::killing_graph::{BoundaryData, GridDomain};
use crate::surface::{ClosedPolyline, RotationalSurface, Slice, SlicedSurface};

/// Validation or schema error, with an optional location path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    message: String,
    location: Vec<String>,
}

impl SchemaError {
    pub fn new(message: String) -> Self {
        Self {
            message,
            location: Vec::new(),
        }
    }

    /// Prefix a location segment (outermost first in the rendered path).
    pub fn at(mut self, segment: impl Into<String>) -> Self {
        self.location.insert(0, segment.into());
        self
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.location.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "at {}: {}", self.location.join("."), self.message)
        }
    }
}

impl std::error::Error for SchemaError {}

/// Format a float with 17 significant digits (exact binary64 round trip).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON serializer writing floats with 17 significant digits.
struct G17Formatter;

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any value to JSON with the 17-digit float encoding.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    String::from_utf8(out).expect("serialized JSON is UTF-8")
}

// ---------------------------------------------------------------------------
// surfaces

/// Either surface representation, as stored on disk.
#[derive(Debug, Clone)]
pub enum Surface {
    Sliced(SlicedSurface),
    Rotational(RotationalSurface),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum SurfaceJson {
    #[serde(rename = "sliced")]
    Sliced { slices: Vec<SliceJson> },
    #[serde(rename = "rotational")]
    Rotational {
        #[serde(rename = "H")]
        h: f64,
        tau: f64,
        axis: AxisJson,
        profile: Vec<[f64; 4]>,
    },
}

#[derive(Serialize, Deserialize)]
struct SliceJson {
    z: f64,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct AxisJson {
    s: f64,
    r: f64,
}

/// Serialize a sliced surface; polylines are written explicitly closed
/// (first point repeated at the end).
pub fn sliced_surface_to_json(surf: &SlicedSurface) -> String {
    let slices = surf
        .slices()
        .iter()
        .map(|s| {
            let mut points: Vec<[f64; 2]> = s.curve.vertices().iter().map(|p| [p.s, p.r]).collect();
            points.push(points[0]);
            SliceJson { z: s.z, points }
        })
        .collect();
    to_json_string(&SurfaceJson::Sliced { slices })
}

pub fn rotational_surface_to_json(surf: &RotationalSurface) -> String {
    let p = &surf.profile;
    to_json_string(&SurfaceJson::Rotational {
        h: p.params().h(),
        tau: p.params().tau(),
        axis: AxisJson {
            s: p.axis().s,
            r: p.axis().r,
        },
        profile: p
            .samples()
            .iter()
            .map(|s| [s.t, s.z, s.rho, s.sigma])
            .collect(),
    })
}

pub fn surface_to_json(surf: &Surface) -> String {
    match surf {
        Surface::Sliced(s) => sliced_surface_to_json(s),
        Surface::Rotational(r) => rotational_surface_to_json(r),
    }
}

/// Parse and validate a surface JSON document.
pub fn parse_surface_json(text: &str) -> Result<Surface, SchemaError> {
    let raw: SurfaceJson = serde_json::from_str(text)
        .map_err(|e| SchemaError::new(format!("invalid surface JSON: {e}")))?;
    match raw {
        SurfaceJson::Sliced { slices } => {
            let mut out = Vec::with_capacity(slices.len());
            for (k, s) in slices.into_iter().enumerate() {
                if !s.z.is_finite() {
                    return Err(SchemaError::new(format!("non-finite height {}", s.z))
                        .at(format!("slices[{k}]")));
                }
                let pts: Vec<PointH2> = s.points.iter().map(|p| PointH2::new(p[0], p[1])).collect();
                let curve = ClosedPolyline::from_closed(pts)
                    .map_err(|e| e.at(format!("slices[{k}].points")))?;
                out.push(Slice { z: s.z, curve });
            }
            Ok(Surface::Sliced(
                SlicedSurface::new(out, None).map_err(|e| e.at("slices"))?,
            ))
        }
        SurfaceJson::Rotational {
            h,
            tau,
            axis,
            profile,
        } => {
            let params = DelaunayParams::new(h, tau).map_err(|e| e.at("H/tau"))?;
            if !axis.s.is_finite() || !axis.r.is_finite() {
                return Err(SchemaError::new("non-finite axis".to_string()).at("axis"));
            }
            let samples: Vec<ProfileSample> = profile
                .iter()
                .map(|row| ProfileSample {
                    t: row[0],
                    z: row[1],
                    rho: row[2],
                    sigma: row[3],
                })
                .collect();
            let prof = DelaunayProfile::from_samples(params, PointH2::new(axis.s, axis.r), samples)
                .map_err(|e| e.at("profile"))?;
            Ok(Surface::Rotational(RotationalSurface::new(prof)))
        }
    }
}

// ---------------------------------------------------------------------------
// solver domain + boundary data

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainJson {
    bounds: BoundsJson,
    grid: [usize; 2],
    mask: MaskJson,
    bc: BcJson,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsJson {
    r: [f64; 2],
    z: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaskJson {
    Named(String),
    Typed(TypedMask),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum TypedMask {
    #[serde(rename = "delaunay_shadow")]
    DelaunayShadow {
        #[serde(rename = "H")]
        h: f64,
        tau: f64,
        shrink: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum BcJson {
    #[serde(rename = "constant")]
    Constant { value: f64 },
    #[serde(rename = "delaunay_f0")]
    DelaunayF0 {
        #[serde(rename = "H")]
        h: f64,
        tau: f64,
    },
    #[serde(rename = "samples")]
    Samples { values: Vec<f64> },
}

/// Parse a domain/boundary-condition description. Boundary samples are
/// matched to boundary nodes in row-major grid scan order.
pub fn parse_domain_json(text: &str) -> Result<(GridDomain, BoundaryData), SchemaError> {
    let raw: DomainJson = serde_json::from_str(text)
        .map_err(|e| SchemaError::new(format!("invalid domain JSON: {e}")))?;
    let [r0, r1] = raw.bounds.r;
    let [z0, z1] = raw.bounds.z;
    for v in [r0, r1, z0, z1] {
        if !v.is_finite() {
            return Err(SchemaError::new(format!("non-finite bound {v}")).at("bounds"));
        }
    }
    let [nr, nz] = raw.grid;
    if nr > 4096 || nz > 4096 {
        return Err(
            SchemaError::new(format!("grid {nr}x{nz} exceeds the 4096 per-axis limit")).at("grid"),
        );
    }
    let dom = match &raw.mask {
        MaskJson::Named(name) if name == "rect" => {
            GridDomain::rect(r0, r1, z0, z1, nr, nz).map_err(|e| e.at("bounds/grid"))?
        }
        MaskJson::Named(name) => {
            return Err(
                SchemaError::new(format!("unknown mask name {name:?}, expected \"rect\""))
                    .at("mask"),
            )
        }
        MaskJson::Typed(TypedMask::DelaunayShadow { h, tau, shrink }) => {
            GridDomain::delaunay_shadow(r0, r1, z0, z1, nr, nz, *h, *tau, *shrink)
                .map_err(|e| e.at("mask"))?
        }
    };
    let bc = match raw.bc {
        BcJson::Constant { value } => {
            if !value.is_finite() {
                return Err(SchemaError::new(format!("non-finite value {value}")).at("bc"));
            }
            BoundaryData::constant(&dom, value)
        }
        BcJson::DelaunayF0 { h, tau } => {
            BoundaryData::delaunay_f0(&dom, h, tau).map_err(|e| e.at("bc"))?
        }
        BcJson::Samples { values } => {
            BoundaryData::from_samples(&dom, values).map_err(|e| e.at("bc.values"))?
        }
    };
    Ok((dom, bc))
}

// ---------------------------------------------------------------------------
// foliation descriptor

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum FoliationJson {
    #[serde(rename = "translation")]
    Translation { isometry: IsometryJson },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsometryJson {
    shift_s: f64,
}

pub fn parse_foliation_json(text: &str) -> Result<FoliationSpec, SchemaError> {
    let raw: FoliationJson = serde_json::from_str(text)
        .map_err(|e| SchemaError::new(format!("invalid foliation JSON: {e}")))?;
    let FoliationJson::Translation { isometry } = raw;
    if !isometry.shift_s.is_finite() {
        return Err(
            SchemaError::new(format!("non-finite shift {}", isometry.shift_s))
                .at("isometry.shift_s"),
        );
    }
    Ok(FoliationSpec {
        shift_s: isometry.shift_s,
    })
}

pub fn foliation_to_json(f: &FoliationSpec) -> String {
    to_json_string(&FoliationJson::Translation {
        isometry: IsometryJson { shift_s: f.shift_s },
    })
}

// ---------------------------------------------------------------------------
// CSV

/// Profile CSV: header `t,z,rho,sigma`, one row per arc-length sample.
pub fn profile_to_csv(profile: &DelaunayProfile) -> String {
    let mut out = String::from("t,z,rho,sigma\n");
    for s in profile.samples() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g17(s.t),
            fmt_g17(s.z),
            fmt_g17(s.rho),
            fmt_g17(s.sigma)
        ));
    }
    out
}

/// Parse a profile CSV back into samples (used by tooling and fuzzing; the
/// full invariants are enforced when the samples are attached to
/// parameters).
pub fn parse_profile_csv(text: &str) -> Result<Vec<ProfileSample>, SchemaError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "t,z,rho,sigma" => {}
        other => {
            return Err(SchemaError::new(format!(
                "expected header `t,z,rho,sigma`, got {other:?}"
            )))
        }
    }
    let mut samples = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(
                SchemaError::new(format!("expected 4 columns, got {}", cols.len()))
                    .at(format!("line {}", ln + 2)),
            );
        }
        let mut vals = [0.0f64; 4];
        for (k, c) in cols.iter().enumerate() {
            vals[k] = c.trim().parse::<f64>().map_err(|e| {
                SchemaError::new(format!("bad number {c:?}: {e}")).at(format!("line {}", ln + 2))
            })?;
            if !vals[k].is_finite() {
                return Err(SchemaError::new(format!("non-finite number {c:?}"))
                    .at(format!("line {}", ln + 2)));
            }
        }
        samples.push(ProfileSample {
            t: vals[0],
            z: vals[1],
            rho: vals[2],
            sigma: vals[3],
        });
    }
    Ok(samples)
}

/// Solution CSV: header `r,z,u`, row-major over in-domain nodes.
pub fn solution_to_csv(dom: &GridDomain, u: &[f64]) -> String {
    let mut out = String::from("r,z,u\n");
    for j in 0..dom.nz {
        for i in 0..dom.nr {
            if dom.in_domain(i, j) {
                out.push_str(&format!(
                    "{},{},{}\n",
                    fmt_g17(dom.r_at(i)),
                    fmt_g17(dom.z_at(j)),
                    fmt_g17(u[j * dom.nr + i])
                ));
            }
        }
    }
    out
}

/// Trace CSV: header `z,alpha,provenance`; `alpha` and `provenance` are
/// empty for the empty-slice sentinel.
pub fn trace_to_csv(trace: &AlexandrovTrace) -> String {
    let mut out = String::from("z,alpha,provenance\n");
    for (z, v) in trace.heights.iter().zip(&trace.values) {
        match v {
            AlexandrovValue::Empty => out.push_str(&format!("{},,\n", fmt_g17(*z))),
            AlexandrovValue::Value { t, provenance } => {
                let p = match provenance {
                    Provenance::T2 => "T2",
                    Provenance::T3 => "T3",
                    Provenance::Both => "BOTH",
                };
                out.push_str(&format!("{},{},{}\n", fmt_g17(*z), fmt_g17(*t), p));
            }
        }
    }
    out
}

/// Parse a trace CSV (tolerance metadata is not stored in the file; the
/// caller supplies it).
pub fn parse_trace_csv(text: &str, tol: f64) -> Result<AlexandrovTrace, SchemaError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "z,alpha,provenance" => {}
        other => {
            return Err(SchemaError::new(format!(
                "expected header `z,alpha,provenance`, got {other:?}"
            )))
        }
    }
    let mut heights = Vec::new();
    let mut values = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(
                SchemaError::new(format!("expected 3 columns, got {}", cols.len()))
                    .at(format!("line {}", ln + 2)),
            );
        }
        let z = cols[0].trim().parse::<f64>().map_err(|e| {
            SchemaError::new(format!("bad height {:?}: {e}", cols[0]))
                .at(format!("line {}", ln + 2))
        })?;
        if !z.is_finite() {
            return Err(
                SchemaError::new(format!("non-finite height {z}")).at(format!("line {}", ln + 2))
            );
        }
        let v = if cols[1].trim().is_empty() {
            if !cols[2].trim().is_empty() {
                return Err(
                    SchemaError::new("empty alpha with non-empty provenance".to_string())
                        .at(format!("line {}", ln + 2)),
                );
            }
            AlexandrovValue::Empty
        } else {
            let t = cols[1].trim().parse::<f64>().map_err(|e| {
                SchemaError::new(format!("bad alpha {:?}: {e}", cols[1]))
                    .at(format!("line {}", ln + 2))
            })?;
            if !t.is_finite() {
                return Err(SchemaError::new(format!("non-finite alpha {t}"))
                    .at(format!("line {}", ln + 2)));
            }
            let provenance = match cols[2].trim() {
                "T2" => Provenance::T2,
                "T3" => Provenance::T3,
                "BOTH" => Provenance::Both,
                other => {
                    return Err(SchemaError::new(format!("unknown provenance {other:?}"))
                        .at(format!("line {}", ln + 2)))
                }
            };
            AlexandrovValue::Value { t, provenance }
        };
        heights.push(z);
        values.push(v);
    }
    if heights.len() != values.len() || heights.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SchemaError::new(
            "trace heights must be strictly increasing".to_string(),
        ));
    }
    Ok(AlexandrovTrace::new(heights, values, tol))
}
