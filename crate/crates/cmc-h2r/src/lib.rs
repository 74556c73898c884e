//! Numerical toolkit for constant-mean-curvature surfaces in H^2 x R.
//!
//! The ambient space is the product of the hyperbolic plane and the real
//! line, described in Fermi coordinates `(s, r, z)` about a fixed base
//! geodesic: the metric is `dr^2 + cosh^2(r) ds^2 + dz^2`. On top of the
//! geometry core the crate provides
//!
//! * [`delaunay`] — rotationally invariant CMC surfaces (unduloid-type
//!   Delaunay surfaces `D_tau`) via the rotational profile ODE, with their
//!   closed-form radii, period and shadow-domain graph function;
//! * [`surface`] — discrete surfaces as stacks of closed horizontal
//!   polylines, normal estimation, lateral area, and JSON/CSV serialization;
//! * [`killing_graph`] — a conservative finite-volume discretization of the
//!   horizontal Killing-graph CMC equation with a damped Newton solver,
//!   gradient bound and flux-balance diagnostics;
//! * [`flux`] — the flux homology invariant along horizontal slice curves,
//!   with exact rotational and discrete sliced backends;
//! * [`alexandrov`] — the Alexandrov reflection function of a sliced surface
//!   for translation foliations, and structural checks on its traces;
//! * [`checks`] — the self-contained verification suite behind `cmc check`.

// `!(x > 0.0)` guards reject NaN; the suggested `x <= 0.0` would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alexandrov;
pub mod checks;
pub mod delaunay;
pub mod flux;
pub mod geom;
pub mod interp;
pub mod io;
pub mod killing_graph;
pub mod surface;

mod band;

pub use geom::{PointH2, PointH2xR, TangentVec};
