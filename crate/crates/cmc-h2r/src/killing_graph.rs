//! Dirichlet solver for the horizontal Killing-graph CMC equation.
//!
//! A surface written as `s = u(r, z)` over a planar domain has constant mean
//! curvature `H0` exactly when
//!
//! ```text
//! Div( cosh^2(r) grad u / W ) = -2 H0 cosh(r),   W = sqrt(1 + cosh^2(r) |grad u|^2)
//! ```
//!
//! with the Euclidean gradient and divergence in the `(r, z)` plane. The
//! discretization is a conservative finite-volume scheme: face fluxes
//! `F = cosh^2(r) grad u / W` at cell faces from central differences,
//! divergence by face-flux differences. Every interior face flux enters the
//! two adjacent node residuals with opposite sign, so the discrete
//! divergence theorem holds exactly and the flux-balance identity can be
//! tested down to solver tolerance.
//!
//! The nonlinear system is solved by damped Newton iteration with an
//! analytic band Jacobian, with continuation in `H0` from the minimal
//! equation when the direct solve stalls. Uniqueness of the continuum
//! solution justifies accepting whatever the iteration converges to.

use serde::{Deserialize, Serialize};

use crate::band::BandMatrix;
use crate::delaunay::{integrate_profile, DelaunayParams, DelaunayProfile};
use crate::geom::{PointH2, TangentVec};
use crate::io::SchemaError;

/// Per-node classification of a masked rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Masked rectangular grid in the `(r, z)` plane.
///
/// Nodes are `(r_i, z_j)` with `i = 0..nr`, `j = 0..nz`, row-major storage
/// `j * nr + i`. Interior nodes carry unknowns; boundary nodes carry
/// Dirichlet data; exterior nodes are outside the domain. Every interior
/// node's 4-neighbors are interior or boundary, and the interior is
/// connected.
#[derive(Debug, Clone)]
pub struct GridDomain {
    pub r_min: f64,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nr: usize,
    pub nz: usize,
    mask: Vec<NodeClass>,
    /// unknown index per node (interior nodes only)
    unknown_of_node: Vec<Option<usize>>,
    /// node (i, j) per unknown
    interior_nodes: Vec<(usize, usize)>,
    /// boundary nodes in row-major scan order
    boundary_nodes: Vec<(usize, usize)>,
}

impl GridDomain {
    /// Rectangular domain: border nodes are boundary, the rest interior.
    pub fn rect(
        r_min: f64,
        r_max: f64,
        z_min: f64,
        z_max: f64,
        nr: usize,
        nz: usize,
    ) -> Result<Self, SchemaError> {
        let in_domain = |_i: usize, _j: usize| true;
        Self::from_predicate(r_min, r_max, z_min, z_max, nr, nz, in_domain)
    }

    /// Masked domain from a shrunk Delaunay shadow: a node is in the domain
    /// iff `|r| <= shrink * rho(|z|)`. The profile starts at a bulge at
    /// `z = 0`, a symmetry height, so negative heights use the mirror value.
    pub fn delaunay_shadow(
        r_min: f64,
        r_max: f64,
        z_min: f64,
        z_max: f64,
        nr: usize,
        nz: usize,
        h: f64,
        tau: f64,
        shrink: f64,
    ) -> Result<Self, SchemaError> {
        if !(shrink > 0.0 && shrink <= 1.0) {
            return Err(SchemaError::new(format!(
                "shadow shrink factor must be in (0, 1], got {shrink}"
            )));
        }
        let params = DelaunayParams::new(h, tau)?;
        let z_reach = z_max.abs().max(z_min.abs()) + 1e-9;
        let profile = integrate_profile(
            &params,
            PointH2::new(0.0, 0.0),
            z_reach.max(1e-3),
            crate::delaunay::DEFAULT_STEP,
        )?;
        let hr = (r_max - r_min) / (nr as f64 - 1.0);
        let hz = (z_max - z_min) / (nz as f64 - 1.0);
        let in_domain = |i: usize, j: usize| -> bool {
            let r = r_min + hr * i as f64;
            let z = z_min + hz * j as f64;
            match profile.rho_of_z(z.abs()) {
                Ok(rho) => r.abs() <= shrink * rho,
                Err(_) => false,
            }
        };
        Self::from_predicate(r_min, r_max, z_min, z_max, nr, nz, in_domain)
    }

    fn from_predicate<F: Fn(usize, usize) -> bool>(
        r_min: f64,
        r_max: f64,
        z_min: f64,
        z_max: f64,
        nr: usize,
        nz: usize,
        in_domain: F,
    ) -> Result<Self, SchemaError> {
        if nr < 3 || nz < 3 {
            return Err(SchemaError::new(format!(
                "grid must be at least 3x3 nodes, got {nr}x{nz}"
            )));
        }
        if !(r_min < r_max) || !(z_min < z_max) {
            return Err(SchemaError::new(format!(
                "degenerate bounds r=[{r_min},{r_max}], z=[{z_min},{z_max}]"
            )));
        }
        let mut mask = vec![NodeClass::Exterior; nr * nz];
        for j in 0..nz {
            for i in 0..nr {
                if in_domain(i, j) {
                    mask[j * nr + i] = NodeClass::Boundary; // provisional
                }
            }
        }
        // interior = in-domain nodes all of whose 4-neighbors are in-domain
        // and which are not on the grid border
        for j in 1..nz - 1 {
            for i in 1..nr - 1 {
                let id = j * nr + i;
                if mask[id] == NodeClass::Exterior {
                    continue;
                }
                let nbrs = [id - 1, id + 1, id - nr, id + nr];
                if nbrs.iter().all(|&n| mask[n] != NodeClass::Exterior) {
                    mask[id] = NodeClass::Interior;
                }
            }
        }
        // boundary nodes that touch no interior node (including diagonally,
        // since the transverse face stencils reach corners) are dead weight
        let touches_interior = |mask: &Vec<NodeClass>, i: usize, j: usize| -> bool {
            let mut touch = false;
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni >= nr as isize || nj >= nz as isize {
                        continue;
                    }
                    touch |= mask[nj as usize * nr + ni as usize] == NodeClass::Interior;
                }
            }
            touch
        };
        for j in 0..nz {
            for i in 0..nr {
                let id = j * nr + i;
                if mask[id] == NodeClass::Boundary && !touches_interior(&mask, i, j) {
                    mask[id] = NodeClass::Exterior;
                }
            }
        }
        let mut unknown_of_node = vec![None; nr * nz];
        let mut interior_nodes = Vec::new();
        let mut boundary_nodes = Vec::new();
        for j in 0..nz {
            for i in 0..nr {
                match mask[j * nr + i] {
                    NodeClass::Interior => {
                        unknown_of_node[j * nr + i] = Some(interior_nodes.len());
                        interior_nodes.push((i, j));
                    }
                    NodeClass::Boundary => boundary_nodes.push((i, j)),
                    NodeClass::Exterior => {}
                }
            }
        }
        if interior_nodes.is_empty() {
            return Err(SchemaError::new("domain has no interior nodes".to_string()));
        }
        // connectivity of the interior (4-neighbor flood fill)
        let mut seen = vec![false; interior_nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(u) = stack.pop() {
            let (i, j) = interior_nodes[u];
            for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 0 || nj < 0 || ni >= nr as isize || nj >= nz as isize {
                    continue;
                }
                if let Some(v) = unknown_of_node[nj as usize * nr + ni as usize] {
                    if !seen[v] {
                        seen[v] = true;
                        count += 1;
                        stack.push(v);
                    }
                }
            }
        }
        if count != interior_nodes.len() {
            return Err(SchemaError::new(format!(
                "interior is disconnected: {count} of {} nodes reachable",
                interior_nodes.len()
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            z_min,
            z_max,
            nr,
            nz,
            mask,
            unknown_of_node,
            interior_nodes,
            boundary_nodes,
        })
    }

    pub fn hr(&self) -> f64 {
        (self.r_max - self.r_min) / (self.nr as f64 - 1.0)
    }

    pub fn hz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.nz as f64 - 1.0)
    }

    pub fn r_at(&self, i: usize) -> f64 {
        self.r_min + self.hr() * i as f64
    }

    pub fn z_at(&self, j: usize) -> f64 {
        self.z_min + self.hz() * j as f64
    }

    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        self.mask[j * self.nr + i]
    }

    pub fn in_domain(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.nr + i] != NodeClass::Exterior
    }

    pub fn interior_nodes(&self) -> &[(usize, usize)] {
        &self.interior_nodes
    }

    pub fn boundary_nodes(&self) -> &[(usize, usize)] {
        &self.boundary_nodes
    }

    pub fn num_unknowns(&self) -> usize {
        self.interior_nodes.len()
    }

    fn unknown(&self, i: usize, j: usize) -> Option<usize> {
        self.unknown_of_node[j * self.nr + i]
    }
}

/// Dirichlet data: one value per boundary node, aligned with
/// [`GridDomain::boundary_nodes`].
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub values: Vec<f64>,
}

impl BoundaryData {
    pub fn constant(dom: &GridDomain, c: f64) -> Self {
        Self {
            values: vec![c; dom.boundary_nodes().len()],
        }
    }

    /// Sample the Delaunay graph function `f0` of `D_tau` at the boundary
    /// nodes (axis at the origin; negative heights by mirror symmetry).
    pub fn delaunay_f0(dom: &GridDomain, h: f64, tau: f64) -> Result<Self, SchemaError> {
        let profile = f0_profile(dom, h, tau)?;
        let values = dom
            .boundary_nodes()
            .iter()
            .map(|&(i, j)| profile.graph_function_f0(dom.r_at(i), dom.z_at(j).abs()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { values })
    }

    pub fn from_samples(dom: &GridDomain, values: Vec<f64>) -> Result<Self, SchemaError> {
        if values.len() != dom.boundary_nodes().len() {
            return Err(SchemaError::new(format!(
                "expected {} boundary samples, got {}",
                dom.boundary_nodes().len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(SchemaError::new(format!("non-finite boundary value {v}")));
        }
        Ok(Self { values })
    }
}

/// Profile long enough to evaluate `f0` over the whole grid height range.
pub fn f0_profile(dom: &GridDomain, h: f64, tau: f64) -> Result<DelaunayProfile, SchemaError> {
    let params = DelaunayParams::new(h, tau)?;
    let z_reach = dom.z_max.abs().max(dom.z_min.abs()) + 1e-9;
    integrate_profile(
        &params,
        PointH2::new(0.0, 0.0),
        z_reach.max(1e-3),
        crate::delaunay::DEFAULT_STEP,
    )
}

/// Solver options.
#[derive(Debug, Clone)]
pub struct SolveOpts {
    /// Convergence tolerance on the residual max-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial interior guess (full-grid vector); zero if absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            initial: None,
        }
    }
}

/// Converged solution on a masked grid.
#[derive(Debug, Clone)]
pub struct GridSolution {
    /// Values on the full grid (row-major); NaN at exterior nodes.
    pub u: Vec<f64>,
    pub h0: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Non-convergence diagnostics. The domain may exceed the solvable scale of
/// the small-disk existence theory; continuation reports its last stage.
#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(
        "Newton did not converge: residual {last_residual:.3e} after {iterations} iterations \
         (H0 stages tried: {stages:?})"
    )]
    NonConvergence {
        last_residual: f64,
        iterations: usize,
        stages: Vec<f64>,
    },
    #[error("singular Newton system")]
    Singular,
    #[error(transparent)]
    Invalid(#[from] SchemaError),
}

/// Assemble a full-grid vector with boundary data applied and interior from
/// `initial` (default: the mean boundary value, so constant data converges
/// immediately).
fn initial_vector(dom: &GridDomain, bc: &BoundaryData, initial: Option<&Vec<f64>>) -> Vec<f64> {
    let mut u = vec![f64::NAN; dom.nr * dom.nz];
    let mean = if bc.values.is_empty() {
        0.0
    } else {
        bc.values.iter().sum::<f64>() / bc.values.len() as f64
    };
    for &(i, j) in dom.interior_nodes() {
        u[j * dom.nr + i] = mean;
    }
    if let Some(init) = initial {
        for &(i, j) in dom.interior_nodes() {
            let v = init[j * dom.nr + i];
            u[j * dom.nr + i] = if v.is_finite() { v } else { mean };
        }
    }
    for (&(i, j), &v) in dom.boundary_nodes().iter().zip(&bc.values) {
        u[j * dom.nr + i] = v;
    }
    u
}

/// Transverse derivative (d/dz at an r-face, d/dr at a z-face) at a node,
/// central where both neighbors exist, second-order one-sided next to the
/// mask boundary (falling back to first order where only one extra node is
/// available).
#[derive(Debug, Clone, Copy)]
struct Stencil1D {
    /// (node offset relative to the face's base node, coefficient)
    terms: [(isize, f64); 3],
    len: usize,
}

impl Stencil1D {
    fn central(step: isize, h: f64) -> Self {
        Self {
            terms: [(step, 0.5 / h), (-step, -0.5 / h), (0, 0.0)],
            len: 2,
        }
    }

    /// One-sided toward `+step`: `(-3 u_0 + 4 u_1 - u_2) / (2h)`.
    fn one_sided3(step: isize, h: f64) -> Self {
        Self {
            terms: [(0, -1.5 / h), (step, 2.0 / h), (2 * step, -0.5 / h)],
            len: 3,
        }
    }

    fn one_sided2(step: isize, h: f64) -> Self {
        Self {
            terms: [(step, 1.0 / h), (0, -1.0 / h), (0, 0.0)],
            len: 2,
        }
    }

    fn terms(&self) -> &[(isize, f64)] {
        &self.terms[..self.len]
    }
}

impl GridDomain {
    fn transverse_stencil(
        &self,
        avail: impl Fn(isize) -> bool,
        step: isize,
        h: f64,
    ) -> Option<Stencil1D> {
        match (avail(-1), avail(1)) {
            (true, true) => Some(Stencil1D::central(step, h)),
            (false, true) => Some(if avail(2) {
                Stencil1D::one_sided3(step, h)
            } else {
                Stencil1D::one_sided2(step, h)
            }),
            (true, false) => Some(if avail(-2) {
                Stencil1D::one_sided3(-step, -h)
            } else {
                Stencil1D::one_sided2(-step, -h)
            }),
            (false, false) => None,
        }
    }

    /// d u / d z at node (i, j), or None if no z-neighbor is available.
    fn dz_stencil(&self, i: usize, j: usize) -> Option<Stencil1D> {
        let avail = |d: isize| -> bool {
            let nj = j as isize + d;
            nj >= 0 && nj < self.nz as isize && self.in_domain(i, nj as usize)
        };
        self.transverse_stencil(avail, self.nr as isize, self.hz())
    }

    /// d u / d r at node (i, j).
    fn dr_stencil(&self, i: usize, j: usize) -> Option<Stencil1D> {
        let avail = |d: isize| -> bool {
            let ni = i as isize + d;
            ni >= 0 && ni < self.nr as isize && self.in_domain(ni as usize, j)
        };
        self.transverse_stencil(avail, 1, self.hr())
    }
}

fn eval_stencil(u: &[f64], base: usize, st: Option<Stencil1D>) -> f64 {
    match st {
        None => 0.0,
        Some(s) => s
            .terms()
            .iter()
            .map(|&(off, c)| c * u[(base as isize + off) as usize])
            .sum(),
    }
}

/// One face flux and its derivatives with respect to the participating
/// nodes. `nodes`/`coefs` describe d F / d u_node.
struct FaceFlux {
    value: f64,
    nodes: Vec<usize>,
    coefs: Vec<f64>,
}

/// Flux through the r-face between nodes (i, j) and (i+1, j):
/// `F = cosh^2(r_f) u_r / W`, with `u_r` the across-face difference and the
/// transverse `u_z` averaged from the two node columns.
fn face_flux_r(dom: &GridDomain, u: &[f64], i: usize, j: usize, with_jac: bool) -> FaceFlux {
    let nr = dom.nr;
    let hr = dom.hr();
    let rf = dom.r_at(i) + 0.5 * hr;
    let c2 = rf.cosh().powi(2);
    let base0 = j * nr + i;
    let base1 = j * nr + i + 1;
    let g = (u[base1] - u[base0]) / hr;
    let st0 = dom.dz_stencil(i, j);
    let st1 = dom.dz_stencil(i + 1, j);
    let q = 0.5 * (eval_stencil(u, base0, st0) + eval_stencil(u, base1, st1));
    let w = (1.0 + c2 * (g * g + q * q)).sqrt();
    let value = c2 * g / w;
    let mut nodes = Vec::new();
    let mut coefs = Vec::new();
    if with_jac {
        let w3 = w * w * w;
        let df_dg = c2 * (1.0 + c2 * q * q) / w3;
        let df_dq = -c2 * c2 * g * q / w3;
        push_term(&mut nodes, &mut coefs, base1, df_dg / hr);
        push_term(&mut nodes, &mut coefs, base0, -df_dg / hr);
        for (base, st) in [(base0, st0), (base1, st1)] {
            if let Some(s) = st {
                for &(off, c) in s.terms() {
                    push_term(
                        &mut nodes,
                        &mut coefs,
                        (base as isize + off) as usize,
                        df_dq * 0.5 * c,
                    );
                }
            }
        }
    }
    FaceFlux {
        value,
        nodes,
        coefs,
    }
}

/// Flux through the z-face between nodes (i, j) and (i, j+1).
fn face_flux_z(dom: &GridDomain, u: &[f64], i: usize, j: usize, with_jac: bool) -> FaceFlux {
    let nr = dom.nr;
    let hz = dom.hz();
    let c2 = dom.r_at(i).cosh().powi(2);
    let base0 = j * nr + i;
    let base1 = (j + 1) * nr + i;
    let g = (u[base1] - u[base0]) / hz;
    let st0 = dom.dr_stencil(i, j);
    let st1 = dom.dr_stencil(i, j + 1);
    let q = 0.5 * (eval_stencil(u, base0, st0) + eval_stencil(u, base1, st1));
    let w = (1.0 + c2 * (g * g + q * q)).sqrt();
    let value = c2 * g / w;
    let mut nodes = Vec::new();
    let mut coefs = Vec::new();
    if with_jac {
        let w3 = w * w * w;
        let df_dg = c2 * (1.0 + c2 * q * q) / w3;
        let df_dq = -c2 * c2 * g * q / w3;
        push_term(&mut nodes, &mut coefs, base1, df_dg / hz);
        push_term(&mut nodes, &mut coefs, base0, -df_dg / hz);
        for (base, st) in [(base0, st0), (base1, st1)] {
            if let Some(s) = st {
                for &(off, c) in s.terms() {
                    push_term(
                        &mut nodes,
                        &mut coefs,
                        (base as isize + off) as usize,
                        df_dq * 0.5 * c,
                    );
                }
            }
        }
    }
    FaceFlux {
        value,
        nodes,
        coefs,
    }
}

fn push_term(nodes: &mut Vec<usize>, coefs: &mut Vec<f64>, node: usize, c: f64) {
    if let Some(k) = nodes.iter().position(|&n| n == node) {
        coefs[k] += c;
    } else {
        nodes.push(node);
        coefs.push(c);
    }
}

/// Conservative residual of the CMC equation at every interior node:
/// `(Fe - Fw)/hr + (Fn - Fs)/hz + 2 H0 cosh(r)` per unit area.
pub fn residual(dom: &GridDomain, u: &[f64], h0: f64) -> Vec<f64> {
    let (hr, hz) = (dom.hr(), dom.hz());
    dom.interior_nodes()
        .iter()
        .map(|&(i, j)| {
            let fe = face_flux_r(dom, u, i, j, false).value;
            let fw = face_flux_r(dom, u, i - 1, j, false).value;
            let fn_ = face_flux_z(dom, u, i, j, false).value;
            let fs = face_flux_z(dom, u, i, j - 1, false).value;
            (fe - fw) / hr + (fn_ - fs) / hz + 2.0 * h0 * dom.r_at(i).cosh()
        })
        .collect()
}

/// Residual of the expanded quasilinear form of the CMC equation, as an
/// independent cross-check of the conservative stencil. Evaluated with
/// central differences at interior nodes whose full 9-point stencil is in
/// the domain; NaN elsewhere. The two forms are related by the positive
/// factor `cosh^2(r) (2 + cosh^2 r |grad u|^2) / W^3`.
pub fn residual_expanded(dom: &GridDomain, u: &[f64], h0: f64) -> Vec<f64> {
    let (hr, hz) = (dom.hr(), dom.hz());
    let nr = dom.nr;
    dom.interior_nodes()
        .iter()
        .map(|&(i, j)| {
            let full = [
                (i - 1, j - 1),
                (i, j - 1),
                (i + 1, j - 1),
                (i - 1, j),
                (i + 1, j),
                (i - 1, j + 1),
                (i, j + 1),
                (i + 1, j + 1),
            ]
            .iter()
            .all(|&(a, b)| dom.in_domain(a, b));
            if !full {
                return f64::NAN;
            }
            let id = |a: usize, b: usize| b * nr + a;
            let c = dom.r_at(i).cosh();
            let c2 = c * c;
            let ur = (u[id(i + 1, j)] - u[id(i - 1, j)]) / (2.0 * hr);
            let uz = (u[id(i, j + 1)] - u[id(i, j - 1)]) / (2.0 * hz);
            let urr = (u[id(i + 1, j)] - 2.0 * u[id(i, j)] + u[id(i - 1, j)]) / (hr * hr);
            let uzz = (u[id(i, j + 1)] - 2.0 * u[id(i, j)] + u[id(i, j - 1)]) / (hz * hz);
            let urz = (u[id(i + 1, j + 1)] - u[id(i + 1, j - 1)] - u[id(i - 1, j + 1)]
                + u[id(i - 1, j - 1)])
                / (4.0 * hr * hz);
            let grad2 = ur * ur + uz * uz;
            let denom = 2.0 + c2 * grad2;
            let w2 = 1.0 + c2 * grad2;
            ((1.0 + c2 * uz * uz) * urr - 2.0 * c2 * ur * uz * urz + (1.0 + c2 * ur * ur) * uzz)
                / denom
                + dom.r_at(i).tanh() * ur
                + 2.0 * h0 * w2.powf(1.5) / (c * denom)
        })
        .collect()
}

/// Assemble the Newton matrix (band storage) for the interior unknowns.
fn jacobian(dom: &GridDomain, u: &[f64], band: &mut BandMatrix) {
    let (hr, hz) = (dom.hr(), dom.hz());
    for (row, &(i, j)) in dom.interior_nodes().iter().enumerate() {
        let faces = [
            (face_flux_r(dom, u, i, j, true), 1.0 / hr),
            (face_flux_r(dom, u, i - 1, j, true), -1.0 / hr),
            (face_flux_z(dom, u, i, j, true), 1.0 / hz),
            (face_flux_z(dom, u, i, j - 1, true), -1.0 / hz),
        ];
        for (flux, sign) in faces {
            for (node, coef) in flux.nodes.iter().zip(&flux.coefs) {
                let (ni, nj) = (node % dom.nr, node / dom.nr);
                if let Some(col) = dom.unknown(ni, nj) {
                    band.add(row, col, sign * coef);
                }
            }
        }
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Band half-width of the Newton matrix under row-major unknown numbering.
fn bandwidth(dom: &GridDomain) -> usize {
    let mut bw = 1usize;
    for (row, &(i, j)) in dom.interior_nodes().iter().enumerate() {
        for dj in -2isize..=2 {
            for di in -2isize..=2 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 0 || nj < 0 || ni >= dom.nr as isize || nj >= dom.nz as isize {
                    continue;
                }
                if let Some(col) = dom.unknown(ni as usize, nj as usize) {
                    bw = bw.max(row.abs_diff(col));
                }
            }
        }
    }
    bw
}

fn newton(
    dom: &GridDomain,
    bc: &BoundaryData,
    h0: f64,
    tol: f64,
    max_iter: usize,
    initial: Option<&Vec<f64>>,
) -> Result<GridSolution, SolveError> {
    let mut u = initial_vector(dom, bc, initial);
    let n = dom.num_unknowns();
    let bw = bandwidth(dom);
    let mut res = residual(dom, &u, h0);
    let mut rnorm = max_norm(&res);
    let mut iterations = 0usize;
    while rnorm > tol {
        if iterations >= max_iter {
            return Err(SolveError::NonConvergence {
                last_residual: rnorm,
                iterations,
                stages: vec![h0],
            });
        }
        let mut band = BandMatrix::zeros(n, bw, bw);
        jacobian(dom, &u, &mut band);
        let piv = band.factor().map_err(|_| SolveError::Singular)?;
        let mut step: Vec<f64> = res.iter().map(|r| -r).collect();
        band.solve(&piv, &mut step);
        // damped line search on the residual max-norm
        let mut alpha = 1.0f64;
        let mut accepted = false;
        while alpha >= 1.0 / 1024.0 {
            let mut trial = u.clone();
            for (k, &(i, j)) in dom.interior_nodes().iter().enumerate() {
                trial[j * dom.nr + i] += alpha * step[k];
            }
            let trial_res = residual(dom, &trial, h0);
            let trial_norm = max_norm(&trial_res);
            if trial_norm < (1.0 - 1e-4 * alpha) * rnorm || trial_norm <= tol {
                u = trial;
                res = trial_res;
                rnorm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(SolveError::NonConvergence {
                last_residual: rnorm,
                iterations,
                stages: vec![h0],
            });
        }
    }
    Ok(GridSolution {
        u,
        h0,
        residual_norm: rnorm,
        iterations,
    })
}

/// Solve the Dirichlet problem with damped Newton iteration.
///
/// If the direct solve stalls, restarts with continuation in `H0` from the
/// minimal-surface equation in stages of at most 0.25, halving the stage on
/// failure down to 1/64.
pub fn solve_dirichlet(
    dom: &GridDomain,
    bc: &BoundaryData,
    h0: f64,
    opts: &SolveOpts,
) -> Result<GridSolution, SolveError> {
    match newton(dom, bc, h0, opts.tol, opts.max_iter, opts.initial.as_ref()) {
        Ok(sol) => Ok(sol),
        Err(SolveError::Invalid(e)) => Err(SolveError::Invalid(e)),
        Err(first_err) => {
            if h0 == 0.0 {
                return Err(first_err);
            }
            // continuation from the minimal equation
            let mut stages = vec![h0];
            let mut current = 0.0f64;
            let mut step = 0.25f64;
            let mut carry: Option<Vec<f64>> = None;
            let mut total_iters = 0usize;
            let dir = if h0 >= 0.0 { 1.0 } else { -1.0 };
            while (current - h0).abs() > 1e-15 {
                let next = if (h0 - current).abs() <= step {
                    h0
                } else {
                    current + dir * step
                };
                stages.push(next);
                match newton(dom, bc, next, opts.tol, opts.max_iter, carry.as_ref()) {
                    Ok(sol) => {
                        total_iters += sol.iterations;
                        carry = Some(sol.u.clone());
                        current = next;
                        if (current - h0).abs() <= 1e-15 {
                            return Ok(GridSolution {
                                iterations: total_iters,
                                ..sol
                            });
                        }
                    }
                    Err(_) => {
                        step *= 0.5;
                        if step < 1.0 / 64.0 {
                            return Err(match first_err {
                                SolveError::NonConvergence {
                                    last_residual,
                                    iterations,
                                    ..
                                } => SolveError::NonConvergence {
                                    last_residual,
                                    iterations,
                                    stages,
                                },
                                e => e,
                            });
                        }
                    }
                }
            }
            unreachable!("continuation loop exits by return");
        }
    }
}

/// Unit normal field of the graph of `u` per the graph normal formula
/// `N = (-d_s + cosh^2 r grad u) / (cosh r W)`; one-sided differences next
/// to the boundary. None at exterior nodes.
pub fn normal_field(dom: &GridDomain, u: &[f64]) -> Vec<Option<TangentVec>> {
    let mut out = vec![None; dom.nr * dom.nz];
    for j in 0..dom.nz {
        for i in 0..dom.nr {
            if !dom.in_domain(i, j) {
                continue;
            }
            let base = j * dom.nr + i;
            let ur = eval_stencil(u, base, dom.dr_stencil(i, j));
            let uz = eval_stencil(u, base, dom.dz_stencil(i, j));
            let c = dom.r_at(i).cosh();
            let w = (1.0 + c * c * (ur * ur + uz * uz)).sqrt();
            out[base] = Some(TangentVec::new(-1.0 / (c * w), c * ur / w, c * uz / w));
        }
    }
    out
}

/// A-priori interior gradient bound for nonnegative solutions on a disk of
/// radius `R` about `(r_p, z_p)`:
/// `max(2, 32 M h0 / R) exp(6 M h0 + 4 M^2 (h0/R)^2)` with
/// `M = cosh(|r_p| + R) sqrt(4 + 2R + 2 H0 R)`, the smallest admissible
/// constant on the disk. `h0` is the solution value at the center.
pub fn gradient_bound(
    r_p: f64,
    _z_p: f64,
    radius: f64,
    h0_cmc: f64,
    h0_value: f64,
) -> Result<f64, SchemaError> {
    if !(radius > 0.0) {
        return Err(SchemaError::new(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    if h0_cmc < 0.0 || h0_value < 0.0 {
        return Err(SchemaError::new(
            "gradient bound needs H0 >= 0 and a nonnegative center value".to_string(),
        ));
    }
    let m = (r_p.abs() + radius).cosh() * (4.0 + 2.0 * radius + 2.0 * h0_cmc * radius).sqrt();
    Ok((2.0f64).max(32.0 * m * h0_value / radius)
        * (6.0 * m * h0_value + 4.0 * m * m * (h0_value / radius).powi(2)).exp())
}

/// Euclidean gradient magnitude of `u` at an interior node.
pub fn gradient_magnitude(dom: &GridDomain, u: &[f64], i: usize, j: usize) -> f64 {
    let base = j * dom.nr + i;
    let ur = eval_stencil(u, base, dom.dr_stencil(i, j));
    let uz = eval_stencil(u, base, dom.dz_stencil(i, j));
    (ur * ur + uz * uz).sqrt()
}

/// Discrete flux-balance identity: sum of boundary face fluxes plus the
/// interior source integral. With the conservative scheme this telescopes
/// to the sum of cell residuals, so it is bounded by `N * tol * cell_area`
/// on converged solutions.
pub fn flux_identity_residual(dom: &GridDomain, u: &[f64], h0: f64) -> f64 {
    boundary_flux_integral(dom, u) + source_integral(dom, h0)
}

/// Boundary flux decomposed by boundary piece: the bottom curve at
/// `z = z_min`, the top curve at `z = z_max`, and everything else (the
/// lateral boundary, including the horizontal steps of a masked staircase).
/// At a reflection-symmetry height the corresponding end piece vanishes
/// with the normal derivative of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideFluxes {
    pub lateral: f64,
    pub bottom: f64,
    pub top: f64,
}

impl SideFluxes {
    pub fn total(&self) -> f64 {
        self.lateral + self.bottom + self.top
    }
}

/// Sum of outward face fluxes `(cosh^2 r grad u / W, eta)` over the exposed
/// faces of the interior cell union (the discrete version of the boundary
/// integral in the flux-balance identity).
pub fn boundary_flux_integral(dom: &GridDomain, u: &[f64]) -> f64 {
    boundary_flux_by_side(dom, u).total()
}

/// Boundary flux integral split by boundary piece.
pub fn boundary_flux_by_side(dom: &GridDomain, u: &[f64]) -> SideFluxes {
    let (hr, hz) = (dom.hr(), dom.hz());
    let mut sides = SideFluxes {
        lateral: 0.0,
        bottom: 0.0,
        top: 0.0,
    };
    for &(i, j) in dom.interior_nodes() {
        // outward = away from the interior node, across faces whose far node
        // is a boundary node
        if dom.class(i + 1, j) == NodeClass::Boundary {
            sides.lateral += face_flux_r(dom, u, i, j, false).value * hz;
        }
        if dom.class(i - 1, j) == NodeClass::Boundary {
            sides.lateral -= face_flux_r(dom, u, i - 1, j, false).value * hz;
        }
        if dom.class(i, j + 1) == NodeClass::Boundary {
            let flux = face_flux_z(dom, u, i, j, false).value * hr;
            if j + 1 == dom.nz - 1 {
                sides.top += flux;
            } else {
                sides.lateral += flux;
            }
        }
        if dom.class(i, j - 1) == NodeClass::Boundary {
            let flux = face_flux_z(dom, u, i, j - 1, false).value * hr;
            if j == 1 {
                sides.bottom -= flux;
            } else {
                sides.lateral -= flux;
            }
        }
    }
    sides
}

/// `2 H0 \iint cosh r dr dz` over the interior cells.
pub fn source_integral(dom: &GridDomain, h0: f64) -> f64 {
    let cell = dom.hr() * dom.hz();
    dom.interior_nodes()
        .iter()
        .map(|&(i, _)| 2.0 * h0 * dom.r_at(i).cosh() * cell)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect_dom(n: usize) -> GridDomain {
        GridDomain::rect(-0.6, 0.6, 0.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn constant_solves_minimal_equation_exactly() {
        let dom = rect_dom(17);
        let u = initial_vector(&dom, &BoundaryData::constant(&dom, 3.25), None);
        let mut u = u;
        for &(i, j) in dom.interior_nodes() {
            u[j * dom.nr + i] = 3.25;
        }
        let res = residual(&dom, &u, 0.0);
        assert!(
            res.iter().all(|&r| r == 0.0),
            "constant residual not exactly zero"
        );
    }

    #[test]
    fn constant_boundary_one_newton_step() {
        let dom = rect_dom(17);
        let bc = BoundaryData::constant(&dom, 1.5);
        let sol = solve_dirichlet(&dom, &bc, 0.0, &SolveOpts::default()).unwrap();
        for &(i, j) in dom.interior_nodes() {
            assert!((sol.u[j * dom.nr + i] - 1.5).abs() < 1e-12);
        }
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn expanded_residual_linear_in_r_matches_symbolic_value() {
        // u = a r + b, H0 = 0: all second differences vanish identically and
        // the expanded form reduces to tanh(r) * a
        let dom = rect_dom(9);
        let a = 0.73;
        let mut u = vec![f64::NAN; dom.nr * dom.nz];
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                u[j * dom.nr + i] = a * dom.r_at(i) + 0.2;
            }
        }
        let res = residual_expanded(&dom, &u, 0.0);
        for (&(i, _j), got) in dom.interior_nodes().iter().zip(&res) {
            if got.is_nan() {
                continue;
            }
            let expect = dom.r_at(i).tanh() * a;
            assert!(
                (got - expect).abs() < 1e-10,
                "expanded residual {got} vs analytic {expect}"
            );
        }
    }

    #[test]
    fn conservative_and_expanded_forms_agree_on_smooth_data() {
        // both discretizations are consistent with the same equation; their
        // pointwise difference (after the algebraic factor) shrinks at O(h^2)
        let err_of = |n: usize| {
            let dom = rect_dom(n);
            let mut u = vec![f64::NAN; dom.nr * dom.nz];
            for j in 0..dom.nz {
                for i in 0..dom.nr {
                    let (r, z) = (dom.r_at(i), dom.z_at(j));
                    u[j * dom.nr + i] = 0.3 * (r * 1.3).sin() * (z * 0.9).cos() + 0.1 * r;
                }
            }
            let cons = residual(&dom, &u, 0.4);
            let expd = residual_expanded(&dom, &u, 0.4);
            let mut worst = 0.0f64;
            for ((&(i, j), c), e) in dom.interior_nodes().iter().zip(&cons).zip(&expd) {
                if e.is_nan() {
                    continue;
                }
                let base = j * dom.nr + i;
                let ur = eval_stencil(&u, base, dom.dr_stencil(i, j));
                let uz = eval_stencil(&u, base, dom.dz_stencil(i, j));
                let c2 = dom.r_at(i).cosh().powi(2);
                let w2 = 1.0 + c2 * (ur * ur + uz * uz);
                let factor = c2 * (2.0 + c2 * (ur * ur + uz * uz)) / w2.powf(1.5);
                worst = worst.max((c - e * factor).abs());
            }
            worst
        };
        let (e1, e2) = (err_of(17), err_of(33));
        assert!(e2 < e1 && e1 / e2 > 3.0, "forms diverge: {e1} -> {e2}");
    }

    #[test]
    fn f0_residual_second_order() {
        // u = f0 of D_tau solves the equation with H0 = H; the conservative
        // residual at interior nodes must shrink at O(h^2)
        let prof_err = |n: usize| -> f64 {
            let dom = GridDomain::rect(-0.2, 0.2, 0.15, 1.1, n, n).unwrap();
            let profile = f0_profile(&dom, 1.0, 0.2).unwrap();
            let mut u = vec![f64::NAN; dom.nr * dom.nz];
            for j in 0..dom.nz {
                for i in 0..dom.nr {
                    u[j * dom.nr + i] =
                        profile.graph_function_f0(dom.r_at(i), dom.z_at(j)).unwrap();
                }
            }
            max_norm(&residual(&dom, &u, 1.0))
        };
        let (e1, e2) = (prof_err(33), prof_err(65));
        let ratio = e1 / e2;
        assert!(
            (3.0..5.5).contains(&ratio),
            "truncation order off: {e1} -> {e2} (ratio {ratio})"
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let dom = GridDomain::rect(-0.4, 0.5, 0.0, 0.8, 7, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bc = BoundaryData::from_samples(
            &dom,
            (0..dom.boundary_nodes().len())
                .map(|_| rng.gen_range(-0.3..0.3))
                .collect(),
        )
        .unwrap();
        let mut u = initial_vector(&dom, &bc, None);
        for &(i, j) in dom.interior_nodes() {
            u[j * dom.nr + i] = rng.gen_range(-0.3..0.3);
        }
        let n = dom.num_unknowns();
        let bw = bandwidth(&dom);
        let mut band = BandMatrix::zeros(n, bw, bw);
        jacobian(&dom, &u, &mut band);
        let h0 = 0.7;
        let r0 = residual(&dom, &u, h0);
        let eps = 1e-7;
        for (col, &(i, j)) in dom.interior_nodes().iter().enumerate() {
            let mut up = u.clone();
            up[j * dom.nr + i] += eps;
            let r1 = residual(&dom, &up, h0);
            for row in 0..n {
                let fd = (r1[row] - r0[row]) / eps;
                let an = if row.abs_diff(col) <= bw {
                    band.get(row, col)
                } else {
                    0.0
                };
                let scale = fd.abs().max(an.abs()).max(1.0);
                assert!(
                    (fd - an).abs() / scale < 1e-5,
                    "J[{row},{col}] analytic {an} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn solver_reproduces_f0_and_is_initialization_independent() {
        let dom = GridDomain::delaunay_shadow(-0.8, 0.8, 0.0, 1.7, 33, 33, 1.0, 0.2, 0.8).unwrap();
        let profile = f0_profile(&dom, 1.0, 0.2).unwrap();
        let bc = BoundaryData::delaunay_f0(&dom, 1.0, 0.2).unwrap();
        let sol = solve_dirichlet(&dom, &bc, 1.0, &SolveOpts::default()).unwrap();
        assert!(sol.residual_norm <= 1e-10);
        let mut worst = 0.0f64;
        for &(i, j) in dom.interior_nodes() {
            let f0 = profile
                .graph_function_f0(dom.r_at(i), dom.z_at(j).abs())
                .unwrap();
            worst = worst.max((sol.u[j * dom.nr + i] - f0).abs());
        }
        assert!(worst < 2e-2, "solution far from f0: {worst}");

        // second initialization: f0 plus noise
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut init = vec![f64::NAN; dom.nr * dom.nz];
        for &(i, j) in dom.interior_nodes() {
            let f0 = profile
                .graph_function_f0(dom.r_at(i), dom.z_at(j).abs())
                .unwrap();
            init[j * dom.nr + i] = f0 + rng.gen_range(-0.1..0.1);
        }
        let opts2 = SolveOpts {
            initial: Some(init),
            ..SolveOpts::default()
        };
        let sol2 = solve_dirichlet(&dom, &bc, 1.0, &opts2).unwrap();
        let mut diff = 0.0f64;
        for &(i, j) in dom.interior_nodes() {
            diff = diff.max((sol.u[j * dom.nr + i] - sol2.u[j * dom.nr + i]).abs());
        }
        assert!(diff < 1e-8, "initialization dependence: {diff}");
    }

    #[test]
    fn normal_field_unit_norm_and_constant_case() {
        let dom = rect_dom(15);
        let mut u = vec![f64::NAN; dom.nr * dom.nz];
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                u[j * dom.nr + i] = 2.0;
            }
        }
        let field = normal_field(&dom, &u);
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                let n = field[j * dom.nr + i].unwrap();
                let c = dom.r_at(i).cosh();
                assert!((n.a_s + 1.0 / c).abs() < 1e-13);
                // the one-sided border stencils cancel only to rounding
                assert!(n.a_r.abs() < 1e-13);
                assert!(n.a_z.abs() < 1e-13);
                let p = crate::geom::PointH2xR::new(0.0, dom.r_at(i), dom.z_at(j));
                assert!((crate::geom::metric_inner(p, n, n) - 1.0).abs() < 1e-10);
            }
        }
        // random smooth u: unit norm within 1e-10
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                u[j * dom.nr + i] = rng.gen_range(-0.5..0.5);
            }
        }
        let field = normal_field(&dom, &u);
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                let n = field[j * dom.nr + i].unwrap();
                let p = crate::geom::PointH2xR::new(0.0, dom.r_at(i), dom.z_at(j));
                assert!((crate::geom::metric_inner(p, n, n) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_bound_reference_values() {
        assert_eq!(gradient_bound(0.3, 0.0, 1.0, 1.0, 0.0).unwrap(), 2.0);
        // r_p=0, R=1, H0=1, h0=0.1: M = cosh(1) sqrt(8), frozen bound
        let b = gradient_bound(0.0, 0.0, 1.0, 1.0, 0.1).unwrap();
        assert!((b - 410.46817382184776).abs() / b < 1e-12);
        assert!(gradient_bound(0.0, 0.0, 0.0, 1.0, 0.1).is_err());
        assert!(gradient_bound(0.0, 0.0, -1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn flux_identity_telescopes_to_residual_sum() {
        let dom = GridDomain::delaunay_shadow(-0.8, 0.8, 0.0, 1.7, 21, 25, 1.0, 0.2, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut u = vec![f64::NAN; dom.nr * dom.nz];
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                if dom.in_domain(i, j) {
                    u[j * dom.nr + i] = rng.gen_range(-0.4..0.4);
                }
            }
        }
        let h0 = 0.8;
        let lhs = boundary_flux_integral(&dom, &u) + source_integral(&dom, h0);
        let cell = dom.hr() * dom.hz();
        let rhs: f64 = residual(&dom, &u, h0).iter().map(|r| r * cell).sum();
        assert!(
            (lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs().max(rhs.abs())),
            "telescoping broken: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn flux_identity_zero_for_trivial_solution() {
        let dom = rect_dom(13);
        let mut u = vec![f64::NAN; dom.nr * dom.nz];
        for j in 0..dom.nz {
            for i in 0..dom.nr {
                u[j * dom.nr + i] = 0.7;
            }
        }
        assert_eq!(flux_identity_residual(&dom, &u, 0.0), 0.0);
    }

    #[test]
    fn comparison_principle_small_grid() {
        let dom = rect_dom(11);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let nb = dom.boundary_nodes().len();
        let lo: Vec<f64> = (0..nb).map(|_| rng.gen_range(0.0..0.3)).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..0.3)).collect();
        let h0 = 0.5;
        let s1 = solve_dirichlet(
            &dom,
            &BoundaryData::from_samples(&dom, lo).unwrap(),
            h0,
            &SolveOpts::default(),
        )
        .unwrap();
        let s2 = solve_dirichlet(
            &dom,
            &BoundaryData::from_samples(&dom, hi).unwrap(),
            h0,
            &SolveOpts::default(),
        )
        .unwrap();
        for &(i, j) in dom.interior_nodes() {
            assert!(s1.u[j * dom.nr + i] <= s2.u[j * dom.nr + i] + 1e-9);
        }
    }

    #[test]
    fn starved_iteration_budget_reports_diagnostics() {
        let dom = rect_dom(15);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let bc = BoundaryData::from_samples(
            &dom,
            (0..dom.boundary_nodes().len())
                .map(|_| rng.gen_range(0.0..0.5))
                .collect(),
        )
        .unwrap();
        let opts = SolveOpts {
            max_iter: 0,
            ..SolveOpts::default()
        };
        match solve_dirichlet(&dom, &bc, 1.0, &opts) {
            Err(SolveError::NonConvergence {
                last_residual,
                stages,
                ..
            }) => {
                assert!(last_residual > 0.0);
                // continuation stages were attempted and recorded
                assert!(stages.contains(&1.0), "stages: {stages:?}");
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn shadow_domain_construction_is_connected_and_masked() {
        let dom = GridDomain::delaunay_shadow(-0.9, 0.9, 0.0, 1.7, 41, 41, 1.0, 0.2, 0.8).unwrap();
        assert!(dom.num_unknowns() > 0);
        let profile = f0_profile(&dom, 1.0, 0.2).unwrap();
        for &(i, j) in dom.interior_nodes() {
            let rho = profile.rho_of_z(dom.z_at(j).abs()).unwrap();
            assert!(dom.r_at(i).abs() <= 0.8 * rho + 1e-12);
        }
        // degenerate interior rejected
        assert!(GridDomain::rect(0.0, 1.0, 0.0, 1.0, 2, 5).is_err());
    }
}
