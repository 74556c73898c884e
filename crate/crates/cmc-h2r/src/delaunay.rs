//! Rotationally invariant CMC surfaces (Delaunay unduloids) in H^2 x R.
//!
//! A surface of constant mean curvature `H > 1/2` invariant under rotation
//! about a vertical axis is determined by its profile: the distance `rho(t)`
//! from the axis and the height `z(t)`, parametrized by arc length, with
//! `sigma` the angle of the profile tangent against the horizontal. The
//! profile obeys
//!
//! ```text
//! rho' = cos(sigma),  z' = sin(sigma),  sigma' = 2H - coth(rho) sin(sigma)
//! ```
//!
//! and carries the first integral
//!
//! ```text
//! sinh(rho) sin(sigma) - 2H (cosh(rho) - 1) = tau .
//! ```
//!
//! The flux parameter `tau` ranges over `(0, 2H - sqrt(4H^2 - 1)]`; at the
//! upper endpoint the surface degenerates to the vertical cylinder of radius
//! `artanh(1/(2H))`. Heights strictly increase along the profile since
//! `sin(sigma) = (tau + 2H(cosh rho - 1))/sinh(rho) > 0` for `tau > 0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::geom::PointH2;
use crate::interp::MonotoneCubic;
use crate::io::SchemaError;

/// Tolerance on the first integral along integrated profiles.
pub const FIRST_INTEGRAL_TOL: f64 = 1e-8;

/// Default arc-length step of the RK4 integrator.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Mean curvature and flux parameter of a Delaunay surface.
///
/// Invariants: `H > 1/2` and `0 < tau <= tau_max(H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayParams {
    h: f64,
    tau: f64,
}

impl DelaunayParams {
    pub fn new(h: f64, tau: f64) -> Result<Self, SchemaError> {
        if !(h > 0.5) || !h.is_finite() {
            return Err(SchemaError::new(format!(
                "mean curvature must satisfy H > 1/2 (cylindrically bounded), got {h}"
            )));
        }
        let tmax = 2.0 * h - (4.0 * h * h - 1.0).sqrt();
        if !(tau > 0.0) || tau > tmax {
            return Err(SchemaError::new(format!(
                "flux parameter must satisfy 0 < tau <= {tmax}, got {tau}"
            )));
        }
        Ok(Self { h, tau })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Whether these parameters give the degenerate cylinder branch.
    pub fn is_cylinder(&self) -> bool {
        self.tau == tau_max(self.h).unwrap()
    }
}

/// Largest admissible flux parameter `2H - sqrt(4H^2 - 1)` for a given mean
/// curvature; attained exactly by the vertical cylinder.
pub fn tau_max(h: f64) -> Result<f64, SchemaError> {
    if !(h > 0.5) || !h.is_finite() {
        return Err(SchemaError::new(format!(
            "tau_max requires H > 1/2, got {h}"
        )));
    }
    Ok(2.0 * h - (4.0 * h * h - 1.0).sqrt())
}

/// `g(rho) = sinh(rho) - 2H (cosh(rho) - 1)`: the first integral evaluated
/// where the profile is vertical. Its two roots at level `tau` are the neck
/// and bulge radii.
fn g(h: f64, rho: f64) -> f64 {
    rho.sinh() - 2.0 * h * (rho.cosh() - 1.0)
}

/// Radius of the critical cylinder, `artanh(1/(2H))`, where `g` is maximal.
pub fn cylinder_radius(h: f64) -> f64 {
    (1.0 / (2.0 * h)).atanh()
}

/// Neck and bulge radii: the roots of `g(rho) = tau`, bracketing the
/// critical radius. Coincide exactly at `tau = tau_max(H)`.
pub fn neck_bulge_radii(params: &DelaunayParams) -> (f64, f64) {
    let (h, tau) = (params.h, params.tau);
    let rho_star = cylinder_radius(h);
    if params.is_cylinder() {
        return (rho_star, rho_star);
    }
    let f = |rho: f64| g(h, rho) - tau;
    // the tau = 0 root is at tanh(rho/2) = 1/(2H), i.e. exactly 2 rho_star,
    // so [rho_star, 2 rho_star] brackets the bulge radius for every tau > 0
    let rho_min = bisect(f, f64::MIN_POSITIVE, rho_star);
    let rho_max = bisect(f, rho_star, 2.0 * rho_star);
    (rho_min, rho_max)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(
        fa * fb <= 0.0,
        "root not bracketed: f({a})={fa}, f({b})={fb}"
    );
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Bulge-to-bulge height period, or the cylinder marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Period {
    /// Constant-radius solution; no bulge-to-bulge period.
    Cylinder,
    Value(f64),
}

impl Period {
    pub fn value(&self) -> Option<f64> {
        match self {
            Period::Cylinder => None,
            Period::Value(p) => Some(*p),
        }
    }
}

/// Height period of the unduloid by quadrature:
/// `P = 2 \int_{rho_min}^{rho_max} tan(sigma(rho)) d rho` with
/// `sin(sigma(rho)) = (tau + 2H(cosh rho - 1))/sinh(rho)`.
///
/// The integrand has inverse-square-root singularities at both radii; the
/// substitution `rho = rho_min + (rho_max - rho_min) sin^2(theta/2)` removes
/// them and Gauss–Legendre in `theta` converges spectrally.
pub fn period(params: &DelaunayParams) -> Period {
    if params.is_cylinder() {
        return Period::Cylinder;
    }
    let (h, tau) = (params.h, params.tau);
    let (rho_min, rho_max) = neck_bulge_radii(params);
    let w = rho_max - rho_min;
    let mut acc = 0.0;
    let (nodes, weights) = gauss_legendre_128();
    for (x, wt) in nodes.iter().zip(weights.iter()) {
        let theta = 0.5 * (x + 1.0) * PI;
        let half = (0.5 * theta).sin();
        let rho = rho_min + w * half * half;
        let num = tau + 2.0 * h * (rho.cosh() - 1.0); // sinh(rho) sin(sigma)
        let s = rho.sinh() + num; // sinh rho + tau + 2H(cosh rho - 1)
        let gm = g(h, rho) - tau;
        let big_g = gm / ((rho - rho_min) * (rho_max - rho));
        acc += wt * num / (big_g * s).sqrt();
    }
    Period::Value(acc * PI / 2.0 * 2.0)
}

/// One arc-length sample of a rotational profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    /// Arc length from the starting bulge.
    pub t: f64,
    /// Height.
    pub z: f64,
    /// Distance from the axis.
    pub rho: f64,
    /// Tangent angle in `(0, pi)`; `pi/2` where the profile is vertical.
    pub sigma: f64,
}

/// Arc-length samples of a rotational CMC profile plus its parameters.
///
/// Profiles start at a bulge (`rho = rho_max`, `sigma = pi/2`, `z = 0`) and
/// cover `z in [0, z_span]` with strictly increasing heights.
#[derive(Debug, Clone)]
pub struct DelaunayProfile {
    params: DelaunayParams,
    axis: PointH2,
    samples: Vec<ProfileSample>,
    rho_min: f64,
    rho_max: f64,
    period: Period,
    rho_of_z: MonotoneCubic,
}

impl DelaunayProfile {
    /// Rebuild a profile from stored samples (deserialization path),
    /// enforcing every profile invariant: strictly increasing `t` and `z`,
    /// `sin(sigma) > 0`, radii inside the neck/bulge band, and the first
    /// integral within [`FIRST_INTEGRAL_TOL`] at every sample.
    pub fn from_samples(
        params: DelaunayParams,
        axis: PointH2,
        samples: Vec<ProfileSample>,
    ) -> Result<Self, SchemaError> {
        if samples.len() < 2 {
            return Err(SchemaError::new(format!(
                "profile needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let (h, tau) = (params.h, params.tau);
        let (rho_min, rho_max) = neck_bulge_radii(&params);
        for (k, s) in samples.iter().enumerate() {
            for v in [s.t, s.z, s.rho, s.sigma] {
                if !v.is_finite() {
                    return Err(SchemaError::new(format!("non-finite sample {k}")));
                }
            }
            if !(s.sigma.sin() > 0.0) {
                return Err(SchemaError::new(format!(
                    "sample {k}: sin(sigma) must be positive, got sigma = {}",
                    s.sigma
                )));
            }
            if s.rho < rho_min - 1e-6 || s.rho > rho_max + 1e-6 {
                return Err(SchemaError::new(format!(
                    "sample {k}: rho = {} outside [{rho_min}, {rho_max}]",
                    s.rho
                )));
            }
            let drift = (s.rho.sinh() * s.sigma.sin() - 2.0 * h * (s.rho.cosh() - 1.0) - tau).abs();
            if drift > FIRST_INTEGRAL_TOL {
                return Err(SchemaError::new(format!(
                    "sample {k}: first-integral residual {drift} exceeds {FIRST_INTEGRAL_TOL}"
                )));
            }
        }
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[0].z < w[1].z) || !(w[0].t < w[1].t) {
                return Err(SchemaError::new(format!(
                    "samples {k},{}: t and z must be strictly increasing",
                    k + 1
                )));
            }
        }
        let (zs, rhos): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| (s.z, s.rho)).unzip();
        Ok(Self {
            params,
            axis,
            samples,
            rho_min,
            rho_max,
            period: period(&params),
            rho_of_z: MonotoneCubic::new(zs, rhos),
        })
    }

    pub fn params(&self) -> &DelaunayParams {
        &self.params
    }

    pub fn axis(&self) -> PointH2 {
        self.axis
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn z_min(&self) -> f64 {
        self.samples.first().unwrap().z
    }

    pub fn z_max(&self) -> f64 {
        self.samples.last().unwrap().z
    }

    /// Radius at height `z`, by monotone cubic interpolation of the samples.
    pub fn rho_of_z(&self, z: f64) -> Result<f64, SchemaError> {
        self.check_z(z)?;
        Ok(self.rho_of_z.eval(z))
    }

    /// Derivative `d rho / d z` at height `z`.
    pub fn drho_dz(&self, z: f64) -> Result<f64, SchemaError> {
        self.check_z(z)?;
        Ok(self.rho_of_z.eval_deriv(z))
    }

    /// `sin(sigma)` at height `z`, from the first integral.
    pub fn sin_sigma_of_z(&self, z: f64) -> Result<f64, SchemaError> {
        let rho = self.rho_of_z(z)?;
        let h = self.params.h;
        Ok(((self.params.tau + 2.0 * h * (rho.cosh() - 1.0)) / rho.sinh()).min(1.0))
    }

    fn check_z(&self, z: f64) -> Result<(), SchemaError> {
        if !z.is_finite() || z < self.z_min() - 1e-12 || z > self.z_max() + 1e-12 {
            return Err(SchemaError::new(format!(
                "height {z} outside profile range [{}, {}]",
                self.z_min(),
                self.z_max()
            )));
        }
        Ok(())
    }

    /// Largest deviation of the first integral from `tau` over all samples.
    pub fn first_integral_residual(&self) -> f64 {
        let (h, tau) = (self.params.h, self.params.tau);
        self.samples
            .iter()
            .map(|s| (s.rho.sinh() * s.sigma.sin() - 2.0 * h * (s.rho.cosh() - 1.0) - tau).abs())
            .fold(0.0, f64::max)
    }

    /// Bulge-to-bulge period measured from the integrated samples: twice the
    /// mean height gap between consecutive interior radius extrema
    /// (quadratically refined).
    pub fn measured_period(&self) -> Option<f64> {
        let mut extrema = Vec::new();
        for i in 1..self.samples.len() - 1 {
            let (a, b, c) = (
                self.samples[i - 1].rho,
                self.samples[i].rho,
                self.samples[i + 1].rho,
            );
            if (b >= a && b > c) || (b <= a && b < c) {
                // parabola through the three points in (z, rho)
                let (za, zb, zc) = (
                    self.samples[i - 1].z,
                    self.samples[i].z,
                    self.samples[i + 1].z,
                );
                let denom = (a - b) * (zc - zb) + (c - b) * (zb - za);
                let z_ext = if denom.abs() > 0.0 {
                    zb + 0.5 * ((a - b) * (zc - zb) * (zc - zb) - (c - b) * (zb - za) * (zb - za))
                        / denom
                } else {
                    zb
                };
                extrema.push(z_ext);
            }
        }
        if extrema.len() < 2 {
            return None;
        }
        let gaps: Vec<f64> = extrema.windows(2).map(|w| w[1] - w[0]).collect();
        Some(2.0 * gaps.iter().sum::<f64>() / gaps.len() as f64)
    }

    /// Horizontal Killing-graph function of the reflected half-surface over
    /// the shadow domain: `f0(r, z) = arcosh(cosh rho(z) / cosh r)`, defined
    /// for `|r| <= rho(z)`. Requires the axis at the origin `(0, 0)`.
    pub fn graph_function_f0(&self, r: f64, z: f64) -> Result<f64, SchemaError> {
        if self.axis.s != 0.0 || self.axis.r != 0.0 {
            return Err(SchemaError::new(
                "graph function requires the axis at (s, r) = (0, 0)".to_string(),
            ));
        }
        let rho = self.rho_of_z(z)?;
        if r.abs() > rho {
            return Err(SchemaError::new(format!(
                "point (r, z) = ({r}, {z}) outside the shadow domain |r| <= {rho}"
            )));
        }
        Ok((rho.cosh() / r.cosh()).max(1.0).acosh())
    }

    /// The shadow domain `{(r, z) : |r| <= rho(z)}` of the surface.
    pub fn shadow_domain(&self) -> ShadowDomain<'_> {
        ShadowDomain { profile: self }
    }
}

/// Projection to the `(r, z)` plane of the solid region bounded by a
/// rotational surface with axis at the origin.
#[derive(Debug, Clone, Copy)]
pub struct ShadowDomain<'a> {
    profile: &'a DelaunayProfile,
}

impl ShadowDomain<'_> {
    pub fn contains(&self, r: f64, z: f64) -> bool {
        match self.profile.rho_of_z(z) {
            Ok(rho) => r.abs() <= rho,
            Err(_) => false,
        }
    }

    /// Width `2 rho(z)` at height `z`.
    pub fn width_at(&self, z: f64) -> Result<f64, SchemaError> {
        Ok(2.0 * self.profile.rho_of_z(z)?)
    }

    /// Closed boundary polyline in the `(r, z)` plane: up the right branch
    /// `r = rho(z)`, back down the left branch `r = -rho(z)`.
    pub fn boundary(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.profile.samples.len());
        for s in &self.profile.samples {
            out.push((s.rho, s.z));
        }
        for s in self.profile.samples.iter().rev() {
            out.push((-s.rho, s.z));
        }
        out
    }
}

/// Integrate the rotational profile by classical RK4 with fixed arc-length
/// step, starting at a bulge, until the heights cover `[0, z_span]`.
///
/// The cylinder branch (`tau = tau_max`) is generated exactly rather than
/// integrated. A conservation monitor rejects the step if the first integral
/// drifts beyond [`FIRST_INTEGRAL_TOL`]; a guard rejects states with
/// `rho < rho_min / 2`.
pub fn integrate_profile(
    params: &DelaunayParams,
    axis: PointH2,
    z_span: f64,
    step: f64,
) -> Result<DelaunayProfile, SchemaError> {
    if !(z_span > 0.0) || !(z_span <= 1e4) {
        return Err(SchemaError::new(format!(
            "z_span must be in (0, 1e4], got {z_span}"
        )));
    }
    if !(step > 0.0) || !step.is_finite() || z_span / step > 5e7 {
        return Err(SchemaError::new(format!(
            "step must be positive and resolve z_span in at most 5e7 steps, got {step}"
        )));
    }
    let (h, tau) = (params.h, params.tau);
    let (rho_min, rho_max) = neck_bulge_radii(params);

    if params.is_cylinder() {
        let rho = cylinder_radius(h);
        let n = (z_span / step).ceil() as usize + 1;
        let samples: Vec<ProfileSample> = (0..=n)
            .map(|i| {
                let z = step * i as f64;
                ProfileSample {
                    t: z,
                    z,
                    rho,
                    sigma: FRAC_PI_2,
                }
            })
            .collect();
        let (zs, rhos): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| (s.z, s.rho)).unzip();
        return Ok(DelaunayProfile {
            params: *params,
            axis,
            samples,
            rho_min,
            rho_max,
            period: Period::Cylinder,
            rho_of_z: MonotoneCubic::new(zs, rhos),
        });
    }

    let deriv = |st: [f64; 3]| -> [f64; 3] {
        let [rho, _z, sigma] = st;
        let sin_s = sigma.sin();
        [
            sigma.cos(),
            sin_s,
            2.0 * h - (rho.cosh() / rho.sinh()) * sin_s,
        ]
    };

    let mut state = [rho_max, 0.0, FRAC_PI_2];
    let mut t = 0.0;
    let mut samples = vec![ProfileSample {
        t,
        z: 0.0,
        rho: rho_max,
        sigma: FRAC_PI_2,
    }];
    let max_steps = ((z_span / step) * 20.0).ceil() as usize + 16;
    while state[1] < z_span {
        if samples.len() > max_steps {
            return Err(SchemaError::new(
                "profile integration exceeded the step budget".to_string(),
            ));
        }
        let k1 = deriv(state);
        let s2 = add_scaled(state, k1, 0.5 * step);
        let k2 = deriv(s2);
        let s3 = add_scaled(state, k2, 0.5 * step);
        let k3 = deriv(s3);
        let s4 = add_scaled(state, k3, step);
        let k4 = deriv(s4);
        for i in 0..3 {
            state[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += step;
        let [rho, z, sigma] = state;
        if rho < 0.5 * rho_min {
            return Err(SchemaError::new(format!(
                "step rejected: rho = {rho} fell below rho_min/2 = {}",
                0.5 * rho_min
            )));
        }
        let drift = (rho.sinh() * sigma.sin() - 2.0 * h * (rho.cosh() - 1.0) - tau).abs();
        if drift > FIRST_INTEGRAL_TOL {
            return Err(SchemaError::new(format!(
                "step rejected: first-integral drift {drift} exceeds {FIRST_INTEGRAL_TOL}; \
                 reduce the step"
            )));
        }
        samples.push(ProfileSample { t, z, rho, sigma });
    }

    debug_assert!(samples.windows(2).all(|w| w[0].z < w[1].z));
    let (zs, rhos): (Vec<f64>, Vec<f64>) = samples.iter().map(|s| (s.z, s.rho)).unzip();
    Ok(DelaunayProfile {
        params: *params,
        axis,
        samples,
        rho_min,
        rho_max,
        period: period(params),
        rho_of_z: MonotoneCubic::new(zs, rhos),
    })
}

fn add_scaled(a: [f64; 3], b: [f64; 3], c: f64) -> [f64; 3] {
    [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]]
}

/// 128-point Gauss–Legendre rule on `[-1, 1]` (nodes, weights), generated by
/// Newton iteration on the Legendre polynomial.
fn gauss_legendre_128() -> (Vec<f64>, Vec<f64>) {
    let n = 128usize;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Tricomi initial guess
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent root-finding oracle: plain bisection on `g(rho) = tau`
    /// with 1e-10 brackets, no shared code with `neck_bulge_radii`.
    fn radii_oracle(h: f64, tau: f64) -> (f64, f64) {
        let g = |rho: f64| rho.sinh() - 2.0 * h * (rho.cosh() - 1.0) - tau;
        let rho_star = (1.0 / (2.0 * h)).atanh();
        let solve = |mut a: f64, mut b: f64| {
            while b - a > 1e-12 {
                let m = 0.5 * (a + b);
                if g(a) * g(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        };
        (solve(1e-15, rho_star), solve(rho_star, 4.0 * rho_star))
    }

    fn params(h: f64, tau: f64) -> DelaunayParams {
        DelaunayParams::new(h, tau).unwrap()
    }

    #[test]
    fn tau_max_reference_values() {
        // closed-form maximum of g at tanh(rho*) = 1/(2H); frozen 2 - sqrt(3)
        assert!((tau_max(1.0).unwrap() - 0.2679491924311228).abs() < 1e-15);
        // oracle: the maximum of g on a fine grid agrees
        let grid_max = (0..20000)
            .map(|i| g(1.0, 1.5 * i as f64 / 19999.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((tau_max(1.0).unwrap() - grid_max).abs() < 1e-7);
        // asymptotics: tau_max ~ 1/(4H), checked at H = 50 within 1%
        assert!((tau_max(50.0).unwrap() * 4.0 * 50.0 - 1.0).abs() < 0.01);
        // positive on a grid of H > 1/2
        for i in 0..100 {
            let h = 0.5 + 1e-6 + i as f64 * 0.1;
            assert!(tau_max(h).unwrap() > 0.0);
        }
        assert!(tau_max(0.5).is_err());
        assert!(tau_max(0.3).is_err());
    }

    #[test]
    fn radii_reference_and_oracle() {
        // degenerate cylinder: artanh(1/2)
        let p = params(1.0, tau_max(1.0).unwrap());
        let (a, b) = neck_bulge_radii(&p);
        assert!((a - 0.5493061443340548).abs() < 1e-12);
        assert_eq!(a, b);
        // H=1, tau=0.2 against the bisection oracle and frozen values
        let p = params(1.0, 0.2);
        let (lo, hi) = neck_bulge_radii(&p);
        let (olo, ohi) = radii_oracle(1.0, 0.2);
        assert!((lo - olo).abs() < 1e-10 && (hi - ohi).abs() < 1e-10);
        assert!((lo - 0.27010503604403113).abs() < 1e-9);
        assert!((hi - 0.8285072526240784).abs() < 1e-9);
        assert!((g(1.0, lo) - 0.2).abs() < 1e-10 && (g(1.0, hi) - 0.2).abs() < 1e-10);
        // tau -> 0: bulge radius approaches ln 3 = 2 artanh(1/2)
        let p = params(1.0, 1e-8);
        let (_, hi) = neck_bulge_radii(&p);
        assert!((hi - 3.0_f64.ln()).abs() < 1e-7);
    }

    #[test]
    fn radii_reject_out_of_range() {
        assert!(DelaunayParams::new(1.0, 0.0).is_err());
        assert!(DelaunayParams::new(1.0, -0.1).is_err());
        assert!(DelaunayParams::new(1.0, 0.27).is_err()); // above tau_max(1)
        assert!(DelaunayParams::new(0.5, 0.1).is_err());
    }

    #[test]
    fn cylinder_profile_is_exact() {
        let p = params(1.0, tau_max(1.0).unwrap());
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), 2.0, 1e-2).unwrap();
        assert_eq!(prof.period(), Period::Cylinder);
        for s in prof.samples() {
            assert_eq!(s.rho, cylinder_radius(1.0));
            assert_eq!(s.sigma, FRAC_PI_2);
        }
        assert!(prof.first_integral_residual() < 1e-14);
    }

    #[test]
    fn profile_extrema_match_radii() {
        let p = params(1.0, 0.2);
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), 4.0, 1e-3).unwrap();
        let (lo, hi) = neck_bulge_radii(&p);
        let rho_lo = prof
            .samples()
            .iter()
            .map(|s| s.rho)
            .fold(f64::INFINITY, f64::min);
        let rho_hi = prof
            .samples()
            .iter()
            .map(|s| s.rho)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((rho_lo - lo).abs() < 1e-6, "neck {rho_lo} vs {lo}");
        assert!((rho_hi - hi).abs() < 1e-6, "bulge {rho_hi} vs {hi}");
        // all samples within the radii band, heights strictly increasing
        for w in prof.samples().windows(2) {
            assert!(w[0].z < w[1].z);
        }
        for s in prof.samples() {
            assert!(s.rho >= lo - 1e-6 && s.rho <= hi + 1e-6);
            assert!(s.sigma.sin() > 0.0);
        }
    }

    #[test]
    fn first_integral_conservation_and_order() {
        let p = params(1.0, 0.2);
        let two_periods = 2.0 * period(&p).value().unwrap();
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), two_periods, 1e-3).unwrap();
        let drift = prof.first_integral_residual();
        assert!(drift <= 1e-8, "drift {drift}");
        // order-4 reduction, measured at steps where truncation still
        // dominates rounding (at 1e-3 the drift sits at the 1e-14 floor)
        let coarse = integrate_profile(&p, PointH2::new(0.0, 0.0), two_periods, 4e-3)
            .unwrap()
            .first_integral_residual();
        let fine = integrate_profile(&p, PointH2::new(0.0, 0.0), two_periods, 2e-3)
            .unwrap()
            .first_integral_residual();
        assert!(
            coarse / fine >= 12.0,
            "order-4 drift reduction: {coarse} -> {fine}"
        );
    }

    #[test]
    fn period_quadrature_vs_integrated_profile() {
        let p = params(1.0, 0.2);
        let quad = period(&p).value().unwrap();
        // frozen from an independent Gauss quadrature oracle (theta
        // substitution, n = 400/800 agreeing to 2e-11)
        assert!((quad - 3.4034869266730814).abs() < 1e-8, "period {quad}");
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), 2.5 * quad, 1e-3).unwrap();
        let measured = prof.measured_period().unwrap();
        assert!(
            (quad - measured).abs() < 1e-6,
            "quadrature {quad} vs measured {measured}"
        );
    }

    #[test]
    fn period_continuous_in_tau() {
        let tmax = tau_max(1.0).unwrap();
        let mut prev: Option<f64> = None;
        let n = 60;
        for i in 0..n {
            let tau = 0.05 + (tmax - 1e-6 - 0.05) * i as f64 / (n - 1) as f64;
            let val = period(&params(1.0, tau)).value().unwrap();
            if let Some(p) = prev {
                assert!(
                    (val - p).abs() < 0.05,
                    "period jump at tau={tau}: {p} -> {val}"
                );
            }
            prev = Some(val);
        }
    }

    #[test]
    fn coarse_step_rejected_by_conservation_monitor() {
        let p = params(1.0, 0.2);
        let err = integrate_profile(&p, PointH2::new(0.0, 0.0), 5.0, 0.35).unwrap_err();
        assert!(
            err.to_string().contains("step rejected"),
            "unexpected error: {err}"
        );
        assert!(integrate_profile(&p, PointH2::new(0.0, 0.0), -1.0, 1e-3).is_err());
        assert!(integrate_profile(&p, PointH2::new(0.0, 0.0), 1.0, 0.0).is_err());
        assert!(integrate_profile(&p, PointH2::new(0.0, 0.0), 1.0, f64::NAN).is_err());
        assert!(integrate_profile(&p, PointH2::new(0.0, 0.0), 1e9, 1e-3).is_err());
    }

    #[test]
    fn cylinder_period_marker() {
        assert_eq!(
            period(&params(1.0, tau_max(1.0).unwrap())),
            Period::Cylinder
        );
        assert_eq!(
            period(&params(2.0, tau_max(2.0).unwrap())),
            Period::Cylinder
        );
    }

    #[test]
    fn profile_symmetry_about_bulge_and_periodicity() {
        let p = params(1.0, 0.2);
        let per = period(&p).value().unwrap();
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), 3.0 * per, 1e-3).unwrap();
        // starting height z = 0 is a bulge; mirror samples about it using the
        // interpolant (profile only covers z >= 0, so mirror about z = per)
        for i in 0..50 {
            let dz = per * 0.45 * i as f64 / 49.0;
            let a = prof.rho_of_z(per - dz).unwrap();
            let b = prof.rho_of_z(per + dz).unwrap();
            assert!((a - b).abs() < 1e-8, "mirror mismatch at dz={dz}");
            let c = prof.rho_of_z(dz).unwrap();
            let d = prof.rho_of_z(dz + per).unwrap();
            assert!((c - d).abs() < 1e-6, "periodicity mismatch at z={dz}");
        }
    }

    #[test]
    fn graph_function_reference_points() {
        let p = params(1.0, 0.2);
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), 2.0, 1e-3).unwrap();
        let z = 0.7;
        let rho = prof.rho_of_z(z).unwrap();
        assert!((prof.graph_function_f0(0.0, z).unwrap() - rho).abs() < 1e-12);
        assert!(prof.graph_function_f0(rho, z).unwrap().abs() < 1e-7);
        assert!(prof.graph_function_f0(rho + 1e-6, z).is_err());
        // random interior points: (f0, r) is at distance rho(z) from the axis
        for i in 0..40 {
            let r = rho * (-0.95 + 1.9 * i as f64 / 39.0);
            let f0 = prof.graph_function_f0(r, z).unwrap();
            let d = crate::geom::distance_h2(PointH2::new(f0, r), PointH2::new(0.0, 0.0));
            assert!((d - rho).abs() < 1e-10, "distance {d} vs rho {rho}");
            assert!(f0 >= 0.0);
        }
    }

    #[test]
    fn shadow_domain_membership_and_width() {
        let p = params(1.0, 0.2);
        let prof = integrate_profile(&p, PointH2::new(0.0, 0.0), 3.5, 1e-3).unwrap();
        let dom = prof.shadow_domain();
        for i in 0..20 {
            let z = 0.1 + 3.2 * i as f64 / 19.0;
            assert!(dom.contains(0.0, z));
            let rho = prof.rho_of_z(z).unwrap();
            assert!(dom.contains(rho, z));
            assert!(!dom.contains(rho + 1e-9, z));
        }
        // width at the bulge is 2 rho_max
        let per = period(&p).value().unwrap();
        assert!((dom.width_at(per).unwrap() - 2.0 * prof.rho_max()).abs() < 1e-5);
        let b = dom.boundary();
        assert_eq!(b.len(), 2 * prof.samples().len());
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre_128();
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-13);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
    }
}
