//! The momentum mean curvature flow.
//!
//! A Lagrangian multi-section is represented by a plane curve `γ` in the strip
//! `b ≤ x ≤ a` of the momentum plane. It moves by
//!
//! ```text
//! γ̇ = u″(x) (κ + (n−1) ξ) N,   N = i γ′/|γ′|,
//! ```
//!
//! where `κ` is the signed curvature, `ξ = (x y′ − y x′)/((x² + y²)|γ′|)` the
//! angular speed of `γ` about the origin, and `u″` the second derivative of
//! the symplectic potential, which vanishes at both ends of the strip. On a
//! graph `y = f(x)` this becomes
//!
//! ```text
//! ḟ = u″(x) ( f″/(1 + f′²) + (n−1)(x f′ − f)/(x² + f²) ),
//! ```
//!
//! whose right side is `u″` times the derivative of the lifted angle, so
//! level-set profiles are stationary.
//!
//! Profiles are stepped on their own samples; curves are stepped in a chord
//! length parametrisation and resampled to uniform arc length after every
//! step. Both use finite differences with a semi-implicit treatment of the
//! diffusive term by default.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::construction::ConstructionParams;
use crate::levelset::{self, fmt_f64, HarmonicLevelSet, LevelSetError, MomentumProfile, PlanePoint, TraceConfig, Window};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("potential needs a > b > 0, got a = {a}, b = {b}")]
    BadInterval { a: f64, b: f64 },
    #[error("tabulated potential: {0}")]
    BadPotential(String),
    #[error("profile step diverged: max |Δf| = {max_change:e}")]
    StepUnstable { max_change: f64 },
    #[error("dt = {dt:e} exceeds the explicit stability bound {bound:e}")]
    UnstableConfig { dt: f64, bound: f64 },
    #[error("segments {i} and {j} intersect at t = {t}")]
    SelfIntersection { i: usize, j: usize, t: f64 },
    #[error("curvature {max_kappa:e} exceeds the guard {guard:e} at t = {t}")]
    BlowUp { t: f64, max_kappa: f64, guard: f64, last: Box<FlowState> },
    #[error("{count} vertical tangents found, expected one")]
    MultipleCriticalPoints { count: usize },
    #[error("no vertical tangent on the curve")]
    NoCriticalPoint,
    #[error("curve needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("the section arc misses the corner (b, q) by {distance:e}")]
    CornerOffArc { distance: f64 },
    #[error("no initial curve with inward tip velocity")]
    NoInwardSeed,
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// The shape of `u″` on `[b, a]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `2(x − b)(a − x)/(a − b)`.
    Quadratic,
    /// A constant, ignoring the interval (for curve-shortening checks).
    Constant(f64),
    /// Linear interpolation of `(x, u″)` samples, zero outside.
    Tabulated(Vec<(f64, f64)>),
}

/// `u″` expressed as a function of the momentum coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPotentialProfile {
    pub a: f64,
    pub b: f64,
    pub kind: Potential,
}

/// The quadratic potential with slopes `±2` at the ends.
pub fn default_potential(a: f64, b: f64) -> Result<SymplecticPotentialProfile> {
    if !(a > b && b > 0.0) || !a.is_finite() {
        return Err(FlowError::BadInterval { a, b });
    }
    Ok(SymplecticPotentialProfile { a, b, kind: Potential::Quadratic })
}

impl SymplecticPotentialProfile {
    /// `u″ ≡ value` everywhere.
    pub fn constant(value: f64) -> Self {
        Self { a: f64::INFINITY, b: f64::NEG_INFINITY, kind: Potential::Constant(value) }
    }

    /// A user-supplied `u″`, checked to vanish at both ends and be positive inside.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |m: &str| Err(FlowError::BadPotential(m.to_string()));
        if samples.len() < 3 {
            return bad("need at least three samples");
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return bad("abscissae must increase");
        }
        let (b, a) = (samples[0].0, samples[samples.len() - 1].0);
        if !(b > 0.0) {
            return bad("interval must lie in x > 0");
        }
        if samples[0].1 != 0.0 || samples[samples.len() - 1].1 != 0.0 {
            return bad("u″ must vanish at both ends");
        }
        if samples[1..samples.len() - 1].iter().any(|s| !(s.1 > 0.0)) {
            return bad("u″ must be positive inside");
        }
        Ok(Self { a, b, kind: Potential::Tabulated(samples) })
    }

    pub fn phi(&self, x: f64) -> f64 {
        match &self.kind {
            Potential::Quadratic => {
                if x <= self.b || x >= self.a {
                    0.0
                } else {
                    2.0 * (x - self.b) * (self.a - x) / (self.a - self.b)
                }
            }
            Potential::Constant(v) => *v,
            Potential::Tabulated(s) => {
                if x <= s[0].0 || x >= s[s.len() - 1].0 {
                    return 0.0;
                }
                let i = s.partition_point(|p| p.0 <= x);
                let (x0, y0) = s[i - 1];
                let (x1, y1) = s[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    fn max_phi(&self) -> f64 {
        match &self.kind {
            Potential::Quadratic => (self.a - self.b) / 2.0,
            Potential::Constant(v) => v.abs(),
            Potential::Tabulated(s) => s.iter().map(|p| p.1).fold(0.0, f64::max),
        }
    }
}

/// Denominator of the angular term in the profile equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenominatorConvention {
    /// `x² + f²`: the derivative of `arctan(f/x)`, so level sets are stationary.
    #[default]
    XSquaredPlusF2,
    /// `x + f²`, kept for comparison only.
    XPlusF2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    ExplicitEuler,
    /// Implicit in the second-derivative term, explicit in the angular term.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
    /// Number of curve points.
    pub grid: usize,
    pub denominator_convention: DenominatorConvention,
    pub scheme: Scheme,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            grid: 400,
            denominator_convention: DenominatorConvention::XSquaredPlusF2,
            scheme: Scheme::SemiImplicit,
        }
    }
}

impl FlowConfig {
    /// Largest explicit time step for spacing `h`: `0.45 h² / max u″`.
    pub fn explicit_bound(h: f64, pot: &SymplecticPotentialProfile) -> f64 {
        0.45 * h * h / pot.max_phi().max(f64::MIN_POSITIVE)
    }

    fn check(&self, h: f64, pot: &SymplecticPotentialProfile) -> Result<()> {
        if self.scheme == Scheme::ExplicitEuler {
            let bound = Self::explicit_bound(h, pot);
            if self.dt > bound {
                return Err(FlowError::UnstableConfig { dt: self.dt, bound });
            }
        }
        Ok(())
    }
}

/// Three-point weights for the first and second derivative at the middle node
/// of a nonuniform stencil with spacings `h1` (left) and `h2` (right).
fn fd_weights(h1: f64, h2: f64) -> ([f64; 3], [f64; 3]) {
    let s = h1 + h2;
    let d1 = [-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)];
    let d2 = [2.0 / (h1 * s), -2.0 / (h1 * h2), 2.0 / (h2 * s)];
    (d1, d2)
}

fn dot3(w: [f64; 3], v: [f64; 3]) -> f64 {
    w[0] * v[0] + w[1] * v[1] + w[2] * v[2]
}

/// Solve a tridiagonal system by the Thomas algorithm.
///
/// `lower[0]` and `upper[n−1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Solve a cyclic tridiagonal system: `lower[0]` couples row 0 to the last
/// unknown and `upper[n−1]` couples the last row to unknown 0.
fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (alpha, beta) = (upper[n - 1], lower[0]);
    let gamma = -diag[0];
    // Sherman–Morrison on the corner entries.
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    let x = solve_tridiagonal(lower, &bb, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(lower, &bb, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn angular_denominator(conv: DenominatorConvention, x: f64, f: f64) -> f64 {
    match conv {
        DenominatorConvention::XSquaredPlusF2 => x * x + f * f,
        DenominatorConvention::XPlusF2 => x + f * f,
    }
}

/// Right side of the profile equation at interior sample `i`, with the
/// finite-difference slope and second-derivative weights.
fn profile_terms(
    xs: &[f64],
    fs: &[f64],
    i: usize,
    n: u32,
    conv: DenominatorConvention,
) -> (f64, f64, [f64; 3]) {
    let (d1, d2) = fd_weights(xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
    let v = [fs[i - 1], fs[i], fs[i + 1]];
    let fp = dot3(d1, v);
    let fpp = dot3(d2, v);
    let (x, f) = (xs[i], fs[i]);
    let angular = (n as f64 - 1.0) * (x * fp - f) / angular_denominator(conv, x, f);
    (fpp / (1.0 + fp * fp), angular, d2)
}

/// Right side of the profile equation at every sample; zero at the ends.
pub fn profile_velocity(f: &MomentumProfile, pot: &SymplecticPotentialProfile, n: u32, conv: DenominatorConvention) -> Vec<f64> {
    let xs: Vec<f64> = f.xs().collect();
    let fs: Vec<f64> = f.ys().collect();
    let mut out = vec![0.0; xs.len()];
    for i in 1..xs.len().saturating_sub(1) {
        let (diffusive, angular, _) = profile_terms(&xs, &fs, i, n, conv);
        out[i] = pot.phi(xs[i]) * (diffusive + angular);
    }
    out
}

/// `sup |u″(f″/(1+f′²) + (n−1)(x f′ − f)/(x² + f²))|` over interior samples.
pub fn stationarity_residual(f: &MomentumProfile, pot: &SymplecticPotentialProfile, n: u32) -> f64 {
    profile_velocity(f, pot, n, DenominatorConvention::XSquaredPlusF2)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// One time step of the profile flow. End values are held fixed.
pub fn profile_flow_step(
    f: &MomentumProfile,
    pot: &SymplecticPotentialProfile,
    n: u32,
    cfg: &FlowConfig,
) -> Result<MomentumProfile> {
    let xs: Vec<f64> = f.xs().collect();
    let fs: Vec<f64> = f.ys().collect();
    let m = xs.len();
    if m < 3 {
        return Err(FlowError::TooFewPoints { need: 3, got: m });
    }
    let h_min = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    cfg.check(h_min, pot)?;
    let dt = cfg.dt;
    let mut new = fs.clone();
    match cfg.scheme {
        Scheme::ExplicitEuler => {
            let v = profile_velocity(f, pot, n, cfg.denominator_convention);
            for i in 1..m - 1 {
                new[i] = fs[i] + dt * v[i];
            }
        }
        Scheme::SemiImplicit => {
            let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; m], vec![1.0; m], vec![0.0; m], fs.clone());
            for i in 1..m - 1 {
                let (_, angular, d2) = profile_terms(&xs, &fs, i, n, cfg.denominator_convention);
                let (d1w, _) = fd_weights(xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                let fp = dot3(d1w, [fs[i - 1], fs[i], fs[i + 1]]);
                let phi = pot.phi(xs[i]);
                let alpha = dt * phi / (1.0 + fp * fp);
                lo[i] = -alpha * d2[0];
                di[i] = 1.0 - alpha * d2[1];
                up[i] = -alpha * d2[2];
                rhs[i] = fs[i] + dt * phi * angular;
            }
            new = solve_tridiagonal(&lo, &di, &up, &rhs);
            new[0] = fs[0];
            new[m - 1] = fs[m - 1];
        }
    }
    let max_change = new.iter().zip(&fs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let span = (xs[m - 1] - xs[0]).max(1e-300);
    if !max_change.is_finite() || max_change > 0.5 * span {
        return Err(FlowError::StepUnstable { max_change });
    }
    let mut out = MomentumProfile::from_samples(xs.into_iter().zip(new).collect())?;
    out.lo_vertical = f.lo_vertical;
    out.hi_vertical = f.hi_vertical;
    Ok(out)
}

/// A sampled curve under the flow. Open curves keep their end points fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub curve: Vec<PlanePoint>,
    pub t: f64,
    pub closed: bool,
}

impl FlowState {
    pub fn open(curve: Vec<PlanePoint>) -> Self {
        Self { curve, t: 0.0, closed: false }
    }

    pub fn closed(curve: Vec<PlanePoint>) -> Self {
        Self { curve, t: 0.0, closed: true }
    }

    pub fn endpoints(&self) -> Option<(PlanePoint, PlanePoint)> {
        (!self.closed && !self.curve.is_empty()).then(|| (self.curve[0], self.curve[self.curve.len() - 1]))
    }

    /// Mean spacing between consecutive points.
    pub fn spacing(&self) -> f64 {
        let segs = self.curve.len() - usize::from(!self.closed);
        curve_length(&self.curve, self.closed) / segs as f64
    }

    /// The state after resampling to `count` points at uniform arc length.
    pub fn resampled(&self, count: usize) -> Self {
        Self { curve: resample_arclength(&self.curve, self.closed, count), t: self.t, closed: self.closed }
    }
}

fn curve_length(points: &[PlanePoint], closed: bool) -> f64 {
    let mut len: f64 = points.windows(2).map(|w| w[0].distance(w[1])).sum();
    if closed && points.len() > 1 {
        len += points[points.len() - 1].distance(points[0]);
    }
    len
}

/// Indices of the neighbours of node `i`, with the spacings to them.
fn neighbours(points: &[PlanePoint], closed: bool, i: usize) -> Option<(usize, usize, f64, f64)> {
    let n = points.len();
    let (prev, next) = if closed {
        ((i + n - 1) % n, (i + 1) % n)
    } else {
        if i == 0 || i + 1 >= n {
            return None;
        }
        (i - 1, i + 1)
    };
    let h1 = points[i].distance(points[prev]);
    let h2 = points[next].distance(points[i]);
    Some((prev, next, h1, h2))
}

/// Local differential geometry of the curve at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub kappa: f64,
    pub xi: f64,
    /// `d²γ/ds²` weights for the previous, current and next node.
    d2: [f64; 3],
    prev: usize,
    next: usize,
}

fn node_geometry(points: &[PlanePoint], closed: bool, i: usize) -> Option<NodeGeometry> {
    let (prev, next, h1, h2) = neighbours(points, closed, i)?;
    if !(h1 > 0.0 && h2 > 0.0) {
        return None;
    }
    let (d1, d2) = fd_weights(h1, h2);
    let xs = [points[prev].x, points[i].x, points[next].x];
    let ys = [points[prev].y, points[i].y, points[next].y];
    let (xp, yp) = (dot3(d1, xs), dot3(d1, ys));
    let (xpp, ypp) = (dot3(d2, xs), dot3(d2, ys));
    let speed = xp.hypot(yp);
    let kappa = (xp * ypp - yp * xpp) / speed.powi(3);
    let (x, y) = (points[i].x, points[i].y);
    let r2 = x * x + y * y;
    let xi = if r2 > 0.0 { (x * yp - y * xp) / (r2 * speed) } else { 0.0 };
    let tangent = [xp / speed, yp / speed];
    let normal = [-tangent[1], tangent[0]];
    Some(NodeGeometry { tangent, normal, kappa, xi, d2, prev, next })
}

/// `u″(x)(κ + (n−1)ξ) N` at every node; zero at the ends of an open curve.
pub fn curve_velocity(state: &FlowState, pot: &SymplecticPotentialProfile, n: u32) -> Vec<[f64; 2]> {
    let nm1 = n as f64 - 1.0;
    (0..state.curve.len())
        .map(|i| match node_geometry(&state.curve, state.closed, i) {
            Some(g) => {
                let s = pot.phi(state.curve[i].x) * (g.kappa + nm1 * g.xi);
                [s * g.normal[0], s * g.normal[1]]
            }
            None => [0.0, 0.0],
        })
        .collect()
}

/// Largest `|γ̇|` over the nodes.
pub fn max_speed(state: &FlowState, pot: &SymplecticPotentialProfile, n: u32) -> f64 {
    curve_velocity(state, pot, n).iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
}

fn max_curvature(state: &FlowState) -> f64 {
    (0..state.curve.len())
        .filter_map(|i| node_geometry(&state.curve, state.closed, i))
        .fold(0.0, |m, g| m.max(g.kappa.abs()))
}

/// One time step of the curve flow, followed by arc-length resampling.
pub fn curve_flow_step(state: &FlowState, pot: &SymplecticPotentialProfile, n: u32, cfg: &FlowConfig) -> Result<FlowState> {
    let pts = &state.curve;
    let m = pts.len();
    let need = if state.closed { 4 } else { 3 };
    if m < need {
        return Err(FlowError::TooFewPoints { need, got: m });
    }
    let h = state.spacing();
    cfg.check(h, pot)?;
    let guard = 1e3 / h;
    let max_kappa = max_curvature(state);
    if !(max_kappa <= guard) {
        return Err(FlowError::BlowUp { t: state.t, max_kappa, guard, last: Box::new(state.clone()) });
    }
    let dt = cfg.dt;
    let nm1 = n as f64 - 1.0;
    let mut new = pts.clone();
    match cfg.scheme {
        Scheme::ExplicitEuler => {
            let v = curve_velocity(state, pot, n);
            for (p, v) in new.iter_mut().zip(&v) {
                p.x += dt * v[0];
                p.y += dt * v[1];
            }
        }
        Scheme::SemiImplicit => {
            // (I − dt u″ ∂ss) γ_new = γ + dt u″ (n−1) ξ N.
            let (mut lo, mut di, mut up) = (vec![0.0; m], vec![1.0; m], vec![0.0; m]);
            let mut rx: Vec<f64> = pts.iter().map(|p| p.x).collect();
            let mut ry: Vec<f64> = pts.iter().map(|p| p.y).collect();
            for i in 0..m {
                let Some(g) = node_geometry(pts, state.closed, i) else { continue };
                let phi = pot.phi(pts[i].x);
                let alpha = dt * phi;
                lo[i] = -alpha * g.d2[0];
                di[i] = 1.0 - alpha * g.d2[1];
                up[i] = -alpha * g.d2[2];
                debug_assert!(state.closed || (g.prev + 1 == i && g.next == i + 1));
                let push = dt * phi * nm1 * g.xi;
                rx[i] += push * g.normal[0];
                ry[i] += push * g.normal[1];
            }
            let (xs, ys) = if state.closed {
                (solve_cyclic_tridiagonal(&lo, &di, &up, &rx), solve_cyclic_tridiagonal(&lo, &di, &up, &ry))
            } else {
                (solve_tridiagonal(&lo, &di, &up, &rx), solve_tridiagonal(&lo, &di, &up, &ry))
            };
            for (i, p) in new.iter_mut().enumerate() {
                *p = PlanePoint::new(xs[i], ys[i]);
            }
        }
    }
    if !state.closed {
        new[0] = pts[0];
        new[m - 1] = pts[m - 1];
    }
    if new.iter().any(|p| !p.is_finite()) {
        return Err(FlowError::BlowUp { t: state.t, max_kappa: f64::INFINITY, guard, last: Box::new(state.clone()) });
    }
    if let Some((i, j)) = find_self_intersection(&new, state.closed) {
        return Err(FlowError::SelfIntersection { i, j, t: state.t + dt });
    }
    Ok(FlowState { curve: resample_arclength(&new, state.closed, m), t: state.t + dt, closed: state.closed })
}

/// Resample to `count` points equally spaced in chord length, interpolating
/// with cubic Hermite segments whose tangents come from three-point
/// derivatives. End points of an open curve are kept exactly.
pub fn resample_arclength(points: &[PlanePoint], closed: bool, count: usize) -> Vec<PlanePoint> {
    let m = points.len();
    if m < 3 || count < 2 {
        return points.to_vec();
    }
    let mut ext: Vec<PlanePoint> = points.to_vec();
    if closed {
        ext.push(points[0]);
    }
    let mut s = vec![0.0; ext.len()];
    for i in 1..ext.len() {
        s[i] = s[i - 1] + ext[i].distance(ext[i - 1]);
    }
    let total = s[ext.len() - 1];
    let k = ext.len();
    // Tangents dγ/ds at each node.
    let tangent = |i: usize| -> [f64; 2] {
        let (a, b, c, h1, h2, which) = if closed {
            let prev = if i == 0 { m - 1 } else { i - 1 };
            let i0 = i % m;
            let next = (i0 + 1) % m;
            (points[prev], points[i0], points[next], points[i0].distance(points[prev]), points[next].distance(points[i0]), 1)
        } else if i == 0 {
            (ext[0], ext[1], ext[2], s[1] - s[0], s[2] - s[1], 0)
        } else if i == k - 1 {
            (ext[k - 3], ext[k - 2], ext[k - 1], s[k - 2] - s[k - 3], s[k - 1] - s[k - 2], 2)
        } else {
            (ext[i - 1], ext[i], ext[i + 1], s[i] - s[i - 1], s[i + 1] - s[i], 1)
        };
        let t = h1 + h2;
        let w = match which {
            0 => [-(2.0 * h1 + h2) / (h1 * t), t / (h1 * h2), -h1 / (h2 * t)],
            2 => [h2 / (h1 * t), -t / (h1 * h2), (h1 + 2.0 * h2) / (h2 * t)],
            _ => fd_weights(h1, h2).0,
        };
        [dot3(w, [a.x, b.x, c.x]), dot3(w, [a.y, b.y, c.y])]
    };
    let tangents: Vec<[f64; 2]> = (0..k).map(tangent).collect();
    let slots = if closed { count } else { count - 1 };
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for j in 0..count {
        let target = total * j as f64 / slots as f64;
        if !closed && j == count - 1 {
            out.push(points[m - 1]);
            continue;
        }
        while seg + 2 < k && s[seg + 1] < target {
            seg += 1;
        }
        let (s0, s1) = (s[seg], s[seg + 1]);
        let dh = s1 - s0;
        let u = if dh > 0.0 { ((target - s0) / dh).clamp(0.0, 1.0) } else { 0.0 };
        let (h00, h10, h01, h11) = (
            2.0 * u.powi(3) - 3.0 * u * u + 1.0,
            u.powi(3) - 2.0 * u * u + u,
            -2.0 * u.powi(3) + 3.0 * u * u,
            u.powi(3) - u * u,
        );
        let (p0, p1, m0, m1) = (ext[seg], ext[seg + 1], tangents[seg], tangents[seg + 1]);
        out.push(PlanePoint::new(
            h00 * p0.x + h10 * dh * m0[0] + h01 * p1.x + h11 * dh * m1[0],
            h00 * p0.y + h10 * dh * m0[1] + h01 * p1.y + h11 * dh * m1[1],
        ));
    }
    if !closed {
        out[0] = points[0];
    }
    out
}

fn segments_cross(p1: PlanePoint, p2: PlanePoint, p3: PlanePoint, p4: PlanePoint) -> bool {
    let orient = |a: PlanePoint, b: PlanePoint, c: PlanePoint| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// The first pair of non-adjacent segments that cross, by a sweep in `x`.
pub fn find_self_intersection(points: &[PlanePoint], closed: bool) -> Option<(usize, usize)> {
    let m = points.len();
    let nseg = if closed { m } else { m.saturating_sub(1) };
    let seg = |i: usize| (points[i], points[(i + 1) % m]);
    let mut order: Vec<(f64, f64, usize)> = (0..nseg)
        .map(|i| {
            let (a, b) = seg(i);
            (a.x.min(b.x), a.x.max(b.x), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (k, &(_, hi, i)) in order.iter().enumerate() {
        for &(lo2, _, j) in &order[k + 1..] {
            if lo2 > hi {
                break;
            }
            let adjacent = i.abs_diff(j) <= 1 || (closed && i.abs_diff(j) == nseg - 1);
            if adjacent {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_cross(a, b, c, d) {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// The vertical tangent of a multi-section and its horizontal velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x_c: f64,
    pub y_c: f64,
    pub velocity_x: f64,
    /// Curvature at the tip, oriented so that `y` increases through it.
    pub kappa: f64,
    /// Angular speed at the tip in the same orientation.
    pub xi: f64,
    pub phi: f64,
}

impl CriticalPoint {
    /// `u″(x_c)(κ + (n−1)ξ)`; the tip moves toward smaller `x` exactly when
    /// this is positive, since the normal there is `(−1, 0)`.
    pub fn driving_term(&self, n: u32) -> f64 {
        self.phi * (self.kappa + (n as f64 - 1.0) * self.xi)
    }
}

/// Locate the single vertical tangent (the minimum of `x`) of an open curve.
///
/// The minimum is refined by a quadratic fit in the chord parameter; the
/// reported velocity is the quadratic interpolant of the node velocities.
pub fn critical_point_tracker(state: &FlowState, pot: &SymplecticPotentialProfile, n: u32) -> Result<CriticalPoint> {
    let pts = &state.curve;
    let m = pts.len();
    if m < 3 {
        return Err(FlowError::TooFewPoints { need: 3, got: m });
    }
    let mut changes = 0;
    let mut last_sign = 0.0;
    for w in pts.windows(2) {
        let d = w[1].x - w[0].x;
        if d == 0.0 {
            continue;
        }
        let sgn = d.signum();
        if last_sign != 0.0 && sgn != last_sign {
            changes += 1;
        }
        last_sign = sgn;
    }
    if changes == 0 {
        return Err(FlowError::NoCriticalPoint);
    }
    if changes > 1 {
        return Err(FlowError::MultipleCriticalPoints { count: changes });
    }
    let i = (0..m).min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x)).unwrap();
    if i == 0 || i == m - 1 {
        return Err(FlowError::NoCriticalPoint);
    }
    let h1 = pts[i].distance(pts[i - 1]);
    let h2 = pts[i + 1].distance(pts[i]);
    let (d1, d2) = fd_weights(h1, h2);
    let xs = [pts[i - 1].x, pts[i].x, pts[i + 1].x];
    let ys = [pts[i - 1].y, pts[i].y, pts[i + 1].y];
    let (xp, xpp) = (dot3(d1, xs), dot3(d2, xs));
    // Vertex of the local quadratic, measured from node i.
    let ds = if xpp > 0.0 { (-xp / xpp).clamp(-h1, h2) } else { 0.0 };
    let quad = |v: [f64; 3]| v[1] + dot3(d1, v) * ds + 0.5 * dot3(d2, v) * ds * ds;
    let vel = curve_velocity(state, pot, n);
    let vx = quad([vel[i - 1][0], vel[i][0], vel[i + 1][0]]);
    let g = node_geometry(pts, false, i).expect("interior node");
    let orient = if dot3(d1, ys) >= 0.0 { 1.0 } else { -1.0 };
    let x_c = quad(xs);
    Ok(CriticalPoint {
        x_c,
        y_c: quad(ys),
        velocity_x: vx,
        kappa: orient * g.kappa,
        xi: orient * g.xi,
        phi: pot.phi(x_c),
    })
}

/// Largest excursion of the curve outside the region between the barriers.
///
/// Points with `x` outside the barriers' common interval count by their
/// horizontal distance to it.
pub fn barrier_violation(state: &FlowState, upper: &MomentumProfile, lower: &MomentumProfile) -> f64 {
    let lo = upper.x_lo.max(lower.x_lo);
    let hi = upper.x_hi.min(lower.x_hi);
    let slack = 1e-12 * (1.0 + hi.abs());
    let mut worst: f64 = 0.0;
    for p in &state.curve {
        if p.x < lo - slack || p.x > hi + slack {
            worst = worst.max((lo - p.x).max(p.x - hi));
            continue;
        }
        let x = p.x.clamp(lo, hi);
        let (Ok(u), Ok(l)) = (upper.value_at(x), lower.value_at(x)) else {
            worst = f64::INFINITY;
            continue;
        };
        worst = worst.max(p.y - u).max(l - p.y);
    }
    worst
}

/// Whether every curve point lies between the barriers, up to `tol`.
pub fn barrier_monitor(state: &FlowState, upper: &MomentumProfile, lower: &MomentumProfile, tol: f64) -> bool {
    barrier_violation(state, upper, lower) <= tol
}

/// A stationary section used as a barrier for the unstable flow.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionBarrier {
    /// The level set containing the section.
    pub level_set: HarmonicLevelSet,
    /// The graph followed from the boundary point at `x = a` down to `x = b`.
    pub profile: MomentumProfile,
    /// The level-set arc from the boundary point at `x = a` to the corner `(b, q)`.
    pub arc: Vec<PlanePoint>,
    /// `|f(b) − q|`: zero when the arc is a graph over `[b, a]`.
    ///
    /// For `b > 1` the arc reaches a vertical tangent slightly to the left of
    /// `x = b` and hooks back to the corner, so the graph over `[b, a]` meets
    /// `x = b` away from `q`.
    pub corner_gap: f64,
}

/// The stationary sections through the corner `(b, q)` ending at `(a, 0)` and
/// `(a, ap)`, returned as `(upper, lower)` by their values at `x = a`.
///
/// Each is a level set of `Im e^{-iθ}z^n` with `θ` chosen so that both of its
/// points lie on one level: `θ = arg(P^n − (b + iq)^n) mod π`.
pub fn section_barriers(params: &ConstructionParams, b: f64, samples: usize) -> Result<(SectionBarrier, SectionBarrier)> {
    let n = params.n;
    let corner = PlanePoint::new(b, params.q);
    let ends = [PlanePoint::new(params.a, 0.0), PlanePoint::new(params.a, params.a * params.p)];
    let xs: Vec<f64> = (0..samples).map(|j| params.a - (params.a - b) * j as f64 / (samples - 1) as f64).collect();
    let width = params.a - b;
    let (y_lo, y_hi) = (ends[1].y.min(0.0).min(params.q), ends[1].y.max(0.0).max(params.q));
    let pad = y_hi - y_lo + width;
    let window = Window::new(b - 0.5 * width, params.a + 0.1 * width, y_lo - pad, y_hi + pad);
    let cfg = TraceConfig::with_step(width.min(y_hi - y_lo + width) / samples as f64);
    let mut barriers = Vec::with_capacity(2);
    for end in ends {
        let ls = level_through(n, corner, end);
        let mut profile = levelset::graph_over(&ls, &xs, end.y)?;
        // The graph must start exactly at the boundary point.
        let last = profile.samples.len() - 1;
        profile.samples[last].1 = end.y;
        let corner_gap = (profile.samples[0].1 - params.q).abs();
        let branch = levelset::trace_component(&ls, end, &window, &cfg)?;
        let nearest = |p: PlanePoint| {
            (0..branch.points.len())
                .min_by(|&i, &j| branch.points[i].distance(p).total_cmp(&branch.points[j].distance(p)))
                .unwrap()
        };
        let (i_end, i_corner) = (nearest(end), nearest(corner));
        let miss = branch.points[i_corner].distance(corner);
        if miss > 2.0 * cfg.step {
            return Err(FlowError::CornerOffArc { distance: miss });
        }
        let mut arc: Vec<PlanePoint> = if i_end <= i_corner {
            branch.points[i_end..=i_corner].to_vec()
        } else {
            branch.points[i_corner..=i_end].iter().rev().copied().collect()
        };
        arc[0] = end;
        let k = arc.len() - 1;
        arc[k] = corner;
        barriers.push(SectionBarrier { level_set: ls, profile, arc, corner_gap });
    }
    let (b0, b1) = (barriers.remove(0), barriers.remove(0));
    if ends[0].y >= ends[1].y {
        Ok((b0, b1))
    } else {
        Ok((b1, b0))
    }
}

/// The harmonic level set containing both points.
pub fn level_through(n: u32, p1: PlanePoint, p2: PlanePoint) -> HarmonicLevelSet {
    let w1 = p1.to_complex().powu(n);
    let w2 = p2.to_complex().powu(n);
    let theta = (w2 - w1).arg().rem_euclid(std::f64::consts::PI);
    let c = (num_complex::Complex64::from_polar(1.0, -theta) * w1).im;
    HarmonicLevelSet::new(n, theta, c)
}

/// One logged instant of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowLogRow {
    pub t: f64,
    pub x_c: f64,
    pub y_c: f64,
    pub velocity_x: f64,
    pub driving: f64,
    pub max_speed: f64,
    pub barrier_violation: f64,
    pub barrier_ok: bool,
}

/// Time series `t,x_c,y_c,max_speed,barrier_ok`.
pub fn write_flow_log_csv<W: Write>(mut w: W, rows: &[FlowLogRow]) -> io::Result<()> {
    writeln!(w, "t,x_c,y_c,max_speed,barrier_ok")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", fmt_f64(r.t), fmt_f64(r.x_c), fmt_f64(r.y_c), fmt_f64(r.max_speed), r.barrier_ok)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub flow: FlowConfig,
    pub t_max: f64,
    /// The run stops once the maximal speed falls below this.
    pub speed_tol: f64,
    /// Steps between log rows.
    pub log_every: usize,
    /// Steps between curve snapshots; 0 keeps only the first and last.
    pub snapshot_every: usize,
    /// Monotonicity of `x_c` is only asserted after this time.
    pub transient: f64,
    /// Barrier violations up to `barrier_factor · h²` are tolerated.
    pub barrier_factor: f64,
    /// Samples of each barrier profile.
    pub barrier_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig::default(),
            t_max: 50.0,
            speed_tol: 1e-6,
            log_every: 50,
            snapshot_every: 0,
            transient: 0.0,
            barrier_factor: 10.0,
            barrier_samples: 4001,
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Converged,
    ReachedTMax,
    BlowUp { t: f64, max_kappa: f64 },
    SelfIntersection { t: f64 },
    CriticalPointLost { t: f64, reason: String },
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Converged => write!(f, "converged"),
            RunOutcome::ReachedTMax => write!(f, "reached t_max"),
            RunOutcome::BlowUp { t, max_kappa } => write!(f, "blow-up at t = {t} (max |κ| = {max_kappa:e})"),
            RunOutcome::SelfIntersection { t } => write!(f, "self-intersection at t = {t}"),
            RunOutcome::CriticalPointLost { t, reason } => write!(f, "critical point lost at t = {t}: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub n: u32,
    pub b: f64,
    pub initial: FlowState,
    /// The last valid state.
    pub final_state: FlowState,
    pub log: Vec<FlowLogRow>,
    pub snapshots: Vec<FlowState>,
    pub outcome: RunOutcome,
    /// Mean point spacing of the initial curve.
    pub h: f64,
    pub upper: SectionBarrier,
    pub lower: SectionBarrier,
    /// Hausdorff distances of the final upper and lower pieces from the
    /// section arcs.
    pub upper_distance: f64,
    pub lower_distance: f64,
    /// Final tip position.
    pub limit_point: PlanePoint,
    /// The corner `(b, q)` the tip should approach.
    pub target: PlanePoint,
    pub max_barrier_violation: f64,
}

impl ExperimentReport {
    /// Whether `x_c` never increases (beyond `tol`) after the transient.
    pub fn x_c_non_increasing(&self, transient: f64, tol: f64) -> bool {
        let rows: Vec<&FlowLogRow> = self.log.iter().filter(|r| r.t >= transient).collect();
        rows.windows(2).all(|w| w[1].x_c <= w[0].x_c + tol)
    }

    pub fn velocity_always_negative(&self) -> bool {
        self.log.iter().all(|r| r.velocity_x < 0.0)
    }
}

fn log_row(state: &FlowState, pot: &SymplecticPotentialProfile, n: u32, upper: &MomentumProfile, lower: &MomentumProfile, tol: f64) -> Result<FlowLogRow> {
    let cp = critical_point_tracker(state, pot, n)?;
    let violation = barrier_violation(state, upper, lower);
    Ok(FlowLogRow {
        t: state.t,
        x_c: cp.x_c,
        y_c: cp.y_c,
        velocity_x: cp.velocity_x,
        driving: cp.driving_term(n),
        max_speed: max_speed(state, pot, n),
        barrier_violation: violation,
        barrier_ok: violation <= tol,
    })
}

/// The initial multi-section between the barriers with its tip at `x_c`:
/// `x = x_c + (a − x_c)τ²`, `y = mid(x) + w(x)τ` for `τ ∈ [−1, 1]`, where
/// `mid ± w` are the barriers.
pub fn interpolating_curve(upper: &MomentumProfile, lower: &MomentumProfile, a: f64, x_c: f64, count: usize) -> Result<FlowState> {
    let mut pts = Vec::with_capacity(count);
    for j in 0..count {
        let tau = -1.0 + 2.0 * j as f64 / (count - 1) as f64;
        let x = (x_c + (a - x_c) * tau * tau).min(a);
        let u = upper.value_at(x)?;
        let l = lower.value_at(x)?;
        let y = 0.5 * (u + l) + 0.5 * (u - l) * tau;
        pts.push(PlanePoint::new(x, y));
    }
    pts[0] = PlanePoint::new(a, lower.value_at(a)?);
    pts[count - 1] = PlanePoint::new(a, upper.value_at(a)?);
    Ok(FlowState::open(pts).resampled(count))
}

/// Hausdorff distance between two polylines.
pub fn hausdorff_distance(a: &[PlanePoint], b: &[PlanePoint]) -> f64 {
    curve_distance(a, b).max(curve_distance(b, a))
}

/// Run the curve flow from an interpolating multi-section in the unstable
/// regime `b > 1` and compare the result with the two stationary sections
/// through `(b, q)`.
pub fn unstable_limit_experiment(params: &ConstructionParams, b: f64, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let n = params.n;
    let pot = default_potential(params.a, b)?;
    let (upper, lower) = section_barriers(params, b, cfg.barrier_samples)?;
    let count = cfg.flow.grid;

    // Pick the tip position whose initial inward velocity is strongest.
    let mut best: Option<(f64, FlowState)> = None;
    for j in 1..40 {
        let x_c = b + (params.a - b) * j as f64 / 40.0;
        let state = interpolating_curve(&upper.profile, &lower.profile, params.a, x_c, count)?;
        if let Ok(cp) = critical_point_tracker(&state, &pot, n) {
            if cp.velocity_x < 0.0 && best.as_ref().is_none_or(|(v, _)| cp.velocity_x < *v) {
                best = Some((cp.velocity_x, state));
            }
        }
    }
    let (_, initial) = best.ok_or(FlowError::NoInwardSeed)?;
    let h = initial.spacing();
    let tol = cfg.barrier_factor * h * h;

    let mut state = initial.clone();
    let mut log = vec![log_row(&state, &pot, n, &upper.profile, &lower.profile, tol)?];
    let mut snapshots = vec![state.clone()];
    let mut outcome = RunOutcome::ReachedTMax;
    let total = (cfg.t_max / cfg.flow.dt).round() as usize;
    let mut step = 0usize;
    while step < total {
        match curve_flow_step(&state, &pot, n, &cfg.flow) {
            Ok(next) => state = next,
            Err(FlowError::BlowUp { t, max_kappa, .. }) => {
                outcome = RunOutcome::BlowUp { t, max_kappa };
                break;
            }
            Err(FlowError::SelfIntersection { t, .. }) => {
                outcome = RunOutcome::SelfIntersection { t };
                break;
            }
            Err(e) => return Err(e),
        }
        step += 1;
        if cfg.snapshot_every > 0 && step.is_multiple_of(cfg.snapshot_every) {
            snapshots.push(state.clone());
        }
        state.t = step as f64 * cfg.flow.dt;
        if step.is_multiple_of(cfg.log_every.max(1)) || step == total {
            match log_row(&state, &pot, n, &upper.profile, &lower.profile, tol) {
                Ok(row) => {
                    let done = row.max_speed < cfg.speed_tol;
                    log.push(row);
                    if done {
                        outcome = RunOutcome::Converged;
                        break;
                    }
                }
                Err(e) => {
                    outcome = RunOutcome::CriticalPointLost { t: state.t, reason: e.to_string() };
                    break;
                }
            }
        }
    }
    if snapshots.last() != Some(&state) {
        snapshots.push(state.clone());
    }

    let tip = (0..state.curve.len()).min_by(|&i, &j| state.curve[i].x.total_cmp(&state.curve[j].x)).unwrap();
    let (head, tail) = (&state.curve[..=tip], &state.curve[tip..]);
    // The piece ending at the higher boundary point follows the upper barrier.
    let (up_piece, low_piece) = if tail[tail.len() - 1].y >= head[0].y { (tail, head) } else { (head, tail) };
    let cp = critical_point_tracker(&state, &pot, n).ok();
    let limit_point = cp.map_or(state.curve[tip], |c| PlanePoint::new(c.x_c, c.y_c));
    let max_barrier_violation = log.iter().map(|r| r.barrier_violation).fold(0.0, f64::max);
    Ok(ExperimentReport {
        n,
        b,
        upper_distance: hausdorff_distance(up_piece, &upper.arc),
        lower_distance: hausdorff_distance(low_piece, &lower.arc),
        initial,
        final_state: state,
        log,
        snapshots,
        outcome,
        h,
        upper,
        lower,
        limit_point,
        target: PlanePoint::new(b, params.q),
        max_barrier_violation,
    })
}

/// The arc of the construction level set from `(a, 0)` to `(a, ap)`.
pub fn section_curve(params: &ConstructionParams, count: usize) -> Result<FlowState> {
    let ls = params.level_set();
    let ap = params.a * params.p;
    let y_lo = ap.min(params.q).min(0.0);
    let y_hi = ap.max(params.q).max(0.0);
    let pad = 0.25 * (y_hi - y_lo).max(1.0);
    let window = Window::new(0.5, params.a, y_lo - pad, y_hi + pad);
    let step = (y_hi - y_lo + params.a) / (8.0 * count as f64);
    let start = PlanePoint::new(params.a, 0.0);
    // Trace inward from just inside the boundary so both ends are clipped at x = a.
    let seed_y = ls_graph_point(&ls, params.a - 1e-3, 0.0)?;
    let branch = levelset::trace_component(&ls, PlanePoint::new(params.a - 1e-3, seed_y), &window, &TraceConfig::with_step(step))?;
    let mut pts = branch.points;
    // Orient from (a, ap) to (a, 0).
    if pts[0].distance(start) < pts[pts.len() - 1].distance(start) {
        pts.reverse();
    }
    pts[0] = PlanePoint::new(params.a, ap);
    let last = pts.len() - 1;
    pts[last] = start;
    Ok(FlowState::open(pts).resampled(count))
}

fn ls_graph_point(ls: &HarmonicLevelSet, x: f64, y0: f64) -> Result<f64> {
    let prof = levelset::graph_over(ls, &[x, x + 1e-9], y0)?;
    Ok(prof.samples[0].1)
}

/// Sup over the points of `a` of the distance to the polyline `b`.
pub fn curve_distance(a: &[PlanePoint], b: &[PlanePoint]) -> f64 {
    let branch = levelset::Branch {
        points: b.to_vec(),
        is_closed: false,
        vertical_tangent_points: vec![],
        ends: [levelset::Termination::Window; 2],
    };
    a.iter().map(|p| branch.distance_to(*p)).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct StableReport {
    pub initial: FlowState,
    pub final_state: FlowState,
    /// `(t, distance to the section, max speed)`.
    pub log: Vec<(f64, f64, f64)>,
    pub target: FlowState,
    pub outcome: RunOutcome,
}

/// Perturb the stationary section normally by `amplitude·sin(πs/L)` and run
/// the curve flow in the stable regime `b < 1`.
pub fn stable_relaxation(params: &ConstructionParams, b: f64, amplitude: f64, cfg: &ExperimentConfig) -> Result<StableReport> {
    let n = params.n;
    let pot = default_potential(params.a, b)?;
    let target = section_curve(params, cfg.flow.grid)?;
    let m = target.curve.len();
    let mut pts = target.curve.clone();
    for (i, pt) in pts.iter_mut().enumerate().take(m - 1).skip(1) {
        if let Some(g) = node_geometry(&target.curve, false, i) {
            let bump = amplitude * (std::f64::consts::PI * i as f64 / (m - 1) as f64).sin();
            pt.x += bump * g.normal[0];
            pt.y += bump * g.normal[1];
        }
    }
    let initial = FlowState::open(pts).resampled(m);
    let mut state = initial.clone();
    let mut log = vec![(0.0, curve_distance(&state.curve, &target.curve), max_speed(&state, &pot, n))];
    let mut outcome = RunOutcome::ReachedTMax;
    let total = (cfg.t_max / cfg.flow.dt).round() as usize;
    let mut step = 0usize;
    while step < total {
        match curve_flow_step(&state, &pot, n, &cfg.flow) {
            Ok(next) => state = next,
            Err(FlowError::BlowUp { t, max_kappa, .. }) => {
                outcome = RunOutcome::BlowUp { t, max_kappa };
                break;
            }
            Err(FlowError::SelfIntersection { t, .. }) => {
                outcome = RunOutcome::SelfIntersection { t };
                break;
            }
            Err(e) => return Err(e),
        }
        step += 1;
        state.t = step as f64 * cfg.flow.dt;
        if step.is_multiple_of(cfg.log_every.max(1)) || step == total {
            let speed = max_speed(&state, &pot, n);
            log.push((state.t, curve_distance(&state.curve, &target.curve), speed));
            if speed < cfg.speed_tol {
                outcome = RunOutcome::Converged;
                break;
            }
        }
    }
    Ok(StableReport { initial, final_state: state, log, target, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_6, PI};

    #[test]
    fn potential_shape() {
        let pot = default_potential(2.0, 1.0).unwrap();
        assert_eq!(pot.phi(1.0), 0.0);
        assert_eq!(pot.phi(2.0), 0.0);
        assert!((pot.phi(1.5) - 0.5).abs() < 1e-15);
        let h = 1e-7;
        assert!(((pot.phi(1.0 + h) - pot.phi(1.0)) / h - 2.0).abs() < 1e-6);
        assert!(((pot.phi(2.0) - pot.phi(2.0 - h)) / h + 2.0).abs() < 1e-6);
        assert!(matches!(default_potential(1.0, 2.0), Err(FlowError::BadInterval { .. })));
    }

    #[test]
    fn tabulated_potential_validation() {
        assert!(SymplecticPotentialProfile::tabulated(vec![(1.0, 0.0), (1.5, 0.4), (2.0, 0.0)]).is_ok());
        assert!(SymplecticPotentialProfile::tabulated(vec![(1.0, 0.1), (1.5, 0.4), (2.0, 0.0)]).is_err());
        assert!(SymplecticPotentialProfile::tabulated(vec![(1.0, 0.0), (1.5, -0.4), (2.0, 0.0)]).is_err());
        let pot = SymplecticPotentialProfile::tabulated(vec![(1.0, 0.0), (1.5, 0.4), (2.0, 0.0)]).unwrap();
        assert!((pot.phi(1.25) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_solvers() {
        let lo = [0.0, -1.0, -1.0, -1.0];
        let di = [4.0, 4.0, 4.0, 4.0];
        let up = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, 2.0, -1.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| di[i] * x[i] + if i > 0 { lo[i] * x[i - 1] } else { 0.0 } + if i < 3 { up[i] * x[i + 1] } else { 0.0 })
            .collect();
        let got = solve_tridiagonal(&lo, &di, &up, &rhs);
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
        let lo = [-1.0, -1.0, -1.0, -1.0];
        let up = [-1.0, -1.0, -1.0, -1.0];
        let rhs: Vec<f64> = (0..4).map(|i| di[i] * x[i] + lo[i] * x[(i + 3) % 4] + up[i] * x[(i + 1) % 4]).collect();
        let got = solve_cyclic_tridiagonal(&lo, &di, &up, &rhs);
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_profile_is_stationary() {
        let pot = default_potential(2.0, 1.0).unwrap();
        let f = MomentumProfile::from_samples((0..=50).map(|i| (1.0 + i as f64 / 50.0, 0.0)).collect()).unwrap();
        assert_eq!(stationarity_residual(&f, &pot, 3), 0.0);
        let g = profile_flow_step(&f, &pot, 3, &FlowConfig::default()).unwrap();
        assert!(g.ys().all(|y| y == 0.0));
    }

    #[test]
    fn explicit_bound_is_enforced() {
        let pot = default_potential(2.0, 1.0).unwrap();
        let f = MomentumProfile::from_samples((0..=100).map(|i| (1.0 + i as f64 / 100.0, 0.1)).collect()).unwrap();
        let cfg = FlowConfig { dt: 1e-2, scheme: Scheme::ExplicitEuler, ..FlowConfig::default() };
        assert!(matches!(profile_flow_step(&f, &pot, 2, &cfg), Err(FlowError::UnstableConfig { .. })));
    }

    #[test]
    fn resampling_preserves_a_circle() {
        let pts: Vec<PlanePoint> = (0..200)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 / 200.0).powf(1.3);
                PlanePoint::new(t.cos(), t.sin())
            })
            .collect();
        let out = resample_arclength(&pts, true, 200);
        for p in &out {
            assert!((p.x.hypot(p.y) - 1.0).abs() < 1e-5);
        }
        let gaps: Vec<f64> = (0..200).map(|i| out[i].distance(out[(i + 1) % 200])).collect();
        let (lo, hi) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
        assert!(hi / lo < 1.01);
    }

    #[test]
    fn self_intersection_detected() {
        let bowtie = vec![
            PlanePoint::new(0.0, 0.0),
            PlanePoint::new(1.0, 1.0),
            PlanePoint::new(1.0, 0.0),
            PlanePoint::new(0.0, 1.0),
        ];
        assert_eq!(find_self_intersection(&bowtie, false), Some((0, 2)));
        let square = vec![
            PlanePoint::new(0.0, 0.0),
            PlanePoint::new(1.0, 0.0),
            PlanePoint::new(1.0, 1.0),
            PlanePoint::new(0.0, 1.0),
        ];
        assert_eq!(find_self_intersection(&square, true), None);
    }

    #[test]
    fn tracker_recovers_constructed_minimum() {
        let pot = SymplecticPotentialProfile::constant(1.0);
        for m in [41usize, 81, 161] {
            let h = 2.0 / (m - 1) as f64;
            let s_c = 0.0123;
            let pts: Vec<PlanePoint> = (0..m)
                .map(|i| {
                    let s = -1.0 + i as f64 * h;
                    PlanePoint::new(1.5 + (s - s_c).powi(2), 0.3 + 2.0 * s)
                })
                .collect();
            let cp = critical_point_tracker(&FlowState::open(pts), &pot, 2).unwrap();
            assert!((cp.x_c - 1.5).abs() < h * h, "m={m}: {}", cp.x_c);
        }
    }

    #[test]
    fn tracker_rejects_two_tangents() {
        let pot = SymplecticPotentialProfile::constant(1.0);
        let pts: Vec<PlanePoint> = (0..100)
            .map(|i| {
                let s = i as f64 / 99.0 * 4.0 * PI;
                PlanePoint::new(2.0 + s.cos(), s)
            })
            .collect();
        assert!(matches!(
            critical_point_tracker(&FlowState::open(pts), &pot, 2),
            Err(FlowError::MultipleCriticalPoints { .. })
        ));
    }

    #[test]
    fn barriers_follow_the_level_arcs() {
        let params = ConstructionParams::from_theta(2, FRAC_PI_6).unwrap();
        for b in [0.95, 1.05] {
            let (upper, lower) = section_barriers(&params, b, 2001).unwrap();
            for bar in [&upper, &lower] {
                assert_eq!(bar.arc.last(), Some(&PlanePoint::new(b, params.q)));
                for p in &bar.arc {
                    assert!(levelset::eval_f(&bar.level_set, *p).abs() < 1e-9);
                }
                assert!(bar.profile.level_residual(&bar.level_set) < 1e-9);
            }
            assert_eq!(upper.profile.samples.last().unwrap().1, 0.0);
            assert!((lower.profile.samples.last().unwrap().1 - params.a * params.p).abs() < 1e-12);
            for (u, l) in upper.profile.samples.iter().zip(&lower.profile.samples).skip(1) {
                assert!(u.1 > l.1);
            }
            // Graphical below the wall, hooked above it.
            if b < 1.0 {
                assert!(upper.corner_gap < 1e-8 && lower.corner_gap < 1e-8);
            } else {
                assert!(upper.corner_gap > 1e-3 && lower.corner_gap > 1e-3);
            }
        }
    }

}
