//! Level sets of harmonic polynomials in the momentum plane.
//!
//! A special Lagrangian section with Calabi symmetry is encoded by a momentum
//! profile `y = f(x)`, and the phase condition makes the graph of `f` lie on a
//! level set `Im e^{-iθ}(x + iy)^n = c`. This module evaluates those defining
//! functions, follows a connected component by predictor-corrector
//! continuation, splits a traced component into graphical pieces at its
//! vertical tangents, and evaluates the lifted phase angle of a profile.
//!
//! The tracer works with any [`LevelFunction`], so the same machinery serves
//! the split Fano bundle polynomials in [`crate::bundles`].

use std::fmt;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LevelSetError {
    #[error("seed ({x}, {y}) is not on the level set (residual {residual:e})")]
    SeedOffLevelSet { x: f64, y: f64, residual: f64 },
    #[error("gradient vanishes near ({}, {}); trace stopped", .at.x, .at.y)]
    SingularPoint {
        at: PlanePoint,
        /// Everything traced before the singular point was reached.
        partial: Box<Branch>,
    },
    #[error("branch has no graphical piece")]
    DegenerateBranch,
    #[error("x = {x} outside the profile interval [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("no level-set point found over x = {x}")]
    GraphLost { x: f64 },
    #[error("malformed CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, LevelSetError>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<Complex64> for PlanePoint {
    fn from(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    pub fn contains(&self, p: PlanePoint) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    fn diameter(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }
}

/// A real function on the plane whose zero set is traced.
///
/// Implementations supply first and second derivatives; the tracer uses the
/// gradient for the predictor and Newton corrector, the Hessian to refine
/// vertical tangents.
pub trait LevelFunction {
    fn value(&self, p: PlanePoint) -> f64;
    fn gradient(&self, p: PlanePoint) -> [f64; 2];
    /// `[[F_xx, F_xy], [F_xy, F_yy]]`.
    fn hessian(&self, p: PlanePoint) -> [[f64; 2]; 2];
}

/// A holomorphic map `w` with its first two derivatives.
pub trait Holomorphic {
    fn value(&self, z: Complex64) -> Complex64;
    fn derivative(&self, z: Complex64) -> Complex64;
    fn second_derivative(&self, z: Complex64) -> Complex64;
}

/// The level set `Im w(z) = level` of a holomorphic map.
#[derive(Debug, Clone)]
pub struct ImaginaryLevel<W> {
    pub map: W,
    pub level: f64,
}

impl<W: Holomorphic> LevelFunction for ImaginaryLevel<W> {
    fn value(&self, p: PlanePoint) -> f64 {
        self.map.value(p.to_complex()).im - self.level
    }

    // Cauchy-Riemann: ∂x Im w = Im w', ∂y Im w = Re w'.
    fn gradient(&self, p: PlanePoint) -> [f64; 2] {
        let d = self.map.derivative(p.to_complex());
        [d.im, d.re]
    }

    fn hessian(&self, p: PlanePoint) -> [[f64; 2]; 2] {
        let d2 = self.map.second_derivative(p.to_complex());
        [[d2.im, d2.re], [d2.re, -d2.im]]
    }
}

/// `z ↦ e^{-iθ} z^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedPower {
    pub n: u32,
    pub theta_hat: f64,
}

impl Holomorphic for RotatedPower {
    fn value(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, -self.theta_hat) * z.powu(self.n)
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        let n = self.n;
        Complex64::from_polar(n as f64, -self.theta_hat) * z.powu(n - 1)
    }

    fn second_derivative(&self, z: Complex64) -> Complex64 {
        let n = self.n;
        if n < 2 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar((n * (n - 1)) as f64, -self.theta_hat) * z.powu(n - 2)
    }
}

/// The triple `(n, θ̂, c)` defining `{Im e^{-iθ̂}(x+iy)^n = c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicLevelSet {
    pub n: u32,
    pub theta_hat: f64,
    pub c: f64,
}

impl HarmonicLevelSet {
    pub fn new(n: u32, theta_hat: f64, c: f64) -> Self {
        assert!(n >= 2, "dimension must be at least 2");
        Self { n, theta_hat, c }
    }

    fn as_level(&self) -> ImaginaryLevel<RotatedPower> {
        ImaginaryLevel {
            map: RotatedPower { n: self.n, theta_hat: self.theta_hat },
            level: self.c,
        }
    }

    /// Angular distance from `p` to the ray union `{Im e^{-iθ̂} z^n = 0}`.
    pub fn angular_distance_to_rays(&self, p: PlanePoint) -> f64 {
        let n = self.n as f64;
        let spacing = std::f64::consts::PI / n;
        let phi = p.y.atan2(p.x) - self.theta_hat / n;
        let r = phi.rem_euclid(spacing);
        r.min(spacing - r)
    }
}

impl LevelFunction for HarmonicLevelSet {
    fn value(&self, p: PlanePoint) -> f64 {
        eval_f(self, p)
    }

    fn gradient(&self, p: PlanePoint) -> [f64; 2] {
        self.as_level().gradient(p)
    }

    fn hessian(&self, p: PlanePoint) -> [[f64; 2]; 2] {
        self.as_level().hessian(p)
    }
}

/// `Im(e^{-iθ̂}(x+iy)^n) − c`.
pub fn eval_f(spec: &HarmonicLevelSet, p: PlanePoint) -> f64 {
    spec.as_level().value(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    /// Arc-length step of the predictor.
    pub step: f64,
    /// The step is halved on corrector failure down to this size.
    pub min_step: f64,
    /// Newton stops once `|F| ≤ corrector_tol`.
    pub corrector_tol: f64,
    /// `|F(seed)|` above this is rejected outright.
    pub seed_tol: f64,
    /// Trace stops when `|∇F|` drops below this.
    pub singular_tol: f64,
    /// Convergence tolerance of the vertical-tangent refinement.
    pub vertical_tol: f64,
    pub max_points: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            step: 1e-2,
            min_step: 1e-7,
            corrector_tol: 1e-12,
            seed_tol: 1e-6,
            singular_tol: 1e-8,
            vertical_tol: 1e-10,
            max_points: 2_000_000,
        }
    }
}

impl TraceConfig {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }
}

/// How one end of a traced branch terminated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Window,
    Closed,
    PointLimit,
}

/// An ordered polyline sampled on one connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<PlanePoint>,
    pub is_closed: bool,
    /// Indices into `points` where the tangent is vertical.
    pub vertical_tangent_points: Vec<usize>,
    pub ends: [Termination; 2],
}

impl Branch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance from `p` to the polyline.
    pub fn distance_to(&self, p: PlanePoint) -> f64 {
        let mut best = f64::INFINITY;
        let segs = self.points.windows(2).map(|w| (w[0], w[1]));
        for (a, b) in segs {
            best = best.min(segment_distance(p, a, b));
        }
        if self.points.len() == 1 {
            best = p.distance(self.points[0]);
        }
        best
    }

    /// All `y` with `(x0, y)` on the branch, each refined onto the level set.
    pub fn crossings_at_x<F: LevelFunction + ?Sized>(&self, spec: &F, x0: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut pts = self.points.clone();
        if self.is_closed && !pts.is_empty() {
            pts.push(pts[0]);
        }
        for (i, w) in pts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let da = a.x - x0;
            let db = b.x - x0;
            if da == 0.0 {
                out.push(a.y);
                continue;
            }
            let last = i + 2 == pts.len();
            if last && db == 0.0 {
                out.push(b.y);
                continue;
            }
            if da * db < 0.0 {
                let t = da / (da - db);
                let y0 = a.y + t * (b.y - a.y);
                let y = solve_on_vertical(spec, x0, y0).unwrap_or(y0);
                out.push(y);
            }
        }
        out
    }
}

fn segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(PlanePoint::new(a.x + t * dx, a.y + t * dy))
}

fn norm2(g: [f64; 2]) -> f64 {
    g[0] * g[0] + g[1] * g[1]
}

/// Newton projection along the gradient onto `F = 0`.
fn correct<F: LevelFunction + ?Sized>(spec: &F, mut p: PlanePoint, cfg: &TraceConfig) -> Option<PlanePoint> {
    for _ in 0..30 {
        let v = spec.value(p);
        if v.abs() <= cfg.corrector_tol {
            return Some(p);
        }
        let g = spec.gradient(p);
        let gg = norm2(g);
        if gg < cfg.singular_tol * cfg.singular_tol {
            return None;
        }
        p = PlanePoint::new(p.x - v * g[0] / gg, p.y - v * g[1] / gg);
        if !p.is_finite() {
            return None;
        }
    }
    (spec.value(p).abs() <= cfg.corrector_tol * 1e3).then_some(p)
}

/// Solve `F(x0, y) = 0` by Newton in `y`, iterating to machine precision.
pub(crate) fn solve_on_vertical<F: LevelFunction + ?Sized>(spec: &F, x0: f64, mut y: f64) -> Option<f64> {
    for _ in 0..60 {
        let p = PlanePoint::new(x0, y);
        let v = spec.value(p);
        if v == 0.0 {
            return Some(y);
        }
        let fy = spec.gradient(p)[1];
        if fy == 0.0 {
            return None;
        }
        let dy = v / fy;
        y -= dy;
        if !y.is_finite() {
            return None;
        }
        if dy.abs() <= 4.0 * f64::EPSILON * y.abs().max(1e-300) {
            return Some(y);
        }
    }
    (spec.value(PlanePoint::new(x0, y)).abs() < 1e-9).then_some(y)
}

/// Solve `F(x, y0) = 0` by Newton in `x`.
pub(crate) fn solve_on_horizontal<F: LevelFunction + ?Sized>(spec: &F, mut x: f64, y0: f64) -> Option<f64> {
    for _ in 0..50 {
        let p = PlanePoint::new(x, y0);
        let v = spec.value(p);
        if v.abs() < 1e-13 {
            return Some(x);
        }
        let fx = spec.gradient(p)[0];
        if fx == 0.0 {
            return None;
        }
        x -= v / fx;
        if !x.is_finite() {
            return None;
        }
    }
    (spec.value(PlanePoint::new(x, y0)).abs() < 1e-9).then_some(x)
}

/// Unit tangent `(−F_y, F_x)/|∇F|`, flipped to agree with `prev`.
fn tangent<F: LevelFunction + ?Sized>(spec: &F, p: PlanePoint, prev: Option<[f64; 2]>) -> Option<[f64; 2]> {
    let g = spec.gradient(p);
    let n = norm2(g).sqrt();
    if !(n > 0.0) {
        return None;
    }
    let mut t = [-g[1] / n, g[0] / n];
    if let Some(d) = prev {
        if t[0] * d[0] + t[1] * d[1] < 0.0 {
            t = [-t[0], -t[1]];
        }
    }
    Some(t)
}

enum MarchEnd {
    Window,
    Closed,
    PointLimit,
    Singular(PlanePoint),
}

/// March from `start` in direction `dir` until leaving `window`, closing up on
/// `start`, or hitting a singular point. The returned points exclude `start`.
fn march<F: LevelFunction + ?Sized>(
    spec: &F,
    start: PlanePoint,
    dir: [f64; 2],
    window: &Window,
    cfg: &TraceConfig,
) -> (Vec<PlanePoint>, MarchEnd) {
    let mut out = Vec::new();
    let mut p = start;
    let mut t = dir;
    let mut h = cfg.step;
    let mut travelled = 0.0;
    loop {
        if out.len() >= cfg.max_points {
            return (out, MarchEnd::PointLimit);
        }
        let g = spec.gradient(p);
        if norm2(g).sqrt() < cfg.singular_tol {
            return (out, MarchEnd::Singular(p));
        }
        let mut accepted = None;
        while h >= cfg.min_step {
            let pred = PlanePoint::new(p.x + h * t[0], p.y + h * t[1]);
            if let Some(q) = correct(spec, pred, cfg) {
                let d = q.distance(p);
                let ok_dist = d > 0.25 * h && d < 1.5 * h;
                let new_t = tangent(spec, q, Some(t));
                let ok_turn = new_t.is_some_and(|nt| nt[0] * t[0] + nt[1] * t[1] > 0.9);
                if ok_dist && ok_turn {
                    accepted = Some((q, new_t.unwrap()));
                    break;
                }
                if new_t.is_none() || norm2(spec.gradient(q)).sqrt() < cfg.singular_tol {
                    return (out, MarchEnd::Singular(q));
                }
            }
            h *= 0.5;
        }
        let Some((q, nt)) = accepted else {
            return (out, MarchEnd::Singular(p));
        };

        if !window.contains(q) {
            if let Some(b) = clip_to_window(spec, p, q, window) {
                if b.distance(p) > 1e-14 {
                    out.push(b);
                }
            }
            return (out, MarchEnd::Window);
        }

        travelled += q.distance(p);
        // Closing up: back within one step of the start after a real excursion.
        if travelled > 4.0 * cfg.step && q.distance(start) < 0.75 * cfg.step {
            return (out, MarchEnd::Closed);
        }

        out.push(q);
        p = q;
        t = nt;
        h = (h * 2.0).min(cfg.step);
        if travelled > 1e3 * window.diameter() {
            return (out, MarchEnd::PointLimit);
        }
    }
}

/// Where the level set crosses the window boundary between `inside` and `outside`.
fn clip_to_window<F: LevelFunction + ?Sized>(
    spec: &F,
    inside: PlanePoint,
    outside: PlanePoint,
    window: &Window,
) -> Option<PlanePoint> {
    let (dx, dy) = (outside.x - inside.x, outside.y - inside.y);
    // Parameter at which each side is hit.
    let mut best: Option<(f64, usize)> = None;
    let mut consider = |t: f64, side: usize| {
        if (0.0..=1.0).contains(&t) && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, side));
        }
    };
    if outside.x < window.x_min && dx != 0.0 {
        consider((window.x_min - inside.x) / dx, 0);
    }
    if outside.x > window.x_max && dx != 0.0 {
        consider((window.x_max - inside.x) / dx, 1);
    }
    if outside.y < window.y_min && dy != 0.0 {
        consider((window.y_min - inside.y) / dy, 2);
    }
    if outside.y > window.y_max && dy != 0.0 {
        consider((window.y_max - inside.y) / dy, 3);
    }
    let (t, side) = best?;
    let guess = PlanePoint::new(inside.x + t * dx, inside.y + t * dy);
    let p = match side {
        0 => PlanePoint::new(window.x_min, solve_on_vertical(spec, window.x_min, guess.y)?),
        1 => PlanePoint::new(window.x_max, solve_on_vertical(spec, window.x_max, guess.y)?),
        2 => PlanePoint::new(solve_on_horizontal(spec, guess.x, window.y_min)?, window.y_min),
        _ => PlanePoint::new(solve_on_horizontal(spec, guess.x, window.y_max)?, window.y_max),
    };
    // Reject a boundary solve that jumped to another part of the curve.
    (p.distance(guess) <= 2.0 * inside.distance(outside) + 1e-12).then_some(p)
}

/// Newton on the system `F = 0, F_y = 0` from `p`.
fn refine_vertical<F: LevelFunction + ?Sized>(spec: &F, mut p: PlanePoint, tol: f64) -> Option<PlanePoint> {
    for _ in 0..40 {
        let v = spec.value(p);
        let g = spec.gradient(p);
        let hs = spec.hessian(p);
        // Jacobian of (F, F_y).
        let (a, b, c, d) = (g[0], g[1], hs[1][0], hs[1][1]);
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let (r0, r1) = (v, g[1]);
        let dx = (d * r0 - b * r1) / det;
        let dy = (-c * r0 + a * r1) / det;
        p = PlanePoint::new(p.x - dx, p.y - dy);
        if dx.hypot(dy) < tol {
            return Some(p);
        }
    }
    None
}

/// Replace each sample where `Δx` changes sign by the exact vertical-tangent point.
fn mark_vertical_tangents<F: LevelFunction + ?Sized>(
    spec: &F,
    points: &mut [PlanePoint],
    closed: bool,
    cfg: &TraceConfig,
) -> Vec<usize> {
    let n = points.len();
    let mut marks = Vec::new();
    if n < 3 {
        return marks;
    }
    let range = if closed { 0..n } else { 1..n - 1 };
    for i in range {
        let prev = points[(i + n - 1) % n];
        let next = points[(i + 1) % n];
        let cur = points[i];
        let d0 = cur.x - prev.x;
        let d1 = next.x - cur.x;
        if d0 * d1 < 0.0 || (d0 == 0.0 && d1 != 0.0 && i > 0) {
            if marks.last().is_some_and(|&j: &usize| j + 1 == i) {
                continue;
            }
            let local = prev.distance(cur).max(cur.distance(next));
            match refine_vertical(spec, cur, cfg.vertical_tol) {
                Some(v) if v.distance(cur) <= local => points[i] = v,
                _ => {}
            }
            marks.push(i);
        }
    }
    marks
}

/// Follow the connected component of `{F = 0}` through `seed` inside `window`.
///
/// Points are ordered from one end of the component to the other; for an open
/// branch both ends lie on the window boundary.
pub fn trace_component<F: LevelFunction + ?Sized>(
    spec: &F,
    seed: PlanePoint,
    window: &Window,
    cfg: &TraceConfig,
) -> Result<Branch> {
    let residual = spec.value(seed);
    let seed_err = || LevelSetError::SeedOffLevelSet { x: seed.x, y: seed.y, residual };
    if !(residual.abs() <= cfg.seed_tol) {
        return Err(seed_err());
    }
    let start = correct(spec, seed, cfg).ok_or_else(seed_err)?;
    let t0 = tangent(spec, start, None).ok_or_else(seed_err)?;

    let (fwd, fwd_end) = march(spec, start, t0, window, cfg);
    let closed = matches!(fwd_end, MarchEnd::Closed);
    let (bwd, bwd_end) = if closed {
        (Vec::new(), MarchEnd::Closed)
    } else {
        march(spec, start, [-t0[0], -t0[1]], window, cfg)
    };

    let mut points: Vec<PlanePoint> = bwd.into_iter().rev().collect();
    points.push(start);
    points.extend(fwd);

    let to_term = |e: &MarchEnd| match e {
        MarchEnd::Window => Termination::Window,
        MarchEnd::Closed => Termination::Closed,
        _ => Termination::PointLimit,
    };
    let ends = [to_term(&bwd_end), to_term(&fwd_end)];
    let vertical = mark_vertical_tangents(spec, &mut points, closed, cfg);
    let branch = Branch { points, is_closed: closed, vertical_tangent_points: vertical, ends };

    for end in [&bwd_end, &fwd_end] {
        if let MarchEnd::Singular(at) = end {
            return Err(LevelSetError::SingularPoint { at: *at, partial: Box::new(branch) });
        }
    }
    Ok(branch)
}

/// Trace every component of `{F = 0}` meeting `window`.
///
/// Seeds are the sign changes of `F` along the edges of a `grid × grid`
/// lattice; a seed already within `dedup_tol` of a traced component is
/// skipped. Components through singular points are returned split at the
/// singular point, one branch per side.
pub fn trace_all_components<F: LevelFunction + ?Sized>(
    spec: &F,
    window: &Window,
    grid: usize,
    cfg: &TraceConfig,
) -> Vec<Branch> {
    let grid = grid.max(2);
    let xs: Vec<f64> = (0..=grid)
        .map(|i| window.x_min + (window.x_max - window.x_min) * i as f64 / grid as f64)
        .collect();
    let ys: Vec<f64> = (0..=grid)
        .map(|j| window.y_min + (window.y_max - window.y_min) * j as f64 / grid as f64)
        .collect();
    let cell = (xs[1] - xs[0]).min(ys[1] - ys[0]);
    let dedup_tol = (0.5 * cell).max(4.0 * cfg.step);

    let mut seeds = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            let p = PlanePoint::new(x, y);
            let v = spec.value(p);
            if i + 1 < xs.len() {
                let q = PlanePoint::new(xs[i + 1], y);
                if v * spec.value(q) <= 0.0 {
                    if let Some(x0) = bisect(|s| spec.value(PlanePoint::new(s, y)), x, xs[i + 1]) {
                        seeds.push(PlanePoint::new(x0, y));
                    }
                }
            }
            if j + 1 < ys.len() {
                let q = PlanePoint::new(x, ys[j + 1]);
                if v * spec.value(q) <= 0.0 {
                    if let Some(y0) = bisect(|s| spec.value(PlanePoint::new(x, s)), y, ys[j + 1]) {
                        seeds.push(PlanePoint::new(x, y0));
                    }
                }
            }
        }
    }

    let mut branches: Vec<Branch> = Vec::new();
    for seed in seeds {
        if branches.iter().any(|b| b.distance_to(seed) < dedup_tol) {
            continue;
        }
        let Some(seed) = correct(spec, seed, cfg) else { continue };
        if norm2(spec.gradient(seed)).sqrt() < cfg.singular_tol {
            continue;
        }
        match trace_component(spec, seed, window, cfg) {
            Ok(b) => branches.push(b),
            Err(LevelSetError::SingularPoint { partial, .. }) => branches.push(*partial),
            Err(_) => {}
        }
    }
    branches
}

/// Whether `a` and `b` lie on the same connected component of `{F = 0}` within
/// `window`: traces from `a` and checks that the branch passes within
/// `0.5·step` of `b`.
pub fn same_component<F: LevelFunction + ?Sized>(
    spec: &F,
    a: PlanePoint,
    b: PlanePoint,
    window: &Window,
    cfg: &TraceConfig,
) -> Result<bool> {
    if a.distance(b) <= 0.5 * cfg.step {
        return Ok(true);
    }
    let branch = trace_component(spec, a, window, cfg)?;
    Ok(branch.distance_to(b) <= 0.5 * cfg.step)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo * fhi > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-15 * (1.0 + mid.abs()) {
            return Some(mid);
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Some(0.5 * (lo + hi))
}

/// A graphical branch `y = f(x)` over `[x_lo, x_hi]`.
///
/// `lo_vertical`/`hi_vertical` record that the profile ends at a vertical
/// tangent, where `f'` is infinite and one-sided limits are used.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumProfile {
    pub x_lo: f64,
    pub x_hi: f64,
    /// `(x, f(x))` with strictly increasing `x`.
    pub samples: Vec<(f64, f64)>,
    pub lo_vertical: bool,
    pub hi_vertical: bool,
}

impl MomentumProfile {
    /// Build from samples sorted by increasing `x`.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 || samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(LevelSetError::DegenerateBranch);
        }
        if samples.iter().any(|s| !s.1.is_finite()) {
            return Err(LevelSetError::DegenerateBranch);
        }
        Ok(Self {
            x_lo: samples[0].0,
            x_hi: samples[samples.len() - 1].0,
            samples,
            lo_vertical: false,
            hi_vertical: false,
        })
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.x_hi.abs());
        if x < self.x_lo - slack || x > self.x_hi + slack || x.is_nan() {
            return Err(LevelSetError::OutOfDomain { x, lo: self.x_lo, hi: self.x_hi });
        }
        Ok(())
    }

    /// The three samples used for the local quadratic at `x`.
    fn stencil(&self, x: f64) -> [usize; 3] {
        let n = self.samples.len();
        let i = self.samples.partition_point(|s| s.0 < x);
        let mid = i.clamp(1, n.saturating_sub(2).max(1));
        if n == 2 {
            return [0, 1, 1];
        }
        // Pick the nearer of the two candidate centres.
        let c = if mid + 1 < n && (x - self.samples[mid].0).abs() > (self.samples[mid + 1].0 - x).abs() {
            (mid + 1).min(n - 2)
        } else {
            mid
        };
        [c - 1, c, c + 1]
    }

    /// Value and slope at `x` from the local quadratic through three samples.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        self.check_domain(x)?;
        let [i0, i1, i2] = self.stencil(x);
        let (x0, y0) = self.samples[i0];
        let (x1, y1) = self.samples[i1];
        if i1 == i2 {
            let s = (y1 - y0) / (x1 - x0);
            return Ok((y0 + s * (x - x0), s));
        }
        let (x2, y2) = self.samples[i2];
        let l0 = ((x - x1) * (x - x2)) / ((x0 - x1) * (x0 - x2));
        let l1 = ((x - x0) * (x - x2)) / ((x1 - x0) * (x1 - x2));
        let l2 = ((x - x0) * (x - x1)) / ((x2 - x0) * (x2 - x1));
        let d0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let d1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let d2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        Ok((y0 * l0 + y1 * l1 + y2 * l2, y0 * d0 + y1 * d1 + y2 * d2))
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.eval(x).map(|v| v.0)
    }

    /// Largest `|Im e^{-iθ̂}(x + i f(x))^n − c|` over the samples.
    pub fn level_residual(&self, spec: &HarmonicLevelSet) -> f64 {
        self.samples
            .iter()
            .map(|&(x, y)| eval_f(spec, PlanePoint::new(x, y)).abs())
            .fold(0.0, f64::max)
    }

    /// Sign of `f'` as `x` approaches the lower endpoint (for `lo_vertical`).
    fn lo_slope_sign(&self) -> f64 {
        (self.samples[1].1 - self.samples[0].1).signum()
    }

    fn hi_slope_sign(&self) -> f64 {
        let n = self.samples.len();
        (self.samples[n - 1].1 - self.samples[n - 2].1).signum()
    }

    /// `arctan f'(x)`, with `±π/2` at vertical endpoints.
    pub(crate) fn slope_angle(&self, x: f64) -> Result<(f64, f64)> {
        use std::f64::consts::FRAC_PI_2;
        self.check_domain(x)?;
        let eps = 1e-12 * (1.0 + self.x_hi.abs());
        if self.lo_vertical && (x - self.x_lo).abs() <= eps {
            return Ok((self.samples[0].1, self.lo_slope_sign() * FRAC_PI_2));
        }
        if self.hi_vertical && (x - self.x_hi).abs() <= eps {
            let n = self.samples.len();
            return Ok((self.samples[n - 1].1, self.hi_slope_sign() * FRAC_PI_2));
        }
        let (f, df) = self.eval(x)?;
        Ok((f, df.atan()))
    }
}

/// Split a branch at its vertical tangents into maximal graphical pieces.
///
/// A split point is the shared endpoint of the two pieces meeting there, so
/// the union of the returned sample sets is exactly the branch point set.
/// Profiles are returned in branch order; `critical_x` lists the split
/// abscissae.
pub fn split_graphical(branch: &Branch) -> Result<(Vec<MomentumProfile>, Vec<f64>)> {
    if branch.points.len() < 2 {
        return Err(LevelSetError::DegenerateBranch);
    }
    let mut cuts: Vec<usize> = branch.vertical_tangent_points.clone();
    cuts.sort_unstable();
    let pts = &branch.points;

    let mut pieces: Vec<Vec<PlanePoint>> = Vec::new();
    if branch.is_closed && !cuts.is_empty() {
        // Rotate so the walk starts at the first cut and wraps around.
        let n = pts.len();
        let first = cuts[0];
        let mut bounds: Vec<usize> = cuts.iter().map(|&c| c - first).collect();
        bounds.push(n);
        for w in bounds.windows(2) {
            let piece: Vec<PlanePoint> = (w[0]..=w[1]).map(|k| pts[(k + first) % n]).collect();
            pieces.push(piece);
        }
    } else {
        let mut start = 0;
        for &c in &cuts {
            pieces.push(pts[start..=c].to_vec());
            start = c;
        }
        pieces.push(pts[start..].to_vec());
    }

    let mut profiles = Vec::with_capacity(pieces.len());
    for (k, piece) in pieces.iter().enumerate() {
        if piece.len() < 2 {
            continue;
        }
        let mut samples: Vec<(f64, f64)> = piece.iter().map(|p| (p.x, p.y)).collect();
        let reversed = samples[0].0 > samples[samples.len() - 1].0;
        if reversed {
            samples.reverse();
        }
        let mut prof = MomentumProfile::from_samples(samples)?;
        let starts_at_cut = branch.is_closed || k > 0;
        let ends_at_cut = branch.is_closed || k + 1 < pieces.len();
        let (lo_cut, hi_cut) = if reversed { (ends_at_cut, starts_at_cut) } else { (starts_at_cut, ends_at_cut) };
        prof.lo_vertical = lo_cut && !cuts.is_empty();
        prof.hi_vertical = hi_cut && !cuts.is_empty();
        profiles.push(prof);
    }
    if profiles.is_empty() {
        return Err(LevelSetError::DegenerateBranch);
    }
    let critical_x = cuts.iter().map(|&c| pts[c].x).collect();
    Ok((profiles, critical_x))
}

/// `ϑ = (n−1)·arctan(f/x) + arctan f'` at `x`.
///
/// At an endpoint flagged vertical the slope term is the one-sided limit
/// `±π/2`, the sign following the direction in which the profile leaves it.
pub fn lifted_angle(profile: &MomentumProfile, n: u32, x: f64) -> Result<f64> {
    let (f, slope_angle) = profile.slope_angle(x)?;
    Ok((n as f64 - 1.0) * f.atan2(x) + slope_angle)
}

/// Follow the graph of the level set over the given abscissae.
///
/// Starts from `(xs[0], y0)` and solves `F(x, y) = 0` for `y` at each
/// successive `x`, seeding Newton with the implicit-function slope. `xs` may
/// be increasing or decreasing; the returned profile is sorted by `x`.
pub fn graph_over<F: LevelFunction + ?Sized>(spec: &F, xs: &[f64], y0: f64) -> Result<MomentumProfile> {
    let mut ys = Vec::with_capacity(xs.len());
    let mut y = solve_on_vertical(spec, xs[0], y0).ok_or(LevelSetError::GraphLost { x: xs[0] })?;
    ys.push(y);
    for w in xs.windows(2) {
        let (x_prev, x) = (w[0], w[1]);
        let g = spec.gradient(PlanePoint::new(x_prev, y));
        let slope = if g[1] != 0.0 { -g[0] / g[1] } else { 0.0 };
        let guess = y + slope * (x - x_prev);
        y = solve_on_vertical(spec, x, guess).ok_or(LevelSetError::GraphLost { x })?;
        ys.push(y);
    }
    let mut samples: Vec<(f64, f64)> = xs.iter().copied().zip(ys).collect();
    if samples.len() > 1 && samples[0].0 > samples[samples.len() - 1].0 {
        samples.reverse();
    }
    MomentumProfile::from_samples(samples)
}

/// Write points as `x,y` CSV with 17 significant digits.
pub fn write_points_csv<W: Write>(mut w: W, points: impl IntoIterator<Item = PlanePoint>) -> io::Result<()> {
    writeln!(w, "x,y")?;
    for p in points {
        writeln!(w, "{},{}", fmt_f64(p.x), fmt_f64(p.y))?;
    }
    Ok(())
}

pub fn write_branch_csv<W: Write>(w: W, branch: &Branch) -> io::Result<()> {
    write_points_csv(w, branch.points.iter().copied())
}

pub fn write_profile_csv<W: Write>(w: W, profile: &MomentumProfile) -> io::Result<()> {
    write_points_csv(w, profile.samples.iter().map(|&(x, y)| PlanePoint::new(x, y)))
}

/// Read back the output of [`write_points_csv`].
pub fn read_points_csv<R: BufRead>(r: R) -> Result<Vec<PlanePoint>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "x,y" {
                return Err(LevelSetError::Csv { line: 1, reason: format!("expected header x,y, got {line:?}") });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| LevelSetError::Csv { line: i + 1, reason: reason.to_string() };
        let (xs, ys) = line.split_once(',').ok_or_else(|| bad("expected two columns"))?;
        let x = xs.trim().parse().map_err(|_| bad("bad x"))?;
        let y = ys.trim().parse().map_err(|_| bad("bad y"))?;
        out.push(PlanePoint::new(x, y));
    }
    Ok(out)
}

/// Decimal float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn hyperbola() -> HarmonicLevelSet {
        HarmonicLevelSet::new(2, FRAC_PI_4, -SQRT_2)
    }

    #[test]
    fn eval_f_examples() {
        let spec = HarmonicLevelSet::new(2, FRAC_PI_2, 0.0);
        assert!((eval_f(&spec, PlanePoint::new(1.0, 0.0)) + 1.0).abs() < 1e-15);
        assert!(eval_f(&hyperbola(), PlanePoint::new(1.0, -1.0)).abs() < 1e-14);
        let cubic = HarmonicLevelSet::new(3, 0.0, 0.0);
        for x in [-3.0, -0.5, 0.0, 2.0, 17.0] {
            assert_eq!(eval_f(&cubic, PlanePoint::new(x, 0.0)), 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = HarmonicLevelSet::new(4, 1.0, 0.3);
        let p = PlanePoint::new(0.7, -0.4);
        let g = spec.gradient(p);
        let h = 1e-6;
        let fx = (eval_f(&spec, PlanePoint::new(p.x + h, p.y)) - eval_f(&spec, PlanePoint::new(p.x - h, p.y))) / (2.0 * h);
        let fy = (eval_f(&spec, PlanePoint::new(p.x, p.y + h)) - eval_f(&spec, PlanePoint::new(p.x, p.y - h))) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-8 && (g[1] - fy).abs() < 1e-8);
        let hs = spec.hessian(p);
        let gx = spec.gradient(PlanePoint::new(p.x + h, p.y));
        let gm = spec.gradient(PlanePoint::new(p.x - h, p.y));
        assert!((hs[0][0] - (gx[0] - gm[0]) / (2.0 * h)).abs() < 1e-7);
        assert!((hs[1][0] - (gx[1] - gm[1]) / (2.0 * h)).abs() < 1e-7);
    }

    #[test]
    fn hyperbola_branch_has_vertical_tangent_at_critical_point() {
        let spec = hyperbola();
        let window = Window::new(0.5, 3.0, -4.0, 4.0);
        let cfg = TraceConfig::default();
        let b = trace_component(&spec, PlanePoint::new(SQRT_2, 0.0), &window, &cfg).unwrap();
        assert!(!b.is_closed);
        assert_eq!(b.ends, [Termination::Window, Termination::Window]);
        for p in &b.points {
            assert!(eval_f(&spec, *p).abs() <= 1e-11, "off level at {p}");
        }
        for w in b.points.windows(2) {
            assert!(w[0].distance(w[1]) <= 1.5 * cfg.step);
        }
        assert!(b.distance_to(PlanePoint::new(SQRT_2, 0.0)) < 1e-12);
        assert_eq!(b.vertical_tangent_points.len(), 1);
        let v = b.points[b.vertical_tangent_points[0]];
        assert!(v.distance(PlanePoint::new(1.0, -1.0)) < 1e-10, "{v}");
        assert!(spec.gradient(v)[1].abs() < 1e-9);
    }

    #[test]
    fn seed_off_level_set_is_rejected() {
        let err = trace_component(&hyperbola(), PlanePoint::new(2.0, 2.0), &Window::new(0.0, 3.0, -3.0, 3.0), &TraceConfig::default());
        assert!(matches!(err, Err(LevelSetError::SeedOffLevelSet { .. })));
    }

    #[test]
    fn zero_level_traces_straight_rays() {
        let theta = 0.7;
        let spec = HarmonicLevelSet::new(3, theta, 0.0);
        let dir = theta / 3.0;
        let seed = PlanePoint::new(1.5 * dir.cos(), 1.5 * dir.sin());
        let b = trace_component(&spec, seed, &Window::new(0.5, 3.0, -3.0, 3.0), &TraceConfig::default()).unwrap();
        for p in &b.points {
            // Collinear with the origin along angle θ/3.
            let cross = p.x * dir.sin() - p.y * dir.cos();
            assert!(cross.abs() < 1e-10);
        }
    }

    #[test]
    fn ray_through_origin_reports_singular_point() {
        let spec = HarmonicLevelSet::new(2, 0.0, 0.0);
        let r = trace_component(&spec, PlanePoint::new(1.0, 0.0), &Window::new(-2.0, 2.0, -1.0, 1.0), &TraceConfig::default());
        match r {
            Err(LevelSetError::SingularPoint { at, partial }) => {
                assert!(at.distance(PlanePoint::new(0.0, 0.0)) < 1e-3);
                assert!(!partial.points.is_empty());
            }
            other => panic!("expected singular point, got {other:?}"),
        }
    }

    #[test]
    fn split_hyperbola_into_two_profiles() {
        let spec = hyperbola();
        let window = Window::new(0.5, SQRT_2, -4.0, 4.0);
        let b = trace_component(&spec, PlanePoint::new(SQRT_2, 0.0), &window, &TraceConfig::default()).unwrap();
        let (profiles, crit) = split_graphical(&b).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(crit.len(), 1);
        assert!((crit[0] - 1.0).abs() < 1e-10);
        for p in &profiles {
            assert!((p.x_lo - 1.0).abs() < 1e-10);
            assert!((p.x_hi - SQRT_2).abs() < 1e-12);
            assert!(p.lo_vertical && !p.hi_vertical);
        }
    }

    #[test]
    fn graphical_branch_is_one_profile() {
        let spec = HarmonicLevelSet::new(2, FRAC_PI_4, -SQRT_2);
        let b = trace_component(&spec, PlanePoint::new(2.0, spec_y(&spec, 2.0, 1.0)), &Window::new(1.5, 3.0, -1.0, 4.0), &TraceConfig::default()).unwrap();
        assert!(b.vertical_tangent_points.is_empty());
        let (profiles, crit) = split_graphical(&b).unwrap();
        assert_eq!(profiles.len(), 1);
        assert!(crit.is_empty());
    }

    fn spec_y(spec: &HarmonicLevelSet, x: f64, guess: f64) -> f64 {
        solve_on_vertical(spec, x, guess).unwrap()
    }

    /// A circle: not harmonic, but it exercises closed-branch handling.
    struct Circle;

    impl LevelFunction for Circle {
        fn value(&self, p: PlanePoint) -> f64 {
            (p.x - 2.0).powi(2) + p.y * p.y - 1.0
        }
        fn gradient(&self, p: PlanePoint) -> [f64; 2] {
            [2.0 * (p.x - 2.0), 2.0 * p.y]
        }
        fn hessian(&self, _: PlanePoint) -> [[f64; 2]; 2] {
            [[2.0, 0.0], [0.0, 2.0]]
        }
    }

    #[test]
    fn closed_oval_splits_into_two_profiles_over_same_interval() {
        let b = trace_component(&Circle, PlanePoint::new(2.0, 1.0), &Window::new(0.0, 4.0, -2.0, 2.0), &TraceConfig::default()).unwrap();
        assert!(b.is_closed);
        // Count tangencies by sign changes of x-increments.
        let n = b.points.len();
        let changes = (0..n)
            .filter(|&i| {
                let a = b.points[(i + n - 1) % n];
                let c = b.points[i];
                let d = b.points[(i + 1) % n];
                (c.x - a.x) * (d.x - c.x) < 0.0
            })
            .count();
        assert_eq!(changes, 2);
        assert_eq!(b.vertical_tangent_points.len(), 2);
        let (profiles, crit) = split_graphical(&b).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(crit.len(), 2);
        for p in &profiles {
            assert!((p.x_lo - 1.0).abs() < 1e-9 && (p.x_hi - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn vertical_segment_is_degenerate() {
        let pts = vec![PlanePoint::new(1.0, 0.0), PlanePoint::new(1.0, 1.0), PlanePoint::new(1.0, 2.0)];
        let b = Branch { points: pts, is_closed: false, vertical_tangent_points: vec![], ends: [Termination::Window; 2] };
        assert!(matches!(split_graphical(&b), Err(LevelSetError::DegenerateBranch)));
    }

    #[test]
    fn lifted_angle_of_flat_profile_is_zero() {
        let p = MomentumProfile::from_samples((0..=10).map(|i| (1.0 + i as f64 * 0.1, 0.0)).collect()).unwrap();
        assert_eq!(lifted_angle(&p, 3, 1.5).unwrap(), 0.0);
        assert!(matches!(lifted_angle(&p, 3, 2.5), Err(LevelSetError::OutOfDomain { .. })));
    }

    #[test]
    fn lifted_angle_endpoint_limit_at_critical_point() {
        // n = 2, θ̂ = π/6: level c = −2, critical point (1, −√3).
        let theta: f64 = PI / 6.0;
        let spec = HarmonicLevelSet::new(2, theta, -2.0);
        let q = -(3f64.sqrt());
        let b = trace_component(&spec, PlanePoint::new(2.0, 0.0), &Window::new(0.5, 2.0, -8.0, 2.0), &TraceConfig::with_step(2e-3)).unwrap();
        let (profiles, _) = split_graphical(&b).unwrap();
        let lower = profiles.iter().find(|p| p.samples.last().unwrap().1 < -1.0).unwrap();
        let upper = profiles.iter().find(|p| p.samples.last().unwrap().1 > -1.0).unwrap();
        assert!((lower.samples[0].1 - q).abs() < 1e-9);
        let v1 = lifted_angle(lower, 2, lower.x_lo).unwrap();
        let v2 = lifted_angle(upper, 2, upper.x_lo).unwrap();
        assert!((v1 - (theta - PI)).abs() < 1e-9, "{v1}");
        assert!((v2 - theta).abs() < 1e-9, "{v2}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = vec![PlanePoint::new(1.0 / 3.0, -2.0f64.sqrt()), PlanePoint::new(1e-300, 7.5e12)];
        let mut buf = Vec::new();
        write_points_csv(&mut buf, pts.iter().copied()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y\n"));
        let back = read_points_csv(buf.as_slice()).unwrap();
        assert_eq!(back, pts);
    }
}
