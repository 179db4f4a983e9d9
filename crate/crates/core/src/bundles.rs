//! Split Fano bundles `X_{r,m}`.
//!
//! On the projectivisation of `O ⊕ O(−1)^{r+1}` over `P^m`, Calabi-symmetric
//! dHYM solutions correspond to graphical pieces of the level set
//! `{Im w = 0}` of
//!
//! ```text
//! w(z) = e^{-iθ̂} P_ξ(z),   P_ξ(z) = ∫₀^z (ξ + s)^m s^r ds,
//! ```
//!
//! over the momentum interval `[0, b]`, where `ξ = ξ₁ + iξ₂` with `ξ₁ > 0`.
//! The relevant branch `B` of the level set is the one with a vertical
//! tangent at `z = 0`; it meets `{x = b}` at `b + iq` and `b + iq′`.
//!
//! The central charge of a line bundle with fibre parameter `q_L` is a
//! positive multiple of `P_ξ(b + iq_L)`. The multiple (half the volume of a
//! sphere bundle) is never computed: only arguments are used.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::levelset::{
    self, Branch, Holomorphic, ImaginaryLevel, LevelFunction, LevelSetError, MomentumProfile, PlanePoint, TraceConfig,
    Window,
};
use crate::rational;

/// Default smallness window: `b ≤ SMALL_B_FRACTION·|ξ|`.
pub const SMALL_B_FRACTION: f64 = 0.05;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("invalid bundle parameters: {0}")]
    InvalidParams(String),
    #[error("the vertical branch leaves the window before reaching x = {b} (side {side})")]
    BranchEscapesWindow { b: f64, side: &'static str },
    #[error("θ̂ = {theta_hat} does not give a vertical tangent at 0 (nearest admissible {nearest})")]
    NotVertical { theta_hat: f64, nearest: f64 },
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
}

pub type Result<T> = std::result::Result<T, BundleError>;

/// Data `(r, m, ξ, b, θ̂)` of a split Fano bundle problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleParams {
    pub r: u32,
    pub m: u32,
    pub xi: Complex64,
    pub b: f64,
    pub theta_hat: f64,
}

impl BundleParams {
    /// Validate `m ≥ 1`, `ξ₁ > 0` and `b > 0`.
    pub fn new(r: u32, m: u32, xi: Complex64, b: f64, theta_hat: f64) -> Result<Self> {
        let bad = |s: &str| Err(BundleError::InvalidParams(s.to_string()));
        if m < 1 {
            return bad("m must be at least 1");
        }
        if !(xi.re > 0.0) || !xi.im.is_finite() {
            return bad("ξ₁ must be positive");
        }
        if !(b > 0.0) || !b.is_finite() {
            return bad("b must be positive");
        }
        if !theta_hat.is_finite() {
            return bad("θ̂ must be finite");
        }
        Ok(Self { r, m, xi, b, theta_hat })
    }

    /// The same problem with `θ̂` chosen so that `B` has a vertical tangent at 0.
    pub fn with_vertical_branch(r: u32, m: u32, xi: Complex64, b: f64) -> Result<Self> {
        let theta = default_vertical_theta(m, r, xi.arg());
        Self::new(r, m, xi, b, theta)
    }

    /// `r < m`: the bundle is Fano.
    pub fn is_fano(&self) -> bool {
        self.r < self.m
    }

    /// `r + 2` even, the parity assumed by the monotonicity statement.
    pub fn has_even_parity(&self) -> bool {
        self.r.is_multiple_of(2)
    }

    /// `ψ = arg ξ`.
    pub fn psi(&self) -> f64 {
        self.xi.arg()
    }

    /// `ϑ₁ = mψ + (r+1)π/2`, the lifted angle of the upper section at 0.
    pub fn upper_phase(&self) -> f64 {
        self.m as f64 * self.psi() + (self.r as f64 + 1.0) * FRAC_PI_2
    }

    /// `ϑ₂ = mψ − (r+1)π/2`, the lifted angle of the lower section at 0.
    pub fn lower_phase(&self) -> f64 {
        self.m as f64 * self.psi() - (self.r as f64 + 1.0) * FRAC_PI_2
    }

    /// Distance of `ϑ₁` from the non-generic set `(2r′+1)π`.
    pub fn non_generic_distance(&self) -> f64 {
        let t = (self.upper_phase() - PI).rem_euclid(2.0 * PI);
        t.min(2.0 * PI - t)
    }

    /// Which half plane `ϑ₁` lies in modulo `2π`.
    pub fn phase_case(&self) -> PhaseCase {
        if self.upper_phase().rem_euclid(2.0 * PI) > PI {
            PhaseCase::LowerHalf
        } else {
            PhaseCase::UpperHalf
        }
    }

    /// Whether `b ≤ SMALL_B_FRACTION·|ξ|`.
    pub fn in_small_window(&self) -> bool {
        self.b <= SMALL_B_FRACTION * self.xi.norm()
    }

    /// Length scale `ρ = max(b, √(b|ξ|))` of the branch `B` up to `{x = b}`.
    ///
    /// `B` is vertical at 0 and bends on the scale `|ξ|`, so it reaches
    /// `x = b` at heights of order `√(b|ξ|)`, which dominates `b` when `b` is
    /// small.
    pub fn branch_scale(&self) -> f64 {
        self.b.max((self.b * self.xi.norm()).sqrt())
    }

    /// `z ↦ e^{-iθ̂} P_ξ(z)`, normalised to be of unit size at `|z| = ρ`
    /// (see [`BundleParams::branch_scale`]).
    pub fn map(&self) -> BundleMap {
        let rho = self.branch_scale();
        let scale = self.xi.norm().powi(self.m as i32) * rho.powi(self.r as i32 + 1) / (self.r as f64 + 1.0);
        BundleMap { poly: poly_p(self.xi, self.m, self.r), theta_hat: self.theta_hat, scale: 1.0 / scale }
    }

    /// The level set `{Im w = 0}`.
    pub fn level(&self) -> ImaginaryLevel<BundleMap> {
        ImaginaryLevel { map: self.map(), level: 0.0 }
    }
}

impl fmt::Display for BundleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "r = {}, m = {}, ξ = {} {} {}i, b = {}, θ̂ = {}",
            self.r,
            self.m,
            self.xi.re,
            if self.xi.im < 0.0 { '-' } else { '+' },
            self.xi.im.abs(),
            self.b,
            self.theta_hat
        )
    }
}

/// The half plane containing `mψ + (r+1)π/2` modulo `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseCase {
    /// `(−π, 0)`: `arg Z(L₁) < arg Z(L₂[1])` is the destabilising inequality.
    LowerHalf,
    /// `(0, π)`: `arg Z(L₂) < arg Z(L₁[1])`.
    UpperHalf,
}

impl PhaseCase {
    /// Signs of `∂_{ξ₁} arg P_ξ` at `(q, q′)` asserted in this case.
    pub fn expected_signs(self) -> (i8, i8) {
        match self {
            PhaseCase::LowerHalf => (1, -1),
            PhaseCase::UpperHalf => (-1, 1),
        }
    }
}

/// A polynomial with complex coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyP {
    pub coefficients: Vec<Complex64>,
}

impl PolyP {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> PolyP {
        let coefficients = self.coefficients.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
        PolyP { coefficients }
    }
}

/// `P_ξ(z) = ∫₀^z (ξ + s)^m s^r ds = Σ_j C(m, j) ξ^{m−j} z^{j+r+1}/(j+r+1)`.
pub fn poly_p(xi: Complex64, m: u32, r: u32) -> PolyP {
    let deg = (m + r + 1) as usize;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); deg + 1];
    let mut binom = 1.0;
    for j in 0..=m {
        let k = (j + r + 1) as usize;
        coefficients[k] = xi.powu(m - j) * (binom / k as f64);
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    PolyP { coefficients }
}

/// `z ↦ scale · e^{-iθ̂} P(z)`; the positive scale only normalises values.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleMap {
    pub poly: PolyP,
    pub theta_hat: f64,
    pub scale: f64,
}

impl Holomorphic for BundleMap {
    fn value(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(self.scale, -self.theta_hat) * self.poly.eval(z)
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(self.scale, -self.theta_hat) * self.poly.derivative().eval(z)
    }

    fn second_derivative(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(self.scale, -self.theta_hat) * self.poly.derivative().derivative().eval(z)
    }
}

/// The representatives in `(−π, π]` of `θ̂ ≡ mψ + (r+1)π/2 (mod π)`.
pub fn vertical_branch_thetas(m: u32, r: u32, psi: f64) -> Vec<f64> {
    let base = (m as f64 * psi + (r as f64 + 1.0) * FRAC_PI_2).rem_euclid(PI);
    let mut out = vec![base - PI, base];
    if base == 0.0 {
        out = vec![0.0, PI];
    }
    out.retain(|t| *t > -PI && *t <= PI);
    out
}

/// The smallest non-negative representative of the vertical family.
pub fn default_vertical_theta(m: u32, r: u32, psi: f64) -> f64 {
    (m as f64 * psi + (r as f64 + 1.0) * FRAC_PI_2).rem_euclid(PI)
}

/// Data normalised by `z = ξ₁ z̃`, so that `ξ̃ = 1 + iη`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledBundle {
    pub params: BundleParams,
    /// The original `ξ₁`.
    pub scale: f64,
}

impl RescaledBundle {
    /// `η = ξ₂/ξ₁`.
    pub fn eta(&self) -> f64 {
        self.params.xi.im
    }

    pub fn to_original(&self, z: PlanePoint) -> PlanePoint {
        PlanePoint::new(z.x * self.scale, z.y * self.scale)
    }

    pub fn to_rescaled(&self, z: PlanePoint) -> PlanePoint {
        PlanePoint::new(z.x / self.scale, z.y / self.scale)
    }

    /// Undo the rescaling.
    pub fn inverse(&self) -> BundleParams {
        let p = self.params;
        BundleParams { xi: p.xi * self.scale, b: p.b * self.scale, ..p }
    }
}

/// Apply `z = ξ₁ z̃`: `w(z) = ξ₁^{m+r+1} w̃(z/ξ₁)`, the momentum interval
/// becomes `[0, b/ξ₁]` and `ξ` becomes `1 + iη`.
pub fn rescale_to_unit(params: &BundleParams) -> RescaledBundle {
    let s = params.xi.re;
    RescaledBundle {
        params: BundleParams { xi: Complex64::new(1.0, params.xi.im / s), b: params.b / s, ..*params },
        scale: s,
    }
}

/// `arg P_ξ(b + i q_L)`: the argument of the charge of a line bundle with
/// fibre parameter `q_L`, up to a positive factor.
pub fn bundle_charge_arg(params: &BundleParams, q_l: f64) -> f64 {
    poly_p(params.xi, params.m, params.r).eval(Complex64::new(params.b, q_l)).arg()
}

/// Leading-order approximation `m·arg ξ + (r+1)·arg(b + iq)` of
/// `arg P_ξ(b + iq)` near `0`, reduced to `(−π, π]`.
pub fn leading_order_arg(params: &BundleParams, q_l: f64) -> f64 {
    let raw = params.m as f64 * params.psi() + (params.r as f64 + 1.0) * q_l.atan2(params.b);
    let t = raw.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

fn wrap(d: f64) -> f64 {
    let t = (d + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

/// Central difference of `ξ₁ ↦ arg P_ξ(b + i q_L)` with `ξ₂`, `b`, `q_L` fixed.
pub fn arg_derivative_xi1(params: &BundleParams, q_l: f64, h: f64) -> f64 {
    let shifted = |d: f64| BundleParams { xi: params.xi + d, ..*params };
    wrap(bundle_charge_arg(&shifted(h), q_l) - bundle_charge_arg(&shifted(-h), q_l)) / (2.0 * h)
}

/// Central difference of the leading-order approximation in `ξ₁`.
pub fn leading_order_derivative_xi1(params: &BundleParams, q_l: f64, h: f64) -> f64 {
    let shifted = |d: f64| BundleParams { xi: params.xi + d, ..*params };
    wrap(leading_order_arg(&shifted(h), q_l) - leading_order_arg(&shifted(-h), q_l)) / (2.0 * h)
}

/// Sign of [`arg_derivative_xi1`]; derivatives below `1e-12` in size are
/// reported as `0`.
pub fn arg_monotonicity(params: &BundleParams, q_l: f64, h: f64) -> i8 {
    let d = arg_derivative_xi1(params, q_l, h);
    if d.abs() < 1e-12 {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// The branch `B` cut at `z = 0` and at its first crossings of `{x = b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalBranch {
    /// From `0` to `b + iq`, `q > 0`.
    pub upper: Vec<PlanePoint>,
    /// From `0` to `b + iq′`, `q′ < 0`.
    pub lower: Vec<PlanePoint>,
    pub q: f64,
    pub q_prime: f64,
}

impl VerticalBranch {
    /// The two halves as profiles over `[0, b]` ending at a vertical tangent
    /// at `0`, or `None` for a half that is not graphical.
    pub fn profiles(&self) -> (Option<MomentumProfile>, Option<MomentumProfile>) {
        let make = |pts: &[PlanePoint]| {
            let samples: Vec<(f64, f64)> = pts.iter().map(|p| (p.x, p.y)).collect();
            MomentumProfile::from_samples(samples).ok().map(|mut p| {
                p.lo_vertical = true;
                p
            })
        };
        (make(&self.upper), make(&self.lower))
    }

    /// All points from `b + iq′` through `0` to `b + iq`.
    pub fn points(&self) -> Vec<PlanePoint> {
        let mut out: Vec<PlanePoint> = self.lower.iter().rev().copied().collect();
        out.extend(self.upper.iter().skip(1));
        out
    }
}

/// Commensurability of `ξ₂`, `q`, `q′` through rational approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commensurability {
    pub q_over_xi2: Option<f64>,
    pub q_over_q_prime: f64,
    /// Nearest convergents within the denominator bound.
    pub q_over_xi2_nearest: Option<(i64, u64)>,
    pub q_over_q_prime_nearest: Option<(i64, u64)>,
    /// Whether each ratio is within the reconstruction tolerance of its convergent.
    pub q_over_xi2_rational: bool,
    pub q_over_q_prime_rational: bool,
}

/// Where `B` meets `{x = b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryIntersections {
    pub q: f64,
    pub q_prime: f64,
    pub branch: VerticalBranch,
    pub commensurability: Commensurability,
}

fn trace_cfg(params: &BundleParams) -> TraceConfig {
    TraceConfig::with_step(params.b / 400.0)
}

fn trace_window(params: &BundleParams) -> Window {
    let b = params.b;
    let reach = 20.0 * params.branch_scale();
    Window::new(-reach, b + 0.5 * b, -reach, reach)
}

/// Follow one half of `B` from a seed at height `y0` until it first crosses
/// `x = b`, returning the points from `0` to the crossing.
fn trace_half(params: &BundleParams, y0: f64) -> Result<Vec<PlanePoint>> {
    let level = params.level();
    let cfg = trace_cfg(params);
    let window = trace_window(params);
    let side = if y0 > 0.0 { "upper" } else { "lower" };
    let escape = || BundleError::BranchEscapesWindow { b: params.b, side };
    let x0 = levelset::solve_on_horizontal(&level, 0.0, y0).ok_or_else(escape)?;
    let seed = PlanePoint::new(x0, y0);
    let branch = match levelset::trace_component(&level, seed, &window, &cfg) {
        Ok(b) => b,
        Err(LevelSetError::SingularPoint { partial, .. }) => *partial,
        Err(e) => return Err(e.into()),
    };
    let walk = outward_walk(&branch, seed);
    let mut out = vec![PlanePoint::new(0.0, 0.0), seed];
    for w in walk.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q.x >= params.b {
            let t = (params.b - p.x) / (q.x - p.x);
            let guess = p.y + t * (q.y - p.y);
            let y = levelset::solve_on_vertical(&level, params.b, guess).ok_or_else(escape)?;
            out.push(PlanePoint::new(params.b, y));
            return Ok(out);
        }
        out.push(q);
    }
    Err(escape())
}

/// Branch points starting at `seed` and moving away from the origin.
fn outward_walk(branch: &Branch, seed: PlanePoint) -> Vec<PlanePoint> {
    let pts = &branch.points;
    let i = (0..pts.len()).min_by(|&a, &b| pts[a].distance(seed).total_cmp(&pts[b].distance(seed))).unwrap();
    let norm = |p: PlanePoint| p.x.hypot(p.y);
    let forward_outward = i + 1 < pts.len() && (i == 0 || norm(pts[i + 1]) >= norm(pts[i - 1]));
    if forward_outward {
        pts[i..].to_vec()
    } else {
        pts[..=i].iter().rev().copied().collect()
    }
}

/// Trace `B` from `0` in both vertical directions up to `{x = b}`.
///
/// Requires `θ̂` in the vertical family; the halves start from seeds at
/// height `±ρ/50` on the level set, `ρ` being [`BundleParams::branch_scale`].
pub fn vertical_branch(params: &BundleParams) -> Result<VerticalBranch> {
    let theta = default_vertical_theta(params.m, params.r, params.psi());
    let off = wrap(2.0 * (params.theta_hat - theta)) / 2.0;
    if off.abs() > 1e-9 {
        return Err(BundleError::NotVertical { theta_hat: params.theta_hat, nearest: theta });
    }
    let t = params.branch_scale() / 50.0;
    let upper = trace_half(params, t)?;
    let lower = trace_half(params, -t)?;
    let (q, q_prime) = (upper[upper.len() - 1].y, lower[lower.len() - 1].y);
    Ok(VerticalBranch { upper, lower, q, q_prime })
}

/// The intersections `b + iq`, `b + iq′` of `B` with `{x = b}`, ordered so
/// that `q > 0 > q′`, and the commensurability report of `ξ₂, q, q′`.
pub fn boundary_intersections(params: &BundleParams, max_denominator: u64) -> Result<BoundaryIntersections> {
    let branch = vertical_branch(params)?;
    let (q, q_prime) = (branch.q, branch.q_prime);
    let q_over_xi2 = (params.xi.im != 0.0).then(|| q / params.xi.im);
    let q_over_q_prime = q / q_prime;
    let nearest = |x: f64| rational::nearest(x, max_denominator);
    let is_rational = |x: f64| rational::reconstruct(x, max_denominator, crate::construction::RATIONAL_TOL).is_some();
    let commensurability = Commensurability {
        q_over_xi2,
        q_over_q_prime,
        q_over_xi2_nearest: q_over_xi2.and_then(nearest),
        q_over_q_prime_nearest: nearest(q_over_q_prime),
        q_over_xi2_rational: q_over_xi2.is_some_and(is_rational),
        q_over_q_prime_rational: is_rational(q_over_q_prime),
    };
    Ok(BoundaryIntersections { q, q_prime, branch, commensurability })
}

/// Angle between the chord from `0` to the seed of the upper half at height
/// `t` and the vertical direction.
pub fn tangent_deviation_at_origin(params: &BundleParams, t: f64) -> Result<f64> {
    let level = params.level();
    let x = levelset::solve_on_horizontal(&level, 0.0, t)
        .ok_or(BundleError::BranchEscapesWindow { b: params.b, side: "upper" })?;
    Ok(x.abs().atan2(t.abs()))
}

/// `ϑ = m·arctan((ξ₂ + f)/(ξ₁ + x)) + r·arctan(f/x) + arctan f′`.
///
/// At a vertical endpoint the slope term is `±π/2`; at `x = 0` the middle
/// term is the one-sided limit `±π/2` following the sign of `f` nearby.
pub fn lifted_angle_bundle(profile: &MomentumProfile, params: &BundleParams, x: f64) -> Result<f64> {
    let (f, slope_angle) = profile.slope_angle(x)?;
    let (xi1, xi2) = (params.xi.re, params.xi.im);
    let radial = if x > 0.0 {
        f.atan2(x)
    } else {
        let near = profile.samples.get(1).map_or(0.0, |s| s.1);
        FRAC_PI_2 * near.signum()
    };
    Ok(params.m as f64 * (xi2 + f).atan2(xi1 + x) + params.r as f64 * radial + slope_angle)
}

/// Residual of `Im w` at a point, in the normalised units of [`BundleParams::map`].
pub fn level_residual(params: &BundleParams, p: PlanePoint) -> f64 {
    params.level().value(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn poly_simple_case() {
        let p = poly_p(c(1.0, 0.0), 1, 0);
        assert_eq!(p.coefficients, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
        let z = c(0.3, -1.2);
        assert!((p.eval(z) - (z + z * z / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn vertical_family_for_xi_two_minus_i() {
        let thetas = vertical_branch_thetas(2, 2, c(2.0, -1.0).arg());
        let target = (0.75f64).atan();
        assert!(thetas.iter().any(|t| wrap(2.0 * (t - target)).abs() < 1e-12));
        assert_eq!(thetas.len(), 2);
        assert!((default_vertical_theta(2, 2, c(2.0, -1.0).arg()) - target).abs() < 1e-12);
    }

    #[test]
    fn odd_r_real_xi_gives_multiples_of_pi() {
        for m in 1..4 {
            let t = default_vertical_theta(m, 1, 0.0);
            assert!(t.abs() < 1e-12 || (t - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_round_trip() {
        let p = BundleParams::with_vertical_branch(2, 3, c(1.7, -0.4), 0.02).unwrap();
        let r = rescale_to_unit(&p);
        assert_eq!(r.params.xi.re, 1.0);
        let back = r.inverse();
        assert!((back.xi - p.xi).norm() < 1e-14 && (back.b - p.b).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(BundleParams::new(0, 0, c(1.0, 0.0), 0.1, 0.0).is_err());
        assert!(BundleParams::new(0, 1, c(-1.0, 0.0), 0.1, 0.0).is_err());
        assert!(BundleParams::new(0, 1, c(1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn non_vertical_theta_is_rejected() {
        let p = BundleParams::new(2, 2, c(2.0, -1.0), 0.05, 0.1).unwrap();
        assert!(matches!(vertical_branch(&p), Err(BundleError::NotVertical { .. })));
    }

    #[test]
    fn branch_for_xi_two_minus_i_hits_the_boundary_twice() {
        let p = BundleParams::with_vertical_branch(2, 2, c(2.0, -1.0), 0.1).unwrap();
        let bi = boundary_intersections(&p, 1000).unwrap();
        assert!(bi.q > 0.0 && bi.q_prime < 0.0, "{} {}", bi.q, bi.q_prime);
        for pt in bi.branch.points() {
            assert!(level_residual(&p, pt).abs() < 1e-9);
        }
    }
}
