//! Closed-form construction parameters for sections on `Bl_p P^n`.
//!
//! For a phase `θ̂` the level set `Im e^{-iθ̂}(x+iy)^n = c` has a vertical
//! tangent over `x = 1` exactly when `c` is one of the critical values `c_m`,
//! attained at `(1, q_m)`. Requiring the same level to pass through `(a, 0)`
//! fixes the Kähler parameter `a_m`, and the second boundary point `(a, ap)`
//! fixes `p`. Everything here is closed form except `p`, which is found by
//! bisection on `θ̂ = arg(1 − (1+ip)^n)`.
//!
//! ```
//! use slagwall::construction::{find_admissible_k, ConstructionParams};
//!
//! let params = ConstructionParams::from_theta(2, std::f64::consts::FRAC_PI_6).unwrap();
//! let k = find_admissible_k(&params, 1000).unwrap();
//! assert_eq!((k.kq, k.kap), (-1, -4));
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::levelset::{self, fmt_f64, HarmonicLevelSet, LevelSetError, PlanePoint, TraceConfig, Window};
use crate::rational;

/// Default denominator bound of the rational reconstruction.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1_000_000;
/// Acceptance tolerance of the rational reconstruction.
pub const RATIONAL_TOL: f64 = 1e-9;
/// Cosine arguments closer than this to `±π/2` are degenerate.
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("critical level degenerates: cosine argument {arg} is at ±π/2")]
    DegenerateAngle { arg: f64 },
    #[error("Kähler parameter a = {a} ≤ 1, so aH − E is not Kähler")]
    NotKahler { a: f64 },
    #[error("−c/sin θ̂ = {value} ≤ 0 has no positive real root")]
    NonRealRoot { value: f64 },
    #[error("p = 0 has no phase")]
    DegenerateP,
    #[error("p = {p} outside (−tan(π/n), tan(π/n))")]
    POutOfRange { p: f64 },
    #[error("no p found for θ̂ = {theta}")]
    NoRoot { theta: f64 },
    #[error("branch index m = {m} outside [1−n, n−2]")]
    BranchOutOfRange { m: i32 },
    #[error("tracing failed: {0}")]
    TraceFailure(#[from] LevelSetError),
}

pub type Result<T> = std::result::Result<T, ConstructionError>;

fn check_branch(n: u32, m: i32) -> Result<()> {
    let n = n as i32;
    if m < 1 - n || m > n - 2 {
        return Err(ConstructionError::BranchOutOfRange { m });
    }
    Ok(())
}

/// The critical level `c_m` and the height `q_m` of the critical point over `x = 1`.
///
/// With `ψ = (θ̂ − π/2 + mπ)/(n−1)`: `c = (−1)^{m+1} cos(ψ)^{1−n}`, `q = tan ψ`.
pub fn solve_critical_data(n: u32, theta_hat: f64, m: i32) -> Result<(f64, f64)> {
    assert!(n >= 2, "dimension must be at least 2");
    check_branch(n, m)?;
    let psi = (theta_hat - FRAC_PI_2 + m as f64 * PI) / (n as f64 - 1.0);
    let cos = psi.cos();
    if cos.abs() < DEGENERATE_TOL {
        return Err(ConstructionError::DegenerateAngle { arg: psi });
    }
    let sign = if (m + 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let c = sign * cos.powi(1 - n as i32);
    Ok((c, psi.tan()))
}

/// The Kähler parameter `a_m = (−c_m / sin θ̂)^{1/n}` making the constant term vanish.
pub fn solve_kahler_param(n: u32, theta_hat: f64, m: i32) -> Result<f64> {
    let (c, _) = solve_critical_data(n, theta_hat, m)?;
    let value = -c / theta_hat.sin();
    if !(value > 0.0) || !value.is_finite() {
        return Err(ConstructionError::NonRealRoot { value });
    }
    let a = value.powf(1.0 / n as f64);
    if a <= 1.0 {
        return Err(ConstructionError::NotKahler { a });
    }
    Ok(a)
}

/// The branch index used for a given phase, with its Kähler parameter.
///
/// `m = 0` when `a_0 > 1`; otherwise the smallest `|m|` with `a_m > 1`, ties
/// broken toward negative `m`.
pub fn select_branch(n: u32, theta_hat: f64) -> Result<(i32, f64)> {
    let ni = n as i32;
    let mut last = ConstructionError::NotKahler { a: f64::NAN };
    for k in 0..ni {
        for m in [-k, k] {
            if (k == 0 && m != 0) || m < 1 - ni || m > ni - 2 {
                continue;
            }
            match solve_kahler_param(n, theta_hat, m) {
                Ok(a) => return Ok((m, a)),
                Err(e) => last = e,
            }
            if k == 0 {
                break;
            }
        }
    }
    Err(match last {
        e @ ConstructionError::NotKahler { .. } => e,
        _ => ConstructionError::NotKahler { a: f64::NAN },
    })
}

fn p_bound(n: u32) -> f64 {
    (PI / n as f64).tan()
}

/// `θ̂ = arg(1 − (1+ip)^n)`, reduced into `(0, π)`.
///
/// Negative `p` lands in `(0, π/2)`, positive `p` in `(π/2, π)`.
pub fn theta_from_p(n: u32, p: f64) -> Result<f64> {
    if p == 0.0 {
        return Err(ConstructionError::DegenerateP);
    }
    if !(p.abs() < p_bound(n)) {
        return Err(ConstructionError::POutOfRange { p });
    }
    let w = Complex64::new(1.0, 0.0) - Complex64::new(1.0, p).powu(n);
    Ok(w.arg().rem_euclid(PI))
}

/// The unique `p ∈ (−tan(π/n), tan(π/n)) \ {0}` with `theta_from_p(n, p) = θ̂`.
pub fn p_from_theta(n: u32, theta_hat: f64) -> Result<f64> {
    let no_root = || ConstructionError::NoRoot { theta: theta_hat };
    if !(theta_hat > 0.0 && theta_hat < PI) || theta_hat == FRAC_PI_2 {
        return Err(no_root());
    }
    let g = |p: f64| theta_from_p(n, p).map(|t| t - theta_hat);
    // θ̂ is increasing in p on each half-interval.
    let negative = theta_hat < FRAC_PI_2;
    let bound = p_bound(n);
    let (mut lo, mut hi) = if negative { (-bound, 0.0) } else { (0.0, bound) };
    let inner = 1e-300;
    if negative {
        hi = -inner;
    } else {
        lo = inner;
    }
    if !bound.is_finite() || bound > 1e8 {
        // n = 2: the interval is the whole line; grow a finite bracket.
        let mut far = 1.0;
        while far < 1e15 {
            let p = if negative { -far } else { far };
            let v = g(p)?;
            if (negative && v < 0.0) || (!negative && v > 0.0) {
                break;
            }
            far *= 2.0;
        }
        if negative {
            lo = -far;
        } else {
            hi = far;
        }
    } else {
        let shrink = bound * (1.0 - 1e-15);
        if negative {
            lo = -shrink;
        } else {
            hi = shrink;
        }
    }
    let (mut g_lo, g_hi) = (g(lo)?, g(hi)?);
    if g_lo * g_hi > 0.0 {
        return Err(no_root());
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm * g_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            g_lo = gm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The solved tuple `(n, m, θ̂, c, q, a, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructionParams {
    pub n: u32,
    pub m_branch: i32,
    pub theta_hat: f64,
    pub c: f64,
    pub q: f64,
    pub a: f64,
    pub p: f64,
}

impl ConstructionParams {
    /// Solve from the phase, selecting the branch with [`select_branch`].
    pub fn from_theta(n: u32, theta_hat: f64) -> Result<Self> {
        let (m, _) = select_branch(n, theta_hat)?;
        Self::with_branch(n, theta_hat, m)
    }

    /// Solve from the phase on an explicit branch `m`.
    pub fn with_branch(n: u32, theta_hat: f64, m: i32) -> Result<Self> {
        let (c, q) = solve_critical_data(n, theta_hat, m)?;
        let a = solve_kahler_param(n, theta_hat, m)?;
        let p = p_from_theta(n, theta_hat)?;
        Ok(Self { n, m_branch: m, theta_hat, c, q, a, p })
    }

    /// Solve from the boundary parameter `p`.
    pub fn from_p(n: u32, p: f64) -> Result<Self> {
        let theta_hat = theta_from_p(n, p)?;
        let (m, _) = select_branch(n, theta_hat)?;
        let (c, q) = solve_critical_data(n, theta_hat, m)?;
        let a = solve_kahler_param(n, theta_hat, m)?;
        Ok(Self { n, m_branch: m, theta_hat, c, q, a, p })
    }

    pub fn level_set(&self) -> HarmonicLevelSet {
        HarmonicLevelSet::new(self.n, self.theta_hat, self.c)
    }

    /// `a·p / q`, the ratio whose rationality decides admissibility.
    pub fn ratio(&self) -> f64 {
        self.a * self.p / self.q
    }

    /// Residuals of the three defining identities: constant term at `(a, 0)`,
    /// critical point at `(1, q)` (value and `∂_y`), boundary point `(a, ap)`.
    pub fn residuals(&self) -> [f64; 4] {
        use crate::levelset::LevelFunction;
        let ls = self.level_set();
        let crit = PlanePoint::new(1.0, self.q);
        [
            ls.value(PlanePoint::new(self.a, 0.0)),
            ls.value(crit),
            ls.gradient(crit)[1],
            ls.value(PlanePoint::new(self.a, self.a * self.p)),
        ]
    }
}

/// A window and step adapted to the points `(1, q)`, `(a, 0)`, `(a, ap)`.
pub fn construction_window(params: &ConstructionParams) -> (Window, TraceConfig) {
    let ap = params.a * params.p;
    let y_lo = 0f64.min(ap).min(params.q);
    let y_hi = 0f64.max(ap).max(params.q);
    let scale = params.a.max(y_hi - y_lo).max(1.0);
    let window = Window::new(0.5, params.a + 0.5 * scale, y_lo - 0.5 * scale, y_hi + 0.5 * scale);
    (window, TraceConfig::with_step(2e-3 * scale))
}

/// Whether `(a, 0)` and `(a, ap)` lie on one traced component of the level set.
pub fn verify_same_component(params: &ConstructionParams) -> Result<bool> {
    let (window, cfg) = construction_window(params);
    let ls = params.level_set();
    let start = PlanePoint::new(params.a, 0.0);
    let end = PlanePoint::new(params.a, params.a * params.p);
    Ok(levelset::same_component(&ls, start, end, &window, &cfg)?)
}

/// A scaling `k > 0` with `kq` and `kap` integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleScaling {
    pub k: f64,
    pub kq: i64,
    pub kap: i64,
    pub denominator_bound: u64,
}

/// The smallest admissible scaling, if `ap/q` is within [`RATIONAL_TOL`] of a
/// rational `r/s` with `s ≤ max_denominator`.
///
/// With `ap/q = r/s` in lowest terms the smallest choice is `k = s/|q|`,
/// giving `kq = ±s` and `kap = ±r`.
pub fn find_admissible_k(params: &ConstructionParams, max_denominator: u64) -> Option<AdmissibleScaling> {
    let ratio = params.ratio();
    let (r, s) = rational::reconstruct(ratio, max_denominator, RATIONAL_TOL)?;
    let sign = params.q.signum() as i64;
    let k = s as f64 / params.q.abs();
    let kq = sign * s as i64;
    let kap = sign * r;
    let ap = params.a * params.p;
    let tol = RATIONAL_TOL * (1.0 + s as f64);
    if (k * params.q - kq as f64).abs() > tol || (k * ap - kap as f64).abs() > tol * (1.0 + r.unsigned_abs() as f64) {
        return None;
    }
    Some(AdmissibleScaling { k, kq, kap, denominator_bound: max_denominator })
}

/// One grid point of [`rationality_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub p: f64,
    pub theta: f64,
    pub a: f64,
    pub q: f64,
    pub ratio: f64,
    /// Reconstruction of the ratio within the denominator bound, if any.
    pub rational: Option<(i64, u64)>,
    pub admissible_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub n: u32,
    pub max_denominator: u64,
    /// Rows sorted by increasing `p`.
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    /// Whether the ratio increases toward each end of the grid over its two
    /// outermost points.
    pub fn grows_toward_ends(&self) -> bool {
        let r: Vec<f64> = self.rows.iter().map(|r| r.ratio).collect();
        let k = r.len();
        let neg = self.rows.iter().filter(|r| r.p < 0.0).count();
        let pos = k - neg;
        let lower_ok = neg < 3 || (r[0] > r[1] && r[1] > r[2]);
        let upper_ok = pos < 3 || (r[k - 1] > r[k - 2] && r[k - 2] > r[k - 3]);
        lower_ok && upper_ok
    }

    /// The ratio at the grid point nearest `p = 0`.
    pub fn ratio_nearest_zero(&self) -> Option<f64> {
        self.rows
            .iter()
            .min_by(|a, b| a.p.abs().total_cmp(&b.p.abs()))
            .map(|r| r.ratio)
    }

    /// CSV with columns `p,theta,a,q,ratio,rational_num,rational_den,admissible_k`;
    /// the last three are empty when no reconstruction exists.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "p,theta,a,q,ratio,rational_num,rational_den,admissible_k")?;
        for r in &self.rows {
            let (num, den) = match r.rational {
                Some((p, q)) => (p.to_string(), q.to_string()),
                None => (String::new(), String::new()),
            };
            let k = r.admissible_k.map(fmt_f64).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(r.p),
                fmt_f64(r.theta),
                fmt_f64(r.a),
                fmt_f64(r.q),
                fmt_f64(r.ratio),
                num,
                den,
                k
            )?;
        }
        Ok(())
    }
}

/// Tabulate `(θ̂, a, q, ap/q)` and admissibility over a grid of `p`.
pub fn rationality_scan(n: u32, p_grid: &[f64], max_denominator: u64) -> Result<ScanReport> {
    let mut rows = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let params = ConstructionParams::from_p(n, p)?;
        let k = find_admissible_k(&params, max_denominator);
        rows.push(ScanRow {
            p,
            theta: params.theta_hat,
            a: params.a,
            q: params.q,
            ratio: params.ratio(),
            rational: rational::reconstruct(params.ratio(), max_denominator, RATIONAL_TOL),
            admissible_k: k.map(|k| k.k),
        });
    }
    rows.sort_by(|a, b| a.p.total_cmp(&b.p));
    Ok(ScanReport { n, max_denominator, rows })
}
