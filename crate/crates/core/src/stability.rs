//! Central charges and the stability wall on `Bl_p P^n`.
//!
//! Divisor classes are written `hH + eE` in the basis of the hyperplane class
//! `H` and the exceptional divisor `E`. The only nonzero top intersections are
//! `H^n = 1` and `E^n = (−1)^{n−1}`, so everything reduces to closed forms:
//! the central charge of a line bundle `L` with respect to `ω = aH − bE` is
//!
//! ```text
//! Z(L) = ∫ (ω + i c₁(L))^n = (a + i h)^n − (b − i e)^n.
//! ```
//!
//! The construction produces two line bundles `L₁ = −apH + qE` and `L₂ = qE`
//! whose slopes coincide at `b = 1`; for `b < 1` the pair is stable and for
//! `b > 1` it is not.
//!
//! ```
//! use slagwall::construction::ConstructionParams;
//! use slagwall::stability::{classify_locus, Verdict, DEFAULT_EPSILON};
//!
//! let params = ConstructionParams::from_theta(2, std::f64::consts::FRAC_PI_6).unwrap();
//! assert_eq!(classify_locus(&params, 0.999, DEFAULT_EPSILON).unwrap(), Verdict::Stable);
//! assert_eq!(classify_locus(&params, 1.0, DEFAULT_EPSILON).unwrap(), Verdict::Wall);
//! ```

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::construction::ConstructionParams;
use crate::levelset::fmt_f64;

/// Default half-width of the window around `b = 1` where [`classify_locus`] applies.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Phase difference below which the locus is a wall.
pub const WALL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("expected {expected} classes, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("Re Z = {re} is zero to tolerance; the slope is undefined")]
    WallDivision { re: f64 },
    #[error("b = {b} is outside the window |b − 1| < {epsilon}")]
    OutOfRegime { b: f64, epsilon: f64 },
    #[error("Kähler class needs a > b > 0, got a = {a}, b = {b}")]
    BadKahler { a: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, StabilityError>;

/// The class `hH + eE`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DivisorClass {
    pub h: f64,
    pub e: f64,
}

impl DivisorClass {
    pub const H: Self = Self { h: 1.0, e: 0.0 };
    pub const E: Self = Self { h: 0.0, e: 1.0 };
    pub const ZERO: Self = Self { h: 0.0, e: 0.0 };

    pub const fn new(h: f64, e: f64) -> Self {
        Self { h, e }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.h, k * self.e)
    }
}

impl std::ops::Add for DivisorClass {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.h + o.h, self.e + o.e)
    }
}

impl std::ops::Neg for DivisorClass {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.h, -self.e)
    }
}

/// The Kähler class `aH − bE`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahlerClassBlowup {
    pub a: f64,
    pub b: f64,
}

impl KahlerClassBlowup {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > b && b > 0.0) || !a.is_finite() {
            return Err(StabilityError::BadKahler { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn class(&self) -> DivisorClass {
        DivisorClass::new(self.a, -self.b)
    }

    pub fn scale(self, k: f64) -> Self {
        Self { a: k * self.a, b: k * self.b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralCharge {
    pub value: Complex64,
}

impl CentralCharge {
    pub fn new(value: Complex64) -> Self {
        Self { value }
    }

    /// Argument in `(−π, π]`.
    pub fn arg(&self) -> f64 {
        self.value.arg()
    }

    /// The charge of the shifted object: `Z(L[1]) = −Z(L)`.
    pub fn shift(self) -> Self {
        Self::new(-self.value)
    }

    pub fn in_upper_half_plane(&self) -> bool {
        self.value.im > 0.0 || (self.value.im == 0.0 && self.value.re < 0.0)
    }
}

/// The top intersection of `n` divisor classes.
///
/// Expands multilinearly; mixed monomials in `H` and `E` vanish, so the result
/// is `∏ hᵢ + (−1)^{n−1} ∏ eᵢ`.
pub fn intersection_product(n: u32, classes: &[DivisorClass]) -> Result<f64> {
    if classes.len() != n as usize {
        return Err(StabilityError::ArityMismatch { expected: n as usize, got: classes.len() });
    }
    let hs: f64 = classes.iter().map(|c| c.h).product();
    let es: f64 = classes.iter().map(|c| c.e).product();
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    Ok(hs + sign * es)
}

/// `Z(L) = (a + i h)^n − (b − i e)^n`.
pub fn central_charge(n: u32, kahler: &KahlerClassBlowup, l: &DivisorClass) -> CentralCharge {
    let z = Complex64::new(kahler.a, l.h).powu(n) - Complex64::new(kahler.b, -l.e).powu(n);
    CentralCharge::new(z)
}

/// `λ = Im Z / Re Z`.
pub fn z_slope(z: &CentralCharge) -> Result<f64> {
    let re = z.value.re;
    if re.abs() < 1e-13 * z.value.norm().max(1.0) {
        return Err(StabilityError::WallDivision { re });
    }
    Ok(z.value.im / re)
}

/// The two line bundles `L₁ = k(−apH + qE)`, `L₂ = kqE`.
pub fn line_bundles(params: &ConstructionParams, k: f64) -> (DivisorClass, DivisorClass) {
    let ap = params.a * params.p;
    (DivisorClass::new(-ap, params.q).scale(k), DivisorClass::new(0.0, params.q).scale(k))
}

fn kahler_at(params: &ConstructionParams, b: f64) -> KahlerClassBlowup {
    KahlerClassBlowup { a: params.a, b }
}

/// `∂_b Z(L)`: the `H` part does not depend on `b`, so it is `−n(b − ie)^{n−1}`.
pub fn charge_b_derivative(n: u32, b: f64, l: &DivisorClass) -> Complex64 {
    -(n as f64) * Complex64::new(b, -l.e).powu(n - 1)
}

fn slope_derivative(z: Complex64, dz: Complex64) -> f64 {
    (dz.im * z.re - dz.re * z.im) / (z.re * z.re)
}

/// `∂_b λ(L₁)` and `∂_b λ(L₂)` at `b = 1`, from the closed form of `∂_b Z`.
///
/// Both bundles have `E`-coefficient `q`, so they share
/// `∂_b Z|_{b=1} = −n(1 − iq)^{n−1}`.
pub fn slope_derivative_at_wall(params: &ConstructionParams) -> (f64, f64) {
    let n = params.n;
    let kahler = kahler_at(params, 1.0);
    let (l1, l2) = line_bundles(params, 1.0);
    let d = |l: &DivisorClass| {
        let z = central_charge(n, &kahler, l).value;
        slope_derivative(z, charge_b_derivative(n, 1.0, l))
    };
    (d(&l1), d(&l2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Wall,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable => "Unstable",
            Verdict::Wall => "Wall",
        })
    }
}

/// The slopes `(λ(L₁), λ(L₂))` at `ω = aH − bE`.
pub fn slopes(params: &ConstructionParams, b: f64) -> Result<(f64, f64)> {
    let kahler = kahler_at(params, b);
    let (l1, l2) = line_bundles(params, 1.0);
    Ok((
        z_slope(&central_charge(params.n, &kahler, &l1))?,
        z_slope(&central_charge(params.n, &kahler, &l2))?,
    ))
}

/// Decide the side of the wall at `b` by comparing phases.
///
/// At `b = 1` one bundle `U` has charge of phase `π − θ̂` and the other, `S`,
/// of phase `−θ̂`; `U` is `L₁` for `p < 0` and `L₂` for `p > 0`. The pair is
/// stable iff `arg Z(U) < arg Z(S[1])`, which is the slope inequality
/// `λ(L₁) < λ(L₂)` (reversed for `p > 0`) wherever both real parts keep their
/// sign, but has no pole where `Re Z` vanishes. Phases within [`WALL_TOL`]
/// are a wall.
pub fn classify_locus(params: &ConstructionParams, b: f64, epsilon: f64) -> Result<Verdict> {
    if !((b - 1.0).abs() < epsilon) {
        return Err(StabilityError::OutOfRegime { b, epsilon });
    }
    let kahler = kahler_at(params, b);
    let (l1, l2) = line_bundles(params, 1.0);
    let z1 = central_charge(params.n, &kahler, &l1);
    let z2 = central_charge(params.n, &kahler, &l2);
    Ok(compare_phases(params.p, z1, z2))
}

/// `arg Z(S[1]) − arg Z(U)`, reduced into `(−π, π]`.
pub fn phase_gap(p: f64, z1: CentralCharge, z2: CentralCharge) -> f64 {
    let (upper, shifted) = if p < 0.0 { (z1, z2.shift()) } else { (z2, z1.shift()) };
    let d = shifted.arg() - upper.arg();
    let wrapped = (d + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    if wrapped == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        wrapped
    }
}

fn compare_phases(p: f64, z1: CentralCharge, z2: CentralCharge) -> Verdict {
    let gap = phase_gap(p, z1, z2);
    if gap.abs() < WALL_TOL {
        Verdict::Wall
    } else if gap > 0.0 {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫ e^{−iω} ch(L)`, expanded in degree `n`:
/// `Σ_{j+k=n} (−i)^j / (j! k!) · ∫ ω^j c₁(L)^k`.
pub fn integral_exp_omega_ch(n: u32, kahler: &KahlerClassBlowup, l: &DivisorClass) -> Complex64 {
    let omega = kahler.class();
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..=n {
        let k = n - j;
        let mut classes = vec![omega; j as usize];
        classes.extend(std::iter::repeat_n(*l, k as usize));
        let number = intersection_product(n, &classes).expect("arity is n by construction");
        let coeff = Complex64::new(0.0, -1.0).powu(j) / (factorial(j) * factorial(k));
        total += coeff * number;
    }
    total
}

/// `−n!·e^{i(n−2)π/2} ∫ e^{−iω} ch(L)`, computed through the Chern character.
///
/// The degree-`n` part of `e^{−iω} ch(L)` is `(−i)^n (ω + i c₁(L))^n / n!`, so
/// this equals [`central_charge`] exactly; without the `n!` the two differ by
/// that positive factor, which leaves the argument unchanged. Its argument is
/// the large-scaling limit of the phase of the oscillatory period of the
/// mirror section, which is why only arguments of charges are ever compared.
pub fn surrogate_charge(n: u32, kahler: &KahlerClassBlowup, l: &DivisorClass) -> CentralCharge {
    let rot = Complex64::from_polar(1.0, (n as f64 - 2.0) * std::f64::consts::FRAC_PI_2);
    CentralCharge::new(-rot * integral_exp_omega_ch(n, kahler, l) * factorial(n))
}

/// Which of the two bundles enters the tilted heart unshifted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeartAssignment {
    /// `L₁` and `L₂[1]` lie in the heart.
    FirstUnshifted,
    /// `L₁[1]` and `L₂` lie in the heart.
    SecondUnshifted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeartMembership {
    pub deg1: f64,
    pub deg2: f64,
    pub assignment: HeartAssignment,
}

/// Degrees `Lᵢ · ω` on a surface, deciding membership in the tilted heart.
///
/// `deg₁ = −a²p + bq` and `deg₂ = bq`; the bundle of positive degree enters
/// unshifted.
pub fn heart_membership_n2(params: &ConstructionParams, b: f64) -> HeartMembership {
    let omega = kahler_at(params, b).class();
    let (l1, l2) = line_bundles(params, 1.0);
    let deg1 = intersection_product(2, &[l1, omega]).expect("two classes");
    let deg2 = intersection_product(2, &[l2, omega]).expect("two classes");
    let assignment = if deg1 > 0.0 { HeartAssignment::FirstUnshifted } else { HeartAssignment::SecondUnshifted };
    HeartMembership { deg1, deg2, assignment }
}

/// `10√30/1323 − 3/98`.
pub fn c0() -> f64 {
    10.0 * 30f64.sqrt() / 1323.0 - 3.0 / 98.0
}

/// The pairings of `Γ = (H² + E²)/6 + C₀ω²` with `H` and `E` on `Bl_p P³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgelandData3 {
    pub c0: f64,
    /// `Γ·H = 1/6 + C₀a²`.
    pub gamma_dot_h: f64,
    /// `Γ·E = 1/6 + C₀b²`.
    pub gamma_dot_e: f64,
}

impl BridgelandData3 {
    pub fn new(kahler: &KahlerClassBlowup) -> Self {
        let c0 = c0();
        Self {
            c0,
            gamma_dot_h: 1.0 / 6.0 + c0 * kahler.a * kahler.a,
            gamma_dot_e: 1.0 / 6.0 + c0 * kahler.b * kahler.b,
        }
    }

    /// `Γ·ch₁(L) = h·Γ·H + e·Γ·E`.
    pub fn pairing(&self, l: &DivisorClass) -> f64 {
        l.h * self.gamma_dot_h + l.e * self.gamma_dot_e
    }
}

/// `Z^Γ(L) = Z(L) + Γ·ch₁(L)` on `Bl_p P³`.
pub fn bridgeland_charge_n3(kahler: &KahlerClassBlowup, l: &DivisorClass, data: &BridgelandData3) -> CentralCharge {
    let z = central_charge(3, kahler, l).value;
    CentralCharge::new(z + data.pairing(l))
}

/// The two charges whose phases the threefold argument compares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOrdering {
    /// `Z^Γ(L₂[1])` for `p < 0`, `Z^Γ(L₁[1])` for `p > 0`.
    pub shifted: CentralCharge,
    /// `Z^Γ(L₁)` for `p < 0`, `Z^Γ(L₂)` for `p > 0`.
    pub unshifted: CentralCharge,
}

impl PhaseOrdering {
    pub fn both_upper(&self) -> bool {
        self.shifted.in_upper_half_plane() && self.unshifted.in_upper_half_plane()
    }

    /// Both in the upper half plane with the shifted object of larger phase.
    pub fn holds(&self) -> bool {
        self.both_upper() && self.shifted.arg() > self.unshifted.arg()
    }
}

/// Evaluate the threefold phase ordering at `ω = aH − bE`.
pub fn bridgeland_phase_ordering(params: &ConstructionParams, b: f64) -> PhaseOrdering {
    assert_eq!(params.n, 3, "the threefold check needs n = 3");
    let kahler = kahler_at(params, b);
    let data = BridgelandData3::new(&kahler);
    let (l1, l2) = line_bundles(params, 1.0);
    let z1 = bridgeland_charge_n3(&kahler, &l1, &data);
    let z2 = bridgeland_charge_n3(&kahler, &l2, &data);
    if params.p < 0.0 {
        PhaseOrdering { shifted: z2.shift(), unshifted: z1 }
    } else {
        PhaseOrdering { shifted: z1.shift(), unshifted: z2 }
    }
}

/// `dim H⁰(P^n, O(d)) = C(n+d, n)` for `d ≥ 0`, else `0`.
pub fn hom_dimension(n: u32, d: i64) -> u64 {
    if d < 0 {
        return 0;
    }
    let d = d as u64;
    let n = n as u64;
    // C(n+d, n) by the multiplicative formula, exact at each step.
    let mut c: u64 = 1;
    for i in 1..=n {
        c = c * (d + i) / i;
    }
    c
}

/// One row of a `b`-scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallRow {
    pub b: f64,
    pub z1: Complex64,
    pub z2: Complex64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `None` outside the classification window.
    pub verdict: Option<Verdict>,
    /// `(Z^Γ(L₁), Z^Γ(L₂))` on threefolds when requested.
    pub bridgeland: Option<(Complex64, Complex64)>,
}

/// Charges, slopes and verdicts over a list of `b` values.
pub fn wall_scan(params: &ConstructionParams, bs: &[f64], epsilon: f64, bridgeland: bool) -> Result<Vec<WallRow>> {
    let (l1, l2) = line_bundles(params, 1.0);
    let mut rows = Vec::with_capacity(bs.len());
    for &b in bs {
        let kahler = kahler_at(params, b);
        let z1 = central_charge(params.n, &kahler, &l1);
        let z2 = central_charge(params.n, &kahler, &l2);
        let lambda1 = z_slope(&z1)?;
        let lambda2 = z_slope(&z2)?;
        let verdict = ((b - 1.0).abs() < epsilon).then(|| compare_phases(params.p, z1, z2));
        let bridgeland = (bridgeland && params.n == 3).then(|| {
            let data = BridgelandData3::new(&kahler);
            (
                bridgeland_charge_n3(&kahler, &l1, &data).value,
                bridgeland_charge_n3(&kahler, &l2, &data).value,
            )
        });
        rows.push(WallRow { b, z1: z1.value, z2: z2.value, lambda1, lambda2, verdict, bridgeland });
    }
    Ok(rows)
}

/// CSV with columns `b,ReZ1,ImZ1,ReZ2,ImZ2,lambda1,lambda2,verdict`, plus
/// `ReZG1,ImZG1,ReZG2,ImZG2` when the rows carry threefold charges. Rows
/// outside the classification window have verdict `OutOfRegime`.
pub fn write_wall_csv<W: Write>(mut w: W, rows: &[WallRow]) -> io::Result<()> {
    let with_g = rows.iter().any(|r| r.bridgeland.is_some());
    write!(w, "b,ReZ1,ImZ1,ReZ2,ImZ2,lambda1,lambda2,verdict")?;
    if with_g {
        write!(w, ",ReZG1,ImZG1,ReZG2,ImZG2")?;
    }
    writeln!(w)?;
    for r in rows {
        let verdict = r.verdict.map_or_else(|| "OutOfRegime".to_string(), |v| v.to_string());
        write!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.b),
            fmt_f64(r.z1.re),
            fmt_f64(r.z1.im),
            fmt_f64(r.z2.re),
            fmt_f64(r.z2.im),
            fmt_f64(r.lambda1),
            fmt_f64(r.lambda2),
            verdict
        )?;
        if let Some((g1, g2)) = r.bridgeland {
            write!(w, ",{},{},{},{}", fmt_f64(g1.re), fmt_f64(g1.im), fmt_f64(g2.re), fmt_f64(g2.im))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_6, PI};

    fn sixth() -> ConstructionParams {
        ConstructionParams::from_theta(2, FRAC_PI_6).unwrap()
    }

    #[test]
    fn intersection_examples() {
        let (h, e) = (DivisorClass::H, DivisorClass::E);
        assert_eq!(intersection_product(2, &[h, h]).unwrap(), 1.0);
        assert_eq!(intersection_product(2, &[e, e]).unwrap(), -1.0);
        assert_eq!(intersection_product(3, &[e, e, e]).unwrap(), 1.0);
        assert_eq!(intersection_product(3, &[h, e, e]).unwrap(), 0.0);
        assert_eq!(
            intersection_product(3, &[h, e]),
            Err(StabilityError::ArityMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn charges_at_pi_over_six() {
        let s3 = 3f64.sqrt();
        let kahler = KahlerClassBlowup::new(2.0, 1.0).unwrap();
        let (l1, l2) = line_bundles(&sixth(), 1.0);
        assert!((l1.h - 4.0 * s3).abs() < 1e-12 && (l1.e + s3).abs() < 1e-12);
        let z1 = central_charge(2, &kahler, &l1);
        let z2 = central_charge(2, &kahler, &l2);
        assert!((z1.value - Complex64::new(-42.0, 14.0 * s3)).norm() < 1e-10);
        assert!((z2.value - Complex64::new(6.0, -2.0 * s3)).norm() < 1e-12);
        assert!((z1.arg() - (PI - FRAC_PI_6)).abs() < 1e-12);
        assert!((z2.arg() + FRAC_PI_6).abs() < 1e-12);
        assert!((z_slope(&z1).unwrap() + s3 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn slope_examples() {
        assert_eq!(z_slope(&CentralCharge::new(Complex64::new(1.0, 1.0))).unwrap(), 1.0);
        assert_eq!(z_slope(&CentralCharge::new(Complex64::new(5.0, 0.0))).unwrap(), 0.0);
        assert!(matches!(
            z_slope(&CentralCharge::new(Complex64::new(0.0, 2.0))),
            Err(StabilityError::WallDivision { .. })
        ));
    }

    #[test]
    fn zero_bundle_charge_is_volume() {
        let kahler = KahlerClassBlowup::new(1.7, 0.4).unwrap();
        for n in 2..6 {
            let z = central_charge(n, &kahler, &DivisorClass::ZERO).value;
            assert!(z.im == 0.0 && (z.re - (1.7f64.powi(n as i32) - 0.4f64.powi(n as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn wall_derivative_closed_form_and_signs() {
        let params = sixth();
        let (l1, _) = line_bundles(&params, 1.0);
        let dz = charge_b_derivative(2, 1.0, &l1);
        let s3 = 3f64.sqrt();
        assert!((dz - Complex64::new(-2.0, -2.0 * s3)).norm() < 1e-12);
        let (d1, d2) = slope_derivative_at_wall(&params);
        assert!(d1 > 0.0 && d2 < 0.0);
        let h = 1e-6;
        let (p1, p2) = slopes(&params, 1.0 + h).unwrap();
        let (m1, m2) = slopes(&params, 1.0 - h).unwrap();
        assert!(((p1 - m1) / (2.0 * h) - d1).abs() < 1e-6 * d1.abs());
        assert!(((p2 - m2) / (2.0 * h) - d2).abs() < 1e-6 * d2.abs());
    }

    #[test]
    fn classify_examples() {
        let params = sixth();
        assert_eq!(classify_locus(&params, 1.0, DEFAULT_EPSILON).unwrap(), Verdict::Wall);
        assert_eq!(classify_locus(&params, 1.0 - 1e-3, DEFAULT_EPSILON).unwrap(), Verdict::Stable);
        assert_eq!(classify_locus(&params, 1.0 + 1e-3, DEFAULT_EPSILON).unwrap(), Verdict::Unstable);
        assert!(matches!(classify_locus(&params, 1.2, DEFAULT_EPSILON), Err(StabilityError::OutOfRegime { .. })));
        // Mirrored phase: p > 0.
        let mirrored = ConstructionParams::from_theta(2, PI - FRAC_PI_6).unwrap();
        assert!(mirrored.p > 0.0);
        assert_eq!(classify_locus(&mirrored, 0.995, DEFAULT_EPSILON).unwrap(), Verdict::Stable);
        assert_eq!(classify_locus(&mirrored, 1.005, DEFAULT_EPSILON).unwrap(), Verdict::Unstable);
    }

    #[test]
    fn surrogate_matches_examples() {
        let kahler = KahlerClassBlowup::new(3.0, 2.0).unwrap();
        let z = surrogate_charge(2, &kahler, &DivisorClass::ZERO).value;
        assert!((z - Complex64::new(5.0, 0.0)).norm() < 1e-12);
        let l = DivisorClass::new(0.7, -1.3);
        for n in 2..6 {
            let a = surrogate_charge(n, &kahler, &l).value;
            let b = central_charge(n, &kahler, &l).value;
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn heart_membership_signs() {
        let params = sixth();
        let m = heart_membership_n2(&params, 1.01);
        assert!(m.deg1 > 0.0 && m.deg2 < 0.0);
        assert_eq!(m.assignment, HeartAssignment::FirstUnshifted);
        assert!((m.deg2 - 1.01 * params.q).abs() < 1e-15);
        let mirrored = ConstructionParams::from_theta(2, 2.0).unwrap();
        let m = heart_membership_n2(&mirrored, 0.99);
        assert!(m.deg1 < 0.0 && m.deg2 > 0.0);
        assert_eq!(m.assignment, HeartAssignment::SecondUnshifted);
    }

    #[test]
    fn heart_signs_agree_with_squared_sine_convention() {
        // With a = 1/sin²θ̂ in place of 1/sin θ̂ the degree signs are unchanged.
        for i in 1..30 {
            let t = i as f64 * PI / 30.0;
            if (t - PI / 2.0).abs() < 1e-9 {
                continue;
            }
            let mut params = ConstructionParams::from_theta(2, t).unwrap();
            let reference = heart_membership_n2(&params, 1.0);
            params.a = 1.0 / (t.sin() * t.sin());
            let other = heart_membership_n2(&params, 1.0);
            assert_eq!(reference.deg1.signum(), other.deg1.signum(), "θ̂={t}");
            assert_eq!(reference.deg2.signum(), other.deg2.signum(), "θ̂={t}");
        }
    }

    #[test]
    fn c0_value() {
        assert!((c0() - 0.010_787_797_241_509).abs() < 1e-14);
        let data = BridgelandData3::new(&KahlerClassBlowup::new(1.2, 1.0).unwrap());
        assert!((data.gamma_dot_h - (1.0 / 6.0 + c0() * 1.44)).abs() < 1e-15);
        assert!(data.gamma_dot_h > 0.0 && data.gamma_dot_e > 0.0);
    }

    #[test]
    fn hom_dimensions() {
        assert_eq!(hom_dimension(2, 0), 1);
        assert_eq!(hom_dimension(5, 0), 1);
        assert_eq!(hom_dimension(2, 1), 3);
        assert_eq!(hom_dimension(3, 4), 35);
        assert_eq!(hom_dimension(3, -1), 0);
    }

    #[test]
    fn wall_csv_rows() {
        let rows = wall_scan(&sixth(), &[0.99, 1.0, 1.01], DEFAULT_EPSILON, false).unwrap();
        let verdicts: Vec<_> = rows.iter().map(|r| r.verdict.unwrap()).collect();
        assert_eq!(verdicts, [Verdict::Stable, Verdict::Wall, Verdict::Unstable]);
        let mut buf = Vec::new();
        write_wall_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("b,ReZ1,ImZ1,ReZ2,ImZ2,lambda1,lambda2,verdict\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(",Wall"));
    }
}
