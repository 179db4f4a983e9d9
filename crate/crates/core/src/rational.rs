//! Rational reconstruction by continued fractions.
//!
//! The convergents `h_k / k_k` of a real number are its best rational
//! approximations; reconstruction walks them in order of increasing
//! denominator and accepts the first one within tolerance.

/// Convergents of `x` with denominator at most `max_denominator`, in order.
///
/// Stops early when the expansion terminates (the last convergent equals `x`
/// to machine precision) or when the next partial quotient overflows.
pub fn convergents(x: f64, max_denominator: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    if !x.is_finite() || max_denominator == 0 {
        return out;
    }
    // h_{-1}/k_{-1} = 1/0, h_{-2}/k_{-2} = 0/1.
    let (mut h_prev, mut h_prev2): (i128, i128) = (1, 0);
    let (mut k_prev, mut k_prev2): (i128, i128) = (0, 1);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        if a.abs() > 1e18 {
            break;
        }
        let a_i = a as i128;
        let h = a_i * h_prev + h_prev2;
        let k = a_i * k_prev + k_prev2;
        if k > max_denominator as i128 || h.abs() > i64::MAX as i128 {
            break;
        }
        out.push((h as i64, k as u64));
        let frac = rem - a;
        if frac.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
        rem = 1.0 / frac;
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
    }
    out
}

/// The lowest-denominator convergent `p/q` of `x` with `|x − p/q| ≤ tol` and
/// `q ≤ max_denominator`, if any. The fraction is in lowest terms.
pub fn reconstruct(x: f64, max_denominator: u64, tol: f64) -> Option<(i64, u64)> {
    convergents(x, max_denominator)
        .into_iter()
        .find(|&(p, q)| (x - p as f64 / q as f64).abs() <= tol)
}

/// The best convergent of `x` with denominator at most `max_denominator`,
/// regardless of how close it is.
pub fn nearest(x: f64, max_denominator: u64) -> Option<(i64, u64)> {
    convergents(x, max_denominator).last().copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn convergents_of_pi() {
        let c = convergents(PI, 40_000);
        assert_eq!(&c[..5], &[(3, 1), (22, 7), (333, 106), (355, 113), (103993, 33102)]);
    }

    #[test]
    fn exact_fractions_terminate() {
        assert_eq!(reconstruct(4.0, 10, 1e-12), Some((4, 1)));
        assert_eq!(reconstruct(-0.75, 10, 1e-12), Some((-3, 4)));
        assert_eq!(reconstruct(7.0 / 13.0, 100, 1e-12), Some((7, 13)));
    }

    #[test]
    fn root_two_has_no_small_reconstruction() {
        assert_eq!(reconstruct(2.0 * SQRT_2, 10_000, 1e-9), None);
        // A tight enough tolerance is always met eventually by a float.
        let (p, q) = reconstruct(2.0 * SQRT_2, 1_000_000, 1e-9).unwrap();
        assert_eq!((p, q), (94642, 33461));
    }

    #[test]
    fn nearest_respects_bound() {
        assert_eq!(nearest(PI, 10), Some((22, 7)));
        assert_eq!(nearest(f64::NAN, 10), None);
    }
}
