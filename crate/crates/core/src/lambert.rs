//! Lower branch of the Lambert W function, used to invert the radial CDF of
//! the planar Laplace distribution.

use std::f64::consts::E;

const REL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100;

/// `W_{-1}(x)` for `x` in `[-1/e, 0)`: the solution `w <= -1` of `w e^w = x`.
///
/// Returns NaN outside the domain. Newton iteration runs on the log form
/// `w + ln(-w) = ln(-x)`, which stays well conditioned away from the branch
/// point; near the branch point the series start is already accurate.
pub fn lambert_w_m1(x: f64) -> f64 {
    let branch = -1.0 / E;
    if !(x >= branch && x < 0.0) {
        return f64::NAN;
    }
    if x == branch {
        return -1.0;
    }
    let mut w = if x < -0.25 {
        // series around the branch point in p = sqrt(2(1 + e x))
        let p = (2.0 * (1.0 + E * x)).max(0.0).sqrt();
        -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    let target = (-x).ln();
    for _ in 0..MAX_ITER {
        if w >= -1.0 {
            w = -1.0 - 1e-12;
        }
        let g = w + (-w).ln() - target;
        let step = g * w / (w + 1.0);
        let next = w - step;
        let done = (next - w).abs() <= REL_TOL * next.abs();
        w = next;
        if done {
            break;
        }
    }
    w.min(-1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(x: f64) -> f64 {
        // w + ln(-w) is increasing on (-inf, -1]
        let target = (-x).ln();
        let (mut lo, mut hi) = (-800.0f64, -1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + (-mid).ln() > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point_and_domain() {
        assert_eq!(lambert_w_m1(-1.0 / E), -1.0);
        assert!(lambert_w_m1(0.0).is_nan());
        assert!(lambert_w_m1(-0.5).is_nan());
        assert!(lambert_w_m1(0.1).is_nan());
    }

    #[test]
    fn inverts_w_exp_w() {
        for i in 1..2000 {
            let x = -1.0 / E * (i as f64 / 2000.0).powi(3);
            let w = lambert_w_m1(x);
            assert!(w <= -1.0);
            let back = w * w.exp();
            assert!(((back - x) / x).abs() < 1e-10, "x={x} w={w} back={back}");
        }
    }

    #[test]
    fn agrees_with_bisection() {
        for &x in &[-0.36, -0.3, -0.2, -0.1, -1e-3, -1e-8, -1e-100, -1e-300] {
            let w = lambert_w_m1(x);
            let oracle = bisect(x);
            assert!((w - oracle).abs() <= 1e-9 * oracle.abs(), "x={x}: {w} vs {oracle}");
        }
    }
}
