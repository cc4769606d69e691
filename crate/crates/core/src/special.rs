//! Special functions not covered by `statrs`.

use crate::error::{require_positive, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E₁(x) = ∫ₓ^∞ e^{-s}/s ds` for `x > 0`.
///
/// Power series below 1, modified-Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let contrib = term / kf;
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Solves `E₁(x) = target` for `x`, `target > 0`.
///
/// Newton iteration on `ln x` against `ln E₁`, safeguarded by a bisection bracket.
pub fn exp_integral_e1_inverse(target: f64) -> Result<f64> {
    require_positive("target", target)?;
    let ln_target = target.ln();
    // E1 decreases strictly; bracket in log space.
    let (mut lo, mut hi) = (-745.0_f64, 6.6_f64);
    while exp_integral_e1(hi.exp()) > target {
        hi += 1.0;
        if hi > 7.0 {
            break;
        }
    }
    let mut y = if target > 1.0 {
        (-EULER_GAMMA - target).max(lo + 1.0)
    } else {
        (-ln_target).max(1e-3).ln()
    };
    y = y.clamp(lo, hi);
    for _ in 0..100 {
        let x = y.exp();
        let e1 = exp_integral_e1(x);
        let g = e1.ln() - ln_target;
        if g.abs() < 1e-14 {
            return Ok(x);
        }
        if g > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let slope = -(-x).exp() / e1;
        let mut next = y - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() < 1e-15 * y.abs().max(1.0) {
            return Ok(next.exp());
        }
        y = next;
    }
    Ok(y.exp())
}

/// `ln(1 - e^{-x})` for `x > 0`, accurate at both ends.
pub fn ln_one_minus_exp_neg(x: f64) -> f64 {
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// `ln (r)_m = ln Γ(r+m) − ln Γ(r)`, the rising factorial in log space.
pub fn ln_pochhammer(r: f64, m: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if m == 0 {
        0.0
    } else if m < 32 {
        (0..m).map(|i| (r + i as f64).ln()).sum()
    } else {
        ln_gamma(r + m as f64) - ln_gamma(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert_relative_eq!(
            exp_integral_e1(1.0),
            0.219_383_934_395_520_3,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            exp_integral_e1(0.5),
            0.559_773_594_776_160_8,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            exp_integral_e1(2.0),
            0.048_900_510_708_061_19,
            max_relative = 1e-13
        );
        // small-argument series −γ − ln x + x − x²/4 + …
        assert_relative_eq!(
            exp_integral_e1(1e-4),
            8.633_224_704_574_7,
            max_relative = 1e-12
        );
    }

    #[test]
    fn e1_matches_quadrature() {
        // trapezoid on s = x·e^u, integrand e^{-x e^u}
        for &x in &[0.01, 0.3, 1.0, 1.5, 4.0, 20.0] {
            let n = 200_000;
            let umax = 60.0_f64.min((800.0_f64 / x).ln() + 1.0);
            let du = umax / n as f64;
            let f = |u: f64| (-x * u.exp()).exp();
            let mut s = 0.5 * (f(0.0) + f(umax));
            for i in 1..n {
                s += f(i as f64 * du);
            }
            assert_relative_eq!(exp_integral_e1(x), s * du, max_relative = 1e-8);
        }
    }

    #[test]
    fn e1_inverse_round_trips() {
        for &x in &[1e-4, 1e-2, 0.2, 0.9, 1.0, 1.1, 3.0, 12.0, 40.0] {
            let back = exp_integral_e1_inverse(exp_integral_e1(x)).unwrap();
            assert_relative_eq!(back, x, max_relative = 1e-10);
        }
    }

    #[test]
    fn pochhammer_branches_agree() {
        let r = 2.5;
        let direct: f64 = (0..40).map(|i| (r + i as f64).ln()).sum();
        assert_relative_eq!(ln_pochhammer(r, 40), direct, max_relative = 1e-12);
        assert_eq!(ln_pochhammer(r, 0), 0.0);
    }

    #[test]
    fn log_one_minus_exp() {
        assert_relative_eq!(ln_one_minus_exp_neg(std::f64::consts::LN_2), 0.5f64.ln());
        assert_relative_eq!(
            ln_one_minus_exp_neg(1e-10),
            (1e-10f64).ln(),
            max_relative = 1e-9
        );
        assert!(ln_one_minus_exp_neg(50.0) < 0.0);
    }
}
