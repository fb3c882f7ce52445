//! Student-t building blocks.

use crate::math::{exp, ln, ln_gamma};

const CF_MAX_ITER: usize = 5000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`, with `y = 1 - x` passed
/// separately so callers can keep precision when `x` is close to one.
pub(crate) fn inc_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * ln(x) + b * ln(y);
    let front = exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

/// Student-t CDF with `nu` degrees of freedom.
pub(crate) fn student_t_cdf(t: f64, nu: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    let tail = 0.5 * inc_beta(0.5 * nu, 0.5, x, y);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Log of the Student-t density normalizing constant.
pub(crate) fn student_t_ln_norm(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * ln(nu * core::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_cdf_known_values() {
        // nu = 1 is Cauchy: 1/2 + atan(t)/pi
        for t in [-5.0, -1.0, -0.2, 0.0, 0.7, 3.0] {
            let want = 0.5 + libm::atan(t) / core::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - want).abs() < 1e-13, "t={t}");
        }
        // nu = 2: 1/2 + t / (2 sqrt(2 + t^2))
        for t in [-4.0, -0.5, 0.0, 1.5, 10.0] {
            let want = 0.5 + t / (2.0 * libm::sqrt(2.0 + t * t));
            assert!((student_t_cdf(t, 2.0) - want).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn t_cdf_normal_limit() {
        let phi = |x: f64| 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2);
        assert!((student_t_cdf(1.96, 1e7) - phi(1.96)).abs() < 1e-7);
    }

    #[test]
    fn inc_beta_symmetry() {
        for (a, b, x) in [(2.0, 3.0, 0.3), (0.5, 0.5, 0.9), (50.0, 0.5, 0.99)] {
            let lhs = inc_beta(a, b, x, 1.0 - x);
            let rhs = 1.0 - inc_beta(b, a, 1.0 - x, x);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
