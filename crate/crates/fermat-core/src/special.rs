//! Complex Gamma and upper incomplete Gamma, enough for smoothed L-series
//! evaluation away from the real axis.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma(z) by the Lanczos approximation (g = 7), with reflection for Re z < 1/2.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI, 0.0) / (s * gamma(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// Upper incomplete Gamma(s, x) for real x > 0: power series for the lower
/// part when x is small relative to |s|, Lentz continued fraction otherwise.
pub fn gamma_upper(s: Complex64, x: f64) -> Complex64 {
    assert!(x > 0.0, "gamma_upper needs x > 0");
    if x < 1.0 + s.norm() {
        if s.re < 0.5 {
            return gamma_upper_descend(s, x);
        }
        gamma(s) - gamma_lower_series(s, x)
    } else {
        gamma_upper_cf(s, x)
    }
}

/// Upward shift to Re(s) >= 0.5 then Gamma(s, x) = (Gamma(s + 1, x) - x^s e^-x) / s,
/// with E_1 at s = 0.
fn gamma_upper_descend(s: Complex64, x: f64) -> Complex64 {
    let k = (0.5 - s.re).ceil().max(1.0) as usize;
    let xc = Complex64::new(x, 0.0);
    let top = s + k as f64;
    let mut g = if top.norm() < 1e-300 { Complex64::new(exp_integral_e1(x), 0.0) } else { gamma_upper(top, x) };
    for j in (0..k).rev() {
        let sj = s + j as f64;
        if sj.norm() < 1e-14 {
            g = Complex64::new(exp_integral_e1(x), 0.0);
            continue;
        }
        g = (g - xc.powc(sj) * (-x).exp()) / sj;
    }
    g
}

fn exp_integral_e1(x: f64) -> f64 {
    if x > 1.0 {
        return gamma_upper_cf(Complex64::new(0.0, 0.0), x).re;
    }
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let t = term / k as f64;
        sum += t;
        if t.abs() < 1e-18 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn gamma_lower_series(s: Complex64, x: f64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0) / s;
    let mut sum = term;
    for k in 1..2000 {
        term *= x / (s + k as f64);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum * Complex64::new(x, 0.0).powc(s) * (-x).exp()
}

fn gamma_upper_cf(s: Complex64, x: f64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = Complex64::new(x + 1.0, 0.0) - s;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..5000 {
        let an = -(i as f64) * (Complex64::new(i as f64, 0.0) - s);
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = Complex64::new(1.0, 0.0) / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * Complex64::new(x, 0.0).powc(s) * (-x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(c(5.0, 0.0)) - 24.0).norm() < 1e-10);
        assert!((gamma(c(0.5, 0.0)) - PI.sqrt()).norm() < 1e-13);
        // |Gamma(1/2 + it)|^2 = pi / cosh(pi t)
        for t in [0.5, 1.0, 3.0] {
            let g = gamma(c(0.5, t));
            assert!((g.norm_sqr() - PI / (PI * t).cosh()).abs() < 1e-12);
        }
        // reflection region
        assert!((gamma(c(-0.5, 0.0)) + 2.0 * PI.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn incomplete_gamma_closed_forms() {
        for x in [0.1, 0.7, 2.0, 5.0, 30.0] {
            // Gamma(1, x) = e^-x, Gamma(2, x) = (1 + x) e^-x
            assert!((gamma_upper(c(1.0, 0.0), x) - (-x as f64).exp()).norm() < 1e-14);
            assert!((gamma_upper(c(2.0, 0.0), x) - (1.0 + x) * (-x as f64).exp()).norm() < 1e-13);
        }
        // the two branches agree where they overlap
        for s in [c(1.0, 0.5), c(1.0, 1.0), c(0.7, -0.3)] {
            for x in [1.5, 2.5, 4.0] {
                let a = gamma(s) - gamma_lower_series(s, x);
                let b = gamma_upper_cf(s, x);
                assert!((a - b).norm() < 1e-12 * b.norm().max(1e-3), "{s} {x}");
            }
        }
    }

    #[test]
    fn incomplete_gamma_nonpositive_order() {
        // E_1(1) = 0.21938393439552..., Gamma(-1, x) = e^-x / x - E_1(x)
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-13);
        assert!((exp_integral_e1(0.3) - gamma_upper_cf(c(0.0, 0.0), 0.3).re).abs() < 1e-9);
        for x in [0.2, 0.9, 3.0] {
            let want = (-x as f64).exp() / x - exp_integral_e1(x);
            assert!((gamma_upper(c(-1.0, 0.0), x) - want).norm() < 1e-11, "{x}");
        }
        // continuity across the branch
        let a = gamma_upper(c(-0.8, 0.2), 0.5);
        let b = gamma_upper(c(-0.8 + 1e-9, 0.2), 0.5);
        assert!((a - b).norm() < 1e-6);
    }
}
