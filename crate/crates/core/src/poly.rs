//! Real roots of low-degree polynomials.

use std::f64::consts::PI;

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 (Cardano / trigonometric form,
/// each root refined by one Newton step).
pub fn real_cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    if c3 == 0.0 {
        return real_quadratic_roots(c2, c1, c0);
    }
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;
    // x = y - a/3: y^3 + p y + q = 0
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() + shift).collect()
    };
    for x in roots.iter_mut() {
        let f = ((c3 * *x + c2) * *x + c1) * *x + c0;
        let df = (3.0 * c3 * *x + 2.0 * c2) * *x + c1;
        if df != 0.0 {
            let step = f / df;
            if step.is_finite() {
                *x -= step;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

pub fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = if q == 0.0 { vec![0.0] } else { vec![q / a, c / q] };
    r.sort_by(f64::total_cmp);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_real_roots() {
        // (x-1)(x-2)(x+3) = x^3 - 7x + 6
        let r = real_cubic_roots(1.0, 0.0, -7.0, 6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn one_real_root() {
        // (x - 0.5)(x^2 + 1)
        let r = real_cubic_roots(2.0, -1.0, 2.0, -1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_fallback() {
        let r = real_cubic_roots(0.0, 1.0, -3.0, 2.0);
        assert_eq!(r, vec![1.0, 2.0]);
    }
}
