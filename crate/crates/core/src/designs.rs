//! Full factorial 2^d designs {-b, b}^d against the uniform law on the unit sphere.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::poly::real_cubic_roots;
use crate::specfun::lgamma;

/// Points (±b, ..., ±b); n = 2^d is implicit and never enumerated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorialDesign {
    pub d: usize,
    pub b: f64,
}

impl FactorialDesign {
    pub fn new(d: usize, b: f64) -> Result<Self> {
        if d < 2 {
            return domain(format!("dimension must be >= 2, got {d}"));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return domain(format!("half-width must be finite and >= 0, got {b}"));
        }
        Ok(Self { d, b })
    }

    /// Radius sqrt(d) b of the sphere carrying all points.
    pub fn radius(&self) -> f64 {
        (self.d as f64).sqrt() * self.b
    }

    pub fn distortion(&self, s: f64) -> Result<f64> {
        factorial_distortion(self.d, self.b, s)
    }

    pub fn covering_radius(&self) -> f64 {
        covering_radius(self.d, self.b)
    }
}

/// E|V_1| for V uniform on the unit sphere of R^d: Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)).
pub fn mean_abs_coordinate(d: usize) -> f64 {
    if d > 2000 {
        let df = d as f64;
        return (lgamma(0.5 * df) - lgamma(0.5 * (df + 1.0))).exp() / PI.sqrt();
    }
    let (mut k, mut e) = if d.is_multiple_of(2) { (2, 2.0 / PI) } else { (3, 0.5) };
    if d == 1 {
        return 1.0;
    }
    while k < d {
        e *= k as f64 / (k as f64 + 1.0);
        k += 2;
    }
    e
}

/// E{(sum_i |V_i|)^2} = 1 + 2 (d - 1) / pi.
fn second_abs_sum(d: usize) -> f64 {
    1.0 + 2.0 * (d as f64 - 1.0) / PI
}

/// E min_i ||V - x_i||^s for s in {2, 4}.
pub fn factorial_distortion(d: usize, b: f64, s: f64) -> Result<f64> {
    FactorialDesign::new(d, b)?;
    let df = d as f64;
    let e1 = mean_abs_coordinate(d);
    if s == 2.0 {
        Ok(1.0 - 2.0 * b * df * e1 + df * b * b)
    } else if s == 4.0 {
        let b2 = b * b;
        Ok(1.0 + 4.0 * b2 * second_abs_sum(d) + df * df * b2 * b2 + 2.0 * df * b2
            - 4.0 * b * df * e1 * (1.0 + df * b2))
    } else {
        Err(Error::Unsupported(format!("factorial distortion only for s in {{2, 4}}, got {s}")))
    }
}

/// Covering radius of the unit sphere by the design: sqrt(1 + d b^2 - 2 b).
pub fn covering_radius(d: usize, b: f64) -> f64 {
    (1.0 + d as f64 * b * b - 2.0 * b).max(0.0).sqrt()
}

/// Optimal half-width and criterion value for s = 2, 4 or infinity (covering radius).
pub fn factorial_optimal(d: usize, s: f64) -> Result<(f64, f64)> {
    if d < 2 {
        return domain(format!("dimension must be >= 2, got {d}"));
    }
    let df = d as f64;
    if s == 2.0 {
        let b = mean_abs_coordinate(d);
        return Ok((b, 1.0 - df * b * b));
    }
    if s == 4.0 {
        let e1 = mean_abs_coordinate(d);
        let s2 = second_abs_sum(d);
        let roots = real_cubic_roots(4.0 * df * df, -12.0 * df * df * e1, 8.0 * s2 + 4.0 * df, -4.0 * df * e1);
        let mut best = (0.0, factorial_distortion(d, 0.0, 4.0)?);
        for b in roots.into_iter().filter(|b| *b > 0.0) {
            let v = factorial_distortion(d, b, 4.0)?;
            if v < best.1 {
                best = (b, v);
            }
        }
        return Ok(best);
    }
    if s == f64::INFINITY {
        let b = 1.0 / df;
        return Ok((b, (1.0 - 1.0 / df).sqrt()));
    }
    Err(Error::Unsupported(format!("factorial optimum only for s in {{2, 4, inf}}, got {s}")))
}
