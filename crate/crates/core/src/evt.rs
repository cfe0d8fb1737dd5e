//! Extreme-value approximation of nearest-codeword distances for sphere quantisers.
//!
//! For a code of n i.i.d. uniform points on the sphere of radius a and a target at
//! radius r, the squared distance to the nearest codeword behaves like
//! (r - a)^2 + 4 a r kappa xi with xi Weibull, P(xi <= z) = 1 - exp(-z^delta).

use log::debug;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::models::{RadialLaw, RadialShape};
use crate::poly::real_cubic_roots;
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::search::{scan_then_golden, SearchConfig};
use crate::specfun::{inv_reg_inc_beta, lbeta, lgamma};

const WEIBULL_TAIL: f64 = 45.0;

fn tol() -> Tolerance {
    Tolerance {
        rel: 1e-12,
        abs: 1e-16,
        max_depth: 60,
    }
}

fn check_dim(d: usize) -> Result<f64> {
    if d < 3 {
        return domain(format!("extreme-value approximation needs d >= 3, got {d}"));
    }
    Ok(0.5 * (d as f64 - 1.0))
}

fn check_n(n: u64) -> Result<()> {
    if n < 2 {
        return domain(format!("code size must be >= 2, got {n}"));
    }
    Ok(())
}

/// The 1/n quantile of Beta(delta, delta), delta = (d - 1)/2.
pub fn kappa(n: u64, d: usize) -> Result<f64> {
    let delta = check_dim(d)?;
    check_n(n)?;
    let p = 1.0 / n as f64;
    // I_x(δ,δ) is symmetric about 1/2
    if d == 3 || n == 2 {
        return Ok(p.min(0.5));
    }
    Ok(inv_reg_inc_beta(p, delta, delta)?.min(0.5))
}

/// Explicit lower and upper bounds on `kappa(n, d)` for d >= 5.
pub fn kappa_bounds(n: u64, d: usize) -> Result<(f64, f64)> {
    let delta = check_dim(d)?;
    check_n(n)?;
    if d < 5 {
        return Err(Error::Unsupported(format!("kappa bounds need d >= 5, got {d}")));
    }
    let nf = n as f64;
    let dp = delta.floor();
    let x = (2.0 / nf).powf(1.0 / (dp - 1.0)).min(1.0);
    let lo = 0.5 * x / (1.0 + (1.0 - x).sqrt());
    let c_d = (delta.ln() + lbeta(delta, delta)).exp().powf(1.0 / delta);
    let inner = (1.0 - 4.0 * c_d * nf.powf(-1.0 / delta)).max(0.0);
    let hi = 0.5 * (1.0 - inner.sqrt());
    Ok((lo, hi))
}

/// Joint growth of n and d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GrowthRegime {
    /// n^(1/d) grows without bound.
    SuperExponential,
    /// n ~ C lambda^d.
    Exponential { lambda: f64, c: f64 },
    /// log(n)/d tends to zero.
    SubExponential,
}

impl GrowthRegime {
    pub fn validate(&self) -> Result<()> {
        if let GrowthRegime::Exponential { lambda, c } = *self {
            if !(lambda > 1.0) || !lambda.is_finite() {
                return domain(format!("exponential regime needs lambda > 1, got {lambda}"));
            }
            if !(c > 0.0) {
                return domain(format!("exponential regime needs C > 0, got {c}"));
            }
        }
        Ok(())
    }
}

/// Limit of kappa under the given regime.
pub fn kappa_limit(regime: GrowthRegime) -> Result<f64> {
    regime.validate()?;
    Ok(match regime {
        GrowthRegime::SuperExponential => 0.0,
        GrowthRegime::Exponential { lambda, .. } => 0.5 * (1.0 - (1.0 - 1.0 / (lambda * lambda)).sqrt()),
        GrowthRegime::SubExponential => 0.5,
    })
}

/// Limit of the optimal radius (relative to the concentration radius).
pub fn evt_limit_radius(regime: GrowthRegime) -> Result<f64> {
    regime.validate()?;
    Ok(match regime {
        GrowthRegime::SuperExponential => 1.0,
        GrowthRegime::Exponential { lambda, .. } => (1.0 - 1.0 / (lambda * lambda)).sqrt(),
        GrowthRegime::SubExponential => 0.0,
    })
}

/// E xi^k = Gamma(1 + k/delta).
pub fn weibull_moment(delta: f64, k: f64) -> f64 {
    lgamma(1.0 + k / delta).exp()
}

/// E over xi of ((r - a)^2 + 4 a r kappa xi)^(s/2), xi = v^2 with density (d-1) v^(d-2) exp(-v^(d-1)).
fn weibull_expectation(r: f64, a: f64, kap: f64, d: usize, s: f64) -> Result<f64> {
    let dm1 = d as f64 - 1.0;
    let c = 4.0 * a * r * kap;
    let base = (r - a) * (r - a);
    if c == 0.0 {
        return Ok(base.powf(0.5 * s));
    }
    let v_hi = WEIBULL_TAIL.powf(1.0 / dm1);
    let f = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let w = v.powf(dm1);
        let dens = dm1 * w / v * (-w).exp();
        (base + c * v * v).powf(0.5 * s) * dens
    };
    let breaks = [0.0, 1.0f64.min(v_hi), v_hi];
    integrate_with_breaks(f, &breaks, &tol()).map(|e| e.value)
}

fn radial_expectation(target: &RadialLaw, a: f64, mut g: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if let RadialShape::PointMass { radius } = target.shape() {
        return g(radius);
    }
    let (lo, hi) = target.support();
    let mut breaks = vec![lo];
    if a > lo && a < hi {
        breaks.push(a);
    }
    if let RadialShape::ScaledChi { scale } = target.shape() {
        let mode = scale * (1.0 - 1.0 / target.dim() as f64).sqrt();
        if mode > lo && mode < hi && (mode - a).abs() > 1e-9 * hi {
            breaks.push(mode);
        }
    }
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    let mut failure = None;
    let est = integrate_with_breaks(
        |r| match g(r) {
            Ok(v) => v * target.density(r),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        &tol(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est?.value)
}

fn check_radius(a: f64) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return domain(format!("radius must be finite and >= 0, got {a}"));
    }
    Ok(())
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("distortion order must be finite and > 0, got {s}"));
    }
    Ok(())
}

/// Extreme-value approximation of E||X - nearest codeword||^s for a code on the sphere of radius a.
pub fn evt_distortion(target: &RadialLaw, a: f64, n: u64, s: f64) -> Result<f64> {
    let d = target.dim();
    let delta = check_dim(d)?;
    check_radius(a)?;
    check_order(s)?;
    let kap = kappa(n, d)?;
    let m = |k: u32| target.moment(k);
    let g1 = weibull_moment(delta, 1.0);
    if s == 2.0 {
        return Ok(m(2) - 2.0 * a * m(1) + a * a + 4.0 * a * kap * g1 * m(1));
    }
    if s == 4.0 {
        let g2 = weibull_moment(delta, 2.0);
        let a2 = a * a;
        let central = m(4) - 4.0 * a * m(3) + 6.0 * a2 * m(2) - 4.0 * a2 * a * m(1) + a2 * a2;
        let cross = 8.0 * a * kap * g1 * (m(3) - 2.0 * a * m(2) + a2 * m(1));
        return Ok(central + cross + 16.0 * a2 * kap * kap * m(2) * g2);
    }
    evt_distortion_quadrature(target, a, n, s)
}

/// Same quantity by quadrature over the Weibull and radial laws, for any s > 0.
pub fn evt_distortion_quadrature(target: &RadialLaw, a: f64, n: u64, s: f64) -> Result<f64> {
    let d = target.dim();
    check_dim(d)?;
    check_radius(a)?;
    check_order(s)?;
    let kap = kappa(n, d)?;
    radial_expectation(target, a, |r| weibull_expectation(r, a, kap, d, s))
}

/// Approximate optimal radius and the approximate distortion there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvtOptimum {
    pub radius: f64,
    pub distortion: f64,
}

/// Minimiser over a >= 0 of `evt_distortion`.
pub fn evt_optimal_radius(target: &RadialLaw, n: u64, s: f64) -> Result<EvtOptimum> {
    let d = target.dim();
    let delta = check_dim(d)?;
    check_order(s)?;
    let kap = kappa(n, d)?;
    let m = |k: u32| target.moment(k);
    let g1 = weibull_moment(delta, 1.0);
    if s == 2.0 {
        let radius = (m(1) * (1.0 - 2.0 * kap * g1)).max(0.0);
        return Ok(EvtOptimum {
            radius,
            distortion: evt_distortion(target, radius, n, s)?,
        });
    }
    if s == 4.0 {
        let g2 = weibull_moment(delta, 2.0);
        let kg1 = kap * g1;
        let roots = real_cubic_roots(
            4.0,
            -12.0 * m(1) + 24.0 * kg1 * m(1),
            12.0 * m(2) - 32.0 * kg1 * m(2) + 32.0 * kap * kap * g2 * m(2),
            -4.0 * m(3) + 8.0 * kg1 * m(3),
        );
        let mut best = EvtOptimum {
            radius: 0.0,
            distortion: evt_distortion(target, 0.0, n, s)?,
        };
        for a in roots.into_iter().filter(|a| *a > 0.0) {
            let v = evt_distortion(target, a, n, s)?;
            if v < best.distortion {
                best = EvtOptimum { radius: a, distortion: v };
            }
        }
        return Ok(best);
    }
    let hi = 1.5 * target.quantile(0.999_999)?;
    let min = scan_then_golden(|a| evt_distortion(target, a, n, s), &SearchConfig::new(0.0, hi), 33)?;
    debug!("evt optimum for s = {s}: a = {} after {} evaluations", min.x, min.evaluations);
    Ok(EvtOptimum {
        radius: min.x,
        distortion: min.value,
    })
}

/// Approximate mean and (for s in {2, 4}) variance of ||u - nearest||^s at ||u|| = r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseMoments {
    pub mean: f64,
    pub variance: Option<f64>,
}

/// Pointwise moments; the mean by Weibull quadrature, the variance in closed form.
pub fn evt_pointwise_moments(r: f64, a: f64, n: u64, d: usize, s: f64) -> Result<PointwiseMoments> {
    check_dim(d)?;
    check_radius(a)?;
    check_radius(r)?;
    check_order(s)?;
    let kap = kappa(n, d)?;
    let mean = weibull_expectation(r, a, kap, d, s)?;
    let variance = if s == 2.0 || s == 4.0 {
        Some(evt_pointwise_variance(r, a, n, d, s)?)
    } else {
        None
    };
    Ok(PointwiseMoments { mean, variance })
}

/// Closed-form variance of ||u - nearest||^s, s in {2, 4}.
pub fn evt_pointwise_variance(r: f64, a: f64, n: u64, d: usize, s: f64) -> Result<f64> {
    let delta = check_dim(d)?;
    let kap = kappa(n, d)?;
    let g = |k: f64| weibull_moment(delta, k);
    let var_xi = g(2.0) - g(1.0).powi(2);
    let pre = a * a * r * r * kap * kap;
    if s == 2.0 {
        return Ok(16.0 * pre * var_xi);
    }
    if s == 4.0 {
        let var_xi2 = g(4.0) - g(2.0).powi(2);
        let cov = g(3.0) - g(1.0) * g(2.0);
        let c2 = (r - a) * (r - a);
        return Ok(64.0
            * pre
            * (c2 * c2 * var_xi + 4.0 * a * a * r * r * kap * kap * var_xi2 + 4.0 * a * r * c2 * kap * cov));
    }
    Err(Error::Unsupported(format!("pointwise variance only for s in {{2, 4}}, got {s}")))
}

/// Quantile approximation for the distance from a unit-norm point to the nearest codeword.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvtQuantile {
    /// Weibull gamma-quantile (-ln(1 - gamma))^(1/delta).
    pub t_gamma: f64,
    /// Approximate gamma-quantile of the distance at radius a.
    pub q_hat: f64,
    /// Radius minimising the approximate quantile.
    pub a_star: f64,
    /// Approximate quantile at `a_star`.
    pub q_hat_star: f64,
}

pub fn evt_quantile(gamma: f64, a: f64, n: u64, d: usize) -> Result<EvtQuantile> {
    let delta = check_dim(d)?;
    check_radius(a)?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("quantile level must lie in (0, 1), got {gamma}"));
    }
    let kap = kappa(n, d)?;
    let t_gamma = (-(-gamma).ln_1p()).powf(1.0 / delta);
    let q = |a: f64| ((1.0 - a) * (1.0 - a) + 4.0 * a * kap * t_gamma).sqrt();
    let a_star = (1.0 - 2.0 * kap * t_gamma).max(0.0);
    Ok(EvtQuantile {
        t_gamma,
        q_hat: q(a),
        a_star,
        q_hat_star: q(a_star),
    })
}

/// Level gamma at which the quantile-optimal radius equals the s = 2 optimal radius:
/// 1 - exp(-Gamma(1 + 1/delta)^delta).
pub fn gamma_equivalent(d: usize) -> Result<f64> {
    let delta = check_dim(d)?;
    let g1 = weibull_moment(delta, 1.0);
    Ok(-(-(g1.ln() * delta).exp()).exp_m1())
}

/// Everything the approximation says about one (target, n, s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvtSummary {
    pub kappa: f64,
    pub kappa_bounds: Option<(f64, f64)>,
    pub a_hat: f64,
    pub e_s: f64,
    pub delta: f64,
    pub delta_prime: u64,
}

pub fn evt_summary(target: &RadialLaw, n: u64, s: f64) -> Result<EvtSummary> {
    let d = target.dim();
    let delta = check_dim(d)?;
    let opt = evt_optimal_radius(target, n, s)?;
    Ok(EvtSummary {
        kappa: kappa(n, d)?,
        kappa_bounds: if d >= 5 { Some(kappa_bounds(n, d)?) } else { None },
        a_hat: opt.radius,
        e_s: opt.distortion,
        delta,
        delta_prime: delta.floor() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(100, 3).unwrap(), 0.01);
        // 3t^2 - 2t^3 = 1/n for d = 5
        for (n, want) in [(10u64, 0.195_800_72), (100, 0.058_903_14)] {
            let k = kappa(n, 5).unwrap();
            assert!((3.0 * k * k - 2.0 * k * k * k - 1.0 / n as f64).abs() < 1e-14);
            assert!((k - want).abs() < 1e-6, "{k}");
        }
        assert!(kappa(10, 2).is_err());
        assert!(kappa(1, 5).is_err());
    }

    #[test]
    fn bounds_examples() {
        let (lo, hi) = kappa_bounds(100, 5).unwrap();
        assert!((lo - 0.005025).abs() < 1e-6, "{lo}");
        assert!((hi - 0.06152).abs() < 1e-5, "{hi}");
        assert!(matches!(kappa_bounds(100, 4), Err(Error::Unsupported(_))));
        let (_, hi) = kappa_bounds(2, 30).unwrap();
        assert_eq!(hi, 0.5);
    }

    #[test]
    fn regimes() {
        let l = GrowthRegime::Exponential { lambda: 2.0, c: 1.0 };
        assert!((kappa_limit(l).unwrap() - 0.066_987_298).abs() < 1e-8);
        assert!((evt_limit_radius(l).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(kappa_limit(GrowthRegime::SubExponential).unwrap(), 0.5);
        assert_eq!(evt_limit_radius(GrowthRegime::SuperExponential).unwrap(), 1.0);
        assert!(kappa_limit(GrowthRegime::Exponential { lambda: 1.0, c: 1.0 }).is_err());
        assert!(evt_limit_radius(GrowthRegime::Exponential { lambda: 2.0, c: 0.0 }).is_err());
    }

    #[test]
    fn optimum_arithmetic() {
        let t = RadialLaw::point_mass(1.0, 3).unwrap();
        let o = evt_optimal_radius(&t, 100, 2.0).unwrap();
        assert!((o.radius - 0.98).abs() < 1e-15);
        assert!((o.distortion - 0.0396).abs() < 1e-14);
        assert!((evt_distortion(&t, 0.98, 100, 2.0).unwrap() - 0.0396).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let t = RadialLaw::scaled_chi(1.0, 7).unwrap();
        for s in [2.0, 4.0] {
            let c = evt_distortion(&t, 0.8, 300, s).unwrap();
            let q = evt_distortion_quadrature(&t, 0.8, 300, s).unwrap();
            assert!((c - q).abs() < 1e-10 * c, "s={s}: {c} vs {q}");
        }
    }

    #[test]
    fn variance_d3() {
        let v = evt_pointwise_variance(1.0, 0.7, 50, 3, 2.0).unwrap();
        assert!((v - 16.0 * 0.49 / 2500.0).abs() < 1e-15);
        assert!(evt_pointwise_variance(1.0, 0.7, 50, 3, 3.0).is_err());
    }

    #[test]
    fn quantile_identities() {
        let q = evt_quantile(1.0 - (-1.0f64).exp(), 0.9, 1000, 8).unwrap();
        assert!((q.t_gamma - 1.0).abs() < 1e-14);
        let k = kappa(1000, 8).unwrap();
        let kt = k * q.t_gamma;
        assert!((q.q_hat_star.powi(2) - 4.0 * kt * (1.0 - kt)).abs() < 1e-14);
        assert!(evt_quantile(0.0, 0.9, 10, 4).is_err());
        let g = gamma_equivalent(10_000).unwrap();
        assert!((g - 0.429_624).abs() < 1e-3);
    }
}
