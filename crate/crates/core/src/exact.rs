//! Exact expected distortion of random i.i.d. quantisers for spherically
//! symmetric targets, up to quadrature tolerance.

use crate::error::{domain, Error, Result};
use crate::models::{QuantiserFamily, QuantiserKind, RadialLaw, RadialShape};
use crate::quad::{gauss_legendre_refined, integrate_with_breaks, Tolerance};
use crate::specfun::{inv_reg_inc_beta, SymmetricBeta};

/// Tolerances for the nested integrals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    pub radial_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_depth: 40,
            radial_nodes: 257,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("quadrature tolerances must be > 0".into()));
        }
        if self.radial_nodes < 32 || self.max_depth == 0 {
            return Err(Error::InvalidConfig("radial_nodes must be >= 32 and max_depth >= 1".into()));
        }
        Ok(())
    }

    fn radial(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_depth: self.max_depth,
        }
    }

    fn distance(&self) -> Tolerance {
        Tolerance {
            rel: 0.1 * self.rel_tol,
            abs: 0.1 * self.abs_tol,
            max_depth: self.max_depth,
        }
    }

    fn hit(&self, n: f64) -> Tolerance {
        Tolerance {
            rel: 0.01 * self.rel_tol,
            abs: 0.01 * self.abs_tol / n,
            max_depth: self.max_depth,
        }
    }
}

/// Everything that determines D_{mu,s} for a random design of size n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionQuery {
    pub n: u64,
    pub s: f64,
    pub target: RadialLaw,
    pub quantiser: QuantiserFamily,
    pub quad: QuadratureConfig,
}

impl DistortionQuery {
    pub fn new(target: RadialLaw, quantiser: QuantiserFamily, n: u64, s: f64) -> Result<Self> {
        let q = Self {
            n,
            s,
            target,
            quantiser,
            quad: QuadratureConfig::default(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_quad(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn with_quantiser(mut self, quantiser: QuantiserFamily) -> Self {
        self.quantiser = quantiser;
        self
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    pub fn d(&self) -> usize {
        self.target.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain("design size n must be >= 1");
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return domain(format!("moment order s must be finite and > 0, got {}", self.s));
        }
        if self.target.dim() != self.quantiser.dim() {
            return domain(format!(
                "target dimension {} differs from quantiser dimension {}",
                self.target.dim(),
                self.quantiser.dim()
            ));
        }
        self.quad.validate()
    }
}

/// upsilon(t, rho, r) = [t^2 - (rho - r)^2] / (4 rho r).
pub fn nu_factor(t: f64, rho: f64, r: f64) -> f64 {
    let (near, far) = if rho <= r {
        ((t - r) + rho, (t + r) - rho)
    } else {
        ((t - rho) + r, (t + rho) - r)
    };
    near * far / (4.0 * rho * r)
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Sphere { a: f64 },
    Atom { alpha: f64, a: f64 },
    Law { law: RadialLaw, lo: f64, hi: f64 },
}

/// Conditional hit probability P(r, t) for one quantiser family.
#[derive(Debug, Clone)]
struct HitModel {
    beta: SymmetricBeta,
    kernel: Kernel,
    tol: Tolerance,
    radial_nodes: usize,
}

impl HitModel {
    fn new(quantiser: &QuantiserFamily, cfg: &QuadratureConfig, n: f64) -> Result<Self> {
        let kernel = match quantiser.kind() {
            QuantiserKind::SphereUniform { radius } => Kernel::Sphere { a: radius },
            QuantiserKind::SphereWithAtom { weight, radius } => {
                if weight == 1.0 {
                    Kernel::Sphere { a: radius }
                } else {
                    Kernel::Atom {
                        alpha: weight,
                        a: radius,
                    }
                }
            }
            QuantiserKind::BallUniform { .. } | QuantiserKind::NormalScaled { .. } => {
                let law = quantiser.radial_law().expect("continuous family has a radial law");
                let (lo, hi) = law.support();
                Kernel::Law { law, lo, hi }
            }
        };
        Ok(Self {
            beta: SymmetricBeta::new(quantiser.dim())?,
            kernel,
            tol: cfg.hit(n),
            radial_nodes: cfg.radial_nodes,
        })
    }

    fn sphere(&self, a: f64, r: f64, t: f64) -> f64 {
        let diff = (r - a).abs();
        if t < diff {
            return 0.0;
        }
        if r == 0.0 || a == 0.0 || t >= r + a {
            return 1.0;
        }
        self.beta.cdf((t - diff) * (t + diff) / (4.0 * a * r))
    }

    fn prob(&self, r: f64, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Ok(0.0);
        }
        match self.kernel {
            Kernel::Sphere { a } => Ok(self.sphere(a, r, t)),
            Kernel::Atom { alpha, a } => {
                let atom = if t >= r { 1.0 - alpha } else { 0.0 };
                Ok(alpha * self.sphere(a, r, t) + atom)
            }
            Kernel::Law { law, lo, hi } => {
                if r == 0.0 {
                    return Ok(law.cdf(t));
                }
                let mut p = if t > r { law.cdf(t - r) } else { 0.0 };
                let a = (t - r).abs().max(lo);
                let b = (t + r).min(hi);
                if b > a {
                    let beta = &self.beta;
                    let est = gauss_legendre_refined(
                        |rho| {
                            if rho <= 0.0 {
                                0.0
                            } else {
                                beta.cdf(nu_factor(t, rho, r)) * law.density(rho)
                            }
                        },
                        a,
                        b,
                        16,
                        self.radial_nodes,
                        &self.tol,
                        true,
                    )?;
                    p += est.value;
                }
                Ok(p.clamp(0.0, 1.0))
            }
        }
    }

    /// Range of t outside which P(r, t) is identically 0 or 1.
    fn t_range(&self, r: f64) -> (f64, f64) {
        match self.kernel {
            Kernel::Sphere { a } => ((r - a).abs(), r + a),
            Kernel::Atom { alpha, a } => {
                if alpha == 0.0 {
                    (r, r)
                } else {
                    ((r - a).abs().min(r), r + a)
                }
            }
            Kernel::Law { lo, hi, .. } => {
                let low = if r < lo {
                    lo - r
                } else if r > hi {
                    r - hi
                } else {
                    0.0
                };
                (low, r + hi)
            }
        }
    }

    /// Largest radius a codeword can have.
    fn max_radius(&self) -> f64 {
        match self.kernel {
            Kernel::Sphere { a } | Kernel::Atom { a, .. } => a,
            Kernel::Law { hi, .. } => hi,
        }
    }

    /// Radii where P(., t) or the t-range bends.
    fn radial_kinks(&self) -> Vec<f64> {
        match self.kernel {
            Kernel::Sphere { a } => vec![a],
            Kernel::Atom { a, .. } => vec![a, 0.5 * a],
            Kernel::Law { law, lo, hi } => match law.shape() {
                RadialShape::BallPower { .. } => vec![hi],
                _ => vec![lo, hi],
            },
        }
    }
}

/// The assembled nested integral for one query.
struct Engine {
    hit: HitModel,
    n: f64,
    s: f64,
    target: RadialLaw,
    cfg: QuadratureConfig,
    /// Beta quantiles at the hit levels used as breakpoints.
    levels: Vec<f64>,
    cut_level: f64,
    cut_upsilon: f64,
}

const SURVIVAL_FLOOR: f64 = 1e-17;

impl Engine {
    fn new(q: &DistortionQuery) -> Result<Self> {
        q.validate()?;
        let n = q.n as f64;
        let hit = HitModel::new(&q.quantiser, &q.quad, n)?;
        let cut_level = -(SURVIVAL_FLOOR.ln() / n).exp_m1();
        let delta = hit.beta.delta();
        let mut probs = vec![0.25 / n, 1.0 / n, 4.0 / n, 16.0 / n];
        if let Kernel::Atom { alpha, .. } = hit.kernel {
            if alpha > 0.0 {
                probs.extend([1.0 / (n * alpha), 4.0 / (n * alpha)]);
            }
        }
        let mut levels = Vec::new();
        if matches!(hit.kernel, Kernel::Sphere { .. } | Kernel::Atom { .. }) {
            for p in probs {
                if p < cut_level {
                    levels.push(inv_reg_inc_beta(p, delta, delta)?);
                }
            }
        }
        let cut_upsilon = inv_reg_inc_beta(cut_level.min(1.0), delta, delta)?;
        Ok(Self {
            hit,
            n,
            s: q.s,
            target: q.target,
            cfg: q.quad,
            levels,
            cut_level,
            cut_upsilon,
        })
    }

    fn survival(&self, p: f64) -> f64 {
        if p < 1e-300 {
            1.0
        } else if p >= 1.0 {
            0.0
        } else {
            (self.n * (-p).ln_1p()).exp()
        }
    }

    fn level_point(&self, r: f64, p: f64, lo: f64, hi: f64) -> Result<f64> {
        let (mut lo, mut hi) = (lo, hi);
        let width = hi - lo;
        for _ in 0..60 {
            if hi - lo <= 1e-3 * width {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.hit.prob(r, mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Breakpoints in t for the conditional integral at radius r.
    fn breaks(&self, r: f64, t_lo: f64, t_hi: f64) -> Result<Vec<f64>> {
        let mut pts = vec![t_lo, t_hi];
        match self.hit.kernel {
            Kernel::Sphere { a } | Kernel::Atom { a, .. } => {
                if r > 0.0 && a > 0.0 {
                    let diff = (r - a).abs();
                    let map = |u: f64| (diff * diff + 4.0 * a * r * u).sqrt();
                    for &u in &self.levels {
                        pts.push(map(u));
                    }
                    pts.push(map(self.cut_upsilon));
                }
                if let Kernel::Atom { .. } = self.hit.kernel {
                    pts.push(r);
                    if r > 0.0 && a > 0.0 {
                        pts.push((r - a).abs());
                    }
                }
            }
            Kernel::Law { .. } => {
                let mut lo = t_lo;
                let mut probs: Vec<f64> = [1.0 / self.n, 16.0 / self.n]
                    .into_iter()
                    .filter(|p| *p < self.cut_level)
                    .collect();
                if self.cut_level < 1.0 {
                    probs.push(self.cut_level);
                }
                for p in probs {
                    let t = self.level_point(r, p, lo, t_hi)?;
                    pts.push(t);
                    lo = t;
                }
            }
        }
        pts.retain(|t| t.is_finite() && *t >= t_lo && *t <= t_hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
        // at most a doubling of t per piece
        let mut split = Vec::with_capacity(pts.len());
        for w in pts.windows(2) {
            split.push(w[0]);
            if w[0] > 0.0 {
                let mut t = 2.0 * w[0];
                while t < w[1] {
                    split.push(t);
                    t *= 2.0;
                }
            }
        }
        split.extend(pts.last());
        Ok(split)
    }

    /// E[min distance^s | ||U|| = r].
    fn conditional(&self, r: f64) -> Result<f64> {
        let (t_lo, t_hi) = self.hit.t_range(r);
        let base = if t_lo > 0.0 { t_lo.powf(self.s) } else { 0.0 };
        if !(t_hi > t_lo) {
            return Ok(base);
        }
        // Integrate in u = t^s: int s t^(s-1) S(t) dt = int S(u^(1/s)) du.
        let s = self.s;
        let inv_s = 1.0 / s;
        let pts: Vec<f64> = self.breaks(r, t_lo, t_hi)?.iter().map(|t| t.powf(s)).collect();
        let mut failure = None;
        let est = integrate_with_breaks(
            |u| {
                let t = if s == 1.0 { u } else { u.powf(inv_s) };
                match self.hit.prob(r, t) {
                    Ok(p) => self.survival(p),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            &pts,
            &self.cfg.distance(),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(base + est?.value)
    }

    /// Pieces of the target support, split at kinks of the integrand.
    fn target_pieces(&self, extra: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.target.support();
        let mut pts = vec![lo, hi];
        pts.extend(self.hit.radial_kinks());
        pts.extend_from_slice(extra);
        pts.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
        pts
    }

    /// E over the target radius of g(r).
    fn radial_expectation(&self, extra_kinks: &[f64], g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        if let RadialShape::PointMass { radius } = self.target.shape() {
            return g(radius);
        }
        let pts = self.target_pieces(extra_kinks);
        let tol = self.cfg.radial();
        let mut total = 0.0;
        for w in pts.windows(2) {
            let mut failure = None;
            let est = gauss_legendre_refined(
                |r| match g(r) {
                    Ok(v) => v * self.target.density(r),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                w[0],
                w[1],
                16,
                self.cfg.radial_nodes,
                &tol,
                true,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            total += est?.value;
        }
        Ok(total)
    }

    fn distortion(&self) -> Result<f64> {
        self.radial_expectation(&[], |r| self.conditional(r))
    }

    fn cdf(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Ok(0.0);
        }
        let m = self.hit.max_radius();
        let kinks = [t, t - m, t + m, m - t];
        let surv = self.radial_expectation(&kinks, |r| Ok(self.survival(self.hit.prob(r, t)?)))?;
        Ok((1.0 - surv).clamp(0.0, 1.0))
    }

    fn t_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.target.support();
        let mut t_min = f64::INFINITY;
        let mut t_max: f64 = 0.0;
        let mut probe = vec![lo, hi];
        probe.extend(self.hit.radial_kinks().into_iter().filter(|x| *x >= lo && *x <= hi));
        for r in probe {
            let (a, b) = self.hit.t_range(r);
            t_min = t_min.min(a);
            t_max = t_max.max(b);
        }
        (t_min, t_max)
    }
}

/// P{||Z - u|| <= t} for ||u|| = r, Z drawn from the quantiser family.
pub fn hit_probability(quantiser: &QuantiserFamily, r: f64, t: f64) -> Result<f64> {
    hit_probability_with(quantiser, r, t, &QuadratureConfig::default())
}

pub fn hit_probability_with(quantiser: &QuantiserFamily, r: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(r >= 0.0) || !(t >= 0.0) {
        return domain(format!("hit_probability requires r, t >= 0, got r={r}, t={t}"));
    }
    HitModel::new(quantiser, cfg, 1.0)?.prob(r, t)
}

/// Mean distance c.d.f. F_n(t) = 1 - E[(1 - P(||U||, t))^n].
pub fn mean_distance_cdf(q: &DistortionQuery, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("distance must be >= 0, got {t}"));
    }
    Engine::new(q)?.cdf(t)
}

/// Expected (mu, s)-distortion; closed form in d = 3 for even s and sphere-on-sphere.
pub fn expected_distortion(q: &DistortionQuery) -> Result<f64> {
    q.validate()?;
    if let Some(v) = closed_form_d3(q) {
        return Ok(v);
    }
    expected_distortion_numeric(q)
}

/// Expected distortion always by the nested quadrature.
pub fn expected_distortion_numeric(q: &DistortionQuery) -> Result<f64> {
    let v = Engine::new(q)?.distortion()?;
    if !v.is_finite() {
        return Err(Error::Numerical(format!("distortion not finite for {q:?}")));
    }
    Ok(v)
}

fn closed_form_d3(q: &DistortionQuery) -> Option<f64> {
    if q.d() != 3 || q.s.fract() != 0.0 || !(q.s as u64).is_multiple_of(2) || q.s > 200.0 {
        return None;
    }
    let RadialShape::PointMass { radius: r0 } = q.target.shape() else {
        return None;
    };
    let a = match q.quantiser.kind() {
        QuantiserKind::SphereUniform { radius } => radius,
        QuantiserKind::SphereWithAtom { weight: 1.0, radius } => radius,
        _ => return None,
    };
    Some(sphere_distortion_d3(q.n, q.s as u32, a, r0))
}

/// d = 3, even s: D = |r0-a|^s + 2 a r0 s sum_k C(m,k) (r0-a)^(2(m-k)) (4 a r0)^k B(k+1, n+1), m = s/2 - 1.
pub fn sphere_distortion_d3(n: u64, s: u32, a: f64, r0: f64) -> f64 {
    assert!(s >= 2 && s.is_multiple_of(2), "closed form needs even s");
    let m = (s / 2 - 1) as u64;
    let diff2 = (r0 - a) * (r0 - a);
    let four = 4.0 * a * r0;
    let nf = n as f64;
    let mut beta = 1.0 / (nf + 1.0);
    let mut binom = 1.0;
    let mut sum = 0.0;
    for k in 0..=m {
        if k > 0 {
            beta *= k as f64 / (nf + k as f64 + 1.0);
            binom *= (m - k + 1) as f64 / k as f64;
        }
        sum += binom * diff2.powi((m - k) as i32) * four.powi(k as i32) * beta;
    }
    diff2.powi(s as i32 / 2) + 2.0 * a * r0 * s as f64 * sum
}

/// Distortion of the sphere-with-atom design on the unit-sphere target.
pub fn mixture_distortion(d: usize, n: u64, s: f64, alpha: f64, a: f64) -> Result<f64> {
    mixture_distortion_with(d, n, s, alpha, a, &QuadratureConfig::default())
}

pub fn mixture_distortion_with(d: usize, n: u64, s: f64, alpha: f64, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("atom weight must be in [0, 1], got {alpha}"));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return domain(format!("radius must be >= 0, got {a}"));
    }
    if n == 0 || !(s > 0.0) {
        return domain("mixture distortion needs n >= 1 and s > 0");
    }
    let beta = SymmetricBeta::new(d)?;
    let nf = n as f64;
    let lo = (1.0 - a).abs();
    let hi = 1.0 + a;
    let inc = |t: f64| {
        if a == 0.0 {
            return if t >= 1.0 { 1.0 } else { 0.0 };
        }
        beta.cdf((t - lo) * (t + lo) / (4.0 * a))
    };
    let pow_n = |x: f64| if x <= 0.0 { 0.0 } else { (nf * x.ln()).exp() };
    let tol = cfg.distance();
    let delta = beta.delta();
    // Breakpoints where the hit probability crosses the levels that shape (1 - P)^n.
    let mut knots = Vec::new();
    if a > 0.0 {
        for p in [0.25 / nf, 1.0 / nf, 4.0 / nf, 16.0 / nf] {
            for level in [p, p / alpha.max(1e-300)] {
                if level < 1.0 {
                    let u = inv_reg_inc_beta(level, delta, delta)?;
                    knots.push((lo * lo + 4.0 * a * u).sqrt());
                }
            }
        }
    }
    let pieces = |from: f64, to: f64| {
        let mut p = vec![from, to];
        p.extend(knots.iter().copied().filter(|t| *t > from && *t < to));
        p.sort_by(f64::total_cmp);
        p
    };

    // t < 1: survival (1 - alpha I)^n
    let m = lo.min(1.0);
    let mut total = m.powf(s);
    if m < 1.0 {
        let est = integrate_with_breaks(|t| s * t.powf(s - 1.0) * pow_n(1.0 - alpha * inc(t)), &pieces(m, 1.0), &tol)?;
        total += est.value;
    }
    // t >= 1: survival alpha^n (1 - I)^n
    let an = pow_n(alpha);
    if an > 0.0 {
        let start = lo.max(1.0);
        let mut part = start.powf(s) - 1.0;
        if hi > start {
            let est = integrate_with_breaks(|t| s * t.powf(s - 1.0) * pow_n(1.0 - inc(t)), &pieces(start, hi), &tol)?;
            part += est.value;
        }
        total += an * part;
    }
    Ok(total)
}

/// gamma-quantile of the distance d(U, X_n) under the mean distance c.d.f.
pub fn distance_quantile(q: &DistortionQuery, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("quantile level must be in [0, 1], got {gamma}"));
    }
    let engine = Engine::new(q)?;
    let (t_min, t_max) = engine.t_bounds();
    if gamma == 0.0 {
        return Ok(t_min);
    }
    if gamma == 1.0 {
        return Ok(t_max);
    }
    let (mut lo, mut hi) = (t_min, t_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = engine.cdf(mid)?;
        if (f - gamma).abs() <= 1e-9 {
            return Ok(mid);
        }
        if f < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_query(d: usize, n: u64, s: f64, a: f64) -> DistortionQuery {
        DistortionQuery::new(
            RadialLaw::point_mass(1.0, d).unwrap(),
            QuantiserFamily::sphere(a, d).unwrap(),
            n,
            s,
        )
        .unwrap()
    }

    #[test]
    fn nu_factor_landmarks() {
        assert!((nu_factor(1.7, 1.0, 0.7) - 1.0).abs() < 1e-15);
        assert!(nu_factor(0.3, 1.0, 0.7).abs() < 1e-15);
        let t = (1.0f64 + 0.49).sqrt();
        assert!((nu_factor(t, 1.0, 0.7) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hit_probability_examples() {
        let q = QuantiserFamily::sphere(1.0, 3).unwrap();
        assert!((hit_probability(&q, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(hit_probability(&q, 0.5, 0.4).unwrap(), 0.0);
        assert_eq!(hit_probability(&q, 0.5, 1.5).unwrap(), 1.0);
        let b = QuantiserFamily::ball(2.0, 3).unwrap();
        assert!((hit_probability(&b, 0.0, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(hit_probability(&b, -1.0, 1.0).is_err());
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for &a in &[0.1, 0.5, 0.9] {
            for &n in &[1u64, 10, 100] {
                for &s in &[2.0, 4.0] {
                    let q = sphere_query(3, n, s, a);
                    let exact = expected_distortion(&q).unwrap();
                    let num = expected_distortion_numeric(&q).unwrap();
                    assert!((exact - num).abs() < 1e-8, "a={a} n={n} s={s}: {exact} vs {num}");
                }
            }
        }
        let q = sphere_query(3, 9, 2.0, 0.8);
        assert!((expected_distortion(&q).unwrap() - 0.36).abs() < 1e-15);
        let q = sphere_query(3, 1, 2.0, 0.5);
        assert!((expected_distortion(&q).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn mixture_endpoints() {
        let d = mixture_distortion(10, 20, 3.0, 0.0, 0.7).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let m = mixture_distortion(5, 30, 2.0, 1.0, 0.8).unwrap();
        let e = expected_distortion(&sphere_query(5, 30, 2.0, 0.8)).unwrap();
        assert!((m - e).abs() < 1e-9);
    }

    #[test]
    fn cdf_and_quantile_example() {
        let q = sphere_query(3, 2, 2.0, 1.0);
        let f = mean_distance_cdf(&q, 1.0).unwrap();
        assert!((f - 0.4375).abs() < 1e-14);
        let t = distance_quantile(&q, 0.4375).unwrap();
        assert!((t - 1.0).abs() < 1e-8);
        assert_eq!(distance_quantile(&q, 0.0).unwrap(), 0.0);
    }
}
