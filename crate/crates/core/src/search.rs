//! Golden-section optimisation of quantiser parameters and crossover search.

use std::collections::BTreeMap;

use log::{debug, warn};

use crate::error::{domain, Error, Result};
use crate::exact::{expected_distortion, DistortionQuery, QuadratureConfig};
use crate::models::{QuantiserFamily, QuantiserKind, RadialLaw};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bracket and stopping rule for a scalar search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SearchConfig {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            tol: 1e-6,
            max_iter: 200,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidConfig(format!("search bracket [{}, {}] is empty", self.lo, self.hi)));
        }
        if !(self.tol > 0.0) || self.max_iter < 2 {
            return Err(Error::InvalidConfig("search needs tol > 0 and max_iter >= 2".into()));
        }
        Ok(())
    }
}

/// Result of a scalar minimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Golden-section search for a unimodal function.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, cfg: &SearchConfig) -> Result<Minimum> {
    golden_section_fallible(|x| Ok(f(x)), cfg)
}

/// Golden-section search where evaluations may fail.
pub fn golden_section_fallible(mut f: impl FnMut(f64) -> Result<f64>, cfg: &SearchConfig) -> Result<Minimum> {
    cfg.validate()?;
    let (mut a, mut b) = (cfg.lo, cfg.hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    while b - a > cfg.tol && evals < cfg.max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evals += 1;
    }
    let converged = b - a <= cfg.tol;
    if !converged {
        warn!("golden section stopped after {evals} evaluations with bracket width {:e}", b - a);
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(Minimum {
        x,
        value,
        evaluations: evals,
        converged,
    })
}

/// Coarse scan followed by golden section on the cells around the best scan point.
pub fn scan_then_golden(
    mut f: impl FnMut(f64) -> Result<f64>,
    cfg: &SearchConfig,
    scan_points: usize,
) -> Result<Minimum> {
    cfg.validate()?;
    let m = scan_points.max(3);
    let h = (cfg.hi - cfg.lo) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|i| cfg.lo + h * i as f64).collect();
    let mut ys = Vec::with_capacity(m);
    for &x in &xs {
        ys.push(f(x)?);
    }
    let best = (0..m).min_by(|&i, &j| ys[i].total_cmp(&ys[j])).unwrap_or(0);
    let minima: Vec<usize> = (0..m)
        .filter(|&i| (i == 0 || ys[i] < ys[i - 1]) && (i == m - 1 || ys[i] <= ys[i + 1]))
        .collect();
    let (mut lo_i, mut hi_i) = (best.saturating_sub(1), (best + 1).min(m - 1));
    if minima.len() > 1 {
        let first = minima[0];
        let last = minima[minima.len() - 1];
        warn!("scan found {} local minima; widening the bracket", minima.len());
        lo_i = first.saturating_sub(1);
        hi_i = (last + 1).min(m - 1);
    }
    let inner = SearchConfig {
        lo: xs[lo_i],
        hi: xs[hi_i],
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let mut min = golden_section_fallible(&mut f, &inner)?;
    if ys[best] < min.value {
        min.x = xs[best];
        min.value = ys[best];
    }
    min.evaluations += m;
    Ok(min)
}

/// Which quantiser parameter to optimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Parameter {
    /// Sphere radius a (sphere or sphere-with-atom families).
    Radius,
    /// Ball radius b.
    BallRadius,
    /// Normal scale sigma.
    Scale,
    /// Atom weight alpha.
    AtomWeight,
}

impl Parameter {
    /// The natural tuning parameter of a family.
    pub fn natural(q: &QuantiserFamily) -> Self {
        match q.kind() {
            QuantiserKind::SphereUniform { .. } => Parameter::Radius,
            QuantiserKind::BallUniform { .. } => Parameter::BallRadius,
            QuantiserKind::NormalScaled { .. } => Parameter::Scale,
            QuantiserKind::SphereWithAtom { .. } => Parameter::AtomWeight,
        }
    }
}

/// Quantiser with the chosen parameter set to `v`.
pub fn set_parameter(q: &QuantiserFamily, p: Parameter, v: f64) -> Result<QuantiserFamily> {
    let d = q.dim();
    match (q.kind(), p) {
        (QuantiserKind::SphereUniform { .. }, Parameter::Radius) => QuantiserFamily::sphere(v, d),
        (QuantiserKind::SphereWithAtom { weight, .. }, Parameter::Radius) => {
            QuantiserFamily::sphere_with_atom(weight, v, d)
        }
        (QuantiserKind::SphereWithAtom { radius, .. }, Parameter::AtomWeight) => {
            QuantiserFamily::sphere_with_atom(v, radius, d)
        }
        (QuantiserKind::BallUniform { .. }, Parameter::BallRadius) => QuantiserFamily::ball(v, d),
        (QuantiserKind::NormalScaled { .. }, Parameter::Scale) => QuantiserFamily::normal(v, d),
        (kind, p) => Err(Error::InvalidConfig(format!("parameter {p:?} does not apply to {kind:?}"))),
    }
}

/// Default search range for a parameter given the target.
pub fn parameter_range(target: &RadialLaw, p: Parameter) -> Result<(f64, f64)> {
    if p == Parameter::AtomWeight {
        return Ok((0.0, 1.0));
    }
    let r_hi = 1.5 * target.quantile(0.999_999)?;
    if !(r_hi > 0.0) {
        return domain("target is concentrated at the origin; no radius range");
    }
    Ok(match p {
        Parameter::Radius => (0.0, r_hi),
        _ => (1e-6 * r_hi, r_hi),
    })
}

/// Optimised parameter and the distortion it attains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub distortion: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimise the expected distortion over one quantiser parameter.
pub fn optimal_parameter(template: &DistortionQuery, p: Parameter, cfg: Option<SearchConfig>) -> Result<Optimum> {
    optimal_parameter_scan(template, p, cfg, 33)
}

/// As `optimal_parameter` with a chosen coarse-scan size.
pub fn optimal_parameter_scan(
    template: &DistortionQuery,
    p: Parameter,
    cfg: Option<SearchConfig>,
    scan_points: usize,
) -> Result<Optimum> {
    template.validate()?;
    set_parameter(&template.quantiser, p, template.quantiser.parameter().max(1e-3))?;
    let cfg = match cfg {
        Some(c) => c,
        None => {
            let (lo, hi) = parameter_range(&template.target, p)?;
            SearchConfig::new(lo, hi)
        }
    };
    let objective = |v: f64| -> Result<f64> {
        let quantiser = set_parameter(&template.quantiser, p, v)?;
        expected_distortion(&template.with_quantiser(quantiser))
    };
    let min = scan_then_golden(objective, &cfg, scan_points)?;
    debug!("optimum {p:?} = {} (D = {}) after {} evaluations", min.x, min.value, min.evaluations);
    Ok(Optimum {
        value: min.x,
        distortion: min.value,
        evaluations: min.evaluations,
        converged: min.converged,
    })
}

/// Settings for the crossover search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverConfig {
    pub n_lo: u64,
    pub n_hi: u64,
    pub tol: f64,
    pub quad: QuadratureConfig,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            n_lo: 2,
            n_hi: 1 << 16,
            tol: 1e-5,
            quad: QuadratureConfig::default(),
        }
    }
}

/// Outcome of a crossover search.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    /// Largest n with D_A(n) < D_B(n), when a sign change exists.
    pub n_star: Option<u64>,
    /// Every evaluated (n, D_A - D_B), sorted by n.
    pub scan: Vec<(u64, f64)>,
}

struct Memo {
    template: DistortionQuery,
    family: QuantiserFamily,
    param: Parameter,
    tol: f64,
    cache: BTreeMap<u64, Optimum>,
}

impl Memo {
    fn optimum(&mut self, n: u64) -> Result<Optimum> {
        if let Some(o) = self.cache.get(&n) {
            return Ok(*o);
        }
        let q = self.template.with_n(n).with_quantiser(self.family);
        let (lo, hi) = parameter_range(&q.target, self.param)?;
        let near = self
            .cache
            .iter()
            .min_by(|a, b| {
                let da = ((*a.0 as f64) / n as f64).ln().abs();
                let db = ((*b.0 as f64) / n as f64).ln().abs();
                da.total_cmp(&db)
            })
            .map(|(_, o)| o.value);
        let opt = match near {
            Some(v) if v > lo && self.param != Parameter::AtomWeight => {
                let cfg = SearchConfig::new((0.7 * v).max(lo), (1.4 * v).min(hi)).with_tol(self.tol);
                let o = optimal_parameter_scan(&q, self.param, Some(cfg), 9)?;
                let edge = 0.02 * (cfg.hi - cfg.lo);
                if (o.value - cfg.lo < edge && cfg.lo > lo) || (cfg.hi - o.value < edge && cfg.hi < hi) {
                    optimal_parameter_scan(&q, self.param, Some(SearchConfig::new(lo, hi).with_tol(self.tol)), 33)?
                } else {
                    o
                }
            }
            _ => optimal_parameter_scan(&q, self.param, Some(SearchConfig::new(lo, hi).with_tol(self.tol)), 33)?,
        };
        self.cache.insert(n, opt);
        Ok(opt)
    }
}

/// Largest n <= n_hi for which family A (optimised) beats family B (optimised).
pub fn crossover_size(
    target: RadialLaw,
    s: f64,
    family_a: QuantiserFamily,
    family_b: QuantiserFamily,
    cfg: &CrossoverConfig,
) -> Result<Crossover> {
    if cfg.n_lo < 1 || cfg.n_hi <= cfg.n_lo {
        return Err(Error::InvalidConfig(format!("crossover range [{}, {}] is empty", cfg.n_lo, cfg.n_hi)));
    }
    let template = DistortionQuery::new(target, family_a, cfg.n_lo, s)?.with_quad(cfg.quad);
    cfg.quad.validate()?;
    DistortionQuery::new(target, family_b, cfg.n_lo, s)?;
    let mut scan = BTreeMap::new();
    if family_a == family_b {
        return Ok(Crossover { n_star: None, scan: vec![] });
    }
    let mut memo_a = Memo {
        template,
        family: family_a,
        param: Parameter::natural(&family_a),
        tol: cfg.tol,
        cache: BTreeMap::new(),
    };
    let mut memo_b = Memo {
        template,
        family: family_b,
        param: Parameter::natural(&family_b),
        tol: cfg.tol,
        cache: BTreeMap::new(),
    };
    let mut gap = |n: u64, scan: &mut BTreeMap<u64, f64>| -> Result<f64> {
        if let Some(g) = scan.get(&n) {
            return Ok(*g);
        }
        let g = memo_a.optimum(n)?.distortion - memo_b.optimum(n)?.distortion;
        debug!("crossover scan n = {n}: gap {g:e}");
        scan.insert(n, g);
        Ok(g)
    };
    // Coarse doubling scan, then bisection in log n on the last sign change.
    let mut grid = vec![cfg.n_lo];
    let mut n = cfg.n_lo;
    while n < cfg.n_hi {
        n = (n * 2).min(cfg.n_hi);
        grid.push(n);
    }
    let mut bracket = None;
    let mut prev: Option<(u64, f64)> = None;
    for &n in &grid {
        let g = gap(n, &mut scan)?;
        if let Some((pn, pg)) = prev {
            if pg < 0.0 && g >= 0.0 {
                bracket = Some((pn, n));
            }
        }
        prev = Some((n, g));
    }
    let n_star = match bracket {
        None => {
            let all_negative = scan.values().all(|g| *g < 0.0);
            if all_negative {
                debug!("family A better on the whole range; no crossover <= {}", cfg.n_hi);
            }
            None
        }
        Some((mut lo, mut hi)) => {
            while hi - lo > 1 {
                let mid = (((lo as f64) * (hi as f64)).sqrt().round() as u64).clamp(lo + 1, hi - 1);
                if gap(mid, &mut scan)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(lo)
        }
    };
    Ok(Crossover {
        n_star,
        scan: scan.into_iter().collect(),
    })
}
