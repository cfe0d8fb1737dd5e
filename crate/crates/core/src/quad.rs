//! Quadrature: Gauss-Legendre rules, adaptive Gauss-Kronrod and adaptive Simpson.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integral of f over [a, b].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(c + h * x);
        }
        sum * h
    }

    /// Integral over [a, b] after the map x = a + (b - a)(1 - cos(pi w)) / 2,
    /// which smooths algebraic endpoint behaviour.
    pub fn integrate_cosine(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let len = b - a;
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let u = 0.5 * (x + 1.0);
            let (s, c) = (PI * u).sin_cos();
            let t = a + len * 0.5 * (1.0 - c);
            sum += w * f(t) * s;
        }
        // dw = dx / 2, dt = len * pi / 2 * sin(pi w) dw
        sum * len * PI * 0.25
    }
}

/// Cached Gauss-Legendre rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
        .clone()
}

/// Tolerances for adaptive rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_depth: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-14,
            max_depth: 40,
        }
    }
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Gauss-Legendre with node doubling from `start` up to `max_nodes` until two
/// successive rules agree to the tolerance. The cosine map is applied when
/// `cosine` is true.
pub fn gauss_legendre_refined(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    start: usize,
    max_nodes: usize,
    tol: &Tolerance,
    cosine: bool,
) -> Result<Estimate> {
    let mut n = start.max(2);
    let mut evals = 0;
    let eval = |n: usize, f: &mut dyn FnMut(f64) -> f64| {
        let rule = gauss_legendre(n);
        if cosine {
            rule.integrate_cosine(f, a, b)
        } else {
            rule.integrate(f, a, b)
        }
    };
    let mut prev = eval(n, &mut f);
    evals += n;
    loop {
        let next_n = 2 * n;
        if next_n > max_nodes.max(start) {
            return Err(Error::Quadrature {
                estimate: prev,
                error: f64::NAN,
                intervals: n,
            });
        }
        let cur = eval(next_n, &mut f);
        evals += next_n;
        let err = (cur - prev).abs();
        if err <= tol.target(cur) {
            return Ok(Estimate {
                value: cur,
                error: err,
                evaluations: evals,
            });
        }
        prev = cur;
        n = next_n;
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod rule with the embedded 7-point Gauss estimate.
pub fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

#[derive(Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: usize,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive Gauss-Kronrod over [a, b].
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Global adaptive Gauss-Kronrod over consecutive breakpoints.
pub fn integrate_with_breaks(
    mut f: impl FnMut(f64) -> f64,
    breaks: &[f64],
    tol: &Tolerance,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (v, e) = gk15(&mut f, a, b);
        evals += 15;
        total += v;
        total_err += e;
        heap.push(Piece {
            a,
            b,
            value: v,
            error: e,
            depth: 0,
        });
    }
    if !total.is_finite() {
        return Err(Error::Numerical(format!("integrand not finite on [{}, {}]", breaks[0], breaks[breaks.len() - 1])));
    }
    let max_pieces = 4000;
    while total_err > tol.target(total) {
        let Some(worst) = heap.pop() else { break };
        if worst.depth >= tol.max_depth || heap.len() > max_pieces {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
                intervals: heap.len() + 1,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        for (a, b, value, error) in [(worst.a, mid, v1, e1), (mid, worst.b, v2, e2)] {
            heap.push(Piece {
                a,
                b,
                value,
                error,
                depth: worst.depth + 1,
            });
        }
        if !total.is_finite() {
            return Err(Error::Numerical("integrand not finite".into()));
        }
    }
    // Recompute sums to shed accumulated rounding in the running totals.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        evaluations: evals,
    })
}

/// Adaptive Simpson with Richardson correction.
pub fn simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let eps = tol.target(whole).max(tol.abs);
    let floor = 64.0 * f64::EPSILON * whole.abs();
    let (value, error) = simpson_rec(&mut f, a, b, fa, fm, fb, whole, eps, floor, tol.max_depth, &mut evals)?;
    Ok(Estimate {
        value,
        error,
        evaluations: evals,
    })
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    floor: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<(f64, f64)> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps.max(floor) {
        return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
    }
    if depth == 0 {
        return Err(Error::Quadrature {
            estimate: left + right,
            error: delta.abs(),
            intervals: 0,
        });
    }
    let (l, el) = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, floor, depth - 1, evals)?;
    let (r, er) = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, floor, depth - 1, evals)?;
    Ok((l + r, el + er))
}

/// Sum by recursive halving, keeping rounding error logarithmic in length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
