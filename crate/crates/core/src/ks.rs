//! Kolmogorov-Smirnov tests with asymptotic critical values.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Smallest sample size for which a verdict is issued.
pub const MIN_SAMPLES: usize = 1000;

/// P{K > lambda} for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += (c * j * j).exp();
        }
        return 1.0 - (2.0 * PI).sqrt() / lambda * cdf;
    }
    let mut sf = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sf += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sf).clamp(0.0, 1.0)
}

/// lambda with P{K > lambda} = alpha.
pub fn kolmogorov_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("significance level must lie in (0, 1), got {alpha}"));
    }
    let (mut lo, mut hi) = (0.1, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Critical value for the statistic; `None` when the sample is too small.
    pub critical: Option<f64>,
    /// Whether the null is retained; `None` when skipped.
    pub passed: Option<bool>,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample test against a continuous c.d.f.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<KsResult> {
    let lambda = kolmogorov_critical(alpha)?;
    let x = sorted(samples);
    let n = x.len() as f64;
    let mut stat: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        stat = stat.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let critical = (x.len() >= MIN_SAMPLES).then(|| lambda / n.sqrt());
    Ok(KsResult {
        statistic: stat,
        critical,
        passed: critical.map(|c| stat <= c),
    })
}

/// Two-sample test.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    let lambda = kolmogorov_critical(alpha)?;
    let (x, y) = (sorted(a), sorted(b));
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut stat: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        stat = stat.max((i as f64 / n - j as f64 / m).abs());
    }
    let critical = (x.len().min(y.len()) >= MIN_SAMPLES).then(|| lambda * ((n + m) / (n * m)).sqrt());
    Ok(KsResult {
        statistic: stat,
        critical,
        passed: critical.map(|c| stat <= c),
    })
}
