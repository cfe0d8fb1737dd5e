//! Monte Carlo sampling of random quantisers and targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ks::{ks_two_sample, KsResult};
use crate::models::{QuantiserFamily, QuantiserKind, RadialLaw, RadialShape};
use crate::quad::pairwise_sum;

/// Generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// n points in R^d, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub d: usize,
    pub coords: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.d).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    /// Squared distance from `u` to the nearest point (brute force).
    pub fn nearest_sq(&self, u: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for row in self.rows() {
            let mut acc = 0.0;
            for (x, y) in row.iter().zip(u) {
                let t = x - y;
                acc += t * t;
                if acc >= best {
                    break;
                }
            }
            best = best.min(acc);
        }
        best
    }
}

fn gaussian_into<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}

fn direction_into<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        gaussian_into(rng, out);
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

fn scale(out: &mut [f64], c: f64) {
    out.iter_mut().for_each(|x| *x *= c);
}

fn check_size(n: usize, d: usize) -> Result<()> {
    if n < 1 || d < 2 {
        return domain(format!("need n >= 1 and d >= 2, got n = {n}, d = {d}"));
    }
    Ok(())
}

/// Draw n i.i.d. points from a quantiser family into `rng`'s stream.
pub fn sample_quantiser_with<R: Rng>(family: &QuantiserFamily, n: usize, rng: &mut R) -> Result<PointSet> {
    let d = family.dim();
    check_size(n, d)?;
    let mut coords = vec![0.0; n * d];
    for row in coords.chunks_exact_mut(d) {
        match family.kind() {
            QuantiserKind::SphereUniform { radius } => {
                direction_into(rng, row);
                scale(row, radius);
            }
            QuantiserKind::BallUniform { radius } => {
                direction_into(rng, row);
                let u: f64 = rng.random();
                scale(row, radius * u.powf(1.0 / d as f64));
            }
            QuantiserKind::NormalScaled { scale: sigma } => {
                gaussian_into(rng, row);
                scale(row, sigma / (d as f64).sqrt());
            }
            QuantiserKind::SphereWithAtom { weight, radius } => {
                direction_into(rng, row);
                let u: f64 = rng.random();
                scale(row, if u < weight { radius } else { 0.0 });
            }
        }
    }
    Ok(PointSet { d, coords })
}

/// Draw a quantiser from stream 0 of `seed`.
pub fn sample_quantiser(family: &QuantiserFamily, n: usize, seed: u64) -> Result<PointSet> {
    sample_quantiser_with(family, n, &mut stream_rng(seed, 0))
}

/// One draw from the spherically symmetric target law.
pub fn sample_target_into<R: Rng>(target: &RadialLaw, rng: &mut R, out: &mut [f64]) {
    let d = out.len() as f64;
    match target.shape() {
        RadialShape::PointMass { radius } => {
            direction_into(rng, out);
            scale(out, radius);
        }
        RadialShape::BallPower { radius } => {
            direction_into(rng, out);
            let u: f64 = rng.random();
            scale(out, radius * u.powf(1.0 / d));
        }
        RadialShape::ScaledChi { scale: c } => {
            gaussian_into(rng, out);
            scale(out, c / d.sqrt());
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// 2 exp(-2 N alpha^2) for compact targets; `None` otherwise.
    pub hoeffding_bound: Option<f64>,
    pub seed: u64,
}

/// Sample size, seed and Hoeffding deviation alpha (in units of CR^s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub deviation: f64,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            deviation: 0.01,
        }
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn hoeffding(target: &RadialLaw, samples: usize, deviation: f64) -> Option<f64> {
    match target.shape() {
        RadialShape::ScaledChi { .. } => None,
        _ => Some((2.0 * (-2.0 * samples as f64 * deviation * deviation).exp()).min(1.0)),
    }
}

fn check_points(points: &PointSet, target: &RadialLaw, s: f64) -> Result<()> {
    if points.is_empty() {
        return domain("empty point set");
    }
    if points.d != target.dim() {
        return Err(Error::InvalidConfig(format!(
            "point set has dimension {} but the target {}",
            points.d,
            target.dim()
        )));
    }
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("distortion order must be finite and > 0, got {s}"));
    }
    Ok(())
}

/// Empirical distortion of a fixed point set; targets come from stream 1 of the seed.
pub fn mc_distortion(points: &PointSet, target: &RadialLaw, s: f64, opts: &McOptions) -> Result<McReport> {
    check_points(points, target, s)?;
    if opts.samples < 2 {
        return domain(format!("need at least 2 samples, got {}", opts.samples));
    }
    let mut rng = stream_rng(opts.seed, 1);
    let mut u = vec![0.0; points.d];
    let values: Vec<f64> = (0..opts.samples)
        .map(|_| {
            sample_target_into(target, &mut rng, &mut u);
            points.nearest_sq(&u).powf(0.5 * s)
        })
        .collect();
    let (estimate, std_error) = mean_and_se(&values);
    Ok(McReport {
        estimate,
        std_error,
        n_samples: opts.samples,
        hoeffding_bound: hoeffding(target, opts.samples, opts.deviation),
        seed: opts.seed,
    })
}

/// Estimate of the expected distortion over random designs: `batches` independent
/// designs, each scored on samples/batches targets; the error comes from batch means.
pub fn mc_expected_distortion(
    family: &QuantiserFamily,
    n: usize,
    target: &RadialLaw,
    s: f64,
    batches: usize,
    opts: &McOptions,
) -> Result<McReport> {
    if batches < 2 || opts.samples < batches {
        return domain(format!("need 2 <= batches <= samples, got {batches} and {}", opts.samples));
    }
    let per = opts.samples / batches;
    let mut means = Vec::with_capacity(batches);
    for b in 0..batches as u64 {
        let points = sample_quantiser_with(family, n, &mut stream_rng(opts.seed, 2 * b + 2))?;
        let sub = McOptions {
            samples: per.max(2),
            ..*opts
        };
        check_points(&points, target, s)?;
        let mut rng = stream_rng(opts.seed, 2 * b + 3);
        let mut u = vec![0.0; points.d];
        let values: Vec<f64> = (0..sub.samples)
            .map(|_| {
                sample_target_into(target, &mut rng, &mut u);
                points.nearest_sq(&u).powf(0.5 * s)
            })
            .collect();
        means.push(pairwise_sum(&values) / values.len() as f64);
    }
    let (estimate, std_error) = mean_and_se(&means);
    let total = per.max(2) * batches;
    Ok(McReport {
        estimate,
        std_error,
        n_samples: total,
        hoeffding_bound: hoeffding(target, total, opts.deviation),
        seed: opts.seed,
    })
}

/// Squared distances from a point at radius r to the nearest of n uniform points on
/// the sphere of radius a, sampled directly and through the beta-minimum representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaMinReport {
    pub geometric_mean: f64,
    pub geometric_se: f64,
    pub beta_mean: f64,
    pub beta_se: f64,
    pub ks: KsResult,
}

pub fn beta_min_samples(r: f64, a: f64, n: usize, d: usize, samples: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_size(n, d)?;
    if !(r >= 0.0 && a >= 0.0) {
        return domain(format!("radii must be >= 0, got r = {r}, a = {a}"));
    }
    let family = QuantiserFamily::sphere(a, d)?;
    let mut u = vec![0.0; d];
    u[0] = r;
    let mut rng = stream_rng(seed, 0);
    let mut geometric = Vec::with_capacity(samples);
    for _ in 0..samples {
        let pts = sample_quantiser_with(&family, n, &mut rng)?;
        geometric.push(pts.nearest_sq(&u));
    }
    let delta = 0.5 * (d as f64 - 1.0);
    let beta = Beta::new(delta, delta).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = stream_rng(seed, 1);
    let base = (r - a) * (r - a);
    let c = 4.0 * a * r;
    let rep: Vec<f64> = (0..samples)
        .map(|_| {
            let m = (0..n).map(|_| beta.sample(&mut rng)).fold(f64::INFINITY, f64::min);
            base + c * m
        })
        .collect();
    Ok((geometric, rep))
}

/// Two-sample KS comparison of the two samplers at level `alpha`.
pub fn beta_min_check(r: f64, a: f64, n: usize, d: usize, samples: usize, seed: u64, alpha: f64) -> Result<BetaMinReport> {
    let (g, b) = beta_min_samples(r, a, n, d, samples, seed)?;
    let (geometric_mean, geometric_se) = mean_and_se(&g);
    let (beta_mean, beta_se) = mean_and_se(&b);
    Ok(BetaMinReport {
        geometric_mean,
        geometric_se,
        beta_mean,
        beta_se,
        ks: ks_two_sample(&g, &b, alpha)?,
    })
}
