//! Target radial laws and quantiser families.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{inc_gamma, inv_inc_gamma, lgamma};

/// Tail mass dropped when truncating an unbounded radial law.
pub const TAIL_MASS: f64 = 1e-14;

/// Shape of the radial law of the target ||U||.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialShape {
    /// Uniform on the sphere of radius `radius`.
    PointMass { radius: f64 },
    /// Uniform in the ball of radius `radius`: density d r^(d-1) / b^d.
    BallPower { radius: f64 },
    /// Norm of N(0, scale^2 I / d).
    ScaledChi { scale: f64 },
}

/// Radial law of a rotation-invariant target in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct RadialLaw {
    shape: RadialShape,
    dim: usize,
    ln_norm: f64,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return domain(format!("dimension must be >= 2, got {dim}"));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return domain(format!("{name} must be finite and > 0, got {v}"));
    }
    Ok(())
}

impl RadialLaw {
    fn build(shape: RadialShape, dim: usize) -> Self {
        let d = dim as f64;
        let ln_norm = match shape {
            RadialShape::ScaledChi { scale } => {
                let k = d / (2.0 * scale * scale);
                -lgamma(0.5 * d) + (2.0 * k).ln() + (0.5 * d - 1.0) * k.ln()
            }
            RadialShape::BallPower { radius } => (d / radius).ln() - (d - 1.0) * radius.ln(),
            RadialShape::PointMass { .. } => 0.0,
        };
        Self { shape, dim, ln_norm }
    }

    pub fn point_mass(radius: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(radius >= 0.0) || !radius.is_finite() {
            return domain(format!("radius must be finite and >= 0, got {radius}"));
        }
        Ok(Self::build(RadialShape::PointMass { radius }, dim))
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        check_positive("ball radius", radius)?;
        Ok(Self::build(RadialShape::BallPower { radius }, dim))
    }

    pub fn scaled_chi(scale: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        check_positive("scale", scale)?;
        Ok(Self::build(RadialShape::ScaledChi { scale }, dim))
    }

    pub fn shape(&self) -> RadialShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The single scalar parameter of the law.
    pub fn parameter(&self) -> f64 {
        match self.shape {
            RadialShape::PointMass { radius } => radius,
            RadialShape::BallPower { radius } => radius,
            RadialShape::ScaledChi { scale } => scale,
        }
    }

    /// Same family with the parameter replaced.
    pub fn with_parameter(&self, value: f64) -> Result<Self> {
        match self.shape {
            RadialShape::PointMass { .. } => Self::point_mass(value, self.dim),
            RadialShape::BallPower { .. } => Self::ball(value, self.dim),
            RadialShape::ScaledChi { .. } => Self::scaled_chi(value, self.dim),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.shape, RadialShape::PointMass { .. })
    }

    /// Lebesgue density of the radius; zero for the point mass.
    pub fn density(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        match self.shape {
            RadialShape::PointMass { .. } => 0.0,
            RadialShape::BallPower { radius } => {
                if r <= 0.0 || r > radius {
                    0.0
                } else {
                    (self.ln_norm + (d - 1.0) * r.ln()).exp()
                }
            }
            RadialShape::ScaledChi { scale } => {
                if r <= 0.0 {
                    return 0.0;
                }
                // r = scale sqrt(2 g / d), g ~ Gamma(d/2)
                let k = d / (2.0 * scale * scale);
                (self.ln_norm + (d - 1.0) * r.ln() - k * r * r).exp()
            }
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        match self.shape {
            RadialShape::PointMass { radius } => {
                if r >= radius {
                    1.0
                } else {
                    0.0
                }
            }
            RadialShape::BallPower { radius } => {
                if r <= 0.0 {
                    0.0
                } else if r >= radius {
                    1.0
                } else {
                    (r / radius).powf(d)
                }
            }
            RadialShape::ScaledChi { scale } => {
                if r <= 0.0 {
                    0.0
                } else {
                    inc_gamma(0.5 * d, d * r * r / (2.0 * scale * scale))
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("quantile level must be in [0, 1], got {p}"));
        }
        let d = self.dim as f64;
        Ok(match self.shape {
            RadialShape::PointMass { radius } => radius,
            RadialShape::BallPower { radius } => radius * p.powf(1.0 / d),
            RadialShape::ScaledChi { scale } => {
                if p == 1.0 {
                    f64::INFINITY
                } else {
                    let g = inv_inc_gamma(0.5 * d, p);
                    scale * (2.0 * g / d).sqrt()
                }
            }
        })
    }

    /// E[R^k].
    pub fn moment(&self, k: u32) -> f64 {
        let d = self.dim as f64;
        let kf = k as f64;
        match self.shape {
            RadialShape::PointMass { radius } => radius.powi(k as i32),
            RadialShape::BallPower { radius } => d / (d + kf) * radius.powi(k as i32),
            RadialShape::ScaledChi { scale } => {
                let ln = lgamma(0.5 * (kf + d)) - lgamma(0.5 * d) + 0.5 * kf * (2.0 / d).ln();
                scale.powi(k as i32) * ln.exp()
            }
        }
    }

    /// Support [lo, hi]; unbounded laws are truncated at tail mass `TAIL_MASS`.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            RadialShape::PointMass { radius } => (radius, radius),
            RadialShape::BallPower { radius } => (0.0, radius),
            RadialShape::ScaledChi { .. } => (
                self.quantile(TAIL_MASS).unwrap_or(0.0),
                self.quantile(1.0 - TAIL_MASS).unwrap_or(f64::MAX),
            ),
        }
    }
}

/// Law of the i.i.d. codewords.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantiserKind {
    SphereUniform { radius: f64 },
    BallUniform { radius: f64 },
    NormalScaled { scale: f64 },
    /// With probability `weight` uniform on the sphere of radius `radius`, otherwise the origin.
    SphereWithAtom { weight: f64, radius: f64 },
}

/// Quantiser family in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct QuantiserFamily {
    kind: QuantiserKind,
    dim: usize,
}

impl QuantiserFamily {
    pub fn sphere(radius: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(radius >= 0.0) || !radius.is_finite() {
            return domain(format!("radius must be finite and >= 0, got {radius}"));
        }
        Ok(Self {
            kind: QuantiserKind::SphereUniform { radius },
            dim,
        })
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        check_positive("ball radius", radius)?;
        Ok(Self {
            kind: QuantiserKind::BallUniform { radius },
            dim,
        })
    }

    pub fn normal(scale: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        check_positive("scale", scale)?;
        Ok(Self {
            kind: QuantiserKind::NormalScaled { scale },
            dim,
        })
    }

    pub fn sphere_with_atom(weight: f64, radius: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(0.0..=1.0).contains(&weight) {
            return domain(format!("atom weight must be in [0, 1], got {weight}"));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return domain(format!("radius must be finite and >= 0, got {radius}"));
        }
        Ok(Self {
            kind: QuantiserKind::SphereWithAtom { weight, radius },
            dim,
        })
    }

    pub fn kind(&self) -> QuantiserKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radial law of ||Z||, or `None` for the atom mixture.
    pub fn radial_law(&self) -> Option<RadialLaw> {
        let dim = self.dim;
        let shape = match self.kind {
            QuantiserKind::SphereUniform { radius } => RadialShape::PointMass { radius },
            QuantiserKind::BallUniform { radius } => RadialShape::BallPower { radius },
            QuantiserKind::NormalScaled { scale } => RadialShape::ScaledChi { scale },
            QuantiserKind::SphereWithAtom { .. } => return None,
        };
        Some(RadialLaw::build(shape, dim))
    }

    /// The parameter tuned by optimisation: radius, scale, or the atom weight.
    pub fn parameter(&self) -> f64 {
        match self.kind {
            QuantiserKind::SphereUniform { radius } => radius,
            QuantiserKind::BallUniform { radius } => radius,
            QuantiserKind::NormalScaled { scale } => scale,
            QuantiserKind::SphereWithAtom { weight, .. } => weight,
        }
    }

    pub fn with_parameter(&self, value: f64) -> Result<Self> {
        match self.kind {
            QuantiserKind::SphereUniform { .. } => Self::sphere(value, self.dim),
            QuantiserKind::BallUniform { .. } => Self::ball(value, self.dim),
            QuantiserKind::NormalScaled { .. } => Self::normal(value, self.dim),
            QuantiserKind::SphereWithAtom { radius, .. } => Self::sphere_with_atom(value, radius, self.dim),
        }
    }

    /// Short family name used in configuration and output.
    pub fn family_name(&self) -> &'static str {
        match self.kind {
            QuantiserKind::SphereUniform { .. } => "sphere",
            QuantiserKind::BallUniform { .. } => "ball",
            QuantiserKind::NormalScaled { .. } => "normal",
            QuantiserKind::SphereWithAtom { .. } => "atom-sphere",
        }
    }
}

/// Serialised form `{"variant": ..., "params": {...}, "d": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: String,
    pub params: BTreeMap<String, f64>,
    pub d: usize,
}

impl ModelConfig {
    fn get(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("variant {} requires parameter `{key}`", self.variant)))
    }

    fn expect_keys(&self, keys: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown parameter `{k}` for variant {}", self.variant)));
            }
        }
        Ok(())
    }
}

fn config(variant: &str, params: &[(&str, f64)], d: usize) -> ModelConfig {
    ModelConfig {
        variant: variant.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        d,
    }
}

impl From<RadialLaw> for ModelConfig {
    fn from(law: RadialLaw) -> Self {
        match law.shape {
            RadialShape::PointMass { radius } => config("PointMass", &[("radius", radius)], law.dim),
            RadialShape::BallPower { radius } => config("BallPower", &[("radius", radius)], law.dim),
            RadialShape::ScaledChi { scale } => config("ScaledChi", &[("scale", scale)], law.dim),
        }
    }
}

impl TryFrom<ModelConfig> for RadialLaw {
    type Error = Error;

    fn try_from(c: ModelConfig) -> Result<Self> {
        let law = match c.variant.as_str() {
            "PointMass" => {
                c.expect_keys(&["radius"])?;
                RadialLaw::point_mass(c.get("radius")?, c.d)
            }
            "BallPower" => {
                c.expect_keys(&["radius"])?;
                RadialLaw::ball(c.get("radius")?, c.d)
            }
            "ScaledChi" => {
                c.expect_keys(&["scale"])?;
                RadialLaw::scaled_chi(c.get("scale")?, c.d)
            }
            other => return Err(Error::InvalidConfig(format!("unknown radial law variant `{other}`"))),
        };
        law.map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

impl From<QuantiserFamily> for ModelConfig {
    fn from(q: QuantiserFamily) -> Self {
        match q.kind {
            QuantiserKind::SphereUniform { radius } => config("SphereUniform", &[("radius", radius)], q.dim),
            QuantiserKind::BallUniform { radius } => config("BallUniform", &[("radius", radius)], q.dim),
            QuantiserKind::NormalScaled { scale } => config("NormalScaled", &[("scale", scale)], q.dim),
            QuantiserKind::SphereWithAtom { weight, radius } => {
                config("SphereWithAtom", &[("weight", weight), ("radius", radius)], q.dim)
            }
        }
    }
}

impl TryFrom<ModelConfig> for QuantiserFamily {
    type Error = Error;

    fn try_from(c: ModelConfig) -> Result<Self> {
        let q = match c.variant.as_str() {
            "SphereUniform" => {
                c.expect_keys(&["radius"])?;
                QuantiserFamily::sphere(c.get("radius")?, c.d)
            }
            "BallUniform" => {
                c.expect_keys(&["radius"])?;
                QuantiserFamily::ball(c.get("radius")?, c.d)
            }
            "NormalScaled" => {
                c.expect_keys(&["scale"])?;
                QuantiserFamily::normal(c.get("scale")?, c.d)
            }
            "SphereWithAtom" => {
                c.expect_keys(&["weight", "radius"])?;
                QuantiserFamily::sphere_with_atom(c.get("weight")?, c.get("radius")?, c.d)
            }
            other => return Err(Error::InvalidConfig(format!("unknown quantiser variant `{other}`"))),
        };
        q.map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}
