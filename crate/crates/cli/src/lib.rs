//! Experiment runner: named recipes that write CSV tables and a JSON sidecar.

pub mod grid;
pub mod output;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sphquant::designs::factorial_optimal;
use sphquant::evt::{evt_optimal_radius, kappa, kappa_bounds};
use sphquant::exact::{expected_distortion, DistortionQuery, QuadratureConfig};
use sphquant::mc::{mc_expected_distortion, McOptions};
use sphquant::models::{QuantiserFamily, RadialLaw};
use sphquant::search::{
    crossover_size, optimal_parameter, parameter_range, set_parameter, CrossoverConfig, Parameter, SearchConfig,
};

use grid::Params;
use output::{digits_for, round_dec, round_sig, Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const WORKERS_ENV: &str = "SPHQUANT_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recipe {
    Distortion,
    Optimize,
    Evt,
    Bounds,
    Mc,
    Crossover,
    Factorial,
    Figure,
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::Distortion => "distortion",
            Recipe::Optimize => "optimize",
            Recipe::Evt => "evt",
            Recipe::Bounds => "bounds",
            Recipe::Mc => "mc",
            Recipe::Crossover => "crossover",
            Recipe::Factorial => "factorial",
            Recipe::Figure => "figure",
        }
    }
}

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub recipe: Recipe,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid spec: key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("numerical failure at {point}: {source}")]
    Numerical { point: String, source: sphquant::Error },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub rows: usize,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    recipe: &'a str,
    params: &'a BTreeMap<String, String>,
    seed: Option<u64>,
    output: String,
    columns: &'a [&'static str],
    rows: usize,
    version: &'static str,
    wall_time_s: f64,
}

/// Sidecar path: the CSV path with a `.json` extension.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

fn workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(invalid(WORKERS_ENV, format!("`{v}` is not a positive integer"))),
        },
    }
}

/// Run one experiment and write its CSV and JSON sidecar.
pub fn run(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    if spec.output.extension().is_some_and(|e| e == "json") {
        return Err(invalid("output", "the CSV path must not end in .json"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| invalid(WORKERS_ENV, e.to_string()))?;
    let mut params = Params::new(&spec.params);
    let table = pool.install(|| compute(spec.recipe, &mut params, spec.seed))?;
    let resolved = params.finish()?;
    if let Some(row) = table.rows.iter().find(|r| r.iter().any(|c| !c.is_finite())) {
        return Err(CliError::Numerical {
            point: format!("{row:?}"),
            source: sphquant::Error::Numerical("non-finite output".into()),
        });
    }
    let mut comments = vec![format!("sphquant {VERSION}"), format!("recipe: {}", spec.recipe.name())];
    comments.extend(resolved.iter().map(|(k, v)| format!("{k} = {v}")));
    if let Some(seed) = spec.seed {
        comments.push(format!("seed = {seed}"));
    }
    write_file(&spec.output, &table.to_csv(&comments))?;
    let sidecar = sidecar_path(&spec.output);
    let wall_time_s = started.elapsed().as_secs_f64();
    let meta = Sidecar {
        recipe: spec.recipe.name(),
        params: &resolved,
        seed: spec.seed,
        output: spec.output.display().to_string(),
        columns: &table.columns,
        rows: table.rows.len(),
        version: VERSION,
        wall_time_s,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io {
        path: sidecar.display().to_string(),
        message: e.to_string(),
    })?;
    write_file(&sidecar, &(json + "\n"))?;
    Ok(RunSummary {
        csv: spec.output.clone(),
        sidecar,
        rows: table.rows.len(),
        wall_time_s,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn compute(recipe: Recipe, p: &mut Params, seed: Option<u64>) -> Result<Table, CliError> {
    match recipe {
        Recipe::Distortion => distortion(p),
        Recipe::Optimize => optimize(p, None),
        Recipe::Evt => evt(p),
        Recipe::Bounds => bounds(p),
        Recipe::Mc => mc(p, seed.unwrap_or(0)),
        Recipe::Crossover => crossover(p, None),
        Recipe::Factorial => factorial(p),
        Recipe::Figure => figure(p),
    }
}

/// Evaluate grid points in parallel; rows come back in grid order.
fn evaluate<P, F>(points: Vec<P>, f: F) -> Result<Vec<Vec<Cell>>, CliError>
where
    P: Display + Sync,
    F: Fn(&P) -> sphquant::Result<Vec<Cell>> + Sync,
{
    let results: Vec<_> = points.par_iter().map(&f).collect();
    results
        .into_iter()
        .zip(&points)
        .map(|(r, pt)| {
            r.map_err(|e| match e {
                sphquant::Error::Quadrature { .. } | sphquant::Error::Numerical(_) => CliError::Numerical {
                    point: pt.to_string(),
                    source: e,
                },
                other => invalid("grid", format!("{pt}: {other}")),
            })
        })
        .collect()
}

struct Point {
    d: usize,
    n: u64,
    s: f64,
    p: f64,
}

impl Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d={} n={} s={} param={}", self.d, self.n, self.s, self.p)
    }
}

fn dims(p: &mut Params, default: Option<&str>, min: usize) -> Result<Vec<usize>, CliError> {
    let ds = p.int_list("d", default)?;
    if let Some(bad) = ds.iter().find(|d| (**d as usize) < min) {
        return Err(invalid("d", format!("d = {bad} but this recipe needs d >= {min}")));
    }
    Ok(ds.into_iter().map(|d| d as usize).collect())
}

fn sizes(p: &mut Params, default: Option<&str>, min: u64) -> Result<Vec<u64>, CliError> {
    let ns = p.int_list("n", default)?;
    if let Some(bad) = ns.iter().find(|n| **n < min) {
        return Err(invalid("n", format!("n = {bad} but this recipe needs n >= {min}")));
    }
    Ok(ns)
}

fn orders(p: &mut Params, default: Option<&str>) -> Result<Vec<f64>, CliError> {
    let ss = p.float_list("s", default)?;
    if ss.iter().any(|s| *s <= 0.0) {
        return Err(invalid("s", "distortion order must be > 0"));
    }
    Ok(ss)
}

fn positive(p: &mut Params, key: &str, default: &str) -> Result<f64, CliError> {
    let v = p.float(key, Some(default))?;
    if !(v > 0.0) {
        return Err(invalid(key, "must be > 0"));
    }
    Ok(v)
}

fn quad_config(p: &mut Params, default: &str) -> Result<QuadratureConfig, CliError> {
    let rel_tol = positive(p, "rel-tol", default)?;
    let cfg = QuadratureConfig {
        rel_tol,
        ..QuadratureConfig::default()
    };
    cfg.validate().map_err(|e| invalid("rel-tol", e.to_string()))?;
    Ok(cfg)
}

fn target_law(key: &str, name: &str, d: usize) -> Result<RadialLaw, CliError> {
    match name {
        "sphere" => RadialLaw::point_mass(1.0, d),
        "ball" => RadialLaw::ball(1.0, d),
        "normal" => RadialLaw::scaled_chi(1.0, d),
        other => return Err(invalid(key, format!("unknown target `{other}` (sphere, ball, normal)"))),
    }
    .map_err(|e| invalid(key, e.to_string()))
}

fn family(key: &str, name: &str, d: usize, value: f64, radius: f64) -> Result<QuantiserFamily, CliError> {
    match name {
        "sphere" => QuantiserFamily::sphere(value, d),
        "ball" => QuantiserFamily::ball(value, d),
        "normal" => QuantiserFamily::normal(value, d),
        "atom-sphere" => QuantiserFamily::sphere_with_atom(value, radius, d),
        other => {
            return Err(invalid(
                key,
                format!("unknown family `{other}` (sphere, ball, normal, atom-sphere)"),
            ))
        }
    }
    .map_err(|e| invalid(key, e.to_string()))
}

fn check_names(target: &str, fam: &str, radius: f64) -> Result<(), CliError> {
    target_law("target", target, 3)?;
    family("family", fam, 3, 0.5, radius)?;
    Ok(())
}

fn distortion(p: &mut Params) -> Result<Table, CliError> {
    let ds = dims(p, None, 2)?;
    let ns = sizes(p, None, 1)?;
    let ss = orders(p, None)?;
    let params = p.float_list("param", Some("1"))?;
    let target = p.text("target", Some("sphere"))?;
    let fam = p.text("family", Some("sphere"))?;
    let radius = positive(p, "radius", "1")?;
    let quad = quad_config(p, "1e-8")?;
    check_names(&target, &fam, radius)?;
    let digits = digits_for(quad.rel_tol);
    let mut points = vec![];
    for &d in &ds {
        for &n in &ns {
            for &s in &ss {
                for &v in &params {
                    family("param", &fam, d, v, radius)?;
                    points.push(Point { d, n, s, p: v });
                }
            }
        }
    }
    let mut table = Table::new(vec!["d", "n", "s", "param", "distortion"]);
    table.rows = evaluate(points, |pt| {
        let t = target_law("target", &target, pt.d).expect("checked");
        let q = family("family", &fam, pt.d, pt.p, radius).expect("checked");
        let value = expected_distortion(&DistortionQuery::new(t, q, pt.n, pt.s)?.with_quad(quad))?;
        Ok(vec![
            Cell::Int(pt.d as u64),
            Cell::Int(pt.n),
            Cell::Num(pt.s),
            Cell::Num(pt.p),
            Cell::Num(round_sig(value, digits)),
        ])
    })?;
    Ok(table)
}

struct OptimizeDefaults {
    d: Option<&'static str>,
    n: Option<&'static str>,
    s: Option<&'static str>,
    target: &'static str,
    family: &'static str,
}

const OPTIMIZE: OptimizeDefaults = OptimizeDefaults {
    d: None,
    n: None,
    s: None,
    target: "sphere",
    family: "sphere",
};

fn optimize(p: &mut Params, defaults: Option<OptimizeDefaults>) -> Result<Table, CliError> {
    let def = defaults.unwrap_or(OPTIMIZE);
    let ds = dims(p, def.d, 2)?;
    let ns = sizes(p, def.n, 1)?;
    let ss = orders(p, def.s)?;
    let target = p.text("target", Some(def.target))?;
    let fam = p.text("family", Some(def.family))?;
    let radius = positive(p, "radius", "1")?;
    let tol = positive(p, "tol", "1e-6")?;
    let quad = quad_config(p, "1e-8")?;
    check_names(&target, &fam, radius)?;
    let digits = digits_for(quad.rel_tol);
    let places = (-tol.log10()).ceil() as i32;
    let mut points = vec![];
    for &d in &ds {
        for &n in &ns {
            for &s in &ss {
                points.push(Point { d, n, s, p: f64::NAN });
            }
        }
    }
    let mut table = Table::new(vec!["d", "n", "s", "param_star", "distortion"]);
    table.rows = evaluate(points, |pt| {
        let t = target_law("target", &target, pt.d).expect("checked");
        let q = family("family", &fam, pt.d, 0.5, radius).expect("checked");
        let param = Parameter::natural(&q);
        let query = DistortionQuery::new(t, q, pt.n, pt.s)?.with_quad(quad);
        let (lo, hi) = parameter_range(&t, param)?;
        let cfg = SearchConfig::new(lo, hi).with_tol(0.1 * tol);
        let opt = optimal_parameter(&query, param, Some(cfg))?;
        let value = round_dec(opt.value, places).clamp(lo, hi);
        let dist = expected_distortion(&query.with_quantiser(set_parameter(&q, param, value)?))?;
        Ok(vec![
            Cell::Int(pt.d as u64),
            Cell::Int(pt.n),
            Cell::Num(pt.s),
            Cell::Num(value),
            Cell::Num(round_sig(dist, digits)),
        ])
    })?;
    Ok(table)
}

const CLOSED_FORM_DIGITS: i32 = 12;

fn evt(p: &mut Params) -> Result<Table, CliError> {
    let ds = dims(p, None, 3)?;
    let ns = sizes(p, None, 2)?;
    let ss = orders(p, Some("2"))?;
    let target = p.text("target", Some("sphere"))?;
    target_law("target", &target, 3)?;
    let mut points = vec![];
    for &d in &ds {
        for &n in &ns {
            for &s in &ss {
                points.push(Point { d, n, s, p: f64::NAN });
            }
        }
    }
    let r = |v: f64| Cell::Num(round_sig(v, CLOSED_FORM_DIGITS));
    let mut table = Table::new(vec!["d", "n", "s", "kappa", "a_hat", "e_s"]);
    table.rows = evaluate(points, |pt| {
        let t = target_law("target", &target, pt.d).expect("checked");
        let opt = evt_optimal_radius(&t, pt.n, pt.s)?;
        Ok(vec![
            Cell::Int(pt.d as u64),
            Cell::Int(pt.n),
            Cell::Num(pt.s),
            r(kappa(pt.n, pt.d)?),
            r(opt.radius),
            r(opt.distortion),
        ])
    })?;
    Ok(table)
}

fn bounds(p: &mut Params) -> Result<Table, CliError> {
    let ds = dims(p, None, 5)?;
    let ns = sizes(p, None, 2)?;
    let mut points = vec![];
    for &d in &ds {
        for &n in &ns {
            points.push(Point { d, n, s: 0.0, p: f64::NAN });
        }
    }
    let r = |v: f64| Cell::Num(round_sig(v, CLOSED_FORM_DIGITS));
    let mut table = Table::new(vec!["d", "n", "kappa", "kappa_lo", "kappa_hi"]);
    table.rows = evaluate(points, |pt| {
        let (lo, hi) = kappa_bounds(pt.n, pt.d)?;
        Ok(vec![Cell::Int(pt.d as u64), Cell::Int(pt.n), r(kappa(pt.n, pt.d)?), r(lo), r(hi)])
    })?;
    Ok(table)
}

fn mc(p: &mut Params, seed: u64) -> Result<Table, CliError> {
    let ds = dims(p, None, 2)?;
    let ns = sizes(p, None, 1)?;
    let ss = orders(p, None)?;
    let params = p.float_list("param", Some("1"))?;
    let target = p.text("target", Some("sphere"))?;
    let fam = p.text("family", Some("sphere"))?;
    let radius = positive(p, "radius", "1")?;
    let samples = p.int("samples", Some("100000"))? as usize;
    let batches = p.int("batches", Some("100"))? as usize;
    let quad = quad_config(p, "1e-8")?;
    check_names(&target, &fam, radius)?;
    if batches < 2 || samples < batches {
        return Err(invalid("batches", "need 2 <= batches <= samples"));
    }
    let digits = digits_for(quad.rel_tol);
    let mut points = vec![];
    for &d in &ds {
        for &n in &ns {
            for &s in &ss {
                for &v in &params {
                    family("param", &fam, d, v, radius)?;
                    points.push(Point { d, n, s, p: v });
                }
            }
        }
    }
    let mut table = Table::new(vec!["d", "n", "s", "param", "estimate", "std_error", "exact"]);
    table.rows = evaluate(points, |pt| {
        let t = target_law("target", &target, pt.d).expect("checked");
        let q = family("family", &fam, pt.d, pt.p, radius).expect("checked");
        let report = mc_expected_distortion(&q, pt.n as usize, &t, pt.s, batches, &McOptions::new(samples, seed))?;
        let exact = expected_distortion(&DistortionQuery::new(t, q, pt.n, pt.s)?.with_quad(quad))?;
        Ok(vec![
            Cell::Int(pt.d as u64),
            Cell::Int(pt.n),
            Cell::Num(pt.s),
            Cell::Num(pt.p),
            Cell::Num(report.estimate),
            Cell::Num(report.std_error),
            Cell::Num(round_sig(exact, digits)),
        ])
    })?;
    Ok(table)
}

fn crossover(p: &mut Params, d_default: Option<&str>) -> Result<Table, CliError> {
    let ds = dims(p, d_default, 2)?;
    let ss = orders(p, Some("2"))?;
    let n_hi = p.int("n-hi", Some("4096"))?;
    let target = p.text("target", Some("normal"))?;
    let fam_a = p.text("family-a", Some("sphere"))?;
    let fam_b = p.text("family-b", Some("normal"))?;
    let tol = positive(p, "tol", "1e-4")?;
    let quad = quad_config(p, "1e-6")?;
    target_law("target", &target, 3)?;
    family("family-a", &fam_a, 3, 0.5, 1.0)?;
    family("family-b", &fam_b, 3, 0.5, 1.0)?;
    if n_hi < 3 {
        return Err(invalid("n-hi", "must be >= 3"));
    }
    let mut points = vec![];
    for &d in &ds {
        for &s in &ss {
            points.push(Point { d, n: n_hi, s, p: f64::NAN });
        }
    }
    let cfg = CrossoverConfig {
        n_lo: 2,
        n_hi,
        tol,
        quad,
    };
    let mut table = Table::new(vec!["d", "s", "n_star", "found"]);
    table.rows = evaluate(points, |pt| {
        let t = target_law("target", &target, pt.d).expect("checked");
        let a = family("family-a", &fam_a, pt.d, 1.0, 1.0).expect("checked");
        let b = family("family-b", &fam_b, pt.d, 1.0, 1.0).expect("checked");
        let c = crossover_size(t, pt.s, a, b, &cfg)?;
        Ok(vec![
            Cell::Int(pt.d as u64),
            Cell::Num(pt.s),
            Cell::Int(c.n_star.unwrap_or(0)),
            Cell::Int(c.n_star.is_some() as u64),
        ])
    })?;
    Ok(table)
}

fn factorial(p: &mut Params) -> Result<Table, CliError> {
    let ds = dims(p, None, 2)?;
    let raw = p.text("s", Some("2,4,inf"))?;
    let mut ss = vec![];
    for part in raw.split(',') {
        ss.push(match part.trim() {
            "2" => (2.0, "2"),
            "4" => (4.0, "4"),
            "inf" | "cr" => (f64::INFINITY, "cr"),
            other => return Err(invalid("s", format!("`{other}`: factorial designs support s in 2, 4, inf"))),
        });
    }
    let mut points = vec![];
    for &d in &ds {
        for &(s, label) in &ss {
            points.push((d, s, label));
        }
    }
    struct F(usize, f64, &'static str);
    impl Display for F {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            write!(f, "d={} s={}", self.0, self.2)
        }
    }
    let points: Vec<F> = points.into_iter().map(|(d, s, l)| F(d, s, l)).collect();
    let r = |v: f64| Cell::Num(round_sig(v, CLOSED_FORM_DIGITS));
    let mut table = Table::new(vec!["d", "order", "b_star", "value"]);
    table.rows = evaluate(points, |pt| {
        let (b, v) = factorial_optimal(pt.0, pt.1)?;
        Ok(vec![Cell::Int(pt.0 as u64), Cell::Text(pt.2.to_string()), r(b), r(v)])
    })?;
    Ok(table)
}

/// Named grids behind the published figures.
pub const FIGURES: [&str; 5] = ["sphere-left", "ball-grid", "normal-sigma", "kappa", "crossover"];

fn figure(p: &mut Params) -> Result<Table, CliError> {
    let name = p.text("name", None)?;
    let sizes = Some("10,100,1000,10000,100000");
    match name.as_str() {
        "sphere-left" => optimize(
            p,
            Some(OptimizeDefaults {
                d: Some("3:50"),
                n: sizes,
                s: Some("1"),
                target: "sphere",
                family: "sphere",
            }),
        ),
        "ball-grid" => optimize(
            p,
            Some(OptimizeDefaults {
                d: Some("3:20"),
                n: Some("10,100,1000"),
                s: Some("2"),
                target: "ball",
                family: "ball",
            }),
        ),
        "normal-sigma" => optimize(
            p,
            Some(OptimizeDefaults {
                d: Some("3:10"),
                n: Some("10,100,1000"),
                s: Some("2"),
                target: "normal",
                family: "normal",
            }),
        ),
        "kappa" => {
            let ds = dims(p, Some("3:50"), 3)?;
            let ns = self::sizes(p, sizes, 2)?;
            let mut table = Table::new(vec!["d", "n", "kappa"]);
            let points: Vec<Point> = ds
                .iter()
                .flat_map(|&d| ns.iter().map(move |&n| Point { d, n, s: 0.0, p: f64::NAN }))
                .collect();
            table.rows = evaluate(points, |pt| {
                Ok(vec![
                    Cell::Int(pt.d as u64),
                    Cell::Int(pt.n),
                    Cell::Num(round_sig(kappa(pt.n, pt.d)?, CLOSED_FORM_DIGITS)),
                ])
            })?;
            Ok(table)
        }
        "crossover" => crossover(p, Some("3:8")),
        other => Err(invalid("name", format!("unknown figure `{other}` ({})", FIGURES.join(", ")))),
    }
}
