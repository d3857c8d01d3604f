//! Log-concave probability measures: seeded sampling, region measures, moments.

mod estimate;
mod grid;

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bodies::{ConvexBody, Kind};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, norm};
use crate::rng::{self, derive_seed};
use crate::special::{gaussian_ball_measure, normal_cdf, normal_quantile, unit_ball_volume};

pub use estimate::MCEstimate;
pub use grid::region_measure_grid;

/// Flat storage for a cloud of points in ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Points { dim, data }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Self {
        Points::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn par_iter(&self) -> rayon::slice::ChunksExact<'_, f64> {
        self.data.par_chunks_exact(self.dim)
    }

    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64> + Sync + Send) -> Points {
        let data: Vec<f64> = self.par_iter().flat_map_iter(f).collect();
        let dim = if self.is_empty() { self.dim } else { data.len() / self.len() };
        Points { dim, data }
    }

    /// Fraction of points satisfying `pred`.
    pub fn proportion(&self, pred: impl Fn(&[f64]) -> bool + Sync, seed: u64) -> MCEstimate {
        let hits = self.par_iter().filter(|x| pred(x)).count();
        MCEstimate::proportion(hits as u64, self.len() as u64, seed)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for x in self.iter() {
            for j in 0..self.dim {
                m[j] += x[j];
            }
        }
        linalg::scale(&m, 1.0 / self.len() as f64)
    }
}

/// Random-walk settings used when rejection sampling is too wasteful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Burn-in steps per dimension for each walk chain.
    pub burn_in: usize,
    /// Steps per dimension between retained walk samples.
    pub thinning: usize,
    /// Rejection acceptance below which the walk takes over.
    pub walk_threshold: f64,
    pub allow_walk: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { burn_in: 200, thinning: 10, walk_threshold: 1e-4, allow_walk: true }
    }
}

/// Density known up to normalization, supported in a body.
#[derive(Clone)]
pub struct CustomDensity {
    pub id: String,
    log_density: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub support: ConvexBody,
    /// An upper bound for the log-density on the support.
    pub log_max: f64,
    pub symmetric: bool,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity").field("id", &self.id).field("log_max", &self.log_max).finish()
    }
}

#[derive(Clone, Debug)]
pub enum MeasureKind {
    GaussianStd,
    UniformOn(ConvexBody),
    /// Standard Gaussian conditioned on a body.
    GaussianRestricted(ConvexBody),
    Custom(CustomDensity),
}

#[derive(Clone, Debug)]
pub struct MeasureModel {
    dim: usize,
    kind: MeasureKind,
    config: SamplerConfig,
    normalization: Arc<OnceLock<MCEstimate>>,
}

enum Plan {
    Gaussian,
    /// Uniform proposals in `[lo, hi]`, accepted with the given log-weight offset.
    Box { lo: Vec<f64>, hi: Vec<f64>, log_bound: f64 },
    /// Standard Gaussian proposals kept when inside the body.
    GaussianProposal,
    Polar { radius: f64 },
    Walk,
}

impl MeasureModel {
    fn make(dim: usize, kind: MeasureKind) -> Self {
        MeasureModel { dim, kind, config: SamplerConfig::default(), normalization: Arc::new(OnceLock::new()) }
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::make(dim, MeasureKind::GaussianStd)
    }

    pub fn uniform(body: ConvexBody) -> Self {
        Self::make(body.dim(), MeasureKind::UniformOn(body))
    }

    pub fn gaussian_restricted(body: ConvexBody) -> Self {
        Self::make(body.dim(), MeasureKind::GaussianRestricted(body))
    }

    /// Density `∝ exp(log_density)` on `support`; `log_max` must bound the log-density there.
    pub fn custom(
        id: impl Into<String>,
        support: ConvexBody,
        log_max: f64,
        symmetric: bool,
        log_density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let dim = support.dim();
        Self::make(
            dim,
            MeasureKind::Custom(CustomDensity {
                id: id.into(),
                log_density: Arc::new(log_density),
                support,
                log_max,
                symmetric,
            }),
        )
    }

    pub fn with_config(mut self, config: SamplerConfig) -> Self {
        self.config = config;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn support(&self) -> Option<&ConvexBody> {
        match &self.kind {
            MeasureKind::GaussianStd => None,
            MeasureKind::UniformOn(b) | MeasureKind::GaussianRestricted(b) => Some(b),
            MeasureKind::Custom(c) => Some(&c.support),
        }
    }

    /// Short descriptor for reports.
    pub fn describe(&self) -> String {
        let body = |b: &ConvexBody| b.name().map(str::to_owned).unwrap_or_else(|| format!("body{}", b.dim()));
        match &self.kind {
            MeasureKind::GaussianStd => format!("gaussian_std(n={})", self.dim),
            MeasureKind::UniformOn(b) => format!("uniform_on({})", body(b)),
            MeasureKind::GaussianRestricted(b) => format!("gaussian_restricted({})", body(b)),
            MeasureKind::Custom(c) => format!("custom({})", c.id),
        }
    }

    /// Invariant under `x ↦ −x`.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            MeasureKind::GaussianStd => true,
            MeasureKind::UniformOn(b) | MeasureKind::GaussianRestricted(b) => b.is_origin_symmetric(),
            MeasureKind::Custom(c) => c.symmetric,
        }
    }

    /// Unnormalized log-density (`−∞` off the support).
    pub fn log_density_unnormalized(&self, x: &[f64]) -> f64 {
        match &self.kind {
            MeasureKind::GaussianStd => -0.5 * dot(x, x),
            MeasureKind::UniformOn(b) => {
                if b.contains(x) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            MeasureKind::GaussianRestricted(b) => {
                if b.contains(x) {
                    -0.5 * dot(x, x)
                } else {
                    f64::NEG_INFINITY
                }
            }
            MeasureKind::Custom(c) => {
                if c.support.contains(x) {
                    (c.log_density)(x)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Total mass of the unnormalized density: `(2π)^{n/2}`, `Vol(K)`,
    /// `(2π)^{n/2} γ_n(K)`, or `∫_K e^{log φ}`.
    pub fn normalization(&self) -> MCEstimate {
        *self.normalization.get_or_init(|| self.compute_normalization())
    }

    fn compute_normalization(&self) -> MCEstimate {
        let n = self.dim;
        let gauss_norm = (2.0 * PI).powf(n as f64 / 2.0);
        let seed = derive_seed(0x6e6f726d, n as u64);
        match &self.kind {
            MeasureKind::GaussianStd => MCEstimate::exact(gauss_norm),
            MeasureKind::UniformOn(b) => estimate_volume(b, 1 << 20, seed),
            MeasureKind::GaussianRestricted(b) => gaussian_measure_of_body(b, 1 << 20, seed).scaled(gauss_norm),
            MeasureKind::Custom(c) => {
                let (lo, hi) = c.support.bounding_box();
                let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
                let vals: Vec<f64> = rng::par_batches(1 << 20, derive_seed(seed, 1), |r, len, _| {
                    (0..len)
                        .map(|_| {
                            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
                            if c.support.contains(&x) {
                                ((c.log_density)(&x) - c.log_max).exp()
                            } else {
                                0.0
                            }
                        })
                        .collect()
                });
                MCEstimate::mean_of(&vals, seed).scaled(box_vol * c.log_max.exp())
            }
        }
    }

    /// Normalized log-density.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_density_unnormalized(x) - self.normalization().value.ln()
    }

    /// `sup φ` of the normalized density, where it is known in closed form.
    pub fn density_sup(&self) -> Result<f64> {
        let n = self.dim as f64;
        match &self.kind {
            MeasureKind::GaussianStd => Ok((2.0 * PI).powf(-n / 2.0)),
            MeasureKind::UniformOn(_) => Ok(1.0 / self.normalization().value),
            MeasureKind::GaussianRestricted(b) => {
                if b.contains(&vec![0.0; self.dim]) {
                    Ok(1.0 / self.normalization().value)
                } else {
                    Err(Error::Unsupported("density maximum of a Gaussian restricted to a body missing the origin".into()))
                }
            }
            MeasureKind::Custom(_) => Err(Error::Unsupported("mode location of a custom density is unknown".into())),
        }
    }

    fn plan(&self, seed: u64) -> Result<Plan> {
        let n = self.dim;
        let threshold = self.config.walk_threshold;
        let walk_or_fail = |acc: f64| {
            if self.config.allow_walk {
                Ok(Plan::Walk)
            } else {
                Err(Error::AcceptanceFailure { acceptance: acc })
            }
        };
        match &self.kind {
            MeasureKind::GaussianStd => Ok(Plan::Gaussian),
            MeasureKind::UniformOn(b) => {
                if let Kind::Radial(f) = b.kind() {
                    return Ok(Plan::Polar { radius: f.bounding_radius() });
                }
                let (lo, hi) = b.bounding_box();
                let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
                let acc = match b.exact_volume() {
                    Some(v) => v / box_vol,
                    None => pilot(b, &lo, &hi, seed),
                };
                if acc >= threshold {
                    Ok(Plan::Box { lo, hi, log_bound: 0.0 })
                } else {
                    walk_or_fail(acc)
                }
            }
            MeasureKind::GaussianRestricted(b) => {
                let (lo, hi) = b.bounding_box();
                let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
                let gamma = gaussian_measure_of_body(b, 1 << 16, derive_seed(seed, 2)).value;
                // nearest point of the box to the origin bounds the density there
                let m2: f64 = lo.iter().zip(&hi).map(|(a, b)| if *a > 0.0 { a * a } else if *b < 0.0 { b * b } else { 0.0 }).sum();
                let box_acc = gamma * (2.0 * PI).powf(n as f64 / 2.0) * (0.5 * m2).exp() / box_vol;
                if gamma >= box_acc && gamma >= threshold {
                    Ok(Plan::GaussianProposal)
                } else if box_acc >= threshold {
                    Ok(Plan::Box { lo, hi, log_bound: -0.5 * m2 })
                } else {
                    walk_or_fail(gamma.max(box_acc))
                }
            }
            MeasureKind::Custom(c) => {
                let (lo, hi) = c.support.bounding_box();
                let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
                let acc = self.normalization().value / (box_vol * c.log_max.exp());
                if acc >= threshold {
                    Ok(Plan::Box { lo, hi, log_bound: c.log_max })
                } else {
                    walk_or_fail(acc)
                }
            }
        }
    }

    /// `count` samples, deterministic in `seed` and independent of thread count.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Points> {
        if count == 0 {
            return Err(Error::pre("sample count must be at least 1"));
        }
        let n = self.dim;
        let plan = self.plan(derive_seed(seed, 0x706c616e))?;
        let data = rng::par_batches(count, seed, |r, len, _| {
            let mut out = Vec::with_capacity(len * n);
            match &plan {
                Plan::Gaussian => {
                    for _ in 0..len * n {
                        out.push(r.sample::<f64, _>(StandardNormal));
                    }
                }
                Plan::GaussianProposal => {
                    let body = self.support().expect("restricted kind");
                    while out.len() < len * n {
                        let x: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
                        if body.contains(&x) {
                            out.extend(x);
                        }
                    }
                }
                Plan::Box { lo, hi, log_bound } => {
                    while out.len() < len * n {
                        let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
                        let ld = self.log_density_unnormalized(&x);
                        if ld == f64::NEG_INFINITY {
                            continue;
                        }
                        let accept = match self.kind {
                            MeasureKind::UniformOn(_) => true,
                            _ => r.random::<f64>() < (ld - log_bound).exp(),
                        };
                        if accept {
                            out.extend(x);
                        }
                    }
                }
                Plan::Polar { radius } => {
                    let Some(Kind::Radial(f)) = self.support().map(|b| b.kind()) else { unreachable!() };
                    while out.len() < len * n {
                        let theta = linalg::normalized(&(0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>());
                        let rho = f.radius(&theta);
                        if r.random::<f64>() < (rho / radius).powi(n as i32) {
                            let s = rho * r.random::<f64>().powf(1.0 / n as f64);
                            out.extend(theta.iter().map(|t| t * s));
                        }
                    }
                }
                Plan::Walk => self.walk(r, len, &mut out),
            }
            out
        });
        Ok(Points::new(n, data))
    }

    /// Hit-and-run chain; each batch runs its own chain from an interior point.
    fn walk(&self, r: &mut ChaCha8Rng, len: usize, out: &mut Vec<f64>) {
        let n = self.dim;
        let body = self.support().expect("walks run on bodies");
        let mut x = body.interior_point();
        let burn = self.config.burn_in * n;
        let thin = self.config.thinning.max(1) * n;
        let step = |x: &mut Vec<f64>, r: &mut ChaCha8Rng| {
            let d = linalg::normalized(&(0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>());
            let up = body.ray_exit(x, &d);
            let down = body.ray_exit(x, &linalg::scale(&d, -1.0));
            let s = match &self.kind {
                MeasureKind::UniformOn(_) => r.random_range(-down..=up),
                MeasureKind::GaussianRestricted(_) => {
                    let a = dot(x, &d);
                    truncated_normal(a - down, a + up, r.random()) - a
                }
                MeasureKind::Custom(c) => {
                    let s = r.random_range(-down..=up);
                    let y = linalg::axpy(x, s, &d);
                    let ratio = (c.log_density)(&y) - (c.log_density)(x);
                    if r.random::<f64>().ln() < ratio {
                        s
                    } else {
                        0.0
                    }
                }
                MeasureKind::GaussianStd => unreachable!(),
            };
            *x = linalg::axpy(x, s, &d);
        };
        for _ in 0..burn {
            step(&mut x, r);
        }
        for _ in 0..len {
            for _ in 0..thin {
                step(&mut x, r);
            }
            out.extend_from_slice(&x);
        }
    }

    /// `μ(region)` by Monte Carlo on `budget` samples.
    pub fn region_measure(&self, region: impl Fn(&[f64]) -> bool + Sync, budget: usize, seed: u64) -> Result<MCEstimate> {
        Ok(self.sample(budget, seed)?.proportion(region, seed))
    }

    /// Sample barycenter and covariance (symmetrized).
    pub fn barycenter_covariance(&self, budget: usize, seed: u64) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let pts = self.sample(budget, seed)?;
        Ok(barycenter_covariance_of(&pts))
    }

    /// `(E|⟨x − b, θ⟩|^p)^{1/p}` for each `p`, all from one sample stream. The
    /// center `b` is the origin for symmetric measures and the sample barycenter otherwise.
    pub fn linear_functional_moments(&self, theta: &[f64], ps: &[f64], budget: usize, seed: u64) -> Result<Vec<MomentEstimate>> {
        check_dim(self.dim, theta.len())?;
        if ps.iter().any(|p| !(*p >= 1.0)) {
            return Err(Error::pre("moment order p must be at least 1"));
        }
        let pts = self.sample(budget, seed)?;
        let center = if self.is_symmetric() { vec![0.0; self.dim] } else { pts.mean() };
        Ok(moments_of(&pts, &center, theta, ps, seed))
    }

    pub fn linear_functional_moment(&self, theta: &[f64], p: f64, budget: usize, seed: u64) -> Result<MomentEstimate> {
        Ok(self.linear_functional_moments(theta, &[p], budget, seed)?.remove(0))
    }

    /// Midpoint concavity test of the log-density on `segments` random chords
    /// between sampled points; returns the number of violations.
    pub fn log_concavity_probe(&self, segments: usize, seed: u64) -> Result<usize> {
        let pts = self.sample(2 * segments, seed)?;
        let mut bad = 0;
        for i in 0..segments {
            let x = pts.get(2 * i);
            let y = pts.get(2 * i + 1);
            let mid = linalg::scale(&linalg::add(x, y), 0.5);
            let lx = self.log_density_unnormalized(x);
            let ly = self.log_density_unnormalized(y);
            let lm = self.log_density_unnormalized(&mid);
            if lm < 0.5 * (lx + ly) - 1e-7 {
                bad += 1;
            }
        }
        Ok(bad)
    }
}

/// A p-th moment estimate; `flagged` when the error exceeds 25% of the value.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub estimate: MCEstimate,
    pub flagged: bool,
}

pub(crate) fn moments_of(pts: &Points, center: &[f64], theta: &[f64], ps: &[f64], seed: u64) -> Vec<MomentEstimate> {
    let proj: Vec<f64> = pts.iter().map(|x| (dot(x, theta) - dot(center, theta)).abs()).collect();
    ps.iter()
        .map(|&p| {
            let pw: Vec<f64> = proj.iter().map(|v| v.powf(p)).collect();
            let m = MCEstimate::mean_of(&pw, seed);
            let value = m.value.powf(1.0 / p);
            // delta method for m ↦ m^{1/p}
            let se = if m.value > 0.0 { value / (p * m.value) * m.std_error } else { 0.0 };
            let estimate = MCEstimate { value, std_error: se, samples: m.samples, seed };
            MomentEstimate { p, estimate, flagged: se > 0.25 * value }
        })
        .collect()
}

pub fn barycenter_covariance_of(pts: &Points) -> (Vec<f64>, DMatrix<f64>) {
    let n = pts.dim();
    let mean = pts.mean();
    let mut cov = DMatrix::zeros(n, n);
    for x in pts.iter() {
        for i in 0..n {
            let di = x[i] - mean[i];
            for j in i..n {
                cov[(i, j)] += di * (x[j] - mean[j]);
            }
        }
    }
    let denom = (pts.len() as f64 - 1.0).max(1.0);
    for i in 0..n {
        for j in i..n {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    (mean, cov)
}

fn pilot(b: &ConvexBody, lo: &[f64], hi: &[f64], seed: u64) -> f64 {
    let hits: usize = rng::par_batches(1 << 16, seed, |r, len, _| {
        let h = (0..len)
            .filter(|_| {
                let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
                b.contains(&x)
            })
            .count();
        vec![h]
    })
    .into_iter()
    .sum();
    hits as f64 / (1 << 16) as f64
}

/// Inverse-CDF draw from the standard normal truncated to `[lo, hi]`, using the
/// tail on the side away from zero for accuracy.
pub fn truncated_normal(lo: f64, hi: f64, u: f64) -> f64 {
    if lo >= hi {
        return lo;
    }
    if lo > 0.0 {
        let (a, b) = (normal_cdf(-hi), normal_cdf(-lo));
        let p = a + u * (b - a);
        if p <= 0.0 || b <= a {
            return lo;
        }
        (-normal_quantile(p)).clamp(lo, hi)
    } else if hi < 0.0 {
        -truncated_normal(-hi, -lo, 1.0 - u)
    } else {
        let (a, b) = (normal_cdf(lo), normal_cdf(hi));
        normal_quantile(a + u * (b - a)).clamp(lo, hi)
    }
}

/// `γ_n(K)`: closed form for balls and (translated) boxes, Monte Carlo otherwise.
pub fn gaussian_measure_of_body(b: &ConvexBody, budget: usize, seed: u64) -> MCEstimate {
    let n = b.dim();
    match b.kind() {
        Kind::Ball { radius } => return MCEstimate::exact(gaussian_ball_measure(n, *radius)),
        Kind::Box { half_widths } => {
            return MCEstimate::exact(half_widths.iter().map(|h| normal_cdf(*h) - normal_cdf(-h)).product())
        }
        Kind::Translate { body, v } => {
            if let Kind::Box { half_widths } = body.kind() {
                return MCEstimate::exact(
                    half_widths.iter().zip(v).map(|(h, c)| normal_cdf(c + h) - normal_cdf(c - h)).product(),
                );
            }
        }
        _ => {}
    }
    // Gaussian proposals, or importance sampling from the bounding box when the
    // body holds little Gaussian mass; keep the smaller relative error
    let g = MeasureModel::gaussian(n)
        .sample(budget, seed)
        .expect("budget ≥ 1")
        .proportion(|x| b.contains(x), seed);
    let (lo, hi) = b.bounding_box();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let c = (2.0 * PI).powf(-(n as f64) / 2.0);
    let vals: Vec<f64> = rng::par_batches(budget, derive_seed(seed, 9), |r, len, _| {
        (0..len)
            .map(|_| {
                let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
                if b.contains(&x) {
                    c * (-0.5 * dot(&x, &x)).exp() * box_vol
                } else {
                    0.0
                }
            })
            .collect()
    });
    let is = MCEstimate::mean_of(&vals, seed);
    if g.value > 0.0 && g.std_error / g.value <= is.std_error / is.value.max(f64::MIN_POSITIVE) {
        g
    } else {
        is
    }
}

/// `Vol_n(K)`: exact when a closed form exists, otherwise Monte Carlo (polar
/// integration for radial bodies, bounding-box rejection for the rest).
pub fn estimate_volume(b: &ConvexBody, budget: usize, seed: u64) -> MCEstimate {
    if let Some(v) = b.exact_volume() {
        return MCEstimate::exact(v);
    }
    let n = b.dim();
    if let Kind::Radial(f) = b.kind() {
        let vals: Vec<f64> = rng::par_batches(budget, seed, |r, len, _| {
            (0..len)
                .map(|_| {
                    let t = linalg::normalized(&(0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>());
                    f.radius(&t).powi(n as i32)
                })
                .collect()
        });
        return MCEstimate::mean_of(&vals, seed).scaled(unit_ball_volume(n));
    }
    let (lo, hi) = b.bounding_box();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let hits: usize = rng::par_batches(budget, seed, |r, len, _| {
        let h = (0..len)
            .filter(|_| {
                let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
                b.contains(&x)
            })
            .count();
        vec![h]
    })
    .into_iter()
    .sum();
    MCEstimate::proportion(hits as u64, budget as u64, seed).scaled(box_vol)
}

/// Uniformly distributed unit vector.
pub fn random_unit(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let l = norm(&v);
        if l > 1e-12 {
            return linalg::scale(&v, 1.0 / l);
        }
    }
}

#[cfg(test)]
mod tests;
