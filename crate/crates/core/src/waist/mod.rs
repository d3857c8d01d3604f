//! Minkowski content of fibers and waist-inequality checks.
//!
//! A fiber `f⁻¹(t)` is realized as the set of points where `|f(x) − t| ≤ τ`,
//! together with a distance-to-fiber routine: closed forms for affine, radial
//! and spherical maps, Gauss-Newton projection with a tangential correction
//! otherwise. Tube measures are estimated on one shared sample per run, so they
//! are monotone in the radius and paired across levels.

mod checks;

pub use checks::*;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::ConvexBody;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, norm};
use crate::maps::MapRef;
use crate::measures::{estimate_volume, region_measure_grid, MCEstimate, MeasureModel, Points};
use crate::rng::derive_seed;
use crate::special::unit_ball_volume;

pub const DEFAULT_TAU: f64 = 1e-8;
pub const DEFAULT_EPS: [f64; 3] = [0.2, 0.1, 0.05];

/// The level set `{x : |f(x) − t| ≤ τ}`.
#[derive(Clone, Debug)]
pub struct FiberSpec {
    pub map: MapRef,
    pub level: Vec<f64>,
    pub tau: f64,
}

impl FiberSpec {
    pub fn new(map: MapRef, level: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(map, level, DEFAULT_TAU)
    }

    pub fn with_tolerance(map: MapRef, level: Vec<f64>, tau: f64) -> Result<Self> {
        check_dim(map.dim_out(), level.len())?;
        if !(tau > 0.0) {
            return Err(Error::pre("level tolerance must be positive"));
        }
        if map.dim_out() > map.dim_in() {
            return Err(Error::pre("map target dimension exceeds source dimension"));
        }
        Ok(FiberSpec { map, level, tau })
    }

    pub fn codim(&self) -> usize {
        self.map.dim_out()
    }

    pub fn at_level(&self, level: Vec<f64>) -> Self {
        FiberSpec { map: self.map.clone(), level, tau: self.tau }
    }

    /// Euclidean distance from `x` to the fiber. Returns infinity when the
    /// distance is known to exceed `cutoff` or the projection fails.
    pub fn distance(&self, x: &[f64], cutoff: f64) -> f64 {
        let r = linalg::sub(&self.map.eval(x), &self.level);
        let rn = norm(&r);
        if rn <= self.tau {
            return 0.0;
        }
        if let Some(l) = self.map.lipschitz() {
            if l == 0.0 || rn / l > cutoff {
                return f64::INFINITY;
            }
        }
        if let Some(d) = self.map.exact_fiber_distance(x, &self.level) {
            return d;
        }
        match self.project(x) {
            Some(y) => norm(&linalg::sub(x, &y)),
            None => f64::INFINITY,
        }
    }

    /// Gauss-Newton (minimum-norm steps) onto the fiber, starting at `x`.
    fn newton_to_fiber(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut y = x.to_vec();
        let scale = 1.0 + norm(&self.level);
        let mut r = linalg::sub(&self.map.eval(&y), &self.level);
        for _ in 0..60 {
            let rn = norm(&r);
            if rn <= 1e-13 * scale {
                return Some(y);
            }
            let j = self.map.jacobian(&y);
            let pinv = j.pseudo_inverse(1e-12).ok()?;
            let step = linalg::mat_vec(&pinv, &r);
            if norm(&step) == 0.0 {
                return None;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let cand = linalg::axpy(&y, -alpha, &step);
                let rc = linalg::sub(&self.map.eval(&cand), &self.level);
                if norm(&rc) < rn {
                    y = cand;
                    r = rc;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                return (rn <= self.tau).then_some(y);
            }
        }
        (norm(&r) <= self.tau).then_some(y)
    }

    /// Nearest fiber point near `x`: Newton projection, then alternating tangent
    /// steps toward `x` and re-projection until `x − y` is normal to the fiber.
    pub fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut y = self.newton_to_fiber(x)?;
        let mut d = norm(&linalg::sub(x, &y));
        for _ in 0..30 {
            let j = self.map.jacobian(&y);
            let w = linalg::sub(x, &y);
            let pinv = j.clone().pseudo_inverse(1e-12).ok()?;
            let normal = linalg::mat_vec(&pinv, &linalg::mat_vec(&j, &w));
            let tangent = linalg::sub(&w, &normal);
            if norm(&tangent) <= 1e-10 * (1.0 + d) {
                break;
            }
            let Some(cand) = self.newton_to_fiber(&linalg::add(&y, &tangent)) else { break };
            let dc = norm(&linalg::sub(x, &cand));
            if dc >= d {
                break;
            }
            y = cand;
            d = dc;
        }
        Some(y)
    }
}

/// Where tube measures are taken.
#[derive(Clone, Debug)]
pub enum Ambient {
    /// Lebesgue measure restricted to a body.
    Body(ConvexBody),
    /// A probability measure.
    Measure(MeasureModel),
}

impl Ambient {
    pub fn dim(&self) -> usize {
        match self {
            Ambient::Body(b) => b.dim(),
            Ambient::Measure(m) => m.dim(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Ambient::Body(b) => b.name().map(str::to_string).unwrap_or_else(|| format!("body in R^{}", b.dim())),
            Ambient::Measure(m) => m.describe(),
        }
    }

    fn measure(&self) -> MeasureModel {
        match self {
            Ambient::Body(b) => MeasureModel::uniform(b.clone()),
            Ambient::Measure(m) => m.clone(),
        }
    }

    /// Total mass: the volume of the body, or 1.
    pub fn mass(&self, budget: usize, seed: u64) -> MCEstimate {
        match self {
            Ambient::Body(b) => b.exact_volume().map(MCEstimate::exact).unwrap_or_else(|| estimate_volume(b, budget, seed)),
            Ambient::Measure(_) => MCEstimate::exact(1.0),
        }
    }
}

/// Monte Carlo with a sample budget, or a deterministic midpoint grid (n ≤ 3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Integration {
    MonteCarlo { budget: usize },
    Grid { resolution: usize },
}

impl Integration {
    pub fn budget(&self) -> usize {
        match self {
            Integration::MonteCarlo { budget } => *budget,
            Integration::Grid { resolution } => *resolution,
        }
    }
}

/// A shared sample of the ambient, or the grid rule, used for every tube query
/// of a run.
pub struct TubeSampler {
    ambient: Ambient,
    measure: MeasureModel,
    points: Option<Points>,
    integration: Integration,
    mass: MCEstimate,
    seed: u64,
}

impl TubeSampler {
    pub fn new(ambient: Ambient, integration: Integration, seed: u64) -> Result<Self> {
        let measure = ambient.measure();
        let points = match integration {
            Integration::MonteCarlo { budget } => {
                if budget == 0 {
                    return Err(Error::pre("budget must be positive"));
                }
                Some(measure.sample(budget, derive_seed(seed, 1))?)
            }
            Integration::Grid { .. } => None,
        };
        let mass = ambient.mass(integration.budget().max(1 << 16), derive_seed(seed, 2));
        Ok(TubeSampler { ambient, measure, points, integration, mass, seed })
    }

    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn mass(&self) -> MCEstimate {
        self.mass
    }

    pub fn points(&self) -> Option<&Points> {
        self.points.as_ref()
    }

    /// `mass · μ(d ≤ r)` for each radius, with `d` the distance to the fiber.
    pub fn tube_measures(&self, fiber: &FiberSpec, radii: &[f64]) -> Result<Vec<MCEstimate>> {
        check_dim(self.ambient.dim(), fiber.map.dim_in())?;
        let rmax = radii.iter().copied().fold(0.0, f64::max);
        let out = match (&self.points, self.integration) {
            (Some(pts), _) => {
                let d: Vec<f64> = pts.par_iter().map(|x| fiber.distance(x, rmax)).collect();
                let total = d.len() as u64;
                radii
                    .iter()
                    .map(|r| {
                        let hits = d.iter().filter(|v| **v <= *r).count() as u64;
                        MCEstimate::proportion(hits, total, self.seed)
                    })
                    .collect()
            }
            (None, Integration::Grid { resolution }) => radii
                .iter()
                .map(|r| region_measure_grid(&self.measure, |x| fiber.distance(x, *r) <= *r, resolution))
                .collect::<Result<Vec<_>>>()?,
            _ => unreachable!(),
        };
        Ok(out.into_iter().map(|e| scale_by(e, &self.mass)).collect())
    }

    /// The distance of every sample point to the fiber (Monte Carlo mode only).
    pub fn distances(&self, fiber: &FiberSpec, cutoff: f64) -> Option<Vec<f64>> {
        self.points.as_ref().map(|pts| pts.par_iter().map(|x| fiber.distance(x, cutoff)).collect())
    }
}

/// Product of an estimate with an independent mass estimate.
fn scale_by(e: MCEstimate, mass: &MCEstimate) -> MCEstimate {
    let value = e.value * mass.value;
    let rel = |m: &MCEstimate| if m.value != 0.0 { m.std_error / m.value.abs() } else { 0.0 };
    let se = if e.value == 0.0 {
        e.std_error * mass.value
    } else {
        value.abs() * (rel(&e).powi(2) + rel(mass).powi(2)).sqrt()
    };
    MCEstimate { value, std_error: se, samples: e.samples, seed: e.seed }
}

/// Tube-ratio sequence and its extrapolation to `ε → 0`.
#[derive(Clone, Debug, Serialize)]
pub struct ContentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub eps_schedule: Vec<f64>,
    /// `Vol(tube_ε ∩ ambient) / (β_k ε^k)` for each `ε`.
    pub per_eps: Vec<MCEstimate>,
    /// Fitted slope of the linear model `a + bε`.
    pub slope: f64,
    pub extrapolation_note: String,
    /// Set when no sample point lies in any tube.
    pub empty: bool,
    pub level: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
}

impl ContentEstimate {
    pub fn as_estimate(&self) -> MCEstimate {
        MCEstimate { value: self.value, std_error: self.std_error, samples: self.samples, seed: self.seed }
    }

    /// The smallest-ε ratio, which is a lower bound of the limit up to O(ε).
    pub fn finest(&self) -> MCEstimate {
        *self.per_eps.last().expect("schedule is nonempty")
    }
}

fn validate_schedule(eps: &[f64], tau: f64) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::pre("empty eps schedule"));
    }
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::pre("eps values must be positive"));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::pre("eps schedule must be strictly decreasing"));
    }
    let min = *eps.last().unwrap();
    if tau > min / 10.0 {
        return Err(Error::pre(format!("eps {min} is below the resolution floor 10·τ = {}", 10.0 * tau)));
    }
    Ok(())
}

/// Least-squares coefficients `c` with `a = Σ c_i v_i` for the model `v = a + bε`.
fn intercept_weights(eps: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = eps.len() as f64;
    if eps.len() == 1 {
        return (vec![1.0], vec![0.0]);
    }
    let s1: f64 = eps.iter().sum();
    let s2: f64 = eps.iter().map(|e| e * e).sum();
    let det = m * s2 - s1 * s1;
    let a: Vec<f64> = eps.iter().map(|e| (s2 - e * s1) / det).collect();
    let b: Vec<f64> = eps.iter().map(|e| (m * e - s1) / det).collect();
    (a, b)
}

/// Combine tube measures into a content estimate.
pub fn content_from_tubes(tubes: &[MCEstimate], eps: &[f64], codim: usize, level: Vec<f64>, seed: u64) -> ContentEstimate {
    let beta = unit_ball_volume(codim);
    let per_eps: Vec<MCEstimate> = tubes.iter().zip(eps).map(|(t, e)| t.scaled(1.0 / (beta * e.powi(codim as i32)))).collect();
    let (wa, wb) = intercept_weights(eps);
    let mut value: f64 = wa.iter().zip(&per_eps).map(|(w, v)| w * v.value).sum();
    let slope: f64 = wb.iter().zip(&per_eps).map(|(w, v)| w * v.value).sum();
    let mut std_error = wa.iter().zip(&per_eps).map(|(w, v)| (w * v.std_error).powi(2)).sum::<f64>().sqrt();
    let empty = tubes.iter().all(|t| t.value == 0.0);
    let mut note = if eps.len() == 1 {
        "single eps, no extrapolation".to_string()
    } else {
        format!("least-squares fit a + b·eps over {} values", eps.len())
    };
    // a kinked profile (e.g. a tube clipped by the boundary at coarse eps) makes
    // the linear model overshoot; fall back to the finest eps
    if eps.len() > 2 {
        let misfit = per_eps.iter().zip(eps).any(|(v, e)| {
            let r = v.value - (value + slope * e);
            r.abs() > 3.0 * v.std_error + 1e-3 * v.value.abs()
        });
        if misfit {
            let f = per_eps.last().unwrap();
            value = f.value;
            std_error = f.std_error;
            note = "linear model rejected, finest eps reported".into();
        }
    }
    ContentEstimate {
        value: if empty { 0.0 } else { value },
        std_error,
        eps_schedule: eps.to_vec(),
        per_eps,
        slope,
        extrapolation_note: note,
        empty,
        level,
        samples: tubes.first().map_or(0, |t| t.samples),
        seed,
    }
}

/// `Vol*_{n−k}` of the fiber inside the ambient, `k` the map's target dimension.
///
/// The tube is `{x ∈ ambient : dist(x, f⁻¹(t)) ≤ ε}`; the clipped tube differs from
/// the full one by O(ε) relative, which the extrapolation absorbs.
pub fn minkowski_content(
    fiber: &FiberSpec,
    ambient: &Ambient,
    eps: &[f64],
    integration: Integration,
    seed: u64,
) -> Result<ContentEstimate> {
    let sampler = TubeSampler::new(ambient.clone(), integration, seed)?;
    content_with(&sampler, fiber, eps)
}

/// [`minkowski_content`] on an existing sampler.
pub fn content_with(sampler: &TubeSampler, fiber: &FiberSpec, eps: &[f64]) -> Result<ContentEstimate> {
    validate_schedule(eps, fiber.tau)?;
    let tubes = sampler.tube_measures(fiber, eps)?;
    Ok(content_from_tubes(&tubes, eps, fiber.codim(), fiber.level.clone(), sampler.seed))
}

/// Candidate levels: per-coordinate quantiles of `f` on the sample, combined as
/// a product grid.
pub fn default_t_grid(map: &MapRef, sample: &Points, per_axis: usize) -> Vec<Vec<f64>> {
    let k = map.dim_out();
    let vals: Vec<Vec<f64>> = sample.iter().take(20_000).map(|x| map.eval(x)).collect();
    let mut axes = Vec::with_capacity(k);
    for c in 0..k {
        let mut v: Vec<f64> = vals.iter().map(|y| y[c]).collect();
        v.sort_by(f64::total_cmp);
        let q: Vec<f64> = (1..=per_axis)
            .map(|i| {
                let p = i as f64 / (per_axis + 1) as f64;
                v[((v.len() - 1) as f64 * p).round() as usize]
            })
            .collect();
        let mut q = q;
        q.dedup();
        axes.push(q);
    }
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for ax in axes {
        grid = grid.into_iter().flat_map(|g| ax.iter().map(move |v| [g.clone(), vec![*v]].concat())).collect();
    }
    grid
}

/// Midpoints between `best` and each grid neighbour along each axis.
pub fn refine_around(best: &[f64], grid: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = best.len();
    let mut out = Vec::new();
    for c in 0..k {
        let mut vals: Vec<f64> = grid.iter().map(|g| g[c]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let Some(pos) = vals.iter().position(|v| *v == best[c]) else { continue };
        for nb in [pos.checked_sub(1), Some(pos + 1)].into_iter().flatten() {
            if let Some(v) = vals.get(nb) {
                let mut t = best.to_vec();
                t[c] = 0.5 * (best[c] + v);
                out.push(t);
            }
        }
    }
    out
}

/// Orthogonal complement basis of the row space of `a`, for fibers of affine maps.
pub fn affine_fiber_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    linalg::null_space(a, 1e-12)
}

#[cfg(test)]
mod tests;
