//! Waist certificates: searches over levels `t` for a fiber meeting a bound.
//! A failed search means no witness was found on the grid; it never refutes.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::*;
use crate::bodies::{Flat, HPolytope, Kind};
use crate::constants::section_volume;
use crate::maps::{AfterGaussianTransport, FnMap, Rescaled};
use crate::measures::random_unit;
use crate::report::{CheckRecord, Quantity, Status};
use crate::rng::stream_rng;
use crate::special::gaussian_ball_measure;

pub const DEFAULT_R_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// Result of a level search against a lower bound.
#[derive(Clone, Debug, Serialize)]
pub struct WaistCertificate {
    pub subject: String,
    pub codim: usize,
    pub map: String,
    pub theorem: String,
    pub best_t: Vec<f64>,
    /// The quantity compared with `bound` at `best_t`.
    pub value: f64,
    pub std_error: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub status: Status,
    pub witness_found: bool,
    /// `(t, value, std_error)` for every level tried.
    pub levels: Vec<(Vec<f64>, f64, f64)>,
    /// Per-radius rows `(r, estimate, std_error, bound)` at `best_t`, for tube checks.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<(f64, f64, f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub content: Option<ContentEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conjugate: Option<Box<WaistCertificate>>,
    pub samples: u64,
    pub seed: u64,
}

impl WaistCertificate {
    pub fn to_check(&self, name: &str) -> CheckRecord {
        let mut rec = CheckRecord::new(name, self.theorem.clone())
            .status(self.status)
            .quantity(Quantity { name: "value".into(), value: self.value, std_error: self.std_error, samples: self.samples, seed: self.seed })
            .exact("bound", self.bound)
            .tolerance("relative", self.tolerance)
            .detail("best_t", &self.best_t)
            .detail("levels", &self.levels)
            .detail("map", &self.map)
            .detail("subject", &self.subject);
        if !self.radii.is_empty() {
            rec = rec.detail("radii", &self.radii);
        }
        if let Some(c) = &self.content {
            rec = rec.detail("content", c);
        }
        if !self.witness_found {
            rec = rec.note("no witness level found on the grid");
        }
        rec
    }

    /// This certificate and its conjugate check, if any.
    pub fn to_checks(&self, name: &str) -> Vec<CheckRecord> {
        let mut out = vec![self.to_check(name)];
        if let Some(c) = &self.conjugate {
            out.push(c.to_check(&format!("{name}_conjugate")));
        }
        out
    }
}

/// Options shared by the content-based checks.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub eps: Vec<f64>,
    pub integration: Integration,
    pub seed: u64,
    /// Levels to try; quantiles of `f` on the sample when `None`.
    pub t_grid: Option<Vec<Vec<f64>>>,
    /// Relative shortfall allowed against the bound.
    pub tolerance: f64,
    pub tau: f64,
    pub refine: bool,
    /// Re-estimate the selected level on an independent sample, so the reported
    /// value carries no selection bias from the max over levels.
    pub confirm: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            eps: DEFAULT_EPS.to_vec(),
            integration: Integration::MonteCarlo { budget: 200_000 },
            seed: 0,
            t_grid: None,
            tolerance: 0.05,
            tau: DEFAULT_TAU,
            refine: true,
            confirm: true,
        }
    }
}

fn grid_points_for(sampler: &TubeSampler, seed: u64) -> Result<Points> {
    match sampler.points() {
        Some(p) => Ok(p.clone()),
        None => sampler.ambient().measure().sample(20_000, derive_seed(seed, 9)),
    }
}

fn per_axis(k: usize) -> usize {
    if k == 1 { 9 } else { 5 }
}

/// Content at every grid level (plus refinement); returns the best and the table.
pub fn content_search(
    sampler: &TubeSampler,
    map: &MapRef,
    opts: &SearchOptions,
) -> Result<(ContentEstimate, Vec<(Vec<f64>, f64, f64)>)> {
    let grid = match &opts.t_grid {
        Some(g) if !g.is_empty() => g.clone(),
        Some(_) => return Err(Error::pre("empty level grid")),
        None => default_t_grid(map, &grid_points_for(sampler, opts.seed)?, per_axis(map.dim_out())),
    };
    let mut table = Vec::new();
    let mut best: Option<ContentEstimate> = None;
    let eval = |t: &Vec<f64>, best: &mut Option<ContentEstimate>, table: &mut Vec<_>| -> Result<()> {
        let fiber = FiberSpec::with_tolerance(map.clone(), t.clone(), opts.tau)?;
        let c = content_with(sampler, &fiber, &opts.eps)?;
        table.push((t.clone(), c.value, c.std_error));
        if best.as_ref().is_none_or(|b| c.value > b.value) {
            *best = Some(c);
        }
        Ok(())
    };
    for t in &grid {
        eval(t, &mut best, &mut table)?;
    }
    if opts.refine && grid.len() > 1 {
        let b = best.as_ref().expect("grid is nonempty").level.clone();
        for t in refine_around(&b, &grid) {
            eval(&t, &mut best, &mut table)?;
        }
    }
    let best = best.expect("grid is nonempty");
    if opts.confirm && matches!(opts.integration, Integration::MonteCarlo { .. }) && table.len() > 1 {
        let fresh = TubeSampler::new(sampler.ambient().clone(), opts.integration, derive_seed(opts.seed, 0xC0F))?;
        let fiber = FiberSpec::with_tolerance(map.clone(), best.level.clone(), opts.tau)?;
        return Ok((content_with(&fresh, &fiber, &opts.eps)?, table));
    }
    Ok((best, table))
}

fn status_against(value: f64, se: f64, bound: f64, tol: f64) -> Status {
    let target = bound * (1.0 - tol);
    if value >= target {
        Status::Pass
    } else if value + 3.0 * se >= target {
        Status::Indeterminate
    } else {
        Status::Fail
    }
}

/// Searches levels of `f : ℝⁿ → ℝᵏ` for a fiber whose Gaussian tubes satisfy
/// `γ_n(f⁻¹(t) + rBⁿ) ≥ γ_k(rBᵏ)` at every `r`, within three standard errors.
pub fn gaussian_waist_check(
    map: &MapRef,
    t_candidates: Option<Vec<Vec<f64>>>,
    r_grid: &[f64],
    integration: Integration,
    seed: u64,
) -> Result<WaistCertificate> {
    let n = map.dim_in();
    let k = map.dim_out();
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::pre("radii must be positive"));
    }
    let sampler = TubeSampler::new(Ambient::Measure(MeasureModel::gaussian(n)), integration, seed)?;
    let mut cands = match t_candidates {
        Some(c) if !c.is_empty() => c,
        Some(_) => return Err(Error::pre("empty level grid")),
        None => default_t_grid(map, &grid_points_for(&sampler, seed)?, per_axis(k)),
    };
    cands.push(map.eval(&vec![0.0; n]));
    let bounds: Vec<f64> = r_grid.iter().map(|r| gaussian_ball_measure(k, *r)).collect();
    let mut best: Option<(f64, Vec<f64>, Vec<MCEstimate>)> = None;
    let mut levels = Vec::new();
    for t in &cands {
        let fiber = FiberSpec::new(map.clone(), t.clone())?;
        let tubes = sampler.tube_measures(&fiber, r_grid)?;
        // worst standardized slack over the radii
        let score = tubes
            .iter()
            .zip(&bounds)
            .map(|(e, b)| (e.value - b) / e.std_error.max(1e-12))
            .fold(f64::INFINITY, f64::min);
        let ratio = tubes.iter().zip(&bounds).map(|(e, b)| e.value / b).fold(f64::INFINITY, f64::min);
        levels.push((t.clone(), ratio, score));
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, t.clone(), tubes));
        }
    }
    let (score, best_t, tubes) = best.expect("candidates are nonempty");
    let found = score >= -3.0;
    let radii: Vec<(f64, f64, f64, f64)> = r_grid.iter().zip(&tubes).zip(&bounds).map(|((r, e), b)| (*r, e.value, e.std_error, *b)).collect();
    let (value, se) = tubes
        .iter()
        .zip(&bounds)
        .map(|(e, b)| (e.value / b, e.std_error / b))
        .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc });
    Ok(WaistCertificate {
        subject: format!("gaussian{n}"),
        codim: k,
        map: map.name(),
        theorem: "gaussian waist: γ_n(f⁻¹(t) + rBⁿ) ≥ γ_k(rBᵏ)".into(),
        best_t,
        value,
        std_error: se,
        bound: 1.0,
        tolerance: 0.0,
        status: if found { Status::Pass } else { Status::Fail },
        witness_found: found,
        levels,
        radii,
        content: None,
        conjugate: None,
        samples: tubes[0].samples,
        seed,
    })
}

fn content_certificate(
    ambient: Ambient,
    map: &MapRef,
    bound: f64,
    theorem: &str,
    opts: &SearchOptions,
) -> Result<WaistCertificate> {
    check_dim(ambient.dim(), map.dim_in())?;
    let subject = ambient.describe();
    let sampler = TubeSampler::new(ambient, opts.integration, opts.seed)?;
    let (best, levels) = content_search(&sampler, map, opts)?;
    let status = status_against(best.value, best.std_error, bound, opts.tolerance);
    Ok(WaistCertificate {
        subject,
        codim: map.dim_out(),
        map: map.name(),
        theorem: theorem.into(),
        best_t: best.level.clone(),
        value: best.value,
        std_error: best.std_error,
        bound,
        tolerance: opts.tolerance,
        status,
        witness_found: status == Status::Pass,
        levels,
        radii: Vec::new(),
        samples: best.samples,
        seed: opts.seed,
        content: Some(best),
        conjugate: None,
    })
}

/// Fiber content of `f` on `(0,1)ⁿ` against 1, plus the Gaussian check of `f ∘ Φ`.
pub fn cube_waist_check(map: &MapRef, opts: &SearchOptions, conjugate_r_grid: Option<&[f64]>) -> Result<WaistCertificate> {
    let n = map.dim_in();
    let cube = ConvexBody::cube(n)?.with_name(format!("cube{n}"));
    let mut cert = content_certificate(Ambient::Body(cube), map, 1.0, "cube waist: Vol*_{n−k}(f⁻¹(t)) ≥ 1", opts)?;
    if let Some(r) = conjugate_r_grid {
        let h: MapRef = Arc::new(AfterGaussianTransport(map.clone()));
        let cands: Vec<Vec<f64>> = cert.levels.iter().map(|l| l.0.clone()).collect();
        let conj = gaussian_waist_check(&h, Some(cands), r, opts.integration, derive_seed(opts.seed, 77))?;
        cert.conjugate = Some(Box::new(conj));
    }
    Ok(cert)
}

/// Fiber content of `f` on `∏(0, λ_i)` against the product of the `n − k`
/// smallest side lengths.
pub fn box_waist_check(sides: &[f64], map: &MapRef, opts: &SearchOptions) -> Result<WaistCertificate> {
    let n = sides.len();
    if sides.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::pre("side lengths must be positive"));
    }
    check_dim(n, map.dim_in())?;
    let mut sorted = sides.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bound: f64 = sorted[..n - map.dim_out()].iter().product();
    let body = ConvexBody::aligned_box(&vec![0.0; n], sides)?.with_name(format!("box{n}{sides:?}"));
    content_certificate(Ambient::Body(body), map, bound, "box waist: Vol*_{n−k}(f⁻¹(t)) ≥ ∏_{j≤n−k} λ_j", opts)
}

/// Largest `k`-dimensional section found among coordinate flats, vertex chords
/// (k = 1, polyhedral bodies) and random flats through sample points.
pub fn max_section(body: &ConvexBody, k: usize, random_flats: usize, budget: usize, seed: u64) -> Result<(MCEstimate, Flat)> {
    let n = body.dim();
    if k == 0 || k > n {
        return Err(Error::pre("section dimension must lie in 1..=n"));
    }
    let center = body.interior_point();
    let mut flats = Vec::new();
    for axes in crate::bodies::polytope::Combinations::new(n, k) {
        flats.push(Flat::coordinate(center.clone(), &axes));
    }
    if k == 1 {
        if let Some(p) = body.polyhedral() {
            if let Ok(v) = p.vertices() {
                for i in 0..v.len() {
                    for j in i + 1..v.len() {
                        let d = linalg::sub(&v[j], &v[i]);
                        if norm(&d) > 0.0 {
                            flats.push(Flat::new(v[i].clone(), &[d])?);
                        }
                    }
                }
            }
        }
    }
    let mut rng = stream_rng(seed, 0);
    let pts = MeasureModel::uniform(body.clone()).sample(random_flats.max(1), derive_seed(seed, 1))?;
    for i in 0..random_flats {
        let frame: Vec<Vec<f64>> = (0..k).map(|_| random_unit(&mut rng, n)).collect();
        let through = if rng.random::<f64>() < 0.5 { center.clone() } else { pts.get(i).to_vec() };
        if let Ok(f) = Flat::new(through, &frame) {
            flats.push(f);
        }
    }
    let mut best: Option<(MCEstimate, Flat)> = None;
    for (i, f) in flats.into_iter().enumerate() {
        let s = section_volume(body, &f, budget, derive_seed(seed, 100 + i as u64))?;
        if best.as_ref().is_none_or(|b| s.value > b.0.value) {
            best = Some((s, f));
        }
    }
    Ok(best.expect("at least one coordinate flat"))
}

/// `sup_t Vol*_{n−k}(f⁻¹(t)) · sup_E Vol_k(K ∩ E) ≥ Vol_n(K)`, with both sups
/// taken over finite searches.
pub fn section_theorem_check(body: &ConvexBody, map: &MapRef, flat_search_budget: usize, opts: &SearchOptions) -> Result<WaistCertificate> {
    let n = body.dim();
    let k = map.dim_out();
    check_dim(n, map.dim_in())?;
    if k == 0 || k >= n {
        return Err(Error::pre("map target dimension must lie in 1..n"));
    }
    let sampler = TubeSampler::new(Ambient::Body(body.clone()), opts.integration, opts.seed)?;
    let probe = grid_points_for(&sampler, opts.seed)?;
    let f0 = map.eval(probe.get(0));
    if probe.iter().take(2000).all(|x| map.eval(x) == f0) {
        return Err(Error::pre("map is constant on the body"));
    }
    let (best, levels) = content_search(&sampler, map, opts)?;
    let sec_budget = opts.integration.budget().min(200_000);
    let (sec, flat) = max_section(body, k, flat_search_budget, sec_budget, derive_seed(opts.seed, 5))?;
    let vol = sampler.mass();
    let product = best.value * sec.value;
    let rel = |v: f64, e: f64| if v != 0.0 { e / v.abs() } else { 0.0 };
    let se = product.abs() * (rel(best.value, best.std_error).powi(2) + rel(sec.value, sec.std_error).powi(2)).sqrt();
    // widen by three standard errors on each side
    let slack = product + 3.0 * se - vol.value * (1.0 - opts.tolerance) + 3.0 * vol.std_error;
    let status = Status::from_bool(slack >= 0.0);
    let mut cert = WaistCertificate {
        subject: sampler.ambient().describe(),
        codim: k,
        map: map.name(),
        theorem: "section theorem: sup_t Vol*(f⁻¹(t)) · sup_E Vol_k(K∩E) ≥ Vol_n(K)".into(),
        best_t: best.level.clone(),
        value: product,
        std_error: se,
        bound: vol.value,
        tolerance: opts.tolerance,
        status,
        witness_found: status == Status::Pass,
        levels,
        radii: Vec::new(),
        samples: best.samples,
        seed: opts.seed,
        content: Some(best),
        conjugate: None,
    };
    cert.radii.push((0.0, sec.value, sec.std_error, vol.value));
    let _ = flat;
    Ok(cert)
}

/// `[min, max]` of an affine functional over `(x + rK) ∩ K`.
fn affine_range_on_lens(body: &ConvexBody, x: &[f64], r: f64, a: &[f64], c: f64) -> Result<(f64, f64)> {
    let sup = |u: &[f64]| -> Result<f64> {
        match body.kind() {
            Kind::Box { half_widths } => Ok(half_widths
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    let lo = (x[i] - r * h).max(-h);
                    let hi = (x[i] + r * h).min(*h);
                    if u[i] >= 0.0 { u[i] * hi } else { u[i] * lo }
                })
                .sum()),
            Kind::Ball { radius } => Ok(lens_support(*radius, x, r * radius, u)),
            _ => {
                let small = body.scaled(r)?.translate(x.to_vec())?;
                ConvexBody::intersection(vec![body.clone(), small])?.support(u)
            }
        }
    };
    let hi = sup(a)? + c;
    let lo = -sup(&linalg::scale(a, -1.0))? + c;
    Ok((lo, hi))
}

/// Support function of `R·Bⁿ ∩ (x + ρBⁿ)` in direction `u`.
fn lens_support(big: f64, x: &[f64], rho: f64, u: &[f64]) -> f64 {
    let un = norm(u);
    if un == 0.0 {
        return 0.0;
    }
    let a = linalg::scale(u, 1.0 / un);
    let d = norm(x);
    // maximizers of each ball; if one lies in the other it is the answer
    let p1 = linalg::axpy(x, rho, &a);
    let p2 = linalg::scale(&a, big);
    let mut best = f64::NEG_INFINITY;
    if norm(&p1) <= big * (1.0 + 1e-12) {
        best = best.max(linalg::dot(&p1, &a));
    }
    if norm(&linalg::sub(&p2, x)) <= rho * (1.0 + 1e-12) {
        best = best.max(linalg::dot(&p2, &a));
    }
    if best > f64::NEG_INFINITY || d == 0.0 {
        return un * best.max(linalg::dot(&p1, &a).min(big));
    }
    // otherwise on the (n−2)-sphere where the boundaries meet
    let w = linalg::scale(x, 1.0 / d);
    let s = (big * big - rho * rho + d * d) / (2.0 * d);
    let circle_r = (big * big - s * s).max(0.0).sqrt();
    let center = linalg::scale(&w, s);
    let along = linalg::dot(&a, &w);
    let perp = (1.0 - along * along).max(0.0).sqrt();
    un * (linalg::dot(&center, &a) + circle_r * perp)
}

/// `[min, max]` of a scalar map over `(x + rK) ∩ K`: exact for affine maps, an
/// inner approximation from boundary probes otherwise (which can only shrink tubes).
fn map_range_on_lens(body: &ConvexBody, map: &MapRef, x: &[f64], r: f64, dirs: &[Vec<f64>]) -> Result<(f64, f64)> {
    if let Some((a, c)) = map.affine() {
        let row: Vec<f64> = a.row(0).iter().copied().collect();
        return affine_range_on_lens(body, x, r, &row, c[0]);
    }
    let f0 = map.eval(x)[0];
    let (mut lo, mut hi) = (f0, f0);
    for u in dirs {
        let s = body.ray_exit(x, u).min(r * body.ray_exit(&vec![0.0; x.len()], u));
        let v = map.eval(&linalg::axpy(x, s, u))[0];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// `μ(f⁻¹(t) + rK) ≥ (r/(2+r))^k` for a symmetric body `K` and a measure on it.
/// Scalar maps (and constant maps of any target dimension) are supported.
pub fn symmetric_body_waist_check(
    body: &ConvexBody,
    measure: &MeasureModel,
    map: &MapRef,
    t_grid: Option<Vec<Vec<f64>>>,
    r_grid: &[f64],
    budget: usize,
    seed: u64,
) -> Result<WaistCertificate> {
    let n = body.dim();
    check_dim(n, map.dim_in())?;
    check_dim(n, measure.dim())?;
    if !body.is_origin_symmetric() {
        return Err(Error::pre("body must be origin-symmetric"));
    }
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::pre("radii must lie in (0, 1)"));
    }
    let k = map.dim_out();
    let pts = measure.sample(budget, derive_seed(seed, 1))?;
    if pts.iter().any(|x| !body.contains(x)) {
        return Err(Error::pre("measure is not supported in the body"));
    }
    let bounds: Vec<f64> = r_grid.iter().map(|r| (r / (2.0 + r)).powi(k as i32)).collect();
    let is_constant = map.lipschitz() == Some(0.0);
    if k != 1 && !is_constant {
        return Err(Error::Unsupported("body-norm tubes need a scalar or constant map".into()));
    }
    let cands = match t_grid {
        Some(g) if !g.is_empty() => g,
        Some(_) => return Err(Error::pre("empty level grid")),
        None if is_constant => vec![map.eval(&vec![0.0; n])],
        None => default_t_grid(map, &pts, 9),
    };
    // ranges per point and radius do not depend on t
    let mut rng = stream_rng(derive_seed(seed, 2), 0);
    let dirs: Vec<Vec<f64>> = (0..48).map(|_| random_unit(&mut rng, n)).collect();
    let ranges: Vec<Vec<(f64, f64)>> = if is_constant {
        Vec::new()
    } else {
        crate::rng::par_map(&(0..pts.len()).collect::<Vec<_>>(), |i| {
            r_grid.iter().map(|r| map_range_on_lens(body, map, pts.get(*i), *r, &dirs)).collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
    };
    let total = pts.len() as u64;
    let mut best: Option<(f64, Vec<f64>, Vec<MCEstimate>)> = None;
    let mut levels = Vec::new();
    for t in &cands {
        let est: Vec<MCEstimate> = if is_constant {
            let hit = map.eval(&vec![0.0; n]) == *t;
            r_grid.iter().map(|_| MCEstimate::exact(if hit { 1.0 } else { 0.0 })).collect()
        } else {
            (0..r_grid.len())
                .map(|j| {
                    let hits = ranges.iter().filter(|rs| rs[j].0 <= t[0] && t[0] <= rs[j].1).count() as u64;
                    MCEstimate::proportion(hits, total, seed)
                })
                .collect()
        };
        let score = est.iter().zip(&bounds).map(|(e, b)| (e.value - b) / e.std_error.max(1e-12)).fold(f64::INFINITY, f64::min);
        let ratio = est.iter().zip(&bounds).map(|(e, b)| e.value / b).fold(f64::INFINITY, f64::min);
        levels.push((t.clone(), ratio, score));
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, t.clone(), est));
        }
    }
    let (score, best_t, est) = best.expect("candidates are nonempty");
    let found = score >= -3.0;
    let radii: Vec<(f64, f64, f64, f64)> = r_grid.iter().zip(&est).zip(&bounds).map(|((r, e), b)| (*r, e.value, e.std_error, *b)).collect();
    let (value, se) = est
        .iter()
        .zip(&bounds)
        .map(|(e, b)| (e.value / b, e.std_error / b))
        .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc });
    Ok(WaistCertificate {
        subject: format!("{} under {}", body.name().unwrap_or("body"), measure.describe()),
        codim: k,
        map: map.name(),
        theorem: "symmetric body waist: μ(f⁻¹(t) + rK) ≥ (r/(2+r))^k".into(),
        best_t,
        value,
        std_error: se,
        bound: 1.0,
        tolerance: 0.0,
        status: if found { Status::Pass } else { Status::Fail },
        witness_found: found,
        levels,
        radii,
        content: None,
        conjugate: None,
        samples: total,
        seed,
    })
}

/// Upper bound on the ℓ-waist from a finite family of maps `ℝⁿ → ℝ^{n−ℓ}`.
#[derive(Clone, Debug, Serialize)]
pub struct WaistBound {
    pub value: f64,
    pub std_error: f64,
    pub ell: usize,
    /// `(map, sup_t content, (sup_t content)^{1/ℓ})` per candidate.
    pub candidates: Vec<(String, f64, f64)>,
    pub seed: u64,
}

/// `min_f (sup_t Vol*_ℓ(f⁻¹(t)))^{1/ℓ}` over the candidates.
pub fn waist_upper_bound(body: &ConvexBody, candidates: &[MapRef], opts: &SearchOptions) -> Result<WaistBound> {
    let n = body.dim();
    if candidates.is_empty() {
        return Err(Error::pre("no candidate maps"));
    }
    let k = candidates[0].dim_out();
    if candidates.iter().any(|m| m.dim_out() != k || m.dim_in() != n) {
        return Err(Error::pre("candidates must all map the body's space to the same dimension"));
    }
    if k >= n {
        return Err(Error::pre("candidate target dimension must be below the body dimension"));
    }
    let ell = n - k;
    let sampler = TubeSampler::new(Ambient::Body(body.clone()), opts.integration, opts.seed)?;
    let mut rows = Vec::new();
    let mut best = (f64::INFINITY, 0.0);
    for m in candidates {
        let (c, _) = content_search(&sampler, m, opts)?;
        let root = c.value.max(0.0).powf(1.0 / ell as f64);
        let se = if c.value > 0.0 { root / (ell as f64 * c.value) * c.std_error } else { 0.0 };
        rows.push((m.name(), c.value, root));
        if root < best.0 {
            best = (root, se);
        }
    }
    Ok(WaistBound { value: best.0, std_error: best.1, ell, candidates: rows, seed: opts.seed })
}

/// Orthogonal projection of a box or polytope onto coordinate axes (at most
/// two axes for polytopes), as a body in those coordinates.
pub fn coordinate_projection_body(body: &ConvexBody, axes: &[usize]) -> Result<ConvexBody> {
    let (lo, hi) = body.bounding_box();
    let boxlike = match body.kind() {
        Kind::Box { .. } => true,
        Kind::Translate { body: b, .. } => matches!(b.kind(), Kind::Box { .. }),
        _ => false,
    };
    if boxlike {
        let l: Vec<f64> = axes.iter().map(|&i| lo[i]).collect();
        let h: Vec<f64> = axes.iter().map(|&i| hi[i]).collect();
        return ConvexBody::aligned_box(&l, &h);
    }
    let p = body.polyhedral().ok_or_else(|| Error::Unsupported("projection needs a box or polytope".into()))?;
    let verts: Vec<Vec<f64>> = p.vertices()?.iter().map(|v| axes.iter().map(|&i| v[i]).collect()).collect();
    match axes.len() {
        1 => {
            let a = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let b = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            ConvexBody::aligned_box(&[a], &[b])
        }
        2 => ConvexBody::h_polytope(hull_2d(&verts)?),
        _ => Err(Error::Unsupported("polytope projection is limited to two axes".into())),
    }
}

/// Facets of the convex hull of planar points (monotone chain).
fn hull_2d(points: &[Vec<f64>]) -> Result<HPolytope> {
    let mut p: Vec<(f64, f64)> = points.iter().map(|v| (v[0], v[1])).collect();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 1e-14 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::EmptyInterior);
    }
    let mut rows = Vec::new();
    let mut offs = Vec::new();
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        // counter-clockwise order: outward normal is the edge rotated clockwise
        let nrm = vec![b.1 - a.1, a.0 - b.0];
        offs.push(nrm[0] * a.0 + nrm[1] * a.1);
        rows.push(nrm);
    }
    HPolytope::from_rows(&rows, offs)
}

/// Section of a body through the origin by a coordinate subspace, in those coordinates.
pub fn coordinate_section_body(body: &ConvexBody, axes: &[usize]) -> Result<ConvexBody> {
    match body.kind() {
        Kind::Box { half_widths } => ConvexBody::cuboid(axes.iter().map(|&i| half_widths[i]).collect()),
        Kind::Ball { radius } => ConvexBody::ball(axes.len(), *radius),
        _ => {
            let p = body.polyhedral().ok_or_else(|| Error::Unsupported("section needs a box, ball or polytope".into()))?;
            let rows: Vec<Vec<f64>> = (0..p.facet_count()).map(|i| axes.iter().map(|&c| p.row(i)[c]).collect()).collect();
            let keep: Vec<usize> = (0..rows.len()).filter(|&i| norm(&rows[i]) > 1e-12).collect();
            let r: Vec<Vec<f64>> = keep.iter().map(|&i| rows[i].clone()).collect();
            let o: Vec<f64> = keep.iter().map(|&i| p.offsets()[i]).collect();
            ConvexBody::h_polytope(HPolytope::from_rows(&r, o)?)
        }
    }
}

fn split(x: &[f64], axes: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let on: Vec<f64> = axes.iter().map(|&i| x[i]).collect();
    let off: Vec<f64> = (0..x.len()).filter(|i| !axes.contains(i)).map(|i| x[i]).collect();
    (on, off)
}

/// Projection monotonicity: the candidate-restricted waist of `K` with
/// `g(x) = (Proj_{E⊥}x, f(Proj_E x))` is at most that of `Proj_E K` with `f`.
pub fn projection_monotonicity_check(body: &ConvexBody, axes: &[usize], f: &MapRef, opts: &SearchOptions) -> Result<CheckRecord> {
    let n = body.dim();
    let k = axes.len();
    check_dim(k, f.dim_in())?;
    let proj = coordinate_projection_body(body, axes)?;
    let ax = axes.to_vec();
    let ff = f.clone();
    let g: MapRef = Arc::new(FnMap::new(n, n - k + f.dim_out(), format!("(P_E⊥, {}∘P_E)", f.name()), move |x| {
        let (on, off) = split(x, &ax);
        [off, ff.eval(&on)].concat()
    }));
    let lhs = waist_upper_bound(body, &[g], opts)?;
    let rhs = waist_upper_bound(&proj, std::slice::from_ref(f), &SearchOptions { seed: derive_seed(opts.seed, 3), ..opts.clone() })?;
    monotonicity_record("projection_monotonicity", &lhs, &rhs, 1.0, opts.tolerance)
}

/// Section monotonicity for symmetric bodies whose coordinate sections and
/// projections agree: the waist of `K` with `g(x) = (Px, f((x − b_{Px})/2))`,
/// `b_y = (0, y)`, is at most twice that of `K ∩ E` with `f`.
pub fn section_monotonicity_check(body: &ConvexBody, axes: &[usize], f: &MapRef, opts: &SearchOptions) -> Result<CheckRecord> {
    let n = body.dim();
    let k = axes.len();
    check_dim(k, f.dim_in())?;
    if !body.is_origin_symmetric() {
        return Err(Error::pre("body must be origin-symmetric"));
    }
    // b_y = (0, y) must lie in K for the construction
    let pts = MeasureModel::uniform(body.clone()).sample(2000, derive_seed(opts.seed, 4))?;
    for x in pts.iter() {
        let mut b = x.to_vec();
        for &i in axes {
            b[i] = 0.0;
        }
        if !body.contains(&b) {
            return Err(Error::Unsupported("the coordinate lift b_y = (0, y) leaves the body".into()));
        }
    }
    let sec = coordinate_section_body(body, axes)?;
    let ax = axes.to_vec();
    let ff = f.clone();
    let g: MapRef = Arc::new(FnMap::new(n, n - k + f.dim_out(), format!("(P_E⊥, {}((x − b)/2))", f.name()), move |x| {
        let (on, off) = split(x, &ax);
        [off, ff.eval(&linalg::scale(&on, 0.5))].concat()
    }));
    let lhs = waist_upper_bound(body, &[g], opts)?;
    let rhs = waist_upper_bound(&sec, std::slice::from_ref(f), &SearchOptions { seed: derive_seed(opts.seed, 3), ..opts.clone() })?;
    monotonicity_record("section_monotonicity", &lhs, &rhs, 2.0, opts.tolerance)
}

fn monotonicity_record(name: &str, lhs: &WaistBound, rhs: &WaistBound, factor: f64, tol: f64) -> Result<CheckRecord> {
    let target = factor * rhs.value;
    let se = (lhs.std_error.powi(2) + (factor * rhs.std_error).powi(2)).sqrt();
    let status = if lhs.value <= target * (1.0 + tol) {
        Status::Pass
    } else if lhs.value - 3.0 * se <= target * (1.0 + tol) {
        Status::Indeterminate
    } else {
        Status::Fail
    };
    Ok(CheckRecord::new(name, "waist monotonicity under projections and sections")
        .status(status)
        .quantity(Quantity { name: "lifted_bound".into(), value: lhs.value, std_error: lhs.std_error, samples: 0, seed: lhs.seed })
        .quantity(Quantity { name: "reduced_bound".into(), value: rhs.value, std_error: rhs.std_error, samples: 0, seed: rhs.seed })
        .exact("factor", factor)
        .tolerance("relative", tol)
        .detail("lifted", lhs)
        .detail("reduced", rhs))
}

/// `w(λK) = λ·w(K)` on matched candidates `f(·/λ)`, eps scaled by `λ`, paired seeds.
pub fn homogeneity_probe(body: &ConvexBody, candidates: &[MapRef], lambda: f64, opts: &SearchOptions) -> Result<(WaistBound, WaistBound)> {
    let base = waist_upper_bound(body, candidates, opts)?;
    let scaled_maps: Vec<MapRef> = candidates.iter().map(|m| Arc::new(Rescaled { inner: m.clone(), factor: lambda }) as MapRef).collect();
    let scaled_opts = SearchOptions {
        eps: opts.eps.iter().map(|e| e * lambda).collect(),
        t_grid: opts.t_grid.clone(),
        ..opts.clone()
    };
    let scaled = waist_upper_bound(&body.scaled(lambda)?, &scaled_maps, &scaled_opts)?;
    Ok((base, scaled))
}


#[cfg(test)]
pub(super) fn lens_range_for_tests(body: &ConvexBody, map: &MapRef, x: &[f64], r: f64) -> (f64, f64) {
    map_range_on_lens(body, map, x, r, &[]).unwrap()
}
