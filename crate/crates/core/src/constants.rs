//! Body constants: the ψ_α constant, the mean Minkowski functional `M(K)` and
//! the section-volume bound for bodies in isotropic position.

use serde::Serialize;

use crate::bodies::{ConvexBody, Flat, HPolytope};
use crate::error::{Error, Result};
use crate::linalg::{self, dot};
use crate::measures::{estimate_volume, moments_of, random_unit, MCEstimate, MeasureModel};
use crate::report::{CheckRecord, Status};
use crate::rng::{derive_seed, par_batches, stream_rng};

pub const DEFAULT_P_GRID: [f64; 5] = [1.5, 2.0, 4.0, 8.0, 16.0];
pub const DEFAULT_DIRECTIONS: usize = 64;
pub const DEFAULT_C_DESK: f64 = 3.0;

/// Largest observed ratio `‖⟨·,θ⟩‖_p / (p^{1/α} ‖⟨·,θ⟩‖_1)` over the probes.
/// This is a lower bound for the ψ_α constant.
#[derive(Clone, Debug, Serialize)]
pub struct PsiEstimate {
    pub alpha: f64,
    pub value: f64,
    pub p_grid: Vec<f64>,
    pub direction_count: usize,
    pub argmax_direction: Vec<f64>,
    pub argmax_p: f64,
    /// Directions dropped because their first moment vanished.
    pub skipped: usize,
    /// Ratios per direction (rows) and p (columns).
    pub ratios: Vec<Vec<f64>>,
    pub samples: u64,
    pub seed: u64,
}

/// Probes the ψ_α constant of `measure` on `directions` random directions and the
/// orders in `p_grid`. All directions share one sample.
pub fn psi_alpha_constant(
    measure: &MeasureModel,
    alpha: f64,
    directions: usize,
    p_grid: &[f64],
    budget: usize,
    seed: u64,
) -> Result<PsiEstimate> {
    if !(1.0..=2.0).contains(&alpha) {
        return Err(Error::pre("alpha must lie in [1, 2]"));
    }
    if directions == 0 || p_grid.is_empty() {
        return Err(Error::pre("need at least one direction and one p"));
    }
    if p_grid.iter().any(|p| !(*p >= 1.0)) {
        return Err(Error::pre("moment order p must be at least 1"));
    }
    let n = measure.dim();
    let pts = measure.sample(budget, derive_seed(seed, 1))?;
    let center = if measure.is_symmetric() { vec![0.0; n] } else { pts.mean() };
    let mut rng = stream_rng(derive_seed(seed, 2), 0);
    let thetas: Vec<Vec<f64>> = (0..directions).map(|_| random_unit(&mut rng, n)).collect();
    let mut ps = vec![1.0];
    ps.extend_from_slice(p_grid);
    let per_dir: Vec<Option<Vec<f64>>> = crate::rng::par_map(&thetas, |theta| {
        let m = moments_of(&pts, &center, theta, &ps, seed);
        let m1 = m[0].estimate.value;
        if !(m1 > 1e-12 * m.last().map_or(1.0, |e| e.estimate.value.max(1e-300))) {
            return None;
        }
        Some(p_grid.iter().zip(&m[1..]).map(|(p, e)| e.estimate.value / (p.powf(1.0 / alpha) * m1)).collect())
    });
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut ratios = Vec::new();
    let mut skipped = 0;
    for (i, r) in per_dir.into_iter().enumerate() {
        let Some(r) = r else {
            skipped += 1;
            continue;
        };
        for (j, v) in r.iter().enumerate() {
            if *v > best.0 {
                best = (*v, i, j);
            }
        }
        ratios.push(r);
    }
    if ratios.is_empty() {
        return Err(Error::pre("every probed direction has a vanishing first moment"));
    }
    Ok(PsiEstimate {
        alpha,
        value: best.0,
        p_grid: p_grid.to_vec(),
        direction_count: directions,
        argmax_direction: thetas[best.1].clone(),
        argmax_p: p_grid[best.2],
        skipped,
        ratios,
        samples: pts.len() as u64,
        seed,
    })
}

/// `M(K) = ∫_{S^{n−1}} ‖θ‖_K dσ(θ)` by Monte Carlo over uniform directions.
pub fn mean_width_parameter(body: &ConvexBody, directions: usize, seed: u64) -> Result<MCEstimate> {
    if !body.origin_is_interior() {
        return Err(Error::OriginNotInterior);
    }
    let n = body.dim();
    let vals = par_batches(directions, seed, |rng, len, _| {
        (0..len).map(|_| body.gauge(&random_unit(rng, n))).collect()
    });
    Ok(MCEstimate::mean_of(&vals, seed))
}

/// `Vol_ℓ(K ∩ E)`. Exact for polyhedral bodies; otherwise Monte Carlo over a
/// box in flat coordinates bounded by the support function.
pub fn section_volume(body: &ConvexBody, flat: &Flat, budget: usize, seed: u64) -> Result<MCEstimate> {
    crate::error::check_dim(body.dim(), flat.ambient_dim())?;
    let l = flat.dim();
    if l == body.dim() {
        return Ok(body.exact_volume().map(MCEstimate::exact).unwrap_or_else(|| estimate_volume(body, budget, seed)));
    }
    if l == 0 {
        return Ok(MCEstimate::exact(if body.contains(flat.point()) { 1.0 } else { 0.0 }));
    }
    if let Some(p) = body.polyhedral() {
        if let Some(v) = polyhedral_section(&p, flat) {
            return Ok(MCEstimate::exact(v));
        }
    }
    let basis = flat.basis();
    let mut lo = vec![0.0; l];
    let mut hi = vec![0.0; l];
    for i in 0..l {
        let v: Vec<f64> = basis.column(i).iter().copied().collect();
        let off = dot(flat.point(), &v);
        hi[i] = body.support(&v)? - off;
        lo[i] = -body.support(&linalg::scale(&v, -1.0))? - off;
        if hi[i] <= lo[i] {
            return Ok(MCEstimate::exact(0.0));
        }
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    use rand::Rng;
    let hits: Vec<bool> = par_batches(budget, seed, |rng, len, _| {
        (0..len)
            .map(|_| {
                let u: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
                body.contains(&flat.at(&u))
            })
            .collect()
    });
    let count = hits.iter().filter(|h| **h).count() as u64;
    Ok(MCEstimate::proportion(count, hits.len() as u64, seed).scaled(box_vol))
}

/// Facets restricted to the flat, in flat coordinates. `None` when the section
/// is lower-dimensional or the vertex enumeration fails.
fn polyhedral_section(p: &HPolytope, flat: &Flat) -> Option<f64> {
    let basis = flat.basis();
    let l = flat.dim();
    let mut rows = Vec::new();
    let mut offs = Vec::new();
    for i in 0..p.facet_count() {
        let a = p.row(i);
        let b = p.offsets()[i] - dot(&a, flat.point());
        let r: Vec<f64> = (0..l).map(|j| basis.column(j).iter().zip(&a).map(|(x, y)| x * y).sum()).collect();
        let scale = linalg::norm(&a);
        if linalg::norm(&r) <= 1e-12 * scale {
            if b < -1e-12 * scale.max(b.abs()) {
                return Some(0.0);
            }
            continue;
        }
        rows.push(r);
        offs.push(b);
    }
    let sec = HPolytope::from_rows(&rows, offs).ok()?;
    match sec.vertices() {
        Ok(v) if v.len() > l => sec.volume().ok(),
        Ok(_) => Some(0.0),
        Err(_) => None,
    }
}

/// Largest `Vol_ℓ(K∩E) / Vol_n(K)^{ℓ/n}` over the flats, compared with
/// `(C·A)^{n−ℓ}`. The body should already be in isotropic position.
pub fn slice_bound_check(
    body: &ConvexBody,
    flats: &[Flat],
    psi: &PsiEstimate,
    c_desk: f64,
    budget: usize,
    seed: u64,
) -> Result<CheckRecord> {
    let n = body.dim();
    if flats.is_empty() {
        return Err(Error::pre("no flats supplied"));
    }
    let l = flats[0].dim();
    if flats.iter().any(|f| f.dim() != l || f.ambient_dim() != n) {
        return Err(Error::pre("flats must share one dimension and live in the body's space"));
    }
    let vol = match body.exact_volume() {
        Some(v) => MCEstimate::exact(v),
        None => estimate_volume(body, budget, derive_seed(seed, 0)),
    };
    let denom = vol.value.powf(l as f64 / n as f64);
    let bound = (c_desk * psi.value).powi((n - l) as i32);
    let mut worst = 0.0f64;
    let mut worst_err = 0.0;
    let mut ratios = Vec::new();
    let mut empty = 0;
    for (i, f) in flats.iter().enumerate() {
        let s = section_volume(body, f, budget, derive_seed(seed, 1 + i as u64))?;
        if s.value == 0.0 {
            empty += 1;
        }
        let r = s.value / denom;
        ratios.push(r);
        if r > worst {
            worst = r;
            worst_err = s.std_error / denom;
        }
    }
    let status = if worst <= bound {
        Status::Pass
    } else if worst - 3.0 * worst_err <= bound {
        Status::Indeterminate
    } else {
        Status::Fail
    };
    let mut rec = CheckRecord::new("slice_bound", "sections of isotropic bodies")
        .status(status)
        .quantity(crate::report::Quantity {
            name: "max_ratio".into(),
            value: worst,
            std_error: worst_err,
            samples: budget as u64,
            seed,
        })
        .exact("bound", bound)
        .exact("psi", psi.value)
        .exact("c_desk", c_desk)
        .estimate("volume", &vol)
        .detail("ratios", &ratios);
    if empty > 0 {
        rec = rec.note(format!("{empty} flat(s) miss the body"));
    }
    Ok(rec)
}

/// Coordinate and diagonal flats through `center` used by the default slice check.
pub fn probe_flats(n: usize, l: usize, center: &[f64]) -> Vec<Flat> {
    let mut out = Vec::new();
    if l == 0 || l >= n {
        return out;
    }
    for start in 0..n {
        let axes: Vec<usize> = (0..l).map(|k| (start + k) % n).collect();
        out.push(Flat::coordinate(center.to_vec(), &axes));
    }
    // planes containing a diagonal direction
    let diag: Vec<f64> = vec![1.0; n];
    let mut spanning = vec![diag];
    for k in 0..l.saturating_sub(1) {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        e[(k + 1) % n] = -1.0;
        spanning.push(e);
    }
    if let Ok(f) = Flat::new(center.to_vec(), &spanning) {
        out.push(f);
    }
    out
}

#[cfg(test)]
mod tests;
