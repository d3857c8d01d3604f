//! Barycentric lower bound `(1/(rⁿVol V)) ∫_{K∩(x₀+rV)} φ ≥ 1/Vol(K − rV)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bodies::{ConvexBody, Kind};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, norm};
use crate::measures::{estimate_volume, region_measure_grid, MCEstimate, MeasureKind, MeasureModel};
use crate::quad::integrate;
use crate::report::{CheckRecord, Quantity, Status, VerificationReport};
use crate::rng::derive_seed;
use crate::special::unit_ball_volume;
use crate::waist::Integration;

/// Support function `h_K(u)`.
fn support(body: &ConvexBody, u: &[f64]) -> Result<f64> {
    body.support(u)
}

/// Vertices of a polygon in counter-clockwise order.
fn polygon_ccw(body: &ConvexBody) -> Option<Vec<Vec<f64>>> {
    let p = body.polyhedral()?;
    let mut v = p.vertices().ok()?.to_vec();
    if v.len() < 3 {
        return None;
    }
    let c = v.iter().fold(vec![0.0; 2], |a, x| linalg::add(&a, x));
    let c = linalg::scale(&c, 1.0 / v.len() as f64);
    v.sort_by(|a, b| (a[1] - c[1]).atan2(a[0] - c[0]).total_cmp(&(b[1] - c[1]).atan2(b[0] - c[0])));
    Some(v)
}

/// `Vol_2(K + W)` for planar bodies via the mixed area:
/// `A(K) + 2V(K, W) + A(W)`, exact when `W` is a polygon or a disk.
fn planar_minkowski_area(k: &ConvexBody, w: &ConvexBody, area_k: f64) -> Result<f64> {
    if let Some(poly) = polygon_ccw(w) {
        let mut mixed = 0.0;
        let mut area_w = 0.0;
        for i in 0..poly.len() {
            let a = &poly[i];
            let b = &poly[(i + 1) % poly.len()];
            let e = linalg::sub(b, a);
            let len = norm(&e);
            area_w += 0.5 * (a[0] * b[1] - a[1] * b[0]);
            // outward normal of a counter-clockwise edge
            let nrm = vec![e[1] / len, -e[0] / len];
            mixed += len * support(k, &nrm)?;
        }
        return Ok(area_k + mixed + area_w);
    }
    if let Some(r) = ball_radius(w) {
        // Steiner: A + r·perimeter + πr², perimeter by Cauchy's formula
        let per = integrate(|t| support(k, &[t.cos(), t.sin()]).unwrap_or(f64::NAN), 0.0, 2.0 * PI, 1e-10, 1e-12)?.value;
        return Ok(area_k + r * per + PI * r * r);
    }
    Err(Error::Unsupported("Minkowski sums need V to be a box, ball or polytope".into()))
}

/// Radius and center for (translated) Euclidean balls.
fn ball_radius(b: &ConvexBody) -> Option<f64> {
    match b.kind() {
        Kind::Ball { radius } => Some(*radius),
        Kind::Translate { body, .. } => ball_radius(body),
        _ => None,
    }
}

fn box_half_widths(b: &ConvexBody) -> Option<Vec<f64>> {
    match b.kind() {
        Kind::Box { half_widths } => Some(half_widths.clone()),
        Kind::Translate { body, .. } => box_half_widths(body),
        _ => None,
    }
}

/// `Vol_n(K + W)` for the supported kinds: intervals, planar bodies with a
/// polygonal or round summand, aligned boxes and pairs of balls.
pub fn minkowski_sum_volume(k: &ConvexBody, w: &ConvexBody, budget: usize, seed: u64) -> Result<f64> {
    let n = k.dim();
    check_dim(n, w.dim())?;
    let vol_k = || k.exact_volume().map(Ok).unwrap_or_else(|| Ok::<f64, Error>(estimate_volume(k, budget, seed).value));
    if n == 1 {
        let width = |b: &ConvexBody| -> Result<f64> { Ok(support(b, &[1.0])? + support(b, &[-1.0])?) };
        return Ok(width(k)? + width(w)?);
    }
    if let (Some(a), Some(b)) = (box_half_widths(k), box_half_widths(w)) {
        return Ok(a.iter().zip(&b).map(|(x, y)| 2.0 * (x + y)).product());
    }
    if let (Some(a), Some(b)) = (ball_radius(k), ball_radius(w)) {
        return Ok(unit_ball_volume(n) * (a + b).powi(n as i32));
    }
    if n == 2 {
        return planar_minkowski_area(k, w, vol_k()?);
    }
    Err(Error::Unsupported(format!("Minkowski sum volume in dimension {n} needs boxes or balls")))
}

/// Barycenter of a measure: exact for symmetric measures and for uniform
/// measures on intervals and polygons, sampled otherwise.
pub fn measure_barycenter(measure: &MeasureModel, budget: usize, seed: u64) -> Result<(Vec<f64>, bool)> {
    let n = measure.dim();
    if measure.is_symmetric() {
        return Ok((vec![0.0; n], true));
    }
    if let MeasureKind::UniformOn(b) = measure.kind() {
        if n == 1 {
            let (lo, hi) = b.bounding_box();
            return Ok((vec![0.5 * (lo[0] + hi[0])], true));
        }
        if n == 2 {
            if let Some(v) = polygon_ccw(b) {
                let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
                for i in 0..v.len() {
                    let (p, q) = (&v[i], &v[(i + 1) % v.len()]);
                    let cr = p[0] * q[1] - q[0] * p[1];
                    a += cr;
                    cx += (p[0] + q[0]) * cr;
                    cy += (p[1] + q[1]) * cr;
                }
                return Ok((vec![cx / (3.0 * a), cy / (3.0 * a)], true));
            }
        }
    }
    let pts = measure.sample(budget, seed)?;
    Ok((pts.mean(), false))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpingarnRow {
    pub r: f64,
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// `(1/(rⁿ Vol V)) ∫_{K∩(x₀+rV)} φ ≥ 1/Vol(K − rV)` at every grid radius, with
/// `x₀` the barycenter of `φ` and `V` centered at the origin.
pub fn spingarn_check(
    measure: &MeasureModel,
    v: &ConvexBody,
    r_grid: &[f64],
    integration: Integration,
    seed: u64,
) -> Result<VerificationReport> {
    let n = measure.dim();
    check_dim(n, v.dim())?;
    let k = measure.support().ok_or_else(|| Error::pre("density must be supported on a convex body"))?.clone();
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::pre("radii must be positive"));
    }
    let (bv, _) = measure_barycenter(&MeasureModel::uniform(v.clone()), 1 << 18, derive_seed(seed, 1))?;
    let diam = {
        let (lo, hi) = v.bounding_box();
        norm(&linalg::sub(&hi, &lo))
    };
    if norm(&bv) > 1e-2 * diam {
        return Err(Error::pre(format!("V must have its barycenter at the origin, found {bv:?}")));
    }
    let vol_v = v.exact_volume().ok_or_else(|| Error::Unsupported("V needs an exact volume".into()))?;
    let (x0, exact_x0) = measure_barycenter(measure, integration.budget().max(1 << 16), derive_seed(seed, 2))?;
    let neg_v = if v.is_origin_symmetric() { v.clone() } else { v.reflected()? };
    let pts = match integration {
        Integration::MonteCarlo { budget } => Some(measure.sample(budget, derive_seed(seed, 3))?),
        Integration::Grid { .. } => None,
    };
    let mut rows = Vec::new();
    let mut status = Status::Pass;
    for &r in r_grid {
        let dil = v.scaled(r)?.translate(x0.clone())?;
        let mass = match (&pts, integration) {
            (Some(p), _) => {
                let hits = p.iter().filter(|x| dil.contains(x)).count() as u64;
                MCEstimate::proportion(hits, p.len() as u64, seed)
            }
            (None, Integration::Grid { resolution }) => region_measure_grid(measure, |x| dil.contains(x), resolution)?,
            _ => unreachable!(),
        };
        let norm_c = r.powi(n as i32) * vol_v;
        let lhs = mass.scaled(1.0 / norm_c);
        let sum = minkowski_sum_volume(&k, &neg_v.scaled(r)?, 1 << 18, derive_seed(seed, 4))?;
        let rhs = 1.0 / sum;
        let slack = lhs.value + 3.0 * lhs.std_error - rhs;
        if slack < 0.0 {
            status = Status::Fail;
        }
        rows.push(SpingarnRow { r, lhs: lhs.value, lhs_std_error: lhs.std_error, rhs, slack });
    }
    let worst = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let mut report = VerificationReport::new("spingarn", seed);
    report.describe(format!("{} with V = {}", measure.describe(), v.name().unwrap_or("V")));
    report.push(
        CheckRecord::new("spingarn", "barycentric bound (1/(rⁿVol V))∫_{K∩(x₀+rV)}φ ≥ 1/Vol(K − rV)")
            .status(status)
            .quantity(Quantity::exact("min_slack", worst))
            .detail("barycenter", &x0)
            .detail("barycenter_exact", &exact_x0)
            .detail("rows", &rows)
            .tolerance("std_errors", 3.0),
    );
    Ok(report)
}
