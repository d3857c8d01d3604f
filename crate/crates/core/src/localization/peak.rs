//! Peak-point witnesses: a center `x₀` in a flat whose dilates of `V` carry at
//! least `I(r)` of a restricted density.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::ballbody::Density;
use crate::bodies::{ConvexBody, Flat};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::quad::integrate;
use crate::report::{CheckRecord, Quantity, Status};
use crate::rng::stream_rng;
use crate::special::{gaussian_ball_measure, unit_ball_volume};

pub const MODE_STARTS: usize = 8;
pub const ANGLES_2D: usize = 256;
const QUAD_REL: f64 = 1e-12;

/// Density on flat coordinates `ℝ^ℓ` (unnormalized).
pub type FlatDensity = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Radial limit of the dilation body along a unit direction of flat coordinates.
type RadialLimit<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Where the support along `c + sθ` ends (or where the density becomes
/// negligible), searched up to `cap`.
fn ray_edge(h: &FlatDensity, c: &[f64], theta: &[f64], cap: f64) -> f64 {
    let hc = h(c);
    let at = |s: f64| h(&linalg::axpy(c, s, theta));
    let mut last_pos = 0.0;
    let mut s = 1e-3;
    while s < cap {
        let v = at(s);
        if v <= 0.0 {
            let (mut a, mut b) = (last_pos, s);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if at(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return a;
        }
        last_pos = s;
        if v < 1e-18 * hc && s > 1.0 {
            return s;
        }
        s *= 1.25;
    }
    cap
}

/// `∫₀^R ρ^{ℓ−1+extra} h(c + ρθ) dρ` with `R = min(limit, support edge)`.
fn ray_integral(h: &FlatDensity, c: &[f64], theta: &[f64], limit: f64, power: i32, cap: f64) -> Result<(f64, f64)> {
    let edge = ray_edge(h, c, theta, cap);
    let top = limit.min(edge);
    if top <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let g = |r: f64| h(&linalg::axpy(c, r, theta)) * r.powi(power);
    let mut a = 0.0;
    let mut val = 0.0;
    let mut err = 0.0;
    for b in [0.5, 1.0, 2.0, 4.0, 8.0].into_iter().filter(|v| *v < top).chain(std::iter::once(top)) {
        let q = integrate(g, a, b, QUAD_REL, 0.0)?;
        val += q.value;
        err += q.error;
        a = b;
    }
    Ok((val, err))
}

/// Unit directions with angular weights for `ℓ ∈ {1, 2}`.
fn angular_rule(ell: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match ell {
        1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
        2 => Ok((0..ANGLES_2D)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / ANGLES_2D as f64;
                (vec![a.cos(), a.sin()], 2.0 * PI / ANGLES_2D as f64)
            })
            .collect()),
        _ => Err(Error::Unsupported(format!("peak quadrature supports ℓ ≤ 2, got {ell}"))),
    }
}

/// `∫_{c + r·V} h` in polar coordinates around `c`, with `V` given by its radial
/// function (`None` for the whole space). Returns value and error estimate.
fn polar_mass(h: &FlatDensity, ell: usize, c: &[f64], r: Option<f64>, rho: RadialLimit, cap: f64) -> Result<(f64, f64)> {
    let mut val = 0.0;
    let mut err = 0.0;
    for (theta, w) in angular_rule(ell)? {
        let limit = r.map_or(f64::INFINITY, |r| r * rho(&theta));
        let (v, e) = ray_integral(h, c, &theta, limit, ell as i32 - 1, cap)?;
        val += w * v;
        err += w * e;
    }
    Ok((val, err))
}

/// `∫ y h(y) dy / ∫ h`, by polar quadrature around a point of positive density.
fn polar_barycenter(h: &FlatDensity, ell: usize, c: &[f64], cap: f64) -> Result<Vec<f64>> {
    let mut mass = 0.0;
    let mut first = vec![0.0; ell];
    for (theta, w) in angular_rule(ell)? {
        let (m0, _) = ray_integral(h, c, &theta, f64::INFINITY, ell as i32 - 1, cap)?;
        let (m1, _) = ray_integral(h, c, &theta, f64::INFINITY, ell as i32, cap)?;
        mass += w * m0;
        first = linalg::axpy(&first, w * m1, &theta);
    }
    if !(mass > 0.0) {
        return Err(Error::Numeric("restricted density has no mass".into()));
    }
    Ok(linalg::axpy(c, 1.0 / mass, &first))
}

/// Maximizer of `h` by multistart compass search on `log h`. Returns `None` when
/// no start or grid probe has positive density.
pub fn mode_search(h: &FlatDensity, ell: usize, search_radius: f64, seed: u64) -> Option<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; ell]];
    for _ in 1..MODE_STARTS {
        starts.push((0..ell).map(|_| search_radius * (2.0 * rng.random::<f64>() - 1.0)).collect());
    }
    starts.retain(|s| h(s) > 0.0);
    if starts.is_empty() {
        // coarse grid probe for a point of the support
        let m: i64 = if ell == 1 { 400 } else { 60 };
        let step = search_radius / m as f64;
        let mut idx = vec![-m; ell];
        'outer: loop {
            let p: Vec<f64> = idx.iter().map(|i| *i as f64 * step).collect();
            if h(&p) > 0.0 {
                starts.push(p);
                break;
            }
            for j in 0..ell {
                idx[j] += 1;
                if idx[j] <= m {
                    continue 'outer;
                }
                idx[j] = -m;
            }
            break;
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in starts {
        let mut x = s;
        let mut fx = h(&x).ln();
        let mut step = search_radius.max(1.0) / 4.0;
        while step > 1e-13 {
            let mut moved = false;
            for j in 0..ell {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[j] += sign * step;
                    let fy = h(&y).ln();
                    if fy > fx {
                        x = y;
                        fx = fy;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|b| fx > b.0) {
            best = Some((fx, x));
        }
    }
    best.map(|b| b.1)
}

/// One row of a peak certificate.
#[derive(Clone, Debug, Serialize)]
pub struct PeakRow {
    pub r: f64,
    pub achieved: f64,
    pub quad_error: f64,
    pub profile: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeakCertificate {
    pub flat_point: Vec<f64>,
    pub flat_basis: Vec<Vec<f64>>,
    pub multiplier: String,
    /// Witness in flat coordinates and in the ambient space.
    pub witness: Vec<f64>,
    pub witness_ambient: Vec<f64>,
    /// `mode` or `barycenter`.
    pub witness_rule: String,
    pub rows: Vec<PeakRow>,
    pub tolerance: f64,
    pub status: Status,
    pub skipped: Option<String>,
}

impl PeakCertificate {
    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn to_check(&self, name: &str) -> CheckRecord {
        let mut rec = CheckRecord::new(name, "peak property: ν(x₀ + rV) ≥ I(r)")
            .status(self.status)
            .quantity(Quantity::exact("min_margin", if self.rows.is_empty() { 0.0 } else { self.min_margin() }))
            .tolerance("absolute", self.tolerance)
            .detail("witness", &self.witness_ambient)
            .detail("witness_rule", &self.witness_rule)
            .detail("multiplier", &self.multiplier)
            .detail("rows", &self.rows);
        if let Some(s) = &self.skipped {
            rec = rec.note(s.clone());
        }
        rec
    }
}

/// Profile `r ↦ I(r)`.
pub type Profile<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

struct Restricted<'a> {
    h: FlatDensity,
    ell: usize,
    rho: RadialLimit<'a>,
    cap: f64,
}

impl Restricted<'_> {
    fn rows_at(&self, x0: &[f64], total: f64, r_grid: &[f64], profile: Profile) -> Result<Vec<PeakRow>> {
        r_grid
            .iter()
            .map(|&r| {
                let (m, e) = polar_mass(&self.h, self.ell, x0, Some(r), self.rho, self.cap)?;
                let achieved = m / total;
                let profile = profile(r);
                Ok(PeakRow { r, achieved, quad_error: e / total, profile, margin: achieved - profile })
            })
            .collect()
    }

    /// Tries the mode and the barycenter, keeping the better witness.
    fn certify(&self, r_grid: &[f64], profile: Profile, search_radius: f64, seed: u64) -> Result<Option<(Vec<f64>, String, Vec<PeakRow>)>> {
        let Some(mode) = mode_search(&self.h, self.ell, search_radius, seed) else {
            return Ok(None);
        };
        let (total, _) = polar_mass(&self.h, self.ell, &mode, None, self.rho, self.cap)?;
        if !(total > 0.0) {
            return Ok(None);
        }
        let mut cands = vec![(mode.clone(), "mode".to_string())];
        if let Ok(b) = polar_barycenter(&self.h, self.ell, &mode, self.cap) {
            if (self.h)(&b) > 0.0 {
                cands.push((b, "barycenter".into()));
            }
        }
        let mut best: Option<(Vec<f64>, String, Vec<PeakRow>)> = None;
        for (x, rule) in cands {
            let rows = self.rows_at(&x, total, r_grid, profile)?;
            let worst = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| worst > b.2.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)) {
                best = Some((x, rule, rows));
            }
        }
        Ok(best)
    }
}

fn unit_ball_radius(_: &[f64]) -> f64 {
    1.0
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::pre("radii must be positive and finite"));
    }
    Ok(())
}

/// Witness `x₀` (the mode) with `ν(x₀ + rB^ℓ) ≥ γ_ℓ(rB^ℓ)` for a 1-log-concave `ν`
/// on `ℝ^ℓ`, certified by quadrature to `tol`.
pub fn peak_point(nu: &Density, r_grid: &[f64], tol: f64, seed: u64) -> Result<PeakCertificate> {
    check_grid(r_grid)?;
    let ell = nu.dim();
    let d = nu.clone();
    let h: FlatDensity = Arc::new(move |y: &[f64]| d.eval(y));
    let rest = Restricted { h: h.clone(), ell, rho: &unit_ball_radius, cap: 64.0 };
    let mode = mode_search(&h, ell, 8.0, seed).ok_or_else(|| Error::Numeric("mode search found no point of positive density".into()))?;
    let (total, _) = polar_mass(&h, ell, &mode, None, &unit_ball_radius, 64.0)?;
    let rows = rest.rows_at(&mode, total, r_grid, &|r| gaussian_ball_measure(ell, r))?;
    let ok = rows.iter().all(|r| r.margin >= -tol);
    Ok(PeakCertificate {
        flat_point: vec![0.0; ell],
        flat_basis: Vec::new(),
        multiplier: nu.name().to_string(),
        witness: mode.clone(),
        witness_ambient: mode,
        witness_rule: "mode".into(),
        rows,
        tolerance: tol,
        status: Status::from_bool(ok),
        skipped: None,
    })
}

/// Midpoint log-concavity probe on `probes` random pairs in `[−R, R]^ℓ`.
pub fn probe_log_concave(psi: &Density, radius: f64, probes: usize, seed: u64) -> bool {
    let mut rng = stream_rng(seed, 3);
    let ell = psi.dim();
    for _ in 0..probes {
        let a: Vec<f64> = (0..ell).map(|_| radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let b: Vec<f64> = (0..ell).map(|_| radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let (pa, pb) = (psi.eval(&a), psi.eval(&b));
        if pa <= 0.0 || pb <= 0.0 {
            continue;
        }
        let pm = psi.eval(&linalg::scale(&linalg::add(&a, &b), 0.5));
        if pm.ln() < 0.5 * (pa.ln() + pb.ln()) - 1e-9 {
            return false;
        }
    }
    true
}

/// Finite probe of the `(V, ℓ, I)`-peak property of `φ`: one certificate per
/// (flat, multiplier) pair. Multipliers are densities on flat coordinates.
#[allow(clippy::too_many_arguments)]
pub fn peak_property_check(
    phi: &Density,
    v: &ConvexBody,
    flats: &[Flat],
    multipliers: &[Density],
    profile: Profile,
    r_grid: &[f64],
    tol: f64,
    search_radius: f64,
    seed: u64,
) -> Result<Vec<PeakCertificate>> {
    check_grid(r_grid)?;
    let n = phi.dim();
    check_dim(n, v.dim())?;
    if !v.origin_is_interior() {
        return Err(Error::pre("V must contain the origin in its interior"));
    }
    let mut out = Vec::new();
    for (fi, flat) in flats.iter().enumerate() {
        check_dim(n, flat.ambient_dim())?;
        let ell = flat.dim();
        for (mi, psi) in multipliers.iter().enumerate() {
            check_dim(ell, psi.dim())?;
            if !probe_log_concave(psi, search_radius, 500, seed ^ (mi as u64)) {
                return Err(Error::pre(format!("multiplier {} is not log-concave", psi.name())));
            }
            let (fl, ph, ps) = (flat.clone(), phi.clone(), psi.clone());
            let h: FlatDensity = Arc::new(move |y: &[f64]| {
                let p = ps.eval(y);
                if p <= 0.0 { 0.0 } else { ph.eval(&fl.at(y)) * p }
            });
            let basis = flat.basis().clone();
            let vv = v.clone();
            let origin = vec![0.0; n];
            let rho = move |theta: &[f64]| {
                let d: Vec<f64> = (0..n).map(|i| (0..theta.len()).map(|j| basis[(i, j)] * theta[j]).sum()).collect();
                vv.ray_exit(&origin, &d)
            };
            let rest = Restricted { h, ell, rho: &rho, cap: 4.0 * search_radius };
            let base = PeakCertificate {
                flat_point: flat.point().to_vec(),
                flat_basis: (0..ell).map(|j| flat.basis().column(j).iter().copied().collect()).collect(),
                multiplier: psi.name().to_string(),
                witness: Vec::new(),
                witness_ambient: Vec::new(),
                witness_rule: String::new(),
                rows: Vec::new(),
                tolerance: tol,
                status: Status::Skipped,
                skipped: None,
            };
            match rest.certify(r_grid, profile, search_radius, seed ^ ((fi as u64) << 16) ^ mi as u64)? {
                None => out.push(PeakCertificate {
                    skipped: Some(format!("restricted density vanishes on flat {fi}")),
                    ..base
                }),
                Some((x0, rule, rows)) => {
                    let ok = rows.iter().all(|r| r.margin >= -tol);
                    out.push(PeakCertificate {
                        witness_ambient: flat.at(&x0),
                        witness: x0,
                        witness_rule: rule,
                        rows,
                        status: Status::from_bool(ok),
                        ..base
                    })
                }
            }
        }
    }
    Ok(out)
}

/// `I(r) = min{1, β_ℓ r^ℓ / (M + C r)}` for `r ≤ 1` and `I(1)` beyond, with
/// `C = β_ℓ((R+1)^ℓ − R^ℓ)` bounding `Vol(K + rB) − Vol(K)` over `K ⊆ RB^ℓ`.
pub fn section_profile(ell: usize, max_section: f64, bounding_radius: f64) -> impl Fn(f64) -> f64 + Sync {
    let b = unit_ball_volume(ell);
    let c = b * ((bounding_radius + 1.0).powi(ell as i32) - bounding_radius.powi(ell as i32));
    move |r: f64| {
        let r = r.min(1.0);
        (b * r.powi(ell as i32) / (max_section + c * r)).min(1.0)
    }
}
