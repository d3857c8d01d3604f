//! Affine normalizations: isotropic position and the Gaussian M-position.
//!
//! The Gaussian M-position of a volume-one symmetric body `K` is the SPD map
//! `T_K` of unit determinant maximizing `γ_n(T K)`. Writing `M = TᵀT`,
//! `γ_n(TK) = (2π)^{−n/2} ∫_K e^{−xᵀMx/2} dx`, so with a fixed uniform sample of
//! `K` the objective is a smooth deterministic function of `M`. It is maximized
//! by Riemannian gradient ascent on the unimodular SPD matrices with the
//! affine-invariant metric, `M ← M^{1/2} exp(η H₀) M^{1/2}`, where `H₀` is the
//! trace-free part of `M^{1/2} ∇F M^{1/2}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{self, dot};
use crate::measures::{barycenter_covariance_of, estimate_volume, MCEstimate, MeasureModel, Points};
use crate::report::{matrix_rows, CheckRecord, Status};
use crate::rng::derive_seed;

/// Symmetric positive-definite matrix with unit determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct UnimodularSPD {
    matrix: DMatrix<f64>,
}

impl UnimodularSPD {
    pub fn identity(n: usize) -> Self {
        UnimodularSPD { matrix: DMatrix::identity(n, n) }
    }

    /// Validates symmetry (then symmetrizes exactly), definiteness and `|det − 1| ≤ 1e−9`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::pre("matrix must be square"));
        }
        let m = linalg::symmetrize(&m);
        if m.clone().cholesky().is_none() {
            return Err(Error::pre("matrix is not positive definite"));
        }
        if (m.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::pre(format!("determinant {} is not 1", m.determinant())));
        }
        Ok(UnimodularSPD { matrix: m })
    }

    /// `exp(S)` for symmetric `S`, after removing the trace of `S`.
    pub fn from_log(s: &DMatrix<f64>) -> Self {
        let n = s.nrows();
        let s = linalg::symmetrize(s);
        let s0 = &s - DMatrix::identity(n, n) * (s.trace() / n as f64);
        UnimodularSPD { matrix: linalg::sym_exp(&s0) }
    }

    /// SPD polar factor of an invertible matrix, rescaled to unit determinant.
    pub fn polar_of(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let d = m.determinant().abs();
        if !(d > 0.0) {
            return Err(Error::pre("matrix is singular"));
        }
        let p = linalg::polar_spd(m) / d.powf(1.0 / n as f64);
        Ok(UnimodularSPD { matrix: p })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

impl Serialize for UnimodularSPD {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_rows(&self.matrix).serialize(s)
    }
}

/// Image `A(x − b)` of a body with scalar covariance.
#[derive(Clone, Debug)]
pub struct IsotropicResult {
    pub barycenter: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub image: ConvexBody,
    pub covariance: DMatrix<f64>,
}

impl IsotropicResult {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, &linalg::sub(x, &self.barycenter))
    }
}

/// Isotropic position `A(x) = s·C^{−1/2}(x − b)` scaled so the image has
/// volume `target_volume` (1 when `None`).
pub fn isotropic_transform(body: &ConvexBody, target_volume: Option<f64>, budget: usize, seed: u64) -> Result<IsotropicResult> {
    let n = body.dim();
    let pts = MeasureModel::uniform(body.clone()).sample(budget, seed)?;
    let (b, c) = barycenter_covariance_of(&pts);
    if c.clone().cholesky().is_none() {
        return Err(Error::pre("covariance estimate is not positive definite; raise the budget"));
    }
    let vol = estimate_volume(body, budget, derive_seed(seed, 1)).value;
    let target = target_volume.unwrap_or(1.0);
    // det(s C^{-1/2}) Vol(K) = target
    let s = (target * c.determinant().sqrt() / vol).powf(1.0 / n as f64);
    let a = linalg::sym_inv_sqrt(&c) * s;
    let image = body.clone().translate(linalg::scale(&b, -1.0))?.linear_image(a.clone())?;
    Ok(IsotropicResult { barycenter: b, matrix: a, image, covariance: c })
}

#[derive(Clone, Debug)]
pub struct MPositionOptions {
    pub budget: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop when the Frobenius norm of the trace-free Riemannian gradient, relative
    /// to the objective, falls below this.
    pub grad_tol: f64,
    /// Orthogonal maps preserving the body. The sample is replaced by its orbit,
    /// which makes the empirical objective exactly invariant under them when the
    /// maps form a group.
    pub symmetries: Vec<DMatrix<f64>>,
}

impl Default for MPositionOptions {
    fn default() -> Self {
        MPositionOptions { budget: 200_000, seed: 0, max_iters: 500, grad_tol: 1e-10, symmetries: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PositionReport {
    /// `γ_n(T_K(αK₀))` estimated at the returned transform.
    pub objective: MCEstimate,
    pub transform: UnimodularSPD,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
    pub gradient_norm: f64,
    /// Monte-Carlo standard error of the gradient norm at the optimum.
    pub gradient_noise: f64,
    pub barycenter: Vec<f64>,
    /// `α` with `α^{−n} = Vol_n(K₀)`.
    pub alpha: f64,
    pub seed: u64,
    pub samples: u64,
}

impl PositionReport {
    pub fn to_check(&self, name: &str) -> CheckRecord {
        CheckRecord::new(name, "gaussian M-position")
            .status(if self.converged { Status::Pass } else { Status::Indeterminate })
            .estimate("objective", &self.objective)
            .exact("gradient_norm", self.gradient_norm)
            .exact("gradient_noise", self.gradient_noise)
            .exact("alpha", self.alpha)
            .exact("iterations", self.iterations as f64)
            .detail("transform", matrix_rows(self.transform.matrix()))
            .detail("barycenter", &self.barycenter)
            .detail("objective_trace", &self.trace)
    }
}

/// Empirical objective `M ↦ (2π)^{−n/2} mean_i e^{−x_iᵀMx_i/2}` on a fixed sample.
#[derive(Clone, Debug)]
pub struct GaussianObjective {
    points: Points,
    volume: f64,
    seed: u64,
}

impl GaussianObjective {
    pub fn new(points: Points, volume: f64, seed: u64) -> Self {
        GaussianObjective { points, volume, seed }
    }

    fn norm_const(&self) -> f64 {
        (2.0 * PI).powf(-(self.points.dim() as f64) / 2.0) * self.volume
    }

    fn weights(&self, m: &DMatrix<f64>) -> Vec<f64> {
        use rayon::prelude::*;
        self.points.par_iter().map(|x| (-0.5 * dot(x, &linalg::mat_vec(m, x))).exp()).collect()
    }

    /// Estimate of `γ_n(T K)` for `M = TᵀT`.
    pub fn value(&self, m: &DMatrix<f64>) -> MCEstimate {
        MCEstimate::mean_of(&self.weights(m), self.seed).scaled(self.norm_const())
    }

    /// `γ_n(T K)` for a transform `T`.
    pub fn at_transform(&self, t: &DMatrix<f64>) -> MCEstimate {
        self.value(&(t.transpose() * t))
    }

    /// Euclidean gradient in `M` and the per-sample contributions' standard error
    /// (Frobenius norm).
    fn gradient(&self, m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
        let n = self.points.dim();
        let w = self.weights(m);
        let c = -0.5 * self.norm_const();
        let count = self.points.len() as f64;
        let mut g = DMatrix::zeros(n, n);
        let mut g2 = DMatrix::zeros(n, n);
        for (x, wi) in self.points.iter().zip(&w) {
            for i in 0..n {
                for j in 0..n {
                    let v = wi * x[i] * x[j];
                    g[(i, j)] += v;
                    g2[(i, j)] += v * v;
                }
            }
        }
        let mean = &g / count;
        let var = (&g2 / count) - mean.component_mul(&mean);
        let se = (var.iter().map(|v| v.max(0.0)).sum::<f64>() / count).sqrt() * c.abs();
        (mean * c, se)
    }
}

/// Gaussian M-position of a general body: recentre at the barycenter, take
/// `K₀ = (K − b) ∩ (b − K)`, rescale to volume one and maximize `γ_n(T·αK₀)`.
pub fn gaussian_m_position(body: &ConvexBody, opts: &MPositionOptions) -> Result<PositionReport> {
    let (objective, barycenter, alpha) = prepare_objective(body, opts)?;
    let n = body.dim();
    let mut m = DMatrix::identity(n, n);
    let mut f = objective.value(&m).value;
    let mut trace = vec![f];
    let mut eta = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    let mut noise = 0.0;
    while iterations < opts.max_iters {
        let (g, se) = objective.gradient(&m);
        let half = linalg::sym_sqrt(&m);
        let h = linalg::symmetrize(&(&half * &g * &half));
        let h0 = &h - DMatrix::identity(n, n) * (h.trace() / n as f64);
        gnorm = h0.norm();
        noise = se;
        if gnorm <= opts.grad_tol * f {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = linalg::symmetrize(&(&half * linalg::sym_exp(&(&h0 * eta)) * &half));
            let fc = objective.value(&cand).value;
            if fc > f + 1e-4 * eta * gnorm * gnorm {
                m = cand;
                f = fc;
                accepted = true;
                eta *= 1.5;
                break;
            }
            eta *= 0.5;
        }
        trace.push(f);
        if !accepted {
            // no ascent possible at floating-point resolution
            converged = gnorm <= 1e-6 * f;
            break;
        }
    }
    // renormalize det to 1 against drift before taking the square root
    let det = m.determinant();
    let m = m / det.powf(1.0 / n as f64);
    let transform = UnimodularSPD { matrix: linalg::sym_sqrt(&m) };
    let value = objective.value(&m);
    Ok(PositionReport {
        objective: value,
        transform,
        iterations,
        converged,
        trace,
        gradient_norm: gnorm,
        gradient_noise: noise,
        barycenter,
        alpha,
        seed: opts.seed,
        samples: objective.points.len() as u64,
    })
}

/// Sample of `αK₀` (orbit-augmented) wrapped as an objective, plus `b` and `α`.
pub fn prepare_objective(body: &ConvexBody, opts: &MPositionOptions) -> Result<(GaussianObjective, Vec<f64>, f64)> {
    let n = body.dim();
    if opts.budget < 10 {
        return Err(Error::pre("budget too small"));
    }
    let b = match body.center_of_symmetry() {
        Some(c) => c,
        None => MeasureModel::uniform(body.clone()).sample(opts.budget, derive_seed(opts.seed, 1))?.mean(),
    };
    let shifted = body.clone().translate(linalg::scale(&b, -1.0))?;
    let k0 = if body.center_of_symmetry().is_some() {
        shifted
    } else {
        ConvexBody::intersection(vec![shifted.clone(), shifted.reflected()?])?
    };
    let vol = estimate_volume(&k0, opts.budget, derive_seed(opts.seed, 2));
    let alpha = vol.value.powf(-1.0 / n as f64);
    let k1 = k0.scaled(alpha)?;
    let base = MeasureModel::uniform(k1.clone()).sample(opts.budget, derive_seed(opts.seed, 3))?;
    let points = if opts.symmetries.is_empty() {
        base
    } else {
        for q in &opts.symmetries {
            if q.nrows() != n || q.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
            }
        }
        let id = DMatrix::identity(n, n);
        let maps: Vec<&DMatrix<f64>> = opts.symmetries.iter().filter(|q| **q != id).collect();
        let mut data = Vec::with_capacity(base.len() * n * (maps.len() + 1));
        for x in base.iter() {
            data.extend_from_slice(x);
            for q in &maps {
                data.extend(linalg::mat_vec(q, x));
            }
        }
        Points::new(n, data)
    };
    // volume of αK₀ is one up to the error of the volume estimate
    Ok((GaussianObjective::new(points, 1.0, opts.seed), b, alpha))
}

/// All signed permutation matrices of size `n` (the symmetry group of the cube).
pub fn hyperoctahedral_group(n: usize) -> Vec<DMatrix<f64>> {
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for k in 0..n {
        let mut next = Vec::new();
        for p in &perms {
            for pos in 0..=k {
                let mut q = p.clone();
                q.insert(pos, k);
                next.push(q);
            }
        }
        perms = next;
    }
    let mut out = Vec::new();
    for p in &perms {
        for signs in 0..(1u32 << n) {
            let m = DMatrix::from_fn(n, n, |r, c| {
                if p[r] == c {
                    if signs >> r & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            });
            out.push(m);
        }
    }
    out
}

/// Diagonal sign flips `diag(±1, …, ±1)`.
pub fn sign_flips(n: usize) -> Vec<DMatrix<f64>> {
    (0..(1u32 << n))
        .map(|s| DMatrix::from_fn(n, n, |r, c| if r == c { if s >> r & 1 == 1 { -1.0 } else { 1.0 } } else { 0.0 }))
        .collect()
}

/// Largest `‖T Q − Q T‖` over isometries `Q` of the body, after checking on a
/// uniform sample that each `Q` maps the body into itself (failure rate < 1e−3).
pub fn verify_symmetry_commutation(
    body: &ConvexBody,
    isometries: &[DMatrix<f64>],
    result: &UnimodularSPD,
    tol: f64,
    seed: u64,
) -> Result<CheckRecord> {
    let n = body.dim();
    let center = body.center_of_symmetry().unwrap_or_else(|| vec![0.0; n]);
    let pts = MeasureModel::uniform(body.clone()).sample(4000, seed)?;
    let t = result.matrix();
    let mut worst = 0.0f64;
    for (k, q) in isometries.iter().enumerate() {
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
        }
        if (q.transpose() * q - DMatrix::identity(n, n)).amax() > 1e-9 {
            return Err(Error::pre(format!("map {k} is not orthogonal")));
        }
        // isometries act about the center of symmetry
        let misses = pts
            .iter()
            .filter(|x| {
                let y = linalg::add(&linalg::mat_vec(q, &linalg::sub(x, &center)), &center);
                !body.contains(&y)
            })
            .count();
        if misses as f64 / pts.len() as f64 >= 1e-3 {
            return Err(Error::pre(format!("map {k} does not preserve the body ({misses} of {} samples leave it)", pts.len())));
        }
        worst = worst.max(linalg::op_norm(&(t * q - q * t)));
    }
    Ok(CheckRecord::new("symmetry_commutation", "symmetries commute with the M-position")
        .status(Status::from_bool(worst <= tol))
        .exact("max_commutator", worst)
        .exact("isometries", isometries.len() as f64)
        .tolerance("max_commutator", tol))
}

/// `L_μ = (sup φ)^{1/n} det(Cov μ)^{1/(2n)}`, error from 20 batch means.
pub fn isotropic_constant(measure: &MeasureModel, budget: usize, seed: u64) -> Result<MCEstimate> {
    let n = measure.dim() as f64;
    let sup = measure.density_sup()?;
    let pts = measure.sample(budget, seed)?;
    let l_of = |p: &Points| {
        let (_, c) = barycenter_covariance_of(p);
        sup.powf(1.0 / n) * c.determinant().max(0.0).powf(1.0 / (2.0 * n))
    };
    let value = l_of(&pts);
    const GROUPS: usize = 20;
    let per = pts.len() / GROUPS;
    let se = if per >= 2 {
        let vals: Vec<f64> = (0..GROUPS)
            .map(|g| {
                let rows: Vec<f64> = (g * per..(g + 1) * per).flat_map(|i| pts.get(i).to_vec()).collect();
                l_of(&Points::new(pts.dim(), rows))
            })
            .collect();
        // spread of batch estimates, scaled to the full sample
        MCEstimate::mean_of(&vals, seed).std_error
    } else {
        f64::NAN
    };
    Ok(MCEstimate { value, std_error: se, samples: pts.len() as u64, seed })
}
