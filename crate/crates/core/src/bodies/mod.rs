//! Oracle-based convex bodies.
//!
//! Every downstream estimator talks to a body only through [`ConvexBody::contains`],
//! [`ConvexBody::ray_exit`], [`ConvexBody::support`], the gauge and the bounding
//! box, so new kinds plug in without touching the estimators.

mod flat;
pub mod io;
pub mod john;
pub mod pancake;
pub mod polytope;

use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, norm};
use crate::special::unit_ball_volume;

pub use flat::Flat;
pub use john::{john_ellipsoid, EllipsoidResult};
pub use pancake::{pancake_check, PancakeResult, PancakeVerdict};
pub use polytope::HPolytope;

/// A star body given by its radial function `ρ(θ)`, `K = {x : |x| ≤ ρ(x/|x|)}`.
pub trait RadialFunction: Send + Sync + Debug {
    fn dim(&self) -> usize;
    /// `ρ(θ)` for a unit vector `θ`.
    fn radius(&self, theta: &[f64]) -> f64;
    /// Tabulated `(θ, ρ(θ))` pairs, exported to body files.
    fn table(&self) -> Vec<(Vec<f64>, f64)>;
    /// A radius `R` with `K ⊆ R·Bⁿ`.
    fn bounding_radius(&self) -> f64;
    fn is_symmetric(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub enum Kind {
    /// Origin-centered ball.
    Ball { radius: f64 },
    /// Origin-centered box `∏ [−h_i, h_i]`.
    Box { half_widths: Vec<f64> },
    HPolytope(HPolytope),
    /// `{x : (x − c)ᵀ Q (x − c) ≤ 1}`.
    Ellipsoid { q: DMatrix<f64>, center: Vec<f64>, q_inv: DMatrix<f64> },
    Intersection { parts: Vec<ConvexBody>, poly: OnceLock<Option<HPolytope>> },
    /// `A K`.
    LinearImage { body: Box<ConvexBody>, a: DMatrix<f64>, a_inv: DMatrix<f64> },
    /// `K + v`.
    Translate { body: Box<ConvexBody>, v: Vec<f64> },
    Radial(Arc<dyn RadialFunction>),
}

#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    kind: Kind,
    bounding_radius: f64,
    name: Option<String>,
}

impl ConvexBody {
    fn make(dim: usize, kind: Kind, bounding_radius: f64) -> Self {
        ConvexBody { dim, kind, bounding_radius, name: None }
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::pre("ball needs dim ≥ 1 and a positive radius"));
        }
        Ok(Self::make(dim, Kind::Ball { radius }, radius))
    }

    /// Origin-centered box with the given half-widths.
    pub fn cuboid(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() || half_widths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::pre("box needs positive half-widths"));
        }
        let r = norm(&half_widths);
        Ok(Self::make(half_widths.len(), Kind::Box { half_widths }, r))
    }

    /// Axis-parallel box `∏ [lo_i, hi_i]`.
    pub fn aligned_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        Self::cuboid(half)?.translate(mid)
    }

    /// The unit cube `[0,1]ⁿ`.
    pub fn cube(dim: usize) -> Result<Self> {
        Self::cuboid(vec![0.5; dim])?.translate(vec![0.5; dim])
    }

    /// `conv{0, e_1, …, e_n}`.
    pub fn simplex(dim: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for i in 0..dim {
            let mut r = vec![0.0; dim];
            r[i] = -1.0;
            rows.push(r);
        }
        rows.push(vec![1.0; dim]);
        let mut offsets = vec![0.0; dim];
        offsets.push(1.0);
        Self::h_polytope(HPolytope::from_rows(&rows, offsets)?)
    }

    pub fn h_polytope(p: HPolytope) -> Result<Self> {
        p.validate()?;
        let r = p.vertices()?.iter().map(|v| norm(v)).fold(0.0, f64::max);
        Ok(Self::make(p.dim(), Kind::HPolytope(p), r))
    }

    pub fn ellipsoid(q: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
        }
        if !linalg::is_spd(&q) {
            return Err(Error::pre("ellipsoid matrix must be symmetric positive definite"));
        }
        let q_inv = q.clone().try_inverse().ok_or_else(|| Error::pre("singular ellipsoid matrix"))?;
        let r = norm(&center) + linalg::sym_eigenvalues_desc(&q_inv)[0].sqrt();
        Ok(Self::make(n, Kind::Ellipsoid { q, center, q_inv }, r))
    }

    pub fn intersection(parts: Vec<ConvexBody>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::pre("intersection of zero bodies"));
        };
        let n = first.dim;
        for p in &parts {
            check_dim(n, p.dim)?;
        }
        let r = parts.iter().map(|p| p.bounding_radius).fold(f64::INFINITY, f64::min);
        let body = Self::make(n, Kind::Intersection { parts, poly: OnceLock::new() }, r);
        if body.find_interior_point().is_none() {
            return Err(Error::EmptyInterior);
        }
        Ok(body)
    }

    pub fn linear_image(self, a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: a.nrows() });
        }
        let a_inv = a.clone().try_inverse().ok_or_else(|| Error::pre("linear map is not invertible"))?;
        let r = linalg::op_norm(&a) * self.bounding_radius;
        Ok(Self::make(self.dim, Kind::LinearImage { body: Box::new(self), a, a_inv }, r))
    }

    pub fn translate(self, v: Vec<f64>) -> Result<Self> {
        check_dim(self.dim, v.len())?;
        let r = self.bounding_radius + norm(&v);
        Ok(Self::make(self.dim, Kind::Translate { body: Box::new(self), v }, r))
    }

    pub fn radial(f: Arc<dyn RadialFunction>) -> Result<Self> {
        let r = f.bounding_radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::pre("radial body needs a positive bounding radius"));
        }
        Ok(Self::make(f.dim(), Kind::Radial(f), r))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// `λK`, keeping the representation when it has a scale parameter.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::pre("scale factor must be positive"));
        }
        let out = match &self.kind {
            Kind::Ball { radius } => Self::ball(self.dim, radius * s)?,
            Kind::Box { half_widths } => Self::cuboid(linalg::scale(half_widths, s))?,
            Kind::Translate { body, v } => body.scaled(s)?.translate(linalg::scale(v, s))?,
            _ => self.clone().linear_image(DMatrix::identity(self.dim, self.dim) * s)?,
        };
        Ok(out)
    }

    pub fn membership(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.contains(x))
    }

    /// Exact membership test (no tolerance band).
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            Kind::Ball { radius } => dot(x, x) <= radius * radius,
            Kind::Box { half_widths } => x.iter().zip(half_widths).all(|(v, h)| v.abs() <= *h),
            Kind::HPolytope(p) => p.contains(x),
            Kind::Ellipsoid { q, center, .. } => {
                let d = linalg::sub(x, center);
                dot(&d, &linalg::mat_vec(q, &d)) <= 1.0
            }
            Kind::Intersection { parts, .. } => parts.iter().all(|p| p.contains(x)),
            Kind::LinearImage { body, a_inv, .. } => body.contains(&linalg::mat_vec(a_inv, x)),
            Kind::Translate { body, v } => body.contains(&linalg::sub(x, v)),
            Kind::Radial(f) => {
                let r = norm(x);
                r == 0.0 || r <= f.radius(&linalg::scale(x, 1.0 / r))
            }
        }
    }

    /// Largest `s ≥ 0` with `c + s·d ∈ K`, for `c ∈ K` and `d ≠ 0`.
    pub fn ray_exit(&self, c: &[f64], d: &[f64]) -> f64 {
        match &self.kind {
            Kind::Ball { radius } => {
                let a = dot(d, d);
                let b = dot(c, d);
                let cc = dot(c, c) - radius * radius;
                let disc = (b * b - a * cc).max(0.0);
                ((-b + disc.sqrt()) / a).max(0.0)
            }
            Kind::Box { half_widths } => {
                let mut s = f64::INFINITY;
                for i in 0..self.dim {
                    if d[i] > 0.0 {
                        s = s.min((half_widths[i] - c[i]) / d[i]);
                    } else if d[i] < 0.0 {
                        s = s.min((-half_widths[i] - c[i]) / d[i]);
                    }
                }
                s.max(0.0)
            }
            Kind::HPolytope(p) => {
                let mut s = f64::INFINITY;
                for i in 0..p.facet_count() {
                    let row = p.row(i);
                    let ad = dot(&row, d);
                    if ad > 0.0 {
                        s = s.min((p.offsets()[i] - dot(&row, c)) / ad);
                    }
                }
                s.max(0.0)
            }
            Kind::Ellipsoid { q, center, .. } => {
                let w = linalg::sub(c, center);
                let qd = linalg::mat_vec(q, d);
                let a = dot(d, &qd);
                let b = dot(&w, &qd);
                let cc = dot(&w, &linalg::mat_vec(q, &w)) - 1.0;
                let disc = (b * b - a * cc).max(0.0);
                ((-b + disc.sqrt()) / a).max(0.0)
            }
            Kind::Intersection { parts, .. } => {
                parts.iter().map(|p| p.ray_exit(c, d)).fold(f64::INFINITY, f64::min)
            }
            Kind::LinearImage { body, a_inv, .. } => {
                body.ray_exit(&linalg::mat_vec(a_inv, c), &linalg::mat_vec(a_inv, d))
            }
            Kind::Translate { body, v } => body.ray_exit(&linalg::sub(c, v), d),
            Kind::Radial(f) => {
                let dn = norm(d);
                if norm(c) == 0.0 {
                    return f.radius(&linalg::scale(d, 1.0 / dn)) / dn;
                }
                self.bisect_exit(c, d)
            }
        }
    }

    fn bisect_exit(&self, c: &[f64], d: &[f64]) -> f64 {
        let dn = norm(d);
        let mut lo = 0.0;
        let mut hi = (2.0 * self.bounding_radius + norm(c)) / dn;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.contains(&linalg::axpy(c, mid, d)) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        lo
    }

    /// True when `0` and `±δe_i` are members, `δ = 1e−9·R`.
    pub fn origin_is_interior(&self) -> bool {
        let delta = 1e-9 * self.bounding_radius;
        let mut x = vec![0.0; self.dim];
        if !self.contains(&x) {
            return false;
        }
        for i in 0..self.dim {
            for s in [delta, -delta] {
                x[i] = s;
                if !self.contains(&x) {
                    return false;
                }
            }
            x[i] = 0.0;
        }
        true
    }

    /// Minkowski functional `‖x‖_K = inf{λ > 0 : x/λ ∈ K}`.
    pub fn minkowski_functional(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        if !self.origin_is_interior() {
            return Err(Error::OriginNotInterior);
        }
        Ok(self.gauge(x))
    }

    /// Gauge without the interior-origin check.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        match &self.kind {
            Kind::Ball { radius } => norm(x) / radius,
            Kind::Box { half_widths } => x.iter().zip(half_widths).map(|(v, h)| v.abs() / h).fold(0.0, f64::max),
            Kind::HPolytope(p) => p.gauge(x),
            Kind::Intersection { parts, .. } => parts.iter().map(|p| p.gauge(x)).fold(0.0, f64::max),
            Kind::LinearImage { body, a_inv, .. } => body.gauge(&linalg::mat_vec(a_inv, x)),
            Kind::Radial(f) => {
                let r = norm(x);
                r / f.radius(&linalg::scale(x, 1.0 / r))
            }
            _ => 1.0 / self.ray_exit(&vec![0.0; self.dim], x),
        }
    }

    /// Support function `h_K(u) = sup_{x∈K} ⟨x, u⟩`.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.dim, u.len())?;
        Ok(match &self.kind {
            Kind::Ball { radius } => radius * norm(u),
            Kind::Box { half_widths } => u.iter().zip(half_widths).map(|(a, h)| a.abs() * h).sum(),
            Kind::HPolytope(p) => p.support(u)?,
            Kind::Ellipsoid { center, q_inv, .. } => dot(center, u) + dot(u, &linalg::mat_vec(q_inv, u)).sqrt(),
            Kind::Intersection { parts, .. } => {
                if let Some(p) = self.polyhedral() {
                    p.support(u)?
                } else {
                    let upper = parts
                        .iter()
                        .map(|p| p.support(u))
                        .collect::<Result<Vec<f64>>>()?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    self.numeric_support(u).min(upper)
                }
            }
            Kind::LinearImage { body, a, .. } => body.support(&linalg::mat_t_vec(a, u))?,
            Kind::Translate { body, v } => body.support(u)? + dot(v, u),
            Kind::Radial(_) => self.numeric_support(u),
        })
    }

    /// Maximize `⟨c + exit(θ)θ, u⟩` over directions by multistart local search.
    fn numeric_support(&self, u: &[f64]) -> f64 {
        let c = self.interior_point();
        let value = |theta: &[f64]| {
            let t = linalg::normalized(theta);
            let s = self.ray_exit(&c, &t);
            dot(&linalg::axpy(&c, s, &t), u)
        };
        let mut rng = crate::rng::stream_rng(0x5u64, 0);
        let mut starts: Vec<Vec<f64>> = vec![u.to_vec()];
        if let Kind::Radial(f) = &self.kind {
            let mut tab = f.table();
            tab.sort_by(|a, b| (dot(&b.0, u) * b.1).total_cmp(&(dot(&a.0, u) * a.1)));
            starts.extend(tab.into_iter().take(4).map(|(t, _)| t));
        }
        for _ in 0..16 {
            starts.push((0..self.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
        }
        let mut best = f64::NEG_INFINITY;
        for s in starts {
            let mut theta = linalg::normalized(&s);
            let mut f = value(&theta);
            let mut step = 0.5;
            while step > 1e-9 {
                let mut improved = false;
                for i in 0..self.dim {
                    for sign in [1.0, -1.0] {
                        let mut cand = theta.clone();
                        cand[i] += sign * step;
                        let cand = linalg::normalized(&cand);
                        let fc = value(&cand);
                        if fc > f {
                            f = fc;
                            theta = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best = best.max(f);
        }
        best
    }

    /// Facet description for polyhedral kinds (boxes, polytopes, their
    /// translates, linear images and intersections).
    pub fn polyhedral(&self) -> Option<HPolytope> {
        match &self.kind {
            Kind::Box { half_widths } => {
                let n = self.dim;
                let mut rows = Vec::with_capacity(2 * n);
                let mut offs = Vec::with_capacity(2 * n);
                for i in 0..n {
                    for s in [1.0, -1.0] {
                        let mut r = vec![0.0; n];
                        r[i] = s;
                        rows.push(r);
                        offs.push(half_widths[i]);
                    }
                }
                HPolytope::from_rows(&rows, offs).ok()
            }
            Kind::HPolytope(p) => Some(p.clone()),
            Kind::Translate { body, v } => body.polyhedral().map(|p| p.translated(v)),
            Kind::LinearImage { body, a_inv, .. } => body.polyhedral().map(|p| p.linear_image(a_inv)),
            Kind::Intersection { parts, poly } => poly
                .get_or_init(|| {
                    let mut acc: Option<HPolytope> = None;
                    for p in parts {
                        let hp = p.polyhedral()?;
                        acc = Some(match acc {
                            None => hp,
                            Some(a) => a.intersect(&hp),
                        });
                    }
                    acc.filter(|p| p.validate().is_ok())
                })
                .clone(),
            _ => None,
        }
    }

    /// Axis-parallel box `[lo, hi]` containing the body.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim;
        match &self.kind {
            Kind::Ball { radius } => (vec![-radius; n], vec![*radius; n]),
            Kind::Box { half_widths } => (half_widths.iter().map(|h| -h).collect(), half_widths.clone()),
            Kind::HPolytope(p) => {
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for v in p.vertices().expect("validated at construction") {
                    for j in 0..n {
                        lo[j] = lo[j].min(v[j]);
                        hi[j] = hi[j].max(v[j]);
                    }
                }
                (lo, hi)
            }
            Kind::Ellipsoid { center, q_inv, .. } => {
                let w: Vec<f64> = (0..n).map(|i| q_inv[(i, i)].sqrt()).collect();
                (linalg::sub(center, &w), linalg::add(center, &w))
            }
            Kind::Intersection { parts, .. } => {
                let mut lo = vec![f64::NEG_INFINITY; n];
                let mut hi = vec![f64::INFINITY; n];
                for p in parts {
                    let (l, h) = p.bounding_box();
                    for j in 0..n {
                        lo[j] = lo[j].max(l[j]);
                        hi[j] = hi[j].min(h[j]);
                    }
                }
                (lo, hi)
            }
            Kind::LinearImage { body, a, .. } => {
                // image of the inner box: center ± |A|·half-width
                let (l, h) = body.bounding_box();
                let mid: Vec<f64> = l.iter().zip(&h).map(|(a, b)| 0.5 * (a + b)).collect();
                let half: Vec<f64> = l.iter().zip(&h).map(|(a, b)| 0.5 * (b - a)).collect();
                let c = linalg::mat_vec(a, &mid);
                let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)].abs() * half[j]).sum()).collect();
                (linalg::sub(&c, &w), linalg::add(&c, &w))
            }
            Kind::Translate { body, v } => {
                let (l, h) = body.bounding_box();
                (linalg::add(&l, v), linalg::add(&h, v))
            }
            Kind::Radial(f) => {
                let r = f.bounding_radius();
                (vec![-r; n], vec![r; n])
            }
        }
    }

    /// A point in the interior.
    pub fn interior_point(&self) -> Vec<f64> {
        self.find_interior_point().expect("bodies are constructed with nonempty interior")
    }

    fn find_interior_point(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Ball { .. } | Kind::Box { .. } | Kind::Radial(_) => Some(vec![0.0; self.dim]),
            Kind::HPolytope(p) => p.vertex_centroid().ok(),
            Kind::Ellipsoid { center, .. } => Some(center.clone()),
            Kind::LinearImage { body, a, .. } => Some(linalg::mat_vec(a, &body.find_interior_point()?)),
            Kind::Translate { body, v } => Some(linalg::add(&body.find_interior_point()?, v)),
            Kind::Intersection { parts, .. } => {
                if let Some(p) = self.polyhedral() {
                    return p.vertex_centroid().ok();
                }
                let interior = |x: &[f64]| parts.iter().all(|p| p.contains(x) && p.gauge_from(x) < 1.0 - 1e-9);
                for p in parts {
                    let c = p.find_interior_point()?;
                    if interior(&c) {
                        return Some(c);
                    }
                }
                // rejection search in the common bounding box
                let (lo, hi) = self.bounding_box();
                if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                    return None;
                }
                let mut rng = crate::rng::stream_rng(0x1u64, 0);
                let mut acc = vec![0.0; self.dim];
                let mut hits = 0usize;
                for _ in 0..200_000 {
                    let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
                    if interior(&x) {
                        acc = linalg::add(&acc, &x);
                        hits += 1;
                        if hits == 64 {
                            break;
                        }
                    }
                }
                (hits > 0).then(|| linalg::scale(&acc, 1.0 / hits as f64))
            }
        }
    }

    /// Gauge of `x` about an interior point; values below 1 are strictly interior.
    fn gauge_from(&self, x: &[f64]) -> f64 {
        let c = match self.find_interior_point() {
            Some(c) => c,
            None => return f64::INFINITY,
        };
        let d = linalg::sub(x, &c);
        if norm(&d) == 0.0 {
            return 0.0;
        }
        1.0 / self.ray_exit(&c, &d)
    }

    /// Closed-form volume when available.
    pub fn exact_volume(&self) -> Option<f64> {
        let n = self.dim;
        match &self.kind {
            Kind::Ball { radius } => Some(unit_ball_volume(n) * radius.powi(n as i32)),
            Kind::Box { half_widths } => Some(half_widths.iter().map(|h| 2.0 * h).product()),
            Kind::HPolytope(p) => p.volume().ok(),
            Kind::Ellipsoid { q, .. } => Some(unit_ball_volume(n) / q.determinant().sqrt()),
            Kind::Intersection { .. } => self.polyhedral().and_then(|p| p.volume().ok()),
            Kind::LinearImage { body, a, .. } => body.exact_volume().map(|v| v * a.determinant().abs()),
            Kind::Translate { body, .. } => body.exact_volume(),
            Kind::Radial(f) if n == 1 => Some(f.radius(&[1.0]) + f.radius(&[-1.0])),
            Kind::Radial(_) => None,
        }
    }

    /// Structural central-symmetry test (`K = −K`); exact for every kind except
    /// intersections with non-polyhedral parts, which fall back to their parts.
    pub fn is_origin_symmetric(&self) -> bool {
        match &self.kind {
            Kind::Ball { .. } | Kind::Box { .. } => true,
            Kind::Ellipsoid { center, .. } => center.iter().all(|c| *c == 0.0),
            Kind::HPolytope(p) => match p.vertices() {
                Ok(vs) => vs.iter().all(|v| {
                    let neg = linalg::scale(v, -1.0);
                    vs.iter().any(|w| norm(&linalg::sub(w, &neg)) <= 1e-9 * (1.0 + norm(v)))
                }),
                Err(_) => false,
            },
            Kind::Intersection { parts, .. } => match self.polyhedral() {
                Some(p) => ConvexBody::make(self.dim, Kind::HPolytope(p), self.bounding_radius).is_origin_symmetric(),
                None => parts.iter().all(|p| p.is_origin_symmetric()),
            },
            Kind::LinearImage { body, .. } => body.is_origin_symmetric(),
            Kind::Translate { body, v } => {
                if v.iter().all(|c| *c == 0.0) {
                    body.is_origin_symmetric()
                } else {
                    self.polyhedral().is_some_and(|p| {
                        ConvexBody::make(self.dim, Kind::HPolytope(p), self.bounding_radius).is_origin_symmetric()
                    })
                }
            }
            Kind::Radial(f) => f.is_symmetric(),
        }
    }

    /// Center of central symmetry, when the body is structurally symmetric about
    /// some point (checked exactly on vertices for polyhedral kinds).
    pub fn center_of_symmetry(&self) -> Option<Vec<f64>> {
        let symmetric_polytope = |p: &HPolytope| -> Option<Vec<f64>> {
            let c = p.vertex_centroid().ok()?;
            let vs = p.vertices().ok()?;
            let ok = vs.iter().all(|v| {
                let m = linalg::sub(&linalg::scale(&c, 2.0), v);
                vs.iter().any(|w| norm(&linalg::sub(w, &m)) <= 1e-9 * (1.0 + norm(v)))
            });
            ok.then_some(c)
        };
        match &self.kind {
            Kind::Ball { .. } | Kind::Box { .. } => Some(vec![0.0; self.dim]),
            Kind::Ellipsoid { center, .. } => Some(center.clone()),
            Kind::HPolytope(p) => symmetric_polytope(p),
            Kind::Intersection { .. } => self.polyhedral().and_then(|p| symmetric_polytope(&p)),
            Kind::LinearImage { body, a, .. } => body.center_of_symmetry().map(|c| linalg::mat_vec(a, &c)),
            Kind::Translate { body, v } => body.center_of_symmetry().map(|c| linalg::add(&c, v)),
            Kind::Radial(f) => f.is_symmetric().then(|| vec![0.0; self.dim]),
        }
    }

    /// `−K`.
    pub fn reflected(&self) -> Result<Self> {
        self.clone().linear_image(-DMatrix::identity(self.dim, self.dim))
    }
}
