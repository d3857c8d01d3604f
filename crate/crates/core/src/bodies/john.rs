//! Maximal-volume inscribed (John) ellipsoid of a polytope.
//!
//! The ellipsoid is `{c + B u : |u| ≤ 1}` with `B` symmetric positive definite.
//! Maximizing `log det B` subject to `|B a_i| + a_i·c ≤ b_i` is a convex program;
//! it is solved by a log-barrier path-following method with exact Newton steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};

use super::{ConvexBody, HPolytope};

#[derive(Clone, Debug)]
pub struct EllipsoidResult {
    pub center: Vec<f64>,
    /// `B²`; the ellipsoid is `{x : (x − c)ᵀ (B²)⁻¹ (x − c) ≤ 1}`.
    pub shape: DMatrix<f64>,
    /// Semi-axis lengths `λ₁ ≥ … ≥ λ_n`.
    pub semi_axis_lengths: Vec<f64>,
    /// Unit semi-axis directions, columns in the order of `semi_axis_lengths`.
    pub axes: DMatrix<f64>,
    /// Barrier duality gap bound at termination.
    pub gap: f64,
    pub newton_steps: usize,
}

impl EllipsoidResult {
    pub fn factor(&self) -> DMatrix<f64> {
        linalg::sym_sqrt(&self.shape)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d = linalg::sub(x, &self.center);
        let inv = self.shape.clone().try_inverse().expect("SPD");
        dot(&d, &linalg::mat_vec(&inv, &d)) <= 1.0
    }
}

/// Barrier objective `t·(−log det B) − Σ log s_i` with slacks
/// `s_i = b_i − a_i·c − |B a_i|`.
struct Problem {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    n: usize,
    basis: Vec<(usize, usize)>,
}

impl Problem {
    fn unpack(&self, theta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let c = theta[..self.n].to_vec();
        let mut bm = DMatrix::zeros(self.n, self.n);
        for (p, &(k, l)) in self.basis.iter().enumerate() {
            bm[(k, l)] = theta[self.n + p];
            bm[(l, k)] = theta[self.n + p];
        }
        (c, bm)
    }

    /// `E_p v` for the symmetric basis matrix of parameter `p`.
    fn ep_apply(&self, p: usize, v: &[f64]) -> Vec<f64> {
        let (k, l) = self.basis[p];
        let mut out = vec![0.0; self.n];
        if k == l {
            out[k] = v[k];
        } else {
            out[k] = v[l];
            out[l] = v[k];
        }
        out
    }

    fn slacks(&self, c: &[f64], bm: &DMatrix<f64>) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| b - dot(a, c) - norm(&linalg::mat_vec(bm, a)))
            .collect()
    }

    fn feasible(&self, theta: &[f64]) -> bool {
        let (c, bm) = self.unpack(theta);
        bm.clone().cholesky().is_some() && self.slacks(&c, &bm).iter().all(|s| *s > 0.0)
    }

    fn grad_hess(&self, theta: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let q = self.basis.len();
        let nv = n + q;
        let (c, bm) = self.unpack(theta);
        let binv = bm.clone().try_inverse().expect("B positive definite");
        let mut g = DVector::zeros(nv);
        let mut h = DMatrix::zeros(nv, nv);
        // −t log det B
        let mats: Vec<DMatrix<f64>> = self
            .basis
            .iter()
            .map(|&(k, l)| {
                let mut e = DMatrix::zeros(n, n);
                e[(k, l)] = 1.0;
                e[(l, k)] = 1.0;
                &binv * e
            })
            .collect();
        for p in 0..q {
            g[n + p] = -t * mats[p].trace();
            for r in p..q {
                let v = t * (&mats[p] * &mats[r]).trace();
                h[(n + p, n + r)] = v;
                h[(n + r, n + p)] = v;
            }
        }
        // −log s_i
        for (a, b) in self.a.iter().zip(&self.b) {
            let z = linalg::mat_vec(&bm, a);
            let rho = norm(&z);
            let s = b - dot(a, &c) - rho;
            let cols: Vec<Vec<f64>> = (0..q).map(|p| self.ep_apply(p, a)).collect();
            let mut gs = vec![0.0; nv];
            for j in 0..n {
                gs[j] = -a[j];
            }
            for p in 0..q {
                gs[n + p] = -dot(&cols[p], &z) / rho;
            }
            for i in 0..nv {
                g[i] -= gs[i] / s;
                for j in i..nv {
                    let v = gs[i] * gs[j] / (s * s);
                    h[(i, j)] += v;
                }
            }
            // curvature of |B a| in the B block: Jᵀ (I/ρ − z zᵀ/ρ³) J / s
            let jz: Vec<f64> = cols.iter().map(|col| dot(col, &z)).collect();
            for p in 0..q {
                for r in p..q {
                    let v = (dot(&cols[p], &cols[r]) / rho - jz[p] * jz[r] / rho.powi(3)) / s;
                    h[(n + p, n + r)] += v;
                }
            }
        }
        for i in 0..nv {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        (g, h)
    }
}

/// John ellipsoid of a bounded polytope with nonempty interior (`n ≤ 6`).
///
/// `tol` bounds the final barrier gap in `log det`; the a-posteriori
/// containment `P ⊆ c + n(ℰ − c)` is checked on the vertices.
pub fn john_ellipsoid(body: &ConvexBody, tol: f64) -> Result<EllipsoidResult> {
    let poly = body
        .polyhedral()
        .ok_or_else(|| Error::Unsupported("John ellipsoid needs a polyhedral body".into()))?;
    john_of_polytope(&poly, tol)
}

pub fn john_of_polytope(poly: &HPolytope, tol: f64) -> Result<EllipsoidResult> {
    if !(tol > 0.0) {
        return Err(Error::pre("tolerance must be positive"));
    }
    poly.validate()?;
    let n = poly.dim();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..poly.facet_count() {
        let row = poly.row(i);
        let r = norm(&row);
        a.push(linalg::scale(&row, 1.0 / r));
        b.push(poly.offsets()[i] / r);
    }
    let mut basis = Vec::new();
    for k in 0..n {
        for l in k..n {
            basis.push((k, l));
        }
    }
    let prob = Problem { a, b, n, basis };
    let c0 = poly.vertex_centroid()?;
    let r0 = 0.5 * prob.slacks(&c0, &DMatrix::zeros(n, n)).iter().fold(f64::INFINITY, |x, &y| x.min(y));
    if !(r0 > 0.0) {
        return Err(Error::EmptyInterior);
    }
    let mut theta = c0.clone();
    for &(k, l) in &prob.basis {
        theta.push(if k == l { r0 } else { 0.0 });
    }
    let m = prob.a.len() as f64;
    let mut t = 1.0;
    let mut steps = 0usize;
    const MAX_STEPS: usize = 5000;
    loop {
        // centering by damped Newton; function values are too large to compare
        // reliably at high t, so steps are controlled by the decrement alone
        for _ in 0..100 {
            let (g, h) = prob.grad_hess(&theta, t);
            let Some(dx) = h.clone().cholesky().map(|ch| ch.solve(&(-&g))) else {
                return Err(Error::NonConvergence { what: "John ellipsoid Newton system".into(), iterations: steps });
            };
            let dec = -g.dot(&dx);
            steps += 1;
            if dec <= 1e-11 {
                break;
            }
            let mut step = if dec > 0.25 { 1.0 / (1.0 + dec.sqrt()) } else { 1.0 };
            loop {
                let cand: Vec<f64> = theta.iter().zip(dx.iter()).map(|(x, d)| x + step * d).collect();
                if prob.feasible(&cand) {
                    theta = cand;
                    break;
                }
                step *= 0.5;
                if step < 1e-12 {
                    return Err(Error::NonConvergence { what: "John ellipsoid line search".into(), iterations: steps });
                }
            }
        }
        if steps > MAX_STEPS {
            return Err(Error::NonConvergence { what: "John ellipsoid".into(), iterations: steps });
        }
        if m / t <= tol {
            break;
        }
        t *= 8.0;
    }
    let (c, bm) = prob.unpack(&theta);
    let shape = linalg::symmetrize(&(&bm * &bm));
    let (vals, axes) = linalg::sym_eigen_desc(&bm);
    let out = EllipsoidResult { center: c.clone(), shape, semi_axis_lengths: vals, axes, gap: m / t, newton_steps: steps };
    let binv = bm.try_inverse().expect("B positive definite");
    for v in poly.vertices()? {
        let u = linalg::mat_vec(&binv, &linalg::sub(v, &c));
        if norm(&u) > n as f64 * (1.0 + 1e-6) {
            return Err(Error::NonConvergence { what: "John ellipsoid containment check".into(), iterations: steps });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gives_unit_disk() {
        let sq = ConvexBody::cuboid(vec![1.0, 1.0]).unwrap();
        let e = john_ellipsoid(&sq, 1e-10).unwrap();
        assert!(norm(&e.center) < 1e-8);
        for l in &e.semi_axis_lengths {
            assert!((l - 1.0).abs() < 1e-8, "{l}");
        }
    }

    #[test]
    fn rectangle_axes() {
        let r = ConvexBody::cuboid(vec![2.0, 1.0]).unwrap();
        let e = john_ellipsoid(&r, 1e-10).unwrap();
        assert!((e.semi_axis_lengths[0] - 2.0).abs() < 1e-8);
        assert!((e.semi_axis_lengths[1] - 1.0).abs() < 1e-8);
        assert!(e.axes[(0, 0)].abs() > 0.999_999);
    }

    #[test]
    fn triangle_gives_steiner_inellipse() {
        // affine image of the equilateral incircle: centered at the centroid,
        // area π/(3√3) times the triangle area
        let t = ConvexBody::simplex(2).unwrap();
        let e = john_ellipsoid(&t, 1e-10).unwrap();
        assert!((e.center[0] - 1.0 / 3.0).abs() < 1e-8);
        assert!((e.center[1] - 1.0 / 3.0).abs() < 1e-8);
        let area = std::f64::consts::PI * e.semi_axis_lengths[0] * e.semi_axis_lengths[1];
        assert!((area - std::f64::consts::PI / (3.0 * 3f64.sqrt()) * 0.5).abs() < 1e-8);
        // strictly larger than the incircle, radius area/semiperimeter = (2−√2)/2
        let r = (2.0 - 2f64.sqrt()) / 2.0;
        assert!(area > std::f64::consts::PI * r * r);
    }

    #[test]
    fn cube3() {
        let c = ConvexBody::cube(3).unwrap();
        let e = john_ellipsoid(&c, 1e-10).unwrap();
        for (x, l) in e.center.iter().zip(&e.semi_axis_lengths) {
            assert!((x - 0.5).abs() < 1e-8);
            assert!((l - 0.5).abs() < 1e-8);
        }
    }
}
