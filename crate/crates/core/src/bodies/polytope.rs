//! Polytopes given by facet inequalities `a_i · x ≤ b_i`.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, dot};

/// Vertex enumeration is combinatorial; above this dimension it is refused.
pub const MAX_VERTEX_DIM: usize = 6;

const TIGHT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct HPolytope {
    normals: DMatrix<f64>,
    offsets: Vec<f64>,
    vertices: OnceLock<std::result::Result<Vec<Vec<f64>>, String>>,
}

impl HPolytope {
    /// Rows of `normals` are the facet normals. Boundedness is checked lazily by
    /// [`HPolytope::validate`].
    pub fn new(normals: DMatrix<f64>, offsets: Vec<f64>) -> Result<Self> {
        if normals.nrows() != offsets.len() {
            return Err(Error::pre(format!(
                "{} normals but {} offsets",
                normals.nrows(),
                offsets.len()
            )));
        }
        if normals.ncols() == 0 {
            return Err(Error::pre("zero-dimensional polytope"));
        }
        if normals.iter().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::pre("non-finite polytope data"));
        }
        for i in 0..normals.nrows() {
            if normals.row(i).norm() == 0.0 {
                return Err(Error::pre(format!("facet {i} has a zero normal")));
            }
        }
        Ok(HPolytope { normals, offsets, vertices: OnceLock::new() })
    }

    pub fn from_rows(rows: &[Vec<f64>], offsets: Vec<f64>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::pre("ragged normal rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), n, &flat), offsets)
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn facet_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.normals.row(i).iter().copied().collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.offsets.len()).all(|i| self.row_dot(i, x) <= self.offsets[i])
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.dim();
        (0..n).map(|j| self.normals[(i, j)] * x[j]).sum()
    }

    /// Largest constraint violation `max_i (a_i · x − b_i) / |a_i|`.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        (0..self.offsets.len())
            .map(|i| (self.row_dot(i, x) - self.offsets[i]) / self.normals.row(i).norm())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Gauge for a polytope with the origin in its interior.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        (0..self.offsets.len())
            .map(|i| self.row_dot(i, x) / self.offsets[i])
            .fold(0.0, f64::max)
    }

    /// Vertices, enumerated once and cached. Fails above [`MAX_VERTEX_DIM`], for
    /// unbounded polyhedra and for bodies with empty interior.
    pub fn vertices(&self) -> Result<&[Vec<f64>]> {
        let v = self.vertices.get_or_init(|| self.enumerate_vertices());
        match v {
            Ok(v) => Ok(v),
            Err(msg) => {
                if msg.starts_with("empty") {
                    Err(Error::EmptyInterior)
                } else if msg.starts_with("dimension") {
                    Err(Error::Unsupported(msg.clone()))
                } else {
                    Err(Error::pre(msg.clone()))
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.vertices().map(|_| ())
    }

    fn enumerate_vertices(&self) -> std::result::Result<Vec<Vec<f64>>, String> {
        let n = self.dim();
        let m = self.offsets.len();
        if n > MAX_VERTEX_DIM {
            return Err(format!("dimension {n} exceeds vertex-enumeration limit {MAX_VERTEX_DIM}"));
        }
        let scale = self.offsets.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let mut verts: Vec<Vec<f64>> = Vec::new();
        for combo in Combinations::new(m, n) {
            let a = DMatrix::from_fn(n, n, |r, c| self.normals[(combo[r], c)]);
            let b = nalgebra::DVector::from_iterator(n, combo.iter().map(|&i| self.offsets[i]));
            let Some(x) = a.lu().solve(&b) else { continue };
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let feasible = (0..m).all(|i| {
                self.row_dot(i, &x) - self.offsets[i] <= TIGHT_TOL * scale * self.normals.row(i).norm().max(1.0)
            });
            if !feasible {
                continue;
            }
            let dup = verts
                .iter()
                .any(|v| linalg::norm(&linalg::sub(v, &x)) <= 1e-9 * scale.max(linalg::norm(&x)));
            if !dup {
                verts.push(x);
            }
        }
        if verts.is_empty() {
            return Err("polyhedron has no vertices (empty or unbounded)".into());
        }
        // bounded iff the recession cone {d : A d ≤ 0} has no extreme ray
        if n >= 2 {
            for combo in Combinations::new(m, n - 1) {
                let a = DMatrix::from_fn(n - 1, n, |r, c| self.normals[(combo[r], c)]);
                let ns = linalg::null_space(&a, 1e-10);
                if ns.ncols() != 1 {
                    continue;
                }
                let d: Vec<f64> = ns.column(0).iter().copied().collect();
                for sign in [1.0, -1.0] {
                    let ok = (0..m).all(|i| sign * self.row_dot(i, &d) <= 1e-10 * self.normals.row(i).norm());
                    if ok {
                        return Err("polyhedron is unbounded".into());
                    }
                }
            }
        } else {
            let up = (0..m).any(|i| self.normals[(i, 0)] > 0.0);
            let down = (0..m).any(|i| self.normals[(i, 0)] < 0.0);
            if !(up && down) {
                return Err("polyhedron is unbounded".into());
            }
        }
        let v0 = &verts[0];
        let diffs = DMatrix::from_fn(n, verts.len(), |r, c| verts[c][r] - v0[r]);
        if linalg::rank(&diffs, 1e-10) < n {
            return Err("empty interior: vertices are affinely dependent".into());
        }
        Ok(verts)
    }

    /// Average of the vertices; an interior point.
    pub fn vertex_centroid(&self) -> Result<Vec<f64>> {
        let v = self.vertices()?;
        let n = self.dim();
        let mut c = vec![0.0; n];
        for p in v {
            for j in 0..n {
                c[j] += p[j];
            }
        }
        Ok(linalg::scale(&c, 1.0 / v.len() as f64))
    }

    pub fn support(&self, u: &[f64]) -> Result<f64> {
        Ok(self.vertices()?.iter().map(|v| dot(v, u)).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Exact volume by recursive facet decomposition: a k-face is the union of
    /// pyramids over its (k−1)-faces with apex at its vertex centroid.
    pub fn volume(&self) -> Result<f64> {
        let verts = self.vertices()?;
        let m = self.offsets.len();
        let scale = self.offsets.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let tight: Vec<Vec<bool>> = verts
            .iter()
            .map(|v| {
                (0..m)
                    .map(|i| {
                        (self.row_dot(i, v) - self.offsets[i]).abs()
                            <= 1e-8 * scale * self.normals.row(i).norm().max(1.0)
                    })
                    .collect()
            })
            .collect();
        let all: Vec<usize> = (0..verts.len()).collect();
        Ok(face_volume(verts, &tight, &all, self.dim()))
    }

    pub fn translated(&self, v: &[f64]) -> HPolytope {
        let offsets = (0..self.offsets.len()).map(|i| self.offsets[i] + self.row_dot(i, v)).collect();
        HPolytope::new(self.normals.clone(), offsets).expect("translation keeps validity")
    }

    /// Image under `x ↦ A x` given `A⁻¹`.
    pub fn linear_image(&self, a_inv: &DMatrix<f64>) -> HPolytope {
        HPolytope::new(&self.normals * a_inv, self.offsets.clone()).expect("invertible image")
    }

    pub fn intersect(&self, other: &HPolytope) -> HPolytope {
        let n = self.dim();
        let m1 = self.facet_count();
        let m2 = other.facet_count();
        let normals = DMatrix::from_fn(m1 + m2, n, |r, c| {
            if r < m1 {
                self.normals[(r, c)]
            } else {
                other.normals[(r - m1, c)]
            }
        });
        let mut offsets = self.offsets.clone();
        offsets.extend_from_slice(&other.offsets);
        HPolytope::new(normals, offsets).expect("same dimension")
    }
}

fn affine_basis(verts: &[Vec<f64>], idx: &[usize]) -> DMatrix<f64> {
    let n = verts[idx[0]].len();
    let v0 = &verts[idx[0]];
    let diffs = DMatrix::from_fn(n, idx.len(), |r, c| verts[idx[c]][r] - v0[r]);
    let svd = diffs.svd(true, false);
    let top = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let u = svd.u.expect("requested");
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-9 * top.max(1e-300))
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn face_volume(verts: &[Vec<f64>], tight: &[Vec<bool>], face: &[usize], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => {
            let mut best = 0.0f64;
            for (i, &a) in face.iter().enumerate() {
                for &b in &face[i + 1..] {
                    best = best.max(linalg::norm(&linalg::sub(&verts[a], &verts[b])));
                }
            }
            best
        }
        _ => {
            let n = verts[0].len();
            let mut c = vec![0.0; n];
            for &i in face {
                for j in 0..n {
                    c[j] += verts[i][j];
                }
            }
            let c = linalg::scale(&c, 1.0 / face.len() as f64);
            let m = tight[0].len();
            let mut seen: Vec<Vec<usize>> = Vec::new();
            let mut total = 0.0;
            for j in 0..m {
                let sub: Vec<usize> = face.iter().copied().filter(|&v| tight[v][j]).collect();
                if sub.len() < k || sub.len() == face.len() || seen.contains(&sub) {
                    continue;
                }
                let basis = affine_basis(verts, &sub);
                if basis.ncols() != k - 1 {
                    continue;
                }
                let w = linalg::sub(&c, &verts[sub[0]]);
                let coef = linalg::mat_t_vec(&basis, &w);
                let proj = linalg::mat_vec(&basis, &coef);
                let h = linalg::norm(&linalg::sub(&w, &proj));
                total += h / k as f64 * face_volume(verts, tight, &sub, k - 1);
                seen.push(sub);
            }
            total
        }
    }
}

/// k-subsets of {0..m} in lexicographic order.
pub(crate) struct Combinations {
    m: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(m: usize, k: usize) -> Self {
        Combinations { m, idx: (0..k).collect(), done: k > m }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.m - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize, h: f64) -> HPolytope {
        let mut rows = Vec::new();
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            rows.push(r.clone());
            r[i] = -1.0;
            rows.push(r);
        }
        HPolytope::from_rows(&rows, vec![h; 2 * n]).unwrap()
    }

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(6, 3).count(), 20);
        assert_eq!(Combinations::new(4, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn cube_vertices_and_volume() {
        for n in 1..=4 {
            let p = cube(n, 1.0);
            assert_eq!(p.vertices().unwrap().len(), 1 << n);
            assert!((p.volume().unwrap() - 2f64.powi(n as i32)).abs() < 1e-10);
        }
    }

    #[test]
    fn simplex_volume() {
        // conv{0, e1, e2, e3}: volume 1/6
        let rows = vec![
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, -1.0],
            vec![1.0, 1.0, 1.0],
        ];
        let p = HPolytope::from_rows(&rows, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((p.volume().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_and_degenerate_vertices() {
        // square with a redundant facet touching a corner (degenerate vertex)
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![1.0, 1.0],
        ];
        let p = HPolytope::from_rows(&rows, vec![1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.vertices().unwrap().len(), 4);
        assert!((p.volume().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_rejected() {
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        let p = HPolytope::from_rows(&rows, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(p.validate().is_err());
    }

    #[test]
    fn empty_is_rejected() {
        let rows = vec![vec![1.0], vec![-1.0]];
        let p = HPolytope::from_rows(&rows, vec![-1.0, -1.0]).unwrap();
        assert!(p.validate().is_err());
    }
}
