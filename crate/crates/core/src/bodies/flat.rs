use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Affine flat `point + span(basis)` with orthonormal basis columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Flat {
    point: Vec<f64>,
    basis: DMatrix<f64>,
}

impl Flat {
    /// The spanning vectors are orthonormalized; they must be independent.
    pub fn new(point: Vec<f64>, spanning: &[Vec<f64>]) -> Result<Self> {
        let n = point.len();
        if spanning.iter().any(|v| v.len() != n) {
            return Err(Error::pre("flat direction has wrong dimension"));
        }
        let m = DMatrix::from_fn(n, spanning.len(), |r, c| spanning[c][r]);
        if linalg::rank(&m, 1e-10) != spanning.len() {
            return Err(Error::pre("flat directions are linearly dependent"));
        }
        Ok(Flat { point, basis: linalg::orthonormalize(&m) })
    }

    pub fn from_basis(point: Vec<f64>, basis: DMatrix<f64>) -> Self {
        Flat { point, basis }
    }

    /// The flat through `point` spanned by coordinate axes `axes`.
    pub fn coordinate(point: Vec<f64>, axes: &[usize]) -> Self {
        let n = point.len();
        let basis = DMatrix::from_fn(n, axes.len(), |r, c| if r == axes[c] { 1.0 } else { 0.0 });
        Flat { point, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.point.len()
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Point with in-flat coordinates `coords`.
    pub fn at(&self, coords: &[f64]) -> Vec<f64> {
        linalg::add(&self.point, &linalg::mat_vec(&self.basis, coords))
    }

    /// In-flat coordinates of the orthogonal projection of `x`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_t_vec(&self.basis, &linalg::sub(x, &self.point))
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.at(&self.coords(x))
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        linalg::norm(&linalg::sub(x, &self.project(x)))
    }

    /// Image under `x ↦ Q x` for orthogonal `Q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Flat {
        Flat { point: linalg::mat_vec(q, &self.point), basis: q * &self.basis }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_and_distance() {
        let f = Flat::new(vec![0.0, 0.0, 1.0], &[vec![1.0, 1.0, 0.0]]).unwrap();
        assert!((f.distance(&[1.0, -1.0, 1.0]) - 2f64.sqrt()).abs() < 1e-12);
        let p = f.project(&[2.0, 0.0, 5.0]);
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12 && (p[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_directions_rejected() {
        assert!(Flat::new(vec![0.0; 2], &[vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
    }
}
