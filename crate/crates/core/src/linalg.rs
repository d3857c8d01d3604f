//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let (r, c) = m.shape();
    debug_assert_eq!(c, x.len());
    (0..r).map(|i| (0..c).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

/// `mᵀ x`
pub fn mat_t_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let (r, c) = m.shape();
    debug_assert_eq!(r, x.len());
    (0..c).map(|j| (0..r).map(|i| m[(i, j)] * x[i]).sum()).collect()
}

pub fn to_dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Symmetric part `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Apply `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    let v = &eig.eigenvectors;
    symmetrize(&(v * d * v.transpose()))
}

pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, |x| x.max(0.0).sqrt())
}

pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, |x| 1.0 / x.sqrt())
}

pub fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, f64::exp)
}

pub fn sym_log(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, f64::ln)
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn sym_eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Eigen-pairs of a symmetric matrix sorted by descending eigenvalue.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Operator (spectral) norm.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |a, &b| a.max(b))
}

pub fn is_spd(m: &DMatrix<f64>) -> bool {
    let asym = (m - m.transpose()).amax();
    asym <= 1e-12 * m.amax().max(1.0) && m.clone().cholesky().is_some()
}

/// SPD polar factor `(mᵀm)^{1/2}` of an invertible matrix.
pub fn polar_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_sqrt(&(m.transpose() * m))
}

/// Orthonormal basis (columns) of the orthogonal complement of the column span of `basis`.
pub fn orthonormal_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let k = basis.ncols();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let p = basis * basis.transpose();
    let proj = DMatrix::identity(n, n) - p;
    let (vals, vecs) = sym_eigen_desc(&proj);
    let cols: Vec<DVector<f64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormalize the columns of `m` (Gram-Schmidt through QR).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    m.clone().qr().q().columns(0, m.ncols()).into_owned()
}

/// Numerical rank with relative threshold.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Right null space basis (columns) of `j` (rows = constraints).
pub fn null_space(j: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = j.ncols();
    let jtj = j.transpose() * j;
    let (vals, vecs) = sym_eigen_desc(&jtj);
    let top = vals.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= rel_tol * rel_tol * top)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_and_exp_log_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = sym_sqrt(&m);
        assert!((&s * &s - &m).amax() < 1e-12);
        let back = sym_exp(&sym_log(&m));
        assert!((back - &m).amax() < 1e-12);
        let is = sym_inv_sqrt(&m);
        assert!((&is * &m * &is - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let b = orthonormalize(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]));
        let c = orthonormal_complement(&b, 3);
        assert_eq!(c.ncols(), 2);
        assert!((b.transpose() * &c).amax() < 1e-12);
        assert!((c.transpose() * &c - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn polar_factor_drops_rotation() {
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7]);
        assert!((polar_spd(&(rot * &p)) - p).amax() < 1e-12);
    }

    #[test]
    fn null_space_of_row() {
        let j = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 2.0]);
        let ns = null_space(&j, 1e-9);
        assert_eq!(ns.ncols(), 2);
        assert!((j * ns).amax() < 1e-12);
    }
}
