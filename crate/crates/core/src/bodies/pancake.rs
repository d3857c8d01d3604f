//! (ℓ, δ)-pancake test: is `P ⊆ E + δBⁿ` for some affine ℓ-flat `E`?

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

use super::{john::john_of_polytope, ConvexBody, EllipsoidResult, Flat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PancakeVerdict {
    Pancake,
    NotPancake,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct PancakeResult {
    pub verdict: PancakeVerdict,
    /// A flat `E` with `P ⊆ E + δBⁿ` when the verdict is `Pancake`.
    pub witness: Option<Flat>,
    pub ellipsoid: EllipsoidResult,
    /// Largest vertex distance to the principal-axes flat of the vertices.
    pub best_fit_distance: f64,
}

impl PancakeResult {
    pub fn is_pancake(&self) -> Option<bool> {
        match self.verdict {
            PancakeVerdict::Pancake => Some(true),
            PancakeVerdict::NotPancake => Some(false),
            PancakeVerdict::Indeterminate => None,
        }
    }
}

/// Three-valued pancake test for a polyhedral body.
///
/// * `λ_{ℓ+1} ≤ δ/n` (John semi-axes): pancake, witness = center + top ℓ axes,
///   since `P ⊆ c + n(ℰ − c)` lies within `nλ_{ℓ+1}` of that flat.
/// * principal-axes flat of the vertices within `δ` of every vertex: pancake.
/// * `λ_{ℓ+1} > δ`: not a pancake. `ℰ ⊆ P` contains an (ℓ+1)-disk of radius
///   `λ_{ℓ+1}`, and every ℓ-flat misses some point of it by at least that much.
/// * otherwise indeterminate.
pub fn pancake_check(body: &ConvexBody, ell: usize, delta: f64) -> Result<PancakeResult> {
    let n = body.dim();
    if ell >= n {
        return Err(Error::pre(format!("pancake dimension ℓ = {ell} must be at most n − 1 = {}", n - 1)));
    }
    if !(delta > 0.0) {
        return Err(Error::pre("δ must be positive"));
    }
    let poly = body
        .polyhedral()
        .ok_or_else(|| Error::Unsupported("pancake test needs a polyhedral body".into()))?;
    let e = john_of_polytope(&poly, 1e-10)?;
    let lam = e.semi_axis_lengths[ell];

    let john_flat = Flat::from_basis(e.center.clone(), e.axes.columns(0, ell).into_owned());

    let verts = poly.vertices()?;
    let mut mean = vec![0.0; n];
    for v in verts {
        mean = linalg::add(&mean, v);
    }
    let mean = linalg::scale(&mean, 1.0 / verts.len() as f64);
    let mut scatter = DMatrix::zeros(n, n);
    for v in verts {
        let d = linalg::to_dvec(&linalg::sub(v, &mean));
        scatter += &d * d.transpose();
    }
    let (_, vecs) = linalg::sym_eigen_desc(&scatter);
    let fit = Flat::from_basis(mean, vecs.columns(0, ell).into_owned());
    let best_fit_distance = verts.iter().map(|v| fit.distance(v)).fold(0.0, f64::max);

    let (verdict, witness) = if lam <= delta / n as f64 {
        (PancakeVerdict::Pancake, Some(john_flat))
    } else if best_fit_distance <= delta {
        (PancakeVerdict::Pancake, Some(fit))
    } else if lam > delta {
        (PancakeVerdict::NotPancake, None)
    } else {
        (PancakeVerdict::Indeterminate, None)
    };
    Ok(PancakeResult { verdict, witness, ellipsoid: e, best_fit_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_box_is_pancake_along_x_axis() {
        let b = ConvexBody::cuboid(vec![1.0, 0.05]).unwrap();
        let r = pancake_check(&b, 1, 0.2).unwrap();
        assert_eq!(r.is_pancake(), Some(true));
        let w = r.witness.unwrap();
        assert!(w.basis()[(0, 0)].abs() > 0.999_999);
        assert!(w.point().iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn square_is_not_pancake() {
        // best line through the square leaves a corner at distance ≥ √2/2
        let sq = ConvexBody::cuboid(vec![1.0, 1.0]).unwrap();
        let r = pancake_check(&sq, 1, 0.4).unwrap();
        assert_eq!(r.is_pancake(), Some(false));
    }

    #[test]
    fn ell_must_be_below_n() {
        let sq = ConvexBody::cuboid(vec![1.0, 1.0]).unwrap();
        assert!(matches!(pancake_check(&sq, 2, 0.4), Err(Error::Precondition(_))));
    }

    #[test]
    fn ell_zero_is_a_point_flat() {
        let sq = ConvexBody::cuboid(vec![0.1, 0.1]).unwrap();
        assert_eq!(pancake_check(&sq, 0, 1.0).unwrap().is_pancake(), Some(true));
        assert_eq!(pancake_check(&sq, 0, 0.05).unwrap().is_pancake(), Some(false));
    }
}
