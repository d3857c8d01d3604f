//! Deterministic tensor-grid quadrature for region measures in dimension ≤ 3.

use rayon::prelude::*;

use super::{MCEstimate, MeasureKind, MeasureModel};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Gaussian mass outside `[−8, 8]ⁿ` is below 1e−14.
const GAUSS_HALF_WIDTH: f64 = 8.0;

/// `μ(region)` by the midpoint rule on a `resolution`ⁿ grid.
///
/// `std_error` carries the discretization bound: the weight of cells whose
/// region or support indicator differs from an axis neighbour's. `samples` is
/// the number of grid cells and `seed` is 0.
pub fn region_measure_grid(
    measure: &MeasureModel,
    region: impl Fn(&[f64]) -> bool + Sync,
    resolution: usize,
) -> Result<MCEstimate> {
    let n = measure.dim();
    if n > 3 {
        return Err(Error::Unsupported(format!("grid quadrature is limited to n ≤ 3, got {n}")));
    }
    if resolution < 2 {
        return Err(Error::pre("grid resolution must be at least 2"));
    }
    let (lo, hi) = match measure.support() {
        Some(b) => {
            let (mut lo, mut hi) = b.bounding_box();
            if matches!(measure.kind(), MeasureKind::GaussianRestricted(_)) {
                for j in 0..n {
                    lo[j] = lo[j].max(-GAUSS_HALF_WIDTH);
                    hi[j] = hi[j].min(GAUSS_HALF_WIDTH);
                }
            }
            (lo, hi)
        }
        None => (vec![-GAUSS_HALF_WIDTH; n], vec![GAUSS_HALF_WIDTH; n]),
    };
    let h: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / resolution as f64).collect();
    let cells = resolution.pow(n as u32);
    let point = |idx: usize| -> Vec<f64> {
        let mut k = idx;
        (0..n)
            .map(|j| {
                let i = k % resolution;
                k /= resolution;
                lo[j] + (i as f64 + 0.5) * h[j]
            })
            .collect()
    };
    let weight = |x: &[f64]| -> f64 {
        match measure.kind() {
            MeasureKind::GaussianStd => (-0.5 * dot(x, x)).exp(),
            _ => {
                let l = measure.log_density_unnormalized(x);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    l.exp()
                }
            }
        }
    };
    let evals: Vec<(f64, bool)> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let x = point(i);
            let w = weight(&x);
            (w, w > 0.0 && region(&x))
        })
        .collect();
    let total: f64 = evals.iter().map(|e| e.0).sum();
    let inside: f64 = evals.iter().filter(|e| e.1).map(|e| e.0).sum();
    let stride: Vec<usize> = (0..n).map(|j| resolution.pow(j as u32)).collect();
    let boundary: f64 = (0..cells)
        .into_par_iter()
        .map(|i| {
            let (w, r) = evals[i];
            let mut k = i;
            for j in 0..n {
                let c = k % resolution;
                k /= resolution;
                for (ok, nb) in [(c > 0, i.wrapping_sub(stride[j])), (c + 1 < resolution, i + stride[j])] {
                    if ok {
                        let (wn, rn) = evals[nb];
                        if rn != r || (wn > 0.0) != (w > 0.0) {
                            return w.max(wn);
                        }
                    }
                }
            }
            0.0
        })
        .sum();
    if total <= 0.0 {
        return Err(Error::pre("grid misses the support of the measure"));
    }
    Ok(MCEstimate { value: inside / total, std_error: boundary / total, samples: cells as u64, seed: 0 })
}
