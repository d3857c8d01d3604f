//! Dyadic equipartition by recursive bisection along circles of halfspaces.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{ConvexBody, Flat, HPolytope};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, norm};
use crate::measures::{MCEstimate, MeasureModel, Points};
use crate::report::{CheckRecord, Quantity, Status};
use crate::rng::derive_seed;

pub const BRACKETS: usize = 720;
pub const DEFAULT_ANGLE_TOL: f64 = 1e-10;
pub const MAX_DEPTH: usize = 6;

/// `H(u) = {x : u_{n+1} + Σ u_i x_i ≥ 0}` for `u ∈ Sⁿ ⊂ ℝⁿ⁺¹`.
pub fn in_halfspace(u: &[f64], x: &[f64]) -> bool {
    let n = x.len();
    u[n] + linalg::dot(&u[..n], x) >= 0.0
}

/// A great circle of halfspace parameters.
#[derive(Clone, Debug)]
pub enum CutFamily {
    /// Halfspaces with normal `±a`: `{⟨a, x⟩ ≥ c}` for all `c`.
    Parallel { normal: Vec<f64> },
    /// Halfspaces whose boundary contains an `(n−2)`-flat.
    Pencil { flat: Flat },
}

impl CutFamily {
    /// Orthonormal `(e₁, e₂)` in `ℝⁿ⁺¹` with `u(φ) = cos φ e₁ + sin φ e₂`.
    pub fn circle(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            CutFamily::Parallel { normal } => {
                check_dim(n, normal.len())?;
                if norm(normal) == 0.0 {
                    return Err(Error::pre("cut normal must be nonzero"));
                }
                let mut e1 = linalg::normalized(normal);
                e1.push(0.0);
                let mut e2 = vec![0.0; n + 1];
                e2[n] = 1.0;
                Ok((e1, e2))
            }
            CutFamily::Pencil { flat } => {
                check_dim(n, flat.ambient_dim())?;
                if n < 2 || flat.dim() != n - 2 {
                    return Err(Error::pre("pencil axis must be an (n−2)-flat"));
                }
                // u ⟂ (p, 1) and u ⟂ (b_j, 0)
                let p = flat.point();
                let b = flat.basis();
                let rows = DMatrix::from_fn(n - 1, n + 1, |r, c| {
                    if r == 0 {
                        if c < n { p[c] } else { 1.0 }
                    } else if c < n {
                        b[(c, r - 1)]
                    } else {
                        0.0
                    }
                });
                let ns = linalg::null_space(&rows, 1e-10);
                if ns.ncols() != 2 {
                    return Err(Error::Numeric("pencil constraint has the wrong rank".into()));
                }
                let e1: Vec<f64> = ns.column(0).iter().copied().collect();
                let e2: Vec<f64> = ns.column(1).iter().copied().collect();
                Ok((e1, e2))
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            CutFamily::Parallel { normal } => format!("parallel{normal:?}"),
            CutFamily::Pencil { flat } => format!("pencil through {:?}", flat.point()),
        }
    }
}

/// Additive set functional `A ↦ ∫_A w dμ`.
#[derive(Clone)]
pub enum Functional {
    Measure,
    Weighted { name: String, weight: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> },
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Functional {
    pub fn weighted(name: impl Into<String>, w: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Functional::Weighted { name: name.into(), weight: Arc::new(w) }
    }

    pub fn weight(&self, x: &[f64]) -> f64 {
        match self {
            Functional::Measure => 1.0,
            Functional::Weighted { weight, .. } => weight(x),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Functional::Measure => "measure".into(),
            Functional::Weighted { name, .. } => format!("weighted({name})"),
        }
    }
}

/// Weighted sample: `F(A) ≈ Σ_{x_i ∈ A} w_i`.
#[derive(Clone, Debug)]
pub struct WeightedSample {
    pub points: Points,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    /// Weights `scale · w(x_i)/N`, where `scale` is the measure's total mass.
    pub fn draw(measure: &MeasureModel, functional: &Functional, budget: usize, seed: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::pre("budget must be positive"));
        }
        let points = measure.sample(budget, seed)?;
        let scale = total_mass(measure) / budget as f64;
        let weights = points.par_iter().map(|x| scale * functional.weight(x)).collect();
        Ok(WeightedSample { points, weights })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Volume of the support for uniform measures with known volume, else 1.
pub fn total_mass(measure: &MeasureModel) -> f64 {
    match measure.kind() {
        crate::measures::MeasureKind::UniformOn(b) => b.exact_volume().unwrap_or(1.0),
        _ => 1.0,
    }
}

/// Angular coordinates of points on a cut circle: `x ∈ H(u(φ))` iff
/// `cos(ω(x) − φ) ≥ 0`.
struct CircleKeys {
    /// Sorted angles in `(−π, π]` with their cumulative weights.
    angles: Vec<f64>,
    prefix: Vec<f64>,
    /// Weight of points on the axis of the pencil (in every halfspace).
    axis_weight: f64,
}

impl CircleKeys {
    fn new(sample: &WeightedSample, idx: &[usize], e1: &[f64], e2: &[f64]) -> Self {
        let n = sample.points.dim();
        let mut keyed: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
        let mut axis_weight = 0.0;
        for &i in idx {
            let x = sample.points.get(i);
            let s1 = e1[n] + linalg::dot(&e1[..n], x);
            let s2 = e2[n] + linalg::dot(&e2[..n], x);
            if s1 == 0.0 && s2 == 0.0 {
                axis_weight += sample.weights[i];
            } else {
                keyed.push((s2.atan2(s1), sample.weights[i]));
            }
        }
        keyed.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(keyed.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (_, w) in &keyed {
            acc += w;
            prefix.push(acc);
        }
        CircleKeys { angles: keyed.into_iter().map(|k| k.0).collect(), prefix, axis_weight }
    }

    fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Weight with angle in the closed interval `[a, b] ⊂ [−π, π]`.
    fn weight_between(&self, a: f64, b: f64) -> f64 {
        let lo = self.angles.partition_point(|v| *v < a);
        let hi = self.angles.partition_point(|v| *v <= b);
        self.prefix[hi] - self.prefix[lo.min(hi)]
    }

    /// `F(H(u(φ)))` excluding the axis.
    fn inside(&self, phi: f64) -> f64 {
        let a = wrap(phi - PI / 2.0);
        let b = wrap(phi + PI / 2.0);
        if a <= b {
            self.weight_between(a, b)
        } else {
            self.weight_between(a, PI) + self.weight_between(-PI, b)
        }
    }

    /// `F(H(u(φ))) − F(H(−u(φ)))`; odd under `φ ↦ φ + π`.
    fn odd_gap(&self, phi: f64) -> f64 {
        let a = self.inside(phi);
        let b = self.inside(phi + PI);
        // points exactly on the boundary count on both sides and cancel
        a - b
    }
}

fn wrap(a: f64) -> f64 {
    let mut v = (a + PI).rem_euclid(2.0 * PI) - PI;
    if v == -PI {
        v = PI;
    }
    v
}

/// `F(H(u)) − F(H(−u))` by direct summation.
pub fn halfspace_gap(sample: &WeightedSample, u: &[f64]) -> f64 {
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    sample
        .points
        .iter()
        .zip(&sample.weights)
        .map(|(x, w)| {
            let a = in_halfspace(u, x) as i32 as f64;
            let b = in_halfspace(&neg, x) as i32 as f64;
            w * (a - b)
        })
        .sum()
}

/// A bisecting halfspace.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Cut {
    /// Unit vector in `ℝⁿ⁺¹`; the cell keeps `H(u)` on the left, `H(−u)` on the right.
    pub u: Vec<f64>,
    /// Circle parameter of `u`.
    pub angle: f64,
    /// `F(H(u) ∩ cell)` and `F(H(−u) ∩ cell)` on the build sample.
    pub left: f64,
    pub right: f64,
    pub family: String,
}

/// Angle `φ ∈ [0, π]` where the odd gap changes sign, by bracketing and bisection.
fn bisect_circle(keys: &CircleKeys, angle_tol: f64) -> Result<f64> {
    let total = keys.total() + keys.axis_weight;
    if !(total > 0.0) {
        return Err(Error::pre("functional vanishes on the cell"));
    }
    let g0 = keys.odd_gap(0.0);
    if g0 == 0.0 {
        return Ok(0.0);
    }
    let step = PI / BRACKETS as f64;
    let mut lo = 0.0;
    let mut glo = g0;
    let mut bracket = None;
    for i in 1..=BRACKETS {
        let phi = i as f64 * step;
        let g = keys.odd_gap(phi);
        if g == 0.0 {
            return Ok(phi);
        }
        if g.signum() != glo.signum() {
            bracket = Some((lo, phi, glo, g));
            break;
        }
        lo = phi;
        glo = g;
    }
    // g(π) = −g(0), so the sweep always brackets
    let (mut a, mut b, mut ga, mut gb) = bracket.ok_or_else(|| Error::Numeric("no sign change on the cut circle".into()))?;
    while b - a > angle_tol {
        let m = 0.5 * (a + b);
        let gm = keys.odd_gap(m);
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    Ok(if ga.abs() <= gb.abs() { a } else { b })
}

/// Halfspace `u` on the family's circle with `F(H(u) ∩ cell) = F(H(−u) ∩ cell)`.
pub fn bisect_equal(sample: &WeightedSample, cell: &[usize], family: &CutFamily, angle_tol: f64) -> Result<Cut> {
    let n = sample.points.dim();
    let (e1, e2) = family.circle(n)?;
    let keys = CircleKeys::new(sample, cell, &e1, &e2);
    let phi = bisect_circle(&keys, angle_tol)?;
    let u: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| phi.cos() * a + phi.sin() * b).collect();
    let left = keys.inside(phi) + keys.axis_weight;
    let right = keys.inside(phi + PI) + keys.axis_weight;
    Ok(Cut { u, angle: phi, left, right, family: family.describe() })
}

/// Convenience wrapper: draw a sample and bisect the whole measure.
pub fn bisect_measure(
    measure: &MeasureModel,
    functional: &Functional,
    family: &CutFamily,
    budget: usize,
    seed: u64,
) -> Result<(Cut, WeightedSample)> {
    let s = WeightedSample::draw(measure, functional, budget, seed)?;
    let all: Vec<usize> = (0..s.points.len()).collect();
    let cut = bisect_equal(&s, &all, family, DEFAULT_ANGLE_TOL)?;
    Ok((cut, s))
}

/// Node of the dyadic tree: indices `lo..hi` of `Ω = {1, …, 2ᴺ}` (one-based, inclusive).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartitionNode {
    pub lo: usize,
    pub hi: usize,
    pub measure: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cut: Option<Cut>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<PartitionNode>,
}

/// Leaf cell: the ambient intersected with `H(u)` for each `u` on the root path.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Leaf {
    pub index: usize,
    pub halfspaces: Vec<Vec<f64>>,
    pub measure: f64,
}

impl Leaf {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|u| in_halfspace(u, x))
    }

    /// The cell as a polytope, when the ambient is polyhedral.
    pub fn polytope(&self, ambient: &HPolytope) -> Result<HPolytope> {
        let n = ambient.dim();
        let mut rows: Vec<Vec<f64>> = (0..ambient.facet_count()).map(|i| ambient.row(i)).collect();
        let mut offs = ambient.offsets().to_vec();
        for u in &self.halfspaces {
            rows.push(u[..n].iter().map(|v| -v).collect());
            offs.push(u[n]);
        }
        HPolytope::from_rows(&rows, offs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartitionTree {
    pub depth: usize,
    pub dim: usize,
    pub measure: String,
    pub functional: String,
    pub total: f64,
    pub root: PartitionNode,
    pub leaves: Vec<Leaf>,
    pub samples: u64,
    pub seed: u64,
}

impl PartitionTree {
    /// Leaf index (zero-based) of `x`, following the cuts.
    pub fn locate(&self, x: &[f64]) -> usize {
        let mut node = &self.root;
        while let Some(cut) = &node.cut {
            node = if in_halfspace(&cut.u, x) { &node.children[0] } else { &node.children[1] };
        }
        node.lo - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
}

/// Default cut family at a height: parallel cuts normal to axis `height mod n`.
pub fn axis_family(n: usize, height: usize) -> CutFamily {
    let mut a = vec![0.0; n];
    a[height % n] = 1.0;
    CutFamily::Parallel { normal: a }
}

/// `2ᴺ` convex cells of equal `F`-mass by recursive bisection. `constraints[h]`
/// fixes the cut family at height `h`; missing entries use [`axis_family`].
pub fn dyadic_equipartition(
    measure: &MeasureModel,
    functional: &Functional,
    depth: usize,
    constraints: &[Option<CutFamily>],
    budget: usize,
    seed: u64,
) -> Result<PartitionTree> {
    if depth > MAX_DEPTH {
        return Err(Error::pre(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    let n = measure.dim();
    let sample = WeightedSample::draw(measure, functional, budget, derive_seed(seed, 1))?;
    let all: Vec<usize> = (0..sample.points.len()).collect();
    let family_at = |h: usize| constraints.get(h).cloned().flatten().unwrap_or_else(|| axis_family(n, h));
    let mut leaves = Vec::new();
    let root = build_node(&sample, all, 1, 1 << depth, 0, depth, &family_at, Vec::new(), &mut leaves)?;
    leaves.sort_by_key(|l| l.index);
    Ok(PartitionTree {
        depth,
        dim: n,
        measure: measure.describe(),
        functional: functional.describe(),
        total: sample.total(),
        root,
        leaves,
        samples: budget as u64,
        seed,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_node(
    sample: &WeightedSample,
    cell: Vec<usize>,
    lo: usize,
    hi: usize,
    height: usize,
    depth: usize,
    family_at: &(dyn Fn(usize) -> CutFamily + Sync),
    path: Vec<Vec<f64>>,
    leaves: &mut Vec<Leaf>,
) -> Result<PartitionNode> {
    let measure: f64 = cell.iter().map(|&i| sample.weights[i]).sum();
    if height == depth {
        leaves.push(Leaf { index: lo, halfspaces: path, measure });
        return Ok(PartitionNode { lo, hi, measure, cut: None, children: Vec::new() });
    }
    let cut = bisect_equal(sample, &cell, &family_at(height), DEFAULT_ANGLE_TOL)
        .map_err(|e| Error::Numeric(format!("cell {lo}..{hi}: {e}")))?;
    let (left, right): (Vec<usize>, Vec<usize>) = cell.into_iter().partition(|&i| in_halfspace(&cut.u, sample.points.get(i)));
    let mid = lo + (hi - lo + 1) / 2;
    let neg: Vec<f64> = cut.u.iter().map(|v| -v).collect();
    let mut lp = path.clone();
    lp.push(cut.u.clone());
    let mut rp = path;
    rp.push(neg);
    let mut ll = Vec::new();
    let mut rl = Vec::new();
    let (a, b) = rayon::join(
        || build_node(sample, left, lo, mid - 1, height + 1, depth, family_at, lp, &mut ll),
        || build_node(sample, right, mid, hi, height + 1, depth, family_at, rp, &mut rl),
    );
    leaves.extend(ll);
    leaves.extend(rl);
    Ok(PartitionNode { lo, hi, measure, cut: Some(cut), children: vec![a?, b?] })
}

/// Leaf masses re-estimated on an independent sample.
pub fn recount(tree: &PartitionTree, measure: &MeasureModel, functional: &Functional, budget: usize, seed: u64) -> Result<Vec<MCEstimate>> {
    check_dim(tree.dim, measure.dim())?;
    let s = WeightedSample::draw(measure, functional, budget, seed)?;
    let m = tree.leaf_count();
    let (sum, sq) = s
        .points
        .par_iter()
        .zip(s.weights.par_iter())
        .fold(
            || (vec![0.0; m], vec![0.0; m]),
            |(mut a, mut b), (x, w)| {
                let j = tree.locate(x);
                a[j] += w;
                b[j] += w * w;
                (a, b)
            },
        )
        .reduce(
            || (vec![0.0; m], vec![0.0; m]),
            |(mut a, mut b), (c, d)| {
                for j in 0..m {
                    a[j] += c[j];
                    b[j] += d[j];
                }
                (a, b)
            },
        );
    let nn = budget as f64;
    Ok((0..m)
        .map(|j| {
            // per-point contributions are N·w_i·1[x_i ∈ leaf]; the mean is `sum`
            let mean = sum[j];
            let var = (nn * sq[j] - mean * mean).max(0.0);
            MCEstimate { value: mean, std_error: (var / nn).sqrt(), samples: budget as u64, seed }
        })
        .collect())
}

/// Every recounted leaf equals `total/2ᴺ` within `rel_tol` relative.
pub fn equipartition_check(tree: &PartitionTree, recounted: &[MCEstimate], rel_tol: f64) -> CheckRecord {
    let target = tree.total / tree.leaf_count() as f64;
    let dev = recounted.iter().map(|e| (e.value - target).abs() / target).fold(0.0, f64::max);
    let z = recounted
        .iter()
        .map(|e| (e.value - target).abs() / e.std_error.max(1e-300))
        .fold(0.0, f64::max);
    let seed = recounted.first().map_or(0, |e| e.seed);
    let samples = recounted.first().map_or(0, |e| e.samples);
    CheckRecord::new("equipartition", "dyadic equipartition into 2^N equal convex cells")
        .status(Status::from_bool(dev <= rel_tol))
        .quantity(Quantity { name: "max_relative_deviation".into(), value: dev, std_error: 0.0, samples, seed })
        .exact("target", target)
        .exact("max_std_errors", z)
        .tolerance("relative", rel_tol)
        .detail("leaves", &recounted.iter().map(|e| (e.value, e.std_error)).collect::<Vec<_>>())
        .detail("depth", &tree.depth)
        .detail("measure", &tree.measure)
}

/// The uniform measure on a body as a polytope-backed ambient, for cell export.
pub fn ambient_polytope(body: &ConvexBody) -> Option<HPolytope> {
    body.polyhedral()
}
