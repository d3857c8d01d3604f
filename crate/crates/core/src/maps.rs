//! Continuous maps `ℝⁿ → ℝᵏ` used as fiber sources, and their registry syntax.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::special::{normal_cdf, normal_pdf};

pub trait VectorMap: Send + Sync + Debug {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn name(&self) -> String;

    /// `k × n` Jacobian; central differences unless overridden.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim_in();
        let k = self.dim_out();
        let mut j = DMatrix::zeros(k, n);
        let mut y = x.to_vec();
        for c in 0..n {
            let h = 1e-6 * (1.0 + x[c].abs());
            y[c] = x[c] + h;
            let fp = self.eval(&y);
            y[c] = x[c] - h;
            let fm = self.eval(&y);
            y[c] = x[c];
            for r in 0..k {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    /// A global Lipschitz constant, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// `(A, c)` with `f(x) = Ax + c`, for affine maps.
    fn affine(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        None
    }

    /// Exact Euclidean distance from `x` to `f⁻¹(t)` where a closed form exists.
    fn exact_fiber_distance(&self, _x: &[f64], _t: &[f64]) -> Option<f64> {
        None
    }
}

pub type MapRef = Arc<dyn VectorMap>;

/// `x ↦ Ax + c`.
#[derive(Clone, Debug)]
pub struct Affine {
    a: DMatrix<f64>,
    c: Vec<f64>,
    label: String,
    // (AAᵀ)⁻¹ when A has full row rank
    gram_inv: Option<DMatrix<f64>>,
}

impl Affine {
    pub fn new(a: DMatrix<f64>, c: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        check_dim(a.nrows(), c.len())?;
        let gram_inv = (&a * a.transpose()).try_inverse();
        Ok(Affine { a, c, label: label.into(), gram_inv })
    }

    pub fn linear(a: DMatrix<f64>) -> Self {
        let k = a.nrows();
        Self::new(a, vec![0.0; k], "linear").expect("dimensions agree")
    }

    /// `x ↦ (x_{i₁}, …, x_{i_k})`, zero-based axes.
    pub fn axes(n: usize, axes: &[usize]) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|&i| i >= n) {
            return Err(Error::pre(format!("axes {axes:?} out of range for dimension {n}")));
        }
        let a = DMatrix::from_fn(axes.len(), n, |r, c| if axes[r] == c { 1.0 } else { 0.0 });
        let label = format!("axes{:?}", axes.iter().map(|i| i + 1).collect::<Vec<_>>());
        Self::new(a, vec![0.0; axes.len()], label)
    }

    /// `x ↦ (x₁, …, x_k)`.
    pub fn coordinate_projection(n: usize, k: usize) -> Result<Self> {
        let mut m = Self::axes(n, &(0..k).collect::<Vec<_>>())?;
        m.label = format!("coordinate_proj({k})");
        Ok(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl VectorMap for Affine {
    fn dim_in(&self) -> usize {
        self.a.ncols()
    }
    fn dim_out(&self) -> usize {
        self.a.nrows()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        linalg::add(&linalg::mat_vec(&self.a, x), &self.c)
    }
    fn name(&self) -> String {
        self.label.clone()
    }
    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.a.clone()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(linalg::op_norm(&self.a))
    }
    fn affine(&self) -> Option<(DMatrix<f64>, Vec<f64>)> {
        Some((self.a.clone(), self.c.clone()))
    }
    fn exact_fiber_distance(&self, x: &[f64], t: &[f64]) -> Option<f64> {
        let g = self.gram_inv.as_ref()?;
        let r = linalg::sub(&self.eval(x), t);
        // |A⁺r|² = rᵀ(AAᵀ)⁻¹r
        Some(linalg::dot(&r, &linalg::mat_vec(g, &r)).max(0.0).sqrt())
    }
}

/// `x ↦ |x − c|`.
#[derive(Clone, Debug)]
pub struct DistanceTo {
    pub center: Vec<f64>,
}

impl VectorMap for DistanceTo {
    fn dim_in(&self) -> usize {
        self.center.len()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec![linalg::norm(&linalg::sub(x, &self.center))]
    }
    fn name(&self) -> String {
        if self.center.iter().all(|v| *v == 0.0) {
            "radial".into()
        } else {
            format!("dist({:?})", self.center)
        }
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = linalg::sub(x, &self.center);
        let r = linalg::norm(&d).max(1e-300);
        DMatrix::from_fn(1, d.len(), |_, c| d[c] / r)
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
    fn exact_fiber_distance(&self, x: &[f64], t: &[f64]) -> Option<f64> {
        if t[0] < 0.0 {
            return Some(f64::INFINITY);
        }
        Some((self.eval(x)[0] - t[0]).abs())
    }
}

/// `x ↦ xᵀQx` for symmetric `Q`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    q: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::pre("quadratic form needs a square matrix"));
        }
        Ok(Quadratic { q: linalg::symmetrize(&q) })
    }
}

impl VectorMap for Quadratic {
    fn dim_in(&self) -> usize {
        self.q.nrows()
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec![linalg::dot(x, &linalg::mat_vec(&self.q, x))]
    }
    fn name(&self) -> String {
        format!("quadratic({:?})", crate::report::matrix_rows(&self.q))
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let g = linalg::mat_vec(&self.q, x);
        DMatrix::from_fn(1, x.len(), |_, c| 2.0 * g[c])
    }
    fn exact_fiber_distance(&self, x: &[f64], t: &[f64]) -> Option<f64> {
        // level sets of |x|² are spheres
        let n = self.q.nrows();
        if self.q != DMatrix::identity(n, n) {
            return None;
        }
        if t[0] < 0.0 {
            return Some(f64::INFINITY);
        }
        Some((linalg::norm(x) - t[0].sqrt()).abs())
    }
}

/// Constant map.
#[derive(Clone, Debug)]
pub struct Constant {
    pub dim_in: usize,
    pub value: Vec<f64>,
}

impl VectorMap for Constant {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.value.len()
    }
    fn eval(&self, _x: &[f64]) -> Vec<f64> {
        self.value.clone()
    }
    fn name(&self) -> String {
        format!("const({:?})", self.value)
    }
    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(self.value.len(), self.dim_in)
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn exact_fiber_distance(&self, _x: &[f64], t: &[f64]) -> Option<f64> {
        Some(if self.value == t { 0.0 } else { f64::INFINITY })
    }
}

/// One monomial `coef · ∏ x_i^{e_i}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

/// Polynomial map; one list of terms per output coordinate.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Polynomial {
    pub dim: usize,
    pub outputs: Vec<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Polynomial {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.outputs.is_empty() {
            return Err(Error::Parse("polynomial needs a dimension and at least one output".into()));
        }
        for (i, out) in self.outputs.iter().enumerate() {
            for t in out {
                if t.exponents.len() != self.dim || !t.coef.is_finite() {
                    return Err(Error::Parse(format!("output {i}: term exponents must have length {}", self.dim)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Polynomial = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

impl VectorMap for Polynomial {
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn dim_out(&self) -> usize {
        self.outputs.len()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.outputs
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| t.coef * x.iter().zip(&t.exponents).map(|(v, e)| v.powi(*e as i32)).product::<f64>())
                    .sum()
            })
            .collect()
    }
    fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "polynomial".into())
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(self.outputs.len(), n, |r, c| {
            self.outputs[r]
                .iter()
                .filter(|t| t.exponents[c] > 0)
                .map(|t| {
                    let e = t.exponents[c];
                    let mut p = t.coef * e as f64 * x[c].powi(e as i32 - 1);
                    for (i, (v, ei)) in x.iter().zip(&t.exponents).enumerate() {
                        if i != c {
                            p *= v.powi(*ei as i32);
                        }
                    }
                    p
                })
                .sum()
        })
    }
}

/// `x ↦ (Φ(x₁), …, Φ(x_n))`, pushing `γ_n` forward to the uniform measure on `(0,1)ⁿ`.
pub fn gaussian_transport(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| normal_cdf(*v)).collect()
}

pub fn gaussian_transport_inverse(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| crate::special::normal_quantile(*v)).collect()
}

/// `f ∘ G` with `G` the coordinatewise normal CDF.
#[derive(Clone, Debug)]
pub struct AfterGaussianTransport(pub MapRef);

impl VectorMap for AfterGaussianTransport {
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.0.dim_out()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.eval(&gaussian_transport(x))
    }
    fn name(&self) -> String {
        format!("{}∘Φ", self.0.name())
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = self.0.jacobian(&gaussian_transport(x));
        for c in 0..x.len() {
            let d = normal_pdf(x[c]);
            for r in 0..j.nrows() {
                j[(r, c)] *= d;
            }
        }
        j
    }
    fn lipschitz(&self) -> Option<f64> {
        self.0.lipschitz().map(|l| l / (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// `x ↦ f(x/λ)`, the matched map on a dilated body.
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub inner: MapRef,
    pub factor: f64,
}

impl VectorMap for Rescaled {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.inner.dim_out()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.inner.eval(&linalg::scale(x, 1.0 / self.factor))
    }
    fn name(&self) -> String {
        format!("{}(·/{})", self.inner.name(), self.factor)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.inner.jacobian(&linalg::scale(x, 1.0 / self.factor)) / self.factor
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz().map(|l| l / self.factor)
    }
    fn exact_fiber_distance(&self, x: &[f64], t: &[f64]) -> Option<f64> {
        self.inner.exact_fiber_distance(&linalg::scale(x, 1.0 / self.factor), t).map(|d| d * self.factor)
    }
}

/// `x ↦ f(x − v)`, the matched map on a translated body.
#[derive(Clone, Debug)]
pub struct Shifted {
    pub inner: MapRef,
    pub shift: Vec<f64>,
}

impl VectorMap for Shifted {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.inner.dim_out()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.inner.eval(&linalg::sub(x, &self.shift))
    }
    fn name(&self) -> String {
        format!("{}(· − {:?})", self.inner.name(), self.shift)
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.inner.jacobian(&linalg::sub(x, &self.shift))
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }
    fn exact_fiber_distance(&self, x: &[f64], t: &[f64]) -> Option<f64> {
        self.inner.exact_fiber_distance(&linalg::sub(x, &self.shift), t)
    }
}

/// A map given by a closure.
pub struct FnMap {
    dim_in: usize,
    dim_out: usize,
    label: String,
    f: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl Debug for FnMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnMap({})", self.label)
    }
}

impl FnMap {
    pub fn new(dim_in: usize, dim_out: usize, label: impl Into<String>, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        FnMap { dim_in, dim_out, label: label.into(), f: Arc::new(f) }
    }
}

impl VectorMap for FnMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
    fn name(&self) -> String {
        self.label.clone()
    }
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.starts_with('[') {
        return Ok(serde_json::from_str(s)?);
    }
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number {v:?}: {e}")))).collect()
}

fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(s.trim())?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("matrix must be a non-empty rectangular list of rows".into()));
    }
    Ok(DMatrix::from_row_slice(rows.len(), cols, &rows.concat()))
}

/// Parses a map id for maps on `ℝⁿ`:
///
/// - `coord:k` or `coordinate_proj(k)`: `(x₁, …, x_k)`
/// - `axes:i,j,…`: the listed coordinates, one-based
/// - `linear:[[…],…]` or `linear([[…],…])`: a matrix
/// - `radial`: `|x|`; `dist:c₁,…,c_n`: `|x − c|`
/// - `sqnorm`: `|x|²`; `quadratic:[[…]]` or `quadratic([[…]])`: `xᵀQx`
/// - `const:v₁,…`: a constant map
/// - `poly:<path>`: polynomial coefficient file
pub fn parse_map(id: &str, n: usize) -> Result<MapRef> {
    let id = id.trim();
    let (head, arg) = if let Some((h, a)) = id.split_once(':') {
        (h, Some(a.to_string()))
    } else if let (Some(i), true) = (id.find('('), id.ends_with(')')) {
        (&id[..i], Some(id[i + 1..id.len() - 1].to_string()))
    } else {
        (id, None)
    };
    let need = |a: &Option<String>| a.clone().ok_or_else(|| Error::Parse(format!("map {head:?} needs an argument")));
    let m: MapRef = match head {
        "coord" | "coordinate_proj" => {
            let k: usize = need(&arg)?.trim().parse().map_err(|_| Error::Parse("coord needs an integer".into()))?;
            if k == 0 || k > n {
                return Err(Error::Parse(format!("coordinate projection to {k} coordinates in dimension {n}")));
            }
            Arc::new(Affine::coordinate_projection(n, k)?)
        }
        "axes" => {
            let ax: Vec<usize> = need(&arg)?
                .split(',')
                .map(|v| v.trim().parse::<usize>().ok().filter(|i| *i >= 1).map(|i| i - 1))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Parse("axes are one-based integers".into()))?;
            Arc::new(Affine::axes(n, &ax).map_err(|e| Error::Parse(e.to_string()))?)
        }
        "linear" => {
            let a = parse_matrix(&need(&arg)?)?;
            if a.ncols() != n {
                return Err(Error::Parse(format!("linear map has {} columns, body dimension is {n}", a.ncols())));
            }
            Arc::new(Affine::linear(a))
        }
        "radial" => Arc::new(DistanceTo { center: vec![0.0; n] }),
        "dist" => {
            let c = parse_vec(&need(&arg)?)?;
            if c.len() != n {
                return Err(Error::Parse(format!("center has {} coordinates, body dimension is {n}", c.len())));
            }
            Arc::new(DistanceTo { center: c })
        }
        "sqnorm" => Arc::new(Quadratic::new(DMatrix::identity(n, n))?),
        "quadratic" => {
            let q = parse_matrix(&need(&arg)?)?;
            if q.nrows() != n {
                return Err(Error::Parse(format!("quadratic form has size {}, body dimension is {n}", q.nrows())));
            }
            Arc::new(Quadratic::new(q).map_err(|e| Error::Parse(e.to_string()))?)
        }
        "const" => Arc::new(Constant { dim_in: n, value: parse_vec(&need(&arg)?)? }),
        "poly" => {
            let path = need(&arg)?;
            let text = std::fs::read_to_string(&path)?;
            let p = Polynomial::from_json(&text)?;
            if p.dim != n {
                return Err(Error::Parse(format!("polynomial has dimension {}, body dimension is {n}", p.dim)));
            }
            Arc::new(p)
        }
        _ => return Err(Error::Parse(format!("unknown map {id:?}"))),
    };
    Ok(m)
}
