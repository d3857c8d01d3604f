//! Body description files and builtin body names.
//!
//! A body file is a JSON document `{"dim": n, "kind": ..., "params": {...}, "name": ...}`.
//! Numbers are written in shortest round-trip form, so reading and writing a
//! file reproduces it byte for byte. The schema is documented in `docs/body-files.md`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;

use super::{ConvexBody, HPolytope, Kind, RadialFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Shape {
    Ball { radius: f64 },
    Box { half_widths: Vec<f64> },
    HPolytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    Ellipsoid { matrix: Vec<Vec<f64>>, center: Vec<f64> },
    Intersection { bodies: Vec<BodyDesc> },
    LinearImage { body: Box<BodyDesc>, matrix: Vec<Vec<f64>> },
    Translate { body: Box<BodyDesc>, vector: Vec<f64> },
    RadialTable { directions: Vec<Vec<f64>>, radii: Vec<f64>, bounding_radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyDesc {
    pub dim: usize,
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("expected a {n}×{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

impl BodyDesc {
    pub fn from_body(body: &ConvexBody) -> BodyDesc {
        let shape = match body.kind() {
            Kind::Ball { radius } => Shape::Ball { radius: *radius },
            Kind::Box { half_widths } => Shape::Box { half_widths: half_widths.clone() },
            Kind::HPolytope(p) => Shape::HPolytope { normals: rows(p.normals()), offsets: p.offsets().to_vec() },
            Kind::Ellipsoid { q, center, .. } => Shape::Ellipsoid { matrix: rows(q), center: center.clone() },
            Kind::Intersection { parts, .. } => Shape::Intersection { bodies: parts.iter().map(BodyDesc::from_body).collect() },
            Kind::LinearImage { body, a, .. } => {
                Shape::LinearImage { body: Box::new(BodyDesc::from_body(body)), matrix: rows(a) }
            }
            Kind::Translate { body, v } => Shape::Translate { body: Box::new(BodyDesc::from_body(body)), vector: v.clone() },
            Kind::Radial(f) => {
                let (directions, radii) = f.table().into_iter().unzip();
                Shape::RadialTable { directions, radii, bounding_radius: f.bounding_radius() }
            }
        };
        BodyDesc { dim: body.dim(), shape, name: body.name().map(str::to_owned) }
    }

    pub fn to_body(&self) -> Result<ConvexBody> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parse("dim must be positive".into()));
        }
        let body = match &self.shape {
            Shape::Ball { radius } => ConvexBody::ball(n, *radius)?,
            Shape::Box { half_widths } => {
                check_dim(n, half_widths.len())?;
                ConvexBody::cuboid(half_widths.clone())?
            }
            Shape::HPolytope { normals, offsets } => {
                if normals.iter().any(|r| r.len() != n) {
                    return Err(Error::Parse(format!("normals must have length {n}")));
                }
                ConvexBody::h_polytope(HPolytope::from_rows(normals, offsets.clone())?)?
            }
            Shape::Ellipsoid { matrix: m, center } => {
                check_dim(n, center.len())?;
                ConvexBody::ellipsoid(matrix(m, n)?, center.clone())?
            }
            Shape::Intersection { bodies } => {
                ConvexBody::intersection(bodies.iter().map(BodyDesc::to_body).collect::<Result<_>>()?)?
            }
            Shape::LinearImage { body, matrix: m } => body.to_body()?.linear_image(matrix(m, n)?)?,
            Shape::Translate { body, vector } => body.to_body()?.translate(vector.clone())?,
            Shape::RadialTable { directions, radii, bounding_radius } => {
                let t = TabulatedRadial::new(n, directions.clone(), radii.clone(), *bounding_radius)?;
                ConvexBody::radial(Arc::new(t))?
            }
        };
        let body = match &self.name {
            Some(name) => body.with_name(name.clone()),
            None => body,
        };
        check_dim(n, body.dim())?;
        Ok(body)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("body descriptions always serialize")
    }

    pub fn from_json(text: &str) -> Result<BodyDesc> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("malformed body file: {e}")))
    }
}

/// Radial function known only on a table of directions.
///
/// Off-table directions use linear interpolation in angle for `n = 2` and the
/// nearest tabulated direction otherwise.
#[derive(Clone, Debug)]
pub struct TabulatedRadial {
    dim: usize,
    directions: Vec<Vec<f64>>,
    radii: Vec<f64>,
    bounding_radius: f64,
    angles: Vec<(f64, f64)>,
}

impl TabulatedRadial {
    pub fn new(dim: usize, directions: Vec<Vec<f64>>, radii: Vec<f64>, bounding_radius: f64) -> Result<Self> {
        if directions.len() != radii.len() || directions.is_empty() {
            return Err(Error::Parse("radial table needs matching, nonempty directions and radii".into()));
        }
        if directions.iter().any(|d| d.len() != dim) {
            return Err(Error::Parse(format!("radial table directions must have length {dim}")));
        }
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Parse("radii must be positive".into()));
        }
        let mut angles: Vec<(f64, f64)> = Vec::new();
        if dim == 2 {
            angles = directions.iter().zip(&radii).map(|(d, r)| (d[1].atan2(d[0]), *r)).collect();
            angles.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Ok(TabulatedRadial { dim, directions, radii, bounding_radius, angles })
    }
}

impl RadialFunction for TabulatedRadial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn radius(&self, theta: &[f64]) -> f64 {
        if self.dim == 2 && self.angles.len() >= 2 {
            let a = theta[1].atan2(theta[0]);
            let k = self.angles.partition_point(|p| p.0 <= a);
            let tau = std::f64::consts::TAU;
            let (lo, hi) = if k == 0 || k == self.angles.len() {
                let last = self.angles[self.angles.len() - 1];
                let first = self.angles[0];
                ((last.0 - tau, last.1), first)
            } else {
                (self.angles[k - 1], self.angles[k])
            };
            let mut a = a;
            if a < lo.0 {
                a += tau;
            }
            if a > hi.0 {
                a -= tau;
            }
            let w = if hi.0 > lo.0 { (a - lo.0) / (hi.0 - lo.0) } else { 0.0 };
            return lo.1 + w * (hi.1 - lo.1);
        }
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, d) in self.directions.iter().enumerate() {
            let c = linalg::dot(d, theta);
            if c > best.0 {
                best = (c, i);
            }
        }
        self.radii[best.1]
    }

    fn table(&self) -> Vec<(Vec<f64>, f64)> {
        self.directions.iter().cloned().zip(self.radii.iter().copied()).collect()
    }

    fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }
}

/// Parse a builtin body name: `cubeN` (`[0,1]ⁿ`), `ballN` or `ballN(r)`,
/// `boxN(λ₁,…,λ_n)` (`∏ [0, λ_i]`), `simplexN` (`conv{0, e_i}`).
pub fn parse_builtin(spec: &str) -> Result<ConvexBody> {
    let spec = spec.trim();
    let (head, args) = match spec.find('(') {
        Some(i) => {
            let inner = spec[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in '{spec}'")))?;
            let vals = inner
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' in '{spec}'"))))
                .collect::<Result<Vec<f64>>>()?;
            (&spec[..i], vals)
        }
        None => (spec, Vec::new()),
    };
    let split = head.find(|c: char| c.is_ascii_digit()).ok_or_else(|| Error::Parse(format!("unknown body '{spec}'")))?;
    let (family, dim) = head.split_at(split);
    let n: usize = dim.parse().map_err(|_| Error::Parse(format!("bad dimension in '{spec}'")))?;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let body = match (family, args.len()) {
        ("cube", 0) => ConvexBody::cube(n)?,
        ("simplex", 0) => ConvexBody::simplex(n)?,
        ("ball", 0) => ConvexBody::ball(n, 1.0)?,
        ("ball", 1) => ConvexBody::ball(n, args[0])?,
        ("box", k) if k == n => ConvexBody::aligned_box(&vec![0.0; n], &args)?,
        _ => return Err(Error::Parse(format!("unknown body '{spec}'"))),
    };
    Ok(body.with_name(spec))
}

/// A builtin name or a path to a body file.
pub fn load_body(spec: &str) -> Result<ConvexBody> {
    match parse_builtin(spec) {
        Ok(b) => Ok(b),
        Err(parse_err) => {
            let path = std::path::Path::new(spec);
            if path.exists() {
                BodyDesc::from_json(&std::fs::read_to_string(path)?)?.to_body()
            } else {
                Err(parse_err)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        let c = parse_builtin("cube3").unwrap();
        assert!(c.contains(&[0.5, 0.9, 0.1]) && !c.contains(&[-0.1, 0.5, 0.5]));
        let b = parse_builtin("ball2(2.5)").unwrap();
        assert!(b.contains(&[2.4, 0.0]));
        let bx = parse_builtin("box3(1,2,3)").unwrap();
        assert!((bx.exact_volume().unwrap() - 6.0).abs() < 1e-12);
        assert!(parse_builtin("box3(1,2)").is_err());
        assert!(parse_builtin("torus3").is_err());
        assert!((parse_builtin("simplex3").unwrap().exact_volume().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn nested_roundtrip_is_bit_exact() {
        let inner = ConvexBody::cuboid(vec![0.1, 1.0 / 3.0]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.7, std::f64::consts::E]);
        let body = ConvexBody::intersection(vec![
            inner.linear_image(a).unwrap().translate(vec![1e-17, -0.3]).unwrap(),
            ConvexBody::ball(2, 0.9).unwrap(),
        ])
        .unwrap()
        .with_name("demo");
        let text = BodyDesc::from_body(&body).to_json();
        let back = BodyDesc::from_json(&text).unwrap().to_body().unwrap();
        assert_eq!(BodyDesc::from_body(&back).to_json(), text);
        assert!(text.contains("\"kind\": \"intersection\""));
    }

    #[test]
    fn malformed_file_is_parse_error() {
        assert!(matches!(BodyDesc::from_json("{\"dim\": 2, \"kind\": \"blob\"}"), Err(Error::Parse(_))));
        let d = BodyDesc { dim: 3, shape: Shape::Box { half_widths: vec![1.0] }, name: None };
        assert!(d.to_body().is_err());
    }

    #[test]
    fn tabulated_circle_interpolates() {
        let dirs: Vec<Vec<f64>> = (0..64)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 64.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let t = TabulatedRadial::new(2, dirs, vec![1.5; 64], 1.5).unwrap();
        assert!((t.radius(&[0.6, -0.8]) - 1.5).abs() < 1e-12);
    }
}
