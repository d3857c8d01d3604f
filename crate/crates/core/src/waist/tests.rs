use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use super::*;
use crate::maps::{Affine, Constant, DistanceTo, FnMap, Quadratic, Shifted};
use crate::report::Status;
use crate::special::{gaussian_ball_measure, normal_cdf};

fn mc(budget: usize) -> Integration {
    Integration::MonteCarlo { budget }
}

fn content(map: MapRef, t: Vec<f64>, body: ConvexBody, budget: usize, seed: u64) -> ContentEstimate {
    let fiber = FiberSpec::new(map, t).unwrap();
    minkowski_content(&fiber, &Ambient::Body(body), &DEFAULT_EPS, mc(budget), seed).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn cube_coordinate_fiber_has_unit_area() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(3, 1).unwrap());
    let c = content(m, vec![0.5], ConvexBody::cube(3).unwrap(), 300_000, 1);
    assert!(rel(c.value, 1.0) < 0.05, "{c:?}");
    assert!(!c.empty);
    assert_eq!(c.per_eps.len(), 3);
}

#[test]
fn square_diagonal_fiber_length() {
    let m: MapRef = Arc::new(Affine::linear(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])));
    let c = content(m, vec![1.0], ConvexBody::cube(2).unwrap(), 300_000, 2);
    assert!(rel(c.value, 2f64.sqrt()) < 0.05, "{}", c.value);
}

#[test]
fn circle_in_ball_has_circumference() {
    let m: MapRef = Arc::new(DistanceTo { center: vec![0.0, 0.0] });
    let c = content(m, vec![1.0], ConvexBody::ball(2, 2.0).unwrap(), 300_000, 3);
    assert!(rel(c.value, 2.0 * PI) < 0.05, "{}", c.value);
}

#[test]
fn nonlinear_fiber_via_projection() {
    // |x|² = 1 through the generic Gauss-Newton path
    let m: MapRef = Arc::new(FnMap::new(2, 1, "sq", |x| vec![x[0] * x[0] + x[1] * x[1]]));
    let c = content(m, vec![1.0], ConvexBody::ball(2, 2.0).unwrap(), 100_000, 4);
    assert!(rel(c.value, 2.0 * PI) < 0.05, "{}", c.value);
}

#[test]
fn empty_fiber_is_flagged() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let c = content(m, vec![5.0], ConvexBody::cube(2).unwrap(), 20_000, 5);
    assert!(c.empty);
    assert_eq!(c.value, 0.0);
}

#[test]
fn schedule_is_validated() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let f = FiberSpec::new(m.clone(), vec![0.5]).unwrap();
    let amb = Ambient::Body(ConvexBody::cube(2).unwrap());
    assert!(minkowski_content(&f, &amb, &[0.1, 0.2], mc(100), 0).is_err());
    assert!(minkowski_content(&f, &amb, &[], mc(100), 0).is_err());
    let coarse = FiberSpec::with_tolerance(m, vec![0.5], 0.01).unwrap();
    assert!(minkowski_content(&coarse, &amb, &[0.2, 0.05], mc(100), 0).is_err());
}

#[test]
fn fiber_spec_preconditions() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    assert!(FiberSpec::with_tolerance(m.clone(), vec![0.0], 0.0).is_err());
    assert!(FiberSpec::new(m, vec![0.0, 0.0]).is_err());
}

#[test]
fn grid_integration_matches_exact_strip() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let f = FiberSpec::new(m, vec![0.5]).unwrap();
    let c = minkowski_content(&f, &Ambient::Body(ConvexBody::cube(2).unwrap()), &DEFAULT_EPS, Integration::Grid { resolution: 400 }, 0).unwrap();
    assert!(rel(c.value, 1.0) < 1e-2, "{}", c.value);
}

#[test]
fn box_slice_converges_per_eps() {
    // exact strip: every ratio equals the slice volume
    let m: MapRef = Arc::new(Affine::axes(3, &[2]).unwrap());
    let body = ConvexBody::aligned_box(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap();
    let c = content(m, vec![1.5], body, 400_000, 6);
    for e in &c.per_eps {
        assert!((e.value - 2.0).abs() < 4.0 * e.std_error + 1e-9, "{e:?}");
    }
    assert!(rel(c.value, 2.0) < 0.05);
}

#[test]
fn tube_measure_monotone_in_radius() {
    let m: MapRef = Arc::new(Quadratic::new(DMatrix::identity(3, 3)).unwrap());
    let s = TubeSampler::new(Ambient::Measure(MeasureModel::gaussian(3)), mc(20_000), 7).unwrap();
    let radii: Vec<f64> = (1..=12).map(|i| i as f64 * 0.2).collect();
    let tubes = s.tube_measures(&FiberSpec::new(m, vec![2.0]).unwrap(), &radii).unwrap();
    for w in tubes.windows(2) {
        assert!(w[1].value >= w[0].value);
    }
}

#[test]
fn translation_invariance_is_exact_for_paired_seeds() {
    let v = vec![0.3, -1.2];
    let m: MapRef = Arc::new(DistanceTo { center: vec![0.0, 0.0] });
    let shifted: MapRef = Arc::new(Shifted { inner: m.clone(), shift: v.clone() });
    let body = ConvexBody::ball(2, 2.0).unwrap();
    let a = content(m, vec![1.0], body.clone(), 50_000, 8);
    let b = content(shifted, vec![1.0], body.translate(v).unwrap(), 50_000, 8);
    assert!((a.value - b.value).abs() < 1e-9 * a.value, "{} {}", a.value, b.value);
}

#[test]
fn scaling_law() {
    let lam = 2.5;
    let m: MapRef = Arc::new(Affine::linear(DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0])));
    let body = ConvexBody::cuboid(vec![1.0; 3]).unwrap();
    let eps: Vec<f64> = DEFAULT_EPS.to_vec();
    let fa = FiberSpec::new(m.clone(), vec![0.2]).unwrap();
    let fb = FiberSpec::new(m, vec![0.2 * lam]).unwrap();
    let a = minkowski_content(&fa, &Ambient::Body(body.clone()), &eps, mc(200_000), 9).unwrap();
    let le: Vec<f64> = eps.iter().map(|e| e * lam).collect();
    let b = minkowski_content(&fb, &Ambient::Body(body.scaled(lam).unwrap()), &le, mc(200_000), 9).unwrap();
    assert!(rel(b.value, lam * lam * a.value) < 0.02, "{} {}", b.value, a.value);
}

#[test]
fn gaussian_linear_equality() {
    let theta = crate::linalg::normalized(&[1.0, 2.0, -2.0]);
    let m: MapRef = Arc::new(Affine::linear(DMatrix::from_row_slice(1, 3, &theta)));
    let cert = gaussian_waist_check(&m, Some(vec![vec![0.0]]), &DEFAULT_R_GRID, mc(200_000), 10).unwrap();
    assert!(cert.witness_found);
    for (r, v, se, b) in &cert.radii {
        assert!((b - (2.0 * normal_cdf(*r) - 1.0)).abs() < 1e-10, "{}", b - (2.0 * normal_cdf(*r) - 1.0));
        assert!((v - b).abs() <= 3.0 * se, "r={r} {v} {b}");
    }
}

#[test]
fn gaussian_two_coordinates_equality() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(3, 2).unwrap());
    let cert = gaussian_waist_check(&m, Some(vec![vec![0.0, 0.0]]), &DEFAULT_R_GRID, mc(200_000), 11).unwrap();
    for (r, v, se, b) in &cert.radii {
        assert!((b - (1.0 - (-r * r / 2.0).exp())).abs() < 1e-12);
        assert!((v - b).abs() <= 3.0 * se);
    }
}

#[test]
fn gaussian_constant_map_passes() {
    let m: MapRef = Arc::new(Constant { dim_in: 3, value: vec![1.0] });
    let cert = gaussian_waist_check(&m, Some(vec![vec![1.0]]), &DEFAULT_R_GRID, mc(5_000), 12).unwrap();
    assert_eq!(cert.status, Status::Pass);
    assert!(cert.radii.iter().all(|r| r.1 == 1.0));
}

#[test]
fn gaussian_squared_norm_finds_witness() {
    let m: MapRef = Arc::new(Quadratic::new(DMatrix::identity(3, 3)).unwrap());
    let cert = gaussian_waist_check(&m, None, &DEFAULT_R_GRID, mc(100_000), 13).unwrap();
    assert!(cert.witness_found, "{:?}", cert.levels);
    for (r, _, _, b) in &cert.radii {
        assert_eq!(*b, gaussian_ball_measure(1, *r));
    }
}

#[test]
fn cube_check_linear_and_conjugate() {
    let m: MapRef = Arc::new(Affine::coordinate_projection(3, 1).unwrap());
    let opts = SearchOptions { integration: mc(200_000), seed: 14, ..Default::default() };
    let cert = cube_waist_check(&m, &opts, Some(&DEFAULT_R_GRID)).unwrap();
    assert_eq!(cert.status, Status::Pass, "{}", cert.value);
    let conj = cert.conjugate.as_ref().unwrap();
    assert!(conj.witness_found);
    assert_eq!(cert.to_checks("cube").len(), 2);
}

#[test]
fn cube_check_square_map() {
    // fiber {x₁ = √t} has length 1 for every t in (0,1)
    let m: MapRef = Arc::new(FnMap::new(2, 1, "x1^2", |x| vec![x[0] * x[0]]));
    let opts = SearchOptions { integration: mc(100_000), seed: 15, ..Default::default() };
    let cert = cube_waist_check(&m, &opts, None).unwrap();
    assert_eq!(cert.status, Status::Pass, "{}", cert.value);
}

/// Length of the circle |x − c| = ρ inside the unit square, by angular quadrature.
fn arc_in_square(c: [f64; 2], rho: f64) -> f64 {
    let m = 200_000;
    let inside = (0..m)
        .filter(|i| {
            let a = 2.0 * PI * (*i as f64 + 0.5) / m as f64;
            let p = [c[0] + rho * a.cos(), c[1] + rho * a.sin()];
            p.iter().all(|v| (0.0..=1.0).contains(v))
        })
        .count();
    2.0 * PI * rho * inside as f64 / m as f64
}

#[test]
fn cube_check_circle_arcs() {
    let c = [0.3, 0.4];
    let best = (1..100).map(|i| arc_in_square(c, i as f64 * 0.01)).fold(0.0, f64::max);
    assert!(best >= 1.0);
    let m: MapRef = Arc::new(DistanceTo { center: c.to_vec() });
    let opts = SearchOptions { integration: mc(100_000), seed: 16, ..Default::default() };
    let cert = cube_waist_check(&m, &opts, None).unwrap();
    assert_eq!(cert.status, Status::Pass);
    let oracle = arc_in_square(c, cert.best_t[0]);
    assert!(rel(cert.value, oracle) < 0.05, "{} vs {oracle}", cert.value);
}

#[test]
fn box_check_examples() {
    let opts = SearchOptions { integration: mc(200_000), seed: 17, ..Default::default() };
    for (sides, axis, bound) in [(vec![1.0, 2.0], 1, 1.0), (vec![0.5, 3.0], 1, 0.5), (vec![1.0, 1.0, 4.0], 2, 1.0)] {
        let m: MapRef = Arc::new(Affine::axes(sides.len(), &[axis]).unwrap());
        let cert = box_waist_check(&sides, &m, &opts).unwrap();
        assert!((cert.bound - bound).abs() < 1e-12);
        assert_eq!(cert.status, Status::Pass, "{sides:?}: {}", cert.value);
        assert!(rel(cert.value, bound) < 0.05);
    }
}

#[test]
fn section_theorem_examples() {
    let opts = SearchOptions { integration: mc(100_000), seed: 18, ..Default::default() };
    let x1: MapRef = Arc::new(Affine::coordinate_projection(3, 1).unwrap());
    let cert = section_theorem_check(&ConvexBody::cube(3).unwrap(), &x1, 32, &opts).unwrap();
    assert_eq!(cert.status, Status::Pass);
    // vertex chords include the main diagonal
    assert!((cert.radii[0].1 - 3f64.sqrt()).abs() < 1e-9);
    let x1: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let cert = section_theorem_check(&ConvexBody::ball(2, 1.0).unwrap(), &x1, 32, &opts).unwrap();
    assert_eq!(cert.status, Status::Pass);
    assert!(rel(cert.value, 4.0) < 0.05, "{}", cert.value);
    let k: MapRef = Arc::new(Constant { dim_in: 2, value: vec![0.0] });
    assert!(section_theorem_check(&ConvexBody::ball(2, 1.0).unwrap(), &k, 4, &opts).is_err());
}

/// Area of `{x ∈ disk : |x₁| ≤ h}`.
fn disk_slab(h: f64) -> f64 {
    let h = h.min(1.0);
    2.0 * (h * (1.0 - h * h).sqrt() + h.asin())
}

#[test]
fn symmetric_disk_slab() {
    let disk = ConvexBody::ball(2, 1.0).unwrap();
    let m: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let rs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let cert = symmetric_body_waist_check(&disk, &MeasureModel::uniform(disk.clone()), &m, Some(vec![vec![0.0]]), &rs, 100_000, 19).unwrap();
    assert!(cert.witness_found);
    for (r, v, se, b) in &cert.radii {
        // (x + rK) ∩ K meets {x₁ = 0} iff |x₁| ≤ r
        let oracle = disk_slab(*r) / PI;
        assert!((v - oracle).abs() < 4.0 * se + 1e-3, "r={r} {v} {oracle}");
        assert!(oracle >= *b);
    }
}

#[test]
fn symmetric_constant_and_square() {
    let sq = ConvexBody::cuboid(vec![1.0, 1.0]).unwrap();
    let mu = MeasureModel::uniform(sq.clone());
    let rs = [0.1, 0.5, 0.9];
    let k: MapRef = Arc::new(Constant { dim_in: 2, value: vec![2.0, 3.0] });
    let cert = symmetric_body_waist_check(&sq, &mu, &k, None, &rs, 1000, 20).unwrap();
    assert_eq!(cert.status, Status::Pass);
    let m: MapRef = Arc::new(Affine::linear(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])));
    let cert = symmetric_body_waist_check(&sq, &mu, &m, None, &rs, 50_000, 21).unwrap();
    assert!(cert.witness_found);
    // exact: {x : |x₁ + x₂| ≤ 2r} has area 4 − (2 − 2r)²
    for (r, v, se, _) in &cert.radii {
        if cert.best_t[0] == 0.0 {
            let oracle = (4.0 - (2.0 - 2.0 * r).powi(2)) / 4.0;
            assert!((v - oracle).abs() < 4.0 * se + 1e-3);
        }
    }
    assert!(symmetric_body_waist_check(&sq.clone().translate(vec![0.5, 0.0]).unwrap(), &mu, &m, None, &rs, 10, 0).is_err());
}

#[test]
fn lens_support_matches_generic_intersection() {
    let b = ConvexBody::ball(3, 1.5).unwrap();
    let x = vec![0.4, -0.7, 0.2];
    for u in [[1.0, 0.0, 0.0], [0.3, 0.9, -0.1], [-1.0, -1.0, 1.0]] {
        let lens = checks_lens(&b, &x, 0.5, &u);
        let generic = ConvexBody::intersection(vec![b.clone(), ConvexBody::ball(3, 0.75).unwrap().translate(x.clone()).unwrap()])
            .unwrap()
            .support(&u)
            .unwrap();
        assert!((lens - generic).abs() < 1e-6, "{lens} {generic}");
    }
}

fn checks_lens(b: &ConvexBody, x: &[f64], r: f64, u: &[f64]) -> f64 {
    // affine maps take the exact route
    let m: MapRef = Arc::new(Affine::linear(DMatrix::from_row_slice(1, 3, u)));
    super::checks::lens_range_for_tests(b, &m, x, r).1
}

#[test]
fn upper_bound_examples() {
    let opts = SearchOptions { integration: mc(100_000), seed: 22, ..Default::default() };
    let p: MapRef = Arc::new(Affine::coordinate_projection(3, 1).unwrap());
    let w = waist_upper_bound(&ConvexBody::cube(3).unwrap(), &[p], &opts).unwrap();
    assert_eq!(w.ell, 2);
    assert!(rel(w.value, 1.0) < 0.05, "{w:?}");
    let x1: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let w = waist_upper_bound(&ConvexBody::ball(2, 1.0).unwrap(), &[x1.clone()], &opts).unwrap();
    assert!(rel(w.value, 2.0) < 0.05, "{}", w.value);
    let (a, b) = homogeneity_probe(&ConvexBody::ball(2, 1.0).unwrap(), &[x1], 3.0, &opts).unwrap();
    assert!(rel(b.value, 3.0 * a.value) < 0.02, "{} {}", a.value, b.value);
}

#[test]
fn projection_and_section_monotonicity() {
    let opts = SearchOptions { integration: mc(100_000), seed: 23, ..Default::default() };
    let body = ConvexBody::cuboid(vec![1.0, 0.5, 0.8]).unwrap();
    let f: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
    let rec = projection_monotonicity_check(&body, &[0, 1], &f, &opts).unwrap();
    assert!(rec.passed(), "{rec:?}");
    let rec = section_monotonicity_check(&body, &[0, 1], &f, &opts).unwrap();
    assert!(rec.passed(), "{rec:?}");
}

#[test]
fn polygon_projection_hull() {
    let p = ConvexBody::simplex(3).unwrap();
    let proj = coordinate_projection_body(&p, &[0, 1]).unwrap();
    assert!((proj.exact_volume().unwrap() - 0.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn affine_distance_agrees_with_projection(x in prop::collection::vec(-2.0..2.0f64, 3), t in -1.0..1.0f64) {
        let a = DMatrix::from_row_slice(1, 3, &[0.5, -1.0, 2.0]);
        let exact = FiberSpec::new(Arc::new(Affine::linear(a.clone())), vec![t]).unwrap();
        let generic = FiberSpec::new(Arc::new(FnMap::new(3, 1, "lin", move |x| vec![0.5 * x[0] - x[1] + 2.0 * x[2]])), vec![t]).unwrap();
        let d1 = exact.distance(&x, 10.0);
        let d2 = generic.distance(&x, 10.0);
        prop_assert!((d1 - d2).abs() < 1e-6 * (1.0 + d1));
    }

    #[test]
    fn content_is_deterministic(seed in 0u64..1000) {
        let m: MapRef = Arc::new(Affine::coordinate_projection(2, 1).unwrap());
        let a = content(m.clone(), vec![0.5], ConvexBody::cube(2).unwrap(), 2000, seed);
        let b = content(m, vec![0.5], ConvexBody::cube(2).unwrap(), 2000, seed);
        prop_assert_eq!(a.value, b.value);
    }
}
