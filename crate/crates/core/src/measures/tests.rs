use super::*;
use crate::bodies::ConvexBody;
use proptest::prelude::*;

fn unit_box(n: usize) -> ConvexBody {
    ConvexBody::cuboid(vec![1.0; n]).unwrap()
}

#[test]
fn gaussian_mean_in_clt_band() {
    let pts = MeasureModel::gaussian(2).sample(100_000, 3).unwrap();
    let m = pts.mean();
    for v in m {
        assert!(v.abs() < 3.3 / 100_000f64.sqrt());
    }
}

#[test]
fn uniform_samples_stay_inside() {
    let cube = ConvexBody::cube(2).unwrap();
    let pts = MeasureModel::uniform(cube.clone()).sample(20_000, 1).unwrap();
    assert!(pts.iter().all(|x| cube.contains(x)));
}

#[test]
fn restricted_gaussian_inner_disk_fraction() {
    let mu = MeasureModel::gaussian_restricted(ConvexBody::ball(2, 1.0).unwrap());
    let est = mu.region_measure(|x| dot(x, x) <= 0.25, 200_000, 5).unwrap();
    let exact = (1.0 - (-0.125f64).exp()) / (1.0 - (-0.5f64).exp());
    assert!((exact - 0.2987).abs() < 1e-4);
    assert!((est.value - exact).abs() < 4.0 * est.std_error, "{est:?} vs {exact}");
}

#[test]
fn region_measure_examples() {
    let all = MeasureModel::gaussian(3).region_measure(|_| true, 1000, 1).unwrap();
    assert_eq!(all.value, 1.0);
    let g1 = MeasureModel::gaussian(1).region_measure(|x| x[0].abs() <= 1.0, 200_000, 2).unwrap();
    let oracle = crate::quad::integrate(crate::special::normal_pdf, -1.0, 1.0, 1e-12, 0.0).unwrap().value;
    assert!((g1.value - oracle).abs() < 4.0 * g1.std_error);
    let u = MeasureModel::uniform(ConvexBody::cube(3).unwrap()).region_measure(|x| x[0] <= 0.25, 200_000, 3).unwrap();
    assert!((u.value - 0.25).abs() < 4.0 * u.std_error);
}

#[test]
fn grid_mode_matches_closed_forms() {
    let g = region_measure_grid(&MeasureModel::gaussian(1), |x| x[0].abs() <= 1.0, 4000).unwrap();
    assert!((g.value - 0.682_689_492_137_085_9).abs() < 1e-3);
    assert!((g.value - 0.682_689_492_137_085_9).abs() <= g.std_error + 1e-6);
    let u = region_measure_grid(&MeasureModel::uniform(ConvexBody::cube(2).unwrap()), |x| x[0] + x[1] <= 1.0, 400).unwrap();
    assert!((u.value - 0.5).abs() <= u.std_error);
    assert!(region_measure_grid(&MeasureModel::gaussian(4), |_| true, 4).is_err());
}

#[test]
fn barycenter_covariance_examples() {
    let (b, c) = MeasureModel::uniform(unit_box(2)).barycenter_covariance(200_000, 4).unwrap();
    for i in 0..2 {
        assert!(b[i].abs() < 0.01);
        assert!((c[(i, i)] - 1.0 / 3.0).abs() < 0.01);
    }
    assert!(c[(0, 1)].abs() < 0.01);
    assert_eq!(c[(0, 1)], c[(1, 0)]);
    let (b, c) = MeasureModel::gaussian(3).barycenter_covariance(200_000, 5).unwrap();
    assert!(b.iter().all(|v| v.abs() < 0.01));
    assert!((c - DMatrix::identity(3, 3)).amax() < 0.02);
    let seg = ConvexBody::cube(1).unwrap();
    let (b, _) = MeasureModel::uniform(seg).barycenter_covariance(100_000, 6).unwrap();
    assert!((b[0] - 0.5).abs() < 0.01);
}

#[test]
fn linear_moment_examples() {
    let mu = MeasureModel::uniform(unit_box(1));
    let m = mu.linear_functional_moments(&[1.0], &[1.0, 2.0], 400_000, 7).unwrap();
    // exact moments E|x|^p = 1/(p+1)
    assert!((m[0].estimate.value - 0.5).abs() < 4.0 * m[0].estimate.std_error);
    assert!((m[1].estimate.value - (1.0f64 / 3.0).sqrt()).abs() < 4.0 * m[1].estimate.std_error);
    let g = MeasureModel::gaussian(1).linear_functional_moment(&[1.0], 2.0, 400_000, 8).unwrap();
    assert!((g.estimate.value - 1.0).abs() < 4.0 * g.estimate.std_error);
    assert!(!g.flagged);
    assert!(mu.linear_functional_moment(&[1.0], 0.5, 10, 1).is_err());
}

#[test]
fn thin_body_falls_back_to_walk() {
    // acceptance from the bounding box is below 1e-4 for this needle
    let u = nalgebra::DVector::from_element(3, 1.0 / 3f64.sqrt());
    let p = &u * u.transpose();
    let a = &p + (DMatrix::identity(3, 3) - &p) * 1e-3;
    let needle = unit_box(3).linear_image(a).unwrap();
    let mu = MeasureModel::uniform(needle.clone());
    assert!(matches!(mu.plan(1).unwrap(), Plan::Walk));
    let pts = mu.sample(5000, 2).unwrap();
    assert!(pts.iter().all(|x| needle.contains(x)));
    let strict = MeasureModel::uniform(needle).with_config(SamplerConfig { allow_walk: false, ..Default::default() });
    assert!(matches!(strict.sample(10, 1), Err(Error::AcceptanceFailure { .. })));
}

#[test]
fn walk_restricted_gaussian_matches_rejection() {
    let body = ConvexBody::cuboid(vec![1.0, 0.5]).unwrap();
    let rej = MeasureModel::gaussian_restricted(body.clone());
    let walk = MeasureModel::gaussian_restricted(body)
        .with_config(SamplerConfig { walk_threshold: 2.0, ..Default::default() });
    let a = rej.region_measure(|x| x[0] > 0.5, 100_000, 1).unwrap();
    let b = walk.region_measure(|x| x[0] > 0.5, 100_000, 1).unwrap();
    // closed form: (Φ(1) − Φ(0.5)) / (2Φ(1) − 1)
    let exact = (normal_cdf(1.0) - normal_cdf(0.5)) / (2.0 * normal_cdf(1.0) - 1.0);
    assert!((a.value - exact).abs() < 4.0 * a.std_error);
    assert!((b.value - exact).abs() < 0.01);
}

#[test]
fn custom_density_sampling() {
    // e^{-x} on [0, 3]
    let mu = MeasureModel::custom("exp", ConvexBody::aligned_box(&[0.0], &[3.0]).unwrap(), 0.0, false, |x| -x[0]);
    let z = mu.normalization();
    assert!((z.value - (1.0 - (-3.0f64).exp())).abs() < 4.0 * z.std_error + 1e-12);
    let est = mu.region_measure(|x| x[0] <= 1.0, 100_000, 9).unwrap();
    let exact = (1.0 - (-1.0f64).exp()) / (1.0 - (-3.0f64).exp());
    assert!((est.value - exact).abs() < 4.0 * est.std_error);
}

#[test]
fn truncated_normal_stays_in_interval() {
    for (lo, hi) in [(-1.0, 2.0), (5.0, 9.0), (-40.0, -39.0), (0.3, 0.3000001)] {
        for u in [0.0, 0.3, 0.999] {
            let z = truncated_normal(lo, hi, u);
            assert!(z >= lo && z <= hi, "{lo} {hi} {u} {z}");
        }
    }
}

#[test]
fn sampling_is_deterministic() {
    let mu = MeasureModel::uniform(ConvexBody::simplex(3).unwrap());
    assert_eq!(mu.sample(10_000, 11).unwrap(), mu.sample(10_000, 11).unwrap());
    assert_ne!(mu.sample(100, 11).unwrap(), mu.sample(100, 12).unwrap());
}

#[test]
fn log_concavity_of_builtin_kinds() {
    let kinds = [
        MeasureModel::gaussian(3),
        MeasureModel::uniform(ConvexBody::simplex(3).unwrap()),
        MeasureModel::gaussian_restricted(ConvexBody::ball(2, 1.5).unwrap()),
    ];
    for mu in kinds {
        assert_eq!(mu.log_concavity_probe(1000, 3).unwrap(), 0);
    }
}

#[test]
fn radial_volume_by_polar_integration() {
    use crate::bodies::io::TabulatedRadial;
    let dirs: Vec<Vec<f64>> = (0..360).map(|i| {
        let a = i as f64 * std::f64::consts::TAU / 360.0;
        vec![a.cos(), a.sin()]
    }).collect();
    let t = TabulatedRadial::new(2, dirs, vec![2.0; 360], 2.0).unwrap();
    let disk = ConvexBody::radial(std::sync::Arc::new(t)).unwrap();
    let v = estimate_volume(&disk, 10_000, 1);
    assert!((v.value - 4.0 * PI).abs() < 1e-9);
    let pts = MeasureModel::uniform(disk).sample(50_000, 2).unwrap();
    let frac = pts.proportion(|x| norm(x) <= 1.0, 2);
    assert!((frac.value - 0.25).abs() < 4.0 * frac.std_error);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nested_regions_are_monotone(seed in 0u64..1000, a in 0.1f64..0.9, b in 0.1f64..0.9) {
        let (s, l) = if a < b { (a, b) } else { (b, a) };
        let mu = MeasureModel::uniform(ConvexBody::cube(2).unwrap());
        let small = mu.region_measure(|x| x[0] <= s, 2000, seed).unwrap();
        let large = mu.region_measure(|x| x[0] <= l, 2000, seed).unwrap();
        prop_assert!(small.value <= large.value);
    }

    #[test]
    fn gauge_sublevel_measure_is_monotone(seed in 0u64..1000) {
        let k = ConvexBody::simplex(2).unwrap().translate(vec![-0.25, -0.25]).unwrap();
        let mu = MeasureModel::uniform(k.clone());
        let pts = mu.sample(2000, seed).unwrap();
        let mut last = 0.0;
        for t in [0.1, 0.3, 0.5, 0.8, 1.0] {
            let e = pts.proportion(|x| k.gauge(x) <= t, seed);
            prop_assert!(e.value >= last);
            last = e.value;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn estimates_reproduce_bitwise(seed in 0u64..1000) {
        let mu = MeasureModel::gaussian_restricted(ConvexBody::simplex(2).unwrap());
        let a = mu.region_measure(|x| x[0] < 0.2, 3000, seed).unwrap();
        let b = mu.region_measure(|x| x[0] < 0.2, 3000, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
