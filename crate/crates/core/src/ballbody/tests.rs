use super::*;
use crate::bodies::Kind;
use proptest::prelude::*;

#[test]
fn gaussian_line_moment() {
    // ∫₀^∞ e^{−r²/2} r² dr = √(π/2), φ(0) cancels
    let oracle = (3.0 * (PI / 2.0).sqrt()).powf(1.0 / 3.0);
    let r = radial_moment(&Density::gaussian(1), &[1.0], 2.0, 1e-12).unwrap();
    assert!((r - oracle).abs() < 1e-10, "{r} {oracle}");
    assert!((oracle - 1.5550).abs() < 1e-4);
}

#[test]
fn interval_indicator_moment() {
    let r = radial_moment(&Density::uniform_box(vec![1.0]), &[1.0], 2.0, 1e-12).unwrap();
    assert!((r - 1.0).abs() < 1e-10, "{r}");
}

#[test]
fn gaussian_plane_is_ball() {
    let k = ball_body(&Density::gaussian(2), &direction_table(2, 64), 1e-12).unwrap();
    let want = 8f64.powf(0.25);
    let Kind::Radial(f) = k.kind() else { panic!() };
    for (_, r) in f.table() {
        assert!((r - want).abs() < 1e-6);
    }
    assert!((f.radius(&[0.6, 0.8]) - want).abs() < 1e-6);
}

#[test]
fn box_indicator_recovers_box() {
    let h = vec![1.0, 0.5];
    let k = ball_body(&Density::uniform_box(h.clone()), &direction_table(2, 64), 1e-12).unwrap();
    let Kind::Radial(f) = k.kind() else { panic!() };
    let bx = ConvexBody::cuboid(h).unwrap();
    for (t, r) in f.table() {
        let rho = bx.ray_exit(&[0.0, 0.0], &t);
        assert!((r - rho).abs() < 1e-8, "{t:?} {r} {rho}");
    }
}

#[test]
fn odd_density_rejected() {
    let d = Density::new(1, "skew", |x: &[f64]| if x[0] > -1.0 && x[0] < 2.0 { 1.0 / 3.0 } else { 0.0 });
    assert!(ball_body(&d, &direction_table(1, 2), 1e-10).is_err());
}

#[test]
fn volume_constant() {
    assert!((volume_upper_constant(1) - 6f64.powf(1.0 / 3.0)).abs() < 1e-12);
    assert!((volume_upper_constant(2) - 24f64.sqrt() / 2.0).abs() < 1e-12);
}

#[test]
fn invariants_gaussian_line() {
    let d = Density::gaussian(1);
    let k = ball_body(&d, &direction_table(1, 2), 1e-12).unwrap();
    let recs = ball_body_invariants(&d, &MeasureModel::gaussian(1), &k, 20_000, 1).unwrap();
    assert!(recs.iter().all(|r| r.passed()), "{recs:?}");
    let p = recs[0].get("phi0_volume").unwrap().value;
    assert!((p - 1.2407).abs() < 1e-3);
}

#[test]
fn invariants_interval_saturates() {
    let d = Density::uniform_box(vec![1.0]);
    let k = ball_body(&d, &direction_table(1, 2), 1e-12).unwrap();
    let m = MeasureModel::uniform(ConvexBody::cuboid(vec![1.0]).unwrap());
    let recs = ball_body_invariants(&d, &m, &k, 20_000, 1).unwrap();
    assert!(recs.iter().all(|r| r.passed()), "{recs:?}");
    assert!((recs[0].get("phi0_volume").unwrap().value - 1.0).abs() < 1e-9);
}

#[test]
fn invariants_gaussian_plane() {
    let d = Density::gaussian(2);
    let k = ball_body(&d, &direction_table(2, 32), 1e-12).unwrap();
    let recs = ball_body_invariants(&d, &MeasureModel::gaussian(2), &k, 20_000, 2).unwrap();
    assert!(recs.iter().all(|r| r.passed()), "{recs:?}");
    assert!(recs[2].get("max_deviation_in_std_errors").is_some());
}

#[test]
fn measure_density_matches_closed_form() {
    let d = Density::of_measure(&MeasureModel::gaussian(2));
    assert!((d.eval(&[0.3, -0.2]) - Density::gaussian(2).eval(&[0.3, -0.2])).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn moments_increase_in_p(a in 0.2f64..3.0, b in 0.2f64..3.0, ang in 0.0f64..6.3, p in 0.0f64..4.0, dq in 0.1f64..4.0) {
        // even log-concave: anisotropic Gaussian times the indicator of a box
        let d = Density::new(2, "probe", move |x: &[f64]| {
            if x[0].abs() <= 2.0 && x[1].abs() <= 1.5 { (-(a * x[0] * x[0] + b * x[1] * x[1]) / 2.0).exp() } else { 0.0 }
        });
        let t = [ang.cos(), ang.sin()];
        let rp = radial_moment(&d, &t, p, 1e-12).unwrap();
        let rq = radial_moment(&d, &t, p + dq, 1e-12).unwrap();
        prop_assert!(rp <= rq * (1.0 + 1e-10));
    }

    #[test]
    fn dilation_scales_radius(s in 0.2f64..5.0, ang in 0.0f64..6.3) {
        let d = Density::gaussian(2);
        let t = [ang.cos(), ang.sin()];
        let r = radial_moment(&d, &t, 2.0, 1e-12).unwrap();
        let rs = radial_moment(&d.dilated(s), &t, 2.0, 1e-12).unwrap();
        prop_assert!((rs - s * r).abs() <= 1e-8 * s * r);
    }
}
