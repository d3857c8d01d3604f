use super::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn interval() -> MeasureModel {
    MeasureModel::uniform(ConvexBody::cuboid(vec![1.0]).unwrap())
}

#[test]
fn psi_two_of_interval() {
    // exact moments of uniform[−1,1]: ‖x‖_p = (1/(p+1))^{1/p}
    let oracle = [2.0f64, 4.0, 8.0]
        .iter()
        .map(|p| (1.0 / (p + 1.0)).powf(1.0 / p) / (p.sqrt() * 0.5))
        .fold(0.0, f64::max);
    assert!((oracle - 0.8165).abs() < 1e-4);
    let e = psi_alpha_constant(&interval(), 2.0, 4, &[2.0, 4.0, 8.0], 200_000, 1).unwrap();
    assert!((e.value - oracle).abs() < 0.02 * oracle, "{}", e.value);
    assert_eq!(e.argmax_p, 2.0);
}

#[test]
fn psi_of_gaussian_is_bounded() {
    let e = psi_alpha_constant(&MeasureModel::gaussian(2), 2.0, 16, &DEFAULT_P_GRID, 100_000, 2).unwrap();
    assert!(e.value < 2.0 && e.value > 0.3);
}

#[test]
fn psi_of_ball_is_stable() {
    let m = MeasureModel::uniform(ConvexBody::ball(3, 1.0).unwrap());
    let a = psi_alpha_constant(&m, 2.0, 16, &DEFAULT_P_GRID, 50_000, 3).unwrap();
    let b = psi_alpha_constant(&m, 2.0, 16, &DEFAULT_P_GRID, 50_000, 4).unwrap();
    assert!((a.value - b.value).abs() < 0.1 * a.value);
}

#[test]
fn psi_monotone_in_alpha() {
    let m = MeasureModel::uniform(ConvexBody::simplex(2).unwrap());
    let a1 = psi_alpha_constant(&m, 1.0, 8, &DEFAULT_P_GRID, 20_000, 5).unwrap();
    let a2 = psi_alpha_constant(&m, 2.0, 8, &DEFAULT_P_GRID, 20_000, 5).unwrap();
    for (r1, r2) in a1.ratios.iter().zip(&a2.ratios) {
        for (x, y) in r1.iter().zip(r2) {
            assert!(x <= y);
        }
    }
    assert!(psi_alpha_constant(&m, 2.5, 8, &DEFAULT_P_GRID, 100, 5).is_err());
}

#[test]
fn mean_width_of_balls() {
    for r in [1.0, 2.0, 0.3] {
        let m = mean_width_parameter(&ConvexBody::ball(3, r).unwrap(), 1000, 6).unwrap();
        assert!((m.value - 1.0 / r).abs() < 1e-12);
    }
}

#[test]
fn mean_width_of_square() {
    // E max(|cos φ|, |sin φ|) = (4/π)∫₀^{π/4} cos φ dφ
    let oracle = 4.0 / PI * (PI / 4.0).sin();
    assert!((oracle - 2.0 * 2f64.sqrt() / PI).abs() < 1e-12);
    let m = mean_width_parameter(&ConvexBody::cuboid(vec![1.0, 1.0]).unwrap(), 200_000, 7).unwrap();
    assert!((m.value - oracle).abs() < 4.0 * m.std_error, "{m:?}");
    let off = ConvexBody::aligned_box(&[0.5, 0.5], &[1.0, 1.0]).unwrap();
    assert!(mean_width_parameter(&off, 10, 1).is_err());
}

#[test]
fn cube_sections_exact() {
    let cube = ConvexBody::cuboid(vec![0.5; 3]).unwrap();
    let c = vec![0.0; 3];
    let coord = Flat::coordinate(c.clone(), &[0, 1]);
    assert!((section_volume(&cube, &coord, 1000, 1).unwrap().value - 1.0).abs() < 1e-12);
    let diag = Flat::new(c.clone(), &[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    assert!((section_volume(&cube, &diag, 1000, 1).unwrap().value - 2f64.sqrt()).abs() < 1e-12);
    // regular hexagon: plane through the center orthogonal to the main diagonal, side √2/2
    let hex = Flat::new(c.clone(), &[vec![1.0, -1.0, 0.0], vec![1.0, 1.0, -2.0]]).unwrap();
    let want = 3.0 * 3f64.sqrt() / 2.0 * 0.5;
    assert!((section_volume(&cube, &hex, 1000, 1).unwrap().value - want).abs() < 1e-12);
    let far = Flat::coordinate(vec![0.0, 0.0, 5.0], &[0, 1]);
    assert_eq!(section_volume(&cube, &far, 1000, 1).unwrap().value, 0.0);
}

#[test]
fn ball_section_by_sampling() {
    let ball = ConvexBody::ball(3, 1.0).unwrap();
    let f = Flat::coordinate(vec![0.0, 0.0, 0.6], &[0, 1]);
    let s = section_volume(&ball, &f, 200_000, 8).unwrap();
    assert!((s.value - PI * 0.64).abs() < 4.0 * s.std_error, "{s:?}");
}

#[test]
fn slice_check_on_cube() {
    let cube = ConvexBody::cuboid(vec![0.5; 3]).unwrap();
    let psi = psi_alpha_constant(&MeasureModel::uniform(cube.clone()), 2.0, 32, &DEFAULT_P_GRID, 50_000, 9).unwrap();
    let mut flats = probe_flats(3, 2, &[0.0; 3]);
    flats.push(Flat::coordinate(vec![0.0, 0.0, 9.0], &[0, 1]));
    let rec = slice_bound_check(&cube, &flats, &psi, DEFAULT_C_DESK, 10_000, 9).unwrap();
    assert!(rec.passed(), "{rec:?}");
    let r = rec.get("max_ratio").unwrap().value;
    // central sections of the unit cube have area between 1 and √2
    assert!(r >= 1.0 - 1e-12 && r <= 2f64.sqrt() + 1e-12, "{r}");
}

#[test]
fn gaussian_moment_oracle() {
    // E|g|^p for standard normal = 2^{p/2}Γ((p+1)/2)/√π; at p = 2 it is 1, at p = 1 it is √(2/π)
    let e = psi_alpha_constant(&MeasureModel::gaussian(1), 2.0, 1, &[2.0], 400_000, 10).unwrap();
    let oracle = 1.0 / (2f64.sqrt() * (2.0 / PI).sqrt());
    assert!((e.value - oracle).abs() < 0.01, "{}", e.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mean_width_homogeneous(l in 0.2f64..5.0, seed in 0u64..500) {
        let k = ConvexBody::simplex(3).unwrap().translate(vec![-0.25; 3]).unwrap();
        let a = mean_width_parameter(&k, 500, seed).unwrap();
        let b = mean_width_parameter(&k.scaled(l).unwrap(), 500, seed).unwrap();
        prop_assert!((b.value - a.value / l).abs() <= 1e-12 * a.value / l);
    }

    #[test]
    fn section_ratio_rotation_invariant(th in 0.0f64..6.28, h in -0.4f64..0.4) {
        let cube = ConvexBody::cuboid(vec![0.5; 3]).unwrap();
        let q = nalgebra::DMatrix::from_row_slice(3, 3, &[th.cos(), -th.sin(), 0.0, th.sin(), th.cos(), 0.0, 0.0, 0.0, 1.0]);
        let f = Flat::new(vec![0.0, 0.0, h], &[vec![1.0, 0.3, 0.2], vec![0.0, 1.0, -0.5]]).unwrap();
        let a = section_volume(&cube, &f, 1000, 1).unwrap().value;
        let b = section_volume(&cube.clone().linear_image(q.clone()).unwrap(), &f.rotated(&q), 1000, 1).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
    }
}
