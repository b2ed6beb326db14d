use num_complex::Complex;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

use ultradiff::distributions::Window;
use ultradiff::fbi::{fbi_inverse, fbi_point, fbi_transform, EllipticPolynomial};
use ultradiff::{Dist, Error, Generator};

fn window() -> Window<f64> {
    Window::new(0.0, 0.6, 1.0).unwrap()
}

#[test]
fn normalization_constants() {
    let p = Generator::euclidean(1).unwrap();
    assert!((p.normalization() - std::f64::consts::PI.powf(-0.5)).abs() < 1e-13);
    let p = Generator::euclidean(2).unwrap();
    assert!((p.normalization() - std::f64::consts::FRAC_1_PI).abs() < 1e-13);
    // int e^{-x^4} = 2 Gamma(5/4)
    let p = Generator::quartic(1).unwrap();
    let want = 1.0 / (2.0 * gamma(1.25));
    assert!((p.normalization() - want).abs() < 1e-11);
    assert!((want - 0.551_631_325_660_418_6).abs() < 1e-15);
    let p = Generator::quartic(2).unwrap();
    assert!((p.normalization() - want * want).abs() < 1e-10);
}

#[test]
fn ellipticity_bounds_bracket_the_sphere() {
    let p = Generator::new(2, vec![(vec![2, 0], 1.0), (vec![1, 1], 0.5), (vec![0, 2], 2.0)]).unwrap();
    let (lo, hi) = p.ellipticity_bounds();
    for i in 0..97 {
        let th = i as f64 * 0.0648;
        let v = p.eval(&[th.cos(), th.sin()]);
        assert!(lo <= v && v <= hi);
    }
    assert!(p.separable().is_none());
    assert!(matches!(Generator::new(1, vec![(vec![2], -1.0)]), Err(Error::NotElliptic(_))));
}

#[test]
fn delta_transform_closed_form() {
    let p = Generator::quartic(1).unwrap();
    let ts = [-0.3, 0.0, 0.2];
    let xis = [-20.0, -1.0, 3.0, 40.0];
    let g = fbi_transform(&Dist::delta(0.0), &window(), &p, &ts, &xis).unwrap();
    for (i, &t) in ts.iter().enumerate() {
        for (j, &xi) in xis.iter().enumerate() {
            let want = Complex::from_polar(1.0, xi * t) * (-xi.abs() * t.powi(4)).exp() * p.normalization();
            assert!((g.value(i, j) - want).norm() < 1e-14);
        }
    }
}

#[test]
fn zero_distribution_transforms_to_zero() {
    let p = Generator::euclidean(1).unwrap();
    let g = fbi_transform(&Dist::zero(), &window(), &p, &[0.0, 0.5], &[1.0, 10.0]).unwrap();
    assert!(g.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn real_input_has_conjugate_symmetry() {
    let p = Generator::euclidean(1).unwrap();
    let u = Dist::abs();
    for xi in [0.5, 4.0, 30.0] {
        for t in [-0.2, 0.0, 0.35] {
            let (a, s) = fbi_point(&u, &window(), &p, t, xi).unwrap();
            let (b, _) = fbi_point(&u, &window(), &p, t, -xi).unwrap();
            assert!((a.conj() - b).norm() <= 1e-13 * s.max(1.0));
        }
    }
}

#[test]
fn heaviside_decays_like_one_over_xi() {
    let p = Generator::euclidean(1).unwrap();
    for xi in [50.0, 200.0, 800.0] {
        let (v, _) = fbi_point(&Dist::heaviside(0.0), &window(), &p, 0.0, xi).unwrap();
        let r = v.norm() * xi / p.normalization();
        assert!((r - 1.0).abs() < 0.1, "xi={} r={}", xi, r);
    }
    // away from the jump the decay is much faster
    let (v, _) = fbi_point(&Dist::heaviside(0.0), &window(), &p, 0.4, 200.0).unwrap();
    assert!(v.norm() < 1e-6);
}

#[test]
fn inverse_rejects_bad_boxes_and_grids() {
    let p = Generator::euclidean(1).unwrap();
    let ts: Vec<f64> = (0..21).map(|i| -0.5 + i as f64 * 0.05).collect();
    let xis: Vec<f64> = (0..11).map(|j| -5.0 + j as f64).collect();
    let g = fbi_transform(&Dist::delta(0.0), &window(), &p, &ts, &xis).unwrap();
    assert!(matches!(fbi_inverse(&g, 1, 1e-6, 1e-3), Err(Error::FrequencyBoxTooSmall { .. })));
    assert!(fbi_inverse(&g, 1, 0.0, 1e-3).is_err());
    let bent = fbi_transform(&Dist::delta(0.0), &window(), &p, &[0.0, 0.1, 0.3], &xis).unwrap();
    assert!(matches!(fbi_inverse(&bent, 1, 1.0, 1.0), Err(Error::GridMismatch(_))));
}

#[test]
fn csv_header_records_generator() {
    let p = Generator::quartic(1).unwrap();
    let g = fbi_transform(&Dist::delta(0.0), &window(), &p, &[0.0], &[1.0, 2.0]).unwrap();
    let csv = g.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# p: 1*x1^4");
    assert!(lines[1].starts_with("# c_p: 5.5163"));
    assert_eq!(lines[2], "t1,xi1,re,im");
    assert_eq!(lines.len(), 5);
}

#[test]
fn single_precision_generator() {
    let p = EllipticPolynomial::<f32>::euclidean(1).unwrap();
    assert!((p.normalization() - std::f32::consts::PI.powf(-0.5)).abs() < 1e-6);
}

proptest! {
    #[test]
    fn transform_is_linear(parts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -0.5f64..0.5), 1..5),
                           t in -0.5f64..0.5, xi in -30.0f64..30.0) {
        let p = Generator::euclidean(1).unwrap();
        let u = Dist::combination(parts.iter().map(|&(a, b, y)| (Complex::new(a, b), Dist::delta(y))).collect());
        let (got, _) = fbi_point(&u, &window(), &p, t, xi).unwrap();
        let mut want = Complex::new(0.0, 0.0);
        for &(a, b, y) in &parts {
            let (v, _) = fbi_point(&Dist::delta(y), &window(), &p, t, xi).unwrap();
            want += Complex::new(a, b) * v;
        }
        prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }

    #[test]
    fn delta_modulus_is_homogeneous(t in -0.5f64..0.5, xi in 0.1f64..50.0, lam in 1.0f64..8.0) {
        // |F delta(t, xi)| = c_p e^{-|xi| p(t)}, so log-modulus scales linearly in |xi|
        let p = Generator::euclidean(1).unwrap();
        let c = p.normalization().ln();
        let (a, _) = fbi_point(&Dist::delta(0.0), &window(), &p, t, xi).unwrap();
        let (b, _) = fbi_point(&Dist::delta(0.0), &window(), &p, t, lam * xi).unwrap();
        let la = a.norm().ln() - c;
        let lb = b.norm().ln() - c;
        prop_assert!((lb - lam * la).abs() <= 1e-10 * (1.0 + lb.abs()));
    }
}
