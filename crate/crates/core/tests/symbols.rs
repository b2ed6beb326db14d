use num_complex::Complex;
use num_rational::Rational64;
use proptest::prelude::*;

use ultradiff::symbols::{
    bicharacteristic, char_set, direction_grid, finite_type, hamiltonian_field, lie_bracket, noncharacteristic_surface,
    numeric_rank, parse_polynomial, poisson_bracket, Polynomial, VarNames, CHAR_TOL,
};
use ultradiff::{Error, FieldSystem, RatPoly, Symbol};

type Q = Rational64;

fn poly(text: &str, n: usize) -> RatPoly {
    parse_polynomial(text, &VarNames::phase_space(n)).unwrap()
}

fn cpoly(text: &str, n: usize) -> Polynomial<Complex<Q>> {
    parse_polynomial(text, &VarNames::phase_space(n)).unwrap()
}

#[test]
fn principal_parts() {
    let s = Symbol::parse("xi1^2 + xi2^2 + x1*xi1 + 3", 2).unwrap();
    assert_eq!(s.order(), 2);
    assert_eq!(s.principal_part().entry(0, 0), &cpoly("xi1^2 + xi2^2", 2));
    // heat operator: the time derivative is lower order
    let heat = Symbol::parse("i*xi1 + xi2^2", 2).unwrap();
    assert_eq!(heat.principal_part().entry(0, 0), &cpoly("xi2^2", 2));
    let sys = Symbol::parse("xi1 | x1 ; 1 | xi2", 2).unwrap();
    assert_eq!(sys.size(), 2);
    assert_eq!(sys.principal_part().determinant().unwrap(), cpoly("xi1*xi2", 2));
    assert_eq!(sys.determinant().unwrap(), cpoly("xi1*xi2 - x1", 2));
}

#[test]
fn hamiltonian_fields() {
    let h = hamiltonian_field(&poly("xi^2", 1), 1).unwrap();
    assert_eq!(h, vec![poly("2*xi", 1), poly("0", 1)]);
    let h = hamiltonian_field(&poly("x*xi", 1), 1).unwrap();
    assert_eq!(h, vec![poly("x", 1), poly("-xi", 1)]);
    assert!(hamiltonian_field(&poly("x*xi", 1), 2).is_err());
}

#[test]
fn canonical_brackets() {
    assert_eq!(poisson_bracket(&poly("xi", 1), &poly("x", 1), 1).unwrap(), poly("1", 1));
    assert_eq!(poisson_bracket(&poly("x1", 2), &poly("xi2", 2), 2).unwrap(), poly("0", 2));
    let names = VarNames::space(2);
    let x: Vec<RatPoly> = vec![parse_polynomial("1", &names).unwrap(), parse_polynomial("0", &names).unwrap()];
    let y: Vec<RatPoly> = vec![parse_polynomial("0", &names).unwrap(), parse_polynomial("x", &names).unwrap()];
    let b = lie_bracket(&x, &y).unwrap();
    assert_eq!(b[1], parse_polynomial("1", &names).unwrap());
}

#[test]
fn bicharacteristics() {
    let still = bicharacteristic(&poly("xi^2", 1), 1, &[0.3], &[0.0], 1.0, 0.1, CHAR_TOL).unwrap();
    assert!(still.samples.iter().all(|(_, s)| s == &vec![0.3, 0.0]));
    assert!(still.is_bicharacteristic);
    let line = bicharacteristic(&poly("xi^2", 1), 1, &[0.0], &[1.0], 2.0, 0.25, CHAR_TOL).unwrap();
    let (t, s) = line.samples.last().unwrap();
    assert_eq!(*t, 2.0);
    assert!((s[0] - 4.0).abs() < 1e-14 && s[1] == 1.0);
    assert!(!line.is_bicharacteristic);
    // rotation with angular speed 2: back to the start at t = pi
    let osc = bicharacteristic(&poly("x^2 + xi^2", 1), 1, &[1.0], &[0.0], std::f64::consts::PI, 1e-3, CHAR_TOL).unwrap();
    assert!(osc.max_drift <= 1e-8, "{}", osc.max_drift);
    let end = &osc.samples.last().unwrap().1;
    assert!((end[0] - 1.0).abs() < 1e-9 && end[1].abs() < 1e-9);
    let csv = osc.to_csv();
    assert!(csv.starts_with("t,x1,xi1,p_drift\n"));
    assert!(matches!(
        // dx/dt = x^2 from x = 1 blows up at t = 1
        bicharacteristic(&poly("x^2*xi", 1), 1, &[1.0], &[1.0], 2.0, 1e-3, CHAR_TOL),
        Err(Error::Blowup(_))
    ));
}

#[test]
fn grushin_type() {
    let s = FieldSystem::parse("1, 0; 0, x^2", 2).unwrap();
    let r = finite_type(&s, &[0.0, 0.0], 4).unwrap();
    assert_eq!(r.rank_by_length, vec![1, 1, 2, 2]);
    assert_eq!(r.type_length, Some(3));
    let r = finite_type(&s, &[0.5, 0.0], 4).unwrap();
    assert_eq!(r.type_length, Some(1));
    let flat = FieldSystem::parse("1, 0; 0, 0", 2).unwrap();
    assert_eq!(finite_type(&flat, &[0.0, 0.0], 3).unwrap().type_length, None);
    assert!(finite_type(&s, &[0.0, 0.0], 7).is_err());
}

#[test]
fn noncharacteristic_surfaces() {
    let wave = Symbol::parse("xi1^2 - xi2^2", 2).unwrap();
    assert!(!noncharacteristic_surface(&wave, &[1.0, 1.0], &[0.0, 0.0], CHAR_TOL).unwrap().noncharacteristic);
    assert!(noncharacteristic_surface(&wave, &[1.0, 0.0], &[0.0, 0.0], CHAR_TOL).unwrap().noncharacteristic);
    let heat = Symbol::parse("i*xi1 + xi2^2", 2).unwrap();
    assert!(!noncharacteristic_surface(&heat, &[1.0, 0.0], &[0.0, 0.0], CHAR_TOL).unwrap().noncharacteristic);
    assert!(matches!(
        noncharacteristic_surface(&wave, &[0.0, 0.0], &[0.0, 0.0], CHAR_TOL),
        Err(Error::VanishingGradient(_))
    ));
}

#[test]
fn characteristic_mask_ignores_xi_length() {
    let s = Symbol::parse("xi1^2 - x1^2*xi2^2", 2).unwrap();
    let xs = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-1.0, 2.0]];
    let dirs = direction_grid(2, 16).unwrap();
    let long: Vec<Vec<f64>> = dirs.iter().map(|d| d.iter().map(|v| v * 7.5).collect()).collect();
    let a = char_set(&s, &xs, &dirs, CHAR_TOL).unwrap();
    let b = char_set(&s, &xs, &long, CHAR_TOL).unwrap();
    assert_eq!(a.mask, b.mask);
    // at x1 = 1 the characteristic directions are xi1 = +-xi2
    assert_eq!(a.is_characteristic(&[1.0, 0.5], &dirs[2]), Some(true));
    assert_eq!(a.is_characteristic(&[1.0, 0.5], &dirs[0]), Some(false));
    assert!(direction_grid(2, 12).is_err());
}

#[test]
fn parse_errors() {
    let names = VarNames::phase_space(1);
    assert!(matches!(parse_polynomial::<Q>("x^", &names), Err(Error::Parse { .. })));
    assert!(matches!(parse_polynomial::<Q>("(x + 1", &names), Err(Error::Parse { .. })));
    assert!(Symbol::parse("xi | 1", 1).is_err());
    assert!(FieldSystem::parse("1, 0, 0", 2).is_err());
}

#[test]
fn rank_of_dependent_rows() {
    assert_eq!(numeric_rank(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2), 1);
    assert_eq!(numeric_rank(&[vec![1.0, 0.0], vec![0.0, 1e-3]], 2), 2);
    assert_eq!(numeric_rank(&[], 2), 0);
}

fn small_poly() -> impl Strategy<Value = RatPoly> {
    proptest::collection::vec(((0u32..3, 0u32..3), -4i64..5, 1i64..4), 1..5).prop_map(|terms| {
        terms.into_iter().fold(Polynomial::zero(2), |acc, ((a, b), num, den)| {
            &acc + &Polynomial::monomial(2, vec![a, b], Q::new(num, den))
        })
    })
}

proptest! {
    #[test]
    fn poisson_bracket_is_a_lie_bracket(p in small_poly(), q in small_poly(), r in small_poly()) {
        let b = |a: &RatPoly, c: &RatPoly| poisson_bracket(a, c, 1).unwrap();
        prop_assert_eq!(b(&p, &q), -&b(&q, &p));
        let jacobi = &(&b(&p, &b(&q, &r)) + &b(&q, &b(&r, &p))) + &b(&r, &b(&p, &q));
        prop_assert!(jacobi.is_zero());
        // Leibniz rule
        prop_assert_eq!(b(&p, &(&q * &r)), &(&b(&p, &q) * &r) + &(&q * &b(&p, &r)));
    }

    #[test]
    fn noncharacteristic_is_scale_invariant(g1 in -2.0f64..2.0, g2 in -2.0f64..2.0, c in 0.1f64..10.0, neg: bool) {
        prop_assume!(g1.abs() + g2.abs() > 1e-3);
        let s = Symbol::parse("xi1^2 - 2*xi1*xi2 + x1*xi2^2", 2).unwrap();
        let c = if neg { -c } else { c };
        let a = noncharacteristic_surface(&s, &[g1, g2], &[0.5, 0.0], CHAR_TOL).unwrap();
        let b = noncharacteristic_surface(&s, &[c * g1, c * g2], &[0.5, 0.0], CHAR_TOL).unwrap();
        prop_assert_eq!(a.noncharacteristic, b.noncharacteristic);
    }

    #[test]
    fn bracket_filtration_is_monotone(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let s = FieldSystem::parse("1, 0; 0, x^3 - y", 2).unwrap();
        let r = finite_type(&s, &[x, y], 5).unwrap();
        prop_assert!(r.rank_by_length.windows(2).all(|w| w[0] <= w[1]));
    }
}
