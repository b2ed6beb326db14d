use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

use ultradiff::weights::{recover_m, Summability, TabulatedOmega, WeightSequence, WeightSpec};
use ultradiff::{Weights, Weights32};

fn brute_omega(log_m: &[f64], t: f64) -> f64 {
    (0..log_m.len()).map(|j| j as f64 * t.ln() - log_m[j]).fold(f64::NEG_INFINITY, f64::max)
}

fn brute_min(log_m: &[f64], t: f64) -> f64 {
    (0..log_m.len()).map(|j| j as f64 * t.ln() + log_m[j]).fold(f64::INFINITY, f64::min)
}

fn small(m: &Weights) -> Vec<f64> {
    m.log_m().iter().enumerate().map(|(k, v)| v - ln_gamma(k as f64 + 1.0)).collect()
}

#[test]
fn gevrey_matches_gamma_oracle() {
    for s in [0.0, 0.5, 1.0, 2.0] {
        let m = Weights::gevrey(s, 120).unwrap();
        for k in 0..=120 {
            let want = (s + 1.0) * ln_gamma(k as f64 + 1.0);
            assert!((m.log_m()[k] - want).abs() <= 1e-10 * want.abs().max(1.0), "s={} k={}", s, k);
        }
    }
    let m = Weights::gevrey(1.0, 10).unwrap();
    assert!((m.log_m()[3].exp() - 36.0).abs() < 1e-10);
    // (4!)^{1.5}
    let m = Weights::gevrey(0.5, 10).unwrap();
    assert!((m.log_m()[4].exp() - 117.575_507_653_5).abs() < 1e-8);
}

#[test]
fn named_families_at_low_orders() {
    let n1 = Weights::log_bracket(1.0, 10).unwrap();
    assert_eq!(n1.log_m()[1], 0.0);
    assert!((n1.log_m()[2].exp() - 4.813_961_400_775_407).abs() < 1e-12);
    let n05 = Weights::log_bracket(0.5, 10).unwrap();
    assert!((n05.log_m()[2].exp() - 3.102_889_427_864_101_7).abs() < 1e-12);
    let l = Weights::superquadratic(10).unwrap();
    assert_eq!(l.log_m()[1], 0.0);
    assert!((l.log_m()[2].exp() - 32.0).abs() < 1e-10);
    assert!((l.log_m()[3].exp() - 3072.0).abs() < 1e-8);
}

#[test]
fn rejects_bad_parameters() {
    assert!(Weights::gevrey(-0.1, 10).is_err());
    assert!(Weights::log_bracket(0.0, 10).is_err());
    assert!(Weights::gevrey(1.0, 7).is_err());
    assert!(Weights::from_log("bad", vec![0.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).is_err());
}

#[test]
fn omega_and_h_trivial_ranges() {
    let m = Weights::gevrey(1.0, 64).unwrap();
    for t in [0.01, 0.5, 1.0] {
        assert_eq!(m.omega(t).unwrap(), 0.0);
    }
    for t in [1.0, 3.0, 100.0] {
        assert_eq!(m.small_h(t).unwrap(), 1.0);
    }
    assert!(m.omega(m.omega_limit() * 1.01).is_err());
}

#[test]
fn analytic_omega_at_e_by_scan() {
    let m = Weights::gevrey(0.0, 64).unwrap();
    let t = std::f64::consts::E;
    assert!((m.omega(t).unwrap() - brute_omega(m.log_m(), t)).abs() < 1e-13);
}

#[test]
fn duality_points_and_identity_at_one() {
    let m = Weights::gevrey(1.0, 256).unwrap();
    assert!(m.duality_check(&[0.1, 0.01]).unwrap() <= 1e-12);
    assert_eq!(m.duality_check(&[1.0]).unwrap(), 0.0);
}

#[test]
fn gevrey_h_is_exponentially_small() {
    // C1 e^{-Q1/t} <= h(t) <= C2 e^{-Q2/t}: -t log h(t) stays in a band
    let m = Weights::gevrey(1.0, 2048).unwrap();
    for i in 0..=30 {
        let t = 10f64.powf(-3.0 + i as f64 * 3.0 / 30.0);
        let v = -t * m.log_small_h(t).unwrap();
        assert!(v >= 0.0 && v <= 1.0 + 1e-12, "t={} v={}", t, v);
        if t <= 0.1 {
            assert!(v >= 0.75, "t={} v={}", t, v);
        }
    }
}

#[test]
fn recover_small_orders() {
    let m = Weights::gevrey(1.0, 256).unwrap();
    assert!((recover_m(|t| m.omega(t), 0, -5.0, 5.0).unwrap() - 1.0).abs() < 1e-12);
    let dense = TabulatedOmega::from_weight(&m, 0.0, 8.0, 4001).unwrap();
    let coarse = TabulatedOmega::from_weight(&m, 0.0, 8.0, 401).unwrap();
    for k in 1..=10 {
        let a = recover_m(|t| dense.eval(t), k, 0.0, 8.0).unwrap().ln();
        let b = recover_m(|t| coarse.eval(t), k, 0.0, 8.0).unwrap().ln();
        // linear interpolation error of a convex function in log t, h = 8/400
        assert!((a - b).abs() <= k as f64 * 0.02 * 0.02, "k={} {} {}", k, a, b);
    }
}

#[test]
fn regularity_reports() {
    assert!(Weights::gevrey(1.0, 128).unwrap().check_regular().all_ok());
    // N_1 = 1 breaks strong log-convexity at k = 2: m_2^2 = log(2+e)^4 > m_1 m_3 = log(3+e)^3
    let n = Weights::log_bracket(1.0, 128).unwrap().check_regular();
    assert!(n.m1_ok && n.m2_ok && n.m4_ok && !n.m3_ok);
    let e = std::f64::consts::E;
    assert!((2.0 + e).ln().ln() * 4.0 > (3.0 + e).ln().ln() * 3.0);
    let one = Weights::constant_one(64).unwrap().check_regular();
    assert!(!one.m4_ok);
    assert_eq!(one.m4_trend.len(), 63);
}

#[test]
fn inclusion_and_equivalence() {
    let g05 = Weights::gevrey(0.5, 128).unwrap();
    let g1 = Weights::gevrey(1.0, 128).unwrap();
    assert!(g05.precedes(&g1).unwrap().ok);
    assert!(!g1.precedes(&g05).unwrap().ok);
    let self_p = g1.precedes(&g1).unwrap();
    assert!(self_p.ok && (self_p.witness - 1.0).abs() < 1e-12);
    let scaled = g1.rescaled(2.0).unwrap();
    assert!(g1.equivalent(&scaled).unwrap());
    assert!((scaled.precedes(&g1).unwrap().witness - 2.0).abs() < 1e-9);
    assert!(!g05.equivalent(&g1).unwrap());
    assert!(g1.precedes(&Weights::gevrey(1.0, 64).unwrap()).is_err());
}

#[test]
fn quasianalytic_partial_sums_monotone() {
    let v = Weights::log_bracket(1.0, 256).unwrap().quasianalytic();
    assert!(v.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(v.classification, Summability::Divergent);
}

#[test]
fn spec_and_text_roundtrip() {
    let spec: WeightSpec = "gevrey:1@256".parse().unwrap();
    let m: Weights = spec.build().unwrap();
    assert_eq!(m.order(), 256);
    let back = Weights::from_text(&m.to_text()).unwrap();
    assert_eq!(back.log_m(), m.log_m());
    assert!("gevrey:x".parse::<WeightSpec>().is_err());
    let covering: Weights = WeightSpec::Gevrey { s: 0.0, k: None }.build_covering(5000.0).unwrap();
    assert!(covering.omega_limit() >= 5000.0);
}

#[test]
fn single_precision_weights() {
    let m = Weights32::gevrey(1.0, 64).unwrap();
    let d = Weights::gevrey(1.0, 64).unwrap();
    for t in [2.0f32, 50.0, 400.0] {
        let a = m.omega(t).unwrap() as f64;
        let b = d.omega(t as f64).unwrap();
        assert!((a - b).abs() <= 1e-4 * b.max(1.0));
    }
}

fn log_convex() -> impl Strategy<Value = Vec<f64>> {
    // log M from sorted nonnegative increments
    proptest::collection::vec(0.0f64..6.0, 16..64).prop_map(|mut d| {
        d.sort_by(f64::total_cmp);
        let mut out = vec![0.0];
        for x in d {
            let last = *out.last().unwrap();
            out.push(last + x);
        }
        out
    })
}

proptest! {
    #[test]
    fn constructed_sequences_have_monotone_quotients(lm in log_convex()) {
        let m = Weights::from_log("p", lm).unwrap();
        let mu: Vec<f64> = m.log_m().windows(2).map(|w| w[1] - w[0]).collect();
        prop_assert!(mu.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn omega_matches_scan_and_is_monotone(lm in log_convex(), u in 0.0f64..1.0) {
        let m = Weights::from_log("p", lm).unwrap();
        let t_max = m.omega_limit();
        let t = (u * t_max.ln().max(0.0)).exp();
        let v = m.omega(t).unwrap();
        prop_assert!((v - brute_omega(m.log_m(), t)).abs() <= 1e-9 * v.abs().max(1.0));
        let t2 = (t * 1.1).min(t_max);
        prop_assert!(m.omega(t2).unwrap() >= v - 1e-12);
    }

    #[test]
    fn h_matches_scan(u in 0.0f64..1.0) {
        let m = Weights::log_bracket(1.0, 256).unwrap();
        let t = (m.small_h_floor().ln() * (1.0 - u)).exp();
        let got = m.small_h(t).unwrap().ln();
        prop_assert!((got - brute_min(&small(&m), t)).abs() <= 1e-9 * got.abs().max(1.0));
        let tt = (m.h_tilde_floor().ln() * (1.0 - u)).exp();
        let got = m.log_h_tilde(tt).unwrap();
        prop_assert!((got - brute_min(m.log_m(), tt)).abs() <= 1e-9 * got.abs().max(1.0));
    }

    #[test]
    fn duality_on_valid_range(s in 0.0f64..2.0, u in 0.0f64..1.0) {
        let m = Weights::gevrey(s, 512).unwrap();
        let lo = m.small_h_floor().max(m.h_tilde_floor()).max(1.0 / m.omega_tilde_limit()).max(1.0 / m.omega_limit());
        let t = (lo.ln() * (1.0 - u)).exp();
        prop_assert!(m.duality_check(&[t]).unwrap() <= 1e-12);
    }

    #[test]
    fn moderate_growth_constants_hold(s in 0.0f64..2.0) {
        let m = Weights::gevrey(s, 64).unwrap();
        let r = m.check_moderate_growth();
        prop_assert!(r.ok);
        let lm = m.log_m();
        for n in 0..=64 {
            for j in 0..=n {
                prop_assert!(lm[n] <= r.c.ln() + n as f64 * r.rho.ln() + lm[j] + lm[n - j] + 1e-9);
            }
        }
    }

    #[test]
    fn inclusion_is_monotone_in_s(a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m = Weights::gevrey(lo, 64).unwrap();
        let n = Weights::gevrey(hi, 64).unwrap();
        prop_assert!(m.precedes(&n).unwrap().ok);
    }
}

#[test]
fn generic_constructor_is_shared() {
    let m: WeightSequence<f64> = WeightSequence::gevrey(1.0, 16).unwrap();
    assert_eq!(m.name(), "gevrey:1");
}
