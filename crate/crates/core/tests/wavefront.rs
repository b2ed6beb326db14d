use ultradiff::distributions::Distribution;
use ultradiff::fbi::Tensor2;
use ultradiff::wavefront::{
    check_reflection, estimate_wavefront, fit_omega_decay, pullback_wavefront, verdict_map, Affine, ConeGrid,
    FitConfig, RayProfile, Verdict,
};
use ultradiff::weights::WeightSpec;
use ultradiff::{Dist, Generator, Weights};

fn gevrey(s: f64, cfg: &FitConfig) -> Weights {
    WeightSpec::Gevrey { s, k: None }.build_covering(cfg.omega_reach()).unwrap()
}

fn line(u: &Dist, pts: &[f64]) -> ultradiff::Wavefront {
    let cfg = FitConfig::default();
    let pts: Vec<Vec<f64>> = pts.iter().map(|&x| vec![x]).collect();
    estimate_wavefront(u, &pts, &ConeGrid::Line, &gevrey(1.0, &cfg), &Generator::euclidean(1).unwrap(), &cfg).unwrap()
}

#[test]
fn heaviside_is_singular_only_at_the_jump() {
    let est = line(&Dist::heaviside(0.0), &[0.0, 0.6]);
    assert_eq!(est.verdict(0, 0), Verdict::Singular);
    assert_eq!(est.verdict(0, 1), Verdict::Singular);
    assert_eq!(est.verdict(1, 0), Verdict::Regular);
    assert_eq!(est.verdict(1, 1), Verdict::Regular);
    assert_eq!(est.singular().count(), 2);
}

#[test]
fn zero_and_smooth_inputs_are_regular() {
    for u in [Dist::zero(), Dist::gaussian()] {
        let est = line(&u, &[0.0, 0.3]);
        assert!(est.entries.iter().all(|e| e.verdict() == Verdict::Regular));
    }
    // the atom at distance 0.5 still sits inside the window and only decays like
    // e^{-|xi|/4}, which is not enough for REGULAR under the default calibration
    let est = line(&Dist::delta(0.0), &[0.5, -0.5, 1.5]);
    assert!(est.entries[..4].iter().all(|e| e.verdict() != Verdict::Singular));
    assert!(est.entries[4..].iter().all(|e| e.verdict() == Verdict::Regular));
}

#[test]
fn reflection_for_real_input() {
    let u = Dist::heaviside(0.0);
    let pts = [-0.4, 0.0, 0.4];
    let a = line(&u, &pts);
    let b = line(&u.conj(), &pts);
    let r = check_reflection(&a, &b).unwrap();
    assert!(r.ok, "{:?}", r.mismatches);
    let other = line(&u, &[0.0]);
    assert!(check_reflection(&a, &other).is_err());
}

#[test]
fn identity_pullback_is_unchanged() {
    let est = line(&Dist::heaviside(0.0), &[0.0, 0.5]);
    let moved = pullback_wavefront(&Affine::one_dim(1.0, 0.0), &est).unwrap();
    assert_eq!(verdict_map(&moved), verdict_map(&est));
    assert!(pullback_wavefront(&Affine::one_dim(0.0, 1.0), &est).is_err());
}

#[test]
fn json_has_documented_keys() {
    let est = line(&Dist::heaviside(0.0), &[0.0]);
    let j = est.to_json();
    assert_eq!(j["cone"], "line");
    assert!(j["weight"].as_str().unwrap().starts_with("gevrey:1"));
    let e = &j["entries"][0];
    for k in ["x", "dir", "gamma", "logC", "coverage", "verdict"] {
        assert!(e.get(k).is_some(), "missing {}", k);
    }
    assert_eq!(e["verdict"], "SINGULAR");
    let svg = est.to_svg(0);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn decay_fit_invariants() {
    let cfg = FitConfig::default();
    let m = gevrey(1.0, &cfg);
    let lambdas: Vec<f64> = cfg.lambdas();
    for rate in [0.0, 0.01, 0.1, 1.0, 4.0] {
        // |F| = e^{-rate * lambda}
        let prof = RayProfile {
            x0: vec![0.0],
            direction: vec![1.0],
            mags: lambdas.iter().map(|l| (-rate * l).exp()).collect(),
            floors: vec![1e-300; lambdas.len()],
            lambdas: lambdas.clone(),
            shape: cfg.shape(),
            stencil_radius: 0.125,
        };
        let f = fit_omega_decay(&prof, &m, &cfg).unwrap();
        assert!(f.gamma_hat >= cfg.gamma_min && f.gamma_hat <= cfg.gamma_max);
        assert!((f.coverage - f.gamma_hat / cfg.gamma_ref).abs() < 1e-12);
        let expect = if f.coverage >= cfg.tau_reg {
            Verdict::Regular
        } else if f.coverage <= cfg.tau_sing {
            Verdict::Singular
        } else {
            Verdict::Inconclusive
        };
        assert_eq!(f.verdict, expect);
    }
}

#[test]
fn config_validation() {
    let cfg = FitConfig { tau_sing: 0.6, ..FitConfig::default() };
    let pts = vec![vec![0.0]];
    let r = estimate_wavefront(&Dist::zero(), &pts, &ConeGrid::Line, &gevrey(1.0, &cfg), &Generator::euclidean(1).unwrap(), &cfg);
    assert!(r.is_err());
    let cfg = FitConfig::default();
    let r = estimate_wavefront(&Dist::zero(), &pts, &ConeGrid::Circle(8), &gevrey(1.0, &cfg), &Generator::euclidean(1).unwrap(), &cfg);
    assert!(r.is_err());
}

#[test]
fn cone_grid_antipodes() {
    assert_eq!(ConeGrid::Line.antipode(0), Some(1));
    assert_eq!(ConeGrid::Circle(8).antipode(3), Some(7));
    assert_eq!(ConeGrid::Circle(5).antipode(0), None);
    let d: Vec<Vec<f64>> = ConeGrid::Circle(4).directions();
    assert!((d[1][0]).abs() < 1e-15 && (d[1][1] - 1.0).abs() < 1e-15);
}

#[test]
fn tensor_jump_along_first_axis() {
    let cfg = FitConfig { n_lambda: 8, lambda_max: 256.0, ..FitConfig::default() };
    let u = Tensor2 { factors: [Distribution::heaviside(0.0), Distribution::one()] };
    let p = Generator::euclidean(2).unwrap();
    let est = estimate_wavefront(&u, &[vec![0.0, 0.0], vec![0.6, 0.0]], &ConeGrid::Circle(8), &gevrey(1.0, &cfg), &p, &cfg).unwrap();
    assert_eq!(est.verdict(0, 0), Verdict::Singular);
    assert_eq!(est.verdict(0, 4), Verdict::Singular);
    assert_eq!(est.verdict(0, 2), Verdict::Regular);
    assert_eq!(est.verdict(0, 6), Verdict::Regular);
    assert!((0..8).all(|d| est.verdict(1, d) == Verdict::Regular));
    // a single conormal pair on an 8-direction grid shows up as two isolated flips
    assert_eq!(est.isolated_flips(), vec![(0, 0), (0, 4)]);
    // quartic generators are rejected for non-separable input only
    let q = Generator::new(2, vec![(vec![2, 0], 1.0), (vec![1, 1], 0.5), (vec![0, 2], 1.0)]).unwrap();
    let est = estimate_wavefront(&u, &[vec![0.0, 0.0]], &ConeGrid::Circle(8), &gevrey(1.0, &cfg), &q, &cfg).unwrap();
    assert!(est.entries.iter().all(|e| e.fit.is_err()));
}
