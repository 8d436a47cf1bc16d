use proptest::prelude::*;

use sbm_potential::cbf::{check_bernstein_bounds, CompleteBernsteinFunction};
use sbm_potential::geometry::{certificate, distance, verify_fatness, OpenSetSpec};
use sbm_potential::kernels::jump_density;
use sbm_potential::montecarlo::{path_rng, simulate_exit, PathConfig, Process};
use sbm_potential::potential::StableOracle;
use sbm_potential::stats::{linear_fit, pairwise_sum};

fn catalog_phi() -> impl Strategy<Value = CompleteBernsteinFunction> {
    prop_oneof![
        (0.1f64..1.9).prop_map(|a| CompleteBernsteinFunction::stable(a).unwrap()),
        (0.1f64..1.9, 0.1f64..1.9, 0.1f64..5.0, 0.1f64..5.0)
            .prop_map(|(a, b, u, v)| CompleteBernsteinFunction::mixture(vec![(a, u), (b, v)]).unwrap()),
        (0.1f64..1.9, 0.1f64..5.0).prop_map(|(a, m)| CompleteBernsteinFunction::relativistic(a, m).unwrap()),
    ]
}

fn catalog_domain() -> impl Strategy<Value = OpenSetSpec> {
    prop_oneof![
        Just(OpenSetSpec::half_space()),
        (0.1f64..10.0).prop_map(OpenSetSpec::exterior_ball),
        (0.1f64..3.0).prop_map(|a| format!("cone:aperture={a}").parse().unwrap()),
        (0.1f64..10.0).prop_map(|w| format!("slab:width={w}").parse().unwrap()),
        (2.0f64..8.0, 0i32..3).prop_map(|(b, s)| OpenSetSpec::ball_chain(b, s).unwrap()),
    ]
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_ids_round_trip(f in catalog_phi()) {
        let back: CompleteBernsteinFunction = f.id().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn phi_obeys_bernstein_ratio_bounds(f in catalog_phi(), ll in -6.0f64..6.0, lt in -6.0f64..6.0) {
        let c = check_bernstein_bounds(&f, 10f64.powf(ll), 10f64.powf(lt)).unwrap();
        prop_assert!(c.pass, "{:?}", c);
    }

    #[test]
    fn phi_is_increasing(f in catalog_phi(), a in -6.0f64..6.0, b in -6.0f64..6.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(f.value(10f64.powf(lo)) <= f.value(10f64.powf(hi)));
    }

    #[test]
    fn domain_ids_round_trip(dom in catalog_domain()) {
        let back: OpenSetSpec = dom.to_string().parse().unwrap();
        prop_assert_eq!(back, dom);
    }

    #[test]
    fn signed_distance_is_one_lipschitz(dom in catalog_domain(), x in point3(), y in point3()) {
        let gap = (dom.signed_distance(&x) - dom.signed_distance(&y)).abs();
        prop_assert!(gap <= distance(&x, &y) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn complement_flips_membership(dom in catalog_domain(), x in point3()) {
        prop_assume!(dom.signed_distance(&x).abs() > 1e-9);
        let c = OpenSetSpec::Complement(Box::new(dom.clone()));
        prop_assert_ne!(dom.contains(&x), c.contains(&x));
    }

    #[test]
    fn catalog_certificates_hold_at_random_radii(dom in catalog_domain(), k in 0.0f64..9.0) {
        let cert = certificate(&dom, 3).unwrap();
        let rep = verify_fatness(&dom, &cert, &[cert.big_r * 10f64.powf(k)]).unwrap();
        prop_assert!(rep.pass, "{:?}", rep.violations);
    }

    #[test]
    fn hitting_probability_is_a_decreasing_probability(alpha in 0.1f64..1.9, a in 1.0f64..50.0, b in 1.0f64..50.0) {
        let o = StableOracle::new(3, alpha).unwrap();
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        let (pn, pf) = (o.ball_hitting_probability(1.0, near), o.ball_hitting_probability(1.0, far));
        prop_assert!((0.0..=1.0).contains(&pn) && (0.0..=1.0).contains(&pf));
        prop_assert!(pf <= pn);
    }

    #[test]
    fn exit_radius_cdf_is_monotone(alpha in 0.1f64..1.9, a in 1.0f64..100.0, b in 1.0f64..100.0) {
        let o = StableOracle::new(3, alpha).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (fl, fh) = (o.ball_exit_radius_cdf(1.0, lo), o.ball_exit_radius_cdf(1.0, hi));
        prop_assert!((0.0..=1.0).contains(&fl) && fl <= fh && fh <= 1.0);
    }

    #[test]
    fn pairwise_sum_is_order_stable_up_to_rounding(v in prop::collection::vec(-1e3f64..1e3, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * scale);
    }

    #[test]
    fn linear_fit_recovers_exact_lines(slope in -10.0f64..10.0, icept in -10.0f64..10.0) {
        let x: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| icept + slope * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9 && (f.intercept - icept).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stable_jump_density_is_homogeneous(alpha in 0.2f64..1.8, lr in -1.5f64..1.5, ls in -1.0f64..1.0) {
        let f = CompleteBernsteinFunction::stable(alpha).unwrap();
        let (r, s) = (10f64.powf(lr), 10f64.powf(ls));
        let lhs = jump_density(&f, 3, s * r).unwrap();
        let rhs = s.powf(-3.0 - alpha) * jump_density(&f, 3, r).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exits_are_reproducible_and_outside(seed in any::<u64>(), path in 0u64..1000, dom in catalog_domain()) {
        let f = CompleteBernsteinFunction::stable(1.0).unwrap();
        let p = Process::new(f, 3).unwrap();
        let cert = certificate(&dom, 3).unwrap();
        let x = cert.witness_at(cert.big_r);
        let cfg = PathConfig { rho_max: 1e4, ..PathConfig::default() };
        let a = simulate_exit(&p, &dom, &x, &cfg, &mut path_rng(seed, path));
        let b = simulate_exit(&p, &dom, &x, &cfg, &mut path_rng(seed, path));
        prop_assert_eq!(&a, &b);
        if a.exited() {
            prop_assert!(!dom.contains(&a.position));
        }
    }
}
