use proptest::prelude::*;
use relaysec::analytic::{
    d_max_direct, d_max_relay, p_direct_colluding, p_relay_colluding_lower, p_relay_colluding_lower_from_hops,
    p_selected_relay_colluding_lower, secure_gain, DistanceBound, SecrecyTarget, SystemParams,
};
use relaysec::decision::{decide, Outcome};
use relaysec::geometry::{hop_distances, PolarPoint};
use relaysec::quadrature::{p_relay_colluding_exact, QuadratureConfig};

fn params() -> impl Strategy<Value = SystemParams> {
    (2.2f64..8.0, -7.0f64..-2.0, -6.0f64..0.0, 1.0f64..300.0)
        .prop_map(|(a, le, lr, d)| SystemParams::new(a, 10f64.powf(le), 10f64.powf(lr), d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn colluding_relay_orderings(p in params(), r in 0.0f64..1.0, theta in -3.2f64..3.2) {
        let relay = PolarPoint::new(r * p.d_sd(), theta).unwrap();
        let exact = p_relay_colluding_exact(relay, &p, &QuadratureConfig::default()).unwrap();
        let hops = p_relay_colluding_lower_from_hops(relay, &p);
        prop_assert!(exact <= 1.0);
        prop_assert!(exact >= hops - 1e-12);
        prop_assert!(hops >= p_relay_colluding_lower(relay, &p) - 1e-12);
        // the correlation gain never exceeds the weaker hop's exponent
        let (d_sr, d_rd) = hop_distances(relay, p.d_sd()).unwrap();
        let cap = (p.a() * d_sr.min(d_rd).powi(2)).exp();
        if hops > 1e-250 {
            prop_assert!(exact / hops <= cap * (1.0 + 1e-9));
        }
    }

    #[test]
    fn thresholds_match_probabilities(p in params(), delta in 0.05f64..0.95) {
        let target = SecrecyTarget::new(delta).unwrap();
        if let DistanceBound::Bounded(d) = d_max_direct(target, &p) {
            let at = p.with_d_sd(d.max(1e-9)).unwrap();
            prop_assert!((p_direct_colluding(&at) - delta).abs() < 1e-9);
        }
        if let DistanceBound::Bounded(d) = d_max_relay(target, &p) {
            if d > 0.0 {
                let at = p.with_d_sd(d).unwrap();
                prop_assert!((p_selected_relay_colluding_lower(&at) - delta).abs() < 1e-9);
            }
        }
        let g = secure_gain(target, &p).unwrap();
        prop_assert!((0.0..=std::f64::consts::SQRT_2 + 1e-12).contains(&g));
    }

    #[test]
    fn decisions_are_sound(p in params(), delta in 0.05f64..0.95) {
        let target = SecrecyTarget::new(delta).unwrap();
        let r = decide(&p, target);
        prop_assert!(r.is_consistent());
        match r.outcome {
            Outcome::DirectSufficient => prop_assert!(p_direct_colluding(&p) >= delta - 1e-12),
            Outcome::UseRelay => prop_assert!(p_selected_relay_colluding_lower(&p) >= delta - 1e-12),
            Outcome::Infeasible => {}
        }
    }
}
