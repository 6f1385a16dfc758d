use liveness::analysis::{
    asymptotic_designated_loss, asymptotic_designated_loss_by_root, classify_regime,
    transition_ct_discrete, transition_ct_limit,
};
use liveness::lower_bound::{minimize_designated_star, minimize_symmetric_star};
use liveness::model::ProtocolParams;
use proptest::prelude::*;

#[test]
fn transition_bracket_has_sign_change() {
    for (h, n, b) in [
        (3, 6, 0.0),
        (2, 5, 0.0),
        (14, 19, 0.0),
        (4, 8, 1.0),
        (5, 9, 0.5),
    ] {
        let t = transition_ct_discrete(h, n, b).unwrap();
        assert!(t.c_t.is_finite());
        let below = t.c_t - t.bracket;
        let above = t.c_t + t.bracket;
        let params = |c| ProtocolParams::new(h, n, c, b).unwrap();
        let p = params(below);
        assert!(
            minimize_designated_star(&p).loss <= minimize_symmetric_star(&p).loss,
            "({h},{n}) below {below}"
        );
        let p = params(above);
        assert!(
            minimize_designated_star(&p).loss > minimize_symmetric_star(&p).loss,
            "({h},{n}) above {above}"
        );
        assert!(t.bracket <= 1e-4 * t.c_t);
    }
}

/// Small-n values are not monotone, so only the largest n is held to 10%.
#[test]
fn discrete_transition_approaches_limit() {
    let (h, n) = (67, 100);
    let limit = transition_ct_limit(h as f64 / n as f64, 0.0).unwrap().c_t;
    let c_t = transition_ct_discrete(h, n, 0.0).unwrap().c_t;
    let err = (c_t - limit).abs() / limit;
    assert!(err < 0.10, "relative error at n = 100: {err}");
}

#[test]
fn regime_phases_never_go_backwards() {
    for (h, n) in [(1, 3), (2, 4), (2, 5), (3, 6), (4, 7), (3, 7)] {
        let mut last = 0u8;
        let mut c = 1.0 + 1.0 / (n - h) as f64;
        while c < 200.0 {
            let phase = classify_regime(&ProtocolParams::unstaked(h, n, c).unwrap())
                .phase
                .number();
            assert!(phase >= last, "({h},{n}) C={c}: phase {phase} after {last}");
            last = phase;
            c *= 1.1;
        }
    }
}

#[test]
fn half_penalty_stake_keeps_loss_order_one_over_tau() {
    for tau in [0.25, 0.5, 0.67, 0.9, 1.0] {
        for exp in 3..=7 {
            let c = 10f64.powi(exp);
            let d = asymptotic_designated_loss(tau, c, c / 2.0).unwrap();
            assert!(d <= 4.0 / tau, "tau {tau} C {c}: {d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lambert_form_matches_root_form(tau in 0.01f64..=1.0, log_c in 0.01f64..18.0, stake_frac in prop_oneof![Just(0.0), 0.0f64..1.0]) {
        let c = log_c.exp();
        let b = stake_frac * c;
        let lw = asymptotic_designated_loss(tau, c, b).unwrap();
        let root = asymptotic_designated_loss_by_root(tau, c, b).unwrap();
        prop_assert!((lw - root).abs() <= 1e-8 * lw.abs().max(1.0), "{lw} vs {root}");
    }

    #[test]
    fn limit_equation_holds(tau in 0.01f64..0.95, b in 0.0f64..100.0) {
        let sol = transition_ct_limit(tau, b).unwrap();
        prop_assert!(sol.residual.abs() < 1e-10 * sol.c_t.max(1.0));
        prop_assert!(sol.x > 0.0);
        prop_assert!((sol.c_t - sol.x.exp()).abs() <= 1e-12 * sol.c_t);
    }
}
