mod common;

use common::*;
use num_rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpmcert::certify::{
    acde, certify, chsh_decomposition, corrected_lhs, fidelity_lower_bound, gamma_functional,
    pearl_delta, s_k, CertifyOptions,
};
use tpmcert::process::{born_rule, build_process, do_probabilities, Behavior, DoTable};
use tpmcert::proclib::{memory_final_povm, memory_instrument, w222};
use tpmcert::{Behavior64, ExactBehavior};

const QUANTUM_MIN: f64 = 2.0 - std::f64::consts::SQRT_2;

fn quantum_behavior(seed: u64, settings: usize) -> (Behavior64, tpmcert::DoTable64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = build_process(&random_state(&mut rng, 4), &random_unitary(&mut rng, 4)).unwrap();
    let inst = random_instrument(&mut rng, settings);
    let f = random_povm(&mut rng);
    let b = born_rule(&w, &inst, &f).unwrap();
    let d = do_probabilities(&w, inst.repreparations(), &f).unwrap();
    (b, d)
}

fn gamma_oracle(b: &Behavior64) -> f64 {
    let mut total = 0.0;
    for b0 in 0..2 {
        for b1 in 0..2 {
            total += (0..b.num_settings())
                .map(|x| b.p(0, b0, x) + b.p(1, b1, x))
                .fold(f64::INFINITY, f64::min);
        }
    }
    total
}

fn behavior_from(raw: &[f64]) -> Behavior64 {
    let probs = raw
        .chunks(4)
        .map(|c| {
            let s: f64 = c.iter().sum();
            [[c[0] / s, c[1] / s], [c[2] / s, c[3] / s]]
        })
        .collect();
    Behavior::indexed(probs).unwrap()
}

fn raw_behavior(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 4 * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gamma_matches_direct_formula(raw in raw_behavior(4)) {
        let b = behavior_from(&raw);
        prop_assert!((gamma_functional(&b).unwrap().value - gamma_oracle(&b)).abs() < 1e-14);
    }

    #[test]
    fn gamma_is_invariant_under_setting_permutation(raw in raw_behavior(4), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let b = behavior_from(&raw);
        let shuffled = Behavior::indexed(perm.iter().map(|&x| b.probs()[x]).collect()).unwrap();
        let g0 = gamma_functional(&b).unwrap().value;
        let g1 = gamma_functional(&shuffled).unwrap().value;
        prop_assert!((g0 - g1).abs() < 1e-14);
        prop_assert!((pearl_delta(&b) - pearl_delta(&shuffled)).abs() < 1e-14);
    }

    #[test]
    fn chsh_identity_on_arbitrary_behaviors(raw in raw_behavior(3)) {
        let b = behavior_from(&raw);
        let g = gamma_functional(&b).unwrap();
        let (c1, c2) = chsh_decomposition(&b, &g.argmin).unwrap();
        prop_assert!((g.value - (2.0 - (c1 + c2) / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn argmin_attains_each_minimum(raw in raw_behavior(4)) {
        let b = behavior_from(&raw);
        let g = gamma_functional(&b).unwrap();
        for b0 in 0..2 {
            for b1 in 0..2 {
                let x = g.argmin[b0][b1];
                let v = b.p(0, b0, x) + b.p(1, b1, x);
                for y in 0..4 {
                    let w = b.p(0, b0, y) + b.p(1, b1, y);
                    prop_assert!(v <= w);
                    // ties go to the smallest index
                    if y < x { prop_assert!(w > v); }
                }
            }
        }
    }

    #[test]
    fn fidelity_bound_is_monotone(g1 in QUANTUM_MIN..2.0, g2 in QUANTUM_MIN..2.0) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let (f_lo, f_hi) = (fidelity_lower_bound(lo).unwrap(), fidelity_lower_bound(hi).unwrap());
        prop_assert!(f_lo >= f_hi);
        prop_assert!((0.0..=1.0).contains(&f_lo));
    }
}

#[test]
fn chsh_identity_on_random_quantum_behaviors() {
    for seed in 0..100 {
        let (b, _) = quantum_behavior(seed, 4);
        let g = gamma_functional(&b).unwrap();
        let (c1, c2) = chsh_decomposition(&b, &g.argmin).unwrap();
        assert!((g.value - (2.0 - (c1 + c2) / 4.0)).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn quantum_behaviors_respect_bounds() {
    for seed in 100..300 {
        let (b, d) = quantum_behavior(seed, 4);
        let g = gamma_functional(&b).unwrap().value;
        assert!(g >= QUANTUM_MIN - 1e-9, "seed {seed}: Γ = {g}");
        assert!(pearl_delta(&b) <= 1.0 + 1e-9, "seed {seed}");
        assert!(acde(&d) == 0.0);
    }
}

#[test]
fn ideal_memory_report() {
    let w = w222::<f64>();
    let b = born_rule(&w, &memory_instrument(), &memory_final_povm()).unwrap();
    let d = do_probabilities(&w, memory_instrument().repreparations(), &memory_final_povm()).unwrap();
    let r = certify(&b, Some(&d), None, &CertifyOptions::default()).unwrap();
    assert!((r.gamma - QUANTUM_MIN).abs() < 1e-9);
    assert!((r.pearl_delta - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-9);
    assert_eq!(r.acde, Some(0.0));
    assert!((r.fidelity_lb.unwrap() - 1.0).abs() < 1e-9);
    assert!(r.verdict_nonclassical);
    assert!(!r.verdict_crosstalk_witnessed);
    let [c1, c2] = r.chsh.unwrap();
    assert!((c1 - 2.0 * 2f64.sqrt()).abs() < 1e-9 && (c2 - 2.0 * 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn fidelity_bound_reference_points() {
    assert!((fidelity_lower_bound(QUANTUM_MIN).unwrap() - 1.0).abs() < 1e-12);
    assert!((fidelity_lower_bound(2.0 - s_k::<f64>()).unwrap() - 0.5).abs() < 1e-12);
    let f = fidelity_lower_bound(0.642).unwrap();
    assert!((0.915..=0.925).contains(&f), "{f}");
    assert_eq!(fidelity_lower_bound(2.0).unwrap(), 0.0);
    assert!(fidelity_lower_bound(0.5).is_err());
    assert!(fidelity_lower_bound(2.1).is_err());
}

#[test]
fn exact_rational_functionals() {
    let r = |n: i64, d: i64| Rational64::new(n, d);
    let q = r(1, 4);
    let uniform = ExactBehavior::indexed(vec![[[q, q], [q, q]]; 3]).unwrap();
    assert_eq!(gamma_functional(&uniform).unwrap().value, r(2, 1));
    assert_eq!(pearl_delta(&uniform), r(1, 2));
    let signaling = ExactBehavior::indexed(vec![
        [[r(1, 1), r(0, 1)], [r(0, 1), r(0, 1)]],
        [[r(0, 1), r(1, 1)], [r(0, 1), r(0, 1)]],
    ])
    .unwrap();
    assert_eq!(pearl_delta(&signaling), r(2, 1));
    let d = DoTable::per_setting(
        vec!["0".into(), "1".into()],
        vec![[[r(1, 1), r(0, 1)]; 2], [[r(1, 2), r(1, 2)]; 2]],
    )
    .unwrap();
    assert_eq!(acde(&d), r(1, 2));
    assert_eq!(
        corrected_lhs(&signaling, &d).unwrap(),
        gamma_functional(&signaling).unwrap().value + r(1, 1)
    );
}

#[test]
fn malformed_behaviors_are_rejected() {
    assert!(Behavior::indexed(vec![[[0.5, 0.5], [0.5, 0.0]]]).is_err());
    assert!(Behavior::indexed(vec![[[-0.1, 0.6], [0.5, 0.0]]]).is_err());
    assert!(Behavior::<f64>::indexed(vec![]).is_err());
    assert!(Behavior::new(vec!["a".into(), "a".into()], vec![[[0.25; 2]; 2]; 2]).is_err());
}
