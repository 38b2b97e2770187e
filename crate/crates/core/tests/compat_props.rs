use std::f64::consts::PI;

use proptest::prelude::*;
use tpmcert::compat::{
    criterion_value, effect_params, induced_assemblage, jointly_measurable,
    partial_swap_compat_region, partial_swap_pair_params, QubitEffectParams,
};
use tpmcert::linalg::gates::{cnot, swap};
use tpmcert::process::BinaryPovm;
use tpmcert::proclib::{bloch_state, kets, partial_swap, pure_state};
use tpmcert::{EffectParams, Matrix};

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn scaled(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Unbiased qubit pairs: jointly measurable iff ‖r₀+r₁‖ + ‖r₀−r₁‖ ≤ 2.
fn unbiased_oracle(r0: [f64; 3], r1: [f64; 3]) -> f64 {
    let sum = [r0[0] + r1[0], r0[1] + r1[1], r0[2] + r1[2]];
    let diff = [r0[0] - r1[0], r0[1] - r1[1], r0[2] - r1[2]];
    2.0 - norm(sum) - norm(diff)
}

fn angles() -> impl Strategy<Value = (f64, f64)> {
    (0.0..PI, 0.0..2.0 * PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn criterion_is_symmetric(
        g0 in -0.4f64..0.4, g1 in -0.4f64..0.4,
        d0 in angles(), d1 in angles(), l0 in 0.0f64..1.0, l1 in 0.0f64..1.0,
    ) {
        let p = EffectParams::new(g0, scaled(unit(d0.0, d0.1), l0 * (1.0 - g0.abs()))).unwrap();
        let q = EffectParams::new(g1, scaled(unit(d1.0, d1.1), l1 * (1.0 - g1.abs()))).unwrap();
        let (ok_pq, v_pq) = jointly_measurable(&p, &q).unwrap();
        let (ok_qp, v_qp) = jointly_measurable(&q, &p).unwrap();
        prop_assert_eq!(ok_pq, ok_qp);
        prop_assert_eq!(v_pq, v_qp);
    }

    #[test]
    fn unbiased_pairs_agree_with_norm_criterion(
        d0 in angles(), d1 in angles(), l0 in 0.05f64..0.999, l1 in 0.05f64..0.999,
    ) {
        let r0 = scaled(unit(d0.0, d0.1), l0);
        let r1 = scaled(unit(d1.0, d1.1), l1);
        let oracle = unbiased_oracle(r0, r1);
        prop_assume!(oracle.abs() > 1e-6);
        let p = EffectParams::new(0.0, r0).unwrap();
        let q = EffectParams::new(0.0, r1).unwrap();
        let (ok, _) = jointly_measurable(&p, &q).unwrap();
        prop_assert_eq!(ok, oracle > 0.0);
    }

    #[test]
    fn effect_params_round_trip(g in -0.5f64..0.5, d in angles(), l in 0.0f64..1.0) {
        let p = EffectParams::new(g, scaled(unit(d.0, d.1), l * (1.0 - g.abs()))).unwrap();
        let back = effect_params(&p.effect()).unwrap();
        prop_assert!((back.gamma_bias - g).abs() < 1e-12);
        for i in 0..3 {
            prop_assert!((back.bloch[i] - p.bloch[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn partial_swap_parameters_match_assemblage_on_random_angles() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let alpha = rng.random_range(0.0..PI);
        let (ts, ps) = (rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
        let (te, pe) = (rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
        let reps = [pure_state(&kets::zero()), bloch_state(ts, ps)];
        let f = BinaryPovm::from_effect(bloch_state(te, pe)).unwrap();
        let g = induced_assemblage(&partial_swap(alpha), &reps, &f).unwrap();
        let closed = partial_swap_pair_params(alpha, ts, ps, te, pe);
        for a in 0..2 {
            let direct = effect_params(g.effect(0, a)).unwrap();
            assert!((direct.gamma_bias - closed[a].gamma_bias).abs() < 1e-12);
            for i in 0..3 {
                assert!((direct.bloch[i] - closed[a].bloch[i]).abs() < 1e-12, "a={a} i={i}");
            }
            let f_expected = (alpha / 2.0).cos();
            assert!((closed[a].sharpness() - f_expected).abs() < 1e-9);
        }
        let v_direct = criterion_value(
            &effect_params(g.effect(0, 0)).unwrap(),
            &effect_params(g.effect(0, 1)).unwrap(),
        )
        .unwrap();
        let v_closed = criterion_value(&closed[0], &closed[1]).unwrap();
        assert!((v_direct - v_closed).abs() < 1e-10);
    }
}

#[test]
fn identity_and_swap_assemblages() {
    let reps = [pure_state(&kets::plus()), pure_state(&kets::minus())];
    let f = BinaryPovm::along([0.0, 0.0, 1.0]).unwrap();
    let id = induced_assemblage(&Matrix::identity(4), &reps, &f).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let p = reps[a].trace_product_re(f.effect(b));
            assert!(id.effect(b, a).max_abs_diff(&Matrix::identity(2).scale_real(p)) < 1e-12);
        }
    }
    let sw = induced_assemblage(&swap::<f64>(), &reps, &f).unwrap();
    for a in 0..2 {
        assert!(sw.effect(0, a).max_abs_diff(f.effect(0)) < 1e-12);
    }
    let e = |g: &tpmcert::compat::Assemblage<f64>, a| effect_params(g.effect(0, a)).unwrap();
    assert!(jointly_measurable(&e(&id, 0), &e(&id, 1)).unwrap().0);
    assert!(jointly_measurable(&e(&sw, 0), &e(&sw, 1)).unwrap().0);
    assert!(induced_assemblage(&cnot::<f64>().scale_real(2.0), &reps, &f).is_err());
}

#[test]
fn textbook_pairs() {
    let sharp = |r: [f64; 3]| EffectParams::new(0.0, r).unwrap();
    let (ok, v) = jointly_measurable(&sharp([1.0, 0.0, 0.0]), &sharp([0.0, 0.0, 1.0])).unwrap();
    assert!(!ok && v < 0.0);
    let (ok, v) = jointly_measurable(&sharp([0.0, 0.0, 1.0]), &sharp([0.0, 0.0, -1.0])).unwrap();
    assert!(ok && v.abs() < 1e-12);
    let eta = std::f64::consts::FRAC_1_SQRT_2;
    let at = |s: f64| {
        jointly_measurable(&sharp([s, 0.0, 0.0]), &sharp([0.0, 0.0, s])).unwrap().0
    };
    assert!(at(eta - 1e-6));
    assert!(!at(eta + 1e-6));
    assert!(QubitEffectParams::new(0.5, [0.0, 0.0, 0.9]).is_err());
}

#[test]
fn compatibility_region_at_low_density() {
    let alphas = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];
    let pts = partial_swap_compat_region(&alphas, 8).unwrap();
    assert_eq!(pts.len(), alphas.len());
    for p in &pts {
        // square roots of rounding noise near pure effects
        assert!(p.sharpness_defect < 1e-7, "α = {}: {}", p.alpha, p.sharpness_defect);
        if p.alpha <= PI / 2.0 + 1e-12 || (p.alpha - PI).abs() < 1e-12 {
            assert!(p.min_margin >= -1e-9, "α = {}: {}", p.alpha, p.min_margin);
        }
    }
    assert!(pts[3].min_margin < 0.0);
    assert!(partial_swap_compat_region(&[], 8).is_err());
}
