use std::collections::HashSet;

use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpmcert::certify::{acde, gamma_functional, pearl_delta};
use tpmcert::classical::{
    check_corrected_bound, classical_bounds, classical_minimum_gamma, enumerate_strategies,
    lemma1_check, lemma1_holds, random_mixture, strategies, strategy_behavior, ClassicalStrategy,
    Mixture, MAX_SETTINGS, MIXTURE_SEED,
};
use tpmcert::Error;

fn r(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

/// Γ of a deterministic vertex counted directly: term (b₀, b₁) is the
/// minimum over x of [a(x)=0 ∧ b(0,x)=b₀] + [a(x)=1 ∧ b(1,x)=b₁].
fn vertex_gamma_oracle(s: &ClassicalStrategy) -> i64 {
    let mut total = 0;
    for b0 in 0..2 {
        for b1 in 0..2 {
            total += (0..s.x_size())
                .map(|x| {
                    let a = s.a(x);
                    let hit = if a == 0 { s.b(0, x) == b0 } else { s.b(1, x) == b1 };
                    hit as i64
                })
                .min()
                .unwrap();
        }
    }
    total
}

#[test]
fn vertex_counts_and_uniqueness() {
    for (n, crosstalk, want) in [(4, false, 64), (2, false, 16), (2, true, 64), (4, true, 4096)] {
        let all = enumerate_strategies(n, crosstalk).unwrap();
        assert_eq!(all.len(), want);
        let unique: HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), want);
    }
    assert_eq!(strategies(8, false).unwrap().count(), 1024);
}

#[test]
fn oversized_alphabet_is_a_resource_error() {
    assert!(matches!(
        enumerate_strategies(MAX_SETTINGS + 1, false),
        Err(Error::Resource(_))
    ));
    assert!(matches!(
        ClassicalStrategy::new(&[0; 9], &[0, 0], false),
        Err(Error::Resource(_))
    ));
    assert!(ClassicalStrategy::new(&[0, 1], &[0, 2], false).is_err());
    assert!(ClassicalStrategy::new(&[0, 1], &[0, 1], true).is_err());
}

#[test]
fn gamma_of_every_vertex_matches_counting_oracle() {
    for n in 1..=4 {
        for crosstalk in [false, true] {
            for s in strategies(n, crosstalk).unwrap() {
                let b = strategy_behavior::<Rational64>(&s).0;
                assert_eq!(gamma_functional(&b).unwrap().value, r(vertex_gamma_oracle(&s)));
            }
        }
    }
}

#[test]
fn classical_minimum_gamma_values() {
    assert_eq!(classical_minimum_gamma(1).unwrap(), r(2));
    for n in 2..=6 {
        assert_eq!(classical_minimum_gamma(n).unwrap(), r(1), "|X| = {n}");
    }
}

#[test]
fn facet_facts_by_full_enumeration() {
    let b = classical_bounds(4).unwrap();
    assert_eq!(b.vertices, 64);
    assert_eq!(b.crosstalk_vertices, 4096);
    assert_eq!(b.min_gamma, r(1));
    assert!(b.max_pearl <= r(1));
    assert!(b.min_corrected >= r(1));
    // crosstalk can push Pearl's functional above 1
    assert!(b.max_pearl_crosstalk > r(1));
}

#[test]
fn corrected_bound_over_crosstalk_vertices() {
    for n in [2, 3, 4] {
        let all = enumerate_strategies(n, true).unwrap();
        assert!(check_corrected_bound(&all).unwrap() >= r(1), "|X| = {n}");
    }
    let plain = enumerate_strategies(4, false).unwrap();
    assert_eq!(check_corrected_bound(&plain).unwrap(), r(1));
}

#[test]
fn deterministic_examples() {
    let s = ClassicalStrategy::new(&[0, 0, 0], &[0, 1], false).unwrap();
    let (b, d) = strategy_behavior::<Rational64>(&s);
    for x in 0..3 {
        assert_eq!(b.p(0, 0, x), r(1));
    }
    for a in 0..2 {
        for bb in 0..2 {
            assert_eq!(d.p(bb, a, 0), r((a == bb) as i64));
        }
    }
    let parity = ClassicalStrategy::new(&[0, 1], &[0, 1, 0, 1], true).unwrap();
    let (_, d) = strategy_behavior::<Rational64>(&parity);
    assert_eq!(acde(&d), r(1));
}

#[test]
fn random_mixtures_stay_in_the_classical_region() {
    let pool = enumerate_strategies(4, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(MIXTURE_SEED);
    for _ in 0..10_000 {
        let m = random_mixture(&pool, 6, &mut rng).unwrap();
        let b = m.behavior();
        assert!(gamma_functional(&b).unwrap().value >= 1.0 - 1e-12);
        assert!(pearl_delta(&b) <= 1.0 + 1e-12);
    }
}

#[test]
fn mixture_gamma_dominates_minimum_of_parts() {
    let s = ClassicalStrategy::new(&[0, 1], &[0, 1], false).unwrap();
    let t = ClassicalStrategy::new(&[1, 1], &[1, 0], false).unwrap();
    let m = Mixture::new(vec![s, t], vec![0.3, 0.7]).unwrap();
    let g = gamma_functional(&m.behavior()).unwrap().value;
    let gs = vertex_gamma_oracle(&s).min(vertex_gamma_oracle(&t)) as f64;
    assert!(g >= gs);
}

#[test]
fn potential_outcome_bounds() {
    let pool = enumerate_strategies(4, false).unwrap();
    assert!(lemma1_check(&pool, 0, MIXTURE_SEED).unwrap());
    assert!(lemma1_check(&pool, 1000, MIXTURE_SEED).unwrap());
    // with crosstalk the bounds read at a single setting can fail
    let crosstalk = enumerate_strategies(2, true).unwrap();
    let violators = crosstalk
        .iter()
        .filter(|s| !lemma1_holds(&Mixture::new(vec![**s], vec![1.0]).unwrap()))
        .count();
    assert!(violators > 0);
    assert!(!lemma1_check(&crosstalk, 0, MIXTURE_SEED).unwrap());
}
