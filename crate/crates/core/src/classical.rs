//! Deterministic classical-causal strategies and exact bounds by vertex
//! enumeration.
//!
//! A strategy fixes a response `a(x)` and a response `b(a)` (or `b(a, x)`
//! when crosstalk from the setting to `B` is allowed). Every classical
//! behaviour is a mixture of these vertices, and the functionals of interest
//! are extremised on them.

use num_rational::Rational64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::{acde, gamma_functional, pearl_delta};
use crate::error::{Error, Result};
use crate::process::{Behavior, DoTable};
use crate::scalar::Prob;

/// Largest setting alphabet accepted by the enumerators.
pub const MAX_SETTINGS: usize = 8;

/// One deterministic vertex, stored as bit masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalStrategy {
    x_size: u8,
    a_bits: u8,
    b_bits: u16,
    crosstalk: bool,
}

impl ClassicalStrategy {
    /// `a_response[x]` and `b_response[a]` (no crosstalk) or
    /// `b_response[a * |X| + x]` (crosstalk).
    pub fn new(a_response: &[usize], b_response: &[usize], crosstalk: bool) -> Result<Self> {
        let n = a_response.len();
        if n == 0 || n > MAX_SETTINGS {
            return Err(Error::Resource(format!(
                "setting alphabet of size {n} outside 1..={MAX_SETTINGS}"
            )));
        }
        let expect_b = if crosstalk { 2 * n } else { 2 };
        if b_response.len() != expect_b {
            return Err(Error::Validation(format!(
                "expected {expect_b} b-responses, got {}",
                b_response.len()
            )));
        }
        if a_response.iter().chain(b_response).any(|&v| v > 1) {
            return Err(Error::Validation("responses must be 0 or 1".into()));
        }
        let pack = |v: &[usize]| v.iter().enumerate().fold(0u32, |m, (i, &b)| m | ((b as u32) << i));
        Ok(Self {
            x_size: n as u8,
            a_bits: pack(a_response) as u8,
            b_bits: pack(b_response) as u16,
            crosstalk,
        })
    }

    pub fn x_size(&self) -> usize {
        self.x_size as usize
    }

    pub fn is_crosstalk(&self) -> bool {
        self.crosstalk
    }

    pub fn a(&self, x: usize) -> usize {
        ((self.a_bits >> x) & 1) as usize
    }

    pub fn b(&self, a: usize, x: usize) -> usize {
        let bit = if self.crosstalk {
            a * self.x_size as usize + x
        } else {
            a
        };
        ((self.b_bits >> bit) & 1) as usize
    }
}

fn check_size(x_size: usize) -> Result<()> {
    if x_size == 0 || x_size > MAX_SETTINGS {
        return Err(Error::Resource(format!(
            "setting alphabet of size {x_size} outside 1..={MAX_SETTINGS}"
        )));
    }
    Ok(())
}

/// Lazily enumerates every vertex: `2^|X|·4` without crosstalk,
/// `2^|X|·4^|X|` with crosstalk.
pub fn strategies(
    x_size: usize,
    crosstalk: bool,
) -> Result<impl Iterator<Item = ClassicalStrategy>> {
    check_size(x_size)?;
    let b_width = if crosstalk { 2 * x_size } else { 2 };
    let a_count = 1u32 << x_size;
    let b_count = 1u32 << b_width;
    Ok((0..a_count).flat_map(move |a_bits| {
        (0..b_count).map(move |b_bits| ClassicalStrategy {
            x_size: x_size as u8,
            a_bits: a_bits as u8,
            b_bits: b_bits as u16,
            crosstalk,
        })
    }))
}

pub fn enumerate_strategies(x_size: usize, crosstalk: bool) -> Result<Vec<ClassicalStrategy>> {
    Ok(strategies(x_size, crosstalk)?.collect())
}

/// Deterministic behaviour of a vertex and its interventional table; the
/// table is setting-indexed for crosstalk strategies.
pub fn strategy_behavior<P: Prob>(s: &ClassicalStrategy) -> (Behavior<P>, DoTable<P>) {
    let n = s.x_size();
    let one_hot = |v: usize| -> [P; 2] {
        let mut r = [P::zero(); 2];
        r[v] = P::one();
        r
    };
    let probs = (0..n)
        .map(|x| {
            let a = s.a(x);
            let mut row = [[P::zero(); 2]; 2];
            row[a] = one_hot(s.b(a, x));
            row
        })
        .collect();
    let behavior = Behavior::indexed(probs).expect("deterministic rows are normalised");
    let table = if s.crosstalk {
        let rows = (0..n).map(|x| [one_hot(s.b(0, x)), one_hot(s.b(1, x))]).collect();
        DoTable::per_setting(behavior.settings().to_vec(), rows)
    } else {
        DoTable::collapsed([one_hot(s.b(0, 0)), one_hot(s.b(1, 0))])
    }
    .expect("deterministic rows are normalised");
    (behavior, table)
}

/// Exact minimum of Γ over all crosstalk-free vertices.
pub fn classical_minimum_gamma(x_size: usize) -> Result<Rational64> {
    let mut best: Option<Rational64> = None;
    for s in strategies(x_size, false)? {
        let g = gamma_functional(&strategy_behavior::<Rational64>(&s).0)?.value;
        best = Some(best.map_or(g, |b| b.min(g)));
    }
    Ok(best.expect("alphabet is nonempty"))
}

/// Worst case of `Γ + 2·ACDE` over the given vertices.
pub fn check_corrected_bound(strategies: &[ClassicalStrategy]) -> Result<Rational64> {
    min_corrected(strategies.iter().copied())
}

fn min_corrected(it: impl Iterator<Item = ClassicalStrategy>) -> Result<Rational64> {
    let mut best: Option<Rational64> = None;
    for s in it {
        let (b, d) = strategy_behavior::<Rational64>(&s);
        let v = gamma_functional(&b)?.value + Rational64::from_integer(2) * acde(&d);
        best = Some(best.map_or(v, |m| m.min(v)));
    }
    best.ok_or_else(|| Error::Validation("no strategies given".into()))
}

/// Exact extremal values over both vertex sets for one alphabet size.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalBounds {
    pub x_size: usize,
    pub vertices: usize,
    pub min_gamma: Rational64,
    pub max_pearl: Rational64,
    pub crosstalk_vertices: usize,
    pub min_corrected: Rational64,
    pub max_pearl_crosstalk: Rational64,
}

pub fn classical_bounds(x_size: usize) -> Result<ClassicalBounds> {
    let mut vertices = 0;
    let mut min_gamma: Option<Rational64> = None;
    let mut max_pearl = Rational64::zero();
    for s in strategies(x_size, false)? {
        let b = strategy_behavior::<Rational64>(&s).0;
        let g = gamma_functional(&b)?.value;
        min_gamma = Some(min_gamma.map_or(g, |m| m.min(g)));
        max_pearl = max_pearl.max(pearl_delta(&b));
        vertices += 1;
    }
    let mut crosstalk_vertices = 0;
    let mut min_corr: Option<Rational64> = None;
    let mut max_pearl_crosstalk = Rational64::zero();
    for s in strategies(x_size, true)? {
        let (b, d) = strategy_behavior::<Rational64>(&s);
        let v = gamma_functional(&b)?.value + Rational64::from_integer(2) * acde(&d);
        min_corr = Some(min_corr.map_or(v, |m| m.min(v)));
        max_pearl_crosstalk = max_pearl_crosstalk.max(pearl_delta(&b));
        crosstalk_vertices += 1;
    }
    Ok(ClassicalBounds {
        x_size,
        vertices,
        min_gamma: min_gamma.expect("nonempty"),
        max_pearl,
        crosstalk_vertices,
        min_corrected: min_corr.expect("nonempty"),
        max_pearl_crosstalk,
    })
}

/// Convex combination of vertices sharing one alphabet.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub strategies: Vec<ClassicalStrategy>,
    pub weights: Vec<f64>,
}

impl Mixture {
    pub fn new(strategies: Vec<ClassicalStrategy>, weights: Vec<f64>) -> Result<Self> {
        if strategies.is_empty() || strategies.len() != weights.len() {
            return Err(Error::Validation("one weight per strategy required".into()));
        }
        let n = strategies[0].x_size();
        if strategies.iter().any(|s| s.x_size() != n) {
            return Err(Error::Validation("strategies over different alphabets".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("weights must be a probability vector".into()));
        }
        Ok(Self {
            strategies,
            weights,
        })
    }

    pub fn behavior(&self) -> Behavior<f64> {
        let n = self.strategies[0].x_size();
        let mut probs = vec![[[0.0; 2]; 2]; n];
        for (s, &w) in self.strategies.iter().zip(&self.weights) {
            for (x, row) in probs.iter_mut().enumerate() {
                let a = s.a(x);
                row[a][s.b(a, x)] += w;
            }
        }
        Behavior::indexed(probs).expect("mixture of normalised rows")
    }

    /// `P(B_do(a) = b)`, reading crosstalk responses at setting 0.
    pub fn do_marginals(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (s, &w) in self.strategies.iter().zip(&self.weights) {
            for (a, row) in out.iter_mut().enumerate() {
                row[s.b(a, 0)] += w;
            }
        }
        out
    }

    /// `P(B_do(0) = b₀, B_do(1) = b₁)`, indexed `[b₀][b₁]`.
    pub fn joint_counterfactual(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (s, &w) in self.strategies.iter().zip(&self.weights) {
            out[s.b(0, 0)][s.b(1, 0)] += w;
        }
        out
    }
}

/// Checks both potential-outcome bounds on a mixture:
/// `P(B_do(a)=b) ≥ sup_x P(a,b|x)` and
/// `P(B_do(0)=b₀, B_do(1)=b₁) ≤ inf_x [P(0,b₀|x) + P(1,b₁|x)]`.
pub fn lemma1_holds(m: &Mixture) -> bool {
    const TOL: f64 = 1e-12;
    let b = m.behavior();
    let marg = m.do_marginals();
    let joint = m.joint_counterfactual();
    for a in 0..2 {
        for bb in 0..2 {
            let sup = (0..b.num_settings()).map(|x| b.p(a, bb, x)).fold(0.0, f64::max);
            if marg[a][bb] < sup - TOL {
                return false;
            }
        }
    }
    for b0 in 0..2 {
        for b1 in 0..2 {
            let inf = (0..b.num_settings())
                .map(|x| b.p(0, b0, x) + b.p(1, b1, x))
                .fold(f64::INFINITY, f64::min);
            if joint[b0][b1] > inf + TOL {
                return false;
            }
        }
    }
    true
}

/// Default seed for random mixtures.
pub const MIXTURE_SEED: u64 = 0x5eed;

/// Random mixture of up to `max_parts` vertices drawn from `pool`.
pub fn random_mixture<R: Rng + ?Sized>(
    pool: &[ClassicalStrategy],
    max_parts: usize,
    rng: &mut R,
) -> Result<Mixture> {
    if pool.is_empty() {
        return Err(Error::Validation("empty strategy pool".into()));
    }
    let parts = rng.random_range(1..=max_parts.max(1));
    let chosen: Vec<ClassicalStrategy> = (0..parts)
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect();
    let raw: Vec<f64> = (0..parts).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let drift = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    Mixture::new(chosen, weights)
}

/// Verifies the potential-outcome bounds on every vertex in `pool` (when
/// `mixtures == 0`) or on `mixtures` random mixtures of them.
pub fn lemma1_check(pool: &[ClassicalStrategy], mixtures: usize, seed: u64) -> Result<bool> {
    if mixtures == 0 {
        for s in pool {
            if !lemma1_holds(&Mixture::new(vec![*s], vec![1.0])?) {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..mixtures {
        if !lemma1_holds(&random_mixture(pool, 6, &mut rng)?) {
            return Ok(false);
        }
    }
    Ok(true)
}
