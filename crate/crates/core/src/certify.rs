//! Device-independent functionals on behaviours and interventional tables,
//! the memory-fidelity bound and bootstrap error propagation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counts::{resample_counts, CountKind, CountTable};
use crate::error::{Error, Result};
use crate::process::{Behavior, DoTable};
use crate::scalar::{Prob, Real};

/// The four `(b₀, b₁)` keys in report order.
pub const ARGMIN_KEYS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Value of Γ and the setting index attaining each inner minimum,
/// `argmin[b₀][b₁]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaValue<P> {
    pub value: P,
    pub argmin: [[usize; 2]; 2],
}

impl<P> GammaValue<P> {
    /// Map `"b₀b₁" → setting label`.
    pub fn argmin_labels(&self, settings: &[String]) -> BTreeMap<String, String> {
        ARGMIN_KEYS
            .iter()
            .map(|&(b0, b1)| (format!("{b0}{b1}"), settings[self.argmin[b0][b1]].clone()))
            .collect()
    }
}

/// `Γ = Σ_{b₀,b₁} min_x [P(0,b₀|x) + P(1,b₁|x)]`; ties go to the smallest
/// setting index.
pub fn gamma_functional<P: Prob>(b: &Behavior<P>) -> Result<GammaValue<P>> {
    let mut value = P::zero();
    let mut argmin = [[0usize; 2]; 2];
    for (b0, b1) in ARGMIN_KEYS {
        let (best_x, best) = gamma_term(b, b0, b1);
        argmin[b0][b1] = best_x;
        value = value + best;
    }
    Ok(GammaValue { value, argmin })
}

fn gamma_term<P: Prob>(b: &Behavior<P>, b0: usize, b1: usize) -> (usize, P) {
    let mut best_x = 0;
    let mut best = b.p(0, b0, 0) + b.p(1, b1, 0);
    for x in 1..b.num_settings() {
        let v = b.p(0, b0, x) + b.p(1, b1, x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    (best_x, best)
}

/// Γ evaluated with a fixed choice of setting per `(b₀, b₁)`.
pub fn gamma_with_argmin<P: Prob>(b: &Behavior<P>, argmin: &[[usize; 2]; 2]) -> Result<P> {
    let mut value = P::zero();
    for (b0, b1) in ARGMIN_KEYS {
        let x = argmin[b0][b1];
        if x >= b.num_settings() {
            return Err(Error::Validation(format!("argmin setting {x} out of range")));
        }
        value = value + b.p(0, b0, x) + b.p(1, b1, x);
    }
    Ok(value)
}

/// Pearl's functional `max_a Σ_b max_x P(a,b|x)`.
pub fn pearl_delta<P: Prob>(b: &Behavior<P>) -> P {
    let mut best = P::zero();
    for a in 0..2 {
        let mut sum = P::zero();
        for bb in 0..2 {
            let m = (0..b.num_settings())
                .map(|x| b.p(a, bb, x))
                .fold(P::zero(), P::max_of);
            sum = sum + m;
        }
        best = best.max_of(sum);
    }
    best
}

/// Average causal direct effect
/// `sup_{a,b,x,x'} |P(b|do(a,x)) − P(b|do(a,x'))|`.
pub fn acde<P: Prob>(d: &DoTable<P>) -> P {
    let rows = d.probs();
    let mut best = P::zero();
    for a in 0..2 {
        for b in 0..2 {
            let (lo, hi) = rows.iter().fold((rows[0][a][b], rows[0][a][b]), |(lo, hi), r| {
                (lo.min_of(r[a][b]), hi.max_of(r[a][b]))
            });
            best = best.max_of(hi - lo);
        }
    }
    best
}

/// Crosstalk-corrected left-hand side `Γ + 2·ACDE`.
pub fn corrected_lhs<P: Prob>(b: &Behavior<P>, d: &DoTable<P>) -> Result<P> {
    Ok(gamma_functional(b)?.value + P::two() * acde(d))
}

/// Splits Γ into two CHSH scores with `Γ = 2 − (chsh₁ + chsh₂)/4`.
///
/// With `d(a,x) = P(a,0|x) − P(a,1|x)`, the pair `(00, 11)` of argmin
/// settings contributes `chsh₁` and the pair `(01, 10)` contributes `chsh₂`.
pub fn chsh_decomposition<P: Prob>(b: &Behavior<P>, argmin: &[[usize; 2]; 2]) -> Result<(P, P)> {
    if b.num_settings() < 2 {
        return Err(Error::Validation(
            "CHSH decomposition needs at least two settings".into(),
        ));
    }
    if argmin.iter().flatten().any(|&x| x >= b.num_settings()) {
        return Err(Error::Validation("argmin setting out of range".into()));
    }
    let d = |a: usize, x: usize| b.p(a, 0, x) - b.p(a, 1, x);
    let m2 = P::zero() - P::two();
    let x00 = argmin[0][0];
    let x11 = argmin[1][1];
    let x01 = argmin[0][1];
    let x10 = argmin[1][0];
    let chsh1 = m2 * (d(0, x00) + d(1, x00) - d(0, x11) - d(1, x11));
    let chsh2 = m2 * (d(0, x01) - d(1, x01) - d(0, x10) + d(1, x10));
    Ok((chsh1, chsh2))
}

/// `S_K = (8 + 7√2)/17`.
pub fn s_k<T: Real>() -> T {
    (T::lit(8.0) + T::lit(7.0) * T::two().sqrt()) / T::lit(17.0)
}

/// Lower bound on the memory fidelity implied by Γ,
/// `½(1 − (Γ − 2 + S_K)/(√2 − S_K))` clamped to `[0, 1]`.
pub fn fidelity_lower_bound<T: Real>(gamma: T) -> Result<T> {
    let lo = T::two() - T::two().sqrt();
    let tol = T::lit(1e-9);
    if !(gamma >= lo - tol && gamma <= T::two() + tol) {
        return Err(Error::Domain(format!(
            "Γ = {gamma} outside the quantum range [2−√2, 2]"
        )));
    }
    let sk = s_k::<T>();
    let raw = T::lit(0.5) * (T::one() - (gamma - T::two() + sk) / (T::two().sqrt() - sk));
    Ok(raw.max(T::zero()).min(T::one()))
}

/// Resampling controls for [`bootstrap_errors`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
    /// Evaluate Γ at the argmin of the original data instead of re-selecting
    /// it per resample.
    pub frozen_argmin: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resamples: 10_000,
            seed: 42,
            frozen_argmin: false,
        }
    }
}

/// Bootstrap standard errors of the functionals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdErrors {
    pub gamma: f64,
    pub pearl_delta: f64,
    pub acde: Option<f64>,
    pub corrected_lhs: Option<f64>,
}

impl StdErrors {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("gamma".to_string(), self.gamma);
        m.insert("pearl_delta".to_string(), self.pearl_delta);
        if let Some(v) = self.acde {
            m.insert("acde".to_string(), v);
        }
        if let Some(v) = self.corrected_lhs {
            m.insert("corrected_lhs".to_string(), v);
        }
        m
    }
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

/// Nonparametric bootstrap: every resample redraws each setting's counts from
/// a multinomial at the observed frequencies. Resample `r` uses stream `r`
/// of a ChaCha generator seeded with `opts.seed`.
pub fn bootstrap_errors(
    observational: &CountTable,
    interventional: Option<&CountTable>,
    opts: &BootstrapOptions,
) -> Result<StdErrors> {
    if observational.kind() != CountKind::Observational {
        return Err(Error::KindMismatch {
            expected: "observational",
        });
    }
    if let Some(t) = interventional {
        if t.kind() != CountKind::Interventional {
            return Err(Error::KindMismatch {
                expected: "interventional",
            });
        }
    }
    if opts.resamples == 0 {
        return Err(Error::Validation("bootstrap needs at least one resample".into()));
    }
    let base = observational.to_behavior::<f64>()?;
    let base_argmin = gamma_functional(&base)?.argmin;
    let base_do = interventional.map(|t| t.to_do_table::<f64>()).transpose()?;

    let mut gammas = Vec::with_capacity(opts.resamples);
    let mut deltas = Vec::with_capacity(opts.resamples);
    let mut acdes = Vec::new();
    let mut lhs = Vec::new();
    for r in 0..opts.resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let b = resample_counts(observational, &mut rng)?.to_behavior::<f64>()?;
        let g = if opts.frozen_argmin {
            gamma_with_argmin(&b, &base_argmin)?
        } else {
            gamma_functional(&b)?.value
        };
        gammas.push(g);
        deltas.push(pearl_delta(&b));
        if let (Some(t), Some(_)) = (interventional, base_do.as_ref()) {
            let d = resample_counts(t, &mut rng)?.to_do_table::<f64>()?;
            let a = acde(&d);
            acdes.push(a);
            lhs.push(g + 2.0 * a);
        }
    }
    Ok(StdErrors {
        gamma: sample_std(&gammas),
        pearl_delta: sample_std(&deltas),
        acde: interventional.map(|_| sample_std(&acdes)),
        corrected_lhs: interventional.map(|_| sample_std(&lhs)),
    })
}

/// Verdict thresholds and report metadata.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyOptions {
    /// Number of standard errors required for a verdict.
    pub sigma_k: f64,
    pub seed: u64,
    pub resamples: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            sigma_k: 3.0,
            seed: 42,
            resamples: 0,
        }
    }
}

/// All certification outputs; serialises to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub gamma: f64,
    pub gamma_stderr: Option<f64>,
    pub pearl_delta: f64,
    pub acde: Option<f64>,
    pub chsh: Option<[f64; 2]>,
    pub fidelity_lb: Option<f64>,
    pub verdict_nonclassical: bool,
    pub verdict_crosstalk_witnessed: bool,
    pub argmin: BTreeMap<String, String>,
    pub seed: u64,
    pub resamples: u64,
    pub std_errors: Option<BTreeMap<String, f64>>,
}

/// Evaluates every functional and the `k·σ` verdicts.
///
/// The fidelity bound is evaluated at Γ clamped to `[2−√2, 2]`, so finite
/// samples that land below the quantum minimum report a bound of 1.
pub fn certify(
    b: &Behavior<f64>,
    d: Option<&DoTable<f64>>,
    errors: Option<&StdErrors>,
    opts: &CertifyOptions,
) -> Result<CertReport> {
    let g = gamma_functional(b)?;
    let delta = pearl_delta(b);
    let acde_v = d.map(acde);
    let chsh = if b.num_settings() >= 2 {
        let (c1, c2) = chsh_decomposition(b, &g.argmin)?;
        Some([c1, c2])
    } else {
        None
    };
    let lo = 2.0 - 2f64.sqrt();
    let fidelity_lb = Some(fidelity_lower_bound(g.value.clamp(lo, 2.0))?);

    let sg = errors.map_or(0.0, |e| e.gamma);
    let sa = errors.and_then(|e| e.acde).unwrap_or(0.0);
    let k = opts.sigma_k;
    let verdict_nonclassical = match acde_v {
        Some(a) => g.value + 2.0 * a < 1.0 - k * (sg * sg + 4.0 * sa * sa).sqrt(),
        None => g.value < 1.0 - k * sg,
    };
    let sd = errors.map_or(0.0, |e| e.pearl_delta);
    let verdict_crosstalk_witnessed = delta > 1.0 + k * sd;

    Ok(CertReport {
        gamma: g.value,
        gamma_stderr: errors.map(|e| e.gamma),
        pearl_delta: delta,
        acde: acde_v,
        chsh,
        fidelity_lb,
        verdict_nonclassical,
        verdict_crosstalk_witnessed,
        argmin: g.argmin_labels(b.settings()),
        seed: opts.seed,
        resamples: opts.resamples,
        std_errors: errors.map(StdErrors::to_map),
    })
}

/// Certifies count data: frequencies, bootstrap errors, verdicts.
pub fn certify_counts(
    observational: &CountTable,
    interventional: Option<&CountTable>,
    sigma_k: f64,
    boot: &BootstrapOptions,
) -> Result<CertReport> {
    let b = observational.to_behavior::<f64>()?;
    let d = interventional.map(|t| t.to_do_table::<f64>()).transpose()?;
    let errors = bootstrap_errors(observational, interventional, boot)?;
    certify(
        &b,
        d.as_ref(),
        Some(&errors),
        &CertifyOptions {
            sigma_k,
            seed: boot.seed,
            resamples: boot.resamples as u64,
        },
    )
}
