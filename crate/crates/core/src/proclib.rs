//! Library of canonical states, interactions, processes and instrument
//! presets, plus entanglement-breaking channels and the memory decay model.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::certify::gamma_functional;
use crate::error::{Error, Result};
use crate::linalg::gates::{bloch_operator, cnot, hadamard, pauli_x, pauli_y, pauli_z, swap};
use crate::linalg::{
    herm_eigenvalues, kron, kron_all, partial_trace, permute_factors, vectorize, ComplexMatrix,
    ComplexVector, TensorLayout, HERMITIAN_TOL,
};
use crate::process::{born_rule, build_process, BinaryPovm, MpInstrument, ProcessOperator};
use crate::scalar::Real;

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_ket<T: Real>(theta: T, phi: T) -> ComplexVector<T> {
    let half = theta / T::two();
    ComplexVector::new(vec![
        Complex::new(half.cos(), T::zero()),
        Complex::from_polar(half.sin(), phi),
    ])
}

pub fn pure_state<T: Real>(ket: &ComplexVector<T>) -> ComplexMatrix<T> {
    ComplexMatrix::outer(&ket.normalized())
}

/// Pure qubit state with Bloch angles `(θ, φ)`.
pub fn bloch_state<T: Real>(theta: T, phi: T) -> ComplexMatrix<T> {
    pure_state(&bloch_ket(theta, phi))
}

/// `½(id + r·σ)`.
pub fn state_from_bloch<T: Real>(r: [T; 3]) -> ComplexMatrix<T> {
    let half = T::lit(0.5);
    &ComplexMatrix::identity(2).scale_real(half) + &bloch_operator(r).scale_real(half)
}

/// Named single-qubit pure states.
pub mod kets {
    use super::*;

    pub fn zero<T: Real>() -> ComplexVector<T> {
        ComplexVector::basis(2, 0)
    }
    pub fn one<T: Real>() -> ComplexVector<T> {
        ComplexVector::basis(2, 1)
    }
    pub fn plus<T: Real>() -> ComplexVector<T> {
        bloch_ket(T::lit(std::f64::consts::FRAC_PI_2), T::zero())
    }
    pub fn minus<T: Real>() -> ComplexVector<T> {
        bloch_ket(T::lit(std::f64::consts::FRAC_PI_2), T::lit(std::f64::consts::PI))
    }
    pub fn plus_i<T: Real>() -> ComplexVector<T> {
        bloch_ket(T::lit(std::f64::consts::FRAC_PI_2), T::lit(std::f64::consts::FRAC_PI_2))
    }
    pub fn minus_i<T: Real>() -> ComplexVector<T> {
        bloch_ket(T::lit(std::f64::consts::FRAC_PI_2), T::lit(-std::f64::consts::FRAC_PI_2))
    }
}

/// `|Φ⁺⟩⟨Φ⁺|` on `A' ⊗ E`.
pub fn bell_state<T: Real>() -> ComplexMatrix<T> {
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let z = Complex::zero();
    let c = Complex::new(h, T::zero());
    ComplexMatrix::outer(&ComplexVector::new(vec![c, z, z, c]))
}

/// Memory-test interaction on `A ⊗ E`: a CNOT controlled by the memory `E`
/// onto `A`, followed by a SWAP so the output `B` carries the memory.
pub fn cnot_swap<T: Real>() -> ComplexMatrix<T> {
    let sw = swap::<T>();
    let cn_memory_control = &(&sw * &cnot()) * &sw;
    &sw * &cn_memory_control
}

/// `cos(α/2)·id + i·sin(α/2)·SWAP`.
pub fn partial_swap<T: Real>(alpha: T) -> ComplexMatrix<T> {
    let half = alpha / T::two();
    &ComplexMatrix::identity(4).scale_real(half.cos())
        + &swap().scale(Complex::new(T::zero(), half.sin()))
}

/// Maximally robust qubit process,
/// `¼[id + Z_{A'}Z_B + X_{A'}X_AX_B − Y_{A'}X_AY_B]`.
pub fn w222<T: Real>() -> ProcessOperator<T> {
    let id = ComplexMatrix::identity(2);
    let (x, y, z) = (pauli_x::<T>(), pauli_y::<T>(), pauli_z::<T>());
    let terms = [
        kron_all(&[&id, &id, &id]),
        kron_all(&[&z, &id, &z]),
        kron_all(&[&x, &x, &x]),
        kron_all(&[&y, &x, &y]).scale_real(-T::one()),
    ];
    let sum = terms[1..].iter().fold(terms[0].clone(), |acc, t| &acc + t);
    ProcessOperator::from_parts(sum.scale_real(T::lit(0.25)), id.scale_real(T::lit(0.5)))
        .expect("8x8 operator")
}

/// Input rotation `V_A = H·σ_x` used by [`upsilon`].
pub fn upsilon_rotation<T: Real>() -> ComplexMatrix<T> {
    &hadamard::<T>() * &pauli_x()
}

/// `Υ_p = p·W₂₂₂ + (1−p)·V_A W₂₂₂ V_A†`.
pub fn upsilon<T: Real>(p: T) -> Result<ProcessOperator<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::Domain(format!("mixing weight {p} outside [0, 1]")));
    }
    let w = w222::<T>();
    let rotated = w.conjugate_input(&upsilon_rotation());
    Ok(w.mix(&rotated, p))
}

/// Common-cause process `ρ_{A'B} ⊗ id_A`, reordered to `A' ⊗ A ⊗ B`.
pub fn cc_process<T: Real>(rho_a_prime_b: &ComplexMatrix<T>) -> Result<ProcessOperator<T>> {
    rho_a_prime_b.validate_state(T::lit(HERMITIAN_TOL))?;
    let w = permute_factors(
        &kron(rho_a_prime_b, &ComplexMatrix::identity(2)),
        &TensorLayout::qubits(3),
        &[0, 2, 1],
    )?;
    let marginal = partial_trace(rho_a_prime_b, &TensorLayout::qubits(2), &[1])?;
    ProcessOperator::from_parts(w, marginal)
}

/// Direct-cause process `ρ_{A'} ⊗ N_{A→B}` for an unnormalised Choi
/// operator `N` on `A ⊗ B`.
pub fn dc_process<T: Real>(
    rho_a_prime: &ComplexMatrix<T>,
    choi: &ComplexMatrix<T>,
) -> Result<ProcessOperator<T>> {
    rho_a_prime.validate_state(T::lit(HERMITIAN_TOL))?;
    if choi.dim() != 4 {
        return Err(Error::Dimension("Choi operator must be 4x4".into()));
    }
    ProcessOperator::from_parts(kron(rho_a_prime, choi), rho_a_prime.clone())
}

/// Unnormalised Choi operator of a unitary channel, `|U⟩⟩⟨⟨U|`.
pub fn unitary_choi<T: Real>(u: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    ComplexMatrix::outer(&vectorize(u))
}

/// Projective measurements of `σ_x, σ_z, −σ_x, −σ_z` labelled `0..4`.
///
/// A signed observable uses the projectors of the unsigned one with the
/// outcome labels exchanged.
pub fn memory_settings<T: Real>() -> (Vec<String>, Vec<BinaryPovm<T>>) {
    let (o, l) = (T::zero(), T::one());
    let px = BinaryPovm::along([l, o, o]).expect("unit vector");
    let pz = BinaryPovm::along([o, o, l]).expect("unit vector");
    let povms = vec![px.clone(), pz.clone(), px.relabeled(), pz.relabeled()];
    ((0..4).map(|x| x.to_string()).collect(), povms)
}

/// Memory-test instrument: repreparation `|−⟩` after `A=0`, `|+⟩` after `A=1`.
pub fn memory_instrument<T: Real>() -> MpInstrument<T> {
    let (labels, povms) = memory_settings();
    MpInstrument::new(
        labels,
        povms,
        [pure_state(&kets::minus()), pure_state(&kets::plus())],
    )
    .expect("preset instrument is valid")
}

/// Final measurement `(σ_x + σ_z)/√2`.
pub fn memory_final_povm<T: Real>() -> BinaryPovm<T> {
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    BinaryPovm::along([h, T::zero(), h]).expect("unit vector")
}

/// Partial-swap instrument: repreparation `|+i⟩` after `A=0`, `|−i⟩` after `A=1`.
pub fn partial_swap_instrument<T: Real>() -> MpInstrument<T> {
    let (labels, povms) = memory_settings();
    MpInstrument::new(
        labels,
        povms,
        [pure_state(&kets::plus_i()), pure_state(&kets::minus_i())],
    )
    .expect("preset instrument is valid")
}

/// Final measurement `σ_x`.
pub fn partial_swap_final_povm<T: Real>() -> BinaryPovm<T> {
    BinaryPovm::along([T::one(), T::zero(), T::zero()]).expect("unit vector")
}

/// Γ of the partial-swap protocol at each `α`.
pub fn partial_swap_gamma_curve<T: Real>(alphas: &[T]) -> Result<Vec<(T, T)>> {
    let inst = partial_swap_instrument();
    let f = partial_swap_final_povm();
    let rho = bell_state();
    alphas
        .iter()
        .map(|&alpha| {
            if !(alpha >= T::zero() && alpha <= T::lit(std::f64::consts::PI) + T::lit(1e-12)) {
                return Err(Error::Domain(format!("α = {alpha} outside [0, π]")));
            }
            let w = build_process(&rho, &partial_swap(alpha))?;
            let b = born_rule(&w, &inst, &f)?;
            Ok((alpha, gamma_functional(&b)?.value))
        })
        .collect()
}

/// `n` equally spaced points on `[0, π]`.
pub fn alpha_grid<T: Real>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => (0..n)
            .map(|k| T::lit(std::f64::consts::PI * k as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Depolarises the memory factor `E` of a state on `A' ⊗ E`,
/// `ϱ ↦ v·ϱ + (1−v)·Tr_E(ϱ) ⊗ id/2`.
pub fn depolarize_memory<T: Real>(rho: &ComplexMatrix<T>, visibility: T) -> Result<ComplexMatrix<T>> {
    if !(visibility >= T::zero() && visibility <= T::one()) {
        return Err(Error::Domain(format!("visibility {visibility} outside [0, 1]")));
    }
    let reduced = partial_trace(rho, &TensorLayout::qubits(2), &[1])?;
    let mixed = kron(&reduced, &ComplexMatrix::identity(2).scale_real(T::lit(0.5)));
    Ok(&rho.scale_real(visibility) + &mixed.scale_real(T::one() - visibility))
}

/// Measure-and-prepare channel `ϱ ↦ Σ_λ Tr(E_λ ϱ) ρ_λ` on a qubit.
#[derive(Clone, Debug)]
pub struct EbChannel<T> {
    effects: Vec<ComplexMatrix<T>>,
    outputs: Vec<ComplexMatrix<T>>,
}

impl<T: Real> EbChannel<T> {
    pub fn new(effects: Vec<ComplexMatrix<T>>, outputs: Vec<ComplexMatrix<T>>) -> Result<Self> {
        if effects.is_empty() || effects.len() != outputs.len() {
            return Err(Error::Validation(format!(
                "{} effects for {} output states",
                effects.len(),
                outputs.len()
            )));
        }
        let tol = T::lit(HERMITIAN_TOL);
        let mut sum = ComplexMatrix::zeros(2);
        for e in &effects {
            if e.dim() != 2 {
                return Err(Error::Dimension("channel effects must be 2x2".into()));
            }
            if herm_eigenvalues(e)?[0] < -tol {
                return Err(Error::Validation("channel effect is not positive".into()));
            }
            sum = &sum + e;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(2)) > tol {
            return Err(Error::Validation("channel effects do not sum to identity".into()));
        }
        for rho in &outputs {
            if rho.dim() != 2 {
                return Err(Error::Dimension("channel outputs must be 2x2".into()));
            }
            rho.validate_state(tol)?;
        }
        Ok(Self { effects, outputs })
    }

    /// Random channel with `k` outcomes: a POVM obtained by normalising random
    /// positive operators, and random mixed output states.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("channel needs at least one outcome".into()));
        }
        let raw: Vec<ComplexMatrix<T>> = (0..k).map(|_| random_positive(rng)).collect();
        let total = raw.iter().skip(1).fold(raw[0].clone(), |acc, g| &acc + g);
        let s = inverse_sqrt_2x2(&total)?;
        let effects = raw
            .iter()
            .map(|g| {
                let e = &(&s * g) * &s;
                // restore exact Hermiticity lost to rounding
                (&e + &e.adjoint()).scale_real(T::lit(0.5))
            })
            .collect::<Vec<_>>();
        // absorb the residual so the effects sum to identity to machine precision
        let residual = &ComplexMatrix::identity(2)
            - &effects.iter().fold(ComplexMatrix::zeros(2), |acc, e| &acc + e);
        let mut effects = effects;
        effects[0] = &effects[0] + &residual;
        let outputs = (0..k)
            .map(|_| {
                let g = random_positive::<T, R>(rng);
                let tr = g.trace().re;
                g.scale_real(T::one() / tr)
            })
            .collect();
        Self::new(effects, outputs)
    }

    pub fn effects(&self) -> &[ComplexMatrix<T>] {
        &self.effects
    }

    pub fn outputs(&self) -> &[ComplexMatrix<T>] {
        &self.outputs
    }
}

fn random_positive<T: Real, R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix<T> {
    let data = (0..4)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    let a = ComplexMatrix::from_vec(2, data).expect("2x2");
    &a * &a.adjoint()
}

/// `S^{-1/2}` for a positive definite 2x2 matrix, via
/// `√S = (S + √det·id)/√(Tr S + 2√det)`.
fn inverse_sqrt_2x2<T: Real>(s: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let det = (s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)]).re;
    if det <= T::zero() {
        return Err(Error::Validation("matrix is not positive definite".into()));
    }
    let sd = det.sqrt();
    let root = (&ComplexMatrix::identity(2).scale_real(sd) + s)
        .scale_real(T::one() / (s.trace().re + T::two() * sd).sqrt());
    let rdet = (root[(0, 0)] * root[(1, 1)] - root[(0, 1)] * root[(1, 0)]).re;
    let mut inv = ComplexMatrix::zeros(2);
    inv[(0, 0)] = root[(1, 1)];
    inv[(1, 1)] = root[(0, 0)];
    inv[(0, 1)] = -root[(0, 1)];
    inv[(1, 0)] = -root[(1, 0)];
    Ok(inv.scale_real(T::one() / rdet))
}

/// Result of [`apply_eb_channel`]: the output state and the separable
/// decomposition it was assembled from.
#[derive(Clone, Debug)]
pub struct EbOutput<T> {
    pub state: ComplexMatrix<T>,
    /// `(σ_λ, ρ_λ)` with `σ_λ` the unnormalised conditional state of the
    /// untouched factor; the output is `Σ_λ σ_λ ⊗ ρ_λ` in factor order.
    pub terms: Vec<(ComplexMatrix<T>, ComplexMatrix<T>)>,
}

/// Applies the channel to factor `target` (0 or 1) of a two-qubit state.
pub fn apply_eb_channel<T: Real>(
    rho: &ComplexMatrix<T>,
    ch: &EbChannel<T>,
    target: usize,
) -> Result<EbOutput<T>> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!(
            "expected a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    if target > 1 {
        return Err(Error::Dimension(format!("factor index {target} out of range")));
    }
    rho.validate_state(T::lit(HERMITIAN_TOL))?;
    let pair = TensorLayout::qubits(2);
    let id = ComplexMatrix::identity(2);
    let mut state = ComplexMatrix::zeros(4);
    let mut terms = Vec::with_capacity(ch.effects.len());
    for (e, out) in ch.effects.iter().zip(&ch.outputs) {
        let lifted = if target == 1 { kron(&id, e) } else { kron(e, &id) };
        let sigma = partial_trace(&(&lifted * rho), &pair, &[target])?;
        let sigma = (&sigma + &sigma.adjoint()).scale_real(T::lit(0.5));
        let piece = if target == 1 {
            kron(&sigma, out)
        } else {
            kron(out, &sigma)
        };
        state = &state + &piece;
        terms.push((sigma, out.clone()));
    }
    Ok(EbOutput { state, terms })
}

/// Memory noise model parameters; times in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams<T> {
    pub t2: T,
    pub t1: T,
    pub echo_fidelity: T,
    pub echo_interval: T,
    pub initial_gamma: T,
}

impl<T: Real> NoiseParams<T> {
    /// Trapped-ion memory: T₂ = 364 ms, T₁ = 1170 ms, echo fidelity 0.995
    /// every 2.5 ms.
    pub fn reference(initial_gamma: T) -> Self {
        Self {
            t2: T::lit(364.0),
            t1: T::lit(1170.0),
            echo_fidelity: T::lit(0.995),
            echo_interval: T::lit(2.5),
            initial_gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(pos(self.t2) && pos(self.t1) && pos(self.echo_interval)) {
            return Err(Error::Domain("t2, t1 and echo_interval must be positive".into()));
        }
        if !(self.echo_fidelity > T::zero() && self.echo_fidelity <= T::one()) {
            return Err(Error::Domain(format!(
                "echo fidelity {} outside (0, 1]",
                self.echo_fidelity
            )));
        }
        let lo = T::two() - T::two().sqrt();
        if !(self.initial_gamma >= lo - T::lit(1e-12) && self.initial_gamma <= T::two()) {
            return Err(Error::Domain(format!(
                "initial Γ {} outside [2−√2, 2]",
                self.initial_gamma
            )));
        }
        Ok(())
    }

    /// `v₀ = (2 − Γ₀)/√2`.
    pub fn initial_visibility(&self) -> T {
        ((T::two() - self.initial_gamma) / T::two().sqrt()).min(T::one())
    }
}

/// Switches for optional decay channels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecayOptions {
    /// Adds amplitude damping `exp(−t/(2T₁))` to the visibility.
    pub include_t1: bool,
}

impl<T: Real> NoiseParams<T> {
    /// Exponential decay rate of the visibility per millisecond.
    pub fn decay_rate(&self, opts: DecayOptions) -> T {
        let mut rate = T::one() / self.t2 - self.echo_fidelity.ln() / self.echo_interval;
        if opts.include_t1 {
            rate = rate + T::one() / (T::two() * self.t1);
        }
        rate
    }

    /// `v(t) = v₀·exp(−t/T₂)·f^{t/τ}`.
    pub fn visibility(&self, t: T, opts: DecayOptions) -> T {
        let mut v = self.initial_visibility()
            * (-t / self.t2).exp()
            * self.echo_fidelity.powf(t / self.echo_interval);
        if opts.include_t1 {
            v = v * (-t / (T::two() * self.t1)).exp();
        }
        v
    }
}

/// Predicted `Γ(t) = 2 − √2·v(t)` at each waiting time.
pub fn decay_prediction<T: Real>(
    params: &NoiseParams<T>,
    times: &[T],
    opts: DecayOptions,
) -> Result<Vec<(T, T)>> {
    params.validate()?;
    times
        .iter()
        .map(|&t| {
            if !(t >= T::zero()) {
                return Err(Error::Domain(format!("waiting time {t} is negative")));
            }
            let g = if t == T::zero() {
                params.initial_gamma
            } else {
                T::two() - T::two().sqrt() * params.visibility(t, opts)
            };
            Ok((t, g))
        })
        .collect()
}

/// Waiting time at which the predicted Γ reaches the classical bound 1, or
/// `None` when the initial value already satisfies it.
pub fn crossing_time<T: Real>(params: &NoiseParams<T>, opts: DecayOptions) -> Result<Option<T>> {
    params.validate()?;
    let v0 = params.initial_visibility();
    let excess = (T::two().sqrt() * v0).ln();
    if excess <= T::zero() {
        return Ok(None);
    }
    Ok(Some(excess / params.decay_rate(opts)))
}

/// Projective measurements and pure repreparations parametrised by Bloch
/// angles: four settings, two repreparations and the final measurement,
/// `(θ, φ)` each, 14 angles in total.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPoint<T> {
    pub angles: [T; 14],
}

impl<T: Real> FamilyPoint<T> {
    fn direction(theta: T, phi: T) -> [T; 3] {
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    }

    pub fn instrument(&self) -> MpInstrument<T> {
        let a = &self.angles;
        let povms = (0..4)
            .map(|k| BinaryPovm::along(Self::direction(a[2 * k], a[2 * k + 1])).expect("unit"))
            .collect();
        MpInstrument::new(
            (0..4).map(|x| x.to_string()).collect(),
            povms,
            [bloch_state(a[8], a[9]), bloch_state(a[10], a[11])],
        )
        .expect("pure states are valid")
    }

    pub fn final_povm(&self) -> BinaryPovm<T> {
        BinaryPovm::along(Self::direction(self.angles[12], self.angles[13])).expect("unit")
    }

    /// Angles of the memory-test configuration.
    pub fn memory_test() -> Self {
        let (h, p, q) = (
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
            std::f64::consts::FRAC_PI_4,
        );
        Self::from_f64([h, 0.0, 0.0, 0.0, h, p, p, 0.0, h, p, h, 0.0, q, 0.0])
    }

    fn from_f64(v: [f64; 14]) -> Self {
        Self {
            angles: v.map(T::lit),
        }
    }
}

/// Best Γ found over the measurement family.
#[derive(Clone, Debug)]
pub struct FamilyOptimum<T> {
    pub gamma: T,
    pub point: FamilyPoint<T>,
}

/// Minimises Γ over [`FamilyPoint`] for a fixed process.
///
/// Starts from the memory-test configuration, its image under the `Υ`
/// input rotation, and `restarts` random points; each start is refined by
/// Nelder–Mead. Deterministic for a given seed.
pub fn best_gamma_over_family<T: Real>(
    w: &ProcessOperator<T>,
    restarts: usize,
    seed: u64,
) -> Result<FamilyOptimum<T>> {
    use rand::SeedableRng;
    let objective = |v: &[f64]| -> f64 {
        let mut angles = [T::zero(); 14];
        for (slot, &a) in angles.iter_mut().zip(v) {
            *slot = T::lit(a);
        }
        let pt = FamilyPoint { angles };
        born_rule(w, &pt.instrument(), &pt.final_povm())
            .and_then(|b| gamma_functional(&b))
            .map(|g| g.value.to_f64_approx())
            .unwrap_or(f64::INFINITY)
    };
    let h = std::f64::consts::FRAC_PI_2;
    let p = std::f64::consts::PI;
    let q = std::f64::consts::FRAC_PI_4;
    let mut starts: Vec<Vec<f64>> = vec![
        vec![h, 0.0, 0.0, 0.0, h, p, p, 0.0, h, p, h, 0.0, q, 0.0],
        // repreparations mapped through the input rotation
        vec![h, 0.0, 0.0, 0.0, h, p, p, 0.0, p, 0.0, 0.0, 0.0, q, 0.0],
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push((0..14).map(|_| rng.random_range(0.0..2.0 * p)).collect());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let (mut x, mut fx) = nelder_mead(&objective, &start, 0.4, 6000);
        // restart once from the optimum to escape a collapsed simplex
        let (x2, f2) = nelder_mead(&objective, &x, 0.05, 6000);
        if f2 < fx {
            x = x2;
            fx = f2;
        }
        if best.as_ref().is_none_or(|(bf, _)| fx < *bf) {
            best = Some((fx, x));
        }
    }
    let (fx, x) = best.expect("at least one start");
    let mut angles = [T::zero(); 14];
    for (slot, &a) in angles.iter_mut().zip(&x) {
        *slot = T::lit(a);
    }
    Ok(FamilyOptimum {
        gamma: T::lit(fx),
        point: FamilyPoint { angles },
    })
}

/// Derivative-free simplex minimisation with standard coefficients.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut evals = n + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-13 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let t = if fr < simplex[n].1 { -0.5 } else { 0.5 };
            let xc = along(t);
            let fc = f(&xc);
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    p.1 = f(&p.0);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}

/// Smallest eigenvalue of the partial transpose over `A'`.
pub fn ppt_min_eigenvalue<T: Real>(w: &ProcessOperator<T>) -> Result<T> {
    let pt = crate::linalg::partial_transpose(w.w(), w.layout(), 0)?;
    Ok(herm_eigenvalues(&pt)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::validate_process;

    type M = ComplexMatrix<f64>;

    #[test]
    fn memory_process_is_w222() {
        let w = build_process(&bell_state::<f64>(), &cnot_swap()).unwrap();
        assert!(w.w().max_abs_diff(w222::<f64>().w()) < 1e-14);
    }

    #[test]
    fn w222_spectrum_and_trace() {
        let w = w222::<f64>();
        let ev = herm_eigenvalues(w.w()).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let expect = if k >= 6 { 1.0 } else { 0.0 };
            assert!((e - expect).abs() < 1e-12, "{ev:?}");
        }
        assert!((w.w().trace().re - 2.0).abs() < 1e-14);
        assert!(validate_process(&w).is_empty());
    }

    #[test]
    fn upsilon_endpoints_and_range() {
        assert!(upsilon::<f64>(1.0).unwrap().w().max_abs_diff(w222::<f64>().w()) < 1e-15);
        for p in [0.0, 0.3, 0.5, 1.0] {
            assert!(validate_process(&upsilon::<f64>(p).unwrap()).is_empty());
        }
        assert!(matches!(upsilon::<f64>(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn partial_swap_endpoints() {
        assert!(partial_swap::<f64>(0.0).max_abs_diff(&M::identity(4)) < 1e-15);
        let u = partial_swap::<f64>(std::f64::consts::PI);
        let out = u.apply(&ComplexVector::basis(4, 1));
        assert!((out.entries()[2] - Complex::new(0.0, 1.0)).norm() < 1e-15);
        assert!(out.entries()[1].norm() < 1e-15);
    }

    #[test]
    fn eb_channel_examples() {
        let bell = bell_state::<f64>();
        let depol = EbChannel::new(vec![M::identity(2)], vec![M::identity(2).scale_real(0.5)])
            .unwrap();
        let out = apply_eb_channel(&bell, &depol, 1).unwrap();
        assert!(out.state.max_abs_diff(&M::identity(4).scale_real(0.25)) < 1e-15);

        let z0 = M::from_real_diag(&[1.0, 0.0]);
        let z1 = M::from_real_diag(&[0.0, 1.0]);
        let dephase = EbChannel::new(vec![z0.clone(), z1.clone()], vec![z0, z1]).unwrap();
        let out = apply_eb_channel(&bell, &dephase, 1).unwrap();
        assert!(out.state.max_abs_diff(&M::from_real_diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
    }

    #[test]
    fn random_eb_channels_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for k in 1..5 {
            let ch = EbChannel::<f64>::random(&mut rng, k).unwrap();
            assert_eq!(ch.effects().len(), k);
            let out = apply_eb_channel(&bell_state(), &ch, 1).unwrap();
            out.state.validate_state(1e-10).unwrap();
        }
    }

    #[test]
    fn decay_anchor_and_limit() {
        let p = NoiseParams::reference(2.0 - 2f64.sqrt());
        let g = decay_prediction(&p, &[0.0, 1e7], DecayOptions::default()).unwrap();
        assert!((g[0].1 - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((g[1].1 - 2.0).abs() < 1e-12);
        let bad = NoiseParams { t2: -1.0, ..p };
        assert!(decay_prediction(&bad, &[0.0], DecayOptions::default()).is_err());
    }

    #[test]
    fn crossing_time_closed_form() {
        let p = NoiseParams::reference(0.642);
        let t = crossing_time(&p, DecayOptions::default()).unwrap().unwrap();
        let g = decay_prediction(&p, &[t], DecayOptions::default()).unwrap()[0].1;
        assert!((g - 1.0f64).abs() < 1e-12);
        assert_eq!(crossing_time(&NoiseParams::reference(1.2), DecayOptions::default()).unwrap(), None);
    }

    #[test]
    fn depolarized_memory_interpolates_to_uniform() {
        let rho = depolarize_memory(&bell_state::<f64>(), 0.0).unwrap();
        let w = build_process(&rho, &cnot_swap()).unwrap();
        let b = born_rule(&w, &memory_instrument(), &memory_final_povm()).unwrap();
        for row in b.probs() {
            for p in row.iter().flatten() {
                assert!((p - 0.25).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn family_point_reproduces_memory_preset() {
        let pt = FamilyPoint::<f64>::memory_test();
        let w = w222::<f64>();
        let a = born_rule(&w, &pt.instrument(), &pt.final_povm()).unwrap();
        let b = born_rule(&w, &memory_instrument(), &memory_final_povm()).unwrap();
        for (r, s) in a.probs().iter().zip(b.probs()) {
            for (p, q) in r.iter().flatten().zip(s.iter().flatten()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
