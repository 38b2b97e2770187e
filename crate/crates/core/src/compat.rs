//! Measurement compatibility of the assemblage induced on the memory.
//!
//! An interaction `U` on `A ⊗ E`, a repreparation `ρ_a` of `A` and a final
//! measurement `F` on the output `B` induce the effects
//! `G_{b|a} = Tr_A[(ρ_a ⊗ id) U†(F_b ⊗ id)U]` on `E`. Violations of the
//! instrumental inequality require the pair `{G_{·|0}, G_{·|1}}` to be
//! incompatible; for qubits this is decided by a closed-form criterion.

use crate::error::{Error, Result};
use crate::linalg::gates::{bloch_operator, pauli_x, pauli_y, pauli_z};
use crate::linalg::{herm_eigenvalues, kron, partial_trace, ComplexMatrix, TensorLayout, HERMITIAN_TOL};
use crate::process::BinaryPovm;
use crate::scalar::Real;

/// Effect `½[(1+γ)id + r·σ]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitEffectParams<T> {
    pub gamma_bias: T,
    pub bloch: [T; 3],
}

impl<T: Real> QubitEffectParams<T> {
    /// Checks that the effect and its complement are positive.
    pub fn new(gamma_bias: T, bloch: [T; 3]) -> Result<Self> {
        let p = Self { gamma_bias, bloch };
        let r = p.norm();
        let tol = T::lit(1e-10);
        if r > T::one() + gamma_bias + tol || r > T::one() - gamma_bias + tol {
            return Err(Error::Validation(format!(
                "γ = {gamma_bias}, ‖r‖ = {r} do not define a valid effect"
            )));
        }
        Ok(p)
    }

    pub fn norm(&self) -> T {
        let [x, y, z] = self.bloch;
        (x * x + y * y + z * z).sqrt()
    }

    pub fn effect(&self) -> ComplexMatrix<T> {
        let half = T::lit(0.5);
        &ComplexMatrix::identity(2).scale_real(half * (T::one() + self.gamma_bias))
            + &bloch_operator(self.bloch).scale_real(half)
    }

    /// `𝓕 = ½[√((1+γ)² − ‖r‖²) + √((1−γ)² − ‖r‖²)]`.
    pub fn sharpness(&self) -> T {
        let r2 = self.norm() * self.norm();
        let g = self.gamma_bias;
        let root = |v: T| v.max(T::zero()).sqrt();
        T::lit(0.5) * (root((T::one() + g) * (T::one() + g) - r2) + root((T::one() - g) * (T::one() - g) - r2))
    }
}

/// Binary effects on `E` for each input `a`.
#[derive(Clone, Debug)]
pub struct Assemblage<T> {
    effects: Vec<[ComplexMatrix<T>; 2]>,
}

impl<T: Real> Assemblage<T> {
    pub fn new(effects: Vec<[ComplexMatrix<T>; 2]>) -> Result<Self> {
        let tol = T::lit(HERMITIAN_TOL);
        for (a, pair) in effects.iter().enumerate() {
            for e in pair {
                if herm_eigenvalues(e)?[0] < -tol {
                    return Err(Error::Validation(format!("effect for a={a} not positive")));
                }
            }
            if (&pair[0] + &pair[1]).max_abs_diff(&ComplexMatrix::identity(2)) > tol {
                return Err(Error::Validation(format!("effects for a={a} do not sum to id")));
            }
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[[ComplexMatrix<T>; 2]] {
        &self.effects
    }

    pub fn effect(&self, b: usize, a: usize) -> &ComplexMatrix<T> {
        &self.effects[a][b]
    }
}

/// `G_{b|a} = Tr_A[(ρ_a ⊗ id) U†(F_b ⊗ id)U]`.
pub fn induced_assemblage<T: Real>(
    u: &ComplexMatrix<T>,
    repreparations: &[ComplexMatrix<T>; 2],
    f: &BinaryPovm<T>,
) -> Result<Assemblage<T>> {
    if u.dim() != 4 {
        return Err(Error::Dimension("interaction must be 4x4".into()));
    }
    let tol = T::lit(HERMITIAN_TOL);
    if u.unitarity_defect() > tol {
        return Err(Error::Validation("interaction is not unitary".into()));
    }
    for rho in repreparations {
        rho.validate_state(tol)?;
    }
    let id = ComplexMatrix::identity(2);
    let pair = TensorLayout::qubits(2);
    let heis: Vec<ComplexMatrix<T>> = f
        .effects()
        .iter()
        .map(|fb| &(&u.adjoint() * &kron(fb, &id)) * u)
        .collect();
    let mut effects = Vec::with_capacity(2);
    for rho in repreparations {
        let lifted = kron(rho, &id);
        let mut pair_out = [ComplexMatrix::zeros(2), ComplexMatrix::zeros(2)];
        for (b, h) in heis.iter().enumerate() {
            let g = partial_trace(&(&lifted * h), &pair, &[0])?;
            pair_out[b] = (&g + &g.adjoint()).scale_real(T::lit(0.5));
        }
        effects.push(pair_out);
    }
    Assemblage::new(effects)
}

/// `γ = Tr(E) − 1`, `r_i = Tr(σ_i E)`.
pub fn effect_params<T: Real>(effect: &ComplexMatrix<T>) -> Result<QubitEffectParams<T>> {
    if effect.dim() != 2 {
        return Err(Error::Dimension("qubit effect must be 2x2".into()));
    }
    if !effect.is_hermitian(T::lit(HERMITIAN_TOL)) {
        return Err(Error::Validation("effect is not Hermitian".into()));
    }
    let r = [
        pauli_x::<T>().trace_product_re(effect),
        pauli_y::<T>().trace_product_re(effect),
        pauli_z::<T>().trace_product_re(effect),
    ];
    QubitEffectParams::new(effect.trace().re - T::one(), r)
}

/// Sharpness below which an effect is treated as projective.
pub const SINGULAR_SHARPNESS: f64 = 1e-12;

fn bias_ratio<T: Real>(p: &QubitEffectParams<T>) -> Result<T> {
    let f = p.sharpness();
    if f < T::lit(SINGULAR_SHARPNESS) {
        if p.gamma_bias.abs() < T::lit(1e-10) {
            return Ok(T::zero());
        }
        return Err(Error::Domain(format!(
            "criterion undefined: sharpness vanishes with bias γ = {}",
            p.gamma_bias
        )));
    }
    Ok(p.gamma_bias * p.gamma_bias / (f * f))
}

/// `(r₀·r₁ − γ₀γ₁)² − (1 − 𝓕₀² − 𝓕₁²)(1 − γ₀²/𝓕₀² − γ₁²/𝓕₁²)`; the pair is
/// jointly measurable iff the value is nonnegative.
pub fn criterion_value<T: Real>(p: &QubitEffectParams<T>, q: &QubitEffectParams<T>) -> Result<T> {
    let dot = p.bloch[0] * q.bloch[0] + p.bloch[1] * q.bloch[1] + p.bloch[2] * q.bloch[2];
    let g = dot - p.gamma_bias * q.gamma_bias;
    let fp = p.sharpness();
    let fq = q.sharpness();
    let sharp = T::one() - (fp * fp + fq * fq);
    let bias = T::one() - (bias_ratio(p)? + bias_ratio(q)?);
    Ok(g * g - sharp * bias)
}

/// `(value ≥ −1e-10, value)`.
pub fn jointly_measurable<T: Real>(
    p: &QubitEffectParams<T>,
    q: &QubitEffectParams<T>,
) -> Result<(bool, T)> {
    let v = criterion_value(p, q)?;
    Ok((v >= T::lit(-1e-10), v))
}

/// Effect parameters `G_{0|a}` of the partial-swap assemblage with
/// `σ_{A=0} = |0⟩⟨0|`, `σ_{A=1} = |θ_S, φ_S⟩` and final effect `|θ_E, φ_E⟩`.
pub fn partial_swap_pair_params<T: Real>(
    alpha: T,
    theta_s: T,
    phi_s: T,
    theta_e: T,
    phi_e: T,
) -> [QubitEffectParams<T>; 2] {
    let c = (alpha / T::two()).cos();
    let s = (alpha / T::two()).sin();
    let (ste, cte) = (theta_e.sin(), theta_e.cos());
    let (sts, cts) = (theta_s.sin(), theta_s.cos());
    let p0 = QubitEffectParams {
        gamma_bias: c * c * cte,
        bloch: [
            s * ste * (alpha / T::two() + phi_e).sin(),
            -s * ste * (alpha / T::two() + phi_e).cos(),
            s * s * cte,
        ],
    };
    let p1 = QubitEffectParams {
        gamma_bias: c * c * (cte * cts + (phi_s - phi_e).cos() * ste * sts),
        bloch: [
            s * (c * (ste * cts * phi_e.sin() - cte * sts * phi_s.sin()) + s * ste * phi_e.cos()),
            s * (c * (cte * sts * phi_s.cos() - ste * cts * phi_e.cos()) + s * ste * phi_e.sin()),
            s * (s * cte + c * ste * sts * (phi_s - phi_e).sin()),
        ],
    };
    [p0, p1]
}

/// Worst criterion value found for one `α`, with the angles attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompatPoint {
    pub alpha: f64,
    pub min_margin: f64,
    /// `(θ_S, φ_S, θ_E, φ_E)`.
    pub witness: [f64; 4],
    /// Largest deviation of `𝓕₀`, `𝓕₁` from `cos(α/2)` seen on the grid.
    pub sharpness_defect: f64,
}

fn margin_at(alpha: f64, v: &[f64; 4]) -> Result<f64> {
    let [p, q] = partial_swap_pair_params(alpha, v[0], v[1], v[2], v[3]);
    criterion_value(&p, &q)
}

/// Scans `θ ∈ {kπ/(n−1)}`, `φ ∈ {2πk/n}` over all four angles, then refines
/// the best grid point by 50 rounds of coordinate descent.
pub fn partial_swap_compat_region(alphas: &[f64], density: usize) -> Result<Vec<CompatPoint>> {
    if alphas.is_empty() || density < 2 {
        return Err(Error::Validation(
            "need a nonempty α grid and angle density ≥ 2".into(),
        ));
    }
    let pi = std::f64::consts::PI;
    let thetas: Vec<f64> = (0..density).map(|k| pi * k as f64 / (density - 1) as f64).collect();
    let phis: Vec<f64> = (0..density).map(|k| 2.0 * pi * k as f64 / density as f64).collect();
    alphas
        .iter()
        .map(|&alpha| {
            let target = (alpha / 2.0).cos();
            let mut best = (f64::INFINITY, [0.0; 4]);
            let mut defect: f64 = 0.0;
            for &ts in &thetas {
                for &ps in &phis {
                    for &te in &thetas {
                        for &pe in &phis {
                            let v = [ts, ps, te, pe];
                            let [p, q] = partial_swap_pair_params(alpha, ts, ps, te, pe);
                            defect = defect
                                .max((p.sharpness() - target).abs())
                                .max((q.sharpness() - target).abs());
                            let m = criterion_value(&p, &q)?;
                            if m < best.0 {
                                best = (m, v);
                            }
                        }
                    }
                }
            }
            let (mut value, mut point) = best;
            let mut step = pi / density as f64;
            for _ in 0..50 {
                let mut improved = false;
                for i in 0..4 {
                    for dir in [-1.0, 1.0] {
                        let mut cand = point;
                        cand[i] += dir * step;
                        let m = margin_at(alpha, &cand)?;
                        if m < value {
                            value = m;
                            point = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            Ok(CompatPoint {
                alpha,
                min_margin: value,
                witness: point,
                sharpness_defect: defect,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gates::swap;
    use crate::proclib::{bloch_state, partial_swap};

    type M = ComplexMatrix<f64>;

    fn povm(theta: f64, phi: f64) -> BinaryPovm<f64> {
        BinaryPovm::from_effect(bloch_state(theta, phi)).unwrap()
    }

    #[test]
    fn swap_and_identity_assemblages() {
        let f = povm(0.7, 1.1);
        let reps = [bloch_state(0.3, 0.2), bloch_state(2.0, -1.0)];
        let asm = induced_assemblage(&swap::<f64>(), &reps, &f).unwrap();
        for a in 0..2 {
            assert!(asm.effect(0, a).max_abs_diff(f.effect(0)) < 1e-14);
        }
        let asm = induced_assemblage(&M::identity(4), &reps, &f).unwrap();
        for a in 0..2 {
            let p = f.effect(0).trace_product_re(&reps[a]);
            assert!(asm.effect(0, a).max_abs_diff(&M::identity(2).scale_real(p)) < 1e-14);
        }
    }

    #[test]
    fn partial_swap_matches_closed_form() {
        let alpha = 2.1;
        let f = povm(0.9, 0.4);
        let reps = [bloch_state(1.3, 2.2), bloch_state(0.4, -0.6)];
        let asm = induced_assemblage(&partial_swap(alpha), &reps, &f).unwrap();
        let (c, s) = ((alpha / 2.0).cos(), (alpha / 2.0).sin());
        for a in 0..2 {
            let fb = f.effect(0);
            let comm = fb.commutator(&reps[a]);
            let expect = &(&M::identity(2).scale_real(c * c * fb.trace_product_re(&reps[a]))
                + &fb.scale_real(s * s))
                - &comm.scale(num_complex::Complex::new(0.0, s * c));
            assert!(asm.effect(0, a).max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn effect_param_examples() {
        let p = effect_params(&M::identity(2).scale_real(0.5)).unwrap();
        assert_eq!(p.gamma_bias, 0.0);
        assert_eq!(p.bloch, [0.0, 0.0, 0.0]);
        let p = effect_params(&M::from_real_diag(&[1.0, 0.0])).unwrap();
        assert_eq!(p.gamma_bias, 0.0);
        assert_eq!(p.bloch, [0.0, 0.0, 1.0]);
        assert!(p.effect().max_abs_diff(&M::from_real_diag(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn displayed_parameters_match_direct_computation() {
        let (alpha, ts, ps, te, pe) = (2.4, 1.1, 0.3, 0.8, 2.5);
        let reps = [bloch_state(0.0, 0.0), bloch_state(ts, ps)];
        let asm = induced_assemblage(&partial_swap(alpha), &reps, &povm(te, pe)).unwrap();
        let shown = partial_swap_pair_params(alpha, ts, ps, te, pe);
        for a in 0..2 {
            let direct = effect_params(asm.effect(0, a)).unwrap();
            assert!((direct.gamma_bias - shown[a].gamma_bias).abs() < 1e-12);
            for i in 0..3 {
                assert!((direct.bloch[i] - shown[a].bloch[i]).abs() < 1e-12, "a={a} i={i}");
            }
            assert!((shown[a].sharpness() - (alpha / 2.0).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn textbook_pairs() {
        let x = QubitEffectParams::new(0.0, [1.0, 0.0, 0.0]).unwrap();
        let z = QubitEffectParams::new(0.0, [0.0, 0.0, 1.0]).unwrap();
        let (ok, v) = jointly_measurable(&x, &z).unwrap();
        assert!(!ok);
        assert!((v + 1.0f64).abs() < 1e-15);
        let (ok, _) = jointly_measurable(&z, &z).unwrap();
        assert!(ok);
        // unreachable for valid effects; built directly to exercise the guard
        let biased_sharp = QubitEffectParams { gamma_bias: 0.3, bloch: [0.0, 0.0, 1.3] };
        assert!(matches!(criterion_value(&biased_sharp, &z), Err(Error::Domain(_))));
        assert!(QubitEffectParams::new(0.5, [0.0, 0.0, 0.9]).is_err());
    }
}
