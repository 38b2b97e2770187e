//! Process operators for two-point measurement experiments.
//!
//! A process operator lives on `A' ⊗ A ⊗ B`: `A'` is the system measured at
//! the first time, `A` the freshly prepared system handed to the dynamics and
//! `B` the system measured at the second time. Probabilities follow from
//! `P(a,b|x) = Tr[(E_{a|x} ⊗ ρ_aᵀ ⊗ F_b) W]`; the repreparation enters through
//! its Choi representation, hence the transpose.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eigenvalues, kron, kron_all, partial_trace, partial_transpose, permute_factors,
    vectorize, ComplexMatrix, TensorLayout, HERMITIAN_TOL,
};
use crate::scalar::{Prob, Real};

/// Output tolerance for structural checks on process operators.
pub const PROCESS_TOL: f64 = 1e-9;

/// Two-outcome POVM on a qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryPovm<T> {
    effects: [ComplexMatrix<T>; 2],
}

impl<T: Real> BinaryPovm<T> {
    pub fn new(e0: ComplexMatrix<T>, e1: ComplexMatrix<T>) -> Result<Self> {
        let tol = T::lit(HERMITIAN_TOL);
        if e0.dim() != e1.dim() {
            return Err(Error::Dimension("POVM effects differ in dimension".into()));
        }
        for (k, e) in [&e0, &e1].into_iter().enumerate() {
            if !e.is_hermitian(tol) {
                return Err(Error::Validation(format!("effect {k} is not Hermitian")));
            }
            let min = herm_eigenvalues(e)?[0];
            if min < -tol {
                return Err(Error::Validation(format!(
                    "effect {k} has negative eigenvalue {min}"
                )));
            }
        }
        let defect = (&e0 + &e1).max_abs_diff(&ComplexMatrix::identity(e0.dim()));
        if defect > tol {
            return Err(Error::Validation(format!(
                "effects do not sum to identity (defect {defect})"
            )));
        }
        Ok(Self { effects: [e0, e1] })
    }

    /// Completes a single effect `e` with `id - e`.
    pub fn from_effect(e0: ComplexMatrix<T>) -> Result<Self> {
        let e1 = &ComplexMatrix::identity(e0.dim()) - &e0;
        Self::new(e0, e1)
    }

    /// Projective measurement of `n·σ` for a unit Bloch vector `n`; outcome 0
    /// is the `+1` eigenspace.
    pub fn along(n: [T; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (norm - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::Validation(format!(
                "Bloch direction must be a unit vector, norm is {norm}"
            )));
        }
        let half = T::lit(0.5);
        let e0 = &ComplexMatrix::identity(2).scale_real(half)
            + &crate::linalg::gates::bloch_operator(n).scale_real(half);
        Self::from_effect(e0)
    }

    pub fn effect(&self, outcome: usize) -> &ComplexMatrix<T> {
        &self.effects[outcome]
    }

    pub fn effects(&self) -> &[ComplexMatrix<T>; 2] {
        &self.effects
    }

    /// Same effects with the outcome labels exchanged.
    pub fn relabeled(&self) -> Self {
        Self {
            effects: [self.effects[1].clone(), self.effects[0].clone()],
        }
    }
}

/// Measure-and-prepare instrument: a POVM on `A'` for every setting and one
/// repreparation of `A` per outcome.
#[derive(Clone, Debug)]
pub struct MpInstrument<T> {
    settings: Vec<String>,
    povms: Vec<BinaryPovm<T>>,
    repreparations: [ComplexMatrix<T>; 2],
}

impl<T: Real> MpInstrument<T> {
    pub fn new(
        settings: Vec<String>,
        povms: Vec<BinaryPovm<T>>,
        repreparations: [ComplexMatrix<T>; 2],
    ) -> Result<Self> {
        if settings.is_empty() || settings.len() != povms.len() {
            return Err(Error::Validation(format!(
                "{} setting labels for {} measurements",
                settings.len(),
                povms.len()
            )));
        }
        for rho in &repreparations {
            rho.validate_state(T::lit(HERMITIAN_TOL))?;
        }
        Ok(Self {
            settings,
            povms,
            repreparations,
        })
    }

    pub fn settings(&self) -> &[String] {
        &self.settings
    }

    pub fn povms(&self) -> &[BinaryPovm<T>] {
        &self.povms
    }

    pub fn repreparations(&self) -> &[ComplexMatrix<T>; 2] {
        &self.repreparations
    }
}

/// Operator on `A' ⊗ A ⊗ B` together with the marginal state of `A'`.
#[derive(Clone, Debug)]
pub struct ProcessOperator<T> {
    w: ComplexMatrix<T>,
    layout: TensorLayout,
    marginal_state: ComplexMatrix<T>,
}

impl<T: Real> ProcessOperator<T> {
    /// Wraps raw data without checking it; use [`validate_process`] to audit.
    pub fn from_parts(w: ComplexMatrix<T>, marginal_state: ComplexMatrix<T>) -> Result<Self> {
        if w.dim() != 8 || marginal_state.dim() != 2 {
            return Err(Error::Dimension(format!(
                "qubit process operators are 8x8 with a 2x2 marginal, got {} and {}",
                w.dim(),
                marginal_state.dim()
            )));
        }
        Ok(Self {
            w,
            layout: TensorLayout::qubits(3),
            marginal_state,
        })
    }

    pub fn w(&self) -> &ComplexMatrix<T> {
        &self.w
    }

    pub fn layout(&self) -> &TensorLayout {
        &self.layout
    }

    pub fn marginal_state(&self) -> &ComplexMatrix<T> {
        &self.marginal_state
    }

    /// Convex combination `p·self + (1-p)·other`.
    pub fn mix(&self, other: &Self, p: T) -> Self {
        let q = T::one() - p;
        Self {
            w: &self.w.scale_real(p) + &other.w.scale_real(q),
            layout: self.layout.clone(),
            marginal_state: &self.marginal_state.scale_real(p)
                + &other.marginal_state.scale_real(q),
        }
    }

    /// Conjugates the operator by `v` acting on `A`.
    pub fn conjugate_input(&self, v: &ComplexMatrix<T>) -> Self {
        let id = ComplexMatrix::identity(2);
        let full = kron_all(&[&id, v, &id]);
        Self {
            w: &(&full * &self.w) * &full.adjoint(),
            layout: self.layout.clone(),
            marginal_state: self.marginal_state.clone(),
        }
    }
}

/// Table `P(a,b|x)` for binary `a`, `b` over a finite setting alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior<P> {
    settings: Vec<String>,
    probs: Vec<[[P; 2]; 2]>,
    shots: Option<Vec<u64>>,
}

impl<P: Prob> Behavior<P> {
    /// `probs[x][a][b]`.
    pub fn new(settings: Vec<String>, probs: Vec<[[P; 2]; 2]>) -> Result<Self> {
        if settings.is_empty() || settings.len() != probs.len() {
            return Err(Error::Validation(format!(
                "{} setting labels for {} probability rows",
                settings.len(),
                probs.len()
            )));
        }
        check_unique(&settings)?;
        let tol = P::tolerance();
        for (label, row) in settings.iter().zip(&probs) {
            let mut total = P::zero();
            for &p in row.iter().flatten() {
                if p < P::zero() - tol {
                    return Err(Error::Validation(format!(
                        "negative probability {p:?} at setting {label}"
                    )));
                }
                total = total + p;
            }
            if (total - P::one()).abs_val() > tol {
                return Err(Error::Validation(format!(
                    "probabilities at setting {label} sum to {total:?}"
                )));
            }
        }
        Ok(Self {
            settings,
            probs,
            shots: None,
        })
    }

    /// Settings labelled `0..n`.
    pub fn indexed(probs: Vec<[[P; 2]; 2]>) -> Result<Self> {
        let settings = (0..probs.len()).map(|x| x.to_string()).collect();
        Self::new(settings, probs)
    }

    /// `P(a,b|x) = 1/4` everywhere.
    pub fn uniform(n_settings: usize) -> Self {
        let q = P::one() / (P::two() * P::two());
        Self::indexed(vec![[[q; 2]; 2]; n_settings]).expect("uniform behavior is valid")
    }

    pub fn with_shots(mut self, shots: Vec<u64>) -> Result<Self> {
        if shots.len() != self.probs.len() {
            return Err(Error::Validation("one shot count per setting required".into()));
        }
        self.shots = Some(shots);
        Ok(self)
    }

    pub fn settings(&self) -> &[String] {
        &self.settings
    }

    pub fn num_settings(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[[[P; 2]; 2]] {
        &self.probs
    }

    pub fn p(&self, a: usize, b: usize, x: usize) -> P {
        self.probs[x][a][b]
    }

    pub fn shots(&self) -> Option<&[u64]> {
        self.shots.as_deref()
    }

    /// Convex combination `w·self + (1-w)·other` over the same settings.
    pub fn mix(&self, other: &Self, w: P) -> Result<Self> {
        if self.settings != other.settings {
            return Err(Error::Validation("mixing behaviors over different settings".into()));
        }
        let v = P::one() - w;
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(r, s)| {
                let mut out = [[P::zero(); 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        out[a][b] = w * r[a][b] + v * s[a][b];
                    }
                }
                out
            })
            .collect();
        Self::new(self.settings.clone(), probs)
    }

    pub fn to_f64(&self) -> Behavior<f64> {
        Behavior {
            settings: self.settings.clone(),
            probs: self
                .probs
                .iter()
                .map(|r| r.map(|row| row.map(|p| p.to_f64_approx())))
                .collect(),
            shots: self.shots.clone(),
        }
    }
}

/// Interventional table `P(B=b | do(A=a, X=x))`, indexed `[x][a][b]`.
///
/// When the repreparations do not depend on the setting the table carries a
/// single row and no setting labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DoTable<P> {
    settings: Option<Vec<String>>,
    probs: Vec<[[P; 2]; 2]>,
    shots: Option<Vec<[u64; 2]>>,
}

impl<P: Prob> DoTable<P> {
    fn check(probs: &[[[P; 2]; 2]]) -> Result<()> {
        let tol = P::tolerance();
        for (x, row) in probs.iter().enumerate() {
            for (a, pb) in row.iter().enumerate() {
                if pb.iter().any(|&p| p < P::zero() - tol) {
                    return Err(Error::Validation(format!(
                        "negative interventional probability at a={a}, x={x}"
                    )));
                }
                if (pb[0] + pb[1] - P::one()).abs_val() > tol {
                    return Err(Error::Validation(format!(
                        "P(b|do(a={a})) at x={x} does not sum to 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Setting-independent table, `probs[a][b]`.
    pub fn collapsed(probs: [[P; 2]; 2]) -> Result<Self> {
        Self::check(&[probs])?;
        Ok(Self {
            settings: None,
            probs: vec![probs],
            shots: None,
        })
    }

    /// Table with one row per setting, `probs[x][a][b]`.
    pub fn per_setting(settings: Vec<String>, probs: Vec<[[P; 2]; 2]>) -> Result<Self> {
        if settings.is_empty() || settings.len() != probs.len() {
            return Err(Error::Validation("one do-row per setting required".into()));
        }
        check_unique(&settings)?;
        Self::check(&probs)?;
        Ok(Self {
            settings: Some(settings),
            probs,
            shots: None,
        })
    }

    /// Shot counts per `[x][a]`.
    pub fn with_shots(mut self, shots: Vec<[u64; 2]>) -> Result<Self> {
        if shots.len() != self.probs.len() {
            return Err(Error::Validation("one shot pair per do-row required".into()));
        }
        self.shots = Some(shots);
        Ok(self)
    }

    pub fn settings(&self) -> Option<&[String]> {
        self.settings.as_deref()
    }

    pub fn is_setting_indexed(&self) -> bool {
        self.settings.is_some()
    }

    pub fn probs(&self) -> &[[[P; 2]; 2]] {
        &self.probs
    }

    /// `P(b|do(a, x))`; collapsed tables ignore `x`.
    pub fn p(&self, b: usize, a: usize, x: usize) -> P {
        let row = if self.settings.is_some() { x } else { 0 };
        self.probs[row][a][b]
    }

    pub fn shots(&self) -> Option<&[[u64; 2]]> {
        self.shots.as_deref()
    }

    pub fn to_f64(&self) -> DoTable<f64> {
        DoTable {
            settings: self.settings.clone(),
            probs: self
                .probs
                .iter()
                .map(|r| r.map(|row| row.map(|p| p.to_f64_approx())))
                .collect(),
            shots: self.shots.clone(),
        }
    }
}

fn check_unique(settings: &[String]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for s in settings {
        if !seen.insert(s) {
            return Err(Error::Validation(format!("duplicate setting label `{s}`")));
        }
    }
    Ok(())
}

/// `W = Tr_{EE'}[(ϱ^{T_E} ⊗ id)(id_{A'} ⊗ |U⟩⟩⟨⟨U|)]` for a state `ϱ` on
/// `A' ⊗ E` and a unitary `U: A ⊗ E → B ⊗ E'`.
pub fn build_process<T: Real>(
    rho: &ComplexMatrix<T>,
    u: &ComplexMatrix<T>,
) -> Result<ProcessOperator<T>> {
    if rho.dim() != 4 || u.dim() != 4 {
        return Err(Error::Dimension(format!(
            "expected a two-qubit state and a two-qubit unitary, got dims {} and {}",
            rho.dim(),
            u.dim()
        )));
    }
    rho.validate_state(T::lit(HERMITIAN_TOL))?;
    let defect = u.unitarity_defect();
    if defect > T::lit(HERMITIAN_TOL) {
        return Err(Error::Validation(format!(
            "interaction is not unitary (defect {defect})"
        )));
    }
    let pair = TensorLayout::qubits(2);
    let rho_te = partial_transpose(rho, &pair, 1)?;
    // factors: A', E, A, B, E'
    let five = TensorLayout::qubits(5);
    let left = kron(&rho_te, &ComplexMatrix::identity(8));
    let choi_u = ComplexMatrix::outer(&vectorize(u));
    let right = permute_factors(
        &kron(&ComplexMatrix::identity(2), &choi_u),
        &five,
        &[0, 2, 1, 3, 4],
    )?;
    let w = partial_trace(&(&left * &right), &five, &[1, 4])?;
    let marginal = partial_trace(rho, &pair, &[1])?;
    ProcessOperator::from_parts(w, marginal)
}

/// Observational statistics `P(a,b|x)`.
pub fn born_rule<T: Real>(
    w: &ProcessOperator<T>,
    inst: &MpInstrument<T>,
    f: &BinaryPovm<T>,
) -> Result<Behavior<T>> {
    let rho_t = inst.repreparations.clone().map(|r| r.transpose());
    let mut probs = Vec::with_capacity(inst.povms.len());
    for povm in &inst.povms {
        let mut row = [[T::zero(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let op = kron_all(&[povm.effect(a), &rho_t[a], f.effect(b)]);
                // clip rounding noise below zero
                row[a][b] = op.trace_product_re(&w.w).max(T::zero());
            }
        }
        probs.push(row);
    }
    Behavior::new(inst.settings.clone(), probs)
}

/// Interventional statistics `P(b|do(a)) = Tr[(id ⊗ ρ_aᵀ ⊗ F_b) W]`.
pub fn do_probabilities<T: Real>(
    w: &ProcessOperator<T>,
    repreparations: &[ComplexMatrix<T>; 2],
    f: &BinaryPovm<T>,
) -> Result<DoTable<T>> {
    for rho in repreparations {
        rho.validate_state(T::lit(HERMITIAN_TOL))?;
    }
    let id = ComplexMatrix::identity(2);
    let mut probs = [[T::zero(); 2]; 2];
    for (a, rho) in repreparations.iter().enumerate() {
        let rho_t = rho.transpose();
        for b in 0..2 {
            let op = kron_all(&[&id, &rho_t, f.effect(b)]);
            probs[a][b] = op.trace_product_re(&w.w).max(T::zero());
        }
    }
    DoTable::collapsed(probs)
}

/// Structural defect found by [`validate_process`].
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessViolation {
    NotHermitian { defect: f64 },
    NotPositive { min_eigenvalue: f64 },
    MarginalMismatch { deviation: f64 },
    TraceMismatch { trace: f64 },
}

impl fmt::Display for ProcessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotHermitian { defect } => write!(f, "not Hermitian (defect {defect:e})"),
            Self::NotPositive { min_eigenvalue } => {
                write!(f, "not positive semidefinite (eigenvalue {min_eigenvalue:e})")
            }
            Self::MarginalMismatch { deviation } => {
                write!(f, "Tr_B W differs from ρ_A' ⊗ id_A by {deviation:e}")
            }
            Self::TraceMismatch { trace } => write!(f, "Tr W = {trace}, expected 2"),
        }
    }
}

/// Lists every violated process-operator invariant; empty when valid.
pub fn validate_process<T: Real>(w: &ProcessOperator<T>) -> Vec<ProcessViolation> {
    let tol = T::lit(PROCESS_TOL);
    let mut out = Vec::new();
    let defect = w.w.hermiticity_defect();
    if defect > tol {
        out.push(ProcessViolation::NotHermitian {
            defect: defect.to_f64_approx(),
        });
    } else if let Ok(ev) = herm_eigenvalues(&w.w) {
        if ev[0] < -tol {
            out.push(ProcessViolation::NotPositive {
                min_eigenvalue: ev[0].to_f64_approx(),
            });
        }
    }
    let tr = w.w.trace();
    if (tr.re - T::two()).abs() > tol || tr.im.abs() > tol {
        out.push(ProcessViolation::TraceMismatch {
            trace: tr.re.to_f64_approx(),
        });
    }
    let expected = kron(&w.marginal_state, &ComplexMatrix::identity(2));
    if let Ok(reduced) = partial_trace(&w.w, &w.layout, &[2]) {
        let dev = reduced.max_abs_diff(&expected);
        if dev > tol {
            out.push(ProcessViolation::MarginalMismatch {
                deviation: dev.to_f64_approx(),
            });
        }
    }
    out
}
