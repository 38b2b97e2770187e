//! Experiment configuration (TOML) and the simulate-then-certify pipeline.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{certify, certify_counts, BootstrapOptions, CertReport, CertifyOptions};
use crate::counts::{sample_behavior, sample_do_table, CountTable};
use crate::error::{Error, Result};
use crate::linalg::{gates, ComplexMatrix};
use crate::process::{born_rule, build_process, do_probabilities, Behavior, BinaryPovm, DoTable, MpInstrument};
use crate::proclib::{
    bell_state, bloch_state, cnot_swap, depolarize_memory, kets, partial_swap, pure_state,
    DecayOptions, NoiseParams,
};

const MEMORY_TEST_PRESET: &str = include_str!("../presets/memory_test.toml");
const PARTIAL_SWAP_PRESET: &str = include_str!("../presets/partial_swap.toml");

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 2] = ["memory_test", "partial_swap"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    MemoryTest,
    PartialSwap,
    Custom,
}

/// Rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub name: Option<String>,
    pub matrix: Option<MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitarySpec {
    pub name: Option<String>,
    pub alpha: Option<f64>,
    pub matrix: Option<MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingSpec {
    pub label: String,
    /// `x`, `y` or `z`.
    pub observable: Option<String>,
    /// Explicit unit Bloch direction of outcome 0.
    pub bloch: Option<[f64; 3]>,
    /// `-1` exchanges the outcome labels.
    #[serde(default = "default_sign")]
    pub sign: i32,
}

fn default_sign() -> i32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepreparationSpec {
    /// `plus_minus` (`|−⟩`, `|+⟩`) or `plus_minus_i` (`|+i⟩`, `|−i⟩`).
    pub family: Option<String>,
    /// Bloch angles `[θ, φ]` of the states after `A=0` and `A=1`.
    pub angles: Option<[[f64; 2]; 2]>,
    pub matrices: Option<[MatrixSpec; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    /// `x`, `y`, `z` or `x+z`.
    pub observable: Option<String>,
    pub bloch: Option<[f64; 3]>,
    /// Explicit effect for outcome 0.
    pub effect: Option<MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub t2: f64,
    pub t1: f64,
    pub echo_fidelity: f64,
    pub echo_interval: f64,
    pub initial_gamma: f64,
    #[serde(default)]
    pub wait_ms: f64,
    #[serde(default)]
    pub include_t1: bool,
}

impl NoiseSpec {
    pub fn params(&self) -> NoiseParams<f64> {
        NoiseParams {
            t2: self.t2,
            t1: self.t1,
            echo_fidelity: self.echo_fidelity,
            echo_interval: self.echo_interval,
            initial_gamma: self.initial_gamma,
        }
    }
}

/// `"exact"` or a shot count per setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shots {
    Count(u64),
    Mode(String),
}

impl Shots {
    /// `None` for exact probabilities.
    pub fn count(&self) -> Result<Option<u64>> {
        match self {
            Shots::Count(0) => Err(Error::Config("shots must be positive".into())),
            Shots::Count(n) => Ok(Some(*n)),
            Shots::Mode(m) if m == "exact" => Ok(None),
            Shots::Mode(m) => Err(Error::Config(format!(
                "shots must be an integer or \"exact\", got \"{m}\""
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub shots: Shots,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_sigma_k")]
    pub sigma_k: f64,
    pub state: StateSpec,
    pub unitary: UnitarySpec,
    pub settings: Vec<SettingSpec>,
    pub repreparations: RepreparationSpec,
    pub final_measurement: MeasurementSpec,
    pub noise: Option<NoiseSpec>,
}

fn default_seed() -> u64 {
    42
}
fn default_resamples() -> usize {
    10_000
}
fn default_sigma_k() -> f64 {
    3.0
}

fn matrix(spec: &MatrixSpec) -> Result<ComplexMatrix<f64>> {
    let rows: Vec<Vec<(f64, f64)>> = spec
        .iter()
        .map(|r| r.iter().map(|z| (z[0], z[1])).collect())
        .collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| Error::Config(e.to_string()))
}

fn axis(name: &str) -> Result<[f64; 3]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match name {
        "x" => [1.0, 0.0, 0.0],
        "y" => [0.0, 1.0, 0.0],
        "z" => [0.0, 0.0, 1.0],
        "x+z" => [h, 0.0, h],
        other => return Err(Error::Config(format!("unknown observable `{other}`"))),
    })
}

/// Fully resolved simulation inputs.
#[derive(Clone, Debug)]
pub struct ResolvedExperiment {
    pub state: ComplexMatrix<f64>,
    pub unitary: ComplexMatrix<f64>,
    pub instrument: MpInstrument<f64>,
    pub final_povm: BinaryPovm<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name.replace('-', "_").as_str() {
            "memory_test" => MEMORY_TEST_PRESET,
            "partial_swap" => PARTIAL_SWAP_PRESET,
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset `{name}`, expected one of {PRESETS:?}"
                )))
            }
        };
        Self::from_toml_str(text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves names and validates explicit matrices.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let state = match (&self.state.name, &self.state.matrix) {
            (Some(n), None) if n == "bell" => bell_state(),
            (None, Some(m)) => matrix(m)?,
            (Some(n), None) => return Err(Error::Config(format!("unknown state `{n}`"))),
            _ => return Err(Error::Config("state needs exactly one of name, matrix".into())),
        };
        if state.dim() != 4 {
            return Err(Error::Config("initial state must be 4x4".into()));
        }
        state.validate_state(1e-10)?;

        let u = &self.unitary;
        let unitary = match (u.name.as_deref(), &u.matrix) {
            (Some("cnot_swap"), None) => cnot_swap(),
            (Some("identity"), None) => ComplexMatrix::identity(4),
            (Some("swap"), None) => gates::swap(),
            (Some("partial_swap"), None) => {
                let alpha = u
                    .alpha
                    .ok_or_else(|| Error::Config("partial_swap needs alpha".into()))?;
                if !(0.0..=std::f64::consts::PI).contains(&alpha) {
                    return Err(Error::Domain(format!("α = {alpha} outside [0, π]")));
                }
                partial_swap(alpha)
            }
            (None, Some(m)) => matrix(m)?,
            (Some(n), None) => return Err(Error::Config(format!("unknown unitary `{n}`"))),
            _ => return Err(Error::Config("unitary needs exactly one of name, matrix".into())),
        };
        if unitary.dim() != 4 || unitary.unitarity_defect() > 1e-10 {
            return Err(Error::Validation("interaction must be a 4x4 unitary".into()));
        }

        if self.settings.is_empty() {
            return Err(Error::Config("at least one setting is required".into()));
        }
        let mut labels = Vec::new();
        let mut povms = Vec::new();
        for s in &self.settings {
            let dir = match (&s.observable, s.bloch) {
                (Some(o), None) => axis(o)?,
                (None, Some(b)) => b,
                _ => {
                    return Err(Error::Config(format!(
                        "setting {} needs exactly one of observable, bloch",
                        s.label
                    )))
                }
            };
            let povm = BinaryPovm::along(dir)?;
            povms.push(match s.sign {
                1 => povm,
                -1 => povm.relabeled(),
                other => return Err(Error::Config(format!("sign must be ±1, got {other}"))),
            });
            labels.push(s.label.clone());
        }

        let r = &self.repreparations;
        let reps = match (r.family.as_deref(), &r.angles, &r.matrices) {
            (Some("plus_minus"), None, None) => {
                [pure_state(&kets::minus()), pure_state(&kets::plus())]
            }
            (Some("plus_minus_i"), None, None) => {
                [pure_state(&kets::plus_i()), pure_state(&kets::minus_i())]
            }
            (None, Some(a), None) => [bloch_state(a[0][0], a[0][1]), bloch_state(a[1][0], a[1][1])],
            (None, None, Some(m)) => [matrix(&m[0])?, matrix(&m[1])?],
            (Some(f), None, None) => {
                return Err(Error::Config(format!("unknown repreparation family `{f}`")))
            }
            _ => {
                return Err(Error::Config(
                    "repreparations need exactly one of family, angles, matrices".into(),
                ))
            }
        };
        let instrument = MpInstrument::new(labels, povms, reps)?;

        let m = &self.final_measurement;
        let final_povm = match (&m.observable, m.bloch, &m.effect) {
            (Some(o), None, None) => BinaryPovm::along(axis(o)?)?,
            (None, Some(b), None) => BinaryPovm::along(b)?,
            (None, None, Some(e)) => BinaryPovm::from_effect(matrix(e)?)?,
            _ => {
                return Err(Error::Config(
                    "final measurement needs exactly one of observable, bloch, effect".into(),
                ))
            }
        };
        Ok(ResolvedExperiment {
            state,
            unitary,
            instrument,
            final_povm,
        })
    }
}

/// Everything produced by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    /// Exact probabilities, or frequencies when sampled.
    pub behavior: Behavior<f64>,
    pub do_table: DoTable<f64>,
    pub report: CertReport,
    /// Sampled observational and interventional counts.
    pub counts: Option<(CountTable, CountTable)>,
}

/// Simulates the configured experiment and certifies the result.
///
/// With finite shots, observational counts come from stream 0 and
/// interventional counts from stream 1 of a ChaCha generator seeded with
/// `cfg.seed`; the bootstrap reuses the same seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let r = cfg.resolve()?;
    let mut state = r.state.clone();
    if let Some(noise) = &cfg.noise {
        let params = noise.params();
        params.validate()?;
        if noise.wait_ms < 0.0 {
            return Err(Error::Domain("waiting time must be nonnegative".into()));
        }
        let v = params.visibility(
            noise.wait_ms,
            DecayOptions {
                include_t1: noise.include_t1,
            },
        );
        state = depolarize_memory(&state, v)?;
    }
    let w = build_process(&state, &r.unitary)?;
    let exact = born_rule(&w, &r.instrument, &r.final_povm)?;
    let exact_do = do_probabilities(&w, r.instrument.repreparations(), &r.final_povm)?;

    match cfg.shots.count()? {
        None => {
            let report = certify(
                &exact,
                Some(&exact_do),
                None,
                &CertifyOptions {
                    sigma_k: cfg.sigma_k,
                    seed: cfg.seed,
                    resamples: 0,
                },
            )?;
            Ok(ExperimentOutcome {
                behavior: exact,
                do_table: exact_do,
                report,
                counts: None,
            })
        }
        Some(shots) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0);
            let obs = sample_behavior(&exact, shots, &mut rng)?;
            rng.set_stream(1);
            let intv = sample_do_table(&exact_do, exact.settings(), shots, &mut rng)?;
            let report = certify_counts(
                &obs,
                Some(&intv),
                cfg.sigma_k,
                &BootstrapOptions {
                    resamples: cfg.resamples,
                    seed: cfg.seed,
                    frozen_argmin: false,
                },
            )?;
            Ok(ExperimentOutcome {
                behavior: obs.to_behavior()?,
                do_table: intv.to_do_table()?,
                report,
                counts: Some((obs, intv)),
            })
        }
    }
}

/// Γ of the memory test after waiting `t` ms, through the full simulation.
pub fn simulate_decay_point(noise: &NoiseSpec) -> Result<f64> {
    let mut cfg = ExperimentConfig::preset("memory_test")?;
    cfg.noise = Some(noise.clone());
    Ok(run_experiment(&cfg)?.report.gamma)
}
