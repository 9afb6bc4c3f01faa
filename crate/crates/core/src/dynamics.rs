//! Born-rule measurement and the two rival evolution models.
//!
//! [`ModelKind::UnitaryOnly`] treats every interaction, including an
//! observer's measurement, as an entangling unitary. [`ModelKind::ObjectiveCollapse`]
//! applies the same unitary and then projects the designated registers onto
//! a sampled basis value.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::statespace::{DensityMatrix, RegisterLayout, StateVector};
use crate::tolerance::ZERO_PROBABILITY;
use crate::unitary::{apply, UnitaryOperator};

/// Independent random stream for one trial.
///
/// `ChaCha8` supports 2^64 disjoint streams per key; the trial index picks
/// the stream so trials can run in any order or in parallel.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    UnitaryOnly,
    ObjectiveCollapse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionModel {
    pub kind: ModelKind,
    /// Registers projected at every measurement interaction (collapse only).
    pub collapse_registers: Vec<String>,
    pub rng_seed: u64,
}

impl EvolutionModel {
    pub fn unitary_only(rng_seed: u64) -> Self {
        Self {
            kind: ModelKind::UnitaryOnly,
            collapse_registers: Vec::new(),
            rng_seed,
        }
    }

    pub fn objective_collapse<S: Into<String>>(
        registers: impl IntoIterator<Item = S>,
        rng_seed: u64,
    ) -> Self {
        Self {
            kind: ModelKind::ObjectiveCollapse,
            collapse_registers: registers.into_iter().map(Into::into).collect(),
            rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub register: String,
    pub value: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

/// One step of a protocol.
#[derive(Debug, Clone)]
pub enum ProtocolStep {
    Unitary(UnitaryOperator),
    /// An observer interacting with a system; an entangling unitary that
    /// collapse models follow with a projection.
    MeasurementInteraction(UnitaryOperator),
}

impl ProtocolStep {
    pub fn unitary(&self) -> &UnitaryOperator {
        match self {
            ProtocolStep::Unitary(u) | ProtocolStep::MeasurementInteraction(u) => u,
        }
    }
}

/// What [`evolve`] produced.
#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    State(StateVector),
    /// Collapsed registers, in the order they were measured. The last
    /// outcome's `post_state` is the state after the step.
    Collapsed(Vec<MeasurementOutcome>),
}

impl StepResult {
    pub fn state(&self) -> &StateVector {
        match self {
            StepResult::State(s) => s,
            StepResult::Collapsed(outcomes) => {
                &outcomes
                    .last()
                    .expect("collapse result holds at least one outcome")
                    .post_state
            }
        }
    }

    pub fn into_state(self) -> StateVector {
        match self {
            StepResult::State(s) => s,
            StepResult::Collapsed(mut outcomes) => {
                outcomes
                    .pop()
                    .expect("collapse result holds at least one outcome")
                    .post_state
            }
        }
    }
}

/// Born probabilities of every basis value of `register`.
///
/// Probabilities are normalized by the total squared norm so they sum to one
/// even for slightly unnormalized inputs.
pub fn born_distribution(psi: &StateVector, register: &str) -> Result<Vec<f64>> {
    let layout = psi.layout();
    let pos = layout.position(register)?;
    let d = layout.registers()[pos].dim;
    let mut probs = vec![0.0; d];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        probs[layout.local_value(i, pos)] += a.norm_sqr();
    }
    normalize_probs(probs)
}

/// Register distribution of a mixed state: diagonal weights summed per value.
pub fn born_distribution_mixed(
    rho: &DensityMatrix,
    layout: &RegisterLayout,
    register: &str,
) -> Result<Vec<f64>> {
    if layout.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            found: rho.dim(),
        });
    }
    let pos = layout.position(register)?;
    let mut probs = vec![0.0; layout.registers()[pos].dim];
    for i in 0..rho.dim() {
        probs[layout.local_value(i, pos)] += rho.entries()[(i, i)].re;
    }
    normalize_probs(probs)
}

fn normalize_probs(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::NotNormalized { norm_sqr: total });
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Projects `psi` onto `register = value` and renormalizes.
pub fn project(psi: &StateVector, register: &str, value: usize) -> Result<StateVector> {
    let layout = psi.layout();
    let pos = layout.position(register)?;
    let amps = CVector::from_iterator(
        psi.dim(),
        psi.amplitudes().iter().enumerate().map(|(i, a)| {
            if layout.local_value(i, pos) == value {
                *a
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    );
    StateVector::unnormalized(layout.clone(), amps)?.normalized()
}

/// Samples a value of `register` with Born probabilities and collapses onto it.
///
/// Consumes exactly one uniform draw. Branches with probability below
/// [`ZERO_PROBABILITY`] are never selected.
pub fn measure_register<R: Rng + ?Sized>(
    psi: &StateVector,
    register: &str,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let probs = born_distribution(psi, register)?;
    let u: f64 = rng.random();
    let value = sample_index(&probs, u);
    Ok(MeasurementOutcome {
        register: register.to_string(),
        value,
        probability: probs[value],
        post_state: project(psi, register, value)?,
    })
}

/// Inverse-CDF selection over the non-negligible entries of `probs`.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let live: Vec<usize> = (0..probs.len())
        .filter(|&k| probs[k] >= ZERO_PROBABILITY)
        .collect();
    let total: f64 = live.iter().map(|&k| probs[k]).sum();
    let target = u * total;
    let mut acc = 0.0;
    for &k in &live {
        acc += probs[k];
        if target < acc {
            return k;
        }
    }
    *live
        .last()
        .expect("a normalized distribution has a live branch")
}

/// Advances `psi` by one protocol step under `model`.
///
/// Under [`ModelKind::UnitaryOnly`] the RNG is never touched.
pub fn evolve<R: Rng + ?Sized>(
    model: &EvolutionModel,
    psi: &StateVector,
    step: &ProtocolStep,
    rng: &mut R,
) -> Result<StepResult> {
    let next = apply(step.unitary(), psi)?;
    match (model.kind, step) {
        (ModelKind::ObjectiveCollapse, ProtocolStep::MeasurementInteraction(_))
            if !model.collapse_registers.is_empty() =>
        {
            let mut outcomes: Vec<MeasurementOutcome> =
                Vec::with_capacity(model.collapse_registers.len());
            let mut state = next;
            for reg in &model.collapse_registers {
                let out = measure_register(&state, reg, rng)?;
                state = out.post_state.clone();
                outcomes.push(out);
            }
            Ok(StepResult::Collapsed(outcomes))
        }
        _ => Ok(StepResult::State(next)),
    }
}
