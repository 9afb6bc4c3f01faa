//! The repeatable interference experiment that separates unitary-only
//! dynamics from objective collapse.
//!
//! An electron spin is prepared in `(|up> + e^{i phi}|down>)/sqrt2`, an
//! experimenter records it, and a machine maps each recorded branch onto a
//! common memory-wiped state `|reset>` times a paper record:
//!
//! ```text
//! |up,   E_up,   blank>  ->              |reset> (|N> + |Y>)/sqrt2
//! |down, E_down, blank>  ->  e^{-i phi'} |reset> (-|N> + |Y>)/sqrt2
//! ```
//!
//! Without collapse the branches interfere and the paper reads `Yes` with
//! probability `cos^2((phi - phi')/2)`. After a collapse each surviving
//! branch alone gives `Yes` with probability 1/2.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{
    born_distribution, evolve, measure_register, project, trial_rng, EvolutionModel, ModelKind,
    ProtocolStep,
};
use crate::error::{Error, Result};
use crate::statespace::{RegisterLayout, StateVector};
use crate::tolerance::REJECTION_PROBABILITY;
use crate::unitary::{apply, complete_to_unitary, PartialIsometrySpec, UnitaryOperator};

pub const SPIN: &str = "spin";
pub const EXPERIMENTER: &str = "experimenter";
pub const PAPER: &str = "paper";

pub const SPIN_UP: usize = 0;
pub const SPIN_DOWN: usize = 1;
/// Experimenter memory: ready, saw up, saw down.
pub const E_READY: usize = 0;
pub const E_UP: usize = 1;
pub const E_DOWN: usize = 2;
pub const PAPER_BLANK: usize = 0;
pub const PAPER_NO: usize = 1;
pub const PAPER_YES: usize = 2;

/// `spin(2) ⊗ experimenter(3) ⊗ paper(3)`.
pub fn room_layout() -> RegisterLayout {
    RegisterLayout::new([(SPIN, 2), (EXPERIMENTER, 3), (PAPER, 3)]).expect("static layout is valid")
}

pub fn room_basis(spin: usize, experimenter: usize, paper: usize) -> StateVector {
    StateVector::basis_local(room_layout(), &[spin, experimenter, paper])
        .expect("local indices are in range")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Relative phase of the prepared spin superposition, radians in `[0, 2pi)`.
    pub phase_actual: f64,
    /// Phase the machine transform compensates, radians in `[0, 2pi)`.
    pub phase_assumed: f64,
    /// `|alpha_up|^2` of the preparation; 1/2 for the symmetric experiment.
    pub up_probability: f64,
    pub trials: u64,
    pub model: EvolutionModel,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Symmetric preparation. Phases are reduced into `[0, 2pi)`.
    pub fn new(
        kind: ModelKind,
        trials: u64,
        phase_actual: f64,
        phase_assumed: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::with_bias(kind, trials, phase_actual, phase_assumed, 0.5, seed)
    }

    pub fn with_bias(
        kind: ModelKind,
        trials: u64,
        phase_actual: f64,
        phase_assumed: f64,
        up_probability: f64,
        seed: u64,
    ) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !phase_actual.is_finite() || !phase_assumed.is_finite() {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        if !(0.0..=1.0).contains(&up_probability) {
            return Err(Error::InvalidParameter(format!(
                "up probability {up_probability} outside [0, 1]"
            )));
        }
        let model = match kind {
            ModelKind::UnitaryOnly => EvolutionModel::unitary_only(seed),
            ModelKind::ObjectiveCollapse => EvolutionModel::objective_collapse([SPIN], seed),
        };
        Ok(Self {
            phase_actual: wrap_phase(phase_actual),
            phase_assumed: wrap_phase(phase_assumed),
            up_probability,
            trials,
            model,
            seed,
        })
    }

    pub fn phase_mismatch(&self) -> f64 {
        self.phase_actual - self.phase_assumed
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Yes,
    No,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Yes => "Yes",
            Outcome::No => "No",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    pub outcome: Outcome,
    /// Probability of `outcome` predicted by unitary-only dynamics.
    pub outcome_probability_rsi: f64,
    /// Probability of `outcome` predicted by objective collapse.
    pub outcome_probability_collapse: f64,
}

/// `(|up> + e^{i phi}|down>)/sqrt2 ⊗ |E_ready> ⊗ |blank>` (or the biased
/// analogue when `up_probability != 1/2`).
pub fn prepare_initial(cfg: &ExperimentConfig) -> StateVector {
    let a_up = cfg.up_probability.sqrt();
    let a_down = (1.0 - cfg.up_probability).sqrt();
    let up = room_basis(SPIN_UP, E_READY, PAPER_BLANK);
    let down = room_basis(SPIN_DOWN, E_READY, PAPER_BLANK);
    StateVector::superpose(&[
        (Complex64::new(a_up, 0.0), &up),
        (Complex64::from_polar(a_down, cfg.phase_actual), &down),
    ])
    .expect("basis states share a layout")
}

/// The experimenter reading the spin: `E_ready <-> E_up` when the spin is up,
/// `E_ready <-> E_down` when it is down; the paper is untouched.
pub fn record_spin_interaction() -> UnitaryOperator {
    let layout = room_layout();
    let perm: Vec<usize> = (0..layout.dim())
        .map(|i| {
            let loc = layout.local_indices(i);
            let (s, e, p) = (loc[0], loc[1], loc[2]);
            let seen = if s == SPIN_UP { E_UP } else { E_DOWN };
            let e2 = if e == E_READY {
                seen
            } else if e == seen {
                E_READY
            } else {
                e
            };
            layout
                .composite_index(&[s, e2, p])
                .expect("indices stay in range")
        })
        .collect();
    UnitaryOperator::permutation(&perm).expect("swap is a permutation")
}

/// Spin and memory state shared by both branches after the machine acts.
pub fn reset_state_indices() -> (usize, usize) {
    (SPIN_UP, E_READY)
}

/// Completed unitary realizing the machine transform for `cfg.phase_assumed`.
pub fn build_machine_transform(cfg: &ExperimentConfig) -> Result<UnitaryOperator> {
    let (rs, re) = reset_state_indices();
    let no = room_basis(rs, re, PAPER_NO);
    let yes = room_basis(rs, re, PAPER_YES);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let out_up = StateVector::superpose(&[(h, &no), (h, &yes)])?;
    let twist = Complex64::from_polar(FRAC_1_SQRT_2, -cfg.phase_assumed);
    let out_down = StateVector::superpose(&[(-twist, &no), (twist, &yes)])?;
    let spec = PartialIsometrySpec::new(vec![
        (room_basis(SPIN_UP, E_UP, PAPER_BLANK), out_up),
        (room_basis(SPIN_DOWN, E_DOWN, PAPER_BLANK), out_down),
    ])?;
    complete_to_unitary(&spec, cfg.seed)
}

/// `cos^2(mismatch / 2)`: Yes-probability of the unitary-only model when the
/// machine's assumed phase is off by `mismatch`.
pub fn rsi_yes_probability(phase_mismatch: f64) -> f64 {
    let c = (phase_mismatch / 2.0).cos();
    c * c
}

/// A configured experiment with its unitaries and model predictions built once.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    initial: StateVector,
    record: ProtocolStep,
    machine: ProtocolStep,
    yes_rsi: f64,
    yes_collapse: f64,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let initial = prepare_initial(&cfg);
        let record = ProtocolStep::MeasurementInteraction(record_spin_interaction());
        let machine = ProtocolStep::Unitary(build_machine_transform(&cfg)?);

        // Unitary-only prediction: push the whole superposition through.
        let coherent = apply(machine.unitary(), &apply(record.unitary(), &initial)?)?;
        let yes_rsi = born_distribution(&coherent, PAPER)?[PAPER_YES];

        // Collapse prediction: average the per-branch readouts.
        let entangled = apply(record.unitary(), &initial)?;
        let spin_probs = born_distribution(&entangled, SPIN)?;
        let mut yes_collapse = 0.0;
        for (s, &p) in spin_probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let branch = apply(machine.unitary(), &project(&entangled, SPIN, s)?)?;
            yes_collapse += p * born_distribution(&branch, PAPER)?[PAPER_YES];
        }

        Ok(Self {
            cfg,
            initial,
            record,
            machine,
            yes_rsi,
            yes_collapse,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    pub fn machine(&self) -> &UnitaryOperator {
        self.machine.unitary()
    }

    /// Yes-probability predicted by the unitary-only model (full simulation).
    pub fn yes_probability_rsi(&self) -> f64 {
        self.yes_rsi
    }

    /// Yes-probability predicted by the collapse model (full simulation).
    pub fn yes_probability_collapse(&self) -> f64 {
        self.yes_collapse
    }

    /// State just before the paper is read under unitary-only dynamics.
    pub fn coherent_pre_readout(&self) -> Result<StateVector> {
        apply(
            self.machine.unitary(),
            &apply(self.record.unitary(), &self.initial)?,
        )
    }

    pub fn run_trial(&self, index: u64) -> Result<TrialRecord> {
        let model = &self.cfg.model;
        let mut rng = trial_rng(self.cfg.seed, index);
        let state = evolve(model, &self.initial, &self.record, &mut rng)?.into_state();
        let state = evolve(model, &state, &self.machine, &mut rng)?.into_state();
        // The paper record is read projectively under both models.
        let readout = measure_register(&state, PAPER, &mut rng)?;
        let outcome = match readout.value {
            PAPER_YES => Outcome::Yes,
            PAPER_NO => Outcome::No,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "paper register read unexpected value {other}"
                )))
            }
        };
        let (p_rsi, p_col) = match outcome {
            Outcome::Yes => (self.yes_rsi, self.yes_collapse),
            Outcome::No => (1.0 - self.yes_rsi, 1.0 - self.yes_collapse),
        };
        Ok(TrialRecord {
            index,
            outcome,
            outcome_probability_rsi: p_rsi,
            outcome_probability_collapse: p_col,
        })
    }

    /// Runs trials `0..cfg.trials` in parallel; results are ordered by index
    /// and identical to a sequential run.
    pub fn run(&self) -> Result<Vec<TrialRecord>> {
        (0..self.cfg.trials)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect()
    }

    pub fn run_sequential(&self) -> Result<Vec<TrialRecord>> {
        (0..self.cfg.trials).map(|i| self.run_trial(i)).collect()
    }
}

/// One trial of `cfg`. Builds the experiment from scratch; prefer
/// [`Experiment::run_trial`] in loops.
pub fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<TrialRecord> {
    Experiment::new(cfg.clone())?.run_trial(index)
}

/// Natural-log Bayes factor of unitary-only over collapse dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogBayesFactor {
    Finite(f64),
    /// An outcome occurred that unitary-only dynamics gave probability zero.
    RsiRejected,
    /// An outcome occurred that collapse dynamics gave probability zero.
    CollapseRejected,
    BothRejected,
}

impl LogBayesFactor {
    pub fn value(&self) -> Option<f64> {
        match self {
            LogBayesFactor::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for LogBayesFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBayesFactor::Finite(v) => write!(f, "{v}"),
            LogBayesFactor::RsiRejected => f.write_str("rsi_rejected"),
            LogBayesFactor::CollapseRejected => f.write_str("collapse_rejected"),
            LogBayesFactor::BothRejected => f.write_str("both_rejected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceLedger {
    pub yes_count: u64,
    pub no_count: u64,
    pub log_bayes_factor: LogBayesFactor,
}

impl EvidenceLedger {
    pub fn trials(&self) -> u64 {
        self.yes_count + self.no_count
    }

    pub fn yes_fraction(&self) -> f64 {
        self.yes_count as f64 / self.trials() as f64
    }
}

/// Counts outcomes and sums `ln(P_rsi / P_collapse)` over trials.
///
/// A recorded probability below [`REJECTION_PROBABILITY`] marks that model as
/// rejected instead of producing an infinite log ratio.
pub fn accumulate_evidence(records: &[TrialRecord]) -> Result<EvidenceLedger> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut yes = 0;
    let mut no = 0;
    let mut log_bf = 0.0;
    let mut rsi_dead = false;
    let mut collapse_dead = false;
    for r in records {
        match r.outcome {
            Outcome::Yes => yes += 1,
            Outcome::No => no += 1,
        }
        let dead_r = r.outcome_probability_rsi < REJECTION_PROBABILITY;
        let dead_c = r.outcome_probability_collapse < REJECTION_PROBABILITY;
        rsi_dead |= dead_r;
        collapse_dead |= dead_c;
        if !dead_r && !dead_c {
            log_bf += r.outcome_probability_rsi.ln() - r.outcome_probability_collapse.ln();
        }
    }
    let log_bayes_factor = match (rsi_dead, collapse_dead) {
        (false, false) => LogBayesFactor::Finite(log_bf),
        (true, false) => LogBayesFactor::RsiRejected,
        (false, true) => LogBayesFactor::CollapseRejected,
        (true, true) => LogBayesFactor::BothRejected,
    };
    Ok(EvidenceLedger {
        yes_count: yes,
        no_count: no,
        log_bayes_factor,
    })
}
