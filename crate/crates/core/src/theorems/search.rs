//! Random-restart search for tests that would violate the no-go results.
//!
//! Each restart draws a partition of the computational basis into No and Yes
//! states (grouped by branch for the branch-discriminating kind), takes the
//! first `n` basis states as branches and maximizes a penalized violation
//! score over the generator parameters of `T` and over the branch weights.
//! The final candidate is then repaired onto the exactly feasible set and
//! scored again through [`decompose`](super::decompose); only repaired scores
//! count as feasible.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::trial_rng;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::statespace::{RegisterLayout, StateVector};
use crate::tolerance::{TOL_NORM, VIOLATION_TOLERANCE};
use crate::unitary::{complete_to_unitary, generator_len, PartialIsometrySpec};

use super::{check_linearity_relation, decompose, definitive_violation, BeliefPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchKind {
    Definitive,
    PartiallyDefinitive,
    BranchDiscriminating,
}

impl SearchKind {
    pub const ALL: [SearchKind; 3] = [
        SearchKind::Definitive,
        SearchKind::PartiallyDefinitive,
        SearchKind::BranchDiscriminating,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SearchKind::Definitive => "definitive",
            SearchKind::PartiallyDefinitive => "partially-definitive",
            SearchKind::BranchDiscriminating => "branch-discriminating",
        }
    }
}

impl fmt::Display for SearchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SearchKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown search kind `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Ascent iterations per restart.
    pub iterations: usize,
    /// Weight on constraint residuals in the penalized objective.
    pub penalty_weight: f64,
    /// Initial ascent step; halves on every rejected step.
    pub initial_step: f64,
    /// Finite-difference increment.
    pub fd_step: f64,
    /// Fixes the branch count instead of drawing it per restart.
    pub branches: Option<usize>,
    /// Fixes the branch weights instead of searching over them.
    pub alpha: Option<Vec<Complex64>>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            iterations: 40,
            penalty_weight: 1e3,
            initial_step: 0.5,
            fd_step: 1e-6,
            branches: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartResult {
    pub restart: usize,
    pub branches: usize,
    pub no_count: usize,
    pub yes_count: usize,
    pub iterations: usize,
    /// Penalized objective at the end of the ascent.
    pub objective: f64,
    /// Constraint residual at the end of the ascent.
    pub penalty: f64,
    /// Unrepaired violation measure at the end of the ascent.
    pub raw_violation: f64,
    /// Violation measure of the repaired, exactly feasible candidate. `None`
    /// when the repair has no solution for this partition.
    pub feasible_score: Option<f64>,
    /// Repaired candidate meets the full definition of a test of this kind.
    pub satisfies_definition: bool,
    /// Generator parameters followed by branch-weight parameters.
    pub params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub kind: SearchKind,
    pub dim: usize,
    pub seed: u64,
    pub restarts: Vec<RestartResult>,
    pub elapsed: Duration,
}

impl SearchReport {
    fn best_feasible(&self) -> Option<&RestartResult> {
        self.restarts
            .iter()
            .filter(|r| r.feasible_score.is_some())
            .max_by(|a, b| {
                a.feasible_score
                    .partial_cmp(&b.feasible_score)
                    .expect("finite")
            })
    }

    pub fn best_feasible_score(&self) -> Option<f64> {
        self.best_feasible().and_then(|r| r.feasible_score)
    }

    pub fn best_feasible_params(&self) -> Option<&[f64]> {
        self.best_feasible().map(|r| r.params.as_slice())
    }

    pub fn best_objective(&self) -> f64 {
        self.restarts
            .iter()
            .map(|r| r.objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_objective(&self) -> f64 {
        self.restarts.iter().map(|r| r.objective).sum::<f64>() / self.restarts.len() as f64
    }

    pub fn best_raw_violation(&self) -> f64 {
        self.restarts
            .iter()
            .map(|r| r.raw_violation)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn feasible_count(&self) -> usize {
        self.restarts
            .iter()
            .filter(|r| r.feasible_score.is_some())
            .count()
    }

    pub fn definition_satisfied_count(&self) -> usize {
        self.restarts
            .iter()
            .filter(|r| r.satisfies_definition)
            .count()
    }

    /// No repaired candidate scores above [`VIOLATION_TOLERANCE`] and none
    /// meets the definition.
    pub fn passed(&self) -> bool {
        self.best_feasible_score()
            .is_none_or(|s| s <= VIOLATION_TOLERANCE)
            && self.definition_satisfied_count() == 0
    }
}

/// A basis-aligned problem instance for one restart.
struct Problem {
    kind: SearchKind,
    dim: usize,
    n: usize,
    no: Vec<usize>,
    /// One group for the (partially-)definitive kinds, one per branch otherwise.
    yes_groups: Vec<Vec<usize>>,
    fixed_alpha: Option<Vec<Complex64>>,
    penalty_weight: f64,
}

struct Eval {
    objective: f64,
    violation: f64,
    penalty: f64,
}

impl Problem {
    fn draw<R: Rng + ?Sized>(
        kind: SearchKind,
        dim: usize,
        opts: &SearchOptions,
        rng: &mut R,
    ) -> Result<Self> {
        // (Partially-)definitive: n No states plus a Yes state.
        // Branch-discriminating: one Yes state per branch plus a No state.
        let max_n = (dim - 1).max(1);
        let n = match (&opts.alpha, opts.branches) {
            (Some(a), _) => a.len(),
            (None, Some(n)) => n,
            (None, None) if dim <= 2 => 1,
            (None, None) => rng.random_range(2..=(dim / 2).clamp(2, max_n)),
        };
        if n == 0 || n > max_n {
            return Err(Error::InvalidParameter(format!(
                "{n} branches do not fit a {kind} search in dimension {dim}"
            )));
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.shuffle(rng);
        let (no, yes_groups) = match kind {
            SearchKind::Definitive | SearchKind::PartiallyDefinitive => {
                let no_count = rng.random_range(n..=dim - 1);
                let mut no = order[..no_count].to_vec();
                let mut yes = order[no_count..].to_vec();
                no.sort_unstable();
                yes.sort_unstable();
                (no, vec![yes])
            }
            SearchKind::BranchDiscriminating => {
                let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![order[i]]).collect();
                let mut no = vec![order[n]];
                for &k in &order[n + 1..] {
                    if rng.random_bool(0.5) {
                        no.push(k);
                    } else {
                        let g = rng.random_range(0..n);
                        groups[g].push(k);
                    }
                }
                no.sort_unstable();
                groups.iter_mut().for_each(|g| g.sort_unstable());
                (no, groups)
            }
        };
        Ok(Self {
            kind,
            dim,
            n,
            no,
            yes_groups,
            fixed_alpha: opts.alpha.clone(),
            penalty_weight: opts.penalty_weight,
        })
    }

    fn param_len(&self) -> usize {
        generator_len(self.dim)
            + if self.fixed_alpha.is_some() {
                0
            } else {
                2 * self.n
            }
    }

    fn alpha(&self, x: &[f64]) -> Vec<Complex64> {
        if let Some(a) = &self.fixed_alpha {
            return a.clone();
        }
        let g = generator_len(self.dim);
        let mags = &x[g..g + self.n];
        let phases = &x[g + self.n..];
        let total: f64 = mags.iter().map(|m| m * m).sum();
        mags.iter()
            .zip(phases)
            .map(|(m, ph)| {
                let w = if total > 0.0 {
                    m * m / total
                } else {
                    1.0 / self.n as f64
                };
                Complex64::from_polar(w.sqrt(), *ph)
            })
            .collect()
    }

    fn unitary(&self, x: &[f64]) -> CMatrix {
        let g = generator_len(self.dim);
        crate::unitary::generator_matrix(self.dim, &x[..g])
            .map(|a| crate::unitary::expm(&a))
            .expect("parameter slice has generator length")
    }

    /// Index sets each branch image may occupy.
    fn allowed(&self, i: usize) -> Vec<usize> {
        match self.kind {
            SearchKind::Definitive | SearchKind::PartiallyDefinitive => self.no.clone(),
            SearchKind::BranchDiscriminating => {
                let mut a = self.no.clone();
                a.extend(&self.yes_groups[i]);
                a
            }
        }
    }

    fn violation(&self, images: &[CVector], alpha: &[Complex64]) -> f64 {
        let mut sup = CVector::zeros(self.dim);
        for (a, w) in alpha.iter().zip(images) {
            sup.axpy(*a, w, Complex64::new(1.0, 0.0));
        }
        match self.kind {
            SearchKind::Definitive | SearchKind::PartiallyDefinitive => {
                self.yes_groups[0].iter().map(|&k| sup[k].norm_sqr()).sum()
            }
            SearchKind::BranchDiscriminating => self
                .yes_groups
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    g.iter()
                        .map(|&k| sup[k].norm_sqr() - images[i][k].norm_sqr())
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Eval {
        let u = self.unitary(x);
        let alpha = self.alpha(x);
        let images: Vec<CVector> = (0..self.n).map(|i| u.column(i).into_owned()).collect();
        let penalty: f64 = images
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let allowed = self.allowed(i);
                (0..self.dim)
                    .filter(|k| !allowed.contains(k))
                    .map(|k| w[k].norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        let violation = self.violation(&images, &alpha);
        Eval {
            objective: violation - self.penalty_weight * penalty,
            violation,
            penalty,
        }
    }

    /// Projects branch images onto their allowed subspaces, orthogonalizes
    /// the No-parts and renormalizes. The Yes groups of different branches
    /// are orthogonal, so orthogonal No-parts make the images orthonormal.
    fn repair(&self, x: &[f64]) -> Option<Vec<CVector>> {
        let u = self.unitary(x);
        let mut no_parts: Vec<CVector> = Vec::with_capacity(self.n);
        let mut images = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let col = u.column(i);
            let mut n_part = CVector::zeros(self.dim);
            for &k in &self.no {
                n_part[k] = col[k];
            }
            let mut y_part = CVector::zeros(self.dim);
            if self.kind == SearchKind::BranchDiscriminating {
                for &k in &self.yes_groups[i] {
                    y_part[k] = col[k];
                }
            }
            // Orthogonalize against earlier No-parts without leaving span(No).
            for _ in 0..2 {
                for p in &no_parts {
                    let denom = p.norm_squared();
                    if denom > 0.0 {
                        let c = p.dotc(&n_part) / denom;
                        n_part.axpy(-c, p, Complex64::new(1.0, 0.0));
                    }
                }
            }
            let w = &n_part + &y_part;
            let norm = w.norm();
            if norm < 1e-8 {
                return None;
            }
            no_parts.push(n_part);
            images.push(w.unscale(norm));
        }
        Some(images)
    }

    fn partition(&self, layout: &RegisterLayout) -> Result<BeliefPartition> {
        let yes: Vec<usize> = self.yes_groups.iter().flatten().copied().collect();
        let groups = match self.kind {
            SearchKind::BranchDiscriminating => {
                let mut start = 0;
                Some(
                    self.yes_groups
                        .iter()
                        .map(|g| {
                            let r: Vec<usize> = (start..start + g.len()).collect();
                            start += g.len();
                            r
                        })
                        .collect(),
                )
            }
            _ => None,
        };
        BeliefPartition::from_basis(layout, &self.no, &yes, groups)
    }

    /// Exact score of the repaired candidate via the public decomposition.
    fn feasible_score(&self, x: &[f64], seed: u64) -> Result<Option<(f64, bool)>> {
        let Some(images) = self.repair(x) else {
            return Ok(None);
        };
        let layout = RegisterLayout::flat("system", self.dim)?;
        let branches: Vec<StateVector> = (0..self.n)
            .map(|i| StateVector::basis(layout.clone(), i))
            .collect::<Result<_>>()?;
        let outputs: Vec<StateVector> = images
            .into_iter()
            .map(|w| StateVector::unnormalized(layout.clone(), w))
            .collect::<Result<_>>()?;
        let spec = PartialIsometrySpec::new(branches.iter().cloned().zip(outputs).collect())?;
        let u = complete_to_unitary(&spec, seed)?;
        let alpha = self.alpha(x);
        let partition = self.partition(&layout)?;
        Ok(Some(match self.kind {
            SearchKind::Definitive => {
                let s = definitive_violation(&u, &branches, &alpha, &partition)?;
                (s.superposition_yes_mass, s.satisfies_definitive())
            }
            SearchKind::PartiallyDefinitive => {
                let s = definitive_violation(&u, &branches, &alpha, &partition)?;
                (s.superposition_yes_mass, s.satisfies_partially_definitive())
            }
            SearchKind::BranchDiscriminating => {
                let d = decompose(&u, &branches, &alpha, &partition)?;
                let rep = check_linearity_relation(&d);
                let excess = rep.max_excess().unwrap_or(f64::NEG_INFINITY);
                (excess, rep.hypothesis_holds && excess > VIOLATION_TOLERANCE)
            }
        }))
    }
}

/// Forward-difference gradient ascent. Steps move along the normalized
/// gradient; a step that fails to improve halves the step size, an accepted
/// one grows it by 1.5x.
fn ascend(problem: &Problem, mut x: Vec<f64>, opts: &SearchOptions) -> (Vec<f64>, Eval, usize) {
    let mut current = problem.evaluate(&x);
    let mut step = opts.initial_step;
    let mut iters = 0;
    let mut grad = vec![0.0; x.len()];
    while iters < opts.iterations && step > 1e-12 {
        iters += 1;
        for k in 0..x.len() {
            let orig = x[k];
            x[k] = orig + opts.fd_step;
            grad[k] = (problem.evaluate(&x).objective - current.objective) / opts.fd_step;
            x[k] = orig;
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        loop {
            let trial: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(xi, gi)| xi + step * gi / gnorm)
                .collect();
            let e = problem.evaluate(&trial);
            if e.objective > current.objective {
                x = trial;
                current = e;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step <= 1e-12 {
                break;
            }
        }
    }
    (x, current, iters)
}

fn run_restart(
    kind: SearchKind,
    dim: usize,
    seed: u64,
    restart: usize,
    opts: &SearchOptions,
) -> Result<RestartResult> {
    let mut rng = trial_rng(seed, restart as u64);
    let problem = Problem::draw(kind, dim, opts, &mut rng)?;
    let x0: Vec<f64> = (0..problem.param_len())
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let (x, eval, iterations) = ascend(&problem, x0, opts);
    let scored = problem.feasible_score(&x, rng.random())?;
    Ok(RestartResult {
        restart,
        branches: problem.n,
        no_count: problem.no.len(),
        yes_count: problem.yes_groups.iter().map(Vec::len).sum(),
        iterations,
        objective: eval.objective,
        penalty: eval.penalty,
        raw_violation: eval.violation,
        feasible_score: scored.map(|s| s.0),
        satisfies_definition: scored.is_some_and(|s| s.1),
        params: x,
    })
}

/// Searches for a test of the given kind; the no-go results predict every
/// feasible score stays at or below zero.
///
/// Restarts are independent given `(seed, restart)` and run in parallel.
pub fn violation_search(
    kind: SearchKind,
    dim: usize,
    restarts: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Result<SearchReport> {
    if dim < 2 {
        return Err(Error::InvalidParameter(
            "search dimension must be >= 2".into(),
        ));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    if let Some(a) = &opts.alpha {
        let norm_sqr: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > TOL_NORM {
            return Err(Error::NotNormalized { norm_sqr });
        }
    }
    let start = Instant::now();
    let results: Vec<RestartResult> = (0..restarts)
        .into_par_iter()
        .map(|r| run_restart(kind, dim, seed, r, opts))
        .collect::<Result<_>>()?;
    Ok(SearchReport {
        kind,
        dim,
        seed,
        restarts: results,
        elapsed: start.elapsed(),
    })
}
