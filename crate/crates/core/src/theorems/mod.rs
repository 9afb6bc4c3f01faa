//! Executable checks of the no-go results for superposition tests.
//!
//! A candidate test is a unitary `T` together with orthonormal branch states
//! `|i>`, branch weights `alpha_i` and a [`BeliefPartition`] of the output
//! space into "No" and "Yes" belief states. [`decompose`] extracts the
//! coefficient tables
//!
//! ```text
//! beta_ik  = <N_k | T | i>          gamma_ij = <Y_j | T | i>
//! zeta_k   = <N_k | T sum_i alpha_i |i>>
//! eta_j    = <Y_j | T sum_i alpha_i |i>>
//! ```
//!
//! and the checks below confirm what linearity forces on them:
//! `eta_j = sum_i alpha_i gamma_ij` always, and when every branch image stays
//! inside `span(No) ⊕ span(Yes of that branch)` this collapses to
//! `eta_ij = alpha_i gamma_ij`, so no branch can see more Yes-weight in
//! superposition than alone.

mod instances;
mod search;

pub use instances::{
    random_branch_discriminating_instance, random_confined_instance, random_orthonormal_set,
    random_unit_alpha, TestInstance,
};
pub use search::{violation_search, RestartResult, SearchKind, SearchOptions, SearchReport};

use num_complex::Complex64;

use crate::dynamics::born_distribution_mixed;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::statespace::{
    branch_mixture, inner_product, phase_average, pure_density, DensityMatrix, PhaseAverageMode,
    RegisterLayout, StateVector,
};
use crate::tolerance::{TOL_EXACT, TOL_NORM};
use crate::unitary::{apply, UnitaryOperator};

/// Orthogonal split of an output space into No and Yes belief states.
#[derive(Debug, Clone)]
pub struct BeliefPartition {
    no_subspace: Vec<StateVector>,
    yes_subspace: Vec<StateVector>,
    per_branch_yes: Option<Vec<Vec<usize>>>,
}

impl BeliefPartition {
    /// `per_branch_yes[i]` lists indices into `yes_subspace` owned by branch `i`.
    pub fn new(
        no_subspace: Vec<StateVector>,
        yes_subspace: Vec<StateVector>,
        per_branch_yes: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let dim = no_subspace
            .first()
            .or(yes_subspace.first())
            .ok_or_else(|| Error::InvalidPartition("partition is empty".into()))?
            .dim();
        let all: Vec<&StateVector> = no_subspace.iter().chain(&yes_subspace).collect();
        for (a, v) in all.iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            for (b, w) in all.iter().enumerate().skip(a) {
                let ip = inner_product(v, w)?;
                let want = if a == b { 1.0 } else { 0.0 };
                if (ip - Complex64::new(want, 0.0)).norm() > TOL_NORM {
                    return Err(Error::InvalidPartition(format!(
                        "partition vectors {a} and {b} are not orthonormal (overlap {})",
                        ip.norm()
                    )));
                }
            }
        }
        if let Some(groups) = &per_branch_yes {
            let mut owner = vec![None; yes_subspace.len()];
            for (i, g) in groups.iter().enumerate() {
                for &j in g {
                    let slot = owner.get_mut(j).ok_or_else(|| {
                        Error::InvalidPartition(format!("yes index {j} out of range"))
                    })?;
                    if let Some(prev) = *slot {
                        return Err(Error::InvalidPartition(format!(
                            "yes vector {j} claimed by branches {prev} and {i}"
                        )));
                    }
                    *slot = Some(i);
                }
            }
        }
        Ok(Self {
            no_subspace,
            yes_subspace,
            per_branch_yes,
        })
    }

    /// Partition made of computational basis states of `layout`.
    pub fn from_basis(
        layout: &RegisterLayout,
        no: &[usize],
        yes: &[usize],
        per_branch_yes: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let mk = |idx: &[usize]| -> Result<Vec<StateVector>> {
            idx.iter()
                .map(|&k| StateVector::basis(layout.clone(), k))
                .collect()
        };
        Self::new(mk(no)?, mk(yes)?, per_branch_yes)
    }

    pub fn dim(&self) -> usize {
        self.no_subspace
            .first()
            .or(self.yes_subspace.first())
            .map(StateVector::dim)
            .unwrap_or(0)
    }

    pub fn no_subspace(&self) -> &[StateVector] {
        &self.no_subspace
    }

    pub fn yes_subspace(&self) -> &[StateVector] {
        &self.yes_subspace
    }

    pub fn per_branch_yes(&self) -> Option<&[Vec<usize>]> {
        self.per_branch_yes.as_deref()
    }
}

/// Coefficient tables of a candidate test against a partition.
///
/// `beta[i][k]` and `gamma[i][j]` are indexed by branch and by position in
/// the No / Yes lists; `zeta[k]` and `eta[j]` belong to the superposition.
#[derive(Debug, Clone)]
pub struct TestDecomposition {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Vec<Complex64>>,
    pub gamma: Vec<Vec<Complex64>>,
    pub zeta: Vec<Complex64>,
    pub eta: Vec<Complex64>,
    pub per_branch_yes: Option<Vec<Vec<usize>>>,
    /// `||T|i>||^2` not captured by the partition, per branch.
    pub branch_residual: Vec<f64>,
    /// Same for the superposition image.
    pub superposition_residual: f64,
}

impl TestDecomposition {
    pub fn branches(&self) -> usize {
        self.alpha.len()
    }

    /// `sum_j |gamma_ij|^2` over all Yes vectors.
    pub fn branch_yes_mass(&self, i: usize) -> f64 {
        self.gamma[i].iter().map(|g| g.norm_sqr()).sum()
    }

    /// `sum_k |beta_ik|^2`.
    pub fn branch_no_mass(&self, i: usize) -> f64 {
        self.beta[i].iter().map(|b| b.norm_sqr()).sum()
    }

    /// `sum_j |eta_j|^2`.
    pub fn superposition_yes_mass(&self) -> f64 {
        self.eta.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn superposition_no_mass(&self) -> f64 {
        self.zeta.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_orthonormal_branches(branches: &[StateVector]) -> Result<()> {
    for (a, v) in branches.iter().enumerate() {
        for (b, w) in branches.iter().enumerate().skip(a) {
            let ip = inner_product(v, w)?;
            let want = if a == b { 1.0 } else { 0.0 };
            if (ip - Complex64::new(want, 0.0)).norm() > TOL_NORM {
                return Err(Error::NotOrthonormal {
                    side: "branch",
                    first: a,
                    second: b,
                    overlap: ip.norm(),
                });
            }
        }
    }
    Ok(())
}

fn superposition(branches: &[StateVector], alpha: &[Complex64]) -> Result<StateVector> {
    if branches.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: branches.len(),
            found: alpha.len(),
        });
    }
    let norm_sqr: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > TOL_NORM {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let terms: Vec<(Complex64, &StateVector)> = alpha.iter().copied().zip(branches).collect();
    StateVector::superpose(&terms)
}

fn coefficients(v: &StateVector, basis: &[StateVector]) -> Result<Vec<Complex64>> {
    basis.iter().map(|b| inner_product(b, v)).collect()
}

fn residual(v: &StateVector, no: &[Complex64], yes: &[Complex64]) -> f64 {
    let captured: f64 = no.iter().chain(yes).map(|c| c.norm_sqr()).sum();
    (v.norm_sqr() - captured).max(0.0)
}

/// Inner products of the branch and superposition images with the partition.
pub fn decompose(
    u: &UnitaryOperator,
    branches: &[StateVector],
    alpha: &[Complex64],
    partition: &BeliefPartition,
) -> Result<TestDecomposition> {
    let n = branches.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no branches".into()));
    }
    for b in branches {
        if b.dim() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                found: b.dim(),
            });
        }
    }
    if partition.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: partition.dim(),
        });
    }
    if let Some(groups) = partition.per_branch_yes() {
        if groups.len() != n {
            return Err(Error::InvalidPartition(format!(
                "{} yes groups for {n} branches",
                groups.len()
            )));
        }
    }
    check_orthonormal_branches(branches)?;
    let psi = superposition(branches, alpha)?;

    let mut beta = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut branch_residual = Vec::with_capacity(n);
    for b in branches {
        let img = apply(u, b)?;
        let bi = coefficients(&img, partition.no_subspace())?;
        let gi = coefficients(&img, partition.yes_subspace())?;
        branch_residual.push(residual(&img, &bi, &gi));
        beta.push(bi);
        gamma.push(gi);
    }
    let img = apply(u, &psi)?;
    let zeta = coefficients(&img, partition.no_subspace())?;
    let eta = coefficients(&img, partition.yes_subspace())?;
    let superposition_residual = residual(&img, &zeta, &eta);

    Ok(TestDecomposition {
        alpha: alpha.to_vec(),
        beta,
        gamma,
        zeta,
        eta,
        per_branch_yes: partition.per_branch_yes().map(|g| g.to_vec()),
        branch_residual,
        superposition_residual,
    })
}

/// Per-branch view of the linearity relation.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRelation {
    /// `max_j |eta_ij - alpha_i gamma_ij|` over the branch's own Yes vectors.
    pub relation_error: f64,
    /// `sum_j |gamma_ij|^2` over the branch's own Yes vectors.
    pub branch_yes_mass: f64,
    /// `sum_j |eta_ij|^2` over the branch's own Yes vectors.
    pub superposition_yes_mass: f64,
    /// Weight of `T|i>` on other branches' Yes vectors or outside the partition.
    pub leakage: f64,
}

impl BranchRelation {
    /// `sum_j |eta_ij|^2 - sum_j |gamma_ij|^2`; positive means the branch sees
    /// more Yes-weight in superposition than alone.
    pub fn excess(&self) -> f64 {
        self.superposition_yes_mass - self.branch_yes_mass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    /// `max_j |eta_j - sum_i alpha_i gamma_ij|`.
    pub linearity_error: f64,
    /// Present when the partition groups Yes vectors by branch.
    pub branches: Option<Vec<BranchRelation>>,
    /// Every branch image lies in `span(No) ⊕ span(own Yes)`.
    pub hypothesis_holds: bool,
}

impl LinearityReport {
    pub fn max_relation_error(&self) -> f64 {
        self.branches
            .iter()
            .flatten()
            .map(|b| b.relation_error)
            .fold(0.0, f64::max)
    }

    /// Largest `sum|eta_ij|^2 - sum|gamma_ij|^2` over branches.
    pub fn max_excess(&self) -> Option<f64> {
        self.branches.as_ref().map(|bs| {
            bs.iter()
                .map(BranchRelation::excess)
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }

    pub fn passed(&self) -> bool {
        if self.linearity_error >= TOL_NORM {
            return false;
        }
        if !self.hypothesis_holds {
            return true;
        }
        self.branches
            .iter()
            .flatten()
            .all(|b| b.relation_error < TOL_NORM && b.excess() <= TOL_EXACT)
    }
}

/// Checks `eta_j = sum_i alpha_i gamma_ij` and, when the Yes vectors are
/// grouped by branch, `eta_ij = alpha_i gamma_ij` with the resulting bound
/// `sum_j |eta_ij|^2 = |alpha_i|^2 sum_j |gamma_ij|^2 <= sum_j |gamma_ij|^2`.
pub fn check_linearity_relation(d: &TestDecomposition) -> LinearityReport {
    let linearity_error = d
        .eta
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let lin: Complex64 = d.alpha.iter().zip(&d.gamma).map(|(a, g)| a * g[j]).sum();
            (e - lin).norm()
        })
        .fold(0.0, f64::max);

    let Some(groups) = &d.per_branch_yes else {
        return LinearityReport {
            linearity_error,
            branches: None,
            hypothesis_holds: false,
        };
    };

    let branches: Vec<BranchRelation> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let relation_error = g
                .iter()
                .map(|&j| (d.eta[j] - d.alpha[i] * d.gamma[i][j]).norm())
                .fold(0.0, f64::max);
            let branch_yes_mass = g.iter().map(|&j| d.gamma[i][j].norm_sqr()).sum();
            let superposition_yes_mass = g.iter().map(|&j| d.eta[j].norm_sqr()).sum();
            let off_group: f64 = (0..d.gamma[i].len())
                .filter(|j| !g.contains(j))
                .map(|j| d.gamma[i][j].norm_sqr())
                .sum();
            BranchRelation {
                relation_error,
                branch_yes_mass,
                superposition_yes_mass,
                leakage: off_group + d.branch_residual[i],
            }
        })
        .collect();
    let hypothesis_holds = branches.iter().all(|b| b.leakage <= TOL_NORM);
    LinearityReport {
        linearity_error,
        branches: Some(branches),
        hypothesis_holds,
    }
}

/// Score of a candidate definitive (or partially-definitive) test.
#[derive(Debug, Clone, PartialEq)]
pub struct DefinitiveScore {
    /// `||P_yes T sum_i alpha_i |i>||^2`.
    pub superposition_yes_mass: f64,
    /// `||P_yes T |i>||^2` per branch.
    pub branch_yes_mass: Vec<f64>,
    /// `||(1 - P_no) T |i>||^2` per branch; zero when the branch reads No.
    pub branch_outside_no: Vec<f64>,
}

impl DefinitiveScore {
    /// `superposition_yes_mass - sum_i branch_yes_mass`. By Cauchy-Schwarz
    /// this is never positive, whatever the unitary.
    pub fn signed_score(&self) -> f64 {
        self.superposition_yes_mass - self.branch_yes_mass.iter().sum::<f64>()
    }

    /// Total constraint residual for "every branch reads No".
    pub fn penalty(&self) -> f64 {
        self.branch_outside_no.iter().sum()
    }

    pub fn feasible(&self) -> bool {
        self.penalty() <= TOL_NORM
    }

    /// Definitive tests additionally need the superposition to read Yes with
    /// certainty.
    pub fn satisfies_definitive(&self) -> bool {
        self.feasible() && self.superposition_yes_mass >= 1.0 - TOL_NORM
    }

    /// Partially-definitive tests need a nonzero Yes component.
    pub fn satisfies_partially_definitive(&self) -> bool {
        self.feasible() && self.superposition_yes_mass > crate::tolerance::VIOLATION_TOLERANCE
    }
}

pub fn definitive_violation(
    u: &UnitaryOperator,
    branches: &[StateVector],
    alpha: &[Complex64],
    partition: &BeliefPartition,
) -> Result<DefinitiveScore> {
    let d = decompose(u, branches, alpha, partition)?;
    let n = d.branches();
    Ok(DefinitiveScore {
        superposition_yes_mass: d.superposition_yes_mass(),
        branch_yes_mass: (0..n).map(|i| d.branch_yes_mass(i)).collect(),
        branch_outside_no: (0..n)
            .map(|i| d.branch_yes_mass(i) + d.branch_residual[i])
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairOverlap {
    /// `|<a|b>|`, also the smallest overlap any unitary can reach.
    pub original: f64,
    pub min_image: f64,
    pub max_image: f64,
    pub max_deviation: f64,
}

impl PairOverlap {
    /// Whether some unitary could send the pair to orthogonal belief states.
    pub fn can_be_distinguished(&self) -> bool {
        self.original < TOL_NORM
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub pairs: Vec<PairOverlap>,
}

impl Lemma1Report {
    pub fn max_deviation(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.max_deviation)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() < TOL_NORM
    }
}

/// Compares `|<Ua|Ub>|` with `|<a|b>|` for every pair and unitary.
pub fn check_lemma1(
    pairs: &[(StateVector, StateVector)],
    unitaries: &[UnitaryOperator],
) -> Result<Lemma1Report> {
    let mut out = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let original = inner_product(a, b)?.norm();
        let mut min_image = f64::INFINITY;
        let mut max_image: f64 = 0.0;
        let mut max_deviation: f64 = 0.0;
        for u in unitaries {
            let ov = inner_product(&apply(u, a)?, &apply(u, b)?)?.norm();
            min_image = min_image.min(ov);
            max_image = max_image.max(ov);
            max_deviation = max_deviation.max((ov - original).abs());
        }
        if unitaries.is_empty() {
            min_image = original;
            max_image = original;
        }
        out.push(PairOverlap {
            original,
            min_image,
            max_image,
            max_deviation,
        });
    }
    Ok(Lemma1Report { pairs: out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureReport {
    /// Register distribution from the phase-averaged superposition.
    pub phase_averaged: Vec<f64>,
    /// Register distribution from the classical branch mixture.
    pub mixture: Vec<f64>,
    /// Distribution from the superposition with all phases zero.
    pub coherent: Vec<f64>,
    /// `max |phase_averaged - mixture|`.
    pub discrepancy: f64,
    /// `max |coherent - mixture|`; nonzero when the protocol is phase sensitive.
    pub coherent_discrepancy: f64,
}

impl MixtureReport {
    pub fn passed(&self) -> bool {
        self.discrepancy < TOL_NORM
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs a unitary-then-measure protocol on (a) the superposition
/// `sum_j alpha_j |b_j>` averaged over `K` roots-of-unity phases and (b) the
/// stochastic mixture `sum_j |alpha_j|^2 |b_j><b_j|`, and compares the
/// distributions of `register`.
pub fn mixture_indistinguishability(
    branches: &[StateVector],
    alpha: &[Complex64],
    protocol: &[UnitaryOperator],
    register: &str,
    k: usize,
) -> Result<MixtureReport> {
    let first = branches
        .first()
        .ok_or_else(|| Error::InvalidParameter("no branches".into()))?;
    let layout = first.layout().clone();
    check_orthonormal_branches(branches)?;

    let averaged = phase_average(alpha, k, PhaseAverageMode::Factored)?.embed(branches)?;
    let mix_terms: Vec<(f64, DensityMatrix)> = alpha
        .iter()
        .zip(branches)
        .map(|(a, b)| Ok((a.norm_sqr(), pure_density(b)?)))
        .collect::<Result<_>>()?;
    let refs: Vec<(f64, &DensityMatrix)> = mix_terms.iter().map(|(w, r)| (*w, r)).collect();
    let mixture = DensityMatrix::mixture(&refs)?;
    let coherent = pure_density(&superposition(branches, alpha)?)?;

    let evolve = |mut rho: DensityMatrix| -> Result<DensityMatrix> {
        for u in protocol {
            rho = rho.conjugate_by(u.matrix())?;
        }
        Ok(rho)
    };
    let pa = born_distribution_mixed(&evolve(averaged)?, &layout, register)?;
    let pm = born_distribution_mixed(&evolve(mixture)?, &layout, register)?;
    let pc = born_distribution_mixed(&evolve(coherent)?, &layout, register)?;
    Ok(MixtureReport {
        discrepancy: max_diff(&pa, &pm),
        coherent_discrepancy: max_diff(&pc, &pm),
        phase_averaged: pa,
        mixture: pm,
        coherent: pc,
    })
}

/// Coefficient-space check: `phase_average(alpha, K)` against the diagonal
/// mixture, in both evaluation modes. Returns `(factored_vs_mixture,
/// brute_vs_factored)` max entry discrepancies.
pub fn phase_average_discrepancy(alpha: &[Complex64], k: usize) -> Result<(f64, f64)> {
    let mix = branch_mixture(alpha)?;
    let f = phase_average(alpha, k, PhaseAverageMode::Factored)?;
    let b = phase_average(alpha, k, PhaseAverageMode::BruteForce)?;
    Ok((
        crate::linalg::max_abs_diff(f.entries(), mix.entries()),
        crate::linalg::max_abs_diff(b.entries(), f.entries()),
    ))
}

/// Projects `v` onto the span of orthonormal `basis`.
pub(crate) fn project_onto(v: &CVector, basis: &[CVector]) -> CVector {
    let mut out = CVector::zeros(v.len());
    for b in basis {
        out.axpy(b.dotc(v), b, Complex64::new(1.0, 0.0));
    }
    out
}

pub(crate) fn columns(m: &CMatrix) -> Vec<CVector> {
    (0..m.ncols()).map(|c| m.column(c).into_owned()).collect()
}
