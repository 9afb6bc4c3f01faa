//! Random candidate tests used by property checks and the CLI.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::linalg::{self, CVector};
use crate::statespace::{RegisterLayout, StateVector};
use crate::unitary::{complete_to_unitary, haar_random_with, PartialIsometrySpec, UnitaryOperator};

use super::{columns, project_onto, BeliefPartition};

#[derive(Debug, Clone)]
pub struct TestInstance {
    pub unitary: UnitaryOperator,
    pub branches: Vec<StateVector>,
    pub alpha: Vec<Complex64>,
    pub partition: BeliefPartition,
}

/// `count` orthonormal Gaussian vectors in `C^dim`.
pub fn random_orthonormal_set<R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = linalg::complex_gaussian_vector(dim, rng);
        linalg::orthogonalize_against(&mut v, &out);
        let n = v.norm();
        if n > 1e-6 {
            out.push(v.unscale(n));
        }
    }
    out
}

/// Uniformly random point on the unit sphere of `C^n`.
pub fn random_unit_alpha<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let v = linalg::complex_gaussian_vector(n, rng);
    let norm = v.norm();
    v.iter().map(|z| z / norm).collect()
}

fn to_states(layout: &RegisterLayout, vs: &[CVector]) -> Result<Vec<StateVector>> {
    vs.iter()
        .map(|v| StateVector::unnormalized(layout.clone(), v.clone()))
        .collect()
}

/// A Haar-random test together with branches and a grouped partition for
/// which each branch image lies in `span(No) ⊕ span(Yes_i)`.
///
/// The partition is a random split of a Haar-random basis; branch `i`'s
/// target image mixes a No vector (orthogonal across branches) with a vector
/// from its own Yes group, and the branch state is pulled back through
/// `U^dag`. Requires `dim >= 2`; uses `1..=dim/2` branches.
pub fn random_branch_discriminating_instance<R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
) -> Result<TestInstance> {
    let layout = RegisterLayout::flat("system", dim)?;
    let u = haar_random_with(dim, rng)?;
    let frame = columns(haar_random_with(dim, rng)?.matrix());
    let n = rng.random_range(1..=(dim / 2).max(1));

    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(rng);
    let mut groups: Vec<Vec<CVector>> = vec![Vec::new(); n];
    let mut no: Vec<CVector> = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        let v = frame[k].clone();
        if slot < n {
            groups[slot].push(v);
        } else if slot < 2 * n || rng.random_bool(0.5) {
            no.push(v);
        } else {
            let g = rng.random_range(0..n);
            groups[g].push(v);
        }
    }

    // Orthogonal No-parts inside span(no), one per branch.
    let coords = random_orthonormal_set(no.len(), n, rng);
    let mut images = Vec::with_capacity(n);
    for (i, c) in coords.iter().enumerate() {
        let mut n_part = CVector::zeros(dim);
        for (w, v) in c.iter().zip(&no) {
            n_part.axpy(*w, v, Complex64::new(1.0, 0.0));
        }
        let yc = random_unit_alpha(groups[i].len(), rng);
        let mut y_part = CVector::zeros(dim);
        for (w, v) in yc.iter().zip(&groups[i]) {
            y_part.axpy(*w, v, Complex64::new(1.0, 0.0));
        }
        let theta = rng.random_range(0.0..=std::f64::consts::FRAC_PI_2);
        let chi = rng.random_range(0.0..std::f64::consts::TAU);
        let img = n_part.scale(theta.cos()) + y_part * Complex64::from_polar(theta.sin(), chi);
        images.push(img);
    }
    let branches: Vec<CVector> = images.iter().map(|w| u.matrix().adjoint() * w).collect();

    let mut yes = Vec::new();
    let mut per_branch = Vec::with_capacity(n);
    for g in groups {
        let start = yes.len();
        yes.extend(g);
        per_branch.push((start..yes.len()).collect());
    }
    let partition = BeliefPartition::new(
        to_states(&layout, &no)?,
        to_states(&layout, &yes)?,
        Some(per_branch),
    )?;
    Ok(TestInstance {
        unitary: u,
        branches: to_states(&layout, &branches)?,
        alpha: random_unit_alpha(n, rng),
        partition,
    })
}

/// A test whose branch images are forced into the No subspace.
///
/// Starts from a Haar-random unitary, projects each branch image onto
/// `span(No)`, re-orthonormalizes the projections and completes the result
/// to a unitary. The partition is ungrouped (definitive-style).
pub fn random_confined_instance<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<TestInstance> {
    let layout = RegisterLayout::flat("system", dim)?;
    let seed_u = haar_random_with(dim, rng)?;
    let frame = columns(haar_random_with(dim, rng)?.matrix());
    let no_count = rng.random_range(1..dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(rng);
    let no: Vec<CVector> = order[..no_count]
        .iter()
        .map(|&k| frame[k].clone())
        .collect();
    let yes: Vec<CVector> = order[no_count..]
        .iter()
        .map(|&k| frame[k].clone())
        .collect();

    let n = rng.random_range(1..=no_count);
    let branches = random_orthonormal_set(dim, n, rng);
    let mut images: Vec<CVector> = Vec::with_capacity(n);
    for b in &branches {
        let mut w = project_onto(&(seed_u.matrix() * b), &no);
        linalg::orthogonalize_against(&mut w, &images);
        // keep the orthogonalized vector inside span(no)
        w = project_onto(&w, &no);
        let norm = w.norm();
        if norm < 1e-8 {
            // Degenerate projection: fall back to a fresh direction in span(no).
            let mut v = project_onto(&linalg::complex_gaussian_vector(dim, rng), &no);
            linalg::orthogonalize_against(&mut v, &images);
            let nv = v.norm();
            images.push(v.unscale(nv));
        } else {
            images.push(w.unscale(norm));
        }
    }
    let branch_states = to_states(&layout, &branches)?;
    let spec = PartialIsometrySpec::new(
        branch_states
            .iter()
            .cloned()
            .zip(to_states(&layout, &images)?)
            .collect(),
    )?;
    let unitary = complete_to_unitary(&spec, rng.random())?;
    Ok(TestInstance {
        unitary,
        branches: branch_states,
        alpha: random_unit_alpha(n, rng),
        partition: BeliefPartition::new(to_states(&layout, &no)?, to_states(&layout, &yes)?, None)?,
    })
}
