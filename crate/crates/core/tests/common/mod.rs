#![allow(dead_code)]

use rand::Rng;
use superposition_lab::linalg::{complex_gaussian_vector, CVector};
use superposition_lab::statespace::{RegisterLayout, StateVector};
use superposition_lab::theorems::{random_orthonormal_set, BeliefPartition};
use superposition_lab::unitary::haar_random_with;

pub fn flat(dim: usize) -> RegisterLayout {
    RegisterLayout::flat("system", dim).unwrap()
}

pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> StateVector {
    let v = complex_gaussian_vector(dim, rng);
    let n = v.norm();
    StateVector::new(flat(dim), v.unscale(n)).unwrap()
}

pub fn orthonormal_states<R: Rng>(dim: usize, count: usize, rng: &mut R) -> Vec<StateVector> {
    random_orthonormal_set(dim, count, rng)
        .into_iter()
        .map(|v| StateVector::new(flat(dim), v).unwrap())
        .collect()
}

/// Random No/Yes split of a Haar-random basis; either side may be empty,
/// but not both.
pub fn random_partition<R: Rng>(dim: usize, rng: &mut R) -> BeliefPartition {
    let frame = haar_random_with(dim, rng).unwrap();
    let cols: Vec<StateVector> = (0..dim)
        .map(|k| {
            let c: CVector = frame.matrix().column(k).into_owned();
            StateVector::new(flat(dim), c).unwrap()
        })
        .collect();
    let split = rng.random_range(0..=dim);
    BeliefPartition::new(cols[..split].to_vec(), cols[split..].to_vec(), None).unwrap()
}
