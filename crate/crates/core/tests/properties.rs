mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use superposition_lab::dynamics::{born_distribution, born_distribution_mixed, project, trial_rng};
use superposition_lab::linalg::complex_gaussian_vector;
use superposition_lab::statespace::{
    branch_mixture, inner_product, phase_average, pure_density, tensor_product, PhaseAverageMode,
    RegisterLayout, StateVector,
};
use superposition_lab::theorems::{
    check_linearity_relation, decompose, random_branch_discriminating_instance, random_unit_alpha,
};
use superposition_lab::unitary::{
    approximate_by_generators, complete_to_unitary, from_generator, generator_len,
    generator_matrix, generator_params, haar_random, haar_random_with, PartialIsometrySpec,
};

use common::{orthonormal_states, random_partition, random_state};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn unitaries_preserve_inner_products(dim in 2usize..=16, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let u = haar_random_with(dim, &mut rng).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10);
        let a = random_state(dim, &mut rng);
        let b = random_state(dim, &mut rng);
        let before = inner_product(&a, &b).unwrap();
        let after = inner_product(
            &superposition_lab::unitary::apply(&u, &a).unwrap(),
            &superposition_lab::unitary::apply(&u, &b).unwrap(),
        )
        .unwrap();
        prop_assert!((before - after).norm() < 1e-10);
    }

    #[test]
    fn tensor_norm_is_multiplicative(da in 1usize..=6, db in 1usize..=6, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let a = StateVector::unnormalized(
            RegisterLayout::flat("a", da).unwrap(),
            complex_gaussian_vector(da, &mut rng),
        )
        .unwrap();
        let b = StateVector::unnormalized(
            RegisterLayout::flat("b", db).unwrap(),
            complex_gaussian_vector(db, &mut rng),
        )
        .unwrap();
        let t = tensor_product(&a, &b).unwrap();
        prop_assert_eq!(t.dim(), da * db);
        prop_assert!((t.norm() - a.norm() * b.norm()).abs() < 1e-10 * (1.0 + t.norm()));
    }

    #[test]
    fn completion_is_unitary_and_respects_pairs(
        dim in 2usize..=16,
        frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let count = 1 + ((dim - 1) as f64 * frac) as usize;
        let mut rng = trial_rng(seed, 0);
        let inputs = orthonormal_states(dim, count, &mut rng);
        let outputs = orthonormal_states(dim, count, &mut rng);
        let spec = PartialIsometrySpec::new(
            inputs.iter().cloned().zip(outputs.iter().cloned()).collect(),
        )
        .unwrap();
        let u = complete_to_unitary(&spec, rng.random()).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10);
        for (i, o) in inputs.iter().zip(&outputs) {
            let img = superposition_lab::unitary::apply(&u, i).unwrap();
            prop_assert!((img.amplitudes() - o.amplitudes()).norm() < 1e-10);
        }
    }

    #[test]
    fn born_distributions_sum_to_one(
        d1 in 1usize..=4,
        d2 in 1usize..=4,
        d3 in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let layout = RegisterLayout::new([("x", d1), ("y", d2), ("z", d3)]).unwrap();
        let mut rng = trial_rng(seed, 0);
        let v = complex_gaussian_vector(layout.dim(), &mut rng);
        let n = v.norm();
        let psi = StateVector::new(layout.clone(), v.unscale(n)).unwrap();
        let rho = pure_density(&psi).unwrap();
        for reg in ["x", "y", "z"] {
            let p = born_distribution(&psi, reg).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            let pm = born_distribution_mixed(&rho, &layout, reg).unwrap();
            for (a, b) in p.iter().zip(&pm) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            for (value, &pv) in p.iter().enumerate() {
                if pv > 1e-6 {
                    let post = project(&psi, reg, value).unwrap();
                    prop_assert!(post.is_normalized());
                    let q = born_distribution(&post, reg).unwrap();
                    prop_assert!((q[value] - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn superposition_yes_mass_obeys_robust_bound(
        dim in 2usize..=12,
        frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = trial_rng(seed, 0);
        let n = 1 + ((dim - 1) as f64 * frac) as usize;
        let u = haar_random_with(dim, &mut rng).unwrap();
        let branches = orthonormal_states(dim, n, &mut rng);
        let alpha = random_unit_alpha(n, &mut rng);
        let partition = random_partition(dim, &mut rng);
        let d = decompose(&u, &branches, &alpha, &partition).unwrap();
        let bound: f64 = (0..n)
            .map(|i| alpha[i].norm() * d.branch_yes_mass(i).sqrt())
            .sum::<f64>()
            .powi(2);
        prop_assert!(d.superposition_yes_mass() <= bound + 1e-12);
        prop_assert!(check_linearity_relation(&d).linearity_error < 1e-10);
    }

    #[test]
    fn branch_relation_holds_under_hypothesis(dim in 2usize..=16, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let inst = random_branch_discriminating_instance(dim, &mut rng).unwrap();
        let d = decompose(&inst.unitary, &inst.branches, &inst.alpha, &inst.partition).unwrap();
        let rep = check_linearity_relation(&d);
        prop_assert!(rep.hypothesis_holds);
        prop_assert!(rep.max_relation_error() < 1e-10);
        prop_assert!(rep.max_excess().unwrap() <= 1e-12);
    }

    #[test]
    fn phase_average_keeps_only_the_diagonal(n in 1usize..=4, k in 2usize..=5, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let alpha = random_unit_alpha(n, &mut rng);
        let mix = branch_mixture(&alpha).unwrap();
        for mode in [PhaseAverageMode::Factored, PhaseAverageMode::BruteForce] {
            let rho = phase_average(&alpha, k, mode).unwrap();
            for (i, a) in alpha.iter().enumerate() {
                for j in 0..n {
                    let want = if i == j { Complex64::new(a.norm_sqr(), 0.0) } else { Complex64::new(0.0, 0.0) };
                    prop_assert!((rho.entries()[(i, j)] - want).norm() < 1e-12);
                    prop_assert!((rho.entries()[(i, j)] - mix.entries()[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn generator_round_trip(dim in 1usize..=6, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let params: Vec<f64> = (0..generator_len(dim)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = generator_matrix(dim, &params).unwrap();
        let back = generator_params(&a);
        for (x, y) in params.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(from_generator(dim, &params).unwrap().unitarity_defect() < 1e-10);
    }
}

#[test]
fn haar_first_moment() {
    let samples = 10_000;
    let vals: Vec<f64> = (0..samples)
        .map(|s| haar_random(4, s).unwrap().matrix()[(0, 0)].norm_sqr())
        .collect();
    let mean = vals.iter().sum::<f64>() / samples as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let se = (var / samples as f64).sqrt();
    assert!((mean - 0.25).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn generator_products_reach_any_unitary() {
    for seed in 0..50 {
        let target = haar_random(2, seed).unwrap();
        let fit = approximate_by_generators(&target, &[0.0; 4], 50, 1e-9).unwrap();
        assert!(fit.distance < 1e-6, "seed {seed}: {}", fit.distance);
        let mut product = superposition_lab::unitary::UnitaryOperator::identity(2);
        for f in &fit.factors {
            let g = from_generator(2, f).unwrap();
            product =
                superposition_lab::unitary::UnitaryOperator::new(product.matrix() * g.matrix())
                    .unwrap();
        }
        assert!(product.distance(&target) < 1e-6);
    }
    let target = haar_random(5, 3).unwrap();
    let fit = approximate_by_generators(&target, &[0.0; 25], 50, 1e-9).unwrap();
    assert!(fit.distance < 1e-6);
}
