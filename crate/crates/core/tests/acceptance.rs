//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use superposition_lab::dynamics::{trial_rng, ModelKind};
use superposition_lab::linalg::{CMatrix, CVector};
use superposition_lab::protocol::{
    accumulate_evidence, build_machine_transform, record_spin_interaction, room_basis, Experiment,
    ExperimentConfig, Outcome, E_READY, PAPER_YES, SPIN_UP,
};
use superposition_lab::statespace::{
    branch_mixture, inner_product, phase_average, PhaseAverageMode, StateVector,
};
use superposition_lab::theorems::{
    check_linearity_relation, decompose, definitive_violation, mixture_indistinguishability,
    random_branch_discriminating_instance, random_confined_instance, random_unit_alpha,
    violation_search, SearchKind, SearchOptions,
};
use superposition_lab::unitary::{
    apply, complete_to_unitary, from_generator, generator_len, haar_random, haar_random_with,
    PartialIsometrySpec, UnitaryOperator,
};

use common::{orthonormal_states, random_state};

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn run_experiment(
    kind: ModelKind,
    trials: u64,
    actual: f64,
    assumed: f64,
    seed: u64,
) -> (u64, u64, Option<f64>) {
    let cfg = ExperimentConfig::new(kind, trials, actual, assumed, seed).unwrap();
    let records = Experiment::new(cfg).unwrap().run().unwrap();
    assert_eq!(records.len() as u64, trials);
    let ledger = accumulate_evidence(&records).unwrap();
    let yes = records.iter().filter(|r| r.outcome == Outcome::Yes).count() as u64;
    assert_eq!(yes, ledger.yes_count);
    (
        ledger.yes_count,
        ledger.no_count,
        ledger.log_bayes_factor.value(),
    )
}

fn interference_reproduction() -> Verdict {
    let trials = 1000;
    let (yes, no, lbf) = run_experiment(ModelKind::UnitaryOnly, trials, 0.0, 0.0, SEED);
    let expected = trials as f64 * LN_2;
    let rel = lbf.map_or(f64::INFINITY, |v| (v - expected).abs() / expected);

    let cfg = ExperimentConfig::new(ModelKind::UnitaryOnly, 1, 0.0, 0.0, SEED).unwrap();
    let psi = Experiment::new(cfg)
        .unwrap()
        .coherent_pre_readout()
        .unwrap();
    let overlap = inner_product(&room_basis(SPIN_UP, E_READY, PAPER_YES), &psi)
        .unwrap()
        .norm();

    verdict(
        yes == trials && no == 0 && rel < 1e-9 && (overlap - 1.0).abs() < 1e-12,
        format!("yes={yes} no={no} lbf_rel_err={rel:.2e} |<reset,Y|psi>|={overlap:.15}"),
    )
}

fn collapse_baseline() -> Verdict {
    let trials = 10_000;
    let (yes, _, lbf) = run_experiment(ModelKind::ObjectiveCollapse, trials, 0.0, 0.0, SEED);
    let frac = yes as f64 / trials as f64;
    let tol = 4.0 * (0.25f64 / trials as f64).sqrt();
    verdict(
        (frac - 0.5).abs() <= tol && lbf.is_none(),
        format!(
            "yes_fraction={frac} tolerance={tol} log_bf_finite={}",
            lbf.is_some()
        ),
    )
}

fn phase_mismatch_curve() -> Verdict {
    let trials = 10_000u64;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, phi) in [0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4, PI]
        .into_iter()
        .enumerate()
    {
        let (yes, _, _) = run_experiment(ModelKind::UnitaryOnly, trials, phi, 0.0, SEED + k as u64);
        let p = (phi / 2.0).cos().powi(2);
        let freq = yes as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let good = if k == 0 {
            yes == trials
        } else if k == 4 {
            yes == 0
        } else {
            (freq - p).abs() <= 4.0 * se
        };
        ok &= good;
        parts.push(format!("{phi:.4}:{freq}/{p:.4}"));
    }
    verdict(ok, parts.join(" "))
}

fn yes_amplitude(u: &CMatrix, v: &CVector, y: &StateVector) -> Complex64 {
    y.amplitudes().dotc(&(u * v))
}

fn branch_relation() -> Verdict {
    let mut rng = trial_rng(SEED, 4);
    let mut max_rel: f64 = 0.0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut lib_rel: f64 = 0.0;
    let mut hypothesis = true;
    for t in 0..1000 {
        let dim = 2 + t % 15;
        let inst = random_branch_discriminating_instance(dim, &mut rng).unwrap();
        let u = inst.unitary.matrix();
        let mut psi = CVector::zeros(dim);
        for (a, b) in inst.alpha.iter().zip(&inst.branches) {
            psi += b.amplitudes() * *a;
        }
        let groups = inst.partition.per_branch_yes().unwrap();
        let yes = inst.partition.yes_subspace();
        for (i, group) in groups.iter().enumerate() {
            let (mut eta_mass, mut gamma_mass) = (0.0, 0.0);
            for &j in group {
                let eta = yes_amplitude(u, &psi, &yes[j]);
                let gamma = yes_amplitude(u, inst.branches[i].amplitudes(), &yes[j]);
                max_rel = max_rel.max((eta - inst.alpha[i] * gamma).norm());
                eta_mass += eta.norm_sqr();
                gamma_mass += gamma.norm_sqr();
            }
            max_excess = max_excess.max(eta_mass - gamma_mass);
        }
        let d = decompose(&inst.unitary, &inst.branches, &inst.alpha, &inst.partition).unwrap();
        let rep = check_linearity_relation(&d);
        hypothesis &= rep.hypothesis_holds;
        lib_rel = lib_rel.max(rep.max_relation_error());
    }
    verdict(
        hypothesis && max_rel < 1e-10 && lib_rel < 1e-10 && max_excess <= 1e-12,
        format!("max|eta-alpha*gamma|={max_rel:.2e} (library {lib_rel:.2e}) max_excess={max_excess:.2e}"),
    )
}

fn linear_leakage() -> Verdict {
    let mut rng = trial_rng(SEED, 5);
    let mut max_yes: f64 = 0.0;
    let mut max_branch_outside: f64 = 0.0;
    for t in 0..1000 {
        let dim = 2 + t % 15;
        let inst = random_confined_instance(dim, &mut rng).unwrap();
        let u = inst.unitary.matrix();
        let mut psi = CVector::zeros(dim);
        for (a, b) in inst.alpha.iter().zip(&inst.branches) {
            psi += b.amplitudes() * *a;
        }
        let mass: f64 = inst
            .partition
            .yes_subspace()
            .iter()
            .map(|y| yes_amplitude(u, &psi, y).norm_sqr())
            .sum();
        max_yes = max_yes.max(mass);
        let s = definitive_violation(&inst.unitary, &inst.branches, &inst.alpha, &inst.partition)
            .unwrap();
        max_yes = max_yes.max(s.superposition_yes_mass);
        max_branch_outside = max_branch_outside.max(s.penalty());
    }
    verdict(
        max_yes < 1e-18 && max_branch_outside < 1e-10,
        format!("max_yes_mass={max_yes:.2e} max_branch_outside_no={max_branch_outside:.2e}"),
    )
}

fn violation_search_budget() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for kind in [
        SearchKind::Definitive,
        SearchKind::PartiallyDefinitive,
        SearchKind::BranchDiscriminating,
    ] {
        for dim in [2, 4, 8] {
            let rep = violation_search(kind, dim, 100, SEED, &SearchOptions::default()).unwrap();
            let best = rep.best_feasible_score();
            ok &= rep.passed() && rep.feasible_count() > 0;
            if let Some(b) = best {
                worst = worst.max(b);
            }
            parts.push(format!("{kind}/{dim}:{}", rep.feasible_count()));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        ok && worst <= 1e-9 && elapsed <= Duration::from_secs(120),
        format!(
            "worst_best_feasible={worst:.2e} elapsed={:.1}s feasible_restarts[{}]",
            elapsed.as_secs_f64(),
            parts.join(" ")
        ),
    )
}

fn mixture_identity() -> Verdict {
    let mut rng = trial_rng(SEED, 7);
    let mut coeff: f64 = 0.0;
    let mut brute: f64 = 0.0;
    let mut downstream: f64 = 0.0;
    for t in 0..100 {
        let n = rng.random_range(1..=4);
        let k = 2 + t % 3;
        let alpha = random_unit_alpha(n, &mut rng);
        let mut oracle = CMatrix::zeros(n, n);
        for (i, a) in alpha.iter().enumerate() {
            oracle[(i, i)] = Complex64::new(a.norm_sqr(), 0.0);
        }
        let f = phase_average(&alpha, k, PhaseAverageMode::Factored).unwrap();
        let b = phase_average(&alpha, k, PhaseAverageMode::BruteForce).unwrap();
        let m = branch_mixture(&alpha).unwrap();
        for r in 0..n {
            for c in 0..n {
                coeff = coeff.max((f.entries()[(r, c)] - oracle[(r, c)]).norm());
                coeff = coeff.max((m.entries()[(r, c)] - oracle[(r, c)]).norm());
                brute = brute.max((b.entries()[(r, c)] - f.entries()[(r, c)]).norm());
            }
        }
        let dim = 6;
        let branches = orthonormal_states(dim, n, &mut rng);
        let protocol: Vec<UnitaryOperator> = (0..2)
            .map(|_| haar_random_with(dim, &mut rng).unwrap())
            .collect();
        let rep = mixture_indistinguishability(&branches, &alpha, &protocol, "system", k).unwrap();
        downstream = downstream.max(rep.discrepancy);
    }
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let cfg = ExperimentConfig::new(ModelKind::UnitaryOnly, 1, 0.0, 0.0, SEED).unwrap();
    let exp = Experiment::new(cfg).unwrap();
    let branches = [
        room_basis(SPIN_UP, superposition_lab::protocol::E_UP, 0),
        room_basis(
            superposition_lab::protocol::SPIN_DOWN,
            superposition_lab::protocol::E_DOWN,
            0,
        ),
    ];
    let machine = mixture_indistinguishability(
        &branches,
        &[h, h],
        &[exp.machine().clone()],
        superposition_lab::protocol::PAPER,
        2,
    )
    .unwrap();
    downstream = downstream.max(machine.discrepancy);
    verdict(
        coeff < 1e-12 && brute < 1e-12 && downstream < 1e-10,
        format!("max_entry={coeff:.2e} brute_vs_factored={brute:.2e} downstream={downstream:.2e}"),
    )
}

fn defect(u: &UnitaryOperator) -> f64 {
    let m = u.matrix();
    let g = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let want = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

fn linear_algebra_substrate() -> Verdict {
    let mut rng = trial_rng(SEED, 8);
    let mut unitaries: Vec<UnitaryOperator> = Vec::new();
    for dim in 1..=16 {
        unitaries.push(haar_random(dim, SEED + dim as u64).unwrap());
        let params: Vec<f64> = (0..generator_len(dim))
            .map(|_| rng.random_range(-3.0..3.0))
            .collect();
        unitaries.push(from_generator(dim, &params).unwrap());
        if dim >= 2 {
            let count = rng.random_range(1..dim);
            let ins = orthonormal_states(dim, count, &mut rng);
            let outs = orthonormal_states(dim, count, &mut rng);
            let spec = PartialIsometrySpec::new(ins.into_iter().zip(outs).collect()).unwrap();
            unitaries.push(complete_to_unitary(&spec, rng.random()).unwrap());
            unitaries.push(
                random_branch_discriminating_instance(dim, &mut rng)
                    .unwrap()
                    .unitary,
            );
            unitaries.push(random_confined_instance(dim, &mut rng).unwrap().unitary);
        }
    }
    unitaries.push(record_spin_interaction());
    for k in 0..8 {
        let phi = k as f64 * PI / 4.0;
        let cfg = ExperimentConfig::new(ModelKind::UnitaryOnly, 1, phi, phi, SEED).unwrap();
        unitaries.push(build_machine_transform(&cfg).unwrap());
    }
    let max_defect = unitaries.iter().map(defect).fold(0.0, f64::max);

    let mut max_ip: f64 = 0.0;
    for t in 0..1000 {
        let dim = 2 + t % 15;
        let u = haar_random_with(dim, &mut rng).unwrap();
        let a = random_state(dim, &mut rng);
        let b = random_state(dim, &mut rng);
        let before = inner_product(&a, &b).unwrap();
        let after = inner_product(&apply(&u, &a).unwrap(), &apply(&u, &b).unwrap()).unwrap();
        max_ip = max_ip.max((before - after).norm());
    }
    verdict(
        max_defect < 1e-10 && max_ip < 1e-10,
        format!(
            "unitaries={} max_defect={max_defect:.2e} max_inner_product_drift={max_ip:.2e}",
            unitaries.len()
        ),
    )
}

fn cli_output(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_suplab"))
        .args(args)
        .output()
        .expect("suplab runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_determinism() -> Verdict {
    let commands: [&[&str]; 6] = [
        &[
            "protocol",
            "--model",
            "rsi",
            "--trials",
            "200",
            "--seed",
            "7",
            "--phase-actual",
            "1.0",
            "--format",
            "csv",
        ],
        &[
            "protocol", "--model", "collapse", "--trials", "500", "--seed", "7", "--format", "csv",
        ],
        &[
            "theorems",
            "--dim",
            "6",
            "--instances",
            "50",
            "--seed",
            "3",
            "--format",
            "csv",
        ],
        &[
            "search",
            "--kind",
            "branch-discriminating",
            "--dim",
            "4",
            "--restarts",
            "8",
            "--seed",
            "1",
            "--format",
            "csv",
        ],
        &[
            "search",
            "--kind",
            "definitive",
            "--dim",
            "3",
            "--restarts",
            "8",
            "--seed",
            "1",
            "--format",
            "csv",
        ],
        &[
            "mixture",
            "--dim",
            "5",
            "--instances",
            "20",
            "--seed",
            "2",
            "--format",
            "csv",
        ],
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    for (i, args) in commands.iter().enumerate() {
        let (c1, o1) = cli_output(args);
        let (c2, o2) = cli_output(args);
        let path = dir.path().join(format!("run{i}.csv"));
        let mut with_out: Vec<&str> = args.to_vec();
        let p = path.to_str().unwrap().to_string();
        with_out.extend(["--out", &p]);
        let (c3, _) = cli_output(&with_out);
        let file = std::fs::read(&path).unwrap_or_default();
        ok &= c1 == 0 && c2 == 0 && c3 == 0 && !o1.is_empty() && o1 == o2 && o1 == file;
    }
    verdict(
        ok,
        format!("{} commands, each run three times", commands.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("interference reproduction", interference_reproduction),
        ("collapse baseline", collapse_baseline),
        ("phase-mismatch curve", phase_mismatch_curve),
        ("branch relation", branch_relation),
        ("linear leakage", linear_leakage),
        ("violation search", violation_search_budget),
        ("mixture identity", mixture_identity),
        ("linear-algebra substrate", linear_algebra_substrate),
        ("cli determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("acceptance {} {tag} {name}: {}", i + 1, v.detail);
        if !v.passed {
            failures += 1;
        }
    }
    println!(
        "acceptance summary: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
