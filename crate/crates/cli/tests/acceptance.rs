//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use orthopoly_core::approx_id::{
    check_norm_bound, check_symmetry, derive_phi_prime, derived_form_identity_residual, make_truncation_ai,
    random_finite_rank, recover_phi, verify_theorem_pipeline, PipelineOptions, STAGE_ADDITIVITY,
};
use orthopoly_core::finite_rank::{
    build_biorthogonal_system, embed, enclosing_system, represent_in_system, represent_on_finite_rank, RankOneOperator,
    RepresentOptions,
};
use orthopoly_core::matrix::{relative_distance, ComplexMatrix};
use orthopoly_core::matrix_rep::{extract_phi, verify_representation, UnitalMatrixAlgebra};
use orthopoly_core::multilinear::{as_symmetric_form, HomogeneousPolynomial, SymmetricMultilinearForm};
use orthopoly_core::ncpoly::{
    verify_identity, verify_perturbed_identity, verify_polarization_symbolic, verify_r14, DegreeLimit, IdentityKind,
};
use orthopoly_core::random;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn symbolic_identities() -> Outcome {
    let limit = DegreeLimit::default();
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut mutants = 0;
    for n in 2..=5 {
        for kind in IdentityKind::ALL {
            let check = verify_identity(kind, n, &limit).map_err(err)?;
            if !check.equal || check.block_structure == Some(false) {
                failures.push(format!("{} n={n}", kind.name()));
            }
            let mutant = verify_perturbed_identity(kind, n, &limit).map_err(err)?;
            if mutant.equal || mutant.witness.is_none() {
                failures.push(format!("mutant {} n={n} undetected", kind.name()));
            } else {
                mutants += 1;
            }
        }
        if !verify_r14(n, &limit).map_err(err)?.equal {
            failures.push(format!("r14 n={n}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(
        failures.is_empty() && secs < 60.0,
        format!("12 identities and 4 stratifications exact, {mutants}/12 mutants detected, {secs:.2}s {failures:?}"),
    )
}

fn symbolic_polarization() -> Outcome {
    let limit = DegreeLimit::default();
    let started = Instant::now();
    let mut failures = Vec::new();
    for n in 1..=4 {
        if !verify_polarization_symbolic(n, &limit).map_err(err)?.equal {
            failures.push(n);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(
        failures.is_empty() && secs < 10.0,
        format!("n=1..4 exact, {secs:.2}s, failing {failures:?}"),
    )
}

fn round_trip() -> Outcome {
    let (mut entry, mut residual) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let k = 1 + (seed % 6) as usize;
        let n = 1 + (seed / 6 % 4) as usize;
        let m = 1 + (seed % 3) as usize;
        let mut rng = random::rng(seed);
        let phi0 = random::linear_map::<f64>(&mut rng, k, m);
        let p = HomogeneousPolynomial::canonical(n, phi0.clone()).map_err(err)?;
        let phi = extract_phi(&as_symmetric_form(&p), &UnitalMatrixAlgebra::new(k).map_err(err)?).map_err(err)?;
        entry = entry.max(phi.max_abs_diff(&phi0));
        residual = residual.max(
            verify_representation(&p, &phi, 10, seed, 1e-8)
                .map_err(err)?
                .max_residual,
        );
    }
    ensure(
        entry <= 1e-8 && residual <= 1e-8,
        format!("100 instances, max entry error {entry:.2e}, max representation residual {residual:.2e}"),
    )
}

fn construction() -> Outcome {
    let d = 8;
    let (mut bio, mut contain, mut mult) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let m = 1 + (seed % 4) as usize;
        let mut rng = random::rng(1000 + seed);
        let ops: Vec<_> = (0..m)
            .map(|_| RankOneOperator::new(random::vector::<f64>(&mut rng, d), random::vector(&mut rng, d)))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let system = build_biorthogonal_system(&ops, 1e-10).map_err(err)?;
        bio = bio.max(system.biorthogonality_residual());
        contain = contain.max(system.containment_residual(&ops));
        let emb = embed(&system);
        let k = emb.order();
        let mut elements: Vec<ComplexMatrix<f64>> = ops.iter().map(RankOneOperator::matrix).collect();
        for _ in 0..2 {
            elements.push(emb.backward_matrix(&random::matrix(&mut rng, k)).map_err(err)?);
        }
        for a in &elements {
            for b in &elements {
                let lhs = emb.forward(&(a * b)).map_err(err)?;
                let rhs = &emb.forward(a).map_err(err)? * &emb.forward(b).map_err(err)?;
                mult = mult.max(relative_distance(&lhs, &rhs));
            }
        }
    }
    ensure(
        bio <= 1e-9 && contain <= 1e-9 && mult <= 1e-8,
        format!("100 families, biorthogonality {bio:.2e}, containment {contain:.2e}, multiplicativity {mult:.2e}"),
    )
}

fn well_definedness() -> Outcome {
    let mut worst = 0.0f64;
    let mut distinct = 0;
    for seed in 0..50u64 {
        let n = 1 + (seed % 4) as usize;
        let d = 6 + (seed % 3) as usize;
        let mut rng = random::rng(2000 + seed);
        let p = HomogeneousPolynomial::canonical(n, random::linear_map::<f64>(&mut rng, d, 2)).map_err(err)?;
        let rank = 1 + (seed % 2) as usize;
        let t = random_finite_rank::<f64>(&mut rng, d, rank, d);
        let extra = RankOneOperator::new(random::vector(&mut rng, d), random::vector(&mut rng, d)).map_err(err)?;
        let small = enclosing_system(&t, &[], 1e-10).map_err(err)?;
        let big = enclosing_system(&t, &[extra], 1e-10).map_err(err)?;
        if small.k() != big.k() {
            distinct += 1;
        }
        let a = represent_in_system(&p, t.matrix(), &small).map_err(err)?;
        let b = represent_in_system(&p, t.matrix(), &big).map_err(err)?;
        worst = worst.max(relative_distance(&a, &b));
    }
    ensure(
        worst <= 1e-8 && distinct == 50,
        format!("50 instances, {distinct} with subalgebras of different order, max disagreement {worst:.2e}"),
    )
}

fn pipeline() -> Outcome {
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for seed in 0..25u64 {
        let n = 1 + (seed % 4) as usize;
        let d = 2 + (seed % 7) as usize;
        let mut rng = random::rng(3000 + seed);
        let p = HomogeneousPolynomial::canonical(n, random::linear_map::<f64>(&mut rng, d, 2)).map_err(err)?;
        let options = PipelineOptions {
            samples: 4,
            seed,
            ..PipelineOptions::default()
        };
        let report = verify_theorem_pipeline(&p, &options).map_err(err)?;
        worst = worst.max(report.max_residual());
        if !report.verdict.passed() || report.max_residual() > 1e-8 {
            failed.push(seed);
        }
    }
    let p = HomogeneousPolynomial::trace_power(2, 3).map_err(err)?;
    let report = verify_theorem_pipeline(&p, &PipelineOptions::default()).map_err(err)?;
    let witness = report.stage(STAGE_ADDITIVITY).and_then(|s| s.witness.clone());
    let expected = (ComplexMatrix::<f64>::unit(3, 0, 0), ComplexMatrix::unit(3, 1, 1));
    let witness_ok = witness.is_some_and(|w| (w.a(), w.b()) == (&expected.0, &expected.1));
    ensure(
        failed.is_empty() && !report.verdict.passed() && witness_ok,
        format!(
            "25 instances pass (max residual {worst:.2e}, failing {failed:?}); trace-square {} with witness (E11, E22): {witness_ok}",
            if report.verdict.passed() { "passes" } else { "fails" }
        ),
    )
}

fn recovery() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let n = 1 + (seed % 4) as usize;
        let d = 2 + (seed % 7) as usize;
        let mut rng = random::rng(4000 + seed);
        let p = HomogeneousPolynomial::canonical(n, random::linear_map::<f64>(&mut rng, d, 2)).map_err(err)?;
        let rank = 1 + (seed % 3) as usize;
        let support = 1 + (seed % d as u64) as usize;
        let t = random_finite_rank::<f64>(&mut rng, d, rank, support);
        let ai = make_truncation_ai::<f64>(d).map_err(err)?;
        let a = recover_phi(&as_symmetric_form(&p), &ai, t.matrix()).map_err(err)?;
        let options = RepresentOptions {
            oa_pairs: 2,
            seed,
            ..RepresentOptions::default()
        };
        let b = represent_on_finite_rank(&p, &t, &options).map_err(err)?;
        worst = worst.max(relative_distance(&a, &b));
    }
    ensure(worst <= 1e-8, format!("50 operators, max disagreement {worst:.2e}"))
}

fn derived_form() -> Outcome {
    let d = 4;
    let ai = make_truncation_ai::<f64>(d).map_err(err)?;
    let mut details = Vec::new();
    let mut ok = true;
    for n in 2..=4usize {
        let mut rng = random::rng(5000 + n as u64);
        let phi_map = random::linear_map::<f64>(&mut rng, d, 2);
        let phi = SymmetricMultilinearForm::from_representing_map(phi_map.clone(), n);
        let bound = check_norm_bound(&phi, &ai, 100, n as u64, 1e-9).map_err(err)?;
        let prime = derive_phi_prime(&phi, &ai).map_err(err)?;
        let symmetry = check_symmetry(&prime, 100, n as u64).map_err(err)?;
        let identity = derived_form_identity_residual(&phi_map, n, 100, n as u64, &ai).map_err(err)?;
        ok &= bound.verdict.passed() && symmetry <= 1e-9 && identity <= 1e-8;
        details.push(format!(
            "n={n}: ratio {:.3} <= norm {:.3}, symmetry {symmetry:.1e}, identity {identity:.1e}",
            bound.max_ratio, bound.phi_norm
        ));
    }
    ensure(ok, details.join("; "))
}

fn run_binary(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_orthopoly"))
        .args(args)
        .output()
        .map_err(err)?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let ops = dir.path().join("ops.json");
    std::fs::write(
        &ops,
        r#"[{"dim": 3, "terms": [{"x": [1, 0, 0], "f": [0, 1, 0]}]}, {"dim": 3, "matrix": [[0, 0, 1], [0, 2, 0], [0, 0, 0]]}]"#,
    )
    .map_err(err)?;
    let ops = ops.to_string_lossy().into_owned();
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify-identities", "--n", "4", "--dump"],
        vec!["verify-representation", "--n", "3", "--d", "5", "--seed", "7"],
        vec![
            "verify-representation",
            "--instance",
            "trace-square",
            "--d",
            "3",
            "--seed",
            "1",
        ],
        vec!["verify-representation", "--ai", "nested-random", "--seed", "3"],
        vec!["embed", "--input", &ops],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let first = run_binary(args)?;
        let second = run_binary(args)?;
        if first.is_empty() || first != second {
            differing.push(args[0]);
        }
    }
    ensure(
        differing.is_empty(),
        format!("{} command lines run twice, differing {differing:?}", commands.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("symbolic identities and mutants", symbolic_identities),
        ("symbolic polarization", symbolic_polarization),
        ("matrix-algebra round trip", round_trip),
        ("biorthogonal construction", construction),
        ("well-definedness across subalgebras", well_definedness),
        ("representation pipeline", pipeline),
        ("recovery without limits", recovery),
        ("derived form contract", derived_form),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (tag, detail) = match check() {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failures += 1;
                ("FAIL", detail)
            }
        };
        println!(
            "{tag} criterion {}: {name} ({detail}) [{:.2}s]",
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
