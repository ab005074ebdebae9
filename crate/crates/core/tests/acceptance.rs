//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p ecs-core --test acceptance --release` for timings
//! close to the stated budgets.

use std::time::Instant;

use ecs_core::homogeneous::HomogeneousModel;
use ecs_core::io::Task;
use ecs_core::isometry_group::{classify_holonomy, Holonomy};
use ecs_core::pseudo_linear::{canonical_nilpotent, density_experiment};
use ecs_core::report::TaskReport;
use ecs_core::suites::run_task;
use ecs_core::{Complex64, DMatrix, Endo, Interval, ModelManifold, ProfileF, PseudoEuclideanSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn homogeneous(m: usize, c: Complex64) -> ModelManifold {
    HomogeneousModel::canonical(m, 1.0, c).unwrap().base().clone()
}

fn polynomial_diagonal(signs: &[f64], diag: &[f64], coeffs: Vec<f64>) -> ModelManifold {
    let space = PseudoEuclideanSpace::diagonal(signs);
    let a = Endo::new(space, DMatrix::from_diagonal(&diag.to_vec().into()));
    ModelManifold::new(a, ProfileF::polynomial(coeffs, Interval::REAL_LINE).unwrap()).unwrap()
}

/// Six models: n ∈ {4, 5, 7}, each with a homogeneous profile and generic
/// nilpotent `A`, and a polynomial profile with generic diagonal `A`.
fn models() -> Vec<(&'static str, ModelManifold)> {
    vec![
        ("n4 homogeneous nilpotent", homogeneous(2, Complex64::new(0.3, 0.0))),
        ("n4 polynomial diagonal", polynomial_diagonal(&[1.0, 1.0], &[1.0, -1.0], vec![0.5, 0.3, 0.1])),
        ("n5 homogeneous nilpotent", homogeneous(3, Complex64::new(0.0, 0.7))),
        ("n5 polynomial diagonal", polynomial_diagonal(&[1.0, 1.0, -1.0], &[1.0, 2.0, -3.0], vec![-0.2, 0.4, 0.0, 0.05])),
        ("n7 homogeneous nilpotent", homogeneous(5, Complex64::new(1.2, 0.0))),
        (
            "n7 polynomial diagonal",
            polynomial_diagonal(&[1.0, -1.0, 1.0, 1.0, -1.0], &[1.0, 2.0, 3.0, -2.0, -4.0], vec![0.3, -0.5, 0.2]),
        ),
    ]
}

fn spectral_grid() -> Vec<(usize, Complex64)> {
    vec![
        (2, Complex64::new(0.3, 0.0)),
        (2, Complex64::new(1.5, 0.0)),
        (3, Complex64::new(0.25, 0.0)),
        (3, Complex64::new(0.0, 0.7)),
    ]
}

fn run(model: &ModelManifold, task: Task, seed: u64) -> TaskReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_task(model, &task, &mut rng).unwrap_or_else(|e| panic!("{}: {e}", task.name()))
}

/// Worst residual of `name` across reports and whether every instance passed.
fn worst(reports: &[TaskReport], name: &str) -> (f64, bool) {
    let mut found = false;
    let mut res = 0.0_f64;
    let mut pass = true;
    for c in reports.iter().flat_map(|r| &r.checks).filter(|c| c.name == name) {
        found = true;
        res = res.max(c.residual);
        pass &= c.pass;
    }
    assert!(found, "no check named {name}");
    (res, pass)
}

fn summarize(reports: &[TaskReport], names: &[&str]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let (r, p) = worst(reports, name);
        pass &= p;
        parts.push(format!("{name}={r:.2e}"));
    }
    Outcome { pass, detail: parts.join(" ") }
}

fn criterion_curvature(verify: &[TaskReport], elapsed: f64) -> Outcome {
    let mut o = summarize(verify, &["nabla_weyl_relative", "nabla_riemann_flat_fraction", "weyl_nonzero"]);
    o.pass &= elapsed < 30.0;
    o.detail.push_str(&format!(" time={elapsed:.1}s"));
    o
}

fn criterion_isometries(models: &[(&str, ModelManifold)]) -> (Outcome, Vec<TaskReport>) {
    let reports: Vec<TaskReport> = models
        .iter()
        .enumerate()
        .map(|(i, (_, m))| run(m, Task::IsometryCheck { elements: 50, points: 20 }, 500 + i as u64))
        .collect();
    (summarize(&reports, &["isometry_pullback", "compose_action", "inverse_law"]), reports)
}

fn criterion_spectra(grid: &[TaskReport]) -> Outcome {
    summarize(grid, &["sigma_spectrum", "b_spectrum", "exp_generator", "e0_dimension"])
}

fn criterion_tcp() -> Outcome {
    let reports: Vec<TaskReport> = [(2, Complex64::new(1.5, 0.0)), (2, Complex64::new(0.3, 0.0))]
        .iter()
        .enumerate()
        .map(|(i, (m, c))| run(&homogeneous(*m, *c), Task::TcpCheck { samples: 200, pairs: 500, triples: 200 }, 900 + i as u64))
        .collect();
    summarize(&reports, &["j_round_trip", "commute_criterion", "tcp_counterexamples", "tcp_premises"])
}

fn criterion_geodesics(models: &[(&str, ModelManifold)]) -> Outcome {
    let reports: Vec<TaskReport> = models
        .iter()
        .enumerate()
        .map(|(i, (_, m))| {
            run(m, Task::Geodesic { x0: None, v0: None, tau_span: (0.0, 1.0), samples: 20, count: 100 }, 1100 + i as u64)
        })
        .collect();
    summarize(&reports, &["energy_drift", "t_affinity", "inward_boundary_hit"])
}

fn criterion_classifier_and_genericity() -> Outcome {
    let table: [&[f64]; 10] = [
        &[],
        &[1.0],
        &[1.0, 1.0],
        &[1.0, 1.0, 1.0],
        &[2.0],
        &[1.0, 0.5],
        &[3.0, 1.0 / 3.0],
        &[1.0, 1.0 + 1e-6],
        &[0.25, 4.0, 1.0],
        &[1.0, 1.0, 7.5],
    ];
    let mut mismatches = 0usize;
    for qs in table {
        let oracle = if qs.iter().all(|&q| q == 1.0) { Holonomy::Translational } else { Holonomy::Dilational };
        mismatches += usize::from(classify_holonomy(qs).unwrap() != oracle);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1400);
    let mut m2_failures = 0usize;
    for k in 0..100 {
        let space = if k % 2 == 0 { PseudoEuclideanSpace::euclidean(2) } else { PseudoEuclideanSpace::antidiagonal(2, 1.0) };
        let norm = rng.gen_range(0.1..2.0);
        let a = space.random_traceless_selfadjoint(&mut rng, norm);
        let g = Endo::new(space, a).genericity_test().unwrap();
        m2_failures += usize::from(!g.generic);
    }

    // self-adjoint nilpotents of every order, conjugated by random isometries;
    // the oracle is A^{m−1} ≠ 0
    let mut nil_mismatch = 0usize;
    for k in 0..50 {
        let m = if k % 2 == 0 { 3 } else { 4 };
        let shift = canonical_nilpotent(m, 1.0);
        let (space, a) = match (k / 2) % 3 {
            0 => (shift.space.clone(), shift.matrix.clone() * rng.gen_range(0.5..2.0)),
            1 => (shift.space.clone(), shift.power(2)),
            _ => {
                let block = canonical_nilpotent(m - 1, 1.0);
                let mut gram = DMatrix::zeros(m, m);
                gram.view_mut((0, 0), (m - 1, m - 1)).copy_from(block.space.gram());
                gram[(m - 1, m - 1)] = 1.0;
                let mut a = DMatrix::zeros(m, m);
                a.view_mut((0, 0), (m - 1, m - 1)).copy_from(&block.matrix);
                (PseudoEuclideanSpace::new(gram), a)
            }
        };
        let c = space.random_isometry(&mut rng, 0.5);
        let a = &c * a * c.clone().try_inverse().unwrap();
        let endo = Endo::new(space, a);
        let oracle = endo.power(m - 1).amax() > 1e-8;
        nil_mismatch += usize::from(endo.genericity_test().unwrap().generic != oracle);
    }

    let zero = Endo::zero(PseudoEuclideanSpace::euclidean(2));
    let density = density_experiment(&zero, 100, 1e-3, &mut rng).unwrap();

    Outcome {
        pass: mismatches == 0 && m2_failures == 0 && nil_mismatch == 0 && density == 1.0,
        detail: format!(
            "classifier_mismatches={mismatches} m2_nongeneric={m2_failures} nilpotent_mismatches={nil_mismatch} density={density}"
        ),
    }
}

fn main() {
    let models = models();
    let start = Instant::now();
    let verify: Vec<TaskReport> = models
        .iter()
        .enumerate()
        .map(|(i, (_, m))| run(m, Task::VerifyModel { points: 100, isometries: 0 }, 100 + i as u64))
        .collect();
    let verify_time = start.elapsed().as_secs_f64();

    let grid: Vec<TaskReport> = spectral_grid()
        .iter()
        .enumerate()
        .map(|(i, (m, c))| {
            run(&homogeneous(*m, *c), Task::Spectra { qs: vec![0.25, 0.5, 2.0, 4.0], conjugations: 5 }, 700 + i as u64)
        })
        .collect();

    let (iso_outcome, iso_reports) = criterion_isometries(&models);
    let hm2 = homogeneous(2, Complex64::new(0.3, 0.0));

    let mut results: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = Vec::new();
    results.push(("1 parallel Weyl, non-symmetric", Box::new(|| criterion_curvature(&verify, verify_time))));
    results.push(("2 Ricci profile", Box::new(|| summarize(&verify, &["ricci_profile"]))));
    results.push(("3 leaf Christoffel symbols", Box::new(|| summarize(&verify, &["christoffel_leaf"]))));
    results.push((
        "4 Weyl tidal operator",
        Box::new(|| summarize(&verify, &["weyl_operator_relative", "weyl_operator_spread"])),
    ));
    results.push(("5 isometries", Box::new(|| iso_outcome)));
    results.push((
        "6 symplectic structure",
        Box::new(|| summarize(&iso_reports, &["omega_t_independence", "sigma_omega", "sigma_determinant"])),
    ));
    results.push(("7 spectra of σ_q and B", Box::new(|| criterion_spectra(&grid))));
    results.push((
        "8 σ_q − 1 on 𝓔₊ and 𝓔₀",
        Box::new(|| summarize(&grid, &["sigma_minus_one_inverse_bound", "sigma_minus_one_on_e0"])),
    ));
    results.push(("9 transitive commutation", Box::new(criterion_tcp)));
    results.push(("10 conjugation spectrum", Box::new(|| summarize(&grid, &["conjugation_spectrum"]))));
    results.push(("11 geodesics", Box::new(|| criterion_geodesics(&models))));
    results.push((
        "12 variation through geodesics",
        Box::new(|| {
            let r = run(&hm2, Task::Variation { configs: 20 }, 1200);
            summarize(&[r], &["variation_geodesic", "affine_field"])
        }),
    ));
    results.push((
        "13 reconstruction isometry",
        Box::new(|| {
            let r = run(&hm2, Task::Reconstruction { geodesics: 5, points: 10 }, 1300);
            summarize(&[r], &["reconstruction_pullback"])
        }),
    ));
    results.push(("14 classifier and genericity", Box::new(criterion_classifier_and_genericity)));

    let mut failed = 0usize;
    for (name, f) in results {
        let o = f();
        failed += usize::from(!o.pass);
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 14 criteria passed ({:.1}s)", 14 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
