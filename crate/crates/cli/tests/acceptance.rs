//! Acceptance criteria 1-9. Each test writes one `PASS`/`FAIL` line to the
//! process stdout (bypassing libtest capture) and then asserts.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hermspde::analysis::{ergodic_start_gap, stability_check, tail_mass, Functional};
use hermspde::basis::hermite_table;
use hermspde::monotonicity::estimate_constant;
use hermspde::operators::{assemble_a, coordinate_multiply_op, derivative_op};
use hermspde::rng::PathRng;
use hermspde::simulate::{simulate_ensemble, strong_error_sweep};
use hermspde::space::embedding_bound_check;
use hermspde::{BandOperator, GradedVector, ModelSpec, MultiIndex, SimConfig, SobolevIndex};

// criterion 1
const ZERO_FORM_TOL: f64 = 1e-9;
const ZERO_FORM_MODELS: usize = 20;
const ZERO_FORM_BUDGET: Duration = Duration::from_secs(60);
// criterion 2
const RAYLEIGH_EXPECTED: f64 = 40.0;
const RAYLEIGH_TOL: f64 = 1e-9;
// criteria 3 and 5
const STAB_PATHS: usize = 256;
const STAB_N: usize = 64;
const STAB_DT: f64 = 1e-3;
const STAB_T: f64 = 1.0;
const STAB_SLACK: f64 = 0.02;
const BETA_RANGE: (f64, f64) = (1.9, 2.1);
const STAB_BUDGET: Duration = Duration::from_secs(120);
const TAIL_RADII: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
const TAIL_SIGMAS: f64 = 3.0;
// criterion 4
const STRONG_PATHS: usize = 32;
const STRONG_DTS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const STRONG_MIN_ORDER: f64 = 0.5;
// criterion 6
const ERGODIC_T: f64 = 50.0;
const ERGODIC_TOL: f64 = 0.02;
const ERGODIC_BUDGET: Duration = Duration::from_secs(300);
// criterion 7
const EMBED_VECTORS: usize = 1000;
// criterion 8
const IDENTITY_TOL: f64 = 1e-12;
const RECURRENCE_TOL: f64 = 1e-10;
const RECURRENCE_MAX_K: usize = 200;

const SEED: u64 = 20240601;

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion} [{name}]: {status} | {detail}");
    let _ = out.flush();
}

fn ou_model() -> ModelSpec<f64> {
    ModelSpec::scalar(1.0, 0.0, 1.0, 2.0)
}

fn h0(d: usize) -> GradedVector<f64> {
    GradedVector::basis_element(0, &MultiIndex::zero(d)).unwrap()
}

#[test]
fn criterion_1_zero_form_identity() {
    let start = Instant::now();
    let mut rng = PathRng::split(SEED, 1);
    let mut worst = 0.0_f64;
    for m in 0..ZERO_FORM_MODELS {
        let d = 1 + m % 3;
        let n = [32, 16, 12][d - 1];
        let sigma: Vec<Vec<f64>> = (0..d).map(|_| rng.normal_vec(1.0, d)).collect();
        let b0 = rng.normal_vec(1.0, d);
        let alpha = rng.uniform() * 2.0;
        let spec = ModelSpec::constant(sigma, b0, alpha, 0.0).unwrap();
        let est = estimate_constant(&spec, SobolevIndex::new(0.0), n).unwrap();
        worst = worst.max(est.c_hat.abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= ZERO_FORM_TOL && elapsed < ZERO_FORM_BUDGET;
    verdict(
        1,
        "zero-form identity",
        pass,
        &format!("max |C_hat| = {worst:e} over {ZERO_FORM_MODELS} models, {elapsed:.1?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_closed_form_rayleigh_value() {
    let spec = ModelSpec::scalar(1.0, 0.0, 1.0, 1.0);
    let c1 = estimate_constant(&spec, SobolevIndex::new(1.0), 0).unwrap().c_hat;
    let c2 = estimate_constant(&spec, SobolevIndex::new(2.0), 0).unwrap().c_hat;
    let pass = (c1 - RAYLEIGH_EXPECTED).abs() <= RAYLEIGH_TOL;
    verdict(
        2,
        "closed-form Rayleigh value",
        pass,
        &format!(
            "C_hat(p=1, span h_0) = {c1}, expected {RAYLEIGH_EXPECTED}; hand value 2(-1/4) + (1/2) 3^2 = 4; \
             the same span at p=2 gives {c2}"
        ),
    );
    assert!(pass, "C_hat = {c1}, expected {RAYLEIGH_EXPECTED}");
}

fn stability_ensemble() -> hermspde::MomentTableF64 {
    let cfg = SimConfig::new(STAB_N, STAB_DT, STAB_T, STAB_PATHS, SEED).with_save_every(10);
    simulate_ensemble(&ou_model(), &cfg, &h0(1)).unwrap()
}

#[test]
fn criterion_3_exponential_stability_bound() {
    let start = Instant::now();
    let spec = ou_model();
    let c0 = estimate_constant(&spec, spec.stability_index(), STAB_N).unwrap().c_hat;
    let moments = stability_ensemble();
    let elapsed = start.elapsed();
    let report = stability_check(&moments, &spec, c0, STAB_SLACK, None);
    let worst = moments
        .times
        .iter()
        .zip(&moments.mean_sq_norm)
        .map(|(&t, &m)| m / (-2.0 * t).exp())
        .fold(0.0_f64, f64::max);
    let beta = report.beta_hat.unwrap_or(f64::NAN);
    let pass = worst <= 1.0 + STAB_SLACK
        && report.pass == Some(true)
        && (BETA_RANGE.0..=BETA_RANGE.1).contains(&beta)
        && elapsed < STAB_BUDGET;
    verdict(
        3,
        "exponential stability bound",
        pass,
        &format!("max m(t)/e^-2t = {worst:.5}, beta_hat = {beta:.4}, C0 = {c0:e}, {elapsed:.1?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_oracle_agreement() {
    let study = strong_error_sweep(
        &ou_model(),
        &h0(1),
        STAB_N,
        STAB_T,
        &STRONG_DTS,
        0.5,
        STRONG_PATHS,
        SEED,
    )
    .unwrap();
    let errs: Vec<String> = study
        .rows
        .iter()
        .map(|r| format!("dt={:e}: {:.3e}+-{:.1e}", r.dt, r.mean_max_error, r.stderr))
        .collect();
    let pass = study.monotone && study.fitted_order >= STRONG_MIN_ORDER;
    verdict(
        4,
        "oracle agreement",
        pass,
        &format!("fitted order {:.4}; {}", study.fitted_order, errs.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_5_chebyshev_tail_bound() {
    let moments = stability_ensemble();
    let report = tail_mass(&moments, &TAIL_RADII, 0.01).unwrap();
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "R={}: {:.4}+-{:.1e} vs {:.4}",
                r.r, r.time_avg_exceed, r.stderr, r.chebyshev_bound
            )
        })
        .collect();
    let pass = report
        .rows
        .iter()
        .all(|r| r.time_avg_exceed <= 1.0 / (r.r * r.r) + TAIL_SIGMAS * r.stderr);
    verdict(5, "Chebyshev tail bound", pass, &rows.join(", "));
    assert!(pass);
}

#[test]
fn criterion_6_invariant_measure() {
    let start = Instant::now();
    let spec = ou_model();
    let q = SobolevIndex::new(spec.p - 1.0);
    let cfg = SimConfig::new(32, 5e-3, ERGODIC_T, 128, SEED);
    let x2 = GradedVector::from_coeffs(1, 1, vec![2.0, 1.0]).unwrap();
    let report = ergodic_start_gap(&spec, &cfg, &h0(1), &x2, Functional::ExpNegSqNorm(None), q).unwrap();
    let elapsed = start.elapsed();
    let dev: Vec<f64> = report
        .starts
        .iter()
        .map(|s| (s.running_avg.last().unwrap() - report.limit_ref).abs())
        .collect();
    let gap = *report.start_gap.as_ref().unwrap().last().unwrap();
    let pass = dev.iter().all(|&e| e <= ERGODIC_TOL) && gap <= ERGODIC_TOL && elapsed < ERGODIC_BUDGET;
    verdict(
        6,
        "invariant-measure convergence",
        pass,
        &format!(
            "|A_T - 1| = {:.4} (h_0), {:.4} (2h_0+h_1); start_gap = {gap:.4}; {elapsed:.1?}",
            dev[0], dev[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_compact_embedding_bound() {
    let pairs = [(1.0, 0.0), (2.0, -1.0), (0.5, -0.5), (3.0, 2.0), (0.0, -2.0)];
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut worst = 0.0_f64;
    for (d, order) in [(1, 12), (2, 9), (3, 7)] {
        let size = GradedVector::<f64>::zeros(d, order).unwrap().len();
        for v in 0..EMBED_VECTORS {
            let mut rng = PathRng::split(SEED, (d * EMBED_VECTORS + v) as u64);
            let scale = 10f64.powf(4.0 * rng.uniform() - 2.0);
            let x = GradedVector::from_coeffs(d, order, rng.normal_vec(scale, size)).unwrap();
            for &(p, q) in &pairs {
                for n in [0, 1, 2, 4, 6] {
                    let rep = embedding_bound_check(&x, SobolevIndex::new(p), SobolevIndex::new(q), n).unwrap();
                    checks += 1;
                    worst = worst.max(rep.lhs / rep.rhs);
                    if !rep.pass {
                        violations += 1;
                    }
                }
            }
        }
    }
    let pass = violations == 0;
    verdict(
        7,
        "compact embedding bound",
        pass,
        &format!("{violations} violations in {checks} checks, max lhs/rhs = {worst:.6}"),
    );
    assert!(pass);
}

fn max_skew_defect(op: &BandOperator<f64>) -> f64 {
    let b = op.galerkin_block().unwrap();
    let mut worst = 0.0_f64;
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            worst = worst.max((b[(r, c)] + b[(c, r)]).abs());
        }
    }
    worst
}

#[test]
fn criterion_8_operator_identities() {
    let n = 10;
    let mut skew = 0.0_f64;
    let mut adjoint = 0.0_f64;
    let mut commutator = 0.0_f64;
    let mut rng = PathRng::split(SEED, 8);
    for d in 1..=3 {
        for i in 0..d {
            skew = skew.max(max_skew_defect(&derivative_op(i, d, n).unwrap()));
        }
        let sigma: Vec<Vec<f64>> = (0..d).map(|_| rng.normal_vec(1.0, d)).collect();
        let spec = ModelSpec::constant(sigma, rng.normal_vec(1.0, d), 1.0, 1.0).unwrap();
        for a in assemble_a(&spec, n).unwrap() {
            adjoint = adjoint.max(max_skew_defect(&a.widened(1)));
        }
        // [d_i, x_j] = delta_ij on span_{n-1}, landing in span_n
        for i in 0..d {
            for j in 0..d {
                let dx = derivative_op::<f64>(i, d, n)
                    .unwrap()
                    .compose(&coordinate_multiply_op(j, d, n - 1).unwrap())
                    .unwrap();
                let xd = coordinate_multiply_op::<f64>(j, d, n)
                    .unwrap()
                    .compose(&derivative_op(i, d, n - 1).unwrap())
                    .unwrap();
                let comm = BandOperator::linear_combination(&[(1.0, &dx), (-1.0, &xd)]).unwrap();
                let m = comm.to_dense(n + 1).unwrap();
                for r in 0..m.rows() {
                    for c in 0..m.cols() {
                        let want = if r == c && i == j { 1.0 } else { 0.0 };
                        commutator = commutator.max((m[(r, c)] - want).abs());
                    }
                }
            }
        }
    }
    let mut recurrence = 0.0_f64;
    for step in -40..=40 {
        let t = step as f64 * 0.5;
        let h = hermite_table(t, RECURRENCE_MAX_K + 1);
        for k in 1..=RECURRENCE_MAX_K {
            let kf = k as f64;
            let terms = [
                ((kf + 1.0) / 2.0).sqrt() * h[k + 1],
                (kf / 2.0).sqrt() * h[k - 1],
                t * h[k],
            ];
            let scale = terms.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if scale > 0.0 {
                recurrence = recurrence.max((terms[0] + terms[1] - terms[2]).abs() / scale);
            }
        }
    }
    let pass =
        skew <= IDENTITY_TOL && adjoint <= IDENTITY_TOL && commutator <= IDENTITY_TOL && recurrence <= RECURRENCE_TOL;
    verdict(
        8,
        "operator identities",
        pass,
        &format!(
            "skew {skew:e}, adjoint {adjoint:e}, commutator {commutator:e} (N <= {n}); \
             recurrence {recurrence:e} (k <= {RECURRENCE_MAX_K})"
        ),
    );
    assert!(pass);
}

const SMALL_CONFIG: &str = r#"{
  "model_id": "ou-small",
  "model": {"d": 1, "sigma": [[1.0]], "b0": [0.3], "alpha": 1.0, "p": 2.0},
  "sim": {"N": 24, "dt": 0.005, "T": 0.5, "paths": 24, "seed": 77, "save_every": 4},
  "q": 1.0,
  "analysis": {"R_grid": [1, 2, 5, 10], "eps": 0.01, "functionals": ["exp_neg_sq_norm", "cos_coeff(1)", "capped_norm(0)"]},
  "output_dir": "unused"
}"#;

fn run_cli(config: &Path, out: &Path, threads: &str, args: &[&str]) {
    let output = Command::new(env!("CARGO_BIN_EXE_hermspde"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .env("HERMSPDE_THREADS", threads)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "{args:?} with {threads} threads exited with {}: {}",
        output.status,
        String::from_utf8_lossy(&output.stderr)
    );
}

fn directory_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_determinism_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("experiment.json");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let commands: [&[&str]; 5] = [
        &["monotonicity", "--n-list", "2,4,8"],
        &["stability"],
        &["invariant"],
        &["embedding", "--n-list", "1,3", "--trials", "50"],
        &["oracle-compare", "--dt-list", "0.05,0.01,0.005"],
    ];
    let mut mismatched = Vec::new();
    let mut csv_files = 0;
    for args in commands {
        let a = tmp.path().join(format!("{}-a", args[0]));
        let b = tmp.path().join(format!("{}-b", args[0]));
        run_cli(&config, &a, "1", args);
        run_cli(&config, &b, "4", args);
        let (fa, fb) = (directory_bytes(&a), directory_bytes(&b));
        csv_files += fa.iter().filter(|(n, _)| n.ends_with(".csv")).count();
        if fa != fb {
            mismatched.push(args[0]);
        }
    }
    let pass = mismatched.is_empty() && csv_files > 0;
    verdict(
        9,
        "determinism",
        pass,
        &format!(
            "{} commands, {csv_files} CSV files, HERMSPDE_THREADS 1 vs 4, mismatches: {mismatched:?}",
            commands.len()
        ),
    );
    assert!(pass);
}
