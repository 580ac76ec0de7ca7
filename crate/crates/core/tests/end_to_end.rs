use hermspde::analysis::{stability_check, tail_mass};
use hermspde::monotonicity::estimate_constant;
use hermspde::simulate::{exact_translation_solution, simulate_ensemble, GalerkinStepper, PathState};
use hermspde::space::inner_product;
use hermspde::{
    GradedVectorF32, GradedVectorF64, ModelSpecF32, ModelSpecF64, MultiIndex, SimConfig, SimConfigF64, SobolevIndex,
};

fn h0(d: usize) -> GradedVectorF64 {
    GradedVectorF64::basis_element(0, &MultiIndex::zero(d)).unwrap()
}

#[test]
fn json_round_trips() {
    let spec: ModelSpecF64 = serde_json::from_str(
        r#"{"d": 2, "sigma": [[1, 0.2], [0, 0.5]], "b0": [0.1, -0.3], "M": [[-1, 0], [0, -1]], "alpha": 0.5, "p": 1}"#,
    )
    .unwrap();
    let back: ModelSpecF64 = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(spec, back);
    assert!(!spec.has_constant_drift());

    let x: GradedVectorF64 = serde_json::from_str(r#"{"d": 2, "N": 1, "coeffs": [1, 2, 3]}"#).unwrap();
    assert_eq!(x, serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap());
    assert!(serde_json::from_str::<GradedVectorF64>(r#"{"d": 2, "N": 1, "coeffs": [1, 2]}"#).is_err());

    let cfg = SimConfigF64::new(8, 0.01, 1.0, 4, 5);
    assert_eq!(
        cfg,
        serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap()
    );
}

#[test]
fn single_precision_pipeline() {
    let spec = ModelSpecF32::scalar(1.0, 0.0, 1.0, 2.0);
    let est = estimate_constant(&spec, SobolevIndex::new(0.0_f32), 8).unwrap();
    assert!(est.c_hat.abs() < 1e-4);
    let cfg = SimConfig::<f32>::new(16, 0.01, 0.5, 8, 1).with_save_every(10);
    let x0 = GradedVectorF32::basis_element(0, &MultiIndex::zero(1)).unwrap();
    let m = simulate_ensemble(&spec, &cfg, &x0).unwrap();
    let last = *m.mean_sq_norm.last().unwrap();
    assert!((last - (-1.0_f32).exp()).abs() < 0.05, "{last}");
}

#[test]
fn stability_bound_holds_with_thin_margin() {
    // 2 alpha = C0 + 0.1 with C0 computed at p - 2 for an affine drift
    let base = ModelSpecF64::affine(vec![vec![0.6]], vec![0.2], vec![vec![0.3]], 0.0, 2.0).unwrap();
    let n = 24;
    let c0 = estimate_constant(&base, base.stability_index(), n).unwrap().c_hat;
    let spec = base.with_alpha((c0 + 0.1) / 2.0);
    let cfg = SimConfig::new(n, 2e-3, 1.0, 64, 4).with_save_every(25);
    let moments = simulate_ensemble(&spec, &cfg, &h0(1)).unwrap();
    let report = stability_check(&moments, &spec, c0, 0.02, None);
    assert!((report.bound_rate - 0.1).abs() < 1e-12);
    assert_eq!(report.pass, Some(true), "{report:?}");
}

#[test]
fn tail_mass_vanishes_along_radius_grid() {
    let spec = ModelSpecF64::scalar(1.0, 0.0, 0.3, 2.0);
    let cfg = SimConfig::new(32, 5e-3, 2.0, 32, 8).with_save_every(4);
    let x0 = h0(1).scaled(3.0);
    let m = simulate_ensemble(&spec, &cfg, &x0).unwrap();
    let report = tail_mass(&m, &[1.0, 2.0, 5.0, 10.0, 20.0], 0.01).unwrap();
    let exceed: Vec<f64> = report.rows.iter().map(|r| r.time_avg_exceed).collect();
    assert!(exceed.windows(2).all(|w| w[1] <= w[0]), "{exceed:?}");
    assert_eq!(*exceed.last().unwrap(), 0.0);
    assert!(report.pass);
    assert!(report.r_eps.is_some());
}

#[test]
fn galerkin_step_matches_oracle_for_two_dimensional_transport() {
    // sigma = 0: exact transport e^{-alpha t} x0(. + b t)
    let spec = ModelSpecF64::constant(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.4, -0.2], 0.5, 1.0).unwrap();
    let n = 14;
    let stepper = GalerkinStepper::new(&spec, n, 1e-3, 0.5).unwrap();
    let mut state = PathState {
        t: 0.0,
        x: h0(2).extend_to(n).unwrap(),
    };
    for _ in 0..500 {
        state = stepper.step(&state, &[0.0, 0.0]).unwrap();
    }
    let exact = exact_translation_solution(&spec, &h0(2), 0.5, &[0.0, 0.0], n).unwrap();
    let diff = state.x.add_scaled(-1.0, &exact).unwrap();
    assert!(diff.norm(SobolevIndex::new(0.0)) < 1e-6);
    let overlap = inner_product(&state.x, &exact, SobolevIndex::new(0.0)).unwrap();
    assert!((overlap - (-0.5_f64).exp()).abs() < 1e-6);
}
