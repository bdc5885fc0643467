use dfo_bounds::models::FitKind;
use dfo_bounds::par::Execution;
use dfo_bounds::verify::{self, TrialConfig};

#[test]
fn hundred_mfn_seeds_all_pass() {
    let configs: Vec<TrialConfig> = (0..100)
        .map(|seed| {
            let mut cfg = TrialConfig::new(
                if seed % 2 == 0 { "quartic" } else { "rosenbrock" },
                FitKind::Mfn,
                2,
                0.1,
                seed,
            );
            cfg.sample_count = 200;
            cfg.kappa = if seed % 3 == 0 { 0.01 } else { 0.0 };
            cfg
        })
        .collect();
    let summary = verify::run_campaign(&configs, Execution::Parallel).summary();
    assert!(summary.errors.is_empty(), "{:?}", summary.errors);
    assert_eq!(summary.passed, 100);
}

#[test]
fn sequential_matches_parallel() {
    let configs = verify::parse_campaign_config(
        r#"{"function": "quartic", "kind": ["LIN_DET", "QUAD_DET", "MFN"], "n": 3, "delta": [0.3, 0.05], "seed": [5, 6], "sample_count": 100}"#,
    )
    .unwrap();
    let csv = |exec| {
        let mut buf = Vec::new();
        verify::run_campaign(&configs, exec).write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(Execution::Sequential), csv(Execution::Parallel));
}

#[test]
fn quadratic_function_reproduced_exactly() {
    for n in 1..=4 {
        let r = verify::run_trial(&TrialConfig::new("quadratic", FitKind::QuadDet, n, 0.4, n as u64)).unwrap();
        assert!(r.emp_f * 0.16 <= 1e-9 && r.emp_g * 0.4 <= 1e-9 && r.pass, "{r:?}");
    }
}
