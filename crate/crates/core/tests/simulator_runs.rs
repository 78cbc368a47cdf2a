use dass_core::simulator::{run_experiment, ExperimentConfig, Method, NoiseSpec};
use dass_core::synth::{generate_synthetic, SyntheticProfile};

fn cfg(method: Method, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        method,
        gamma: 0.25,
        noise: NoiseSpec::SnrDb(30.0),
        block_length: 48,
        blocks: Some(30),
        seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn every_method_keeps_its_budget() {
    let data = generate_synthetic(SyntheticProfile::DiurnalSmooth, 30, 48, 1, 2).unwrap();
    for method in Method::ALL {
        let c = cfg(method, 2);
        let report = run_experiment(&data, &c).unwrap();
        assert_eq!(report.records.len(), 30 - report.warmup, "{method}");
        for r in &report.records {
            assert_eq!(r.samples, c.samples_per_block(), "{method}");
            assert_eq!(r.pattern.len(), r.samples);
            assert!(r.rmse.is_finite());
        }
    }
}

#[test]
fn same_seed_same_results() {
    let data = generate_synthetic(SyntheticProfile::DiurnalSpiky, 30, 48, 1, 9).unwrap();
    for method in Method::ALL {
        let a = run_experiment(&data, &cfg(method, 9)).unwrap();
        let b = run_experiment(&data, &cfg(method, 9)).unwrap();
        assert!(a.same_results(&b), "{method}");
    }
}

#[test]
fn more_samples_lower_error() {
    let data = generate_synthetic(SyntheticProfile::DiurnalSmooth, 40, 48, 1, 5).unwrap();
    let run = |gamma: f64| {
        let c = ExperimentConfig { gamma, blocks: Some(40), ..cfg(Method::OlsUniform, 5) };
        run_experiment(&data, &c).unwrap().mean_rmse()
    };
    assert!(run(0.5) < run(0.1));
}

#[test]
fn joint_run_covers_all_nodes() {
    let data = generate_synthetic(SyntheticProfile::MultiNodeCorrelated, 20, 24, 3, 1).unwrap();
    let c = ExperimentConfig { node_count: 3, block_length: 24, blocks: Some(20), ..cfg(Method::Dass, 1) };
    let report = run_experiment(&data, &c).unwrap();
    for r in &report.records {
        assert!(r.pattern.indices().iter().all(|&i| i < 72));
    }
}
