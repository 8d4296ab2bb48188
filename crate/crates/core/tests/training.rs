mod oracles;

use manybody_core::model::{GraphContext, Head, ModelConfig, Params};
use manybody_core::optim::AdamConfig;
use manybody_core::synth::{self, DatasetSpec, Family, TargetKind};
use manybody_core::train::{train, GraphSample, Task, TrainConfig};
use oracles::{random_perm, rng};

fn regression_task(count: usize, n: (usize, usize), cfg: &ModelConfig, seed: u64) -> Task {
    let mut spec = DatasetSpec::new(Family::ErdosRenyi);
    spec.count = count;
    spec.n_nodes = n;
    spec.edge_prob = (0.2, 0.35);
    spec.target = TargetKind::DistEmph;
    spec.feature_dim = cfg.input_dim;
    spec.seed = seed;
    let samples = synth::generate(&spec)
        .unwrap()
        .into_iter()
        .map(|inst| GraphSample {
            ctx: GraphContext::new(inst.graph, cfg).unwrap(),
            features: inst.features,
            target: inst.target.unwrap(),
        })
        .collect();
    Task::GraphRegression(samples)
}

#[test]
fn regression_train_mse_decreases_early() {
    let mut cfg = ModelConfig::new(3, 4, 8, 4, Head::GraphRegression);
    cfg.rng_seed = 1;
    cfg.wy_init_scale = 0.1;
    let task = regression_task(20, (12, 18), &cfg, 5);
    let tc = TrainConfig {
        epochs: 10,
        batch_size: 16,
        optimizer: AdamConfig {
            lr: 1e-4,
            ..Default::default()
        },
        seed: 1,
        ..Default::default()
    };
    let out = train(&task, &cfg, &tc, Params::init(&cfg).unwrap(), |_, _| {}).unwrap();
    assert!(out.aborted.is_none(), "{:?}", out.aborted);
    let losses: Vec<f64> = out.metrics.iter().map(|m| m.train_loss).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    assert!(out.metrics.iter().all(|m| m.bound_satisfied));
}

#[test]
fn training_is_bitwise_deterministic() {
    let cfg = ModelConfig::new(4, 2, 6, 4, Head::GraphRegression);
    let task = regression_task(6, (10, 14), &cfg, 8);
    let tc = TrainConfig {
        epochs: 4,
        batch_size: 2,
        seed: 3,
        ..Default::default()
    };
    let a = train(&task, &cfg, &tc, Params::init(&cfg).unwrap(), |_, _| {}).unwrap();
    let b = train(&task, &cfg, &tc, Params::init(&cfg).unwrap(), |_, _| {}).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.params, b.params);
    let tc2 = TrainConfig { seed: 4, ..tc };
    let c = train(&task, &cfg, &tc2, Params::init(&cfg).unwrap(), |_, _| {}).unwrap();
    assert_ne!(a.metrics, c.metrics);
}

#[test]
fn non_finite_loss_aborts_with_last_good_parameters() {
    let mut cfg = ModelConfig::new(3, 2, 4, 4, Head::GraphRegression);
    cfg.wy_init_scale = 1e150;
    let task = regression_task(4, (10, 12), &cfg, 2);
    let init = Params::init(&cfg).unwrap();
    let out = train(&task, &cfg, &TrainConfig::default(), init.clone(), |_, _| {}).unwrap();
    assert!(out.aborted.is_some());
    assert!(out.metrics.is_empty());
    assert_eq!(out.params, init);
}

#[test]
fn heterophilic_classification_runs_and_bounds_hold() {
    let h = synth::heterophilic(120, 3, 6, 6.0, 0.8, 1.5, 4).unwrap();
    let mut cfg = ModelConfig::new(4, 2, 8, 6, Head::NodeClassification { n_classes: 3 });
    cfg.wy_init_scale = 0.1;
    let ctx = GraphContext::new(h.graph, &cfg).unwrap();
    let task = Task::NodeClassification {
        ctx,
        features: h.features,
        labels: h.labels,
    };
    let tc = TrainConfig {
        epochs: 15,
        ..Default::default()
    };
    let out = train(&task, &cfg, &tc, Params::init(&cfg).unwrap(), |_, _| {}).unwrap();
    assert!(out.aborted.is_none());
    let last = out.metrics.last().unwrap();
    assert!(last.test_metric > 0.5, "{last:?}");
    assert_eq!(last.order_energy.len(), 3);
    assert!(out.metrics.iter().all(|m| m.bound_satisfied && m.dirichlet_energy >= 0.0));
}

#[test]
fn energy_targets_are_permutation_invariant() {
    let mut r = rng(21);
    for family in [TargetKind::DistEmph, TargetKind::ClustEmph, TargetKind::SpectralDist, TargetKind::SpectralAdj] {
        let g = synth::erdos_renyi(25, 0.3, 7).unwrap();
        let perm = random_perm(25, &mut r);
        let a = synth::energy_target(&g, family, 2.0, 10.0).unwrap();
        let b = synth::energy_target(&g.permute(&perm).unwrap(), family, 2.0, 10.0).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{family:?}");
    }
}
