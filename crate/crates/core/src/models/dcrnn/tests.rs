use super::*;
use crate::features::{build_features, FeatureConfig, Proxies};
use crate::panel::IsoWeek;

fn panel_from(cpc: Vec<Vec<f64>>) -> WeeklyPanel {
    let clicks: Vec<Vec<u64>> = cpc.iter().map(|r| vec![20; r.len()]).collect();
    let kws = (0..cpc.len()).map(|k| format!("kw {k}")).collect();
    WeeklyPanel::from_series(kws, IsoWeek::new(2021, 1).unwrap(), &cpc, &clicks).unwrap()
}

fn micro_panel(n: usize, t: usize) -> WeeklyPanel {
    panel_from(
        (0..n)
            .map(|k| (0..t).map(|i| 1.0 + 0.2 * k as f64 + 0.5 * ((i + k) as f64 * 0.7).sin().abs()).collect())
            .collect(),
    )
}

fn ring(n: usize) -> Adjacency {
    Adjacency::new((0..n).map(|i| vec![((i + 1) % n, 0.6), ((i + 3) % n, 0.4)]).collect()).unwrap()
}

fn core_features(p: &WeeklyPanel) -> FeatureTensor {
    let cfg = FeatureConfig {
        own_lags: vec![1, 2],
        ..FeatureConfig::default()
    };
    build_features(p, Proxies::default(), &cfg).unwrap()
}

fn micro_batch(seed: u64) -> (WindowBatch, Params) {
    let p = micro_panel(6, 20);
    let x = core_features(&p);
    let scaling = InputScaling::fit(&x, 16).unwrap();
    let horizons = [1, 2];
    let windows = [5, 8, 11]
        .iter()
        .map(|&t| Window::build(&x, &p, &scaling, t, 4, &horizons, 20).unwrap())
        .collect();
    let supports = Supports::new(&ring(6), 2).unwrap();
    let dims = Dims {
        features: x.n_features(),
        hidden: 4,
        supports: supports.count(),
        horizons: 2,
    };
    let mut params = Params::init(dims, seed);
    // move away from the symmetric initial biases
    let mut rng = seed::stream(seed, "test/jitter");
    params.data.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
    (WindowBatch { supports, windows }, params)
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    for seed in [1, 2, 3] {
        let (batch, params) = micro_batch(seed);
        let (_, grad) = batch.loss_and_gradient(&params);
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus.data[i] += eps;
            let mut minus = params.clone();
            minus.data[i] -= eps;
            let fd = (batch.loss(&plus) - batch.loss(&minus)) / (2.0 * eps);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-4, "seed {seed}: max relative error {worst:e}");
    }
}

#[test]
fn constant_target_on_identity_graph_fits() {
    let p = panel_from(vec![vec![2.0; 40]; 3]);
    let x = core_features(&p);
    let hyper = GraphHyper {
        hidden: 4,
        window: 4,
        step_size: 1e-2,
        max_epochs: 60,
        patience: 60,
        ..GraphHyper::default()
    };
    let task = ForecastTask {
        horizons: vec![1, 3],
        window: 4,
    };
    let m = fit_graph_forecaster(&x, &p, &Adjacency::identity(3), &task, &hyper, 32).unwrap();
    let f = m.predict(&x, &p, &[20, 25], &[1, 3]).unwrap();
    for e in &f.entries {
        assert!((e.prediction - 2.0).abs() < 1e-2, "{e:?}");
    }
}

#[test]
fn full_batch_descent_is_monotone() {
    let p = micro_panel(5, 30);
    let x = core_features(&p);
    let hyper = GraphHyper {
        hidden: 4,
        window: 4,
        step_size: 1e-4,
        batch: usize::MAX,
        max_epochs: 25,
        patience: 100,
        optimizer: Optimizer::Sgd,
        clip: None,
        validation_fraction: 0.0,
        ..GraphHyper::default()
    };
    let task = ForecastTask {
        horizons: vec![1],
        window: 4,
    };
    let m = fit_graph_forecaster(&x, &p, &ring(5), &task, &hyper, 30).unwrap();
    let losses: Vec<f64> = m.log.epochs.iter().map(|e| e.1).collect();
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{losses:?}");
    }
}

fn small_fit(seed: u64, p: &WeeklyPanel, g: &Adjacency) -> GraphForecaster {
    let x = core_features(p);
    let hyper = GraphHyper {
        hidden: 6,
        window: 4,
        max_epochs: 5,
        seed,
        ..GraphHyper::default()
    };
    let task = ForecastTask {
        horizons: vec![1, 2],
        window: 4,
    };
    fit_graph_forecaster(&x, p, g, &task, &hyper, 24).unwrap()
}

#[test]
fn training_is_deterministic() {
    let p = micro_panel(6, 30);
    let a = small_fit(9, &p, &ring(6));
    let b = small_fit(9, &p, &ring(6));
    assert_eq!(a, b);
    let c = small_fit(10, &p, &ring(6));
    assert_ne!(a.params, c.params);
}

#[test]
fn keyword_permutation_permutes_forecasts() {
    let p = micro_panel(6, 30);
    let g = ring(6);
    let m = small_fit(4, &p, &g);
    let x = core_features(&p);
    let f = m.predict(&x, &p, &[26], &[1, 2]).unwrap();

    let order = [3, 0, 5, 1, 4, 2];
    let pp = p.select(&order, 0..30);
    let xp = x.permuted(&order);
    let mp = GraphForecaster {
        graph: g.permuted(&order),
        ..m.clone()
    };
    let fp = mp.predict(&xp, &pp, &[26], &[1, 2]).unwrap();
    for e in &fp.entries {
        let orig = f
            .entries
            .iter()
            .find(|o| o.keyword == order[e.keyword] && o.horizon == e.horizon)
            .unwrap();
        assert!((orig.prediction - e.prediction).abs() < 1e-12);
    }
}

#[test]
fn preconditions_are_enforced() {
    let p = micro_panel(4, 30);
    let x = core_features(&p);
    let task = ForecastTask::default();
    let off = Adjacency::new(vec![vec![(1, 0.5)], vec![(0, 1.0)], vec![(3, 1.0)], vec![(2, 1.0)]]).unwrap();
    assert!(matches!(
        fit_graph_forecaster(&x, &p, &off, &task, &GraphHyper::default(), 20),
        Err(Error::Data(_))
    ));
    let m = small_fit(1, &micro_panel(6, 30), &ring(6));
    let x6 = core_features(&micro_panel(6, 30));
    assert!(m.predict(&x6, &micro_panel(6, 30), &[26], &[6]).is_err());
}

#[test]
fn checkpoint_round_trip_keeps_forecasts() {
    let p = micro_panel(6, 30);
    let m = small_fit(2, &p, &ring(6));
    let x = core_features(&p);
    let dir = tempfile::tempdir().unwrap();
    let model = crate::models::Model::Graph(m.clone());
    crate::models::save_model(dir.path(), &model).unwrap();
    let back = crate::models::load_model(dir.path()).unwrap();
    let a = m.predict(&x, &p, &[25, 27], &[1, 2]).unwrap();
    let b = back.predict(Some(&x), &p, &[25, 27], &[1, 2]).unwrap();
    for (ea, eb) in a.entries.iter().zip(&b.entries) {
        assert!((ea.prediction - eb.prediction).abs() <= 1e-4 * ea.prediction.max(1.0));
    }
}
