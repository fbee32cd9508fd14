use ndarray::{array, Array2};
use rand_distr::{Distribution, StandardNormal};

use dppm::diffkit::central_gradient;
use dppm::harness::{gen_toy_dataset, DatasetSpec};
use dppm::privacy::{Neighborhood, RrConfig};
use dppm::rng::{stream, Stream};
use dppm::scoremodel::{init_params, Activation, EmbeddingMatrix, MlpSpec, Params};
use dppm::training::{loss_and_grad, ssm_rr_loss, train, ProjectionTriple, TrainConfig};

fn triples(v: &Array2<f64>, v_r: &Array2<f64>) -> Vec<ProjectionTriple> {
    (0..v.nrows())
        .map(|i| ProjectionTriple {
            v: v.row(i).to_vec(),
            v_r: v_r.row(i).to_vec(),
            neighborhood: Neighborhood {
                center_index: i,
                member_indices: vec![i],
            },
        })
        .collect()
}

#[test]
fn tape_gradient_matches_finite_differences_on_random_networks() {
    let mut rng = stream(77, Stream::ModelInit);
    for trial in 0..50u64 {
        let dim = 2 + (trial % 3) as usize;
        let hidden = match trial % 4 {
            0 => vec![],
            1 => vec![5],
            2 => vec![8, 3],
            _ => vec![16],
        };
        let act = if trial % 2 == 0 { Activation::Tanh } else { Activation::Softplus };
        let spec = MlpSpec::new(dim, hidden, act, trial);
        let mut flat = init_params(&spec).unwrap().into_flat();
        for x in flat.iter_mut() {
            *x += 0.2 * Distribution::<f64>::sample(&StandardNormal, &mut rng);
        }
        let params = Params::from_flat(spec.clone(), flat.clone()).unwrap();
        let mut gauss = || Array2::from_shape_simple_fn((4, dim), || StandardNormal.sample(&mut rng));
        let (u, v, v_r) = (gauss(), gauss(), gauss());
        let t = triples(&v, &v_r);

        let (loss, grad) = loss_and_grad(&params, &u, &v, &v_r).unwrap();
        assert!((loss - ssm_rr_loss(&params, &u, &t).unwrap()).abs() < 1e-10);
        let numeric = central_gradient(
            |theta| ssm_rr_loss(&Params::from_flat(spec.clone(), theta.to_vec()).unwrap(), &u, &t).unwrap(),
            &flat,
            1e-5,
        );
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (a, n) in grad.iter().zip(&numeric) {
            assert!(
                (a - n).abs() <= 1e-4 * a.abs().max(1e-3 * scale),
                "trial {trial}: analytic {a} numeric {n}"
            );
        }
    }
}

#[test]
fn exact_gaussian_score_has_expected_loss() {
    // W = −I on N(0, I): E[v_rᵀ(−I)v_r] = −d, E[½(vᵀ(−u))²] = d/2
    let d = 3;
    let p = Params::linear(-Array2::eye(d), vec![0.0; d]).unwrap();
    let mut rng = stream(3, Stream::Projections);
    let n = 20_000;
    let mut g = || Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(&mut rng));
    let (u, v) = (g(), g());
    let (loss, _) = loss_and_grad(&p, &u, &v, &v).unwrap();
    assert!((loss + d as f64 / 2.0).abs() < 0.1, "loss {loss}");
}

#[test]
fn zero_network_has_zero_loss() {
    let p = Params::linear(Array2::zeros((2, 2)), vec![0.0, 0.0]).unwrap();
    let u = array![[0.3, -2.0]];
    let v = array![[1.0, 1.0]];
    let (loss, grad) = loss_and_grad(&p, &u, &v, &v).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(grad.len(), 6);
}

fn gauss_setup() -> (dppm::data::Dataset, EmbeddingMatrix, MlpSpec) {
    let data = gen_toy_dataset(DatasetSpec::Gauss2d, 10_000, 4).unwrap();
    let e = EmbeddingMatrix::seeded(1, 0, 4).unwrap();
    (data, e, MlpSpec::new(2, vec![], Activation::Tanh, 4))
}

#[test]
fn linear_model_recovers_gaussian_score() {
    let (data, e, spec) = gauss_setup();
    let mut cfg = TrainConfig::new(RrConfig::new(50.0, 10).unwrap());
    cfg.learning_rate = 1e-2;
    cfg.seed = 1;
    let out = train(&data, &e, &spec, &cfg).unwrap();
    let (w, _) = &out.params.layer_views()[0];
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { -1.0 } else { 0.0 };
            assert!((w[[i, j]] - target).abs() < 0.1, "W = {w}");
        }
    }
    assert_eq!(out.ledger.report(), (50.0, 0.0));
    assert_eq!(out.ledger.mechanism_invocations(), 64 * 2000);
}

#[test]
fn infinite_budget_matches_non_private_run() {
    let (data, e, spec) = gauss_setup();
    let mut private = TrainConfig::new(RrConfig::new(f64::INFINITY, 10).unwrap());
    private.iterations = 200;
    private.seed = 8;
    let mut plain = private.clone();
    plain.privatize = false;
    let a = train(&data, &e, &spec, &private).unwrap();
    let b = train(&data, &e, &spec, &plain).unwrap();
    assert_eq!(a.loss_trace, b.loss_trace);
    assert_eq!(b.ledger.mechanism_invocations(), 0);
    assert!(b.ledger.epsilon().is_infinite());
}

#[test]
fn same_seed_gives_identical_trace() {
    let (data, e, spec) = gauss_setup();
    let mut cfg = TrainConfig::new(RrConfig::new(1.0, 10).unwrap());
    cfg.iterations = 100;
    let a = train(&data, &e, &spec, &cfg).unwrap();
    let b = train(&data, &e, &spec, &cfg).unwrap();
    assert_eq!(a.loss_trace, b.loss_trace);
    cfg.seed = 1;
    let c = train(&data, &e, &spec, &cfg).unwrap();
    assert_ne!(a.loss_trace, c.loss_trace);
}

#[test]
fn configuration_errors_abort_before_training() {
    let (data, e, spec) = gauss_setup();
    let mut cfg = TrainConfig::new(RrConfig::new(1.0, 10).unwrap());
    cfg.iterations = 0;
    assert!(matches!(train(&data, &e, &spec, &cfg), Err(dppm::Error::Config(_))));
    let wide = MlpSpec::new(3, vec![], Activation::Tanh, 0);
    cfg.iterations = 1;
    assert!(matches!(train(&data, &e, &wide, &cfg), Err(dppm::Error::Config(_))));
}

#[test]
fn divergence_reports_iteration() {
    let (data, e, _) = gauss_setup();
    let spec = MlpSpec::new(2, vec![4], Activation::Softplus, 0);
    let mut cfg = TrainConfig::new(RrConfig::new(1.0, 10).unwrap());
    cfg.optimizer = dppm::training::Optimizer::Sgd;
    cfg.learning_rate = 1e12;
    cfg.iterations = 50;
    match train(&data, &e, &spec, &cfg) {
        Err(dppm::Error::TrainingDiverged { iteration }) => assert!(iteration >= 1 && iteration <= 50),
        other => panic!("expected divergence, got {:?}", other.map(|o| o.loss_trace.len())),
    }
}
