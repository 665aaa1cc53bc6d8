use jbshap::learners::{net_init, sgd_train, LossKind, Optimizer, OutputActivation, Sample, TrainerConfig};

fn central_difference(h: f64, f: impl Fn(f64) -> f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

#[test]
fn backprop_matches_finite_differences() {
    let h = 1e-5;
    for (output, loss) in [
        (OutputActivation::Identity, LossKind::Mse),
        (OutputActivation::Sigmoid, LossKind::Bce),
        (OutputActivation::Identity, LossKind::Composite { first: 1.0, second: 3.0 }),
    ] {
        let net = net_init::<f64>(&[3, 5, 4, 1], 17).unwrap().with_output(output);
        let samples: Vec<Sample> = (0..6)
            .map(|k| {
                let k = k as f64;
                let s = Sample::new(vec![0.3 * k - 0.7, (k * 1.3).sin(), 0.5 - 0.1 * k], if k > 2.0 { 1.0 } else { 0.0 })
                    .weighted(1.0 + 0.25 * k);
                if k as usize % 2 == 0 {
                    s
                } else {
                    s.in_component(jbshap::learners::Component::Second)
                }
            })
            .collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let (_, grad) = net.loss_and_gradient(&refs, loss).unwrap();
        let analytic: Vec<f64> = grad.weights.iter().zip(&grad.biases).flat_map(|(w, b)| w.iter().chain(b).copied()).collect();
        let base = net.flat_parameters();
        assert_eq!(analytic.len(), base.len());
        for (i, &g) in analytic.iter().enumerate() {
            let numeric = central_difference(h, |e| {
                let mut p = base.clone();
                p[i] += e;
                let mut n = net.clone();
                n.set_flat_parameters(&p).unwrap();
                n.loss_and_gradient(&refs, loss).unwrap().0
            });
            let scale = g.abs().max(numeric.abs()).max(1e-3);
            assert!((g - numeric).abs() / scale < 1e-4, "param {i} ({loss:?}): {g} vs {numeric}");
        }
    }
}

#[test]
fn fits_a_line_with_sgd_and_adam() {
    let samples: Vec<Sample> = (0..100).map(|k| {
        let x = k as f64 / 50.0 - 1.0;
        Sample::new(vec![x], 2.0 * x)
    }).collect();
    for opt in [Optimizer::Sgd, Optimizer::adam()] {
        let lr = if opt == Optimizer::Sgd { 0.1 } else { 0.01 };
        let cfg = TrainerConfig::new(lr, 8, 400, 3, LossKind::Mse).with_optimizer(opt);
        let (net, report) = sgd_train(net_init(&[1, 1], 1).unwrap(), &samples, &cfg).unwrap();
        assert!(report.last.total < 1e-6, "{opt:?}: {}", report.last.total);
        let slope = net.predict(&[1.0]) - net.predict(&[0.0]);
        assert!((slope - 2.0).abs() < 0.05, "{opt:?}: slope {slope}");
        assert!((net.predict(&[0.5]) - 1.0).abs() < 1e-3);
    }
}

#[test]
fn training_is_deterministic() {
    let samples: Vec<Sample> = (0..30).map(|k| Sample::new(vec![k as f64 / 10.0, 1.0], (k % 3) as f64)).collect();
    let cfg = TrainerConfig::new(0.01, 4, 5, 9, LossKind::Mse).with_optimizer(Optimizer::adam());
    let a = sgd_train(net_init(&[2, 6, 1], 4).unwrap(), &samples, &cfg).unwrap().0;
    let b = sgd_train(net_init(&[2, 6, 1], 4).unwrap(), &samples, &cfg).unwrap().0;
    assert_eq!(a, b);
}
