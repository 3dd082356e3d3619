use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsbench::panel::{compute_returns, cross_sectional_normalize, split_chronological};
use tsbench::predictors::{
    add_derived_features, composite_loss, composite_loss_grad, fit_ridge, mean_daily_ic, predict_blsw, predict_csm,
    ranker_objective, ridge_gradient, train, train_linear_ranker, PredictionContext, Predictor, PredictorKind,
    PredictorSpec, RankerOptions, SampleSet, TrainedModel,
};
use tsbench::segment::MovementPattern;
use tsbench::synth::{generate_panel, RegimeSpec};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `days` groups of `n` rows with `y = X·w_true + noise·ε`.
fn linear_samples(seed: u64, days: usize, n: usize, w_true: &[f64], noise: f64) -> SampleSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = w_true.len();
    let mut set = SampleSet {
        dim,
        x: vec![],
        y: vec![],
        stocks: vec![],
        days: vec![],
        groups: vec![],
    };
    for d in 0..days {
        let start = set.y.len();
        for i in 0..n {
            let row: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
            let y = row.iter().zip(w_true).map(|(a, b)| a * b).sum::<f64>() + noise * normal(&mut rng);
            set.x.extend(row);
            set.y.push(y);
            set.stocks.push(i);
            set.days.push(d);
        }
        set.groups.push(start..set.y.len());
    }
    set
}

#[test]
fn csm_order_matches_brute_force() {
    let specs: Vec<RegimeSpec> = (0..12).map(|_| RegimeSpec::volatile()).collect();
    let p = generate_panel::<f64>(12, 60, &specs, 5).unwrap();
    let r = compute_returns(&p).unwrap();
    for day in [20, 35, 59] {
        let s = predict_csm(&r, day, 10).unwrap();
        let brute: Vec<f64> = (0..12)
            .map(|i| p.close(i, day).unwrap() / p.close(i, day - 10).unwrap() - 1.0)
            .collect();
        let mut a: Vec<usize> = (0..12).collect();
        let mut b = a.clone();
        a.sort_by(|&x, &y| s[y].unwrap().partial_cmp(&s[x].unwrap()).unwrap());
        b.sort_by(|&x, &y| brute[y].partial_cmp(&brute[x]).unwrap());
        assert_eq!(a, b);
        let blsw = predict_blsw(&r, day, 10).unwrap();
        let mut c: Vec<usize> = (0..12).collect();
        c.sort_by(|&x, &y| blsw[y].unwrap().partial_cmp(&blsw[x].unwrap()).unwrap());
        c.reverse();
        assert_eq!(a, c);
    }
}

#[test]
fn ridge_fits_realizable_target() {
    let w = [0.5, -1.0, 2.0, 0.0, 0.25];
    let s = linear_samples(1, 20, 10, &w, 0.0);
    let fit = fit_ridge(&s, 1e-10).unwrap();
    let pred = s.predict(&fit);
    let mse = pred.iter().zip(&s.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / s.len() as f64;
    assert!(mse < 1e-10, "{mse}");
}

#[test]
fn heavy_penalty_shrinks_weights() {
    let s = linear_samples(2, 20, 10, &[1.0, 2.0, 3.0], 0.1);
    let fit = fit_ridge(&s, 1e12).unwrap();
    assert!(fit.iter().all(|w| w.abs() < 1e-8));
    assert!(fit_ridge(&s, 0.0).is_err());
    let tiny = linear_samples(2, 1, 3, &[1.0, 2.0, 3.0], 0.1);
    assert!(fit_ridge(&tiny, 1.0).is_err());
}

#[test]
fn ridge_solution_is_stationary() {
    let s = linear_samples(3, 30, 10, &[0.3, -0.2, 0.1, 0.7], 0.5);
    let fit = fit_ridge(&s, 2.0).unwrap();
    let g = ridge_gradient(&s, &fit, 2.0);
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm < 1e-6, "{norm}");
}

#[test]
fn loss_invariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let y: Vec<f64> = (0..15).map(|_| normal(&mut rng)).collect();
    let r: Vec<f64> = (0..15).map(|_| normal(&mut rng)).collect();
    let base = composite_loss(&y, &r, 5.0).unwrap();
    let perm: Vec<usize> = (0..15).rev().collect();
    let yp: Vec<f64> = perm.iter().map(|&k| y[k]).collect();
    let rp: Vec<f64> = perm.iter().map(|&k| r[k]).collect();
    assert!((composite_loss(&yp, &rp, 5.0).unwrap() - base).abs() < 1e-12);
    let sse: f64 = y.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum();
    assert!((composite_loss(&y, &r, 0.0).unwrap() - sse).abs() < 1e-12);
    let pair = |y: &[f64]| {
        let p = composite_loss(y, &r, 1.0).unwrap();
        let s: f64 = y.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum();
        p - s
    };
    let shifted: Vec<f64> = y.iter().map(|v| v + 3.0).collect();
    assert!((pair(&y) - pair(&shifted)).abs() < 1e-10);
}

#[test]
fn gradient_matches_finite_differences() {
    let s = linear_samples(5, 6, 8, &[0.4, -0.3, 0.2], 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 10 {
        let w: Vec<f64> = (0..3).map(|_| normal(&mut rng)).collect();
        let (_, g) = ranker_objective(&s, &w, 5.0, None);
        let h = 1e-6;
        let mut ok = true;
        let mut fd = [0.0; 3];
        for j in 0..3 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            // skip points where a hinge flips inside the stencil
            let (lp, gp) = ranker_objective(&s, &wp, 5.0, None);
            let (lm, gm) = ranker_objective(&s, &wm, 5.0, None);
            if gp.iter().zip(&gm).any(|(a, b)| (a - b).abs() > 1e-3 * (1.0 + a.abs())) {
                ok = false;
            }
            fd[j] = (lp - lm) / (2.0 * h);
        }
        if !ok {
            continue;
        }
        for j in 0..3 {
            let rel = (g[j] - fd[j]).abs() / g[j].abs().max(1e-8);
            assert!(rel < 1e-5, "component {j}: {} vs {} ({rel})", g[j], fd[j]);
        }
        checked += 1;
    }
}

#[test]
fn per_day_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
    let r: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
    let (_, g) = composite_loss_grad(&y, &r, 5.0, None);
    for j in 0..6 {
        let h = 1e-7;
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[j] += h;
        ym[j] -= h;
        let fd = (composite_loss(&yp, &r, 5.0).unwrap() - composite_loss(&ym, &r, 5.0).unwrap()) / (2.0 * h);
        assert!((g[j] - fd).abs() / g[j].abs().max(1e-8) < 1e-5);
    }
}

fn ranker_opts(lr: f64, epochs: usize) -> RankerOptions<f64> {
    RankerOptions {
        learning_rate: lr,
        epochs,
        patience: epochs,
        eta: 5.0,
        sampled_pairs: None,
        seed: 0,
    }
}

#[test]
fn training_loss_never_increases() {
    // fixed-step descent on the hinge term zigzags at larger steps or noisier targets
    let s = linear_samples(9, 30, 20, &[0.02, -0.01, 0.015, 0.0], 0.005);
    let fit = train_linear_ranker(&s, &s, &ranker_opts(1e-4, 200)).unwrap();
    for w in fit.log.windows(2) {
        assert!(w[1].train_loss <= w[0].train_loss + 1e-15, "{:?}", w);
    }
    assert!(fit.log.last().unwrap().train_loss < fit.log[0].train_loss);
}

#[test]
fn ranker_recovers_linear_rule() {
    let w_true = [0.02, -0.01, 0.015, 0.005, -0.02];
    let train_set = linear_samples(10, 100, 30, &w_true, 0.01);
    let valid = linear_samples(11, 20, 30, &w_true, 0.01);
    let test = linear_samples(12, 50, 30, &w_true, 0.01);
    let fit = train_linear_ranker(
        &train_set,
        &valid,
        &RankerOptions {
            patience: 20,
            ..ranker_opts(1e-3, 200)
        },
    )
    .unwrap();
    let ic = mean_daily_ic(&test, &fit.weights).unwrap();
    assert!(ic > 0.8, "{ic}");
}

#[test]
fn sampled_pairs_are_deterministic() {
    let s = linear_samples(13, 10, 40, &[0.01, 0.02], 0.01);
    let opts = RankerOptions {
        sampled_pairs: Some(5),
        seed: 7,
        ..ranker_opts(1e-3, 30)
    };
    let a = train_linear_ranker(&s, &s, &opts).unwrap();
    let b = train_linear_ranker(&s, &s, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn divergence_is_reported() {
    let s = linear_samples(14, 10, 10, &[1.0, 1.0], 0.1);
    let err = train_linear_ranker(&s, &s, &ranker_opts(10.0, 2000)).unwrap_err();
    assert!(matches!(err, tsbench::Error::Diverged { .. }), "{err}");
}

#[test]
fn end_to_end_training_on_synthetic_panel() {
    let specs: Vec<RegimeSpec> = (0..20)
        .map(|k| RegimeSpec::new(MovementPattern::Volatile, 0.0, 0.02).with_ar1(if k % 2 == 0 { 0.3 } else { -0.3 }))
        .collect();
    let p = generate_panel::<f64>(20, 120, &specs, 21).unwrap();
    let r = compute_returns(&p).unwrap();
    let feats = add_derived_features(&p).unwrap();
    let norm = cross_sectional_normalize(&feats, &["return", "range", "body", "volume"]).unwrap();
    let ctx = PredictionContext::new(&norm.panel, &r).unwrap();
    let split = split_chronological(120, (7, 1, 2)).unwrap();
    for kind in [
        PredictorKind::Csm,
        PredictorKind::Blsw,
        PredictorKind::Ridge,
        PredictorKind::LinearRanker,
    ] {
        let spec = PredictorSpec {
            lookback: 5,
            window: 5,
            epochs: 20,
            ..PredictorSpec::of_kind(kind)
        };
        let model: TrainedModel<f64> = train(&spec, &ctx, &split).unwrap();
        assert_eq!(model.weights.len(), if kind.is_linear() { 20 } else { 0 });
        let scores = model.predict(&ctx, split.test.start - 1..split.test.end - 1).unwrap();
        assert!((0..20).all(|i| scores.get(i, split.test.start).is_some()));
        assert!(scores.get(0, 10).is_none());
        let back = TrainedModel::<f64>::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}
