use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use tsbench::backtest::{run_backtest, BacktestConfig};
use tsbench::metrics::{
    daily_ic_series, error_metrics, information_ratio_of, per_stock_ic_series, portfolio_metrics, Correlation, IcMode,
    MetricsReport, METRIC_COLUMNS,
};
use tsbench::panel::{compute_returns, ReturnPanel, ScorePanel};
use tsbench::segment::MovementPattern;
use tsbench::synth::{generate_panel, RegimeSpec};
use tsbench::PricePanel64;

fn setup(n: usize, days: usize, seed: u64) -> (PricePanel64, ReturnPanel<f64>) {
    let specs: Vec<RegimeSpec> = (0..n)
        .map(|_| RegimeSpec::new(MovementPattern::Volatile, 0.0, 0.02))
        .collect();
    let p = generate_panel(n, days, &specs, seed).unwrap();
    let r = compute_returns(&p).unwrap();
    (p, r)
}

fn shifted(r: &ReturnPanel<f64>, sign: f64) -> ScorePanel<f64> {
    let mut s = ScorePanel::aligned_with(r);
    for t in 0..r.n_days() - 1 {
        let col: Vec<Option<f64>> = r.values.column(t + 1).iter().map(|v| v.map(|x| sign * x)).collect();
        s.set_day(t, &col);
    }
    s
}

/// Pearson on midranks, written without the library helpers.
fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let eq = v.iter().filter(|b| *b == a).count() as f64;
                less + (eq + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[test]
fn perfect_and_inverted_predictors() {
    let (_, r) = setup(30, 60, 1);
    for (sign, want) in [(1.0, 1.0), (-1.0, -1.0)] {
        let s = shifted(&r, sign);
        for mode in [Correlation::Pearson, Correlation::Spearman] {
            let ic = daily_ic_series(&s, &r, mode, 1..59).unwrap();
            assert!(ic.iter().all(|v| (v.unwrap() - want).abs() < 1e-9));
        }
    }
}

#[test]
fn spearman_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (_, r) = setup(30, 5, 3);
    let mut s = ScorePanel::aligned_with(&r);
    let day: Vec<Option<f64>> = (0..30)
        .map(|k| {
            Some(if k % 7 == 0 {
                0.5
            } else {
                StandardNormal.sample(&mut rng)
            })
        })
        .collect();
    s.set_day(2, &day);
    let got = daily_ic_series(&s, &r, Correlation::Spearman, 2..3).unwrap()[0].unwrap();
    let x: Vec<f64> = day.iter().map(|v| v.unwrap()).collect();
    let y: Vec<f64> = (0..30).map(|i| r.get(i, 3).unwrap()).collect();
    assert!((got - brute_spearman(&x, &y)).abs() < 1e-12);
}

#[test]
fn rank_ic_ignores_monotone_transforms() {
    let (_, r) = setup(25, 20, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s = ScorePanel::aligned_with(&r);
    let mut t2 = ScorePanel::aligned_with(&r);
    for t in 1..19 {
        let day: Vec<Option<f64>> = (0..25).map(|_| Some(StandardNormal.sample(&mut rng))).collect();
        let warped: Vec<Option<f64>> = day.iter().map(|v| v.map(|x: f64| x.exp() * 3.0 + x.powi(3))).collect();
        s.set_day(t, &day);
        t2.set_day(t, &warped);
    }
    let a = daily_ic_series(&s, &r, Correlation::Spearman, 1..19).unwrap();
    let b = daily_ic_series(&t2, &r, Correlation::Spearman, 1..19).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.unwrap() - y.unwrap()).abs() < 1e-12);
    }
}

#[test]
fn thin_or_flat_days_are_masked() {
    let (_, r) = setup(5, 6, 6);
    let mut s = ScorePanel::aligned_with(&r);
    s.set_day(1, &[Some(1.0), Some(2.0), None, None, None]);
    s.set_day(2, &[Some(1.0); 5]);
    let ic = daily_ic_series(&s, &r, Correlation::Pearson, 1..3).unwrap();
    assert_eq!(ic, vec![None, None]);
    assert!(daily_ic_series(&s, &r, Correlation::Pearson, 1..6).is_err());
}

#[test]
fn icir_matches_two_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = Normal::new(0.03, 0.1).unwrap();
    let xs: Vec<f64> = (0..50).map(|_| d.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / 50.0;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 49.0;
    let got = information_ratio_of(&xs.iter().map(|&x| Some(x)).collect::<Vec<_>>()).unwrap();
    assert!((got - mean / var.sqrt()).abs() < 1e-12);
}

#[test]
fn error_metrics_match_scalar_loop() {
    let (_, r) = setup(10, 30, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut s = ScorePanel::aligned_with(&r);
    for t in 0..29 {
        let day: Vec<Option<f64>> = (0..10)
            .map(|i| {
                if (i + t) % 5 == 0 {
                    None
                } else {
                    Some(0.01 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                }
            })
            .collect();
        s.set_day(t, &day);
    }
    let (mse, mae) = error_metrics(&s, &r, 1..29).unwrap();
    let (mut a, mut b, mut n) = (0.0, 0.0, 0.0);
    for t in 1..29 {
        for i in 0..10 {
            if let (Some(y), Some(x)) = (s.get(i, t), r.get(i, t + 1)) {
                a += (y - x) * (y - x);
                b += (y - x).abs();
                n += 1.0;
            }
        }
    }
    assert!((mse - a / n).abs() < 1e-14 && (mae - b / n).abs() < 1e-14);
    let perfect = shifted(&r, 1.0);
    assert_eq!(error_metrics(&perfect, &r, 1..29).unwrap(), (0.0, 0.0));
    let mut off = ScorePanel::aligned_with(&r);
    for t in 0..29 {
        let col: Vec<Option<f64>> = r.values.column(t + 1).iter().map(|v| v.map(|x| x + 0.5)).collect();
        off.set_day(t, &col);
    }
    let (mse, mae) = error_metrics(&off, &r, 1..29).unwrap();
    assert!((mse - 0.25).abs() < 1e-12 && (mae - 0.5).abs() < 1e-12);
}

#[test]
fn volatility_scales_linearly() {
    let rp = [0.01, -0.02, 0.005, 0.013, -0.004];
    let rb = [0.0; 5];
    let a = portfolio_metrics(&rp, &rb).unwrap();
    let scaled: Vec<f64> = rp.iter().map(|x| x * 3.0).collect();
    let b = portfolio_metrics(&scaled, &rb).unwrap();
    assert!((b.avol - 3.0 * a.avol).abs() < 1e-14);
    assert!((a.asr.unwrap() - a.arr / a.avol).abs() < 1e-15);
    assert!(a.mdd <= 0.0);
}

#[test]
fn report_has_every_column() {
    let (p, r) = setup(20, 40, 10);
    let s = shifted(&r, 1.0);
    let state = run_backtest(
        &s,
        &p,
        &BacktestConfig {
            m: 5,
            n: 2,
            ..Default::default()
        },
        20..39,
    )
    .unwrap();
    let rep = MetricsReport::compute(&s, &r, &state, 20..38, IcMode::CrossSectional).unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    for col in METRIC_COLUMNS {
        assert!(v.get(col).is_some(), "{col}");
    }
    assert!((rep.ic.unwrap() - 1.0).abs() < 1e-9);
    assert!(rep.icir.is_none() || rep.icir.unwrap().is_finite());
    let temporal = MetricsReport::compute(&s, &r, &state, 20..38, IcMode::Temporal).unwrap();
    assert_eq!(temporal.ic_series.len(), 20);
    assert_eq!(
        per_stock_ic_series(&s, &r, Correlation::Pearson, 20..38).unwrap().len(),
        20
    );
}
