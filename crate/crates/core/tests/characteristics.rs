use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;
use tsbench::characteristics::{adf_statistic, autocorrelation, forecastability, AdfLags, AdfTrend};

#[derive(Deserialize)]
struct Case {
    name: String,
    lags: usize,
    trend: String,
    statistic: f64,
    nobs: usize,
    gamma: f64,
    resid_var: f64,
    series: Vec<f64>,
}

fn cases() -> Vec<Case> {
    let raw = include_str!("fixtures/adf_reference.json");
    serde_json::from_str(raw).unwrap()
}

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn adf_matches_reference_regressions() {
    for c in cases() {
        let trend = match c.trend.as_str() {
            "c" => AdfTrend::Constant,
            "ct" => AdfTrend::ConstantTrend,
            other => panic!("unknown trend {other}"),
        };
        let r = adf_statistic(&c.series, AdfLags::Fixed(c.lags), trend).unwrap();
        assert_eq!(r.nobs, c.nobs, "{}", c.name);
        assert!(
            (r.statistic - c.statistic).abs() < 1e-8,
            "{}: {} vs {}",
            c.name,
            r.statistic,
            c.statistic
        );
        assert!((r.gamma_hat - c.gamma).abs() < 1e-9, "{}", c.name);
        assert!((r.residual_variance - c.resid_var).abs() < 1e-9, "{}", c.name);
        assert_eq!(r.beta_hat.is_some(), trend == AdfTrend::ConstantTrend);
    }
}

#[test]
fn adf_single_precision_tracks_double() {
    for c in cases().into_iter().filter(|c| c.trend == "c") {
        let s32: Vec<f32> = c.series.iter().map(|&x| x as f32).collect();
        let r = adf_statistic(&s32, AdfLags::Fixed(c.lags), AdfTrend::Constant).unwrap();
        assert!(
            (r.statistic as f64 - c.statistic).abs() < 1e-2 * c.statistic.abs(),
            "{}",
            c.name
        );
    }
}

#[test]
fn white_noise_is_strongly_stationary() {
    let s = normals(11, 1000);
    let r = adf_statistic(&s, AdfLags::Fixed(1), AdfTrend::Constant).unwrap();
    assert!(r.statistic < -10.0, "{}", r.statistic);
}

#[test]
fn random_walk_is_not_rejected() {
    let walk: Vec<f64> = normals(11, 1000)
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let r = adf_statistic(&walk, AdfLags::Fixed(1), AdfTrend::Constant).unwrap();
    assert!(r.statistic > -2.5, "{}", r.statistic);
}

#[test]
fn ar1_autocorrelation_recovers_coefficient() {
    let e = normals(7, 10_000);
    let mut s = Vec::with_capacity(e.len());
    let mut prev = 0.0;
    for x in e {
        prev = 0.9 * prev + x;
        s.push(prev);
    }
    let tau = autocorrelation(&s, 1).unwrap();
    assert!((tau - 0.9).abs() <= 0.03, "{tau}");
}

#[test]
fn white_noise_is_not_forecastable() {
    let s = normals(3, 4096);
    let phi = forecastability(&s).unwrap();
    assert!(phi <= 0.1, "{phi}");
}

#[test]
fn forecastability_stays_in_unit_interval() {
    for seed in 0..10 {
        let mut s = normals(seed, 300);
        for (t, x) in s.iter_mut().enumerate() {
            *x += (t as f64 * 0.3).sin() * seed as f64;
        }
        let phi = forecastability(&s).unwrap();
        assert!((0.0..=1.0).contains(&phi));
    }
}
