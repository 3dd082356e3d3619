use std::collections::BTreeMap;

use tsbench::characteristics::{pattern_aggregates, CharacteristicsOptions};
use tsbench::panel::compute_returns;
use tsbench::segment::{classify_segment, flag_black_swans, MovementPattern};
use tsbench::synth::{generate_cohorts, generate_panel, generate_regime_cohorts, RegimeSpec};
use tsbench::PricePanel64;

#[test]
fn uptrend_beats_downtrend_in_cumulative_return() {
    let up = RegimeSpec::new(MovementPattern::Uptrend, 0.002, 0.02);
    let down = RegimeSpec::new(MovementPattern::Downtrend, -0.002, 0.02);
    let mut wins = 0;
    for seed in 0..100 {
        let m = generate_cohorts::<f64>(10, 250, &[up, down], seed).unwrap();
        let mut sums: BTreeMap<MovementPattern, f64> = BTreeMap::new();
        for (i, id) in m.panel.stock_ids().iter().enumerate() {
            let cum = m.panel.close(i, 249).unwrap() / m.panel.close(i, 0).unwrap() - 1.0;
            *sums.entry(m.truth[id]).or_default() += cum;
        }
        if sums[&MovementPattern::Uptrend] > sums[&MovementPattern::Downtrend] {
            wins += 1;
        }
    }
    assert!(wins >= 99, "{wins}/100");
}

#[test]
fn generated_bars_are_consistent() {
    let specs = vec![RegimeSpec::extreme(), RegimeSpec::uptrend(), RegimeSpec::volatile()];
    let p: PricePanel64 = generate_panel(3, 300, &specs, 42).unwrap();
    let f = |n: &str| p.feature_index(n).unwrap();
    for i in 0..3 {
        for t in 0..300 {
            let o = p.value(i, t, f("open")).unwrap();
            let h = p.value(i, t, f("high")).unwrap();
            let l = p.value(i, t, f("low")).unwrap();
            let c = p.value(i, t, f("close")).unwrap();
            assert!(h >= o.max(c) && l <= o.min(c) && l > 0.0);
            assert!(p.value(i, t, f("volume")).unwrap() > 0.0);
        }
    }
}

#[test]
fn segmenter_recovers_trend_cohorts() {
    let (mut hit, mut total) = (0, 0);
    let (mut tp, mut pos, mut fp, mut neg) = (0, 0, 0, 0);
    for seed in 0..50 {
        let m = generate_regime_cohorts::<f64>(10, seed).unwrap();
        let r = compute_returns(&m.panel).unwrap();
        let flagged = flag_black_swans(&r, 0..250, 5.0).unwrap();
        let lab = classify_segment(&r, 0..250, 10, 5.0).unwrap();
        for (id, &truth) in &m.truth {
            if truth == MovementPattern::Extreme {
                pos += 1;
                tp += flagged.contains(id) as usize;
            } else {
                neg += 1;
                fp += flagged.contains(id) as usize;
            }
            if matches!(truth, MovementPattern::Uptrend | MovementPattern::Downtrend) {
                total += 1;
                hit += (lab.labels.get(id) == Some(&truth)) as usize;
            }
        }
    }
    let recovery = hit as f64 / total as f64;
    let tpr = tp as f64 / pos as f64;
    let fpr = fp as f64 / neg as f64;
    eprintln!("recovery {recovery:.3} tpr {tpr:.3} fpr {fpr:.3}");
    assert!(recovery >= 0.9 && tpr >= 0.95 && fpr <= 0.05);
}

#[test]
fn forecastability_orders_patterns() {
    let mut ok = 0;
    let opts = CharacteristicsOptions::default();
    for seed in 0..50 {
        let m = generate_regime_cohorts::<f64>(10, seed).unwrap();
        let r = compute_returns(&m.panel).unwrap();
        let lab = classify_segment(&r, 0..250, 10, 5.0).unwrap();
        let rows = pattern_aggregates(&m.panel, &r, &lab, &opts).unwrap();
        let phi = |p| {
            rows.iter()
                .find(|r| r.pattern == p)
                .and_then(|r| r.forecastability)
                .unwrap()
        };
        let (u, v, e) = (
            phi(MovementPattern::Uptrend),
            phi(MovementPattern::Volatile),
            phi(MovementPattern::Extreme),
        );
        if seed < 3 {
            eprintln!("phi up {u:.3} vol {v:.3} ext {e:.3}");
        }
        if u > v && v > e {
            ok += 1;
        }
    }
    eprintln!("ordering held in {ok}/50");
    assert!(ok >= 45);
}
