//! Seeded synthetic OHLCV markets.
//!
//! Each stock follows an AR(1) log-return process with optional Bernoulli
//! jumps and an optional pull of the log price back toward its start:
//!
//! ```text
//! x_t = drift + ar1·x_{t−1} − reversion·ln(p_{t−1}/100) + vol·ε_t + J_t
//! ```
//!
//! Every stock draws from its own ChaCha8 stream, so a stock's path depends
//! only on the seed and its index.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::panel::{PricePanel, REQUIRED_FEATURES};
use crate::segment::MovementPattern;
use crate::{Error, Result, Scalar};

pub const BASE_PRICE: f64 = 100.0;
pub const LOG_VOLUME_MEAN: f64 = 10.0;
pub const LOG_VOLUME_SD: f64 = 1.0;
pub const SEGMENT_DAYS: usize = 250;

/// Parameters of one stock's return process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub pattern: MovementPattern,
    pub daily_drift: f64,
    pub daily_vol: f64,
    #[serde(default)]
    pub jump_prob: f64,
    #[serde(default)]
    pub jump_scale: f64,
    #[serde(default)]
    pub ar1_coeff: f64,
    /// Daily pull of the log price toward its starting level, in `[0, 1)`.
    #[serde(default)]
    pub reversion: f64,
}

impl RegimeSpec {
    pub fn new(pattern: MovementPattern, daily_drift: f64, daily_vol: f64) -> Self {
        Self {
            pattern,
            daily_drift,
            daily_vol,
            jump_prob: 0.0,
            jump_scale: 0.0,
            ar1_coeff: 0.0,
            reversion: 0.0,
        }
    }

    pub fn with_jumps(mut self, prob: f64, scale: f64) -> Self {
        self.jump_prob = prob;
        self.jump_scale = scale;
        self
    }

    pub fn with_ar1(mut self, coeff: f64) -> Self {
        self.ar1_coeff = coeff;
        self
    }

    pub fn with_reversion(mut self, kappa: f64) -> Self {
        self.reversion = kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("regime {}: {msg}", self.pattern)));
        if !self.daily_drift.is_finite() {
            return bad("drift must be finite");
        }
        if !(self.daily_vol >= 0.0 && self.daily_vol.is_finite()) {
            return bad("volatility must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.jump_prob) {
            return bad("jump probability must lie in [0, 1]");
        }
        if !(self.jump_scale >= 0.0 && self.jump_scale.is_finite()) {
            return bad("jump scale must be finite and non-negative");
        }
        if !(self.ar1_coeff > -1.0 && self.ar1_coeff < 1.0) {
            return bad("AR(1) coefficient must lie in (-1, 1)");
        }
        if !(0.0..1.0).contains(&self.reversion) {
            return bad("reversion must lie in [0, 1)");
        }
        Ok(())
    }

    /// Cohort regimes used by [`generate_regime_cohorts`].
    pub fn uptrend() -> Self {
        Self::new(MovementPattern::Uptrend, 0.004, 0.012).with_ar1(0.45)
    }

    pub fn downtrend() -> Self {
        Self::new(MovementPattern::Downtrend, -0.004, 0.012).with_ar1(0.45)
    }

    pub fn volatile() -> Self {
        Self::new(MovementPattern::Volatile, 0.0, 0.02).with_ar1(0.2)
    }

    pub fn extreme() -> Self {
        Self::new(MovementPattern::Extreme, 0.0, 0.02).with_jumps(0.03, 0.2)
    }
}

/// Stocks whose log prices are pulled back toward their start level.
pub fn mean_reverting_regimes(n: usize) -> Vec<RegimeSpec> {
    vec![RegimeSpec::new(MovementPattern::Volatile, 0.0, 0.02).with_reversion(0.05); n]
}

/// Stocks with persistent, dispersed drifts and positively autocorrelated
/// returns.
pub fn trending_regimes(n: usize) -> Vec<RegimeSpec> {
    (0..n)
        .map(|k| {
            let drift = 0.003 * ((k % 9) as f64 - 4.0) / 4.0;
            let pattern = if drift >= 0.0 {
                MovementPattern::Uptrend
            } else {
                MovementPattern::Downtrend
            };
            RegimeSpec::new(pattern, drift, 0.02).with_ar1(0.1)
        })
        .collect()
}

/// `n` weekdays starting at the first weekday on or after `start`.
pub fn weekday_calendar(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

pub fn synthetic_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i:04}")).collect()
}

fn calendar_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 5).expect("valid date")
}

fn stock_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One stock's bars as `[open, high, low, close, volume]` per day.
fn simulate_stock(spec: &RegimeSpec, n_days: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 5]> {
    let mut bars = Vec::with_capacity(n_days);
    let mut prev_x = 0.0;
    let mut log_level = 0.0;
    let mut prev_close = BASE_PRICE;
    for _ in 0..n_days {
        // fixed draw count per day keeps streams aligned across parameter changes
        let eps: f64 = rng.sample(StandardNormal);
        let jump_u: f64 = rng.random();
        let jump_up: bool = rng.random();
        let gap: f64 = rng.sample(StandardNormal);
        let wick_hi: f64 = rng.sample(StandardNormal);
        let wick_lo: f64 = rng.sample(StandardNormal);
        let vol_draw: f64 = rng.sample(StandardNormal);

        let jump = if jump_u < spec.jump_prob {
            if jump_up {
                spec.jump_scale
            } else {
                -spec.jump_scale
            }
        } else {
            0.0
        };
        let x = spec.daily_drift + spec.ar1_coeff * prev_x - spec.reversion * log_level + spec.daily_vol * eps + jump;
        log_level += x;
        prev_x = x;
        let close = BASE_PRICE * log_level.exp();
        let open = prev_close * (0.25 * spec.daily_vol * gap).exp();
        let high = open.max(close) * (0.5 * spec.daily_vol * wick_hi.abs()).exp();
        let low = open.min(close) * (-0.5 * spec.daily_vol * wick_lo.abs()).exp();
        let volume = (LOG_VOLUME_MEAN + LOG_VOLUME_SD * vol_draw).exp();
        bars.push([open, high, low, close, volume]);
        prev_close = close;
    }
    bars
}

/// Generates a fully present panel with one regime per stock.
///
/// Stock ids are `S0000`, `S0001`, ... and the calendar is consecutive
/// weekdays from 2015-01-05. Identical arguments give identical panels.
pub fn generate_panel<T: Scalar>(
    n_stocks: usize,
    n_days: usize,
    regimes: &[RegimeSpec],
    seed: u64,
) -> Result<PricePanel<T>> {
    if n_days < 2 {
        return Err(Error::InvalidArgument("synthetic panels need at least two days".into()));
    }
    if n_stocks == 0 || regimes.len() != n_stocks {
        return Err(Error::InvalidArgument(format!(
            "need one regime per stock: {} regimes for {n_stocks} stocks",
            regimes.len()
        )));
    }
    for r in regimes {
        r.validate()?;
    }
    let mut values = Vec::with_capacity(n_stocks * n_days * REQUIRED_FEATURES.len());
    for (i, spec) in regimes.iter().enumerate() {
        let mut rng = stock_rng(seed, i as u64);
        for bar in simulate_stock(spec, n_days, &mut rng) {
            values.extend(bar.iter().map(|&v| T::lit(v)));
        }
    }
    PricePanel::new(
        synthetic_ids(n_stocks),
        weekday_calendar(calendar_start(), n_days),
        REQUIRED_FEATURES.iter().map(|s| s.to_string()).collect(),
        values,
        vec![true; n_stocks * n_days],
        None,
    )
}

/// A generated market with the regime each stock was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticMarket<T> {
    pub panel: PricePanel<T>,
    pub truth: BTreeMap<String, MovementPattern>,
}

/// Four cohorts of `cohort_size` stocks over one 250-day segment, one cohort
/// per movement pattern, with the pattern-to-stock assignment shuffled.
pub fn generate_regime_cohorts<T: Scalar>(cohort_size: usize, seed: u64) -> Result<SyntheticMarket<T>> {
    let regimes = [
        RegimeSpec::uptrend(),
        RegimeSpec::downtrend(),
        RegimeSpec::volatile(),
        RegimeSpec::extreme(),
    ];
    generate_cohorts(cohort_size, SEGMENT_DAYS, &regimes, seed)
}

/// `regimes.len()` cohorts of `cohort_size` stocks each over `n_days`.
pub fn generate_cohorts<T: Scalar>(
    cohort_size: usize,
    n_days: usize,
    regimes: &[RegimeSpec],
    seed: u64,
) -> Result<SyntheticMarket<T>> {
    if cohort_size == 0 {
        return Err(Error::InvalidArgument("cohort size must be positive".into()));
    }
    let mut assignment: Vec<RegimeSpec> = regimes
        .iter()
        .flat_map(|r| std::iter::repeat_n(*r, cohort_size))
        .collect();
    assignment.shuffle(&mut stock_rng(seed, u64::MAX));
    let panel = generate_panel(assignment.len(), n_days, &assignment, seed)?;
    let truth = panel
        .stock_ids()
        .iter()
        .cloned()
        .zip(assignment.iter().map(|r| r.pattern))
        .collect();
    Ok(SyntheticMarket { panel, truth })
}

/// Writes `stock_id,pattern` rows.
pub fn write_truth_csv<W: Write>(truth: &BTreeMap<String, MovementPattern>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["stock_id", "pattern"])?;
    for (id, p) in truth {
        w.write_record([id.as_str(), p.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_regime_is_flat() {
        let spec = RegimeSpec::new(MovementPattern::Volatile, 0.0, 0.0);
        let p: PricePanel<f64> = generate_panel(1, 30, &[spec], 9).unwrap();
        for t in 0..30 {
            assert_eq!(p.close(0, t), Some(100.0));
        }
    }

    #[test]
    fn same_seed_same_panel() {
        let specs = vec![RegimeSpec::extreme(); 4];
        let a: PricePanel<f64> = generate_panel(4, 50, &specs, 3).unwrap();
        let b: PricePanel<f64> = generate_panel(4, 50, &specs, 3).unwrap();
        let c: PricePanel<f64> = generate_panel(4, 50, &specs, 4).unwrap();
        assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn rejects_bad_regimes() {
        let mut s = RegimeSpec::volatile();
        s.ar1_coeff = 1.0;
        assert!(generate_panel::<f64>(1, 10, &[s], 0).is_err());
        let mut s = RegimeSpec::volatile();
        s.jump_prob = 1.5;
        assert!(generate_panel::<f64>(1, 10, &[s], 0).is_err());
        assert!(generate_panel::<f64>(2, 10, &[RegimeSpec::volatile()], 0).is_err());
        assert!(generate_panel::<f64>(1, 1, &[RegimeSpec::volatile()], 0).is_err());
    }

    #[test]
    fn calendar_skips_weekends() {
        let cal = weekday_calendar(calendar_start(), 7);
        assert_eq!(cal[4].weekday(), Weekday::Fri);
        assert_eq!(cal[5].weekday(), Weekday::Mon);
    }

    #[test]
    fn cohorts_cover_every_pattern() {
        let m: SyntheticMarket<f32> = generate_regime_cohorts(5, 1).unwrap();
        assert_eq!(m.panel.n_stocks(), 20);
        assert_eq!(m.panel.n_days(), 250);
        for p in MovementPattern::ALL {
            assert_eq!(m.truth.values().filter(|&&q| q == p).count(), 5);
        }
    }
}
