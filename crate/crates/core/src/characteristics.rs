//! Sequence-quality diagnostics: non-stationarity (ADF t-statistic),
//! autocorrelation and spectral forecastability, plus per-pattern
//! aggregation into a summary table.

use std::io::Write;

use log::warn;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::panel::{PricePanel, ReturnPanel};
use crate::segment::{MovementPattern, SegmentLabeling};
use crate::{stats, Error, Result, Scalar};

/// Deterministic terms in the Dickey-Fuller regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfTrend {
    Constant,
    ConstantTrend,
}

/// Lag order of the augmentation terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdfLags {
    Fixed(usize),
    /// `floor(12 · (n / 100)^(1/4))`.
    Schwert,
}

impl AdfLags {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            AdfLags::Fixed(p) => p,
            AdfLags::Schwert => schwert_lags(n),
        }
    }
}

pub fn schwert_lags(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult<T = f64> {
    /// t-statistic of the lagged-level coefficient.
    pub statistic: T,
    pub gamma_hat: T,
    pub alpha_hat: T,
    /// Present only with [`AdfTrend::ConstantTrend`].
    pub beta_hat: Option<T>,
    pub lags_used: usize,
    pub residual_variance: T,
    pub nobs: usize,
}

/// Augmented Dickey-Fuller regression
/// `Δs_t = α + β·t + γ·s_{t−1} + Σ_j δ_j Δs_{t−j} + ε_t`, fit by OLS.
///
/// The time index runs `1..=nobs` over the regression sample. More negative
/// statistics indicate a more stationary series.
pub fn adf_statistic<T: Scalar>(series: &[T], lags: AdfLags, trend: AdfTrend) -> Result<AdfResult<T>> {
    let n = series.len();
    let p = lags.resolve(n);
    if n < p + 10 {
        return Err(Error::InsufficientData(format!(
            "ADF with {p} lags needs at least {} points, got {n}",
            p + 10
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("ADF input must be finite".into()));
    }
    let diff: Vec<T> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // diff[k] = s[k+1] - s[k]; regress diff[k] for k = p..n-1
    let nobs = diff.len() - p;
    let level_col = match trend {
        AdfTrend::Constant => 1,
        AdfTrend::ConstantTrend => 2,
    };
    let cols = level_col + 1 + p;
    let mut x = Vec::with_capacity(nobs * cols);
    let mut y = Vec::with_capacity(nobs);
    for (obs, k) in (p..diff.len()).enumerate() {
        x.push(T::one());
        if trend == AdfTrend::ConstantTrend {
            x.push(T::count(obs + 1));
        }
        x.push(series[k]);
        for j in 1..=p {
            x.push(diff[k - j]);
        }
        y.push(diff[k]);
    }
    let fit = linalg::ols(&x, nobs, cols, &y)?;
    let se = fit.std_error(level_col);
    if !(se > T::zero()) {
        return Err(Error::Degenerate(
            "ADF regression fits exactly; t-statistic undefined".into(),
        ));
    }
    let gamma = fit.coefficients[level_col];
    Ok(AdfResult {
        statistic: gamma / se,
        gamma_hat: gamma,
        alpha_hat: fit.coefficients[0],
        beta_hat: (trend == AdfTrend::ConstantTrend).then(|| fit.coefficients[1]),
        lags_used: p,
        residual_variance: fit.residual_variance(),
        nobs,
    })
}

/// Lag-`k` autocorrelation with the full-series denominator:
/// `Σ_{t<L−k} (s_t − s̄)(s_{t+k} − s̄) / Σ_t (s_t − s̄)²`.
pub fn autocorrelation<T: Scalar>(series: &[T], lag: usize) -> Result<T> {
    if lag >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "lag {lag} needs a series longer than {}",
            series.len()
        )));
    }
    let denom = stats::sum_sq_dev(series);
    if denom == T::zero() {
        return Err(Error::Degenerate("undefined autocorrelation: zero variance".into()));
    }
    if lag == 0 {
        return Ok(T::one());
    }
    let m = stats::mean(series).expect("non-empty");
    let num: T = series
        .iter()
        .zip(&series[lag..])
        .map(|(&a, &b)| (a - m) * (b - m))
        .sum();
    Ok(num / denom)
}

/// One-sided periodogram of the mean-removed series at the `n / 2` positive
/// Fourier frequencies `k = 1..=n/2`.
pub fn periodogram<T: Scalar>(series: &[T]) -> Vec<T> {
    let n = series.len();
    let m = stats::mean(series).unwrap_or_else(T::zero);
    let mut buf: Vec<Complex<T>> = series.iter().map(|&x| Complex::new(x - m, T::zero())).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[1..=n / 2].iter().map(|c| c.norm_sqr() / T::count(n)).collect()
}

pub const MIN_FORECASTABILITY_LEN: usize = 16;

/// Spectral forecastability `φ = 1 − H(p̂) / ln M`.
///
/// `p̂` is the periodogram normalized to unit mass over its `M` bins and `H`
/// its Shannon entropy in nats; the result is clipped to `[0, 1]`. A pure
/// tone scores 1 and white noise scores near 0. A series with no power
/// (constant) scores 0.
pub fn forecastability<T: Scalar>(series: &[T]) -> Result<T> {
    if series.len() < MIN_FORECASTABILITY_LEN {
        return Err(Error::InsufficientData(format!(
            "forecastability needs at least {MIN_FORECASTABILITY_LEN} points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("forecastability input must be finite".into()));
    }
    let power = periodogram(series);
    let total: T = power.iter().copied().sum();
    let peak = power.iter().fold(T::zero(), |a, &b| a.max(b));
    if total <= T::zero() || peak <= T::epsilon() * stats::sum_sq_dev(series).max(T::min_positive_value()) {
        warn!("forecastability of a zero-power series defined as 0");
        return Ok(T::zero());
    }
    let entropy: T = power
        .iter()
        .map(|&p| p / total)
        .filter(|&q| q > T::zero())
        .map(|q| -q * q.ln())
        .sum();
    let phi = T::one() - entropy / T::count(power.len()).ln();
    Ok(phi.max(T::zero()).min(T::one()))
}

/// One row of the per-pattern summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow<T = f64> {
    pub pattern: MovementPattern,
    /// Mean ADF statistic of member close-price series.
    pub non_stationarity: Option<T>,
    /// Mean lag-1 return autocorrelation.
    pub autocorrelation: Option<T>,
    /// Mean return forecastability.
    pub forecastability: Option<T>,
    pub split: String,
    pub members: usize,
}

/// Per-stock diagnostics feeding the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockCharacteristics<T = f64> {
    pub adf: Option<AdfResult<T>>,
    pub autocorr: Option<T>,
    pub forecastability: Option<T>,
}

/// Options for [`pattern_aggregates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsOptions {
    pub adf_lags: AdfLags,
    pub adf_trend: AdfTrend,
    pub autocorr_lag: usize,
    pub split: (u32, u32, u32),
}

impl Default for CharacteristicsOptions {
    fn default() -> Self {
        Self {
            adf_lags: AdfLags::Schwert,
            adf_trend: AdfTrend::Constant,
            autocorr_lag: 1,
            split: (7, 1, 2),
        }
    }
}

/// Diagnostics for one stock over a day range: ADF on close prices,
/// autocorrelation and forecastability on returns. Failures leave the
/// corresponding field empty.
pub fn stock_characteristics<T: Scalar>(
    panel: &PricePanel<T>,
    returns: &ReturnPanel<T>,
    stock: usize,
    days: std::ops::Range<usize>,
    opts: &CharacteristicsOptions,
) -> StockCharacteristics<T> {
    let closes: Vec<T> = days.clone().filter_map(|t| panel.close(stock, t)).collect();
    let rets: Vec<T> = (days.start + 1..days.end)
        .filter_map(|t| returns.get(stock, t))
        .collect();
    StockCharacteristics {
        adf: adf_statistic(&closes, opts.adf_lags, opts.adf_trend).ok(),
        autocorr: autocorrelation(&rets, opts.autocorr_lag).ok(),
        forecastability: forecastability(&rets).ok(),
    }
}

fn mean_of<T: Scalar>(xs: impl Iterator<Item = T>) -> Option<T> {
    let v: Vec<T> = xs.collect();
    stats::mean(&v)
}

/// Mean diagnostics of one pattern's members within the labelled segment.
pub fn pattern_aggregate<T: Scalar>(
    panel: &PricePanel<T>,
    returns: &ReturnPanel<T>,
    labeling: &SegmentLabeling<T>,
    pattern: MovementPattern,
    opts: &CharacteristicsOptions,
) -> Result<PatternRow<T>> {
    if labeling.segment.end > panel.n_days() {
        return Err(Error::InvalidArgument("labelling segment exceeds panel".into()));
    }
    let members = labeling.members(pattern);
    if members.is_empty() {
        return Err(Error::InsufficientData(format!("pattern {pattern} has no members")));
    }
    let per_stock = members
        .iter()
        .map(|id| {
            let i = panel
                .stock_index(id)
                .ok_or_else(|| Error::InvalidArgument(format!("labelled stock {id} not in panel")))?;
            Ok(stock_characteristics(panel, returns, i, labeling.segment.clone(), opts))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b, c) = opts.split;
    Ok(PatternRow {
        pattern,
        non_stationarity: mean_of(per_stock.iter().filter_map(|s| s.adf.as_ref().map(|r| r.statistic))),
        autocorrelation: mean_of(per_stock.iter().filter_map(|s| s.autocorr)),
        forecastability: mean_of(per_stock.iter().filter_map(|s| s.forecastability)),
        split: format!("{a}:{b}:{c}"),
        members: members.len(),
    })
}

/// Summary rows for every pattern with at least one member, in
/// uptrend/downtrend/volatile/extreme order.
pub fn pattern_aggregates<T: Scalar>(
    panel: &PricePanel<T>,
    returns: &ReturnPanel<T>,
    labeling: &SegmentLabeling<T>,
    opts: &CharacteristicsOptions,
) -> Result<Vec<PatternRow<T>>> {
    MovementPattern::ALL
        .into_iter()
        .filter(|&p| labeling.count(p) > 0)
        .map(|p| pattern_aggregate(panel, returns, labeling, p, opts))
        .collect()
}

/// CSV with columns `pattern,non_stationarity,autocorrelation,forecastability,split`
/// (plus `segment_start` and `members`).
pub fn write_report_csv<T: Scalar, W: Write>(rows: &[(usize, PatternRow<T>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "segment_start",
        "pattern",
        "non_stationarity",
        "autocorrelation",
        "forecastability",
        "split",
        "members",
    ])?;
    let fmt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    for (start, r) in rows {
        w.write_record([
            start.to_string(),
            r.pattern.to_string(),
            fmt(r.non_stationarity),
            fmt(r.autocorrelation),
            fmt(r.forecastability),
            r.split.clone(),
            r.members.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
