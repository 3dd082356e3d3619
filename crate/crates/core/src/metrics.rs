//! Ranking, portfolio and error metrics.
//!
//! Scores of decision day `t` are always compared with returns realized on
//! day `t + 1`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::backtest::PortfolioState;
use crate::panel::{ReturnPanel, ScorePanel};
use crate::{stats, Error, Result, Scalar};

/// Trading days per year.
pub const ANNUALIZATION: f64 = 252.0;

/// Report columns in display order.
pub const METRIC_COLUMNS: [&str; 11] = [
    "MSE", "MAE", "IC", "ICIR", "RankIC", "RankICIR", "ARR", "AVol", "MDD", "ASR", "IR",
];

/// Minimum jointly observed stocks for a daily correlation.
pub const MIN_CROSS_SECTION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Pearson,
    Spearman,
}

/// How IC-family metrics aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcMode {
    /// One correlation across stocks per day, summarized over days.
    #[default]
    CrossSectional,
    /// One correlation across days per stock, summarized over stocks.
    Temporal,
}

fn correlate<T: Scalar>(x: &[T], y: &[T], mode: Correlation) -> Option<T> {
    if x.len() < MIN_CROSS_SECTION {
        return None;
    }
    match mode {
        Correlation::Pearson => stats::pearson(x, y),
        Correlation::Spearman => stats::spearman(x, y),
    }
}

fn check_aligned<T: Scalar>(scores: &ScorePanel<T>, returns: &ReturnPanel<T>, days: &Range<usize>) -> Result<()> {
    if scores.stock_ids != returns.stock_ids || scores.calendar != returns.calendar {
        return Err(Error::InvalidArgument("scores and returns are not aligned".into()));
    }
    // the last decision day needs a realized return on the following day
    if days.end >= returns.n_days() {
        return Err(Error::InvalidArgument(format!(
            "decision days {days:?} need realized returns through day {}",
            days.end
        )));
    }
    Ok(())
}

/// One cross-sectional correlation per decision day; `None` where fewer
/// than three stocks have both values or either side has no dispersion.
pub fn daily_ic_series<T: Scalar>(
    scores: &ScorePanel<T>,
    returns: &ReturnPanel<T>,
    mode: Correlation,
    days: Range<usize>,
) -> Result<Vec<Option<T>>> {
    check_aligned(scores, returns, &days)?;
    Ok(days
        .map(|t| {
            let (x, y): (Vec<T>, Vec<T>) = (0..scores.n_stocks())
                .filter_map(|i| Some((scores.get(i, t)?, returns.get(i, t + 1)?)))
                .unzip();
            correlate(&x, &y, mode)
        })
        .collect())
}

/// One time-series correlation per stock over the decision days.
pub fn per_stock_ic_series<T: Scalar>(
    scores: &ScorePanel<T>,
    returns: &ReturnPanel<T>,
    mode: Correlation,
    days: Range<usize>,
) -> Result<Vec<Option<T>>> {
    check_aligned(scores, returns, &days)?;
    Ok((0..scores.n_stocks())
        .map(|i| {
            let (x, y): (Vec<T>, Vec<T>) = days
                .clone()
                .filter_map(|t| Some((scores.get(i, t)?, returns.get(i, t + 1)?)))
                .unzip();
            correlate(&x, &y, mode)
        })
        .collect())
}

/// `mean / std` (sample std) of the unmasked values, without annualization.
pub fn information_ratio_of<T: Scalar>(series: &[Option<T>]) -> Result<T> {
    let xs: Vec<T> = series.iter().flatten().copied().collect();
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "information ratio needs two values, got {}",
            xs.len()
        )));
    }
    let sd = stats::sample_std(&xs).expect("two values");
    if sd == T::zero() {
        return Err(Error::Degenerate("information ratio of a constant series".into()));
    }
    Ok(stats::mean(&xs).expect("non-empty") / sd)
}

/// Largest relative decline from a running peak, as a non-positive number.
pub fn max_drawdown<T: Scalar>(equity: &[T]) -> T {
    let mut peak = T::neg_infinity();
    let mut worst = T::zero();
    for &e in equity {
        peak = peak.max(e);
        if peak > T::zero() {
            worst = worst.max(T::one() - e / peak);
        }
    }
    T::zero() - worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioMetrics<T = f64> {
    pub arr: T,
    pub avol: T,
    pub mdd: T,
    /// Missing when `avol` is 0.
    pub asr: Option<T>,
    /// Missing when active returns have no dispersion.
    pub ir: Option<T>,
}

/// Annualized return, volatility, drawdown, Sharpe and information ratios
/// of a daily return series against a benchmark.
pub fn portfolio_metrics<T: Scalar>(rp: &[T], rb: &[T]) -> Result<PortfolioMetrics<T>> {
    if rp.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "portfolio metrics need two daily returns, got {}",
            rp.len()
        )));
    }
    if rp.len() != rb.len() {
        return Err(Error::InvalidArgument(format!(
            "strategy and benchmark returns differ in length: {} vs {}",
            rp.len(),
            rb.len()
        )));
    }
    let mut equity = Vec::with_capacity(rp.len() + 1);
    equity.push(T::one());
    let mut level = T::one();
    for &r in rp {
        level *= T::one() + r;
        equity.push(level);
    }
    let n = T::count(rp.len());
    let ann = T::lit(ANNUALIZATION);
    let arr = level.max(T::zero()).powf(ann / n) - T::one();
    let avol = (ann * stats::sample_variance(rp).expect("two values")).sqrt();
    let active: Vec<Option<T>> = rp.iter().zip(rb).map(|(&p, &b)| Some(p - b)).collect();
    Ok(PortfolioMetrics {
        arr,
        avol,
        mdd: max_drawdown(&equity),
        asr: (avol > T::zero()).then(|| arr / avol),
        ir: information_ratio_of(&active).ok(),
    })
}

/// Mean squared and absolute error over every (stock, decision day) with
/// both a score and a next-day return.
pub fn error_metrics<T: Scalar>(
    scores: &ScorePanel<T>,
    returns: &ReturnPanel<T>,
    days: Range<usize>,
) -> Result<(T, T)> {
    check_aligned(scores, returns, &days)?;
    let (mut se, mut ae, mut count) = (T::zero(), T::zero(), 0usize);
    for t in days {
        for i in 0..scores.n_stocks() {
            if let (Some(y), Some(r)) = (scores.get(i, t), returns.get(i, t + 1)) {
                let e = y - r;
                se += e * e;
                ae += e.abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData("no scored cells with realized returns".into()));
    }
    let c = T::count(count);
    Ok((se / c, ae / c))
}

/// The eleven-column evaluation record. Serialized names match the column
/// headers; undefined values serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T = f64> {
    #[serde(rename = "MSE")]
    pub mse: Option<T>,
    #[serde(rename = "MAE")]
    pub mae: Option<T>,
    #[serde(rename = "IC")]
    pub ic: Option<T>,
    #[serde(rename = "ICIR")]
    pub icir: Option<T>,
    #[serde(rename = "RankIC")]
    pub rank_ic: Option<T>,
    #[serde(rename = "RankICIR")]
    pub rank_icir: Option<T>,
    #[serde(rename = "ARR")]
    pub arr: Option<T>,
    #[serde(rename = "AVol")]
    pub avol: Option<T>,
    #[serde(rename = "MDD")]
    pub mdd: Option<T>,
    #[serde(rename = "ASR")]
    pub asr: Option<T>,
    #[serde(rename = "IR")]
    pub ir: Option<T>,
    pub ic_mode: IcMode,
    /// Per-day (or per-stock, in temporal mode) IC and RankIC.
    pub ic_series: Vec<Option<T>>,
    pub rank_ic_series: Vec<Option<T>>,
}

impl<T: Scalar> MetricsReport<T> {
    /// Scores every metric for predictions on `days` and the backtest that
    /// traded them.
    pub fn compute(
        scores: &ScorePanel<T>,
        returns: &ReturnPanel<T>,
        portfolio: &PortfolioState<T>,
        days: Range<usize>,
        mode: IcMode,
    ) -> Result<Self> {
        let series = |c| match mode {
            IcMode::CrossSectional => daily_ic_series(scores, returns, c, days.clone()),
            IcMode::Temporal => per_stock_ic_series(scores, returns, c, days.clone()),
        };
        let ic_series = series(Correlation::Pearson)?;
        let rank_ic_series = series(Correlation::Spearman)?;
        let avg = |s: &[Option<T>]| stats::mean(&s.iter().flatten().copied().collect::<Vec<_>>());
        let (mse, mae) = error_metrics(scores, returns, days.clone())?;
        let pm = portfolio_metrics(&portfolio.daily_returns, &portfolio.benchmark_returns)?;
        Ok(Self {
            mse: Some(mse),
            mae: Some(mae),
            ic: avg(&ic_series),
            icir: information_ratio_of(&ic_series).ok(),
            rank_ic: avg(&rank_ic_series),
            rank_icir: information_ratio_of(&rank_ic_series).ok(),
            arr: Some(pm.arr),
            avol: Some(pm.avol),
            mdd: Some(pm.mdd),
            asr: pm.asr,
            ir: pm.ir,
            ic_mode: mode,
            ic_series,
            rank_ic_series,
        })
    }

    /// Values in [`METRIC_COLUMNS`] order.
    pub fn row(&self) -> [Option<T>; 11] {
        [
            self.mse,
            self.mae,
            self.ic,
            self.icir,
            self.rank_ic,
            self.rank_icir,
            self.arr,
            self.avol,
            self.mdd,
            self.asr,
            self.ir,
        ]
    }
}

impl<T: Scalar + Serialize> MetricsReport<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
