use crate::panel::ReturnPanel;
use crate::{Error, Result, Scalar};

/// Cross-sectional momentum: trailing `window`-day compounded return
/// `Π (1 + r) − 1` over days `day − window + 1 ..= day`.
///
/// A stock with any missing return in the window gets no score.
pub fn predict_csm<T: Scalar>(returns: &ReturnPanel<T>, day: usize, window: usize) -> Result<Vec<Option<T>>> {
    if window == 0 {
        return Err(Error::InvalidArgument("momentum window must be positive".into()));
    }
    if day < window || day >= returns.n_days() {
        return Err(Error::InsufficientData(format!(
            "a {window}-day window ending on day {day} exceeds the return history"
        )));
    }
    Ok((0..returns.n_stocks())
        .map(|i| {
            (day + 1 - window..=day)
                .map(|t| returns.get(i, t))
                .try_fold(T::one(), |acc, r| r.map(|r| acc * (T::one() + r)))
                .map(|g| g - T::one())
        })
        .collect())
}

/// Short-term reversal: the negated momentum score.
pub fn predict_blsw<T: Scalar>(returns: &ReturnPanel<T>, day: usize, window: usize) -> Result<Vec<Option<T>>> {
    Ok(predict_csm(returns, day, window)?
        .into_iter()
        .map(|s| s.map(|v| -v))
        .collect())
}
