use std::ops::Range;

use crate::panel::{PanelScale, PricePanel, ReturnPanel};
use crate::{Error, Result, Scalar};

/// Model inputs used when a predictor spec does not list its own.
pub const DEFAULT_MODEL_FEATURES: [&str; 4] = ["return", "range", "body", "volume"];

/// Adds `return` (close-to-close), `range` (high / low − 1) and `body`
/// (close / open − 1) to a raw panel.
///
/// `return` is 0 on the first day and wherever the previous close is
/// missing, so it never needs a value from another cell than the prior day.
pub fn add_derived_features<T: Scalar>(panel: &PricePanel<T>) -> Result<PricePanel<T>> {
    if panel.scale() != PanelScale::Raw {
        return Err(Error::InvalidArgument("derived features need raw prices".into()));
    }
    let idx = |n: &str| panel.feature_index(n).expect("required feature");
    let (o, h, l) = (idx("open"), idx("high"), idx("low"));
    let with_ret = panel.with_feature("return", |i, t| {
        match (t.checked_sub(1).and_then(|p| panel.close(i, p)), panel.close(i, t)) {
            (Some(prev), Some(cur)) => cur / prev - T::one(),
            _ => T::zero(),
        }
    })?;
    let with_range = with_ret.with_feature("range", |i, t| {
        panel.value(i, t, h).expect("present") / panel.value(i, t, l).expect("present") - T::one()
    })?;
    with_range.with_feature("body", |i, t| {
        panel.close(i, t).expect("present") / panel.value(i, t, o).expect("present") - T::one()
    })
}

/// Flattened lookback windows over a subset of panel features.
#[derive(Debug, Clone)]
pub struct FeatureView<'a, T> {
    panel: &'a PricePanel<T>,
    idx: Vec<usize>,
    lookback: usize,
}

impl<'a, T: Scalar> FeatureView<'a, T> {
    pub fn new<S: AsRef<str>>(panel: &'a PricePanel<T>, features: &[S], lookback: usize) -> Result<Self> {
        if lookback == 0 {
            return Err(Error::InvalidArgument("lookback must be at least 1".into()));
        }
        if features.is_empty() {
            return Err(Error::InvalidArgument("no model features selected".into()));
        }
        let idx = features
            .iter()
            .map(|f| {
                panel
                    .feature_index(f.as_ref())
                    .ok_or_else(|| Error::UnknownFeature(f.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { panel, idx, lookback })
    }

    /// Length `L · F` of one flattened window.
    pub fn dim(&self) -> usize {
        self.lookback * self.idx.len()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn n_stocks(&self) -> usize {
        self.panel.n_stocks()
    }

    /// Features of days `day − L + 1 ..= day`, oldest first, feature-minor.
    /// `None` when the window starts before day 0 or touches a missing cell.
    pub fn window(&self, stock: usize, day: usize) -> Option<Vec<T>> {
        let first = (day + 1).checked_sub(self.lookback)?;
        let mut out = Vec::with_capacity(self.dim());
        for t in first..=day {
            let cell = self.panel.cell(stock, t)?;
            out.extend(self.idx.iter().map(|&f| cell[f]));
        }
        Some(out)
    }
}

/// Design matrix of (window, next-day return) pairs grouped by decision day.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    pub dim: usize,
    /// Row-major, `len() × dim`.
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub stocks: Vec<usize>,
    /// Decision day of each row; its target is the return of the next day.
    pub days: Vec<usize>,
    /// Contiguous row ranges sharing a decision day.
    pub groups: Vec<Range<usize>>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }

    /// `X · w`.
    pub fn predict(&self, w: &[T]) -> Vec<T> {
        assert_eq!(w.len(), self.dim);
        (0..self.len())
            .map(|k| self.row(k).iter().zip(w).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

/// Samples whose target day lies in `target_days`.
///
/// A sample pairs the window ending on day `t` with the return realized on
/// day `t + 1`, so features never reach the target day and a split's
/// samples only read days before its end.
pub fn build_samples<T: Scalar>(
    view: &FeatureView<'_, T>,
    returns: &ReturnPanel<T>,
    target_days: Range<usize>,
) -> Result<SampleSet<T>> {
    if returns.n_stocks() != view.n_stocks() {
        return Err(Error::InvalidArgument(
            "feature and return panels differ in stocks".into(),
        ));
    }
    let mut set = SampleSet {
        dim: view.dim(),
        x: Vec::new(),
        y: Vec::new(),
        stocks: Vec::new(),
        days: Vec::new(),
        groups: Vec::new(),
    };
    for target in target_days.start.max(1)..target_days.end.min(returns.n_days()) {
        let day = target - 1;
        let start = set.len();
        for i in 0..view.n_stocks() {
            let (Some(w), Some(r)) = (view.window(i, day), returns.get(i, target)) else {
                continue;
            };
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite feature for stock {i} on day {day}"
                )));
            }
            set.x.extend(w);
            set.y.push(r);
            set.stocks.push(i);
            set.days.push(day);
        }
        if set.len() > start {
            set.groups.push(start..set.len());
        }
    }
    Ok(set)
}
