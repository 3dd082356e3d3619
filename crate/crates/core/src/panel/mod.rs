//! Panel data model: prices, returns and scores over a stock × day grid.
//!
//! A [`PricePanel`] holds `N` stocks over `T` trading days with `F` features
//! per cell. Missing cells are flagged by an explicit presence mask and hold
//! `NaN` in the value buffer; they are never zero-filled.

mod io;
mod transform;

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub use io::{load_panel, read_cache, save_panel_csv, write_cache, PanelFormat, CACHE_MAGIC, CACHE_VERSION};
pub use transform::{
    compute_returns, cross_sectional_normalize, split_chronological, DatasetSplit, DegenerateDay, NormalizedPanel,
};

/// Features every panel must carry, in canonical order.
pub const REQUIRED_FEATURES: [&str; 5] = ["open", "high", "low", "close", "volume"];

/// Calendar date format used in every file interface.
pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Whether the feature values are raw market data or per-day z-scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PanelScale {
    Raw,
    CrossSectionalZ,
}

/// N stocks × T days × F features of market data.
#[derive(Debug, Clone)]
pub struct PricePanel<T = f64> {
    stock_ids: Vec<String>,
    calendar: Vec<NaiveDate>,
    feature_names: Vec<String>,
    values: Vec<T>,
    present: Vec<bool>,
    tradable: Option<Vec<bool>>,
    scale: PanelScale,
}

impl<T: Scalar> PricePanel<T> {
    /// Builds a raw panel and checks every invariant.
    ///
    /// `values` is row-major over (stock, day, feature); `present` and
    /// `tradable` are row-major over (stock, day).
    pub fn new(
        stock_ids: Vec<String>,
        calendar: Vec<NaiveDate>,
        feature_names: Vec<String>,
        values: Vec<T>,
        present: Vec<bool>,
        tradable: Option<Vec<bool>>,
    ) -> Result<Self> {
        Self::with_scale(
            stock_ids,
            calendar,
            feature_names,
            values,
            present,
            tradable,
            PanelScale::Raw,
        )
    }

    pub(crate) fn with_scale(
        stock_ids: Vec<String>,
        calendar: Vec<NaiveDate>,
        feature_names: Vec<String>,
        mut values: Vec<T>,
        present: Vec<bool>,
        tradable: Option<Vec<bool>>,
        scale: PanelScale,
    ) -> Result<Self> {
        let (n, t, f) = (stock_ids.len(), calendar.len(), feature_names.len());
        if values.len() != n * t * f {
            return Err(Error::InvalidPanel(format!(
                "value buffer has {} entries, expected {n}×{t}×{f}",
                values.len()
            )));
        }
        if present.len() != n * t {
            return Err(Error::InvalidPanel("presence mask has wrong shape".into()));
        }
        if let Some(mask) = &tradable {
            if mask.len() != n * t {
                return Err(Error::InvalidPanel("tradability mask has wrong shape".into()));
            }
        }
        if let Some(w) = calendar.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPanel(format!(
                "calendar not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(w) = stock_ids.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPanel(format!("stock ids not sorted/unique at {}", w[1])));
        }
        for name in REQUIRED_FEATURES {
            if !feature_names.iter().any(|x| x == name) {
                return Err(Error::InvalidPanel(format!("missing required feature `{name}`")));
            }
        }
        // missing cells carry NaN so that accidental reads are loud
        for (cell, &p) in present.iter().enumerate() {
            if !p {
                values[cell * f..(cell + 1) * f].fill(T::nan());
            }
        }
        let panel = Self {
            stock_ids,
            calendar,
            feature_names,
            values,
            present,
            tradable,
            scale,
        };
        panel.validate()?;
        Ok(panel)
    }

    fn validate(&self) -> Result<()> {
        let idx = |name: &str| self.feature_index(name).expect("required feature");
        let (o, h, l, c, v) = (idx("open"), idx("high"), idx("low"), idx("close"), idx("volume"));
        for i in 0..self.n_stocks() {
            for t in 0..self.n_days() {
                let Some(cell) = self.cell(i, t) else {
                    continue;
                };
                if let Some(pos) = cell.iter().position(|x| !x.is_finite()) {
                    return Err(self.bar_error(
                        i,
                        t,
                        format!("non-finite value in feature `{}`", self.feature_names[pos]),
                    ));
                }
                if self.scale != PanelScale::Raw {
                    continue;
                }
                let (open, high, low, close) = (cell[o], cell[h], cell[l], cell[c]);
                if [open, high, low, close].iter().any(|&p| p <= T::zero()) {
                    return Err(self.bar_error(i, t, "prices must be strictly positive".into()));
                }
                if high < low {
                    return Err(self.bar_error(i, t, format!("high {high} < low {low}")));
                }
                if high < open.max(close) || low > open.min(close) {
                    return Err(self.bar_error(
                        i,
                        t,
                        format!("open/close outside [low, high]: o={open} h={high} l={low} c={close}"),
                    ));
                }
                if cell[v] < T::zero() {
                    return Err(self.bar_error(i, t, "negative volume".into()));
                }
            }
        }
        Ok(())
    }

    fn bar_error(&self, i: usize, t: usize, message: String) -> Error {
        Error::InvalidBar {
            stock: self.stock_ids[i].clone(),
            date: self.calendar[t].format(DATE_FORMAT).to_string(),
            message,
        }
    }

    pub fn n_stocks(&self) -> usize {
        self.stock_ids.len()
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn stock_ids(&self) -> &[String] {
        &self.stock_ids
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn scale(&self) -> PanelScale {
        self.scale
    }

    pub fn has_tradability(&self) -> bool {
        self.tradable.is_some()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn stock_index(&self, id: &str) -> Option<usize> {
        self.stock_ids.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    pub fn is_present(&self, stock: usize, day: usize) -> bool {
        self.present[stock * self.n_days() + day]
    }

    /// Tradable means present that day and not blocked by the tradability mask.
    pub fn is_tradable(&self, stock: usize, day: usize) -> bool {
        let k = stock * self.n_days() + day;
        self.present[k] && self.tradable.as_ref().is_none_or(|m| m[k])
    }

    /// Feature vector of one (stock, day) cell, `None` if missing.
    pub fn cell(&self, stock: usize, day: usize) -> Option<&[T]> {
        if !self.is_present(stock, day) {
            return None;
        }
        let f = self.n_features();
        let start = (stock * self.n_days() + day) * f;
        Some(&self.values[start..start + f])
    }

    pub fn value(&self, stock: usize, day: usize, feature: usize) -> Option<T> {
        self.cell(stock, day).map(|c| c[feature])
    }

    /// Close price, `None` if the cell is missing.
    pub fn close(&self, stock: usize, day: usize) -> Option<T> {
        let c = self.feature_index("close")?;
        self.value(stock, day, c)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn presence_mask(&self) -> &[bool] {
        &self.present
    }

    pub fn tradability_mask(&self) -> Option<&[bool]> {
        self.tradable.as_deref()
    }

    /// Sub-panel over a contiguous day range.
    pub fn select_days(&self, days: Range<usize>) -> Result<Self> {
        if days.end > self.n_days() || days.start >= days.end {
            return Err(Error::InvalidArgument(format!(
                "day range {days:?} outside panel of {} days",
                self.n_days()
            )));
        }
        let (t, f) = (self.n_days(), self.n_features());
        let len = days.len();
        let mut values = Vec::with_capacity(self.n_stocks() * len * f);
        let mut present = Vec::with_capacity(self.n_stocks() * len);
        let mut tradable = self
            .tradable
            .as_ref()
            .map(|_| Vec::with_capacity(self.n_stocks() * len));
        for i in 0..self.n_stocks() {
            values.extend_from_slice(&self.values[(i * t + days.start) * f..(i * t + days.end) * f]);
            present.extend_from_slice(&self.present[i * t + days.start..i * t + days.end]);
            if let (Some(out), Some(src)) = (tradable.as_mut(), self.tradable.as_ref()) {
                out.extend_from_slice(&src[i * t + days.start..i * t + days.end]);
            }
        }
        Self::with_scale(
            self.stock_ids.clone(),
            self.calendar[days].to_vec(),
            self.feature_names.clone(),
            values,
            present,
            tradable,
            self.scale,
        )
    }

    /// Sub-panel over a set of stocks (any order; output stays sorted).
    pub fn select_stocks<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let mut idx: Vec<usize> = ids
            .iter()
            .map(|s| {
                self.stock_index(s.as_ref())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown stock `{}`", s.as_ref())))
            })
            .collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        let (t, f) = (self.n_days(), self.n_features());
        let mut values = Vec::with_capacity(idx.len() * t * f);
        let mut present = Vec::with_capacity(idx.len() * t);
        let mut tradable = self.tradable.as_ref().map(|_| Vec::with_capacity(idx.len() * t));
        for &i in &idx {
            values.extend_from_slice(&self.values[i * t * f..(i + 1) * t * f]);
            present.extend_from_slice(&self.present[i * t..(i + 1) * t]);
            if let (Some(out), Some(src)) = (tradable.as_mut(), self.tradable.as_ref()) {
                out.extend_from_slice(&src[i * t..(i + 1) * t]);
            }
        }
        Self::with_scale(
            idx.iter().map(|&i| self.stock_ids[i].clone()).collect(),
            self.calendar.clone(),
            self.feature_names.clone(),
            values,
            present,
            tradable,
            self.scale,
        )
    }

    /// Copy with one more feature, computed for every present cell by
    /// `value(stock, day)`.
    pub fn with_feature(&self, name: &str, value: impl Fn(usize, usize) -> T) -> Result<Self> {
        if self.feature_index(name).is_some() {
            return Err(Error::InvalidPanel(format!("feature `{name}` already exists")));
        }
        let (n, t, f) = (self.n_stocks(), self.n_days(), self.n_features());
        let mut values = Vec::with_capacity(n * t * (f + 1));
        for i in 0..n {
            for d in 0..t {
                let base = (i * t + d) * f;
                values.extend_from_slice(&self.values[base..base + f]);
                values.push(if self.is_present(i, d) { value(i, d) } else { T::nan() });
            }
        }
        let mut names = self.feature_names.clone();
        names.push(name.to_string());
        Self::with_scale(
            self.stock_ids.clone(),
            self.calendar.clone(),
            names,
            values,
            self.present.clone(),
            self.tradable.clone(),
            self.scale,
        )
    }

    /// Returns a copy in which every present cell on days `>= from_day` has its
    /// price features multiplied by `factor` and volume replaced by `volume`.
    ///
    /// Used to poison future data when auditing that a computation never
    /// reads beyond its day range.
    pub fn poison_from(&self, from_day: usize, factor: T, volume: T) -> Result<Self> {
        let mut out = self.clone();
        let f = self.n_features();
        let v = self.feature_index("volume").expect("required feature");
        for i in 0..self.n_stocks() {
            for t in from_day..self.n_days() {
                if !self.is_present(i, t) {
                    continue;
                }
                let base = (i * self.n_days() + t) * f;
                for k in 0..f {
                    out.values[base + k] = if k == v { volume } else { self.values[base + k] * factor };
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}

// Missing cells hold NaN filler, so equality only looks at present cells.
impl<T: Scalar> PartialEq for PricePanel<T> {
    fn eq(&self, other: &Self) -> bool {
        if self.stock_ids != other.stock_ids
            || self.calendar != other.calendar
            || self.feature_names != other.feature_names
            || self.present != other.present
            || self.tradable != other.tradable
            || self.scale != other.scale
        {
            return false;
        }
        let f = self.n_features();
        self.present
            .iter()
            .enumerate()
            .all(|(cell, &p)| !p || self.values[cell * f..(cell + 1) * f] == other.values[cell * f..(cell + 1) * f])
    }
}

/// Stock × day matrix of optional values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Scalar> Grid<T> {
    /// All-masked grid.
    pub fn masked(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::nan(); rows * cols],
            valid: vec![false; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        let k = row * self.cols + col;
        self.valid[k].then(|| self.values[k])
    }

    pub fn set(&mut self, row: usize, col: usize, value: Option<T>) {
        let k = row * self.cols + col;
        match value {
            Some(v) => {
                self.values[k] = v;
                self.valid[k] = true;
            }
            None => {
                self.values[k] = T::nan();
                self.valid[k] = false;
            }
        }
    }

    /// One day's cross-section.
    pub fn column(&self, col: usize) -> Vec<Option<T>> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// One stock's time series.
    pub fn row(&self, row: usize) -> Vec<Option<T>> {
        (0..self.cols).map(|c| self.get(row, c)).collect()
    }

    pub fn set_column(&mut self, col: usize, values: &[Option<T>]) {
        assert_eq!(values.len(), self.rows);
        for (r, v) in values.iter().enumerate() {
            self.set(r, col, *v);
        }
    }
}

/// One-day return ratios `r[i][t] = (p[t] - p[t-1]) / p[t-1]`; day 0 is masked.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<T = f64> {
    pub stock_ids: Vec<String>,
    pub calendar: Vec<NaiveDate>,
    pub values: Grid<T>,
}

/// Predicted ranking scores; days without predictions are masked.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePanel<T = f64> {
    pub stock_ids: Vec<String>,
    pub calendar: Vec<NaiveDate>,
    pub values: Grid<T>,
}

impl<T: Scalar> ReturnPanel<T> {
    pub fn n_stocks(&self) -> usize {
        self.stock_ids.len()
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn get(&self, stock: usize, day: usize) -> Option<T> {
        self.values.get(stock, day)
    }
}

impl<T: Scalar> ScorePanel<T> {
    /// Empty score panel aligned with a return panel.
    pub fn aligned_with(returns: &ReturnPanel<T>) -> Self {
        Self {
            stock_ids: returns.stock_ids.clone(),
            calendar: returns.calendar.clone(),
            values: Grid::masked(returns.n_stocks(), returns.n_days()),
        }
    }

    pub fn n_stocks(&self) -> usize {
        self.stock_ids.len()
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn get(&self, stock: usize, day: usize) -> Option<T> {
        self.values.get(stock, day)
    }

    pub fn day(&self, day: usize) -> Vec<Option<T>> {
        self.values.column(day)
    }

    pub fn set_day(&mut self, day: usize, scores: &[Option<T>]) {
        self.values.set_column(day, scores);
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::panel_from_closes;
    use super::*;

    #[test]
    fn missing_cells_read_as_none() {
        let p = panel_from_closes(&[vec![Some(10.0), None, Some(11.0)]]);
        assert_eq!(p.close(0, 0), Some(10.0));
        assert_eq!(p.close(0, 1), None);
        assert!(p.values()[5..10].iter().all(|v| v.is_nan()));
        assert!(!p.is_tradable(0, 1));
    }

    #[test]
    fn rejects_unsorted_calendar() {
        let d = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
        let names = REQUIRED_FEATURES.iter().map(|s| s.to_string()).collect();
        let err = PricePanel::<f64>::new(vec!["A".into()], vec![d, d], names, vec![1.0; 10], vec![true; 2], None)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidPanel(_)));
    }

    #[test]
    fn rejects_inconsistent_bar() {
        let d = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
        let names = REQUIRED_FEATURES.iter().map(|s| s.to_string()).collect();
        // open above high
        let err = PricePanel::<f64>::new(
            vec!["A".into()],
            vec![d],
            names,
            vec![12.0, 11.0, 9.0, 10.0, 5.0],
            vec![true],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidBar { .. }));
    }

    #[test]
    fn select_days_and_stocks() {
        let p = panel_from_closes(&[
            vec![Some(1.0), Some(2.0), Some(3.0)],
            vec![Some(4.0), Some(5.0), Some(6.0)],
        ]);
        let d = p.select_days(1..3).unwrap();
        assert_eq!(d.n_days(), 2);
        assert_eq!(d.close(1, 0), Some(5.0));
        let s = p.select_stocks(&["S001"]).unwrap();
        assert_eq!(s.n_stocks(), 1);
        assert_eq!(s.close(0, 2), Some(6.0));
        assert!(p.select_stocks(&["nope"]).is_err());
    }
}
