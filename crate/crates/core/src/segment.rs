//! Movement-pattern segmentation.
//!
//! History is cut into fixed, non-overlapping windows. Inside each window
//! stocks with outlier daily returns are labelled [`MovementPattern::Extreme`];
//! the rest are ranked by cumulative return and split into uptrend,
//! downtrend and (median-centred) volatile cohorts.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::panel::ReturnPanel;
use crate::{stats, Error, Result, Scalar};

/// Scale factor turning a MAD into a standard-deviation estimate under normality.
pub const MAD_SCALE: f64 = 1.4826;
/// Absolute return cap used when a stock's MAD is zero.
pub const FLAT_STOCK_RETURN_CAP: f64 = 0.15;
pub const DEFAULT_SEGMENT_LEN: usize = 250;
pub const DEFAULT_COHORT_SIZE: usize = 300;
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MovementPattern {
    Uptrend,
    Downtrend,
    Volatile,
    Extreme,
}

impl MovementPattern {
    pub const ALL: [MovementPattern; 4] = [
        MovementPattern::Uptrend,
        MovementPattern::Downtrend,
        MovementPattern::Volatile,
        MovementPattern::Extreme,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MovementPattern::Uptrend => "uptrend",
            MovementPattern::Downtrend => "downtrend",
            MovementPattern::Volatile => "volatile",
            MovementPattern::Extreme => "extreme",
        }
    }
}

impl fmt::Display for MovementPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MovementPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MovementPattern::ALL
            .into_iter()
            .find(|p| p.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown movement pattern `{s}`")))
    }
}

/// Consecutive windows of equal length plus the discarded tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    pub windows: Vec<Range<usize>>,
    pub discarded: usize,
}

pub fn cut_segments(days: usize, segment_len: usize) -> Result<Segments> {
    if segment_len == 0 {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    if days < segment_len {
        return Err(Error::InsufficientData(format!(
            "{days} days is shorter than one {segment_len}-day segment"
        )));
    }
    let count = days / segment_len;
    Ok(Segments {
        windows: (0..count).map(|k| k * segment_len..(k + 1) * segment_len).collect(),
        discarded: days - count * segment_len,
    })
}

/// Returns of one stock whose both endpoints lie inside the segment.
///
/// The first day of a segment is skipped because its return reaches back
/// into the previous segment.
fn segment_returns<T: Scalar>(returns: &ReturnPanel<T>, stock: usize, segment: &Range<usize>) -> Vec<T> {
    (segment.start + 1..segment.end)
        .filter_map(|t| returns.get(stock, t))
        .collect()
}

fn check_segment<T: Scalar>(returns: &ReturnPanel<T>, segment: &Range<usize>) -> Result<()> {
    if segment.start >= segment.end || segment.end > returns.n_days() {
        return Err(Error::InvalidArgument(format!(
            "segment {segment:?} outside panel of {} days",
            returns.n_days()
        )));
    }
    Ok(())
}

/// Robust outlier test on one stock's segment returns.
pub fn is_black_swan<T: Scalar>(rets: &[T], z_threshold: T) -> bool {
    let (Some(med), Some(mad)) = (stats::median(rets), stats::mad(rets)) else {
        return false;
    };
    if mad == T::zero() {
        let cap = T::lit(FLAT_STOCK_RETURN_CAP);
        return rets.iter().any(|r| r.abs() > cap);
    }
    let sigma = T::lit(MAD_SCALE) * mad;
    rets.iter().any(|&r| (r - med).abs() / sigma > z_threshold)
}

/// Stocks whose segment returns contain an outlier with robust z-score above
/// `z_threshold`.
pub fn flag_black_swans<T: Scalar>(
    returns: &ReturnPanel<T>,
    segment: Range<usize>,
    z_threshold: T,
) -> Result<BTreeSet<String>> {
    check_segment(returns, &segment)?;
    Ok((0..returns.n_stocks())
        .filter(|&i| is_black_swan(&segment_returns(returns, i, &segment), z_threshold))
        .map(|i| returns.stock_ids[i].clone())
        .collect())
}

/// Cohort sizes were reduced because too few non-extreme stocks exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortShortfall {
    pub requested: usize,
    pub granted: usize,
    pub available: usize,
}

/// Pattern assignment for one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabeling<T = f64> {
    pub segment: Range<usize>,
    pub labels: BTreeMap<String, MovementPattern>,
    /// Segment cumulative return of every stock with data in the segment.
    pub scores: BTreeMap<String, T>,
    pub shortfall: Option<CohortShortfall>,
}

impl<T: Scalar> SegmentLabeling<T> {
    /// Members of one pattern in id order.
    pub fn members(&self, pattern: MovementPattern) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|(_, &p)| p == pattern)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn count(&self, pattern: MovementPattern) -> usize {
        self.labels.values().filter(|&&p| p == pattern).count()
    }
}

/// Labels every stock of a segment.
///
/// Black swans become `Extreme`. The remaining stocks are ranked by
/// cumulative return `Π(1 + r) − 1`, descending, ties by id: the first
/// `cohort_size` are `Uptrend`, the last `cohort_size` are `Downtrend` and a
/// band of `cohort_size` centred on the median rank is `Volatile`. With fewer
/// than `3 · cohort_size` candidates all three cohorts shrink to a third of
/// the supply and a [`CohortShortfall`] is recorded.
pub fn classify_segment<T: Scalar>(
    returns: &ReturnPanel<T>,
    segment: Range<usize>,
    cohort_size: usize,
    z_threshold: T,
) -> Result<SegmentLabeling<T>> {
    check_segment(returns, &segment)?;
    if cohort_size == 0 {
        return Err(Error::InvalidArgument("cohort size must be positive".into()));
    }
    let mut labels = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut candidates: Vec<(T, &str)> = Vec::new();
    for i in 0..returns.n_stocks() {
        let rets = segment_returns(returns, i, &segment);
        if rets.is_empty() {
            continue;
        }
        let id = returns.stock_ids[i].as_str();
        let cumulative = rets.iter().fold(T::one(), |acc, &r| acc * (T::one() + r)) - T::one();
        scores.insert(id.to_string(), cumulative);
        if is_black_swan(&rets, z_threshold) {
            labels.insert(id.to_string(), MovementPattern::Extreme);
        } else {
            candidates.push((cumulative, id));
        }
    }
    let available = candidates.len();
    if available < 3 {
        return Err(Error::InsufficientData(format!(
            "only {available} non-extreme stocks in segment {segment:?}"
        )));
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    let granted = cohort_size.min(available / 3);
    let shortfall = (granted < cohort_size).then_some(CohortShortfall {
        requested: cohort_size,
        granted,
        available,
    });
    let mid_start = (available - granted) / 2;
    for (rank, (_, id)) in candidates.iter().enumerate() {
        let pattern = if rank < granted {
            Some(MovementPattern::Uptrend)
        } else if rank >= available - granted {
            Some(MovementPattern::Downtrend)
        } else if (mid_start..mid_start + granted).contains(&rank) {
            Some(MovementPattern::Volatile)
        } else {
            None
        };
        if let Some(p) = pattern {
            labels.insert(id.to_string(), p);
        }
    }
    Ok(SegmentLabeling {
        segment,
        labels,
        scores,
        shortfall,
    })
}

/// Writes `segment_start,stock_id,pattern,score` rows for labelled stocks.
pub fn write_labeling_csv<T: Scalar, W: Write>(labelings: &[SegmentLabeling<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["segment_start", "stock_id", "pattern", "score"])?;
    for l in labelings {
        for (id, pattern) in &l.labels {
            let score = l.scores.get(id).map(|s| s.to_string()).unwrap_or_default();
            w.write_record([l.segment.start.to_string(), id.clone(), pattern.to_string(), score])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of a labelling CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow<T> {
    pub segment_start: usize,
    pub stock_id: String,
    pub pattern: MovementPattern,
    pub score: Option<T>,
}

pub fn read_labeling_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<LabelRow<T>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::MalformedRow { line, message: m };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        out.push(LabelRow {
            segment_start: rec[0].parse().map_err(|e| bad(format!("segment_start: {e}")))?,
            stock_id: rec[1].to_string(),
            pattern: rec[2].parse()?,
            score: if rec[3].is_empty() {
                None
            } else {
                Some(T::lit(rec[3].parse::<f64>().map_err(|e| bad(format!("score: {e}")))?))
            },
        });
    }
    Ok(out)
}
