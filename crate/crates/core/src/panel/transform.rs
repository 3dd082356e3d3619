use std::ops::Range;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Grid, PanelScale, PricePanel, ReturnPanel};
use crate::{stats, Error, Result, Scalar};

/// One-day close-to-close return ratios.
///
/// A cell is masked on day 0, and wherever either close is missing or the
/// prior close is not strictly positive.
pub fn compute_returns<T: Scalar>(panel: &PricePanel<T>) -> Result<ReturnPanel<T>> {
    if panel.scale() != PanelScale::Raw {
        return Err(Error::InvalidArgument(
            "returns must be computed from raw prices, not normalized features".into(),
        ));
    }
    let close = panel
        .feature_index("close")
        .ok_or_else(|| Error::UnknownFeature("close".into()))?;
    if panel.n_days() < 2 {
        return Err(Error::InsufficientData("returns need at least two days".into()));
    }
    let mut grid = Grid::masked(panel.n_stocks(), panel.n_days());
    for i in 0..panel.n_stocks() {
        for t in 1..panel.n_days() {
            let (Some(prev), Some(cur)) = (panel.value(i, t - 1, close), panel.value(i, t, close)) else {
                continue;
            };
            if prev > T::zero() {
                grid.set(i, t, Some((cur - prev) / prev));
            }
        }
    }
    Ok(ReturnPanel {
        stock_ids: panel.stock_ids().to_vec(),
        calendar: panel.calendar().to_vec(),
        values: grid,
    })
}

/// A (day, feature) pair whose cross-section had zero dispersion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateDay {
    pub day: usize,
    pub feature: String,
}

/// Normalization output: the z-scored panel plus degenerate-day records.
#[derive(Debug, Clone)]
pub struct NormalizedPanel<T> {
    pub panel: PricePanel<T>,
    pub degenerate: Vec<DegenerateDay>,
}

/// Per-day cross-sectional z-scores (population standard deviation).
///
/// Each listed feature is standardized across the stocks present on a day;
/// features not listed pass through unchanged. Statistics never mix days.
/// When every stock has the same value on a day the feature becomes 0 for
/// that day and a [`DegenerateDay`] is recorded.
pub fn cross_sectional_normalize<T: Scalar, S: AsRef<str>>(
    panel: &PricePanel<T>,
    features: &[S],
) -> Result<NormalizedPanel<T>> {
    let idx = features
        .iter()
        .map(|f| {
            panel
                .feature_index(f.as_ref())
                .ok_or_else(|| Error::UnknownFeature(f.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (n, t_len, f_len) = (panel.n_stocks(), panel.n_days(), panel.n_features());
    let mut values = panel.values().to_vec();
    let mut degenerate = Vec::new();
    for t in 0..t_len {
        let members: Vec<usize> = (0..n).filter(|&i| panel.is_present(i, t)).collect();
        match members.len() {
            0 => continue,
            1 => return Err(Error::InsufficientCrossSection { day: t }),
            _ => {}
        }
        for &f in &idx {
            let xs: Vec<T> = members.iter().map(|&i| values[(i * t_len + t) * f_len + f]).collect();
            let mean = stats::mean(&xs).expect("non-empty");
            let sd = stats::population_std(&xs).expect("non-empty");
            let scale = xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
            let flat = sd <= T::epsilon() * scale;
            if flat {
                warn!(
                    "day {t}: feature `{}` has no cross-sectional dispersion; set to 0",
                    panel.feature_names()[f]
                );
                degenerate.push(DegenerateDay {
                    day: t,
                    feature: panel.feature_names()[f].clone(),
                });
            }
            for (&i, &x) in members.iter().zip(&xs) {
                values[(i * t_len + t) * f_len + f] = if flat { T::zero() } else { (x - mean) / sd };
            }
        }
    }
    let panel = PricePanel::with_scale(
        panel.stock_ids().to_vec(),
        panel.calendar().to_vec(),
        panel.feature_names().to_vec(),
        values,
        panel.presence_mask().to_vec(),
        panel.tradability_mask().map(<[bool]>::to_vec),
        PanelScale::CrossSectionalZ,
    )?;
    Ok(NormalizedPanel { panel, degenerate })
}

/// Contiguous, chronologically ordered train/valid/test day ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Range<usize>,
    pub valid: Range<usize>,
    pub test: Range<usize>,
}

impl DatasetSplit {
    pub fn total(&self) -> usize {
        self.test.end
    }
}

/// Splits `days` into train/valid/test in the given integer ratios.
///
/// Valid and test sizes are floored; the remainder goes to train unless that
/// would put train more than one day above its exact share, in which case
/// the extra day goes to whichever of valid/test has the larger fractional
/// share (valid on ties).
pub fn split_chronological(days: usize, ratios: (u32, u32, u32)) -> Result<DatasetSplit> {
    let (a, b, c) = (ratios.0 as usize, ratios.1 as usize, ratios.2 as usize);
    let total = a + b + c;
    if total == 0 || a == 0 || b == 0 || c == 0 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must all be positive"
        )));
    }
    let mut valid = days * b / total;
    let mut test = days * c / total;
    let mut train = days - valid - test;
    // exact shares scaled by `total` to stay in integers
    if (train * total) >= days * a + total {
        let frac_valid = days * b % total;
        let frac_test = days * c % total;
        if frac_valid >= frac_test {
            valid += 1;
        } else {
            test += 1;
        }
        train -= 1;
    }
    if train == 0 || valid == 0 || test == 0 {
        return Err(Error::InsufficientData(format!(
            "{days} days cannot give every split at least one day"
        )));
    }
    Ok(DatasetSplit {
        train: 0..train,
        valid: train..train + valid,
        test: train + valid..days,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::panel_from_closes;
    use super::*;

    #[test]
    fn constant_close_gives_zero_returns() {
        let p = panel_from_closes(&[vec![Some(10.0); 3]]);
        let r = compute_returns(&p).unwrap();
        assert_eq!(r.get(0, 0), None);
        assert_eq!(r.get(0, 1), Some(0.0));
        assert_eq!(r.get(0, 2), Some(0.0));
    }

    #[test]
    fn ten_percent_move() {
        let p = panel_from_closes(&[vec![Some(100.0), Some(110.0)]]);
        let r = compute_returns(&p).unwrap();
        assert!((r.get(0, 1).unwrap() - 0.10).abs() < 1e-15);
    }

    #[test]
    fn missing_prior_close_masks_cell() {
        let p = panel_from_closes(&[vec![Some(10.0), None, Some(11.0), Some(12.0)]]);
        let r = compute_returns(&p).unwrap();
        assert_eq!(r.get(0, 1), None);
        assert_eq!(r.get(0, 2), None);
        assert!(r.get(0, 3).is_some());
    }

    #[test]
    fn identical_volume_day_is_degenerate() {
        let p = panel_from_closes(&[
            vec![Some(10.0), Some(11.0)],
            vec![Some(20.0), Some(19.0)],
            vec![Some(30.0), Some(33.0)],
        ]);
        let out = cross_sectional_normalize(&p, &["close", "volume"]).unwrap();
        let v = out.panel.feature_index("volume").unwrap();
        for i in 0..3 {
            assert_eq!(out.panel.value(i, 0, v), Some(0.0));
        }
        assert_eq!(out.degenerate.len(), 2);
        assert_eq!(
            out.degenerate[0],
            DegenerateDay {
                day: 0,
                feature: "volume".into()
            }
        );
    }

    #[test]
    fn lone_stock_day_is_an_error() {
        let p = panel_from_closes(&[vec![Some(10.0), Some(11.0)], vec![Some(20.0), None]]);
        assert!(matches!(
            cross_sectional_normalize(&p, &["close"]),
            Err(Error::InsufficientCrossSection { day: 1 })
        ));
    }

    #[test]
    fn unknown_feature_rejected() {
        let p = panel_from_closes(&[vec![Some(10.0)], vec![Some(11.0)]]);
        assert!(matches!(
            cross_sectional_normalize(&p, &["vwap"]),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn table_split_sizes() {
        let s = split_chronological(250, (7, 1, 2)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (175, 25, 50));
        let s = split_chronological(10, (7, 1, 2)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (7, 1, 2));
        let s = split_chronological(101, (7, 1, 2)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (71, 10, 20));
        let s = split_chronological(9, (7, 1, 2)).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (7, 1, 1));
        assert!(split_chronological(2, (7, 1, 2)).is_err());
    }
}
