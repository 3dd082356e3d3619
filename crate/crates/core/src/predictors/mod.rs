//! Predictor contract and reference baselines.
//!
//! A predictor scores every stock on a decision day `t` using data up to and
//! including `t`; scores are judged against the return realized on `t + 1`.

mod features;
mod momentum;
mod ranker;
mod ridge;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::panel::{DatasetSplit, PricePanel, ReturnPanel, ScorePanel};
use crate::{Error, Result, Scalar};

pub use features::{add_derived_features, build_samples, FeatureView, SampleSet, DEFAULT_MODEL_FEATURES};
pub use momentum::{predict_blsw, predict_csm};
pub use ranker::{
    composite_loss, composite_loss_grad, mean_composite_loss_grad, mean_daily_ic, ranker_objective, sample_partners,
    train_linear_ranker, EpochLog, RankerFit, RankerOptions,
};
pub use ridge::{fit_ridge, ridge_gradient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictorKind {
    #[serde(rename = "csm", alias = "CSM")]
    Csm,
    #[serde(rename = "blsw", alias = "BLSW")]
    Blsw,
    #[serde(rename = "ridge", alias = "Ridge")]
    Ridge,
    #[serde(rename = "linear_ranker", alias = "LinearRanker")]
    LinearRanker,
}

impl PredictorKind {
    pub fn is_linear(self) -> bool {
        matches!(self, PredictorKind::Ridge | PredictorKind::LinearRanker)
    }

    pub fn label(self) -> &'static str {
        match self {
            PredictorKind::Csm => "CSM",
            PredictorKind::Blsw => "BLSW",
            PredictorKind::Ridge => "Ridge",
            PredictorKind::LinearRanker => "LinearRanker",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csm" => Ok(PredictorKind::Csm),
            "blsw" => Ok(PredictorKind::Blsw),
            "ridge" => Ok(PredictorKind::Ridge),
            "linear_ranker" | "linearranker" => Ok(PredictorKind::LinearRanker),
            _ => Err(Error::InvalidArgument(format!("unknown predictor kind `{s}`"))),
        }
    }
}

/// Predictor configuration. Hyperparameters not used by a kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSpec {
    /// Display name; defaults to the kind label.
    pub name: Option<String>,
    pub kind: PredictorKind,
    pub lookback: usize,
    /// Model input features (linear kinds).
    pub features: Vec<String>,
    /// Trailing window of the momentum scores.
    pub window: usize,
    pub ridge_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub eta: f64,
    /// Partners per stock per day for the pairwise term; all pairs if unset.
    pub sampled_pairs: Option<usize>,
    pub seed: u64,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        Self {
            name: None,
            kind: PredictorKind::Ridge,
            lookback: 20,
            features: DEFAULT_MODEL_FEATURES.iter().map(|s| s.to_string()).collect(),
            window: 20,
            ridge_lambda: 1.0,
            learning_rate: 1e-3,
            epochs: 200,
            patience: 20,
            eta: 5.0,
            sampled_pairs: None,
            seed: 0,
        }
    }
}

impl PredictorSpec {
    pub fn of_kind(kind: PredictorKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.label().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| {
            Err(Error::InvalidArgument(format!(
                "predictor {}: {m}",
                self.display_name()
            )))
        };
        if self.lookback == 0 {
            return bad("lookback must be at least 1".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be finite and non-negative, got {}", self.eta));
        }
        if self.kind == PredictorKind::Ridge && !(self.ridge_lambda > 0.0 && self.ridge_lambda.is_finite()) {
            return bad(format!("ridge_lambda must be positive, got {}", self.ridge_lambda));
        }
        if self.kind == PredictorKind::LinearRanker && !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.kind.is_linear() && self.features.is_empty() {
            return bad("no input features".into());
        }
        if self.sampled_pairs == Some(0) {
            return bad("sampled_pairs must be positive when set".into());
        }
        Ok(())
    }

    /// First decision day this predictor can score.
    pub fn warmup(&self) -> usize {
        match self.kind {
            PredictorKind::Csm | PredictorKind::Blsw => self.window,
            _ => self.lookback - 1,
        }
    }
}

/// Inputs a predictor may read: model features (normally cross-sectionally
/// normalized) and raw daily returns, on the same stock × day grid.
#[derive(Debug, Clone, Copy)]
pub struct PredictionContext<'a, T> {
    pub features: &'a PricePanel<T>,
    pub returns: &'a ReturnPanel<T>,
}

impl<'a, T: Scalar> PredictionContext<'a, T> {
    pub fn new(features: &'a PricePanel<T>, returns: &'a ReturnPanel<T>) -> Result<Self> {
        if features.stock_ids() != returns.stock_ids.as_slice() || features.calendar() != returns.calendar.as_slice() {
            return Err(Error::InvalidArgument(
                "feature and return panels are not aligned".into(),
            ));
        }
        Ok(Self { features, returns })
    }
}

/// Scores one decision day at a time.
pub trait Predictor<T: Scalar> {
    fn name(&self) -> String;

    fn score_day(&self, ctx: &PredictionContext<'_, T>, day: usize) -> Result<Vec<Option<T>>>;

    /// Scores for every decision day in `days`; other days stay masked.
    fn predict(&self, ctx: &PredictionContext<'_, T>, days: Range<usize>) -> Result<ScorePanel<T>> {
        let mut out = ScorePanel::aligned_with(ctx.returns);
        for day in days {
            out.set_day(day, &self.score_day(ctx, day)?);
        }
        Ok(out)
    }
}

/// A fitted predictor; momentum kinds carry no weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T = f64> {
    pub name: String,
    pub kind: PredictorKind,
    pub spec: PredictorSpec,
    /// Length `lookback · features` for linear kinds, empty otherwise.
    pub weights: Vec<T>,
    pub log: Vec<EpochLog<T>>,
    pub best_epoch: Option<usize>,
}

impl<T: Scalar + Serialize + for<'de> Deserialize<'de>> TrainedModel<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.spec.validate()?;
        let expected = if m.kind.is_linear() {
            m.spec.lookback * m.spec.features.len()
        } else {
            0
        };
        if m.weights.len() != expected || m.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "model {} has {} weights, expected {expected} finite values",
                m.name,
                m.weights.len()
            )));
        }
        Ok(m)
    }
}

impl<T: Scalar> Predictor<T> for TrainedModel<T> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn score_day(&self, ctx: &PredictionContext<'_, T>, day: usize) -> Result<Vec<Option<T>>> {
        match self.kind {
            PredictorKind::Csm => predict_csm(ctx.returns, day, self.spec.window),
            PredictorKind::Blsw => predict_blsw(ctx.returns, day, self.spec.window),
            PredictorKind::Ridge | PredictorKind::LinearRanker => {
                let view = FeatureView::new(ctx.features, &self.spec.features, self.spec.lookback)?;
                if day >= ctx.features.n_days() {
                    return Err(Error::InvalidArgument(format!("day {day} outside panel")));
                }
                Ok((0..view.n_stocks())
                    .map(|i| {
                        view.window(i, day)
                            .map(|x| x.iter().zip(&self.weights).map(|(&a, &b)| a * b).sum())
                    })
                    .collect())
            }
        }
    }
}

/// Fits a predictor on the train split, using the valid split for early
/// stopping. Samples belong to the split holding their target day.
pub fn train<T: Scalar>(
    spec: &PredictorSpec,
    ctx: &PredictionContext<'_, T>,
    split: &DatasetSplit,
) -> Result<TrainedModel<T>> {
    spec.validate()?;
    let mut model = TrainedModel {
        name: spec.display_name(),
        kind: spec.kind,
        spec: spec.clone(),
        weights: Vec::new(),
        log: Vec::new(),
        best_epoch: None,
    };
    if !spec.kind.is_linear() {
        return Ok(model);
    }
    let view = FeatureView::new(ctx.features, &spec.features, spec.lookback)?;
    let train_set = build_samples(&view, ctx.returns, split.train.clone())?;
    match spec.kind {
        PredictorKind::Ridge => {
            model.weights = fit_ridge(&train_set, T::lit(spec.ridge_lambda))?;
        }
        PredictorKind::LinearRanker => {
            let valid_set = build_samples(&view, ctx.returns, split.valid.clone())?;
            let fit = train_linear_ranker(
                &train_set,
                &valid_set,
                &RankerOptions {
                    learning_rate: T::lit(spec.learning_rate),
                    epochs: spec.epochs,
                    patience: spec.patience,
                    eta: T::lit(spec.eta),
                    sampled_pairs: spec.sampled_pairs,
                    seed: spec.seed,
                },
            )?;
            model.weights = fit.weights;
            model.log = fit.log;
            model.best_epoch = fit.best_epoch;
        }
        PredictorKind::Csm | PredictorKind::Blsw => unreachable!(),
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::compute_returns;
    use crate::panel::test_support::panel_from_closes;

    #[test]
    fn flat_market_ties_every_score() {
        let p = panel_from_closes(&[vec![Some(5.0); 8], vec![Some(9.0); 8]]);
        let r = compute_returns(&p).unwrap();
        assert_eq!(predict_csm(&r, 6, 5).unwrap(), vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn winner_scores_above_loser() {
        let up: Vec<Option<f64>> = (0..8).map(|k| Some(100.0 * 1.01f64.powi(k))).collect();
        let down: Vec<Option<f64>> = (0..8).map(|k| Some(100.0 * 0.99f64.powi(k))).collect();
        let r = compute_returns(&panel_from_closes(&[up, down])).unwrap();
        let s = predict_csm(&r, 7, 5).unwrap();
        assert!(s[0].unwrap() > s[1].unwrap());
        let b = predict_blsw(&r, 7, 5).unwrap();
        assert_eq!(b[0].unwrap(), -s[0].unwrap());
        assert!(predict_csm(&r, 4, 5).is_err());
    }

    #[test]
    fn missing_return_masks_score() {
        let p = panel_from_closes(&[
            vec![Some(1.0), Some(1.1), None, Some(1.2), Some(1.3)],
            vec![Some(2.0), Some(2.1), Some(2.2), Some(2.3), Some(2.4)],
        ]);
        let r = compute_returns(&p).unwrap();
        let s = predict_csm(&r, 4, 3).unwrap();
        assert_eq!(s[0], None);
        assert!(s[1].is_some());
    }

    #[test]
    fn hand_loss_case() {
        let l = composite_loss(&[1.0, 2.0], &[2.0, 1.0], 5.0).unwrap();
        assert_eq!(l, 12.0);
        assert_eq!(composite_loss(&[0.3, -0.1], &[0.3, -0.1], 5.0).unwrap(), 0.0);
        assert!(composite_loss(&[1.0], &[1.0, 2.0], 5.0).is_err());
        assert!(composite_loss(&[1.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = PredictorSpec::of_kind(PredictorKind::LinearRanker);
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"linear_ranker\""));
        assert_eq!(serde_json::from_str::<PredictorSpec>(&s).unwrap(), spec);
        assert_eq!("BLSW".parse::<PredictorKind>().unwrap(), PredictorKind::Blsw);
    }
}
