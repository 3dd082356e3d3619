//! Evaluation engine for financial time-series forecasting.
//!
//! The crate covers the full evaluation path for cross-sectional stock
//! ranking models: panel ingestion and leak-free normalization
//! ([`panel`]), movement-pattern segmentation ([`segment`]), sequence
//! diagnostics ([`characteristics`]), reference predictors
//! ([`predictors`]), TopK / TopK-Drop backtesting with fees ([`backtest`]),
//! the eleven-metric report ([`metrics`]) and a seeded synthetic market
//! generator ([`synth`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root pin the common `f64` instantiations.

pub mod backtest;
pub mod characteristics;
mod error;
pub mod linalg;
pub mod metrics;
pub mod panel;
pub mod predictors;
mod scalar;
pub mod segment;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PricePanel64 = panel::PricePanel<f64>;
pub type PricePanel32 = panel::PricePanel<f32>;
pub type ReturnPanel64 = panel::ReturnPanel<f64>;
pub type ReturnPanel32 = panel::ReturnPanel<f32>;
pub type ScorePanel64 = panel::ScorePanel<f64>;
pub type ScorePanel32 = panel::ScorePanel<f32>;

pub type SegmentLabeling64 = segment::SegmentLabeling<f64>;
pub type SegmentLabeling32 = segment::SegmentLabeling<f32>;
pub type AdfResult64 = characteristics::AdfResult<f64>;
pub type AdfResult32 = characteristics::AdfResult<f32>;
pub type TrainedModel64 = predictors::TrainedModel<f64>;
pub type TrainedModel32 = predictors::TrainedModel<f32>;
pub type PortfolioState64 = backtest::PortfolioState<f64>;
pub type PortfolioState32 = backtest::PortfolioState<f32>;
pub type MetricsReport64 = metrics::MetricsReport<f64>;
pub type MetricsReport32 = metrics::MetricsReport<f32>;
