//! Pipeline stages shared by the commands.

use std::collections::BTreeMap;
use std::ops::Range;

use log::{info, warn};
use rayon::prelude::*;
use tsbench::backtest::run_backtest;
use tsbench::characteristics::{pattern_aggregates, PatternRow};
use tsbench::metrics::MetricsReport;
use tsbench::panel::{
    compute_returns, cross_sectional_normalize, load_panel, split_chronological, DatasetSplit, DegenerateDay,
};
use tsbench::predictors::{add_derived_features, train, PredictionContext, Predictor, PredictorSpec};
use tsbench::segment::{classify_segment, cut_segments, MovementPattern, Segments};
use tsbench::synth::{generate_cohorts, generate_panel, mean_reverting_regimes, trending_regimes, RegimeSpec};
use tsbench::{
    MetricsReport64, PortfolioState64, PricePanel64, ReturnPanel64, ScorePanel64, SegmentLabeling64, TrainedModel64,
};

use crate::config::{DataSource, Generator, RunConfig, SynthSpec};
use crate::error::{CliError, CliResult, StageContext};

/// A panel and, for synthetic data, the regime each stock was drawn from.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub panel: PricePanel64,
    pub truth: Option<BTreeMap<String, MovementPattern>>,
}

pub fn synthesize(spec: &SynthSpec, seed: u64) -> CliResult<LoadedData> {
    let regimes = match spec.generator {
        Generator::RegimeCohorts => {
            let cohorts = [
                RegimeSpec::uptrend(),
                RegimeSpec::downtrend(),
                RegimeSpec::volatile(),
                RegimeSpec::extreme(),
            ];
            let m = generate_cohorts(spec.cohort_size, spec.n_days, &cohorts, seed).stage("synth")?;
            return Ok(LoadedData {
                panel: m.panel,
                truth: Some(m.truth),
            });
        }
        Generator::MeanReverting => mean_reverting_regimes(spec.universe()),
        Generator::Trending => trending_regimes(spec.universe()),
    };
    let panel: PricePanel64 = generate_panel(regimes.len(), spec.n_days, &regimes, seed).stage("synth")?;
    let truth = panel
        .stock_ids()
        .iter()
        .cloned()
        .zip(regimes.iter().map(|r| r.pattern))
        .collect();
    Ok(LoadedData {
        panel,
        truth: Some(truth),
    })
}

pub fn load_data(cfg: &RunConfig) -> CliResult<LoadedData> {
    match &cfg.data {
        DataSource::File { path, format } => {
            let panel = load_panel(path, *format).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            info!(
                "loaded {} stocks x {} days from {}",
                panel.n_stocks(),
                panel.n_days(),
                path.display()
            );
            Ok(LoadedData { panel, truth: None })
        }
        DataSource::Synth(spec) => synthesize(spec, cfg.seed()),
    }
}

/// Everything the training and evaluation stages read.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Raw prices, used for execution and valuation.
    pub panel: PricePanel64,
    pub returns: ReturnPanel64,
    /// Raw plus derived features, z-scored per day where configured.
    pub features: PricePanel64,
    pub degenerate: Vec<DegenerateDay>,
    pub split: DatasetSplit,
}

impl Prepared {
    pub fn context(&self) -> CliResult<PredictionContext<'_, f64>> {
        PredictionContext::new(&self.features, &self.returns).stage("predict")
    }
}

/// Returns, derived features, per-day normalization and the split.
pub fn prepare(cfg: &RunConfig, panel: PricePanel64) -> CliResult<Prepared> {
    let returns = compute_returns(&panel).stage("returns")?;
    let derived = add_derived_features(&panel).stage("features")?;
    for f in &cfg.normalize.features {
        if derived.feature_index(f).is_none() {
            return Err(CliError::Config(format!("normalize.features: unknown feature `{f}`")));
        }
    }
    for (k, spec) in cfg.predictors.iter().enumerate() {
        if let Some(f) = spec.features.iter().find(|f| derived.feature_index(f).is_none()) {
            return Err(CliError::Config(format!(
                "predictors[{k}].features: unknown feature `{f}`"
            )));
        }
    }
    if let Err(e) = cfg.backtest.validate(Some(panel.n_stocks())) {
        return Err(CliError::Config(format!("backtest: {e}")));
    }
    let normalized = cross_sectional_normalize(&derived, &cfg.normalize.features).stage("normalize")?;
    let split = split_chronological(panel.n_days(), cfg.split_ratios()).stage("split")?;
    if split.test.start == 0 || split.test.len() < 2 {
        return Err(CliError::stage(
            "split",
            format!("test range {:?} is too short to backtest", split.test),
        ));
    }
    Ok(Prepared {
        panel,
        returns,
        features: normalized.panel,
        degenerate: normalized.degenerate,
        split,
    })
}

/// Cuts the panel into segments and labels each one.
pub fn label_segments(cfg: &RunConfig, returns: &ReturnPanel64) -> CliResult<(Segments, Vec<SegmentLabeling64>)> {
    let segments = cut_segments(returns.n_days(), cfg.segment.length).stage("segment")?;
    if segments.discarded > 0 {
        warn!(
            "{} trailing days do not fill a segment and are not labelled",
            segments.discarded
        );
    }
    let labelings = segments
        .windows
        .iter()
        .map(|w| classify_segment(returns, w.clone(), cfg.segment.cohort_size, cfg.segment.z_threshold))
        .collect::<tsbench::Result<Vec<_>>>()
        .stage("segment")?;
    for l in &labelings {
        if let Some(s) = &l.shortfall {
            warn!(
                "segment {:?}: cohorts shrunk from {} to {} ({} candidates)",
                l.segment, s.requested, s.granted, s.available
            );
        }
    }
    Ok((segments, labelings))
}

/// Per-pattern summary rows of every labelled segment.
pub fn characterize(
    cfg: &RunConfig,
    panel: &PricePanel64,
    returns: &ReturnPanel64,
    labelings: &[SegmentLabeling64],
) -> CliResult<Vec<(usize, PatternRow<f64>)>> {
    let opts = cfg.characteristics_options();
    let mut rows = Vec::new();
    for l in labelings {
        for row in pattern_aggregates(panel, returns, l, &opts).stage("characterize")? {
            rows.push((l.segment.start, row));
        }
    }
    Ok(rows)
}

/// Days whose scores drive test-period trades: the day before each test day.
pub fn decision_days(split: &DatasetSplit) -> Range<usize> {
    split.test.start - 1..split.test.end - 1
}

/// Simulated days: the last decision day's trades are valued on the last
/// test day.
pub fn backtest_days(split: &DatasetSplit) -> Range<usize> {
    split.test.start - 1..split.test.end
}

/// Trains predictor `k`. Pair sampling is seeded by the run seed plus the
/// spec's own seed.
pub fn train_model(cfg: &RunConfig, k: usize, prepared: &Prepared) -> CliResult<TrainedModel64> {
    let mut spec: PredictorSpec = cfg.predictors[k].clone();
    let name = spec.display_name();
    let first = decision_days(&prepared.split).start;
    if spec.warmup() > first {
        return Err(CliError::Config(format!(
            "predictors[{k}]: needs {} days of history but the first test decision day is {first}",
            spec.warmup()
        )));
    }
    spec.seed = cfg.seed().wrapping_add(spec.seed);
    let ctx = prepared.context()?;
    let model = train(&spec, &ctx, &prepared.split).stage(&format!("train:{name}"))?;
    if let Some(best) = model.best_epoch {
        info!("{name}: best validation epoch {best} of {}", model.log.len() - 1);
    }
    Ok(model)
}

/// A trained model's test-period predictions, portfolio and metrics.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub model: TrainedModel64,
    pub scores: ScorePanel64,
    pub portfolio: PortfolioState64,
    pub metrics: MetricsReport64,
}

pub fn evaluate(cfg: &RunConfig, model: TrainedModel64, prepared: &Prepared) -> CliResult<Evaluation> {
    let name = model.name.clone();
    let ctx = prepared.context()?;
    let days = decision_days(&prepared.split);
    let scores = model.predict(&ctx, days.clone()).stage(&format!("predict:{name}"))?;
    let portfolio = run_backtest(&scores, &prepared.panel, &cfg.backtest, backtest_days(&prepared.split))
        .stage(&format!("backtest:{name}"))?;
    let metrics = MetricsReport::compute(&scores, &prepared.returns, &portfolio, days, cfg.metrics.ic_mode)
        .stage(&format!("metrics:{name}"))?;
    Ok(Evaluation {
        model,
        scores,
        portfolio,
        metrics,
    })
}

/// Trains and evaluates every configured predictor, in parallel when
/// `jobs` allows; results keep config order.
pub fn run_predictors(cfg: &RunConfig, prepared: &Prepared, jobs: Option<usize>) -> CliResult<Vec<Evaluation>> {
    if cfg.predictors.is_empty() {
        return Err(CliError::Config(
            "predictors: at least one predictor is required".into(),
        ));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    pool.install(|| {
        (0..cfg.predictors.len())
            .into_par_iter()
            .map(|k| {
                let model = train_model(cfg, k, prepared)?;
                evaluate(cfg, model, prepared)
            })
            .collect()
    })
}
