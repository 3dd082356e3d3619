//! The five pipeline verbs.

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use tsbench::backtest::{write_equity_csv, write_trades_csv};
use tsbench::characteristics::write_report_csv;
use tsbench::metrics::METRIC_COLUMNS;
use tsbench::panel::{save_panel_csv, write_cache, DATE_FORMAT};
use tsbench::segment::write_labeling_csv;
use tsbench::synth::write_truth_csv;
use tsbench::{MetricsReport64, PricePanel64, SegmentLabeling64};

use crate::archive::{
    write_atomic, ArchiveWriter, Manifest, ARCHIVE_FORMAT, ARCHIVE_VERSION, CONFIG_FILE, CUMULATIVE_FILE,
    MANIFEST_FILE, METRICS_FILE, MODELS_DIR, PANEL_FILE,
};
use crate::config::{DataSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, Evaluation, Prepared};

/// Reads a config, applies command-line overrides and validates it.
pub fn load_config(path: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> CliResult<RunConfig> {
    let path = path.ok_or_else(|| CliError::Config("--config: a config file is required".into()))?;
    let cfg = RunConfig::from_path(path)?.with_overrides(seed, out);
    cfg.validate()?;
    Ok(cfg)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> tsbench::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(buf)
}

fn json_bytes<S: Serialize>(value: &S) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn cache_bytes(panel: &PricePanel64) -> CliResult<Vec<u8>> {
    csv_bytes(|buf| write_cache(panel, buf))
}

/// Generates the configured synthetic market into `panel.csv`, `panel.bin`
/// and `truth.csv` under the output directory.
pub fn cmd_synth(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let DataSource::Synth(spec) = &cfg.data else {
        return Err(CliError::Config(
            "data.source: `synth` requires source = \"synth\"".into(),
        ));
    };
    let data = pipeline::synthesize(spec, cfg.seed())?;
    let out = &cfg.output.dir;
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("panel.csv");
    let tmp = tempfile::NamedTempFile::new_in(out)?;
    save_panel_csv(&data.panel, tmp.path()).map_err(|e| CliError::Data(e.to_string()))?;
    tmp.persist(&csv_path).map_err(|e| CliError::Data(e.to_string()))?;
    let bin_path = out.join(PANEL_FILE);
    write_atomic(&bin_path, &cache_bytes(&data.panel)?)?;
    let truth_path = out.join("truth.csv");
    let truth = data.truth.unwrap_or_default();
    write_atomic(&truth_path, &csv_bytes(|buf| write_truth_csv(&truth, buf))?)?;
    info!(
        "synthesized {} stocks x {} days into {}",
        data.panel.n_stocks(),
        data.panel.n_days(),
        out.display()
    );
    Ok(vec![csv_path, bin_path, truth_path])
}

/// Ingests, normalizes, segments and splits; writes the labelled dataset
/// under `<out>/dataset`.
pub fn cmd_build(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let data = pipeline::load_data(cfg)?;
    let prepared = pipeline::prepare(cfg, data.panel)?;
    let (segments, labelings) = pipeline::label_segments(cfg, &prepared.returns)?;
    let dir = cfg.output.dir.join("dataset");
    let files: Vec<(&str, Vec<u8>)> = vec![
        ("panel.bin", cache_bytes(&prepared.panel)?),
        ("features.bin", cache_bytes(&prepared.features)?),
        ("split.json", json_bytes(&prepared.split)?),
        ("labels.csv", csv_bytes(|buf| write_labeling_csv(&labelings, buf))?),
        ("segments.json", json_bytes(&labelings)?),
        ("degenerate_days.csv", degenerate_csv(&prepared)?),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
    }
    info!(
        "built {} segments ({} trailing days unlabelled), split {:?}",
        segments.windows.len(),
        segments.discarded,
        prepared.split
    );
    Ok(written)
}

fn degenerate_csv(prepared: &Prepared) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["date", "feature"]).map_err(err)?;
    for d in &prepared.degenerate {
        let date = prepared.panel.calendar()[d.day].format(DATE_FORMAT).to_string();
        w.write_record([date.as_str(), d.feature.as_str()]).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn characteristics_csv(cfg: &RunConfig, prepared: &Prepared, labelings: &[SegmentLabeling64]) -> CliResult<Vec<u8>> {
    let rows = pipeline::characterize(cfg, &prepared.panel, &prepared.returns, labelings)?;
    csv_bytes(|buf| write_report_csv(&rows, buf))
}

/// Writes the per-pattern characteristics table to
/// `<out>/characteristics.csv`.
pub fn cmd_characterize(cfg: &RunConfig) -> CliResult<PathBuf> {
    let data = pipeline::load_data(cfg)?;
    let prepared = pipeline::prepare(cfg, data.panel)?;
    let (_, labelings) = pipeline::label_segments(cfg, &prepared.returns)?;
    let p = cfg.output.dir.join("characteristics.csv");
    write_atomic(&p, &characteristics_csv(cfg, &prepared, &labelings)?)?;
    Ok(p)
}

/// A committed run archive.
#[derive(Debug, Clone)]
pub struct RunArchive {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub metrics: Vec<MetricsReport64>,
}

fn metrics_table(evals: &[Evaluation]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    let mut header = vec!["Model"];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header).map_err(err)?;
    for e in evals {
        let mut rec = vec![e.model.name.clone()];
        rec.extend(
            e.metrics
                .row()
                .iter()
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn cumulative_csv(evals: &[Evaluation]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    let mut header = vec!["date".to_string(), "benchmark".to_string()];
    header.extend(evals.iter().map(|e| e.model.name.clone()));
    w.write_record(&header).map_err(err)?;
    let first = &evals[0].portfolio;
    let mut bench = vec![0.0];
    for r in &first.benchmark_returns {
        bench.push((1.0 + bench.last().unwrap()) * (1.0 + r) - 1.0);
    }
    let curves: Vec<Vec<f64>> = evals.iter().map(|e| e.portfolio.cumulative_returns()).collect();
    for (k, date) in first.dates.iter().enumerate() {
        let mut rec = vec![date.format(DATE_FORMAT).to_string(), bench[k].to_string()];
        rec.extend(curves.iter().map(|c| c[k].to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn predictions_csv(e: &Evaluation, prepared: &Prepared) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["date", "stock_id", "score"]).map_err(err)?;
    for t in pipeline::decision_days(&prepared.split) {
        let date = e.scores.calendar[t].format(DATE_FORMAT).to_string();
        for (i, id) in e.scores.stock_ids.iter().enumerate() {
            if let Some(s) = e.scores.get(i, t) {
                w.write_record([date.clone(), id.clone(), s.to_string()]).map_err(err)?;
            }
        }
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn training_log_csv(e: &Evaluation) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["epoch", "train_loss", "valid_ic"]).map_err(err)?;
    for l in &e.model.log {
        w.write_record([
            l.epoch.to_string(),
            l.train_loss.to_string(),
            l.valid_ic.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

/// Serialized metrics record; byte-identical across runs with the same
/// config and seed.
pub fn metrics_json(report: &MetricsReport64) -> CliResult<Vec<u8>> {
    json_bytes(report)
}

/// Trains, predicts, backtests and scores every predictor, then commits a
/// timestamped archive under the output directory.
pub fn cmd_run(cfg: &RunConfig, jobs: Option<usize>) -> CliResult<RunArchive> {
    if cfg.predictors.is_empty() {
        return Err(CliError::Config(
            "predictors: at least one predictor is required".into(),
        ));
    }
    let data = pipeline::load_data(cfg)?;
    let prepared = pipeline::prepare(cfg, data.panel)?;
    let (_, labelings) = pipeline::label_segments(cfg, &prepared.returns)?;
    let characteristics = characteristics_csv(cfg, &prepared, &labelings)?;
    let evals = pipeline::run_predictors(cfg, &prepared, jobs)?;

    let writer = ArchiveWriter::new(&cfg.output.dir)?;
    let manifest = Manifest {
        format: ARCHIVE_FORMAT.into(),
        version: ARCHIVE_VERSION,
        created: chrono::Utc::now().to_rfc3339(),
        seed: cfg.seed(),
        models: evals.iter().map(|e| e.model.name.clone()).collect(),
    };
    writer.write(CONFIG_FILE, cfg.archived(PANEL_FILE).to_toml()?.as_bytes())?;
    writer.write(PANEL_FILE, &cache_bytes(&prepared.panel)?)?;
    writer.write("split.json", &json_bytes(&prepared.split)?)?;
    writer.write("labels.csv", &csv_bytes(|buf| write_labeling_csv(&labelings, buf))?)?;
    writer.write("characteristics.csv", &characteristics)?;
    writer.write("degenerate_days.csv", &degenerate_csv(&prepared)?)?;
    writer.write("metrics.csv", &metrics_table(&evals)?)?;
    writer.write(CUMULATIVE_FILE, &cumulative_csv(&evals)?)?;
    for e in &evals {
        let dir = format!("{MODELS_DIR}/{}", e.model.name);
        let model_json = e.model.to_json().map_err(|err| CliError::Data(err.to_string()))?;
        writer.write(&format!("{dir}/model.json"), model_json.as_bytes())?;
        writer.write(&format!("{dir}/training_log.csv"), &training_log_csv(e)?)?;
        writer.write(&format!("{dir}/predictions.csv"), &predictions_csv(e, &prepared)?)?;
        writer.write(
            &format!("{dir}/trades.csv"),
            &csv_bytes(|buf| write_trades_csv(&e.portfolio, prepared.panel.calendar(), buf))?,
        )?;
        writer.write(
            &format!("{dir}/equity.csv"),
            &csv_bytes(|buf| write_equity_csv(&e.portfolio, buf))?,
        )?;
        writer.write(&format!("{dir}/{METRICS_FILE}"), &metrics_json(&e.metrics)?)?;
    }
    writer.write(MANIFEST_FILE, &json_bytes(&manifest)?)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S");
    let dir = writer.commit(&format!("run-{stamp}-s{}", cfg.seed()))?;
    info!("archived {} models to {}", evals.len(), dir.display());
    Ok(RunArchive {
        dir,
        manifest,
        metrics: evals.into_iter().map(|e| e.metrics).collect(),
    })
}

/// Writes the comparison table and merged cumulative-return curves of one
/// or more archives into `out`.
pub fn cmd_report(archives: &[PathBuf], out: &Path) -> CliResult<crate::archive::ReportFiles> {
    let files = crate::archive::write_report(archives, out)?;
    info!("report written to {}", files.table_markdown.display());
    Ok(files)
}

/// Convenience for tests and scripts: the archived metrics file of a model.
pub fn archived_metrics_path(archive: &Path, model: &str) -> PathBuf {
    archive.join(MODELS_DIR).join(model).join(METRICS_FILE)
}
