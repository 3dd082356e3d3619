use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tsbench::panel::PanelFormat;
use tsbench::predictors::Predictor;
use tsbench::predictors::{PredictorKind, PredictorSpec};
use tsbench_cli::archive::{read_manifest, CONFIG_FILE, MANIFEST_FILE};
use tsbench_cli::commands::archived_metrics_path;
use tsbench_cli::config::{DataSource, SynthSpec};
use tsbench_cli::pipeline::{self, decision_days};
use tsbench_cli::{cmd_build, cmd_characterize, cmd_report, cmd_run, cmd_synth, CliError, RunConfig};

fn smoke_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::synthetic(SynthSpec::default(), 7);
    cfg.segment.cohort_size = 10;
    cfg.backtest.m = 10;
    cfg.backtest.n = 2;
    cfg.output.dir = out.to_path_buf();
    cfg.predictors = vec![
        PredictorSpec::of_kind(PredictorKind::Csm),
        PredictorSpec::of_kind(PredictorKind::Ridge),
        PredictorSpec {
            epochs: 60,
            ..PredictorSpec::of_kind(PredictorKind::LinearRanker)
        },
    ];
    cfg
}

fn metrics_bytes(archive: &Path, models: &[String]) -> Vec<Vec<u8>> {
    models
        .iter()
        .map(|m| fs::read(archived_metrics_path(archive, m)).unwrap())
        .collect()
}

fn leftovers(dir: &Path) -> Vec<PathBuf> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(".tmp"))
        .collect()
}

#[test]
fn synth_build_characterize_run_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = smoke_config(tmp.path());
    let synth_files = cmd_synth(&cfg).unwrap();
    assert!(synth_files.iter().all(|p| p.is_file()));

    let mut file_cfg = cfg.clone();
    file_cfg.data = DataSource::File {
        path: tmp.path().join("panel.csv"),
        format: PanelFormat::CsvLong,
    };
    file_cfg.validate().unwrap();
    let built = cmd_build(&file_cfg).unwrap();
    assert!(built.iter().any(|p| p.ends_with("dataset/labels.csv")));
    let labels = fs::read_to_string(tmp.path().join("dataset/labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1 + 40);

    let table = fs::read_to_string(cmd_characterize(&file_cfg).unwrap()).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);

    let archive = cmd_run(&file_cfg, Some(2)).unwrap();
    assert_eq!(archive.metrics.len(), 3);
    assert!(leftovers(tmp.path()).is_empty());
    for f in [
        MANIFEST_FILE,
        CONFIG_FILE,
        "panel.bin",
        "characteristics.csv",
        "cumulative_returns.csv",
        "metrics.csv",
    ] {
        assert!(archive.dir.join(f).is_file(), "{f}");
    }
    for m in &archive.manifest.models {
        for f in [
            "model.json",
            "training_log.csv",
            "predictions.csv",
            "trades.csv",
            "equity.csv",
            "metrics.json",
        ] {
            assert!(archive.dir.join("models").join(m).join(f).is_file(), "{m}/{f}");
        }
    }

    let report_dir = tmp.path().join("report");
    let files = cmd_report(std::slice::from_ref(&archive.dir), &report_dir).unwrap();
    let table = fs::read_to_string(files.table_csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "Model,MSE,MAE,IC,ICIR,RankIC,RankICIR,ARR,AVol,MDD,ASR,IR"
    );
    assert_eq!(lines.count(), 3);
    let curves = fs::read_to_string(files.cumulative_csv).unwrap();
    assert!(curves.starts_with("date,benchmark:"));
    assert_eq!(curves.lines().count(), 1 + 51);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = smoke_config(tmp.path());
    let a = cmd_run(&cfg, Some(1)).unwrap();
    let b = cmd_run(&cfg, Some(3)).unwrap();
    assert_ne!(a.dir, b.dir);
    let models = &a.manifest.models;
    assert_eq!(metrics_bytes(&a.dir, models), metrics_bytes(&b.dir, models));
    for f in ["cumulative_returns.csv", "metrics.csv", CONFIG_FILE] {
        assert_eq!(
            fs::read(a.dir.join(f)).unwrap(),
            fs::read(b.dir.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn archive_reproduces_itself_without_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs");
    let mut cfg = smoke_config(&inputs);
    cmd_synth(&cfg).unwrap();
    cfg.data = DataSource::File {
        path: inputs.join("panel.csv"),
        format: PanelFormat::CsvLong,
    };
    cfg.output.dir = tmp.path().join("runs");
    let first = cmd_run(&cfg, None).unwrap();
    fs::remove_dir_all(&inputs).unwrap();

    let snapshot = RunConfig::from_path(&first.dir.join(CONFIG_FILE)).unwrap();
    snapshot.validate().unwrap();
    let again = cmd_run(&snapshot, None).unwrap();
    assert!(again.dir.starts_with(&first.dir));
    let models = &first.manifest.models;
    assert_eq!(metrics_bytes(&first.dir, models), metrics_bytes(&again.dir, models));
}

#[test]
fn training_ignores_data_after_the_test_boundary() {
    let cfg = smoke_config(Path::new("unused"));
    let clean = pipeline::synthesize(&SynthSpec::default(), 7).unwrap().panel;
    let prepared = pipeline::prepare(&cfg, clean.clone()).unwrap();
    let boundary = prepared.split.test.start;
    let poisoned = pipeline::prepare(&cfg, clean.poison_from(boundary, 1e6, 1e15).unwrap()).unwrap();
    for k in 0..cfg.predictors.len() {
        let a = pipeline::train_model(&cfg, k, &prepared).unwrap();
        let b = pipeline::train_model(&cfg, k, &poisoned).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap(), "{}", a.name);
    }
}

#[test]
fn scores_ignore_data_after_the_decision_day() {
    let cfg = smoke_config(Path::new("unused"));
    let clean = pipeline::synthesize(&SynthSpec::default(), 3).unwrap().panel;
    let prepared = pipeline::prepare(&cfg, clean.clone()).unwrap();
    let models: Vec<_> = (0..cfg.predictors.len())
        .map(|k| pipeline::train_model(&cfg, k, &prepared).unwrap())
        .collect();
    for day in decision_days(&prepared.split).step_by(7) {
        let poisoned = pipeline::prepare(&cfg, clean.poison_from(day + 1, 1e6, 1e15).unwrap()).unwrap();
        for m in &models {
            let a = m.score_day(&prepared.context().unwrap(), day).unwrap();
            let b = m.score_day(&poisoned.context().unwrap(), day).unwrap();
            assert_eq!(a, b, "{} on day {day}", m.name);
        }
    }
}

#[test]
fn stage_failures_are_tagged() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = smoke_config(tmp.path());
    cfg.segment.length = 400;
    match cmd_run(&cfg, None).unwrap_err() {
        CliError::Stage { stage, .. } => assert_eq!(stage, "segment"),
        other => panic!("{other}"),
    }
    cfg.segment.length = 250;
    cfg.predictors[0].window = 230;
    let err = cmd_run(&cfg, None).unwrap_err();
    assert!(
        matches!(&err, CliError::Config(m) if m.starts_with("predictors[0]")),
        "{err}"
    );
    assert!(leftovers(tmp.path()).is_empty());
}

fn tsbench(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tsbench"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let write = |name: &str, text: &str| fs::write(dir.join(name), text).unwrap();

    write("bad.toml", "seed = 1\n[data]\nsource = \"synth\"\n[backtest]\nm = 0\n");
    assert_eq!(tsbench(&["--config", "bad.toml", "run"], dir).status.code(), Some(2));
    assert_eq!(tsbench(&["run"], dir).status.code(), Some(2));

    write(
        "broken.csv",
        "date,stock_id,open,high,low,close,volume\n2020-01-01,A,1,1,1\n",
    );
    write(
        "io.toml",
        "seed = 1\n[data]\nsource = \"file\"\npath = \"broken.csv\"\n",
    );
    assert_eq!(tsbench(&["--config", "io.toml", "build"], dir).status.code(), Some(3));

    write(
        "short.toml",
        "[data]\nsource = \"synth\"\n[segment]\nlength = 300\n[backtest]\nm = 10\nn = 2\n[[predictors]]\nkind = \"csm\"\n",
    );
    let out = tsbench(&["--config", "short.toml", "--seed", "4", "run"], dir);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("segment"));

    fs::create_dir(dir.join("old")).unwrap();
    write(
        "old/manifest.json",
        r#"{"format":"tsbench-run","version":99,"created":"","seed":1,"models":[]}"#,
    );
    assert_eq!(tsbench(&["report", "old"], dir).status.code(), Some(5));

    write(
        "ok.toml",
        "seed = 5\n[data]\nsource = \"synth\"\n[segment]\ncohort_size = 10\n[backtest]\nm = 10\nn = 2\n[[predictors]]\nkind = \"blsw\"\n",
    );
    let out = tsbench(&["--config", "ok.toml", "--out", "runs", "--jobs", "2", "run"], dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let archive = PathBuf::from(String::from_utf8(out.stdout).unwrap().trim());
    assert_eq!(read_manifest(&dir.join(&archive)).unwrap().seed, 5);
    let out = tsbench(&["--out", "rep", "report", archive.to_str().unwrap()], dir);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("rep/report.md").is_file());
}
