//! Run archives: self-contained result directories written atomically.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use tsbench::metrics::METRIC_COLUMNS;
use tsbench::MetricsReport64;

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ARCHIVE_FORMAT: &str = "tsbench-run";
pub const ARCHIVE_VERSION: u32 = 1;
pub const CONFIG_FILE: &str = "config.toml";
pub const PANEL_FILE: &str = "panel.bin";
pub const CUMULATIVE_FILE: &str = "cumulative_returns.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const MODELS_DIR: &str = "models";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub created: String,
    pub seed: u64,
    /// Model directory names in config order.
    pub models: Vec<String>,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Builds an archive in a hidden temporary directory next to its final
/// location, then renames it into place.
pub struct ArchiveWriter {
    tmp: TempDir,
    out: PathBuf,
}

impl ArchiveWriter {
    pub fn new(out: &Path) -> CliResult<Self> {
        fs::create_dir_all(out)?;
        let tmp = tempfile::Builder::new().prefix(".tmp-run-").tempdir_in(out)?;
        Ok(Self {
            tmp,
            out: out.to_path_buf(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.tmp.path().join(rel)
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, bytes)?;
        Ok(())
    }

    /// Renames the finished archive to `<out>/<name>`, adding a numeric
    /// suffix when that name is taken.
    pub fn commit(self, name: &str) -> CliResult<PathBuf> {
        let staged = self.tmp.keep();
        for k in 0.. {
            let target = if k == 0 {
                self.out.join(name)
            } else {
                self.out.join(format!("{name}-{k}"))
            };
            if target.exists() {
                continue;
            }
            match fs::rename(&staged, &target) {
                Ok(()) => return Ok(target),
                Err(_) if target.exists() => continue,
                Err(e) => {
                    let _ = fs::remove_dir_all(&staged);
                    return Err(e.into());
                }
            }
        }
        unreachable!()
    }
}

/// Reads and checks an archive's manifest.
pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let p = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&p).map_err(|e| CliError::Archive(format!("{}: {e}", p.display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Archive(format!("{}: {e}", p.display())))?;
    if m.format != ARCHIVE_FORMAT || m.version != ARCHIVE_VERSION {
        return Err(CliError::Archive(format!(
            "{}: format {} v{} is not {ARCHIVE_FORMAT} v{ARCHIVE_VERSION}",
            dir.display(),
            m.format,
            m.version
        )));
    }
    Ok(m)
}

/// One model's result read back from an archive.
#[derive(Debug, Clone)]
pub struct ArchivedModel {
    pub archive: PathBuf,
    pub name: String,
    pub metrics: MetricsReport64,
}

pub fn read_models(dir: &Path) -> CliResult<Vec<ArchivedModel>> {
    let manifest = read_manifest(dir)?;
    manifest
        .models
        .iter()
        .map(|name| {
            let p = dir.join(MODELS_DIR).join(name).join(METRICS_FILE);
            let text = fs::read_to_string(&p).map_err(|e| CliError::Archive(format!("{}: {e}", p.display())))?;
            let metrics =
                serde_json::from_str(&text).map_err(|e| CliError::Archive(format!("{}: {e}", p.display())))?;
            Ok(ArchivedModel {
                archive: dir.to_path_buf(),
                name: name.clone(),
                metrics,
            })
        })
        .collect()
}

/// `date` followed by one column per series; blank where a series has no
/// value on a date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveTable {
    pub columns: Vec<String>,
    pub rows: BTreeMap<String, Vec<Option<String>>>,
}

impl CurveTable {
    pub fn read(path: &Path) -> CliResult<Self> {
        let bad = |e: String| CliError::Archive(format!("{}: {e}", path.display()));
        let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.get(0) != Some("date") {
            return Err(bad("first column must be `date`".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|v| (!v.is_empty()).then(|| v.to_string()))
                .collect();
            rows.insert(rec[0].to_string(), vals);
        }
        Ok(Self { columns, rows })
    }

    /// Appends the other table's columns under new names.
    pub fn merge(&mut self, other: &CurveTable, names: &[String]) {
        let width = self.columns.len();
        self.columns.extend(names.iter().cloned());
        for row in self.rows.values_mut() {
            row.resize(width + names.len(), None);
        }
        for (date, vals) in &other.rows {
            let row = self
                .rows
                .entry(date.clone())
                .or_insert_with(|| vec![None; width + names.len()]);
            for (k, v) in vals.iter().enumerate() {
                row[width + k] = v.clone();
            }
        }
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["date".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(|e| CliError::Data(e.to_string()))?;
        for (date, vals) in &self.rows {
            let mut rec = vec![date.clone()];
            rec.extend(vals.iter().map(|v| v.clone().unwrap_or_default()));
            w.write_record(&rec).map_err(|e| CliError::Data(e.to_string()))?;
        }
        w.into_inner().map_err(|e| CliError::Data(e.to_string()))
    }
}

/// Files written by a report.
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub table_csv: PathBuf,
    pub table_markdown: PathBuf,
    pub cumulative_csv: PathBuf,
}

fn model_labels(models: &[ArchivedModel]) -> Vec<String> {
    let mut seen = BTreeMap::<&str, usize>::new();
    for m in models {
        *seen.entry(&m.name).or_default() += 1;
    }
    models
        .iter()
        .map(|m| {
            if seen[m.name.as_str()] > 1 {
                let run = m.archive.file_name().map(|s| s.to_string_lossy()).unwrap_or_default();
                format!("{run}/{}", m.name)
            } else {
                m.name.clone()
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Cross-model comparison of one or more archives: the metric table as CSV
/// and Markdown, plus every model's cumulative return by date.
pub fn write_report(archives: &[PathBuf], out: &Path) -> CliResult<ReportFiles> {
    if archives.is_empty() {
        return Err(CliError::Config("report: at least one archive is required".into()));
    }
    let mut models = Vec::new();
    for a in archives {
        models.extend(read_models(a)?);
    }
    let labels = model_labels(&models);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["Model"];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header).map_err(|e| CliError::Data(e.to_string()))?;
    let mut md = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for (m, label) in models.iter().zip(&labels) {
        let row = m.metrics.row();
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|&v| cell(v)));
        w.write_record(&rec).map_err(|e| CliError::Data(e.to_string()))?;
        let shown: Vec<String> = row
            .iter()
            .map(|v| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into()))
            .collect();
        md.push_str(&format!("| {label} | {} |\n", shown.join(" | ")));
    }
    let table = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;

    let mut curves = CurveTable::default();
    let mut offset = 0;
    for a in archives {
        let t = CurveTable::read(&a.join(CUMULATIVE_FILE))?;
        let n = read_manifest(a)?.models.len();
        if t.columns.len() != n + 1 || t.columns[0] != "benchmark" {
            return Err(CliError::Archive(format!(
                "{}: expected columns date, benchmark and {n} models",
                a.join(CUMULATIVE_FILE).display()
            )));
        }
        let run = a
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut names = vec![format!("benchmark:{run}")];
        names.extend(labels[offset..offset + n].iter().cloned());
        curves.merge(&t, &names);
        offset += n;
    }

    let files = ReportFiles {
        table_csv: out.join("report.csv"),
        table_markdown: out.join("report.md"),
        cumulative_csv: out.join(CUMULATIVE_FILE),
    };
    write_atomic(&files.table_csv, &table)?;
    write_atomic(&files.table_markdown, md.as_bytes())?;
    write_atomic(&files.cumulative_csv, &curves.to_csv()?)?;
    Ok(files)
}
