//! CSV and binary-cache readers/writers for [`PricePanel`].
//!
//! Long CSV (canonical): `stock_id,date,open,high,low,close,volume[,tradable][,extra…]`,
//! one row per (stock, day), dates as `YYYY-MM-DD`, rows of a stock in
//! increasing date order.
//!
//! Wide CSV (convenience): `date,<stock>:<feature>,…`, one row per day; an
//! empty cell marks the (stock, day) as missing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{PanelScale, PricePanel, DATE_FORMAT, REQUIRED_FEATURES};
use crate::{Error, Result, Scalar};

/// On-disk panel layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelFormat {
    CsvLong,
    CsvWide,
    Binary,
}

pub const CACHE_MAGIC: &[u8; 8] = b"TSBPANEL";
pub const CACHE_VERSION: u32 = 1;

/// Loads a panel; stocks come out sorted by id, days by calendar.
pub fn load_panel<T: Scalar>(path: impl AsRef<Path>, format: PanelFormat) -> Result<PricePanel<T>> {
    let path = path.as_ref();
    match format {
        PanelFormat::CsvLong => read_long(File::open(path)?),
        PanelFormat::CsvWide => read_wide(File::open(path)?),
        PanelFormat::Binary => read_cache(BufReader::new(File::open(path)?)),
    }
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).map_err(|e| Error::MalformedRow {
        line,
        message: format!("bad date `{s}`: {e}"),
    })
}

fn parse_num<T: Scalar>(s: &str, column: &str, line: u64) -> Result<T> {
    s.trim()
        .parse::<f64>()
        .ok()
        .and_then(T::from_f64)
        .ok_or_else(|| Error::MalformedRow {
            line,
            message: format!("column `{column}`: cannot parse `{s}` as a number"),
        })
}

fn parse_flag(s: &str, line: u64) -> Result<bool> {
    match s.trim() {
        "1" | "true" | "TRUE" | "True" => Ok(true),
        "0" | "false" | "FALSE" | "False" => Ok(false),
        other => Err(Error::MalformedRow {
            line,
            message: format!("column `tradable`: expected 0/1/true/false, got `{other}`"),
        }),
    }
}

struct Row<T> {
    values: Vec<T>,
    tradable: bool,
}

fn assemble<T: Scalar>(
    features: Vec<String>,
    rows: BTreeMap<String, BTreeMap<NaiveDate, Row<T>>>,
    has_tradable: bool,
) -> Result<PricePanel<T>> {
    let calendar: Vec<NaiveDate> = rows
        .values()
        .flat_map(|days| days.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let f = features.len();
    let (n, t) = (rows.len(), calendar.len());
    let mut values = vec![T::nan(); n * t * f];
    let mut present = vec![false; n * t];
    let mut tradable = vec![false; n * t];
    for (i, days) in rows.values().enumerate() {
        for (date, row) in days {
            let d = calendar.binary_search(date).expect("date in calendar");
            let cell = i * t + d;
            values[cell * f..(cell + 1) * f].copy_from_slice(&row.values);
            present[cell] = true;
            tradable[cell] = row.tradable;
        }
    }
    PricePanel::new(
        rows.into_keys().collect(),
        calendar,
        features,
        values,
        present,
        has_tradable.then_some(tradable),
    )
}

fn check_bar<T: Scalar>(stock: &str, date: NaiveDate, features: &[String], v: &[T]) -> Result<()> {
    let get = |name: &str| v[features.iter().position(|f| f == name).expect("required")];
    let (high, low) = (get("high"), get("low"));
    if high < low {
        return Err(Error::InvalidBar {
            stock: stock.to_string(),
            date: date.format(DATE_FORMAT).to_string(),
            message: format!("high {high} < low {low}"),
        });
    }
    Ok(())
}

pub(super) fn read_long<T: Scalar, R: Read>(reader: R) -> Result<PricePanel<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let missing = |name: &str| Error::MalformedRow {
        line: 1,
        message: format!("header lacks column `{name}`"),
    };
    let stock_col = col("stock_id").ok_or_else(|| missing("stock_id"))?;
    let date_col = col("date").ok_or_else(|| missing("date"))?;
    let tradable_col = col("tradable");
    let mut features: Vec<String> = REQUIRED_FEATURES.iter().map(|s| s.to_string()).collect();
    let mut feature_cols = Vec::new();
    for name in REQUIRED_FEATURES {
        feature_cols.push(col(name).ok_or_else(|| missing(name))?);
    }
    for (k, h) in header.iter().enumerate() {
        let known = ["stock_id", "date", "tradable"].contains(&h) || REQUIRED_FEATURES.contains(&h);
        if !known {
            features.push(h.to_string());
            feature_cols.push(k);
        }
    }

    let mut rows: BTreeMap<String, BTreeMap<NaiveDate, Row<T>>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let stock = record[stock_col].to_string();
        if stock.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty stock_id".into(),
            });
        }
        let date = parse_date(&record[date_col], line)?;
        let values = feature_cols
            .iter()
            .zip(&features)
            .map(|(&k, name)| parse_num(&record[k], name, line))
            .collect::<Result<Vec<T>>>()?;
        check_bar(&stock, date, &features, &values)?;
        let tradable = match tradable_col {
            Some(k) => parse_flag(&record[k], line)?,
            None => true,
        };
        let days = rows.entry(stock.clone()).or_default();
        if let Some((&last, _)) = days.last_key_value() {
            if date == last {
                return Err(Error::DuplicateRow {
                    stock,
                    date: date.format(DATE_FORMAT).to_string(),
                });
            }
            if date < last {
                return Err(Error::NonMonotonicDates {
                    stock,
                    date: date.format(DATE_FORMAT).to_string(),
                    previous: last.format(DATE_FORMAT).to_string(),
                });
            }
        }
        days.insert(date, Row { values, tradable });
    }
    if rows.is_empty() {
        return Err(Error::InvalidPanel("no data rows".into()));
    }
    assemble(features, rows, tradable_col.is_some())
}

pub(super) fn read_wide<T: Scalar, R: Read>(reader: R) -> Result<PricePanel<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("date") {
        return Err(Error::MalformedRow {
            line: 1,
            message: "first column of a wide file must be `date`".into(),
        });
    }
    // (stock, feature) per column
    let mut columns = Vec::new();
    let mut feature_order: Vec<String> = REQUIRED_FEATURES.iter().map(|s| s.to_string()).collect();
    for h in header.iter().skip(1) {
        let (stock, feature) = h.split_once(':').ok_or_else(|| Error::MalformedRow {
            line: 1,
            message: format!("column `{h}` is not of the form stock:feature"),
        })?;
        if feature != "tradable" && !feature_order.iter().any(|f| f == feature) {
            feature_order.push(feature.to_string());
        }
        columns.push((stock.to_string(), feature.to_string()));
    }
    let has_tradable = columns.iter().any(|(_, f)| f == "tradable");
    let stocks: BTreeSet<String> = columns.iter().map(|(s, _)| s.clone()).collect();
    let mut rows: BTreeMap<String, BTreeMap<NaiveDate, Row<T>>> = BTreeMap::new();
    let mut last_date: Option<NaiveDate> = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[0], line)?;
        if let Some(prev) = last_date {
            if date <= prev {
                return Err(Error::NonMonotonicDates {
                    stock: "*".into(),
                    date: date.format(DATE_FORMAT).to_string(),
                    previous: prev.format(DATE_FORMAT).to_string(),
                });
            }
        }
        last_date = Some(date);
        let mut cells: BTreeMap<&str, (Vec<Option<T>>, bool)> = stocks
            .iter()
            .map(|s| (s.as_str(), (vec![None; feature_order.len()], true)))
            .collect();
        for (k, (stock, feature)) in columns.iter().enumerate() {
            let raw = record.get(k + 1).unwrap_or("");
            if raw.is_empty() {
                continue;
            }
            let cell = cells.get_mut(stock.as_str()).expect("known stock");
            if feature == "tradable" {
                cell.1 = parse_flag(raw, line)?;
            } else {
                let pos = feature_order.iter().position(|f| f == feature).expect("known feature");
                cell.0[pos] = Some(parse_num(raw, &format!("{stock}:{feature}"), line)?);
            }
        }
        for (stock, (vals, tradable)) in cells {
            if vals.iter().all(Option::is_none) {
                continue;
            }
            let Some(values) = vals.into_iter().collect::<Option<Vec<T>>>() else {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("stock {stock} has a partially filled bar"),
                });
            };
            check_bar(stock, date, &feature_order, &values)?;
            rows.entry(stock.to_string())
                .or_default()
                .insert(date, Row { values, tradable });
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidPanel("no data rows".into()));
    }
    assemble(feature_order, rows, has_tradable)
}

/// Writes the canonical long CSV. Floats use the shortest representation
/// that parses back to the same value, so load → save → load is lossless.
pub fn save_panel_csv<T: Scalar>(panel: &PricePanel<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_long(panel, file)
}

pub(super) fn write_long<T: Scalar, W: Write>(panel: &PricePanel<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["stock_id".to_string(), "date".to_string()];
    header.extend(panel.feature_names().iter().cloned());
    if panel.has_tradability() {
        header.push("tradable".into());
    }
    w.write_record(&header)?;
    let dates: Vec<String> = panel
        .calendar()
        .iter()
        .map(|d| d.format(DATE_FORMAT).to_string())
        .collect();
    for (i, id) in panel.stock_ids().iter().enumerate() {
        for (t, date) in dates.iter().enumerate() {
            let Some(cell) = panel.cell(i, t) else {
                continue;
            };
            let mut rec = Vec::with_capacity(header.len());
            rec.push(id.clone());
            rec.push(date.clone());
            rec.extend(cell.iter().map(|v| v.to_string()));
            if let Some(mask) = panel.tradability_mask() {
                rec.push(if mask[i * panel.n_days() + t] { "1" } else { "0" }.into());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

/// Binary cache layout (little endian):
///
/// ```text
/// magic "TSBPANEL" | version u32 | N u64 | T u64 | F u64 | flags u8
/// N stock ids, T ISO dates, F feature names   (each: len u32 + UTF-8)
/// presence N·T bytes | tradability N·T bytes (if flags & 1)
/// values N·T·F f64, row-major over (stock, day, feature)
/// ```
///
/// `flags & 2` marks a cross-sectionally normalized panel.
pub fn write_cache<T: Scalar, W: Write>(panel: &PricePanel<T>, mut w: W) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    for dim in [panel.n_stocks(), panel.n_days(), panel.n_features()] {
        w.write_all(&(dim as u64).to_le_bytes())?;
    }
    let mut flags = 0u8;
    if panel.has_tradability() {
        flags |= 1;
    }
    if panel.scale() == PanelScale::CrossSectionalZ {
        flags |= 2;
    }
    w.write_all(&[flags])?;
    for id in panel.stock_ids() {
        put_str(&mut w, id)?;
    }
    for d in panel.calendar() {
        put_str(&mut w, &d.format(DATE_FORMAT).to_string())?;
    }
    for f in panel.feature_names() {
        put_str(&mut w, f)?;
    }
    let bytes: Vec<u8> = panel.presence_mask().iter().map(|&b| b as u8).collect();
    w.write_all(&bytes)?;
    if let Some(mask) = panel.tradability_mask() {
        let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
        w.write_all(&bytes)?;
    }
    for v in panel.values() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Cache(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn take_str<R: Read>(r: &mut R) -> Result<String> {
    let len = u32::from_le_bytes(take::<4, _>(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Cache(format!("truncated string: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Cache(e.to_string()))
}

fn take_bools<R: Read>(r: &mut R, n: usize) -> Result<Vec<bool>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Cache(format!("truncated mask: {e}")))?;
    Ok(buf.into_iter().map(|b| b != 0).collect())
}

pub fn read_cache<T: Scalar, R: Read>(mut r: R) -> Result<PricePanel<T>> {
    if &take::<8, _>(&mut r)? != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(take::<4, _>(&mut r)?);
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u64::from_le_bytes(take::<8, _>(&mut r)?) as usize;
    }
    let [n, t, f] = dims;
    let flags = take::<1, _>(&mut r)?[0];
    let stock_ids = (0..n).map(|_| take_str(&mut r)).collect::<Result<Vec<_>>>()?;
    let calendar = (0..t)
        .map(|_| {
            let s = take_str(&mut r)?;
            NaiveDate::parse_from_str(&s, DATE_FORMAT).map_err(|e| Error::Cache(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let features = (0..f).map(|_| take_str(&mut r)).collect::<Result<Vec<_>>>()?;
    let present = take_bools(&mut r, n * t)?;
    let tradable = if flags & 1 != 0 {
        Some(take_bools(&mut r, n * t)?)
    } else {
        None
    };
    let mut values = Vec::with_capacity(n * t * f);
    for _ in 0..n * t * f {
        let v = f64::from_le_bytes(take::<8, _>(&mut r)?);
        values.push(T::from_f64(v).unwrap_or_else(T::nan));
    }
    let scale = if flags & 2 != 0 {
        PanelScale::CrossSectionalZ
    } else {
        PanelScale::Raw
    };
    PricePanel::with_scale(stock_ids, calendar, features, values, present, tradable, scale)
}
