//! File formats: biomarker CSV/NDJSON, accelerometer CSV and factor CSV.
//!
//! A path of `-` reads standard input or writes standard output.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use pphm_core::activity::AccelSample;
use pphm_core::predictor::FactorMatrix;
use pphm_core::{validate_series, BiomarkerSample, BiomarkerSeries};

use crate::error::{CliError, Result};

pub const BIOMARKER_HEADER: [&str; 5] = ["subject_id", "channel", "t", "value", "unit"];
pub const ACCEL_HEADER: [&str; 7] = [
    "subject_id",
    "sensor_id",
    "body_location",
    "t",
    "ax",
    "ay",
    "az",
];

pub fn open_input(path: &Path) -> Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin()));
    }
    File::open(path)
        .map(|f| Box::new(BufReader::new(f)) as Box<dyn Read>)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))
}

pub fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdout()));
    }
    File::create(path)
        .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))
}

fn is_ndjson(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("ndjson" | "jsonl")
    )
}

/// A timestamp as written in a file: seconds, or an RFC 3339 instant.
#[derive(Debug, Clone, PartialEq)]
enum Stamp {
    Seconds(f64),
    Instant(DateTime<FixedOffset>),
}

fn parse_stamp(s: &str) -> Option<Stamp> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(Stamp::Seconds(v));
    }
    DateTime::parse_from_rfc3339(s).ok().map(Stamp::Instant)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTime {
    Seconds(f64),
    Text(String),
}

#[derive(Deserialize)]
struct JsonRecord {
    subject_id: String,
    channel: String,
    t: JsonTime,
    value: f64,
    unit: String,
}

struct RawRecord {
    subject_id: String,
    channel: String,
    t: Stamp,
    value: f64,
    unit: String,
}

fn csv_records(reader: impl Read) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::input(format!("biomarker CSV: {e}")))?
        .clone();
    let cols: Vec<usize> = BIOMARKER_HEADER
        .iter()
        .map(|h| {
            headers
                .iter()
                .position(|x| x == *h)
                .ok_or_else(|| CliError::input(format!("biomarker CSV: missing column `{h}`")))
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::input(format!("biomarker CSV line {line}: {e}")))?;
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let t = parse_stamp(field(2)).ok_or_else(|| {
            CliError::input(format!(
                "biomarker CSV line {line}: bad time `{}`",
                field(2)
            ))
        })?;
        let value = field(3).parse::<f64>().map_err(|_| {
            CliError::input(format!(
                "biomarker CSV line {line}: bad value `{}`",
                field(3)
            ))
        })?;
        out.push(RawRecord {
            subject_id: field(0).to_string(),
            channel: field(1).to_string(),
            t,
            value,
            unit: field(4).to_string(),
        });
    }
    Ok(out)
}

fn ndjson_records(reader: impl Read) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::input(format!("biomarker NDJSON line {}: {e}", i + 1)))?;
        let t = match rec.t {
            JsonTime::Seconds(v) => Stamp::Seconds(v),
            JsonTime::Text(s) => parse_stamp(&s).ok_or_else(|| {
                CliError::input(format!("biomarker NDJSON line {}: bad time `{s}`", i + 1))
            })?,
        };
        out.push(RawRecord {
            subject_id: rec.subject_id,
            channel: rec.channel,
            t,
            value: rec.value,
            unit: rec.unit,
        });
    }
    Ok(out)
}

/// Reads biomarker records and splits them into one validated series per
/// (subject, channel), ordered by subject then channel.
///
/// Numeric times are taken as seconds already relative to the series
/// origin. RFC 3339 times become seconds after the earliest instant in
/// their series. A series may not mix the two.
pub fn read_biomarkers(path: &Path) -> Result<Vec<BiomarkerSeries>> {
    let reader = open_input(path)?;
    let records = if is_ndjson(path) {
        ndjson_records(reader)?
    } else {
        csv_records(reader)?
    };
    if records.is_empty() {
        return Err(CliError::input(format!("{}: no samples", path.display())));
    }

    let mut groups: BTreeMap<(String, String), Vec<RawRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.subject_id.clone(), r.channel.clone()))
            .or_default()
            .push(r);
    }

    groups
        .into_iter()
        .map(|((subject, channel), recs)| {
            let origin = recs
                .iter()
                .filter_map(|r| match r.t {
                    Stamp::Instant(d) => Some(d),
                    Stamp::Seconds(_) => None,
                })
                .min();
            let samples = recs
                .into_iter()
                .map(|r| {
                    let t = match (r.t, origin) {
                        (Stamp::Seconds(v), None) => v,
                        (Stamp::Instant(d), Some(o)) => {
                            let ns = (d - o).num_nanoseconds().ok_or_else(|| {
                                CliError::input(format!("{subject}/{channel}: time span too long"))
                            })?;
                            ns as f64 / 1e9
                        }
                        _ => {
                            return Err(CliError::input(format!(
                                "{subject}/{channel}: mixes numeric and RFC 3339 times"
                            )))
                        }
                    };
                    Ok(BiomarkerSample::new(
                        r.subject_id,
                        r.channel,
                        t,
                        r.value,
                        r.unit,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            validate_series(samples)
                .map_err(|e| CliError::input(format!("{subject}/{channel}: {e}")))
        })
        .collect()
}

#[derive(Serialize)]
struct SampleOut<'a> {
    subject_id: &'a str,
    channel: &'a str,
    t: f64,
    value: f64,
    unit: &'a str,
}

/// Writes series as CSV, or NDJSON when the path ends in `.ndjson`/`.jsonl`.
pub fn write_biomarkers(path: &Path, series: &[&BiomarkerSeries]) -> Result<()> {
    let out = open_output(path)?;
    if is_ndjson(path) {
        write_biomarkers_ndjson(out, series)
    } else {
        write_biomarkers_csv(out, series)
    }
}

pub fn write_biomarkers_csv(out: impl Write, series: &[&BiomarkerSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BIOMARKER_HEADER).map_err(csv_err)?;
    for s in series {
        for x in s.samples() {
            w.write_record([
                x.subject_id.as_str(),
                x.channel.as_str(),
                &x.t.to_string(),
                &x.value.to_string(),
                x.unit.as_str(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_biomarkers_ndjson(mut out: impl Write, series: &[&BiomarkerSeries]) -> Result<()> {
    for s in series {
        for x in s.samples() {
            let rec = SampleOut {
                subject_id: &x.subject_id,
                channel: &x.channel,
                t: x.t,
                value: x.value,
                unit: &x.unit,
            };
            serde_json::to_writer(&mut out, &rec).map_err(|e| CliError::input(e.to_string()))?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::input(format!("CSV: {e}"))
}

#[derive(Deserialize)]
struct AccelRecord {
    subject_id: String,
    sensor_id: String,
    body_location: String,
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
}

/// Reads an accelerometer CSV, checking locations against `locations`
/// when it is non-empty.
pub fn read_accel(path: &Path, locations: &[String]) -> Result<Vec<AccelSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open_input(path)?);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<AccelRecord>().enumerate() {
        let line = i + 2;
        let r = rec.map_err(|e| CliError::input(format!("accelerometer CSV line {line}: {e}")))?;
        if !locations.is_empty() && !locations.contains(&r.body_location) {
            return Err(CliError::input(format!(
                "accelerometer CSV line {line}: unknown body location `{}`",
                r.body_location
            )));
        }
        let s = AccelSample::new(
            r.subject_id,
            r.sensor_id,
            r.body_location,
            r.t,
            r.ax,
            r.ay,
            r.az,
        )
        .map_err(|e| CliError::input(format!("accelerometer CSV line {line}: {e}")))?;
        out.push(s);
    }
    if out.is_empty() {
        return Err(CliError::input(format!("{}: no samples", path.display())));
    }
    Ok(out)
}

pub fn write_accel(out: impl Write, samples: &[AccelSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ACCEL_HEADER).map_err(csv_err)?;
    for s in samples {
        w.write_record([
            s.subject_id.as_str(),
            s.sensor_id.as_str(),
            s.body_location.as_str(),
            &s.t.to_string(),
            &s.ax.to_string(),
            &s.ay.to_string(),
            &s.az.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a factor table: a header row, an optional leading `subject_id`
/// column, the `target` column anywhere, and every other column a factor.
pub fn read_factors(path: &Path, target: &str) -> Result<FactorMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open_input(path)?);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let target_col = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| CliError::input(format!("factor CSV: no target column `{target}`")))?;
    let skip_first = headers.get(0) == Some("subject_id");
    let factor_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != target_col && !(skip_first && c == 0))
        .collect();
    if factor_cols.is_empty() {
        return Err(CliError::input("factor CSV: no factor columns"));
    }
    let names = factor_cols
        .iter()
        .map(|&c| headers[c].to_string())
        .collect();

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::input(format!("factor CSV line {line}: {e}")))?;
        let num = |c: usize| -> Result<f64> {
            rec[c].parse::<f64>().map_err(|_| {
                CliError::input(format!(
                    "factor CSV line {line}: `{}` in column `{}` is not a number",
                    &rec[c], &headers[c]
                ))
            })
        };
        rows.push(
            factor_cols
                .iter()
                .map(|&c| num(c))
                .collect::<Result<Vec<_>>>()?,
        );
        y.push(num(target_col)?);
    }
    FactorMatrix::new(names, rows, y).map_err(|e| CliError::input(format!("factor CSV: {e}")))
}

pub fn write_factors(out: impl Write, m: &FactorMatrix, target: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = m.factor_names().iter().map(String::as_str).collect();
    header.push(target);
    w.write_record(&header).map_err(csv_err)?;
    for r in 0..m.n_obs() {
        let mut rec: Vec<String> = m.row(r).iter().map(f64::to_string).collect();
        rec.push(m.target()[r].to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
