//! Domain types for paired sensor series, CSV ingestion/emission, windowing
//! and range splitting.
//!
//! A [`SeriesPair`] holds two synchronously sampled channels: the leading
//! signal `c` and the target signal `g`. Sample indices are plain integers
//! with unit step; ingestion rejects gaps rather than imputing.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

/// One timestamped sample of both channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// Sample index, strictly increasing with step 1 inside a series.
    pub t: i64,
    /// Leading-sensor sample.
    pub c: f64,
    /// Target-sensor sample.
    pub g: f64,
    /// Optional ground-truth fault flag carried through CSV round-trips.
    pub fault: Option<bool>,
}

impl Record {
    pub fn new(t: i64, c: f64, g: f64) -> Self {
        Record { t, c, g, fault: None }
    }
}

/// An ordered, gap-free sequence of [`Record`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub name: String,
    records: Vec<Record>,
}

/// Which channel of a [`SeriesPair`] to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    C,
    G,
}

/// Index ranges for the train / calibrate / test phases.
///
/// Ranges are half-open `[start, end)` in record positions, must be disjoint
/// and ordered train < calibrate < test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Range<usize>,
    pub calibrate: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("malformed row {line}: {detail}")]
    MalformedRow { line: usize, detail: String },
    #[error("index gap at line {line}: expected t={expected}, found t={found}")]
    IndexGap { line: usize, expected: i64, found: i64 },
    #[error("non-finite value at line {line}, column {column}")]
    NonFinite { line: usize, column: &'static str },
    #[error("series is empty")]
    Empty,
    #[error("window [t-n, t] out of range: t={t}, n={n}, series starts at {start}")]
    OutOfRange { t: i64, n: usize, start: i64 },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SeriesPair {
    /// Builds a series, validating the unit-step index invariant.
    pub fn new(name: impl Into<String>, records: Vec<Record>) -> Result<Self, SeriesError> {
        if records.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (i, pair) in records.windows(2).enumerate() {
            if pair[1].t != pair[0].t + 1 {
                return Err(SeriesError::IndexGap {
                    line: i + 2,
                    expected: pair[0].t + 1,
                    found: pair[1].t,
                });
            }
        }
        Ok(SeriesPair { name: name.into(), records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index of the first record.
    pub fn start_index(&self) -> i64 {
        self.records[0].t
    }

    /// Index of the last record.
    pub fn end_index(&self) -> i64 {
        self.records[self.records.len() - 1].t
    }

    /// Value of one channel at sample index `t`.
    pub fn value_at(&self, t: i64, channel: Channel) -> Option<f64> {
        let pos = t.checked_sub(self.start_index())?;
        if pos < 0 {
            return None;
        }
        let rec = self.records.get(pos as usize)?;
        Some(match channel {
            Channel::C => rec.c,
            Channel::G => rec.g,
        })
    }

    /// All values of one channel, in index order.
    pub fn channel(&self, channel: Channel) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| match channel {
                Channel::C => r.c,
                Channel::G => r.g,
            })
            .collect()
    }

    /// The values of `channel` at indices `t-n ..= t`, oldest first.
    pub fn window(&self, t: i64, n: usize, channel: Channel) -> Result<Vec<f64>, SeriesError> {
        let start = self.start_index();
        if t - (n as i64) < start || t > self.end_index() {
            return Err(SeriesError::OutOfRange { t, n, start });
        }
        let lo = (t - n as i64 - start) as usize;
        let hi = (t - start) as usize;
        Ok(self.records[lo..=hi]
            .iter()
            .map(|r| match channel {
                Channel::C => r.c,
                Channel::G => r.g,
            })
            .collect())
    }

    /// Sub-series over record positions `range` (indices keep their values).
    pub fn slice(&self, range: Range<usize>) -> Result<SeriesPair, SeriesError> {
        if range.start >= range.end || range.end > self.records.len() {
            return Err(SeriesError::InvalidSplit(format!(
                "range {}..{} out of bounds for series of length {}",
                range.start,
                range.end,
                self.records.len()
            )));
        }
        Ok(SeriesPair {
            name: self.name.clone(),
            records: self.records[range].to_vec(),
        })
    }

    /// Splits into train / calibrate / test sub-series per `spec`.
    pub fn split(
        &self,
        spec: &SplitSpec,
    ) -> Result<(SeriesPair, SeriesPair, SeriesPair), SeriesError> {
        spec.validate(self.records.len())?;
        Ok((
            self.slice(spec.train.clone())?,
            self.slice(spec.calibrate.clone())?,
            self.slice(spec.test.clone())?,
        ))
    }

    /// Writes the canonical CSV form (see [`load_csv`] for the format).
    pub fn emit_csv(&self, path: &Path) -> Result<(), SeriesError> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let has_fault = self.records.iter().any(|r| r.fault.is_some());
        let mut out = String::new();
        out.push_str(if has_fault { "t,c,g,fault\n" } else { "t,c,g\n" });
        for r in &self.records {
            let _ = write!(out, "{},{},{}", r.t, r.c, r.g);
            if has_fault {
                let _ = write!(out, ",{}", if r.fault.unwrap_or(false) { 1 } else { 0 });
            }
            out.push('\n');
        }
        out
    }
}

impl SplitSpec {
    pub fn validate(&self, series_len: usize) -> Result<(), SeriesError> {
        for (name, r) in [
            ("train", &self.train),
            ("calibrate", &self.calibrate),
            ("test", &self.test),
        ] {
            if r.start >= r.end {
                return Err(SeriesError::InvalidSplit(format!("{name} range is empty")));
            }
            if r.end > series_len {
                return Err(SeriesError::InvalidSplit(format!(
                    "{name} range {}..{} exceeds series length {series_len}",
                    r.start, r.end
                )));
            }
        }
        if self.train.end > self.calibrate.start {
            return Err(SeriesError::InvalidSplit(
                "train and calibrate ranges overlap or are out of order".into(),
            ));
        }
        if self.calibrate.end > self.test.start {
            return Err(SeriesError::InvalidSplit(
                "calibrate and test ranges overlap or are out of order".into(),
            ));
        }
        Ok(())
    }
}

/// Parses the CSV format: UTF-8, header `t,c,g` (optionally `t,c,g,fault`),
/// LF line endings, `t` as base-10 integer, values as round-trip decimals.
pub fn load_csv(path: &Path) -> Result<SeriesPair, SeriesError> {
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    parse_csv(&text, name)
}

pub fn parse_csv(text: &str, name: impl Into<String>) -> Result<SeriesPair, SeriesError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(SeriesError::Empty)?;
    let has_fault = match header.trim_end_matches('\r') {
        "t,c,g" => false,
        "t,c,g,fault" => true,
        other => {
            return Err(SeriesError::MalformedRow {
                line: 1,
                detail: format!("unexpected header {other:?}"),
            })
        }
    };
    let mut records = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        let expected = if has_fault { 4 } else { 3 };
        if fields.len() != expected {
            return Err(SeriesError::MalformedRow {
                line: line_no,
                detail: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let t: i64 = fields[0].parse().map_err(|_| SeriesError::MalformedRow {
            line: line_no,
            detail: format!("bad index {:?}", fields[0]),
        })?;
        let c: f64 = fields[1].parse().map_err(|_| SeriesError::MalformedRow {
            line: line_no,
            detail: format!("bad value {:?}", fields[1]),
        })?;
        let g: f64 = fields[2].parse().map_err(|_| SeriesError::MalformedRow {
            line: line_no,
            detail: format!("bad value {:?}", fields[2]),
        })?;
        if !c.is_finite() {
            return Err(SeriesError::NonFinite { line: line_no, column: "c" });
        }
        if !g.is_finite() {
            return Err(SeriesError::NonFinite { line: line_no, column: "g" });
        }
        let fault = if has_fault {
            match fields[3] {
                "0" => Some(false),
                "1" => Some(true),
                other => {
                    return Err(SeriesError::MalformedRow {
                        line: line_no,
                        detail: format!("bad fault flag {other:?}"),
                    })
                }
            }
        } else {
            None
        };
        if let Some(prev) = records.last() {
            let prev: &Record = prev;
            if t != prev.t + 1 {
                return Err(SeriesError::IndexGap {
                    line: line_no,
                    expected: prev.t + 1,
                    found: t,
                });
            }
        }
        records.push(Record { t, c, g, fault });
    }
    SeriesPair::new(name, records)
}
