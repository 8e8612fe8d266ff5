//! Dataset loading: labeled CSV benchmarks, lazy record streams, and the
//! registry of benchmark datasets with their expected shapes.
//!
//! The normalized on-disk format is headerless CSV with numeric feature
//! columns and a trailing 0/1 label column, 1 marking an anomaly.
//! `scripts/fetch_datasets.sh` documents how each benchmark is converted
//! into that form.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::{Error, FeatureVector, Result};

/// Expected shape and contamination of a known benchmark dataset.
#[derive(Clone, Copy, Debug)]
pub struct DatasetSpec {
    pub name: &'static str,
    /// Where the raw data comes from; see `scripts/fetch_datasets.sh`.
    pub source: &'static str,
    pub rows: usize,
    pub attributes: usize,
    /// Fraction of rows labeled anomalous.
    pub anomaly_fraction: f64,
}

/// The benchmark datasets the `bench` command knows about.
pub fn registry() -> &'static [DatasetSpec] {
    &[
        DatasetSpec {
            name: "http",
            source: "http.mat from the ODDS collection (KDD Cup 99 subset)",
            rows: 567_497,
            attributes: 3,
            anomaly_fraction: 0.0039,
        },
        DatasetSpec {
            name: "forestcover",
            source: "cover.mat from the ODDS collection (UCI Covertype subset)",
            rows: 286_048,
            attributes: 10,
            anomaly_fraction: 0.0090,
        },
        DatasetSpec {
            name: "mulcross",
            source: "mulcross.arff from OpenML (synthetic multivariate clusters)",
            rows: 262_144,
            attributes: 4,
            anomaly_fraction: 0.1000,
        },
        DatasetSpec {
            name: "shuttle",
            source: "shuttle.mat from the ODDS collection (NASA statlog)",
            rows: 49_097,
            attributes: 9,
            anomaly_fraction: 0.0715,
        },
        DatasetSpec {
            name: "satellite",
            source: "satellite.mat from the ODDS collection (statlog landsat)",
            rows: 6_435,
            attributes: 36,
            anomaly_fraction: 0.3200,
        },
        DatasetSpec {
            name: "breastw",
            source: "breastw.mat from the ODDS collection (Wisconsin breast cancer)",
            rows: 683,
            attributes: 9,
            anomaly_fraction: 0.3500,
        },
    ]
}

/// Case-insensitive registry lookup.
pub fn dataset_spec(name: &str) -> Result<&'static DatasetSpec> {
    let lowered = name.to_lowercase();
    registry()
        .iter()
        .find(|spec| spec.name == lowered)
        .ok_or_else(|| Error::UnknownDataset(name.to_string()))
}

/// An in-memory labeled dataset: a row-major feature matrix plus one boolean
/// label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn rows(&self) -> usize {
        self.features.len()
    }

    pub fn attributes(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Measured fraction of anomalous rows.
    pub fn contamination(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len() as f64
    }

    /// Writes the dataset in the normalized format; loading the result back
    /// reproduces it exactly.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.display().to_string(),
                source,
            })?;
        for (row, label) in self.features.iter().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            record.push(if *label { "1" } else { "0" }.to_string());
            writer.write_record(&record).map_err(|source| Error::Csv {
                path: path.display().to_string(),
                source,
            })?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// CSV parsing knobs for `load_csv`.
#[derive(Clone, Copy, Debug)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// `None` auto-detects: a first record with any non-numeric field is
    /// treated as a header.
    pub has_header: Option<bool>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: None,
        }
    }
}

fn parse_label(value: f64) -> Option<bool> {
    if value == 0.0 {
        Some(false)
    } else if value == 1.0 {
        Some(true)
    } else {
        None
    }
}

/// Loads a labeled CSV dataset (features plus trailing 0/1 label). When a
/// registry spec is supplied, mismatched shape or contamination produces a
/// warning on stderr with both the expected and observed values; only
/// malformed content is an error.
pub fn load_csv(
    path: &Path,
    options: &CsvOptions,
    expected: Option<&DatasetSpec>,
) -> Result<LabeledDataset> {
    let wrap = |source: csv::Error| Error::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .from_path(path)
        .map_err(wrap)?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut data_row = 0usize;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(wrap)?;
        if index == 0 {
            let skip = match options.has_header {
                Some(explicit) => explicit,
                None => record.iter().any(|field| field.trim().parse::<f64>().is_err()),
            };
            if skip {
                continue;
            }
        }
        data_row += 1;
        if record.len() < 2 {
            return Err(Error::BadCell {
                path: path.display().to_string(),
                row: data_row,
                column: record.len(),
                value: "need at least one feature and a label".into(),
            });
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::BadCell {
                path: path.display().to_string(),
                row: data_row,
                column: col + 1,
                value: field.to_string(),
            })?;
            if col + 1 == record.len() {
                let label = parse_label(value).ok_or_else(|| Error::BadCell {
                    path: path.display().to_string(),
                    row: data_row,
                    column: col + 1,
                    value: field.to_string(),
                })?;
                labels.push(label);
            } else {
                row.push(value);
            }
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(Error::NoRows {
            path: path.display().to_string(),
        });
    }

    let dataset = LabeledDataset { features, labels };
    if let Some(spec) = expected {
        if dataset.rows() != spec.rows {
            eprintln!(
                "warning: {}: expected {} rows, found {}",
                spec.name,
                spec.rows,
                dataset.rows()
            );
        }
        if dataset.attributes() != spec.attributes {
            eprintln!(
                "warning: {}: expected {} attributes, found {}",
                spec.name,
                spec.attributes,
                dataset.attributes()
            );
        }
        let measured = dataset.contamination();
        if (measured - spec.anomaly_fraction).abs() > 0.01 {
            eprintln!(
                "warning: {}: expected anomaly fraction {:.4}, measured {:.4}",
                spec.name, spec.anomaly_fraction, measured
            );
        }
    }
    Ok(dataset)
}

/// What to do with a line that fails to parse mid-stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinePolicy {
    Abort,
    SkipWithWarning,
}

/// One parsed stream record.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamRecord {
    pub features: FeatureVector,
    pub label: Option<bool>,
}

/// A lazy line-by-line reader of comma-separated feature records, holding at
/// most one record in memory at a time.
pub struct StreamSource {
    reader: Box<dyn BufRead>,
    origin: String,
    line: usize,
    delimiter: char,
    trailing_label: bool,
    policy: LinePolicy,
    done: bool,
}

impl StreamSource {
    /// Opens a file, or stdin when `path` is `None`.
    pub fn open(
        path: Option<&Path>,
        trailing_label: bool,
        policy: LinePolicy,
    ) -> Result<Self> {
        let (reader, origin): (Box<dyn BufRead>, String) = match path {
            Some(p) => (
                Box::new(BufReader::new(File::open(p)?)),
                p.display().to_string(),
            ),
            None => (Box::new(BufReader::new(io::stdin())), "<stdin>".into()),
        };
        Ok(Self {
            reader,
            origin,
            line: 0,
            delimiter: ',',
            trailing_label,
            policy,
            done: false,
        })
    }

    fn parse_line(&self, text: &str) -> std::result::Result<StreamRecord, String> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err("blank line".into());
        }
        let mut values = Vec::new();
        for field in trimmed.split(self.delimiter) {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|_| format!("unparseable field {:?}", field.trim()))?;
            values.push(value);
        }
        let label = if self.trailing_label {
            let raw = values.pop().ok_or("missing label field")?;
            Some(parse_label(raw).ok_or_else(|| format!("label must be 0 or 1, got {raw}"))?)
        } else {
            None
        };
        if values.is_empty() {
            return Err("no feature fields".into());
        }
        Ok(StreamRecord {
            features: values,
            label,
        })
    }
}

impl Iterator for StreamSource {
    type Item = Result<StreamRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let mut text = String::new();
            match self.reader.read_line(&mut text) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
            self.line += 1;
            match self.parse_line(&text) {
                Ok(record) => return Some(Ok(record)),
                Err(reason) => match self.policy {
                    LinePolicy::SkipWithWarning => {
                        eprintln!(
                            "warning: {}:{}: skipping line ({reason})",
                            self.origin, self.line
                        );
                    }
                    LinePolicy::Abort => {
                        self.done = true;
                        return Some(Err(Error::BadLine {
                            line: self.line,
                            reason,
                        }));
                    }
                },
            }
        }
    }
}

/// Per-attribute min-max rescaling to [0, 1], fitted once (typically on the
/// bootstrap window) and applied to later points. Attributes that were
/// constant during fitting map to 0.
#[derive(Clone, Debug)]
pub struct MinMaxScaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(points: &[FeatureVector]) -> Result<Self> {
        crate::sampling::validate_window(points)?;
        let dim = points[0].len();
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for point in points {
            for (j, &v) in point.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn transform_point(&self, point: &[f64]) -> Result<FeatureVector> {
        if point.len() != self.mins.len() {
            return Err(Error::DimensionMismatch {
                point: point.len(),
                training: self.mins.len(),
            });
        }
        Ok(point
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.maxs[j] - self.mins[j];
                if range > 0.0 {
                    (v - self.mins[j]) / range
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// The conventional on-disk location of a benchmark CSV: `<dir>/<name>.csv`.
pub fn dataset_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{}.csv", name.to_lowercase()))
}
