//! Run CSV and manifest I/O, plus window-level outlier cleaning.

use std::collections::HashSet;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{ChannelId, RunKey, SensorRun, SensorSample, Source, TaskLabel, NUM_CHANNELS};
use crate::error::{Error, Result};
use crate::stats::median;

pub const DEFAULT_RATE_HZ: f64 = 100.0;
pub const DEFAULT_CLEANING_K: f64 = 3.5;
/// Normal-consistency factor turning a MAD into a standard-deviation estimate.
pub const MAD_SCALE: f64 = 1.4826;
pub const MANIFEST_EXTENSION: &str = ".manifest.json";

pub fn run_csv_header() -> String {
    std::iter::once("t")
        .chain(ChannelId::ALL.iter().map(|c| c.name()))
        .collect::<Vec<_>>()
        .join(",")
}

fn default_rate() -> f64 {
    DEFAULT_RATE_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative paths resolve against the manifest's directory.
    pub path: String,
    pub subject_id: String,
    pub source: Source,
    pub task: TaskLabel,
    pub run_index: u32,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
}

impl ManifestEntry {
    pub fn key(&self) -> RunKey {
        RunKey {
            subject_id: self.subject_id.clone(),
            source: self.source,
            task: self.task,
            run_index: self.run_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative entry paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self {
            entries,
            base_dir: base_dir.into(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !(e.rate_hz.is_finite() && e.rate_hz > 0.0) {
                return Err(Error::Manifest(format!(
                    "entry {} has non-positive rate_hz {}",
                    e.key(),
                    e.rate_hz
                )));
            }
            if !seen.insert(e.key()) {
                return Err(Error::Manifest(format!(
                    "duplicate entry (subject {}, source {}, task {}, run {})",
                    e.subject_id, e.source, e.task, e.run_index
                )));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.entries)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(text).map_err(|e| Error::Manifest(format!("malformed manifest: {e}")))?;
        Self::new(entries, base_dir)
    }

    /// Parses every run the manifest lists, in manifest order.
    pub fn load_runs(&self) -> Result<Vec<SensorRun>> {
        use rayon::prelude::*;
        self.entries
            .par_iter()
            .map(|e| parse_run_csv(&self.resolve(e), e))
            .collect()
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Manifest::from_json(&text, base)
}

pub fn parse_run_csv(path: &Path, meta: &ManifestEntry) -> Result<SensorRun> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_run_reader(std::io::BufReader::new(file), &path.display().to_string(), meta)
}

pub fn parse_run_reader<R: Read>(input: R, origin: &str, meta: &ManifestEntry) -> Result<SensorRun> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data {
            path: origin.into(),
            message: e.to_string(),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    check_header(&header, origin)?;

    let columns: Vec<&str> = std::iter::once("t")
        .chain(ChannelId::ALL.iter().map(|c| c.name()))
        .collect();
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Data {
            path: origin.into(),
            message: format!("row {row}: {e}"),
        })?;
        let mut nums = [0.0f64; NUM_CHANNELS + 1];
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            nums[j] = cell.parse().map_err(|_| Error::Parse {
                path: origin.into(),
                row,
                column: columns[j].into(),
                message: format!("`{cell}` is not a number"),
            })?;
        }
        if let Some(prev) = samples.last().map(|s: &SensorSample| s.t) {
            if nums[0] <= prev {
                return Err(Error::Data {
                    path: origin.into(),
                    message: format!("non-monotonic timestamp at row {row}: {} after {prev}", nums[0]),
                });
            }
        }
        let mut values = [0.0; NUM_CHANNELS];
        values.copy_from_slice(&nums[1..]);
        samples.push(SensorSample { t: nums[0], values });
    }
    if samples.is_empty() {
        return Err(Error::EmptyRun(origin.into()));
    }
    SensorRun::new(meta.key(), meta.rate_hz, samples).map_err(|e| match e {
        Error::Data { message, .. } => Error::Data {
            path: origin.into(),
            message,
        },
        other => other,
    })
}

fn check_header(header: &[String], origin: &str) -> Result<()> {
    let expected = run_csv_header();
    let expected: Vec<&str> = expected.split(',').collect();
    for col in &expected {
        if !header.iter().any(|h| h == col) {
            return Err(Error::Schema {
                path: origin.into(),
                column: col.to_string(),
                message: "missing column".into(),
            });
        }
    }
    if let Some(extra) = header.iter().find(|h| !expected.contains(&h.as_str())) {
        return Err(Error::Schema {
            path: origin.into(),
            column: extra.clone(),
            message: "unexpected column".into(),
        });
    }
    if header.len() != expected.len() || header.iter().zip(&expected).any(|(h, e)| h != e) {
        let col = header
            .iter()
            .zip(&expected)
            .find(|(h, e)| h != e)
            .map(|(h, _)| h.clone())
            .unwrap_or_default();
        return Err(Error::Schema {
            path: origin.into(),
            column: col,
            message: "columns out of order or duplicated".into(),
        });
    }
    Ok(())
}

pub fn write_run_csv<W: Write>(run: &SensorRun, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", run_csv_header())?;
    for s in run.samples() {
        write!(out, "{}", s.t)?;
        for v in s.values {
            write!(out, ",{v}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Outcome of window-level outlier cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub windows_examined: usize,
    pub windows_removed: usize,
    pub removal_fraction: f64,
    pub per_channel_flag_counts: [usize; NUM_CHANNELS],
    /// Warning: nothing survived cleaning.
    pub all_removed: bool,
}

/// Robust location/spread of per-channel window means over a reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReference {
    pub median: [f64; NUM_CHANNELS],
    /// `MAD_SCALE * MAD` per channel.
    pub spread: [f64; NUM_CHANNELS],
}

impl OutlierReference {
    pub fn fit(window_means: &[[f64; NUM_CHANNELS]]) -> Result<Self> {
        if window_means.is_empty() {
            return Err(Error::Contract("outlier reference needs at least one window".into()));
        }
        let mut med = [0.0; NUM_CHANNELS];
        let mut spread = [0.0; NUM_CHANNELS];
        for c in 0..NUM_CHANNELS {
            let col: Vec<f64> = window_means.iter().map(|m| m[c]).collect();
            let m = median(&col);
            let dev: Vec<f64> = col.iter().map(|x| (x - m).abs()).collect();
            med[c] = m;
            spread[c] = MAD_SCALE * median(&dev);
        }
        Ok(Self { median: med, spread })
    }

    /// Channels on which `means` deviates by more than `k` spreads. With zero
    /// spread any nonzero deviation is flagged.
    pub fn flags(&self, means: &[f64; NUM_CHANNELS], k: f64) -> [bool; NUM_CHANNELS] {
        let mut out = [false; NUM_CHANNELS];
        if k.is_infinite() {
            return out;
        }
        for c in 0..NUM_CHANNELS {
            out[c] = (means[c] - self.median[c]).abs() > k * self.spread[c];
        }
        out
    }

    /// Keeps the items whose means raise no flag.
    pub fn filter<W: Clone>(&self, items: &[(W, [f64; NUM_CHANNELS])], k: f64) -> Result<(Vec<W>, CleaningReport)> {
        if !(k > 0.0) {
            return Err(Error::Contract(format!(
                "cleaning threshold k must be positive, got {k}"
            )));
        }
        let mut kept = Vec::with_capacity(items.len());
        let mut counts = [0usize; NUM_CHANNELS];
        for (item, means) in items {
            let flags = self.flags(means, k);
            for (n, f) in counts.iter_mut().zip(flags) {
                *n += f as usize;
            }
            if !flags.iter().any(|&f| f) {
                kept.push(item.clone());
            }
        }
        let examined = items.len();
        let removed = examined - kept.len();
        let all_removed = examined > 0 && kept.is_empty();
        if all_removed {
            log::warn!("outlier cleaning with k = {k} removed all {examined} windows");
        }
        Ok((
            kept,
            CleaningReport {
                windows_examined: examined,
                windows_removed: removed,
                removal_fraction: if examined > 0 {
                    removed as f64 / examined as f64
                } else {
                    0.0
                },
                per_channel_flag_counts: counts,
                all_removed,
            },
        ))
    }
}

/// Fits the reference on `items` and filters them in one go.
pub fn clean_by_means<W: Clone>(
    items: &[(W, [f64; NUM_CHANNELS])],
    k: f64,
) -> Result<(Vec<W>, CleaningReport, OutlierReference)> {
    if items.is_empty() {
        return Err(Error::Contract("cannot clean an empty window set".into()));
    }
    let means: Vec<[f64; NUM_CHANNELS]> = items.iter().map(|(_, m)| *m).collect();
    let reference = OutlierReference::fit(&means)?;
    let (kept, report) = reference.filter(items, k)?;
    Ok((kept, report, reference))
}

/// Window-level cleaning on raw slices: a window goes if any channel mean is a
/// robust-z outlier against the whole set.
pub fn clean_outliers<W: Clone>(windows: &[(W, &[SensorSample])], k: f64) -> Result<(Vec<W>, CleaningReport)> {
    let items: Vec<(W, [f64; NUM_CHANNELS])> = windows
        .iter()
        .map(|(w, s)| (w.clone(), crate::features::channel_means(s)))
        .collect();
    let (kept, report, _) = clean_by_means(&items, k)?;
    Ok((kept, report))
}
