//! Windowing, per-window statistics and min-max normalization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{
    FeatureVector, RunKey, SensorRun, SensorSample, Source, TaskLabel, Window, NUM_CHANNELS, NUM_FEATURES, NUM_STATS,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::window_stats;

pub const DEFAULT_WINDOW_SECONDS: f64 = 10.0;
pub const DEFAULT_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub window_seconds: f64,
    pub overlap_fraction: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self {
            window_seconds: DEFAULT_WINDOW_SECONDS,
            overlap_fraction: DEFAULT_OVERLAP,
        }
    }
}

impl WindowParams {
    /// Samples per window and samples between window starts at `rate_hz`.
    pub fn lengths(&self, rate_hz: f64) -> Result<(usize, usize)> {
        if !(self.window_seconds.is_finite() && self.window_seconds > 0.0) {
            return Err(Error::Contract(format!(
                "window_seconds must be positive, got {}",
                self.window_seconds
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Contract(format!(
                "overlap_fraction must lie in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        let width = (rate_hz * self.window_seconds).round() as usize;
        let stride = (rate_hz * self.window_seconds * (1.0 - self.overlap_fraction)).round() as usize;
        if width == 0 || stride == 0 {
            return Err(Error::Contract(format!(
                "window of {}s with overlap {} is shorter than one sample at {rate_hz} Hz",
                self.window_seconds, self.overlap_fraction
            )));
        }
        Ok((width, stride))
    }
}

/// Windows of one run. `too_short` is set (and `windows` empty) when the run
/// cannot hold a single window.
#[derive(Debug, Clone, PartialEq)]
pub struct Windowing {
    pub windows: Vec<Window>,
    pub too_short: bool,
}

pub fn make_windows(run: &SensorRun, params: WindowParams) -> Result<Windowing> {
    let (width, stride) = params.lengths(run.rate_hz())?;
    let n = run.len();
    if n < width {
        log::warn!(
            "run {} has {n} samples, fewer than one {width}-sample window",
            run.key()
        );
        return Ok(Windowing {
            windows: Vec::new(),
            too_short: true,
        });
    }
    let count = (n - width) / stride + 1;
    let windows = (0..count)
        .map(|i| Window {
            run: run.key().clone(),
            start: i * stride,
            end: i * stride + width,
        })
        .collect();
    Ok(Windowing {
        windows,
        too_short: false,
    })
}

/// Ten statistics for each of the eleven channels of `samples`.
pub fn extract_features<T: Scalar>(samples: &[SensorSample]) -> Result<FeatureVector<T>> {
    if samples.is_empty() {
        return Err(Error::Contract("cannot featurize an empty window".into()));
    }
    let mut out = Vec::with_capacity(NUM_FEATURES);
    let mut series: Vec<T> = Vec::with_capacity(samples.len());
    for c in 0..NUM_CHANNELS {
        series.clear();
        series.extend(samples.iter().map(|s| T::of(s.values[c])));
        out.extend_from_slice(&window_stats(&series)?);
    }
    debug_assert_eq!(out.len(), NUM_CHANNELS * NUM_STATS);
    FeatureVector::new(out)
}

pub fn extract_window<T: Scalar>(window: &Window, run: &SensorRun) -> Result<FeatureVector<T>> {
    if window.end > run.len() || window.is_empty() {
        return Err(Error::Contract(format!(
            "window [{}, {}) does not fit run {} of length {}",
            window.start,
            window.end,
            run.key(),
            run.len()
        )));
    }
    extract_features(window.slice(run))
}

/// Per-feature extrema fitted on a reference set (normally the training split).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct NormalizationParams<T: Scalar> {
    pub min: Vec<T>,
    pub max: Vec<T>,
    pub fitted_on: String,
}

impl<T: Scalar> NormalizationParams<T> {
    pub fn fit<'a, I>(vectors: I, fitted_on: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureVector<T>>,
    {
        let mut iter = vectors.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Contract("normalization needs at least one vector".into()))?;
        let mut min = first.values().to_vec();
        let mut max = min.clone();
        for v in iter {
            for (i, &x) in v.values().iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Ok(Self {
            min,
            max,
            fitted_on: fitted_on.into(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != NUM_FEATURES || self.max.len() != NUM_FEATURES {
            return Err(Error::Contract(format!(
                "normalization params need {NUM_FEATURES} entries per bound"
            )));
        }
        if let Some(i) = (0..NUM_FEATURES).find(|&i| !(self.min[i] <= self.max[i])) {
            return Err(Error::Contract(format!("normalization min > max at feature {i}")));
        }
        Ok(())
    }

    /// `(v - min) / (max - min)` clamped to `[0, 1]`; degenerate features map to 0.
    pub fn apply(&self, v: &FeatureVector<T>) -> FeatureVector<T> {
        let values = v
            .values()
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                if hi > lo {
                    ((x - lo) / (hi - lo)).max(T::zero()).min(T::one())
                } else {
                    T::zero()
                }
            })
            .collect();
        FeatureVector::new(values).expect("normalized values are finite and correctly sized")
    }
}

pub fn fit_normalization<T: Scalar>(vectors: &[FeatureVector<T>], fitted_on: &str) -> Result<NormalizationParams<T>> {
    NormalizationParams::fit(vectors, fitted_on)
}

pub fn apply_normalization<T: Scalar>(v: &FeatureVector<T>, params: &NormalizationParams<T>) -> FeatureVector<T> {
    params.apply(v)
}

/// One featurized window with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow<T: Scalar> {
    pub run: RunKey,
    pub window_start: usize,
    pub features: FeatureVector<T>,
}

impl<T: Scalar> FeatureRow<T> {
    pub fn label(&self) -> TaskLabel {
        self.run.task
    }
}

pub fn feature_csv_header() -> String {
    let mut h = String::from("subject,source,task,run_index,window_start");
    for i in 0..NUM_FEATURES {
        h.push_str(&format!(",f{i:03}"));
    }
    h
}

pub fn write_feature_csv<T: Scalar, W: Write>(rows: &[FeatureRow<T>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", feature_csv_header())?;
    for row in rows {
        write!(
            out,
            "{},{},{},{},{}",
            row.run.subject_id, row.run.source, row.run.task, row.run.run_index, row.window_start
        )?;
        for v in row.features.values() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_feature_csv<T: Scalar, R: Read>(input: R, origin: &str) -> Result<Vec<FeatureRow<T>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Data {
            path: origin.into(),
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != feature_csv_header() {
        return Err(Error::Schema {
            path: origin.into(),
            column: first_mismatch(&header, &feature_csv_header()),
            message: "feature matrix header does not match the frozen layout".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Data {
            path: origin.into(),
            message: format!("row {row}: {e}"),
        })?;
        let parse_err = |column: &str, message: String| Error::Parse {
            path: origin.into(),
            row,
            column: column.into(),
            message,
        };
        let source: Source = record[1]
            .parse()
            .map_err(|e: Error| parse_err("source", e.to_string()))?;
        let task: TaskLabel = record[2].parse().map_err(|e: Error| parse_err("task", e.to_string()))?;
        let run_index: u32 = record[3]
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err("run_index", e.to_string()))?;
        let window_start: usize = record[4]
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err("window_start", e.to_string()))?;
        let mut values = Vec::with_capacity(NUM_FEATURES);
        for f in 0..NUM_FEATURES {
            let cell = &record[5 + f];
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(&format!("f{f:03}"), format!("`{cell}` is not a number")))?;
            values.push(T::of(v));
        }
        let features = FeatureVector::new(values).map_err(|e| parse_err("features", e.to_string()))?;
        rows.push(FeatureRow {
            run: RunKey {
                subject_id: record[0].to_string(),
                source,
                task,
                run_index,
            },
            window_start,
            features,
        });
    }
    Ok(rows)
}

pub(crate) fn first_mismatch(found: &str, expected: &str) -> String {
    let found: Vec<&str> = found.split(',').collect();
    for (i, col) in expected.split(',').enumerate() {
        if found.get(i) != Some(&col) {
            return col.to_string();
        }
    }
    found
        .get(expected.split(',').count())
        .map(|s| s.to_string())
        .unwrap_or_default()
}

/// Windows and features for every run, in input order.
pub fn featurize_run<T: Scalar>(run: &SensorRun, params: WindowParams) -> Result<Vec<FeatureRow<T>>> {
    make_windows(run, params)?
        .windows
        .iter()
        .map(|w| {
            Ok(FeatureRow {
                run: w.run.clone(),
                window_start: w.start,
                features: extract_window(w, run)?,
            })
        })
        .collect()
}

/// Mean of each channel over a window; the statistic outlier cleaning works on.
pub fn channel_means(samples: &[SensorSample]) -> [f64; NUM_CHANNELS] {
    let mut acc = [0.0; NUM_CHANNELS];
    for s in samples {
        for (a, v) in acc.iter_mut().zip(s.values) {
            *a += v;
        }
    }
    let n = samples.len().max(1) as f64;
    acc.map(|a| a / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ChannelId, Source, TaskLabel};

    fn run_of(n: usize, rate: f64) -> SensorRun {
        let samples = (0..n)
            .map(|i| SensorSample {
                t: i as f64 / rate,
                values: [i as f64; NUM_CHANNELS],
            })
            .collect();
        SensorRun::new(
            RunKey {
                subject_id: "s".into(),
                source: Source::Robot,
                task: TaskLabel::Routing,
                run_index: 0,
            },
            rate,
            samples,
        )
        .unwrap()
    }

    #[test]
    fn three_minute_run_gives_35_windows() {
        let run = run_of(18_000, 100.0);
        let w = make_windows(&run, WindowParams::default()).unwrap();
        // Start times 0, 5, ..., 170 s.
        let expected: Vec<usize> = (0..=170).step_by(5).map(|s| s * 100).collect();
        assert_eq!(w.windows.len(), 35);
        assert_eq!(w.windows.iter().map(|w| w.start).collect::<Vec<_>>(), expected);
        assert!(w.windows.iter().all(|w| w.end <= run.len() && w.len() == 1000));
    }

    #[test]
    fn no_overlap_gives_18_windows() {
        let run = run_of(18_000, 100.0);
        let p = WindowParams {
            window_seconds: 10.0,
            overlap_fraction: 0.0,
        };
        assert_eq!(make_windows(&run, p).unwrap().windows.len(), 18);
    }

    #[test]
    fn exact_and_short_runs() {
        let exact = make_windows(&run_of(1000, 100.0), WindowParams::default()).unwrap();
        assert_eq!(exact.windows.len(), 1);
        assert!(!exact.too_short);
        let short = make_windows(&run_of(999, 100.0), WindowParams::default()).unwrap();
        assert!(short.windows.is_empty());
        assert!(short.too_short);
    }

    #[test]
    fn bad_window_params_are_rejected() {
        let run = run_of(100, 100.0);
        for p in [
            WindowParams {
                window_seconds: 0.0,
                overlap_fraction: 0.5,
            },
            WindowParams {
                window_seconds: 1.0,
                overlap_fraction: 1.0,
            },
            WindowParams {
                window_seconds: 1.0,
                overlap_fraction: -0.1,
            },
        ] {
            assert!(matches!(make_windows(&run, p), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn half_overlap_shares_half_the_samples() {
        let w = make_windows(&run_of(18_000, 100.0), WindowParams::default())
            .unwrap()
            .windows;
        for pair in w.windows(2) {
            assert_eq!(pair[0].end - pair[1].start, 500);
        }
    }

    #[test]
    fn normalization_endpoints_and_clamp() {
        let a = FeatureVector::new(vec![1.0f64; NUM_FEATURES]).unwrap();
        let mut bv = vec![3.0f64; NUM_FEATURES];
        bv[7] = 1.0; // degenerate feature
        let b = FeatureVector::new(bv).unwrap();
        let p = fit_normalization(&[a.clone(), b.clone()], "train").unwrap();
        p.validate().unwrap();
        assert!(apply_normalization(&a, &p).values().iter().all(|&x| x == 0.0));
        let nb = apply_normalization(&b, &p);
        assert!(nb
            .values()
            .iter()
            .enumerate()
            .all(|(i, &x)| x == if i == 7 { 0.0 } else { 1.0 }));
        let big = FeatureVector::new(vec![6.0f64; NUM_FEATURES]).unwrap();
        assert_eq!(apply_normalization(&big, &p).values()[0], 1.0);
        let small = FeatureVector::new(vec![-6.0f64; NUM_FEATURES]).unwrap();
        assert_eq!(apply_normalization(&small, &p).values()[0], 0.0);
    }

    #[test]
    fn feature_csv_roundtrip() {
        let run = run_of(2000, 100.0);
        let rows: Vec<FeatureRow<f64>> = featurize_run(&run, WindowParams::default()).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&rows, &mut buf).unwrap();
        let back: Vec<FeatureRow<f64>> = read_feature_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, rows);
        assert!(feature_csv_header().ends_with(",f109"));
    }

    #[test]
    fn features_use_channel_major_layout() {
        let run = run_of(1000, 100.0);
        let f: FeatureVector<f64> = extract_features(run.samples()).unwrap();
        assert_eq!(f.get(ChannelId::Current, crate::data::Statistic::Max), 999.0);
        assert_eq!(f.values()[0], 0.0);
    }
}
