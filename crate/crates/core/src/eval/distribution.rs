use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{ChannelId, SensorRun, Source, NUM_CHANNELS};
use crate::error::{Error, Result};
use crate::features::{channel_means, make_windows, WindowParams};
use crate::stats::{quartiles, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Values strictly outside the whiskers.
    pub outlier_count: usize,
}

impl BoxplotStats {
    /// Quartiles by linear interpolation; whiskers at 1.5 IQR beyond them.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Eval("boxplot of an empty sample".into()));
        }
        let q = quartiles(values);
        let iqr = q.q3 - q.q1;
        let (lo, hi) = (q.q1 - 1.5 * iqr, q.q3 + 1.5 * iqr);
        Ok(Self {
            q1: q.q1,
            median: q.median,
            q3: q.q3,
            whisker_low: lo,
            whisker_high: hi,
            outlier_count: values.iter().filter(|&&v| v < lo || v > hi).count(),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Jaccard overlap of two closed intervals; identical (even degenerate)
/// intervals score 1.
pub fn interval_overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = a.1.max(b.1) - a.0.min(b.0);
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelComparison {
    pub channel: ChannelId,
    pub human: BoxplotStats,
    pub robot: BoxplotStats,
    /// Sample variance of per-window channel means.
    pub human_window_mean_variance: f64,
    pub robot_window_mean_variance: f64,
    /// Interquartile-range overlap between the two sources.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub channels: Vec<ChannelComparison>,
}

struct SourceSummary {
    boxes: Vec<BoxplotStats>,
    window_mean_variance: [f64; NUM_CHANNELS],
}

fn summarize(runs: &[&SensorRun], params: WindowParams) -> Result<SourceSummary> {
    let mut boxes = Vec::with_capacity(NUM_CHANNELS);
    for &c in ChannelId::ALL {
        let values: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.samples().iter().map(move |s| s.get(c)))
            .collect();
        boxes.push(BoxplotStats::from_values(&values)?);
    }
    let mut means: Vec<[f64; NUM_CHANNELS]> = Vec::new();
    for r in runs {
        for w in make_windows(r, params)?.windows {
            means.push(channel_means(w.slice(r)));
        }
    }
    let mut window_mean_variance = [0.0; NUM_CHANNELS];
    for (c, v) in window_mean_variance.iter_mut().enumerate() {
        let col: Vec<f64> = means.iter().map(|m| m[c]).collect();
        *v = sample_variance(&col);
    }
    Ok(SourceSummary {
        boxes,
        window_mean_variance,
    })
}

/// Per-channel raw-value boxplots for each source, their interquartile
/// overlap, and the spread of window means.
pub fn distribution_report(runs: &[SensorRun], params: WindowParams) -> Result<DistributionReport> {
    let by = |s: Source| -> Vec<&SensorRun> { runs.iter().filter(|r| r.key().source == s).collect() };
    let (human, robot) = (by(Source::Human), by(Source::Robot));
    for (name, set) in [("human", &human), ("robot", &robot)] {
        if set.is_empty() {
            return Err(Error::Eval(format!(
                "distribution report needs {name} runs, found none"
            )));
        }
    }
    let (h, r) = (summarize(&human, params)?, summarize(&robot, params)?);
    let channels = ChannelId::ALL
        .iter()
        .map(|&c| {
            let i = c.ordinal();
            ChannelComparison {
                channel: c,
                human: h.boxes[i],
                robot: r.boxes[i],
                human_window_mean_variance: h.window_mean_variance[i],
                robot_window_mean_variance: r.window_mean_variance[i],
                overlap: interval_overlap((h.boxes[i].q1, h.boxes[i].q3), (r.boxes[i].q1, r.boxes[i].q3)),
            }
        })
        .collect();
    Ok(DistributionReport { channels })
}

impl DistributionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "channel,source,q1,median,q3,whisker_low,whisker_high,outlier_count,window_mean_variance,overlap\n",
        );
        for c in &self.channels {
            for (src, b, v) in [
                (Source::Human, &c.human, c.human_window_mean_variance),
                (Source::Robot, &c.robot, c.robot_window_mean_variance),
            ] {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    c.channel, src, b.q1, b.median, b.q3, b.whisker_low, b.whisker_high, b.outlier_count, v, c.overlap
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_edge_cases() {
        assert_eq!(interval_overlap((0.0, 1.0), (0.0, 1.0)), 1.0);
        assert_eq!(interval_overlap((2.0, 2.0), (2.0, 2.0)), 1.0);
        assert_eq!(interval_overlap((0.0, 1.0), (2.0, 3.0)), 0.0);
        assert_eq!(interval_overlap((0.0, 2.0), (1.0, 3.0)), 1.0 / 3.0);
    }

    #[test]
    fn boxplot_of_one_to_eight() {
        let xs: Vec<f64> = (1..=8).map(f64::from).collect();
        let b = BoxplotStats::from_values(&xs).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.75, 4.5, 6.25));
        assert_eq!(b.whisker_low, 2.75 - 5.25);
        assert_eq!(b.outlier_count, 0);
        let mut with_out = xs.clone();
        with_out.push(100.0);
        assert_eq!(BoxplotStats::from_values(&with_out).unwrap().outlier_count, 1);
    }
}
