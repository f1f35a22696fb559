//! Domain types and the frozen channel / statistic layout.
//!
//! Ordinals of [`ChannelId`], [`TaskLabel`] and [`Statistic`] are part of the
//! on-disk contract: feature vectors and checkpoints written by one build are
//! only comparable with another build if these never move.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NUM_CHANNELS: usize = 11;
pub const NUM_STATS: usize = 10;
pub const NUM_FEATURES: usize = NUM_CHANNELS * NUM_STATS;
pub const NUM_CLASSES: usize = 4;

/// Tolerance on sample spacing relative to `1 / rate_hz`, in seconds.
pub const SPACING_TOLERANCE_S: f64 = 1e-6;

macro_rules! ordinal_enum {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const COUNT: usize = Self::ALL.len();

            #[inline]
            pub fn ordinal(self) -> usize {
                self as usize
            }

            pub fn from_ordinal(i: usize) -> Option<Self> {
                Self::ALL.get(i).copied()
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Contract(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

ordinal_enum! {
    /// Sensor channels of the tool module in frozen column order.
    ChannelId {
        AccelX => "accel_x",
        AccelY => "accel_y",
        AccelZ => "accel_z",
        GyroX => "gyro_x",
        GyroY => "gyro_y",
        GyroZ => "gyro_z",
        MagX => "mag_x",
        MagY => "mag_y",
        MagZ => "mag_z",
        Mic => "mic",
        Current => "current",
    }
}

ordinal_enum! {
    /// Activity class; the ordinal is the classifier output index.
    TaskLabel {
        Cutting => "cutting",
        Engraving => "engraving",
        Routing => "routing",
        Sanding => "sanding",
    }
}

ordinal_enum! {
    Source {
        Human => "human",
        Robot => "robot",
    }
}

ordinal_enum! {
    /// Per-channel window statistics in frozen feature order.
    Statistic {
        Min => "min",
        Max => "max",
        Mean => "mean",
        Sum => "sum",
        Variance => "variance",
        StdDev => "std_dev",
        Sem => "sem",
        Skewness => "skewness",
        Kurtosis => "kurtosis",
        Mad => "mad",
    }
}

/// Position of `(channel, stat)` in a [`FeatureVector`]: channel-major,
/// `10 * channel + stat`.
pub fn feature_index(channel: ChannelId, stat: usize) -> Result<usize> {
    if stat >= NUM_STATS {
        return Err(Error::Contract(format!(
            "statistic ordinal {stat} outside [0, {NUM_STATS})"
        )));
    }
    Ok(NUM_STATS * channel.ordinal() + stat)
}

/// Inverse of [`feature_index`].
pub fn feature_position(index: usize) -> Option<(ChannelId, Statistic)> {
    if index >= NUM_FEATURES {
        return None;
    }
    Some((
        ChannelId::from_ordinal(index / NUM_STATS)?,
        Statistic::from_ordinal(index % NUM_STATS)?,
    ))
}

/// One timestamped reading of all channels.
///
/// Units: accel m/s², gyro deg/s, mag µT, mic normalized amplitude, current A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample {
    pub t: f64,
    pub values: [f64; NUM_CHANNELS],
}

impl SensorSample {
    #[inline]
    pub fn get(&self, channel: ChannelId) -> f64 {
        self.values[channel.ordinal()]
    }
}

/// Identity of a recorded run; also the unit the train/val/test split works on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunKey {
    pub subject_id: String,
    pub source: Source,
    pub task: TaskLabel,
    pub run_index: u32,
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.source, self.subject_id, self.task, self.run_index
        )
    }
}

/// A validated recording: non-empty, finite, uniformly sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRun {
    key: RunKey,
    rate_hz: f64,
    samples: Vec<SensorSample>,
}

impl SensorRun {
    pub fn new(key: RunKey, rate_hz: f64, samples: Vec<SensorSample>) -> Result<Self> {
        let origin = key.to_string();
        check_samples(&origin, rate_hz, &samples)?;
        Ok(Self { key, rate_hz, samples })
    }

    pub fn key(&self) -> &RunKey {
        &self.key
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn samples(&self) -> &[SensorSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }

    /// Copies one channel out as a contiguous series.
    pub fn channel(&self, channel: ChannelId) -> Vec<f64> {
        self.samples.iter().map(|s| s.get(channel)).collect()
    }
}

pub(crate) fn check_samples(origin: &str, rate_hz: f64, samples: &[SensorSample]) -> Result<()> {
    let data_err = |message: String| Error::Data {
        path: origin.to_string(),
        message,
    };
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(data_err(format!("rate_hz must be positive, got {rate_hz}")));
    }
    if samples.is_empty() {
        return Err(Error::EmptyRun(origin.to_string()));
    }
    let dt = 1.0 / rate_hz;
    for (i, s) in samples.iter().enumerate() {
        if !(s.t.is_finite() && s.t >= 0.0) {
            return Err(data_err(format!(
                "sample {i}: timestamp {} is not a finite non-negative time",
                s.t
            )));
        }
        if let Some(c) = s.values.iter().position(|v| !v.is_finite()) {
            return Err(data_err(format!(
                "sample {i}: channel {} is not finite",
                ChannelId::ALL[c]
            )));
        }
        if i > 0 {
            let prev = samples[i - 1].t;
            if s.t <= prev {
                return Err(data_err(format!(
                    "timestamps not strictly increasing at sample {i} ({} after {prev})",
                    s.t
                )));
            }
            if ((s.t - prev) - dt).abs() > SPACING_TOLERANCE_S {
                return Err(data_err(format!(
                    "sample {i}: spacing {} deviates from 1/rate_hz = {dt}",
                    s.t - prev
                )));
            }
        }
    }
    Ok(())
}

/// Half-open slice `[start, end)` of a run, carrying the run's label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub run: RunKey,
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn label(&self) -> TaskLabel {
        self.run.task
    }

    pub fn subject_id(&self) -> &str {
        &self.run.subject_id
    }

    pub fn source(&self) -> Source {
        self.run.source
    }

    pub fn slice<'a>(&self, run: &'a SensorRun) -> &'a [SensorSample] {
        &run.samples()[self.start..self.end]
    }
}

/// 110 window statistics in channel-major order (see [`feature_index`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct FeatureVector<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() != NUM_FEATURES {
            return Err(Error::Contract(format!(
                "feature vector needs {NUM_FEATURES} entries, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("feature {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, channel: ChannelId, stat: Statistic) -> T {
        self.values[NUM_STATS * channel.ordinal() + stat.ordinal()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitMode {
    InDistribution,
    OutOfDistribution {
        held_out_subject: String,
    },
    /// Test runs fold into train; used to pretrain on a whole source.
    Pretraining,
}

/// Run-level assignment to train / validation / test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train: BTreeSet<RunKey>,
    pub val: BTreeSet<RunKey>,
    pub test: BTreeSet<RunKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Val,
    Test,
}

impl SplitSpec {
    pub fn new(
        mode: SplitMode,
        train: BTreeSet<RunKey>,
        val: BTreeSet<RunKey>,
        test: BTreeSet<RunKey>,
    ) -> Result<Self> {
        let spec = Self { mode, train, val, test };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (a, b, names) in [
            (&self.train, &self.val, "train/val"),
            (&self.train, &self.test, "train/test"),
            (&self.val, &self.test, "val/test"),
        ] {
            if let Some(k) = a.intersection(b).next() {
                return Err(Error::Split(format!("run {k} appears in both {names}")));
            }
        }
        if let SplitMode::OutOfDistribution { held_out_subject } = &self.mode {
            if let Some(k) = self
                .train
                .iter()
                .chain(&self.val)
                .find(|k| &k.subject_id == held_out_subject)
            {
                return Err(Error::Split(format!(
                    "held-out subject `{held_out_subject}` leaks into train/val via {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn part_of(&self, key: &RunKey) -> Option<SplitPart> {
        if self.train.contains(key) {
            Some(SplitPart::Train)
        } else if self.val.contains(key) {
            Some(SplitPart::Val)
        } else if self.test.contains(key) {
            Some(SplitPart::Test)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_endpoints() {
        assert_eq!(feature_index(ChannelId::AccelX, Statistic::Min.ordinal()).unwrap(), 0);
        assert_eq!(
            feature_index(ChannelId::Current, Statistic::Mad.ordinal()).unwrap(),
            109
        );
    }

    #[test]
    fn layout_table_entry() {
        // Enumerate the whole layout in channel-major order and read (4, 2) back.
        let table: Vec<(usize, usize)> = (0..NUM_CHANNELS)
            .flat_map(|c| (0..NUM_STATS).map(move |s| (c, s)))
            .collect();
        let pos = table.iter().position(|&p| p == (4, 2)).unwrap();
        assert_eq!(pos, 42);
        assert_eq!(feature_index(ChannelId::GyroY, Statistic::Mean.ordinal()).unwrap(), pos);
    }

    #[test]
    fn layout_is_bijective() {
        let mut seen = [false; NUM_FEATURES];
        for &c in ChannelId::ALL {
            for s in 0..NUM_STATS {
                let i = feature_index(c, s).unwrap();
                assert!(!seen[i], "index {i} hit twice");
                seen[i] = true;
                assert_eq!(feature_position(i), Some((c, Statistic::ALL[s])));
            }
        }
        assert!(seen.iter().all(|&b| b));
        assert_eq!(feature_position(NUM_FEATURES), None);
    }

    #[test]
    fn out_of_range_stat_is_rejected() {
        assert!(matches!(feature_index(ChannelId::Mic, 10), Err(Error::Contract(_))));
    }

    #[test]
    fn enum_sizes_are_frozen() {
        assert_eq!(ChannelId::COUNT, 11);
        assert_eq!(TaskLabel::COUNT, 4);
        assert_eq!(Source::COUNT, 2);
        assert_eq!(Statistic::COUNT, 10);
        assert_eq!(ChannelId::Current.ordinal(), 10);
        assert_eq!(TaskLabel::Sanding.ordinal(), 3);
    }

    #[test]
    fn enum_ordinals_survive_serialization() {
        for &c in ChannelId::ALL {
            let s = serde_json::to_string(&c).unwrap();
            let back: ChannelId = serde_json::from_str(&s).unwrap();
            assert_eq!(back.ordinal(), c.ordinal());
            assert_eq!(c.name().parse::<ChannelId>().unwrap(), c);
        }
        for &t in TaskLabel::ALL {
            let back: TaskLabel = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
            assert_eq!(back.ordinal(), t.ordinal());
        }
        for &s in Source::ALL {
            let back: Source = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
            assert_eq!(back, s);
        }
    }

    fn key(subject: &str, run_index: u32) -> RunKey {
        RunKey {
            subject_id: subject.into(),
            source: Source::Human,
            task: TaskLabel::Cutting,
            run_index,
        }
    }

    #[test]
    fn run_rejects_bad_spacing_and_order() {
        let s = |t: f64| SensorSample {
            t,
            values: [0.0; NUM_CHANNELS],
        };
        assert!(SensorRun::new(key("a", 0), 100.0, vec![s(0.0), s(0.01), s(0.02)]).is_ok());
        assert!(matches!(
            SensorRun::new(key("a", 0), 100.0, vec![s(0.0), s(0.02)]),
            Err(Error::Data { .. })
        ));
        assert!(matches!(
            SensorRun::new(key("a", 0), 100.0, vec![s(0.01), s(0.0)]),
            Err(Error::Data { .. })
        ));
        assert!(matches!(
            SensorRun::new(key("a", 0), 100.0, vec![]),
            Err(Error::EmptyRun(_))
        ));
    }

    #[test]
    fn split_spec_checks_overlap_and_leaks() {
        let train: BTreeSet<_> = [key("a", 0)].into();
        let val: BTreeSet<_> = [key("a", 1)].into();
        let test: BTreeSet<_> = [key("a", 1)].into();
        assert!(SplitSpec::new(SplitMode::InDistribution, train.clone(), val.clone(), test).is_err());

        let ood = SplitMode::OutOfDistribution {
            held_out_subject: "a".into(),
        };
        assert!(SplitSpec::new(ood, train, val, BTreeSet::new()).is_err());
    }
}
