//! Glue between runs, feature rows and model-ready samples.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ChannelId, RunKey, SensorRun, Source, SplitMode, SplitSpec, Statistic, TaskLabel, NUM_CHANNELS};
use crate::error::{Error, Result};
use crate::features::{featurize_run, FeatureRow, NormalizationParams, WindowParams};
use crate::ingest::{clean_by_means, CleaningReport};
use crate::model::Sample;
use crate::scalar::Scalar;

/// Feature rows for every window of every run, in run order.
pub fn featurize_runs<T: Scalar>(runs: &[SensorRun], params: WindowParams) -> Result<Vec<FeatureRow<T>>> {
    let per_run: Vec<Vec<FeatureRow<T>>> = runs
        .par_iter()
        .map(|r| featurize_run(r, params))
        .collect::<Result<_>>()?;
    Ok(per_run.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCleaning {
    pub source: Source,
    pub task: TaskLabel,
    pub report: CleaningReport,
}

/// Removal fraction per source, pooled over tasks.
pub fn removal_by_source(cleaning: &[GroupCleaning]) -> Vec<(Source, f64)> {
    Source::ALL
        .iter()
        .filter_map(|&s| {
            let (ex, rm) = cleaning.iter().filter(|c| c.source == s).fold((0, 0), |(e, r), c| {
                (e + c.report.windows_examined, r + c.report.windows_removed)
            });
            (ex > 0).then(|| (s, rm as f64 / ex as f64))
        })
        .collect()
}

/// Outlier cleaning on the per-channel window means already present in the
/// feature rows. Reference statistics are computed per (source, task) group,
/// since window means of different tasks form separate clusters.
pub fn clean_rows<T: Scalar>(rows: Vec<FeatureRow<T>>, k: f64) -> Result<(Vec<FeatureRow<T>>, Vec<GroupCleaning>)> {
    let mut kept = Vec::with_capacity(rows.len());
    let mut reports = Vec::new();
    for (&source, &task) in Source::ALL
        .iter()
        .flat_map(|s| TaskLabel::ALL.iter().map(move |t| (s, t)))
    {
        let items: Vec<(usize, [f64; NUM_CHANNELS])> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.run.source == source && r.run.task == task)
            .map(|(i, r)| {
                let mut means = [0.0; NUM_CHANNELS];
                for &c in ChannelId::ALL {
                    means[c.ordinal()] = r.features.get(c, Statistic::Mean).as_f64();
                }
                (i, means)
            })
            .collect();
        if items.is_empty() {
            continue;
        }
        let (idx, report, _) = clean_by_means(&items, k)?;
        kept.extend(idx);
        reports.push(GroupCleaning { source, task, report });
    }
    kept.sort_unstable();
    let mut rows: Vec<Option<FeatureRow<T>>> = rows.into_iter().map(Some).collect();
    let out = kept
        .into_iter()
        .map(|i| rows[i].take().expect("index kept once"))
        .collect();
    Ok((out, reports))
}

pub fn fit_normalization_on<T: Scalar>(
    rows: &[FeatureRow<T>],
    keys: &BTreeSet<RunKey>,
    fitted_on: &str,
) -> Result<NormalizationParams<T>> {
    NormalizationParams::fit(
        rows.iter().filter(|r| keys.contains(&r.run)).map(|r| &r.features),
        fitted_on,
    )
    .map_err(|_| Error::Split(format!("no windows fall in `{fitted_on}` to fit normalization on")))
}

/// Normalized samples for the rows whose run is in `keys`, ordered by run and
/// then by window start.
pub fn samples_for<T: Scalar>(
    rows: &[FeatureRow<T>],
    keys: &BTreeSet<RunKey>,
    norm: &NormalizationParams<T>,
) -> Vec<Sample<T>> {
    chronological(rows, keys)
        .into_iter()
        .map(|r| Sample {
            x: norm.apply(&r.features).into_values(),
            label: r.label().ordinal(),
        })
        .collect()
}

fn chronological<'a, T: Scalar>(rows: &'a [FeatureRow<T>], keys: &BTreeSet<RunKey>) -> Vec<&'a FeatureRow<T>> {
    let mut picked: Vec<&FeatureRow<T>> = rows.iter().filter(|r| keys.contains(&r.run)).collect();
    picked.sort_by(|a, b| (&a.run, a.window_start).cmp(&(&b.run, b.window_start)));
    picked
}

/// Normalized train / val / test samples of one split.
#[derive(Debug, Clone)]
pub struct PreparedSplit<T: Scalar> {
    pub split: SplitSpec,
    pub train: Vec<Sample<T>>,
    /// Run of each training sample; samples of one run are contiguous and in
    /// time order.
    pub train_runs: Vec<RunKey>,
    pub val: Vec<Sample<T>>,
    pub test: Vec<Sample<T>>,
}

impl<T: Scalar> PreparedSplit<T> {
    pub fn new(rows: &[FeatureRow<T>], split: SplitSpec, norm: &NormalizationParams<T>) -> Self {
        Self {
            train: samples_for(rows, &split.train, norm),
            train_runs: chronological(rows, &split.train)
                .into_iter()
                .map(|r| r.run.clone())
                .collect(),
            val: samples_for(rows, &split.val, norm),
            test: samples_for(rows, &split.test, norm),
            split,
        }
    }
}

/// Distinct run keys of `rows`, in first-seen order.
pub fn run_keys<T: Scalar>(rows: &[FeatureRow<T>]) -> Vec<RunKey> {
    let mut seen = BTreeSet::new();
    rows.iter()
        .filter(|r| seen.insert(r.run.clone()))
        .map(|r| r.run.clone())
        .collect()
}

/// Split of the runs of one source.
pub fn source_split<T: Scalar>(rows: &[FeatureRow<T>], source: Source, mode: SplitMode) -> Result<SplitSpec> {
    let keys: Vec<RunKey> = run_keys(rows).into_iter().filter(|k| k.source == source).collect();
    if keys.is_empty() {
        return Err(Error::Split(format!("no {source} runs in the feature rows")));
    }
    crate::eval::build_splits(&keys, mode)
}

/// How each source is split by default: robots pretrain on every run but the
/// validation share, humans follow the in-distribution protocol.
pub fn default_mode(source: Source) -> SplitMode {
    match source {
        Source::Robot => SplitMode::Pretraining,
        Source::Human => SplitMode::InDistribution,
    }
}

/// Normalization fitted on the union of the default training splits of every
/// source present in `rows`.
pub fn fit_train_normalization<T: Scalar>(rows: &[FeatureRow<T>]) -> Result<NormalizationParams<T>> {
    let mut fit_keys = BTreeSet::new();
    for &source in Source::ALL {
        if rows.iter().any(|r| r.run.source == source) {
            fit_keys.extend(source_split(rows, source, default_mode(source))?.train);
        }
    }
    fit_normalization_on(rows, &fit_keys, "train")
}

/// Everything the robot-pretraining experiments share: cleaned feature rows,
/// a normalization fitted on the robot and human training runs, the robot
/// pretraining split and the human in-distribution split.
#[derive(Debug, Clone)]
pub struct ExperimentData<T: Scalar> {
    pub rows: Vec<FeatureRow<T>>,
    pub cleaning: Vec<GroupCleaning>,
    pub norm: NormalizationParams<T>,
    pub robot: PreparedSplit<T>,
    pub human: PreparedSplit<T>,
}

impl<T: Scalar> ExperimentData<T> {
    pub fn from_rows(rows: Vec<FeatureRow<T>>, clean_k: Option<f64>) -> Result<Self> {
        let (rows, cleaning) = match clean_k {
            Some(k) => clean_rows(rows, k)?,
            None => (rows, Vec::new()),
        };
        let robot_split = source_split(&rows, Source::Robot, SplitMode::Pretraining)?;
        let human_split = source_split(&rows, Source::Human, SplitMode::InDistribution)?;
        let norm = fit_train_normalization(&rows)?;
        Ok(Self {
            robot: PreparedSplit::new(&rows, robot_split, &norm),
            human: PreparedSplit::new(&rows, human_split, &norm),
            rows,
            cleaning,
            norm,
        })
    }

    pub fn from_runs(runs: &[SensorRun], params: WindowParams, clean_k: Option<f64>) -> Result<Self> {
        Self::from_rows(featurize_runs(runs, params)?, clean_k)
    }
}
