use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::Regime;
use super::splits::build_splits;
use super::sweep::{fit_regime, train_and_evaluate, with_pool};
use crate::data::{Source, SplitMode};
use crate::error::{Error, Result};
use crate::features::{FeatureRow, NormalizationParams};
use crate::model::{MlpParams, TrainConfig};
use crate::pipeline::{run_keys, PreparedSplit};
use crate::scalar::Scalar;

/// Seed-averaged test accuracy of one held-out subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRow {
    pub subject: String,
    pub id_zero_shot: f64,
    pub id_fine_tuned: f64,
    pub ood_zero_shot: f64,
    pub ood_fine_tuned: f64,
}

impl SubjectRow {
    pub fn id_boost(&self) -> f64 {
        self.id_fine_tuned - self.id_zero_shot
    }

    pub fn ood_boost(&self) -> f64 {
        self.ood_fine_tuned - self.ood_zero_shot
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubjectTable {
    pub rows: Vec<SubjectRow>,
}

impl SubjectTable {
    fn mean(&self, f: impl Fn(&SubjectRow) -> f64) -> f64 {
        self.rows.iter().map(f).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn mean_id_fine_tuned(&self) -> f64 {
        self.mean(|r| r.id_fine_tuned)
    }

    pub fn mean_ood_fine_tuned(&self) -> f64 {
        self.mean(|r| r.ood_fine_tuned)
    }

    /// Fine-tuned minus zero-shot, averaged over subjects and both settings.
    pub fn mean_boost(&self) -> f64 {
        self.mean(|r| (r.id_boost() + r.ood_boost()) / 2.0)
    }

    pub fn max_boost(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.id_boost(), r.ood_boost()])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("subject,id_zero_shot,id_fine_tuned,id_boost,ood_zero_shot,ood_fine_tuned,ood_boost\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.subject,
                r.id_zero_shot,
                r.id_fine_tuned,
                r.id_boost(),
                r.ood_zero_shot,
                r.ood_fine_tuned,
                r.ood_boost()
            );
        }
        let _ = writeln!(
            out,
            "mean,,{},{},,{},{}",
            self.mean_id_fine_tuned(),
            self.mean(|r| r.id_boost()),
            self.mean_ood_fine_tuned(),
            self.mean(|r| r.ood_boost())
        );
        out
    }
}

/// Per human subject: in-distribution (train and validate on the pooled
/// training runs of every subject, this one included) and out-of-distribution
/// (train and validate on every other subject), both tested on the subject's
/// own test runs and trained zero-shot and fine-tuned from `pretrained`.
pub fn subject_protocol<T: Scalar>(
    rows: &[FeatureRow<T>],
    norm: &NormalizationParams<T>,
    pretrained: &MlpParams<T>,
    seeds: &[u64],
    config: &TrainConfig,
    jobs: usize,
) -> Result<SubjectTable> {
    use rayon::prelude::*;

    let human: Vec<FeatureRow<T>> = rows.iter().filter(|r| r.run.source == Source::Human).cloned().collect();
    let keys = run_keys(&human);
    let mut subjects: Vec<String> = keys.iter().map(|k| k.subject_id.clone()).collect();
    subjects.sort();
    subjects.dedup();
    if subjects.len() < 2 {
        return Err(Error::Split(format!(
            "subject protocol needs at least 2 human subjects, found {}",
            subjects.len()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::Config("subject protocol needs at least one seed".into()));
    }

    let pooled = PreparedSplit::new(&human, build_splits(&keys, SplitMode::InDistribution)?, norm);
    let mut ood = Vec::new();
    for s in &subjects {
        let split = build_splits(
            &keys,
            SplitMode::OutOfDistribution {
                held_out_subject: s.clone(),
            },
        )?;
        ood.push(PreparedSplit::new(&human, split, norm));
    }

    let cfg = |seed| TrainConfig { seed, ..config.clone() };
    let mut id_cells = Vec::new();
    let mut ood_cells = Vec::new();
    for &seed in seeds {
        for regime in Regime::ALL {
            id_cells.push((seed, regime));
            for si in 0..subjects.len() {
                ood_cells.push((si, seed, regime));
            }
        }
    }
    let (id_results, ood_results) = with_pool(jobs, || {
        let id = id_cells
            .par_iter()
            .map(|&(seed, regime)| -> Result<Vec<f64>> {
                let params = fit_regime(&pooled.train, &pooled.val, regime, pretrained, &cfg(seed))?;
                ood.iter()
                    .map(|own| {
                        let acc = params.accuracy(&own.test)?;
                        log::info!("subject id seed={seed} {regime}: {acc:.4}");
                        Ok(acc)
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>();
        let ood = ood_cells
            .par_iter()
            .map(|&(si, seed, regime)| -> Result<f64> {
                let data = &ood[si];
                let r = train_and_evaluate(&data.train, data, regime, pretrained, &cfg(seed), 1.0)?;
                log::info!("subject {} ood seed={seed} {regime}: {:.4}", subjects[si], r.accuracy);
                Ok(r.accuracy)
            })
            .collect::<Result<Vec<_>>>();
        (id, ood)
    })?;
    let (id_results, ood_results) = (id_results?, ood_results?);

    let n = seeds.len() as f64;
    let mut table = SubjectTable::default();
    for (si, subject) in subjects.iter().enumerate() {
        let mut sums = [0.0f64; 4];
        for ((_, regime), accs) in id_cells.iter().zip(&id_results) {
            sums[(*regime == Regime::FineTuned) as usize] += accs[si];
        }
        for ((csi, _, regime), acc) in ood_cells.iter().zip(&ood_results) {
            if *csi == si {
                sums[2 + (*regime == Regime::FineTuned) as usize] += acc;
            }
        }
        table.rows.push(SubjectRow {
            subject: subject.clone(),
            id_zero_shot: sums[0] / n,
            id_fine_tuned: sums[1] / n,
            ood_zero_shot: sums[2] / n,
            ood_fine_tuned: sums[3] / n,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boosts_and_means() {
        let t = SubjectTable {
            rows: vec![
                SubjectRow {
                    subject: "a".into(),
                    id_zero_shot: 0.5,
                    id_fine_tuned: 0.75,
                    ood_zero_shot: 0.25,
                    ood_fine_tuned: 0.5,
                },
                SubjectRow {
                    subject: "b".into(),
                    id_zero_shot: 1.0,
                    id_fine_tuned: 1.0,
                    ood_zero_shot: 0.5,
                    ood_fine_tuned: 0.25,
                },
            ],
        };
        assert_eq!(t.rows[0].id_boost(), 0.25);
        assert_eq!(t.mean_boost(), (0.25 + 0.0 + 0.25 - 0.25) / 4.0);
        assert_eq!(t.max_boost(), 0.25);
        assert_eq!(t.mean_id_fine_tuned(), 0.875);
        let csv = t.to_csv();
        assert!(csv.starts_with("subject,id_zero_shot"));
        assert_eq!(csv.lines().count(), 4);
    }
}
