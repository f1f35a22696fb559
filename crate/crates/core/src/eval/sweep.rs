use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, EvalReport, Regime};
use crate::data::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::model::{train, Init, MlpParams, Sample, TrainConfig};
use crate::pipeline::PreparedSplit;
use crate::scalar::Scalar;
use crate::seed::derive_seed;

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.1, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Class-stratified subset modelling a shorter recording campaign: per
/// class, the recording sessions are put in a seed-determined order and
/// samples are taken session by session, in their given (time) order, until
/// `round(fraction * n_c)` are collected. `sessions[i]` identifies the
/// session of sample `i`. Subsets are nested as `fraction` grows for a fixed
/// seed. Returns `None` if some present class would get no samples.
pub fn stratified_subset<S: Ord>(labels: &[usize], sessions: &[S], fraction: f64, seed: u64) -> Option<Vec<usize>> {
    assert_eq!(labels.len(), sessions.len(), "one session per label");
    let mut picked = Vec::new();
    for class in 0..NUM_CLASSES {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        let mut order: Vec<&S> = idx.iter().map(|&i| &sessions[i]).collect();
        order.sort_unstable();
        order.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("fraction/class{class}")));
        order.shuffle(&mut rng);
        let mut ordered = Vec::with_capacity(idx.len());
        for s in order {
            ordered.extend(idx.iter().copied().filter(|&i| &sessions[i] == s));
        }
        let take = (fraction * idx.len() as f64).round() as usize;
        if take == 0 {
            return None;
        }
        picked.extend_from_slice(&ordered[..take.min(ordered.len())]);
    }
    picked.sort_unstable();
    Some(picked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub seed: u64,
    pub regime: Regime,
    /// `None` when the fraction left a class without samples.
    pub accuracy: Option<f64>,
    pub train_windows: usize,
    #[serde(skip)]
    pub report: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,seed,regime,accuracy,train_windows,status\n");
        for r in &self.rows {
            let (acc, status) = match r.accuracy {
                Some(a) => (format!("{a}"), "ok"),
                None => (String::new(), "skipped_empty_class"),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.fraction, r.seed, r.regime, acc, r.train_windows, status
            );
        }
        out
    }

    /// Seed-averaged accuracy per (regime, fraction), skipping warning rows.
    pub fn means(&self) -> BTreeMap<(Regime, u64), f64> {
        let mut acc: BTreeMap<(Regime, u64), (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            if let Some(a) = r.accuracy {
                let e = acc.entry((r.regime, r.fraction.to_bits())).or_default();
                e.0 += a;
                e.1 += 1;
            }
        }
        acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }

    pub fn mean_accuracy(&self, regime: Regime, fraction: f64) -> Option<f64> {
        self.means().get(&(regime, fraction.to_bits())).copied()
    }

    /// `(fraction, mean accuracy)` points of one regime, ascending in fraction.
    pub fn curve(&self, regime: Regime) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .means()
            .into_iter()
            .filter(|((r, _), _)| *r == regime)
            .map(|((_, f), a)| (f64::from_bits(f), a))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }
}

/// Ranks with ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Trains from scratch or from `pretrained`, depending on `regime`.
pub(crate) fn fit_regime<T: Scalar>(
    train_set: &[Sample<T>],
    val: &[Sample<T>],
    regime: Regime,
    pretrained: &MlpParams<T>,
    config: &TrainConfig,
) -> Result<MlpParams<T>> {
    let init = match regime {
        Regime::ZeroShot => Init::Random {
            dims: pretrained.dims().to_vec(),
        },
        Regime::FineTuned => Init::FromCheckpoint(pretrained.clone()),
    };
    Ok(train(train_set, val, config, init)?.0)
}

/// Trains one model per regime and evaluates it on `data.test`.
pub fn train_and_evaluate<T: Scalar>(
    train_set: &[Sample<T>],
    data: &PreparedSplit<T>,
    regime: Regime,
    pretrained: &MlpParams<T>,
    config: &TrainConfig,
    fraction: f64,
) -> Result<EvalReport> {
    let params = fit_regime(train_set, &data.val, regime, pretrained, config)?;
    evaluate(&params, &data.test, regime, fraction, data.split.clone(), config.seed)
}

pub(crate) fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Zero-shot versus fine-tuned accuracy on growing stratified fractions of the
/// human training split. Each (fraction, seed, regime) cell is an isolated
/// job, so results do not depend on `jobs`.
pub fn fraction_sweep<T: Scalar>(
    data: &PreparedSplit<T>,
    pretrained: &MlpParams<T>,
    fractions: &[f64],
    seeds: &[u64],
    config: &TrainConfig,
    jobs: usize,
) -> Result<SweepTable> {
    use rayon::prelude::*;

    if fractions.is_empty() || seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one fraction and one seed".into()));
    }
    if fractions.windows(2).any(|w| w[0] >= w[1]) || fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::Config(format!(
            "fractions must be strictly ascending within (0, 1], got {fractions:?}"
        )));
    }
    if data.train.is_empty() || data.val.is_empty() || data.test.is_empty() {
        return Err(Error::Split(
            "sweep needs non-empty human train, val and test splits".into(),
        ));
    }
    let labels: Vec<usize> = data.train.iter().map(|s| s.label).collect();
    let mut cells = Vec::new();
    for &fraction in fractions {
        for &seed in seeds {
            for regime in Regime::ALL {
                cells.push((fraction, seed, regime));
            }
        }
    }
    let rows = with_pool(jobs, || {
        cells
            .par_iter()
            .map(|&(fraction, seed, regime)| -> Result<SweepRow> {
                let Some(subset) = stratified_subset(&labels, &data.train_runs, fraction, seed) else {
                    log::warn!("fraction {fraction} leaves a class empty for seed {seed}; skipping");
                    return Ok(SweepRow {
                        fraction,
                        seed,
                        regime,
                        accuracy: None,
                        train_windows: 0,
                        report: None,
                    });
                };
                let train_set: Vec<Sample<T>> = subset.iter().map(|&i| data.train[i].clone()).collect();
                let cfg = TrainConfig { seed, ..config.clone() };
                let report = train_and_evaluate(&train_set, data, regime, pretrained, &cfg, fraction)?;
                log::info!("sweep fraction={fraction} seed={seed} {regime}: {:.4}", report.accuracy);
                Ok(SweepRow {
                    fraction,
                    seed,
                    regime,
                    accuracy: Some(report.accuracy),
                    train_windows: train_set.len(),
                    report: Some(report),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_nested_and_stratified() {
        let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
        let sessions: Vec<usize> = (0..200).map(|i| i / 20).collect();
        let mut prev: Vec<usize> = Vec::new();
        for f in DEFAULT_FRACTIONS {
            let s = stratified_subset(&labels, &sessions, f, 17).unwrap();
            assert!(prev.iter().all(|i| s.contains(i)), "fraction {f} not a superset");
            for c in 0..4 {
                let n = s.iter().filter(|&&i| labels[i] == c).count();
                assert_eq!(n, (f * 50.0).round() as usize);
            }
            prev = s;
        }
        assert_eq!(
            stratified_subset(&labels, &sessions, 1.0, 3).unwrap(),
            (0..200).collect::<Vec<_>>()
        );
    }

    #[test]
    fn small_fractions_fill_one_session_first() {
        // class 0 only, three sessions of ten samples each
        let labels = vec![0; 30];
        let sessions: Vec<usize> = (0..30).map(|i| i / 10).collect();
        for seed in 0..10 {
            let s = stratified_subset(&labels, &sessions, 0.2, seed).unwrap();
            assert_eq!(s.len(), 6);
            assert!(s.iter().all(|&i| sessions[i] == sessions[s[0]]));
            assert_eq!(s, (s[0]..s[0] + 6).collect::<Vec<_>>(), "takes the earliest windows");
        }
    }

    #[test]
    fn tiny_fraction_is_skipped() {
        let labels = vec![0, 1, 2, 3, 0, 1, 2, 3];
        assert!(stratified_subset(&labels, &[0; 8], 0.1, 0).is_none());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 9.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), 0.0);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn csv_marks_skipped_rows() {
        let t = SweepTable {
            rows: vec![
                SweepRow {
                    fraction: 0.1,
                    seed: 1,
                    regime: Regime::ZeroShot,
                    accuracy: None,
                    train_windows: 0,
                    report: None,
                },
                SweepRow {
                    fraction: 1.0,
                    seed: 1,
                    regime: Regime::FineTuned,
                    accuracy: Some(0.5),
                    train_windows: 40,
                    report: None,
                },
            ],
        };
        let csv = t.to_csv();
        assert!(csv.contains("0.1,1,zero_shot,,0,skipped_empty_class"));
        assert!(csv.contains("1,1,fine_tuned,0.5,40,ok"));
        assert_eq!(t.mean_accuracy(Regime::FineTuned, 1.0), Some(0.5));
        assert_eq!(t.mean_accuracy(Regime::ZeroShot, 0.1), None);
    }
}
