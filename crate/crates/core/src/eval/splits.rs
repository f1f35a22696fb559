use std::collections::{BTreeMap, BTreeSet};

use crate::data::{RunKey, SplitMode, SplitSpec};
use crate::error::{Error, Result};

/// Train / val / test run counts for a group of `n` runs.
///
/// Nine runs split 3/3/3. Other sizes are split proportionally with the
/// remainder going to train first, then validation: `train = ceil(n / 3)`,
/// `val = ceil((n - train) / 2)`, `test = n - train - val`.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let train = n.div_ceil(3);
    let val = (n - train).div_ceil(2);
    (train, val, n - train - val)
}

/// Assigns whole runs to splits per (subject, source, task) group, in
/// ascending `run_index` order.
///
/// In out-of-distribution mode the held-out subject contributes only its own
/// test-split runs, and every other subject contributes only train and
/// validation runs; the test set is then exactly the runs an in-distribution
/// split of that subject would test on. Pretraining mode keeps the validation
/// runs and trains on everything else.
pub fn build_splits(keys: &[RunKey], mode: SplitMode) -> Result<SplitSpec> {
    let mut groups: BTreeMap<(&str, _, _), Vec<&RunKey>> = BTreeMap::new();
    for k in keys {
        groups
            .entry((k.subject_id.as_str(), k.source, k.task))
            .or_default()
            .push(k);
    }
    let held_out = match &mode {
        SplitMode::OutOfDistribution { held_out_subject } => {
            if !keys.iter().any(|k| &k.subject_id == held_out_subject) {
                return Err(Error::Split(format!(
                    "held-out subject `{held_out_subject}` does not appear in the dataset"
                )));
            }
            Some(held_out_subject.as_str())
        }
        SplitMode::InDistribution | SplitMode::Pretraining => None,
    };
    let pretraining = mode == SplitMode::Pretraining;

    let (mut train, mut val, mut test) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    for ((subject, _, _), mut runs) in groups {
        runs.sort_by_key(|k| k.run_index);
        runs.dedup();
        let (n_train, n_val, _) = split_counts(runs.len());
        for (i, k) in runs.into_iter().enumerate() {
            let part = if i < n_train {
                0
            } else if i < n_train + n_val {
                1
            } else {
                2
            };
            match (held_out, part) {
                (Some(h), 2) if h == subject => {
                    test.insert(k.clone());
                }
                (Some(h), _) if h == subject => {}
                (Some(_), 2) => {}
                (None, 2) if pretraining => {
                    train.insert(k.clone());
                }
                (_, 0) => {
                    train.insert(k.clone());
                }
                (_, 1) => {
                    val.insert(k.clone());
                }
                _ => {
                    test.insert(k.clone());
                }
            }
        }
    }
    SplitSpec::new(mode, train, val, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Source, TaskLabel};

    fn keys(subjects: &[&str], runs: u32) -> Vec<RunKey> {
        let mut out = Vec::new();
        for s in subjects {
            for &task in TaskLabel::ALL {
                for run_index in 0..runs {
                    out.push(RunKey {
                        subject_id: (*s).into(),
                        source: Source::Human,
                        task,
                        run_index,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn nine_runs_split_three_ways() {
        let spec = build_splits(&keys(&["s1"], 9), SplitMode::InDistribution).unwrap();
        assert_eq!((spec.train.len(), spec.val.len(), spec.test.len()), (12, 12, 12));
        for k in &spec.train {
            assert!(k.run_index <= 2);
        }
        for k in &spec.val {
            assert!((3..=5).contains(&k.run_index));
        }
        for k in &spec.test {
            assert!(k.run_index >= 6);
        }
    }

    #[test]
    fn proportional_counts() {
        assert_eq!(split_counts(9), (3, 3, 3));
        assert_eq!(split_counts(4), (2, 1, 1));
        assert_eq!(split_counts(8), (3, 3, 2));
        assert_eq!(split_counts(1), (1, 0, 0));
        assert_eq!(split_counts(2), (1, 1, 0));
        assert_eq!(split_counts(0), (0, 0, 0));
        for n in 0..50 {
            let (a, b, c) = split_counts(n);
            assert_eq!(a + b + c, n);
            assert!(a >= b && b >= c);
        }
    }

    #[test]
    fn four_runs_of_one_task() {
        let ks: Vec<RunKey> = keys(&["s"], 4)
            .into_iter()
            .filter(|k| k.task == TaskLabel::Routing)
            .collect();
        let spec = build_splits(&ks, SplitMode::InDistribution).unwrap();
        assert_eq!((spec.train.len(), spec.val.len(), spec.test.len()), (2, 1, 1));
    }

    #[test]
    fn held_out_subject_only_in_test() {
        let ks = keys(&["a", "b", "c"], 9);
        let spec = build_splits(
            &ks,
            SplitMode::OutOfDistribution {
                held_out_subject: "b".into(),
            },
        )
        .unwrap();
        assert!(spec.train.iter().chain(&spec.val).all(|k| k.subject_id != "b"));
        assert!(spec.test.iter().all(|k| k.subject_id == "b"));
        assert_eq!(spec.test.len(), 12);
        assert_eq!(spec.train.len(), 24);
    }

    #[test]
    fn pretraining_folds_test_into_train() {
        let spec = build_splits(&keys(&["r"], 8), SplitMode::Pretraining).unwrap();
        assert_eq!((spec.train.len(), spec.val.len(), spec.test.len()), (20, 12, 0));
        assert!(spec.val.iter().all(|k| (3..=5).contains(&k.run_index)));
    }

    #[test]
    fn unknown_held_out_subject_is_an_error() {
        let err = build_splits(
            &keys(&["a"], 3),
            SplitMode::OutOfDistribution {
                held_out_subject: "zz".into(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Split(_)));
    }

    proptest::proptest! {
        #[test]
        fn splits_are_disjoint_and_cover(runs in 1u32..15, subjects in 1usize..4) {
            let names: Vec<String> = (0..subjects).map(|i| format!("s{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let ks = keys(&refs, runs);
            let spec = build_splits(&ks, SplitMode::InDistribution).unwrap();
            proptest::prop_assert!(spec.train.is_disjoint(&spec.val));
            proptest::prop_assert!(spec.train.is_disjoint(&spec.test));
            proptest::prop_assert!(spec.val.is_disjoint(&spec.test));
            proptest::prop_assert_eq!(spec.train.len() + spec.val.len() + spec.test.len(), ks.len());
        }
    }
}
