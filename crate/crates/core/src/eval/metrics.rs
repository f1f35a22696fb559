use serde::{Deserialize, Serialize};

use crate::data::{SplitSpec, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::model::{MlpParams, Sample};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ZeroShot,
    FineTuned,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::ZeroShot, Regime::FineTuned];

    pub fn name(self) -> &'static str {
        match self {
            Regime::ZeroShot => "zero_shot",
            Regime::FineTuned => "fine_tuned",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rows are true classes, columns predicted classes.
pub type Confusion = [[usize; NUM_CLASSES]; NUM_CLASSES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    pub regime: Regime,
    pub fraction: f64,
    pub split: SplitSpec,
    pub seed: u64,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        self.confusion.map(|row| row.iter().sum())
    }
}

pub fn accuracy_of(confusion: &Confusion) -> f64 {
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let hits: usize = (0..NUM_CLASSES).map(|i| confusion[i][i]).sum();
    hits as f64 / total as f64
}

pub fn confusion_matrix<T: Scalar>(params: &MlpParams<T>, test: &[Sample<T>]) -> Result<Confusion> {
    if params.output_dim() != NUM_CLASSES {
        return Err(Error::Eval(format!(
            "model has {} outputs, expected {NUM_CLASSES}",
            params.output_dim()
        )));
    }
    let mut c = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for s in test {
        if s.label >= NUM_CLASSES {
            return Err(Error::Eval(format!("label {} out of range", s.label)));
        }
        c[s.label][params.predict(&s.x)?] += 1;
    }
    Ok(c)
}

/// Arg-max predictions over `test` summarized as accuracy and confusion.
pub fn evaluate<T: Scalar>(
    params: &MlpParams<T>,
    test: &[Sample<T>],
    regime: Regime,
    fraction: f64,
    split: SplitSpec,
    seed: u64,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Eval("empty test set".into()));
    }
    let confusion = confusion_matrix(params, test)?;
    Ok(EvalReport {
        accuracy: accuracy_of(&confusion),
        confusion,
        regime,
        fraction,
        split,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SplitMode;
    use std::collections::BTreeSet;

    fn empty_split() -> SplitSpec {
        SplitSpec::new(
            SplitMode::InDistribution,
            BTreeSet::new(),
            BTreeSet::new(),
            BTreeSet::new(),
        )
        .unwrap()
    }

    /// Single-layer model whose logit for class c is `x[c]`.
    fn oracle() -> MlpParams<f64> {
        let mut w = vec![0.0; 16];
        for c in 0..4 {
            w[c * 4 + c] = 1.0;
        }
        MlpParams::from_parts(vec![4, 4], vec![w], vec![vec![0.0; 4]]).unwrap()
    }

    fn one_hot(c: usize) -> Vec<f64> {
        let mut v = vec![0.0; 4];
        v[c] = 1.0;
        v
    }

    #[test]
    fn perfect_model_on_one_class() {
        let test: Vec<Sample<f64>> = (0..10)
            .map(|_| Sample {
                x: one_hot(2),
                label: 2,
            })
            .collect();
        let r = evaluate(&oracle(), &test, Regime::ZeroShot, 1.0, empty_split(), 0).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion[2][2], 10);
        assert_eq!(r.total(), 10);
    }

    #[test]
    fn never_right_means_zero() {
        let test: Vec<Sample<f64>> = (0..4)
            .map(|c| Sample {
                x: one_hot((c + 1) % 4),
                label: c,
            })
            .collect();
        let r = evaluate(&oracle(), &test, Regime::FineTuned, 0.5, empty_split(), 0).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.class_counts(), [1, 1, 1, 1]);
    }

    #[test]
    fn uniform_model_predicts_class_zero() {
        let p = MlpParams::<f64>::zeros(&[4, 4]).unwrap();
        let test: Vec<Sample<f64>> = (0..400)
            .map(|i| Sample {
                x: one_hot(i % 4),
                label: i % 4,
            })
            .collect();
        let r = evaluate(&p, &test, Regime::ZeroShot, 1.0, empty_split(), 0).unwrap();
        assert_eq!(r.accuracy, 0.25);
        assert_eq!(r.confusion.iter().map(|row| row[0]).sum::<usize>(), 400);
    }

    #[test]
    fn empty_test_is_an_error() {
        assert!(evaluate(&oracle(), &[], Regime::ZeroShot, 1.0, empty_split(), 0).is_err());
    }
}
