use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense feed-forward classifier: ReLU hidden layers, softmax output.
///
/// `weights[l]` is row-major with shape `dims[l + 1] x dims[l]`. The same
/// type doubles as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct MlpParams<T: Scalar> {
    pub(crate) dims: Vec<usize>,
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) biases: Vec<Vec<T>>,
}

/// One labelled training or evaluation example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x: Vec<T>,
    pub label: usize,
}

impl<T: Scalar> MlpParams<T> {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            weights: dims.windows(2).map(|w| vec![T::zero(); w[0] * w[1]]).collect(),
            biases: dims[1..].iter().map(|&d| vec![T::zero(); d]).collect(),
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot(dims: &[usize], seed: u64) -> Result<Self> {
        let mut p = Self::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (l, w) in p.weights.iter_mut().enumerate() {
            let limit = (6.0 / (dims[l] + dims[l + 1]) as f64).sqrt();
            for v in w.iter_mut() {
                *v = T::of(rng.random_range(-limit..limit));
            }
        }
        Ok(p)
    }

    pub fn from_parts(dims: Vec<usize>, weights: Vec<Vec<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        let p = Self { dims, weights, biases };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(&self.dims)?;
        let layers = self.dims.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Contract(format!(
                "{layers} layers expected, found {} weight and {} bias tensors",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for l in 0..layers {
            if self.weights[l].len() != self.dims[l] * self.dims[l + 1] {
                return Err(Error::Contract(format!(
                    "weights[{l}] has {} entries, expected {}x{}",
                    self.weights[l].len(),
                    self.dims[l + 1],
                    self.dims[l]
                )));
            }
            if self.biases[l].len() != self.dims[l + 1] {
                return Err(Error::Contract(format!(
                    "biases[{l}] has {} entries, expected {}",
                    self.biases[l].len(),
                    self.dims[l + 1]
                )));
            }
        }
        if self.tensors().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Contract("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims checked non-empty")
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Weight and bias tensors interleaved: w0, b0, w1, b1, ...
    pub fn tensors(&self) -> impl Iterator<Item = &Vec<T>> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| [w, b])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<T>> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
    }

    pub fn num_params(&self) -> usize {
        self.tensors().map(Vec::len).sum()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Contract(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Pre-activations per layer for input `x`; activations are derived on the fly.
    fn pre_activations(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut zs: Vec<Vec<T>> = Vec::with_capacity(self.num_layers());
        let mut rectified: Vec<T> = Vec::new();
        for l in 0..self.num_layers() {
            if l > 0 {
                rectified.clear();
                rectified.extend(zs[l - 1].iter().map(|&z| z.max(T::zero())));
            }
            let input: &[T] = if l == 0 { x } else { &rectified };
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let w = &self.weights[l];
            let mut z = self.biases[l].clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *zo += row.iter().zip(input).fold(T::zero(), |acc, (&wi, &ai)| acc + wi * ai);
            }
            debug_assert_eq!(z.len(), n_out);
            zs.push(z);
        }
        zs
    }

    pub fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.pre_activations(x).pop().expect("at least one layer"))
    }

    /// Class probabilities.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Mean cross-entropy over `batch` and its gradient with respect to every
    /// parameter.
    pub fn loss_and_grad(&self, batch: &[(&[T], usize)]) -> Result<(T, MlpParams<T>)> {
        if batch.is_empty() {
            return Err(Error::Contract("loss over an empty batch".into()));
        }
        let mut grad = Self::zeros(&self.dims)?;
        let mut total = T::zero();
        let layers = self.num_layers();
        for &(x, label) in batch {
            self.check_input(x)?;
            if label >= self.output_dim() {
                return Err(Error::Contract(format!(
                    "label {label} outside [0, {})",
                    self.output_dim()
                )));
            }
            let zs = self.pre_activations(x);
            let logits = &zs[layers - 1];
            let lse = log_sum_exp(logits);
            total += lse - logits[label];

            let mut delta: Vec<T> = logits.iter().map(|&z| (z - lse).exp()).collect();
            delta[label] -= T::one();
            for l in (0..layers).rev() {
                let n_in = self.dims[l];
                let input: Vec<T> = if l == 0 {
                    x.to_vec()
                } else {
                    zs[l - 1].iter().map(|&z| z.max(T::zero())).collect()
                };
                let gw = &mut grad.weights[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    for (g, &a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(&input) {
                        *g += d * a;
                    }
                }
                for (g, &d) in grad.biases[l].iter_mut().zip(&delta) {
                    *g += d;
                }
                if l > 0 {
                    let w = &self.weights[l];
                    let mut prev = vec![T::zero(); n_in];
                    for (o, &d) in delta.iter().enumerate() {
                        if d == T::zero() {
                            continue;
                        }
                        for (p, &wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *p += wi * d;
                        }
                    }
                    for (p, &z) in prev.iter_mut().zip(&zs[l - 1]) {
                        if z <= T::zero() {
                            *p = T::zero();
                        }
                    }
                    delta = prev;
                }
            }
        }
        let scale = T::one() / T::of_usize(batch.len());
        for t in grad.tensors_mut() {
            for g in t.iter_mut() {
                *g *= scale;
            }
        }
        Ok((total * scale, grad))
    }

    /// Mean cross-entropy only.
    pub fn loss(&self, batch: &[(&[T], usize)]) -> Result<T> {
        if batch.is_empty() {
            return Err(Error::Contract("loss over an empty batch".into()));
        }
        let mut total = T::zero();
        for &(x, label) in batch {
            let z = self.logits(x)?;
            total += log_sum_exp(&z) - z[label];
        }
        Ok(total / T::of_usize(batch.len()))
    }

    /// Fraction of `samples` whose predicted class equals the label.
    pub fn accuracy(&self, samples: &[Sample<T>]) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for s in samples {
            hits += (self.predict(&s.x)? == s.label) as usize;
        }
        Ok(hits as f64 / samples.len() as f64)
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Scalar>(&self) -> MlpParams<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::of(x.as_f64())).collect();
        MlpParams {
            dims: self.dims.clone(),
            weights: self.weights.iter().map(conv).collect(),
            biases: self.biases.iter().map(conv).collect(),
        }
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Contract(format!(
            "layer dims need at least two positive entries, got {dims:?}"
        )));
    }
    Ok(())
}

pub fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    m + z.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_uniform_output() {
        let p = MlpParams::<f64>::zeros(&[110, 64, 32, 4]).unwrap();
        let x: Vec<f64> = (0..110).map(|i| i as f64 / 7.0).collect();
        assert_eq!(p.forward(&x).unwrap(), vec![0.25; 4]);
        assert_eq!(p.predict(&x).unwrap(), 0);
    }

    #[test]
    fn uniform_model_loss_is_ln4() {
        let p = MlpParams::<f64>::zeros(&[3, 4]).unwrap();
        let xs = [[0.1, 0.2, 0.3], [1.0, 0.0, 0.5], [0.0; 3], [0.3; 3]];
        let batch: Vec<(&[f64], usize)> = xs.iter().enumerate().map(|(i, x)| (&x[..], i)).collect();
        let (loss, _) = p.loss_and_grad(&batch).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn duplicated_batch_has_same_loss() {
        let p = MlpParams::<f64>::glorot(&[3, 5, 4], 3).unwrap();
        let xs = [[0.1, 0.2, 0.3], [1.0, 0.0, 0.5]];
        let one: Vec<(&[f64], usize)> = vec![(&xs[0][..], 1), (&xs[1][..], 2)];
        let two: Vec<(&[f64], usize)> = one.iter().chain(one.iter()).copied().collect();
        let (a, ga) = p.loss_and_grad(&one).unwrap();
        let (b, gb) = p.loss_and_grad(&two).unwrap();
        assert!((a - b).abs() < 1e-15);
        for (x, y) in ga.tensors().flatten().zip(gb.tensors().flatten()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_a_contract_violation() {
        let p = MlpParams::<f64>::zeros(&[110, 4]).unwrap();
        assert!(matches!(p.forward(&[0.0; 10]), Err(Error::Contract(_))));
        assert!(MlpParams::<f64>::zeros(&[110]).is_err());
    }

    #[test]
    fn glorot_respects_limits_and_seed() {
        let a = MlpParams::<f64>::glorot(&[110, 64, 4], 5).unwrap();
        let limit = (6.0f64 / 174.0).sqrt();
        assert!(a.weights[0].iter().all(|w| w.abs() <= limit));
        assert_eq!(a, MlpParams::glorot(&[110, 64, 4], 5).unwrap());
        assert_ne!(a, MlpParams::glorot(&[110, 64, 4], 6).unwrap());
    }

    #[test]
    fn single_precision_softmax_sums_to_one() {
        let p = MlpParams::<f64>::glorot(&[5, 8, 4], 11).unwrap().cast::<f32>();
        let probs = p.forward(&[0.5f32, -1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!((probs.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.3, 0.3, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4]), 1);
    }
}
