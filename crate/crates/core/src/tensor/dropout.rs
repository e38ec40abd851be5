use rand::Rng;

use super::array::{Scalar, Tensor};
use super::graph::Mode;
use super::TensorError;

pub(crate) fn check_rate(rate: f64) -> Result<(), TensorError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(TensorError::Domain(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Keep/scale mask for inverted dropout: each entry is 0 with probability
/// `rate`, otherwise `1/(1-rate)`.
pub(crate) fn mask<T: Scalar, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

/// Inverted dropout on a plain tensor. Eval mode is the identity.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(
    v: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Tensor<T>, TensorError> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(v.clone());
    }
    let m = mask::<T, R>(v.len(), rate, rng);
    let data = v.data().iter().zip(&m).map(|(&x, &k)| x * k).collect();
    Tensor::new(v.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_mode_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = Tensor::<f32>::vector(vec![1.5, -2.0, 0.25]).unwrap();
        assert_eq!(dropout(&v, 0.5, Mode::Eval, &mut rng).unwrap(), v);
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = Tensor::<f32>::vector(vec![1.5, -2.0, 0.25]).unwrap();
        assert_eq!(dropout(&v, 0.0, Mode::Train, &mut rng).unwrap(), v);
    }

    #[test]
    fn rate_outside_unit_interval_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = Tensor::<f32>::vector(vec![1.0]).unwrap();
        assert!(dropout(&v, 1.0, Mode::Train, &mut rng).is_err());
        assert!(dropout(&v, -0.1, Mode::Train, &mut rng).is_err());
    }

    #[test]
    fn half_rate_preserves_mean_within_binomial_band() {
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v = Tensor::<f64>::filled(&[n], 1.0);
        let out = dropout(&v, 0.5, Mode::Train, &mut rng).unwrap();
        let mean = out.data().iter().sum::<f64>() / n as f64;
        // Each entry is 2·Bernoulli(0.5): variance 1, so the mean has σ = 1/√n.
        let sigma = (1.0 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "mean {mean}");
        assert!(out.data().iter().all(|&x| x == 0.0 || x == 2.0));
    }
}
