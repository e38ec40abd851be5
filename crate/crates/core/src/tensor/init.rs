use rand::Rng;

use super::array::{Scalar, Tensor};

pub fn uniform<T: Scalar, R: Rng + ?Sized>(shape: &[usize], limit: f64, rng: &mut R) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.gen_range(-limit..=limit))).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

/// Glorot/Xavier uniform: ±√(6/(fan_in+fan_out)).
pub fn glorot<T: Scalar, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(shape, limit, rng)
}
