//! Dense numeric substrate: matrices, parameter sets, Adam, seeded random
//! streams, PCA and a central-difference gradient checker.

mod adam;
mod gradcheck;
mod matrix;
mod params;
mod pca;
mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_difference_gradient, max_relative_error};
pub use matrix::{dot, gemv_acc, gemv_t_acc, outer_acc, squared_distance, Matrix};
pub use params::{ParamBlock, ParamSet};
pub use pca::{pca_fit, Pca};
pub use rng::SeededRng;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::sigmoid;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        // 1 / (1 + e^-2.1), evaluated independently
        let oracle = 1.0 / (1.0 + (-2.1f64).exp());
        assert!((sigmoid(2.1) - 0.890903).abs() < 1e-6);
        assert!((sigmoid(2.1) - oracle).abs() < 1e-15);
        let mut prev = 0.0;
        for i in -100..=100 {
            let v = sigmoid(i as f64 * 0.1);
            assert!(v >= prev);
            prev = v;
        }
    }
}
