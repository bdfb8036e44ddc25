//! Loss functions. Values accumulate in `f64` whatever the parameter type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities are clamped here before the log so a saturated softmax
/// still yields a finite loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error plus `l2 * sum(w^2)` over all weight matrices
    /// (biases excluded). Used for reconstruction.
    MseL2,
    /// Negative log likelihood of the labeled class. Used for classification.
    Nll,
}

/// `(1/len) * sum((recon - target)^2) + l2 * sum(w^2)`.
///
/// `weight_mats` are the network's weight matrices; bias terms carry no
/// penalty.
pub fn mse_l2_loss<F: Scalar>(
    recon: &[F],
    target: &[F],
    weight_mats: &[&[F]],
    l2: f64,
) -> Result<f64> {
    if recon.len() != target.len() {
        return Err(Error::shape(format!(
            "reconstruction has {} components, target {}",
            recon.len(),
            target.len()
        )));
    }
    if recon.is_empty() {
        return Err(Error::parameter("loss over empty vectors"));
    }
    let mut sq = 0.0f64;
    for (r, t) in recon.iter().zip(target) {
        let d = r.to_f64_s() - t.to_f64_s();
        sq += d * d;
    }
    Ok(sq / recon.len() as f64 + l2 * weight_sq_sum(weight_mats))
}

pub(crate) fn weight_sq_sum<F: Scalar>(weight_mats: &[&[F]]) -> f64 {
    weight_mats
        .iter()
        .flat_map(|m| m.iter())
        .map(|w| {
            let w = w.to_f64_s();
            w * w
        })
        .sum()
}

/// `-ln(probs[label])`, with probabilities clamped at [`PROB_FLOOR`].
pub fn nll_loss<F: Scalar>(probs: &[F], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::parameter(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let sum: f64 = probs.iter().map(|p| p.to_f64_s()).sum();
    if (sum - 1.0).abs() > 1e-3 {
        return Err(Error::data(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(-(probs[label].to_f64_s().max(PROB_FLOOR)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_reconstruction_is_zero() {
        let v = vec![0.3f32, -0.7, 2.0];
        assert_eq!(mse_l2_loss(&v, &v, &[], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_mse() {
        let recon = vec![1.0f64, 0.0];
        let target = vec![0.0f64, 0.0];
        assert!((mse_l2_loss(&recon, &target, &[], 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn l2_penalty_counts_weights_only() {
        let v = vec![1.0f32, 2.0];
        let w = vec![2.0f32];
        let loss = mse_l2_loss(&v, &v, &[&w], 0.1).unwrap();
        assert!((loss - 0.4).abs() < 1e-7);
    }

    #[test]
    fn nll_hand_values() {
        let certain = vec![1.0f64, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(nll_loss(&certain, 0).unwrap(), 0.0);
        let uniform = vec![0.2f64; 5];
        assert!((nll_loss(&uniform, 3).unwrap() - 5.0f64.ln()).abs() < 1e-12);
        let half = vec![0.5f64, 0.5];
        assert!((nll_loss(&half, 1).unwrap() - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nll_clamps_zero_probability() {
        let p = vec![1.0f64, 0.0];
        let loss = nll_loss(&p, 1).unwrap();
        assert!(loss.is_finite());
        assert!((loss - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = vec![1.0f32; 3];
        let b = vec![1.0f32; 4];
        assert!(mse_l2_loss(&a, &b, &[], 0.0).is_err());
    }
}
