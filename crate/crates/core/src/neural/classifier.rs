//! Two-way softmax classifier and clamped cross-entropy.

use super::activation::softmax;
use super::linalg::MatRef;
use crate::error::NeuralError;

/// Lower bound applied to the true-class probability before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct ClassifierHead<'a> {
    /// `2 × in_dim`
    pub weight: MatRef<'a>,
    pub bias: &'a [f64],
}

impl ClassifierHead<'_> {
    pub fn logits(&self, h: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if self.weight.rows != 2 || self.bias.len() != 2 {
            return Err(NeuralError::DimensionMismatch(format!(
                "classifier is {}x{} with {} biases, expected 2 rows",
                self.weight.rows,
                self.weight.cols,
                self.bias.len()
            )));
        }
        if h.len() != self.weight.cols {
            return Err(NeuralError::DimensionMismatch(format!(
                "classifier input {} != {}",
                h.len(),
                self.weight.cols
            )));
        }
        let mut z = self.weight.matvec(h);
        z.iter_mut().zip(self.bias).for_each(|(z, b)| *z += b);
        Ok(z)
    }
}

/// `softmax(W_fc h + b_fc)`.
pub fn classify(h: &[f64], head: &ClassifierHead<'_>) -> Result<[f64; 2], NeuralError> {
    let p = softmax(&head.logits(h)?);
    Ok([p[0], p[1]])
}

/// `−ln max(ŷ[y], 1e−12)`.
pub fn loss(probs: &[f64; 2], y: usize) -> f64 {
    -probs[y].max(PROB_FLOOR).ln()
}

/// Gradient of [`loss`] with respect to the logits. Zero when the clamp is
/// active, since the clamped loss is flat there.
pub fn loss_grad_logits(probs: &[f64; 2], y: usize) -> [f64; 2] {
    if probs[y] < PROB_FLOOR {
        return [0.0, 0.0];
    }
    let mut g = *probs;
    g[y] -= 1.0;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_when_zero() {
        let w = [0.0; 6];
        let b = [0.0; 2];
        let head = ClassifierHead {
            weight: MatRef::new(&w, 2, 3),
            bias: &b,
        };
        assert_eq!(classify(&[1.0, -2.0, 3.0], &head).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn ln3_logits() {
        let w = [0.0; 2];
        let b = [3f64.ln(), 0.0];
        let head = ClassifierHead {
            weight: MatRef::new(&w, 2, 1),
            bias: &b,
        };
        let p = classify(&[0.0], &head).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
        assert!(matches!(classify(&[0.0, 1.0], &head), Err(NeuralError::DimensionMismatch(_))));
    }

    #[test]
    fn loss_values() {
        assert_eq!(loss(&[1.0, 0.0], 0), 0.0);
        assert!((loss(&[0.5, 0.5], 1) - 2f64.ln()).abs() < 1e-15);
        assert!((loss(&[0.75, 0.25], 1) - 4f64.ln()).abs() < 1e-15);
        assert!((loss(&[1.0, 0.0], 1) - (-PROB_FLOOR.ln())).abs() < 1e-12);
        assert_eq!(loss_grad_logits(&[1.0, 0.0], 1), [0.0, 0.0]);
        assert_eq!(loss_grad_logits(&[0.75, 0.25], 1), [0.75, -0.75]);
    }
}
