use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::sigmoid_scalar;

/// Per-sample loss `ℓ(ŷ, y)`, summed over categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    #[default]
    BinaryCrossEntropy,
    SquaredError,
}

/// Numerically stable `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Loss {
    /// Loss and its derivative with respect to the output pre-activation, for one
    /// category. Works from the pre-activation so BCE stays finite when σ saturates.
    pub fn from_logit(self, z: f64, y: f64) -> (f64, f64) {
        let p = sigmoid_scalar(z);
        match self {
            // -[y ln σ(z) + (1-y) ln(1-σ(z))] = softplus(z) - y z
            Loss::BinaryCrossEntropy => (softplus(z) - y * z, p - y),
            Loss::SquaredError => (0.5 * (p - y) * (p - y), (p - y) * p * (1.0 - p)),
        }
    }

    /// Summed loss over the whole batch and the `C × B` output deltas.
    pub(crate) fn batch(
        self,
        output_pre: &DMatrix<f64>,
        labels: &DMatrix<f64>,
    ) -> (f64, DMatrix<f64>) {
        let mut total = 0.0;
        let mut delta = DMatrix::zeros(output_pre.nrows(), output_pre.ncols());
        for ((d, &z), &y) in delta.iter_mut().zip(output_pre.iter()).zip(labels.iter()) {
            let (l, g) = self.from_logit(z, y);
            total += l;
            *d = g;
        }
        (total, delta)
    }
}

/// Loss of a prediction `y_hat ∈ (0,1)^C` against binary labels, plus the
/// gradient with respect to the output pre-activation.
pub fn loss_and_output_delta(y_hat: &[f64], y: &[f64], loss: Loss) -> (f64, Vec<f64>) {
    assert_eq!(y_hat.len(), y.len(), "prediction and label lengths differ");
    let mut total = 0.0;
    let delta = y_hat
        .iter()
        .zip(y)
        .map(|(&p, &t)| match loss {
            Loss::BinaryCrossEntropy => {
                total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
                p - t
            }
            Loss::SquaredError => {
                total += 0.5 * (p - t) * (p - t);
                (p - t) * p * (1.0 - p)
            }
        })
        .collect();
    (total, delta)
}
