use nalgebra::{DMatrix, DVector};

use super::{RelationInverses, TrainConfig};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::model::RdnnModel;
use crate::relation::{
    stack_fusion_weights, trace_penalty_gradient_with_inverse, trace_penalty_with_inverse,
    StackedFusionWeights,
};

/// Gradients for every parameter, shaped exactly like [`RdnnModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub transform_weights: Vec<Vec<DMatrix<f64>>>,
    pub fusion_weights: Vec<DMatrix<f64>>,
    pub fusion_bias: DVector<f64>,
    pub output_weights: DMatrix<f64>,
    pub output_bias: DVector<f64>,
}

impl GradientSet {
    pub fn zeros_like(model: &RdnnModel) -> Self {
        let zero = |m: &DMatrix<f64>| DMatrix::zeros(m.nrows(), m.ncols());
        Self {
            transform_weights: model
                .transform_weights
                .iter()
                .map(|layers| layers.iter().map(zero).collect())
                .collect(),
            fusion_weights: model.fusion_weights.iter().map(zero).collect(),
            fusion_bias: DVector::zeros(model.fusion_bias.len()),
            output_weights: zero(&model.output_weights),
            output_bias: DVector::zeros(model.output_bias.len()),
        }
    }

    /// Same order as [`RdnnModel::tensors`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for layers in &self.transform_weights {
            v.extend(layers.iter().map(|w| w.as_slice()));
        }
        v.extend(self.fusion_weights.iter().map(|w| w.as_slice()));
        v.push(self.fusion_bias.as_slice());
        v.push(self.output_weights.as_slice());
        v.push(self.output_bias.as_slice());
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .into_iter()
            .flatten()
            .fold(0.0, |a, &b| a.max(b.abs()))
    }
}

fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()))
}

fn sigmoid_prime_from_output(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.map(|v| v * (1.0 - v))
}

/// Gradient of the mean empirical loss over the batch. Returns the mean loss too.
pub(crate) fn loss_gradient(
    model: &RdnnModel,
    inputs: &[DMatrix<f64>],
    labels: &DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<(GradientSet, f64)> {
    let acts = model.forward_batch(inputs)?;
    let batch = acts.batch_size();
    if batch == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if labels.shape() != acts.output.shape() {
        return Err(Error::Shape(format!(
            "labels are {:?} but outputs are {:?}",
            labels.shape(),
            acts.output.shape()
        )));
    }
    let scale = 1.0 / batch as f64;
    let (loss_sum, delta_out) = cfg.loss.batch(&acts.output_pre, labels);

    let mut g = GradientSet::zeros_like(model);
    g.output_weights = &acts.fused * delta_out.transpose() * scale;
    g.output_bias = row_sums(&delta_out) * scale;

    let delta_fused =
        (&model.output_weights * &delta_out).component_mul(&sigmoid_prime_from_output(&acts.fused));
    g.fusion_bias = row_sums(&delta_fused) * scale;

    for (m, x) in inputs.iter().enumerate() {
        let a_e = acts.transform_output(m);
        g.fusion_weights[m] = &delta_fused * a_e.transpose() * scale;
        let mut delta = model.fusion_weights[m]
            .tr_mul(&delta_fused)
            .component_mul(&sigmoid_prime_from_output(a_e));
        for l in (0..model.config.transform_depth).rev() {
            let input = if l == 0 {
                x
            } else {
                &acts.transform_out[m][l - 1]
            };
            let d_in = input.nrows();
            let grad = &mut g.transform_weights[m][l];
            grad.columns_mut(0, d_in)
                .copy_from(&(&delta * input.transpose() * scale));
            grad.set_column(d_in, &(row_sums(&delta) * scale));
            if l > 0 {
                delta = model.transform_weights[m][l]
                    .columns(0, d_in)
                    .tr_mul(&delta)
                    .component_mul(&sigmoid_prime_from_output(input));
            }
        }
    }
    Ok((g, loss_sum * scale))
}

/// Adds the gradients of `(λ₁/2)Σ‖W‖²`, `(λ₂/2)tr(W_E Ψ⁻¹ W_Eᵀ)` and
/// `(λ₃/2)tr(W_out Ω⁻¹ W_outᵀ)`. Biases outside the weight matrices are not decayed.
pub(crate) fn add_regularization_gradient(
    g: &mut GradientSet,
    model: &RdnnModel,
    inverses: &RelationInverses,
    cfg: &TrainConfig,
) -> Result<()> {
    let l1 = cfg.lambda1;
    if l1 != 0.0 {
        for (gl, wl) in g.transform_weights.iter_mut().zip(&model.transform_weights) {
            for (gw, w) in gl.iter_mut().zip(wl) {
                *gw += w * l1;
            }
        }
        for (gw, w) in g.fusion_weights.iter_mut().zip(&model.fusion_weights) {
            *gw += w * l1;
        }
        g.output_weights += &model.output_weights * l1;
    }
    if cfg.lambda2 != 0.0 {
        let stacked = stack_fusion_weights(model);
        let grad =
            trace_penalty_gradient_with_inverse(stacked.matrix(), &inverses.psi, cfg.lambda2)?;
        let blocks = StackedFusionWeights::from_matrix(
            grad,
            model.config.fusion_dim,
            model.config.transform_dim,
        )?
        .unstack();
        for (gw, extra) in g.fusion_weights.iter_mut().zip(blocks) {
            *gw += extra;
        }
    }
    if cfg.lambda3 != 0.0 {
        g.output_weights += trace_penalty_gradient_with_inverse(
            &model.output_weights,
            &inverses.omega,
            cfg.lambda3,
        )?;
    }
    Ok(())
}

/// Gradient of the per-batch objective
/// `mean loss + (λ₁/2)Σ‖W‖² + (λ₂/2)tr(W_E Ψ⁻¹ W_Eᵀ) + (λ₃/2)tr(W_out Ω⁻¹ W_outᵀ)`
/// over the samples `indices` of `data`.
pub fn backprop(
    model: &RdnnModel,
    data: &Dataset,
    indices: &[usize],
    inverses: &RelationInverses,
    cfg: &TrainConfig,
) -> Result<GradientSet> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let (mut g, _) = loss_gradient(
        model,
        &data.batch_inputs(indices),
        &data.label_batch(indices),
        cfg,
    )?;
    add_regularization_gradient(&mut g, model, inverses, cfg)?;
    Ok(g)
}

/// Objective value broken into its parts; the penalty fields already include their `λ/2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ObjectiveTerms {
    pub loss: f64,
    pub weight_decay: f64,
    pub feature_penalty: f64,
    pub class_penalty: f64,
    pub objective: f64,
}

const EVAL_CHUNK: usize = 512;

/// Mean loss over `data` plus the three regularization terms.
pub fn objective(
    model: &RdnnModel,
    data: &Dataset,
    inverses: &RelationInverses,
    cfg: &TrainConfig,
) -> Result<ObjectiveTerms> {
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "objective over an empty dataset".into(),
        ));
    }
    let all = data.all_indices();
    let mut loss_sum = 0.0;
    for chunk in all.chunks(EVAL_CHUNK) {
        let acts = model.forward_batch(&data.batch_inputs(chunk))?;
        loss_sum += cfg.loss.batch(&acts.output_pre, &data.label_batch(chunk)).0;
    }
    let loss = loss_sum / data.len() as f64;

    let sq: f64 = model
        .transform_weights
        .iter()
        .flatten()
        .map(|w| w.norm_squared())
        .sum::<f64>()
        + model
            .fusion_weights
            .iter()
            .map(|w| w.norm_squared())
            .sum::<f64>()
        + model.output_weights.norm_squared();
    let weight_decay = 0.5 * cfg.lambda1 * sq;
    let feature_penalty = if cfg.lambda2 != 0.0 {
        0.5 * cfg.lambda2
            * trace_penalty_with_inverse(stack_fusion_weights(model).matrix(), &inverses.psi)?
    } else {
        0.0
    };
    let class_penalty = if cfg.lambda3 != 0.0 {
        0.5 * cfg.lambda3 * trace_penalty_with_inverse(&model.output_weights, &inverses.omega)?
    } else {
        0.0
    };
    Ok(ObjectiveTerms {
        loss,
        weight_decay,
        feature_penalty,
        class_penalty,
        objective: loss + weight_decay + feature_penalty + class_penalty,
    })
}
