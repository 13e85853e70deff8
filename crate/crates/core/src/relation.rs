//! Feature and class relation matrices.
//!
//! Both relations are symmetric PSD matrices with unit trace. Given weights
//! `W` whose columns are per-modality (or per-category) parameter vectors,
//! the minimizer of `tr(W R⁻¹ Wᵀ)` over that set is
//!
//! ```text
//! R* = (WᵀW)^{1/2} / tr((WᵀW)^{1/2})
//! ```
//!
//! and the minimum value is `tr((WᵀW)^{1/2})²`. Inverses are always taken
//! as `(R + εI)⁻¹` because `R*` is singular whenever `W` is rank-deficient.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, regularized_inverse, sym_eigen, SymMatrix, PSD_TOLERANCE};
use crate::model::RdnnModel;

/// Default `ε` for the regularized inverse of relation matrices.
pub const DEFAULT_INVERSE_EPS: f64 = 1e-6;

const TRACE_TOLERANCE: f64 = 1e-9;

fn check_relation(rel: &SymMatrix, what: &str) -> Result<()> {
    let trace = rel.trace();
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "{what} must have trace 1, got {trace}"
        )));
    }
    let min = sym_eigen(rel)?.values[0];
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance: PSD_TOLERANCE,
        });
    }
    Ok(())
}

macro_rules! relation_type {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(SymMatrix);

        impl $name {
            /// The uniform starting point `I / n`.
            pub fn initial(order: usize) -> Self {
                Self(SymMatrix::scaled_identity(order, 1.0 / order as f64))
            }

            /// Wraps a matrix after checking symmetry, PSD-ness and unit trace.
            pub fn new(rel: SymMatrix) -> Result<Self> {
                check_relation(&rel, $what)?;
                Ok(Self(rel))
            }

            pub fn matrix(&self) -> &SymMatrix {
                &self.0
            }

            pub fn order(&self) -> usize {
                self.0.order()
            }

            pub fn into_inner(self) -> SymMatrix {
                self.0
            }
        }
    };
}

relation_type!(
    /// `Ψ`: correlation between input modalities, order `M`.
    FeatureRelation,
    "feature relation"
);
relation_type!(
    /// `Ω`: relationships between output categories, order `C`.
    ClassRelation,
    "class relation"
);

/// Fusion weights stacked into a `P × M` matrix, `P = fusion_dim · transform_dim`.
///
/// Column `m` is the column-major vectorization of `W_E^m`. The fusion bias is not part of it.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedFusionWeights {
    matrix: DMatrix<f64>,
    fusion_dim: usize,
    transform_dim: usize,
}

impl StackedFusionWeights {
    pub fn from_blocks(blocks: &[DMatrix<f64>]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidArgument("no fusion weight blocks".into()))?;
        let (rows, cols) = first.shape();
        if blocks.iter().any(|b| b.shape() != (rows, cols)) {
            return Err(Error::Shape("fusion weight blocks differ in shape".into()));
        }
        let p = rows * cols;
        let mut matrix = DMatrix::zeros(p, blocks.len());
        for (m, block) in blocks.iter().enumerate() {
            // nalgebra storage is column-major, which is the vectorization order we want
            matrix.column_mut(m).copy_from_slice(block.as_slice());
        }
        Ok(Self {
            matrix,
            fusion_dim: rows,
            transform_dim: cols,
        })
    }

    /// Wraps a `P × M` gradient or weight matrix for unstacking.
    pub fn from_matrix(
        matrix: DMatrix<f64>,
        fusion_dim: usize,
        transform_dim: usize,
    ) -> Result<Self> {
        if matrix.nrows() != fusion_dim * transform_dim {
            return Err(Error::Shape(format!(
                "stacked matrix has {} rows, expected {}",
                matrix.nrows(),
                fusion_dim * transform_dim
            )));
        }
        Ok(Self {
            matrix,
            fusion_dim,
            transform_dim,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn num_modalities(&self) -> usize {
        self.matrix.ncols()
    }

    /// Splits back into per-modality `fusion_dim × transform_dim` blocks.
    pub fn unstack(&self) -> Vec<DMatrix<f64>> {
        self.matrix
            .column_iter()
            .map(|c| DMatrix::from_column_slice(self.fusion_dim, self.transform_dim, c.as_slice()))
            .collect()
    }
}

pub fn stack_fusion_weights(model: &RdnnModel) -> StackedFusionWeights {
    StackedFusionWeights::from_blocks(&model.fusion_weights)
        .expect("model has valid fusion weights")
}

/// Closed-form minimizer of `tr(W R⁻¹ Wᵀ)` subject to `R ⪰ 0`, `tr(R) = 1`.
fn optimal_relation(w: &DMatrix<f64>) -> Result<SymMatrix> {
    if w.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateWeights("all weights are zero".into()));
    }
    let root = psd_sqrt(&SymMatrix::gram(w)?)?;
    let trace = root.trace();
    if !(trace > 0.0 && trace.is_finite()) {
        return Err(Error::DegenerateWeights(format!(
            "trace of (WᵀW)^1/2 is {trace}"
        )));
    }
    SymMatrix::new(root.into_inner() / trace)
}

pub fn update_feature_relation(w_e: &StackedFusionWeights) -> Result<FeatureRelation> {
    Ok(FeatureRelation(optimal_relation(w_e.matrix())?))
}

/// `w_out` is `fusion_dim × C` with one column per category.
pub fn update_class_relation(w_out: &DMatrix<f64>) -> Result<ClassRelation> {
    Ok(ClassRelation(optimal_relation(w_out)?))
}

fn check_penalty_shapes(w: &DMatrix<f64>, rel: &SymMatrix) -> Result<()> {
    if w.ncols() != rel.order() {
        return Err(Error::Shape(format!(
            "weights have {} columns but the relation has order {}",
            w.ncols(),
            rel.order()
        )));
    }
    Ok(())
}

/// `tr(W · inv · Wᵀ)` for a precomputed symmetric `inv`.
pub fn trace_penalty_with_inverse(w: &DMatrix<f64>, inv: &SymMatrix) -> Result<f64> {
    check_penalty_shapes(w, inv)?;
    let wi = w * inv.as_matrix();
    Ok(wi.dot(w).max(0.0))
}

/// `tr(W · (R + εI)⁻¹ · Wᵀ)`.
pub fn trace_penalty(w: &DMatrix<f64>, rel: &SymMatrix, eps: f64) -> Result<f64> {
    check_penalty_shapes(w, rel)?;
    trace_penalty_with_inverse(w, &regularized_inverse(rel, eps)?)
}

/// Gradient of `(λ/2) · tr(W R⁻¹ Wᵀ)` with `R` held fixed: `λ · W · inv`.
pub fn trace_penalty_gradient_with_inverse(
    w: &DMatrix<f64>,
    inv: &SymMatrix,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_penalty_shapes(w, inv)?;
    Ok(w * inv.as_matrix() * lambda)
}

pub fn trace_penalty_gradient(
    w: &DMatrix<f64>,
    rel: &SymMatrix,
    eps: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_penalty_shapes(w, rel)?;
    trace_penalty_gradient_with_inverse(w, &regularized_inverse(rel, eps)?, lambda)
}

/// Fusion-layer penalty gradient, unstacked into per-modality blocks.
pub fn fusion_penalty_gradient(
    model: &RdnnModel,
    psi: &FeatureRelation,
    eps: f64,
    lambda: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let stacked = stack_fusion_weights(model);
    let grad = trace_penalty_gradient(stacked.matrix(), psi.matrix(), eps, lambda)?;
    let cfg = &model.config;
    Ok(StackedFusionWeights::from_matrix(grad, cfg.fusion_dim, cfg.transform_dim)?.unstack())
}

/// Plain-text dump: one row per line, entries space-separated with 17 significant digits.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", row.join(" ")).expect("writing to a String cannot fail");
    }
    out
}

/// Inverse of [`format_matrix`]; all rows must have equal length.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| {
                    Error::Data(format!("line {}: cannot parse {tok:?}: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Data("matrix dump is empty or ragged".into()));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(flat.len() / ncols, ncols, &flat))
}
