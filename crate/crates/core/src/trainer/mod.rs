//! Alternating optimization of network weights and relation matrices.
//!
//! Each epoch sweeps shuffled mini-batches applying `W ← W − η·G`, with `Ψ`
//! and `Ω` frozen, and then refreshes `Ψ` and `Ω` in closed form from the
//! updated weights.

mod backprop;
mod baseline;
pub mod gradcheck;
mod loss;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use backprop::{backprop, objective, GradientSet, ObjectiveTerms};
pub use baseline::{
    average_scores, build_baseline, fused_plan, predict_dataset, train_plan, Baseline, InputView,
    Method, PlanKind, PlannedNetwork, TrainedMember, TrainedPredictor, TrainingPlan,
};
pub use loss::{loss_and_output_delta, Loss};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{regularized_inverse, SymMatrix};
use crate::model::RdnnModel;
use crate::relation::{
    stack_fusion_weights, update_class_relation, update_feature_relation, ClassRelation,
    FeatureRelation, DEFAULT_INVERSE_EPS,
};

/// Objective values above this are treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Offset added to the run seed for the mini-batch shuffling stream.
pub const SHUFFLE_SEED_OFFSET: u64 = 1;

/// Which regularizers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    /// Feature and class regularization.
    #[default]
    Rdnn,
    /// Feature regularization only (`λ₃ = 0`).
    RdnnF,
    /// Class regularization only (`λ₂ = 0`).
    RdnnC,
    /// Plain network (`λ₂ = λ₃ = 0`).
    Dnn,
}

impl TrainMode {
    pub fn uses_feature_relation(self) -> bool {
        matches!(self, TrainMode::Rdnn | TrainMode::RdnnF)
    }

    pub fn uses_class_relation(self) -> bool {
        matches!(self, TrainMode::Rdnn | TrainMode::RdnnC)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// `ε` in `(R + εI)⁻¹`.
    pub eps: f64,
    pub seed: u64,
    pub loss: Loss,
    pub mode: TrainMode,
    /// Refresh `Ψ`/`Ω` every epoch even when their weight is zero.
    pub track_relations: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.7,
            lambda1: 3e-5,
            lambda2: 3e-5,
            lambda3: 3e-5,
            batch_size: 70,
            epochs: 20,
            eps: DEFAULT_INVERSE_EPS,
            seed: 0,
            loss: Loss::BinaryCrossEntropy,
            mode: TrainMode::Rdnn,
            track_relations: false,
        }
    }
}

impl TrainConfig {
    /// Defaults with `mode` applied.
    pub fn new(mode: TrainMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
        .with_mode(mode)
    }

    /// Sets the mode and zeroes the λ's it disables.
    pub fn with_mode(mut self, mode: TrainMode) -> Self {
        self.mode = mode;
        if !mode.uses_feature_relation() {
            self.lambda2 = 0.0;
        }
        if !mode.uses_class_relation() {
            self.lambda3 = 0.0;
        }
        self
    }

    /// Checks ranges and re-applies the mode's λ-zeroing.
    pub fn validated(self) -> Result<Self> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if ![self.lambda1, self.lambda2, self.lambda3]
            .into_iter()
            .all(finite_nonneg)
        {
            return Err(Error::InvalidArgument(
                "lambdas must be finite and nonnegative".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        let mode = self.mode;
        Ok(self.with_mode(mode))
    }
}

/// Regularized inverses of the current relations, refreshed whenever they change.
#[derive(Debug, Clone)]
pub struct RelationInverses {
    pub psi: SymMatrix,
    pub omega: SymMatrix,
}

impl RelationInverses {
    pub fn new(psi: &FeatureRelation, omega: &ClassRelation, eps: f64) -> Result<Self> {
        Ok(Self {
            psi: regularized_inverse(psi.matrix(), eps)?,
            omega: regularized_inverse(omega.matrix(), eps)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub terms: ObjectiveTerms,
}

/// Training trace. Everything except `epoch_seconds` is a deterministic function
/// of the inputs; [`TrainReport::to_json`] writes only the deterministic part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub seed: u64,
    /// Objective at the initial weights with `Ψ = I/M`, `Ω = I/C`.
    pub initial: EpochRecord,
    pub epochs: Vec<EpochRecord>,
    pub final_psi: Vec<Vec<f64>>,
    pub final_omega: Vec<Vec<f64>>,
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Wall-clock seconds per epoch as a JSON array.
    pub fn timing_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "epoch_seconds": self.epoch_seconds,
        }))? + "\n")
    }

    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial.terms.objective)
            .chain(self.epochs.iter().map(|e| e.terms.objective))
            .collect()
    }
}

fn rows_of(m: &SymMatrix) -> Vec<Vec<f64>> {
    m.as_matrix()
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RdnnModel,
    pub psi: FeatureRelation,
    pub omega: ClassRelation,
    pub report: TrainReport,
}

fn sgd_step(model: &mut RdnnModel, grads: &GradientSet, learning_rate: f64) {
    for (p, g) in model.tensors_mut().into_iter().zip(grads.tensors()) {
        for (w, d) in p.iter_mut().zip(g) {
            *w -= learning_rate * d;
        }
    }
}

fn check_objective(epoch: usize, terms: &ObjectiveTerms) -> Result<()> {
    let v = terms.objective;
    if !v.is_finite() || v > DIVERGENCE_THRESHOLD {
        return Err(Error::Diverged {
            epoch,
            objective: v,
        });
    }
    Ok(())
}

/// State visible to a training observer at the end of each epoch.
pub struct EpochView<'a> {
    pub epoch: usize,
    pub model: &'a RdnnModel,
    pub psi: &'a FeatureRelation,
    pub omega: &'a ClassRelation,
    pub terms: &'a ObjectiveTerms,
}

/// Runs `cfg.epochs` epochs of alternating optimization starting from `model`.
pub fn train(model: RdnnModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(model, data, cfg, |_| {})
}

/// [`train`], calling `observer` after every completed epoch.
pub fn train_observed(
    model: RdnnModel,
    data: &Dataset,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochView<'_>),
) -> Result<TrainOutcome> {
    let cfg = cfg.clone().validated()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if data.num_modalities() != model.num_modalities()
        || data.modality_dims() != model.config.input_dims
    {
        return Err(Error::Shape(format!(
            "data modality dims {:?} do not match model input dims {:?}",
            data.modality_dims(),
            model.config.input_dims
        )));
    }
    if data.num_categories() != model.num_categories() {
        return Err(Error::Shape(format!(
            "data has {} categories, model has {}",
            data.num_categories(),
            model.num_categories()
        )));
    }

    let mut model = model;
    let mut psi = FeatureRelation::initial(model.num_modalities());
    let mut omega = ClassRelation::initial(model.num_categories());
    let mut inverses = RelationInverses::new(&psi, &omega, cfg.eps)?;
    let update_psi = cfg.lambda2 != 0.0 || cfg.track_relations;
    let update_omega = cfg.lambda3 != 0.0 || cfg.track_relations;

    let initial_terms = objective(&model, data, &inverses, &cfg)?;
    check_objective(0, &initial_terms)?;
    let initial = EpochRecord {
        epoch: 0,
        terms: initial_terms,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SHUFFLE_SEED_OFFSET));
    let mut order = data.all_indices();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let grads = backprop(&model, data, batch, &inverses, &cfg)?;
            sgd_step(&mut model, &grads, cfg.learning_rate);
        }
        if model
            .tensors()
            .into_iter()
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::Diverged {
                epoch,
                objective: f64::NAN,
            });
        }

        if update_psi {
            psi = update_feature_relation(&stack_fusion_weights(&model))?;
        }
        if update_omega {
            omega = update_class_relation(&model.output_weights)?;
        }
        if update_psi || update_omega {
            inverses = RelationInverses::new(&psi, &omega, cfg.eps)?;
        }

        let terms = objective(&model, data, &inverses, &cfg)?;
        check_objective(epoch, &terms)?;
        observer(&EpochView {
            epoch,
            model: &model,
            psi: &psi,
            omega: &omega,
            terms: &terms,
        });
        epochs.push(EpochRecord { epoch, terms });
        epoch_seconds.push(start.elapsed().as_secs_f64());
    }

    let report = TrainReport {
        seed: cfg.seed,
        initial,
        epochs,
        final_psi: rows_of(psi.matrix()),
        final_omega: rows_of(omega.matrix()),
        epoch_seconds,
        config: cfg,
    };
    Ok(TrainOutcome {
        model,
        psi,
        omega,
        report,
    })
}
