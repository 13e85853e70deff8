//! Early- and late-fusion baselines built from the same network builder.
//!
//! NN-EF concatenates every modality into one input vector and trains a
//! single-branch network. NN-LF trains one single-branch network per
//! modality and averages their scores with equal weights. Both train as
//! plain networks (no relation penalties).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{train, TrainConfig, TrainMode, TrainOutcome};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, RdnnModel};

/// Seed offset between members of a multi-network plan.
pub const MEMBER_SEED_STRIDE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    NnEf,
    NnLf,
}

/// Every trainable configuration: the four regularization modes of the fused
/// network plus the two fusion baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Rdnn,
    RdnnF,
    RdnnC,
    Dnn,
    NnEf,
    NnLf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rdnn,
        Method::RdnnF,
        Method::RdnnC,
        Method::Dnn,
        Method::NnEf,
        Method::NnLf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rdnn => "rdnn",
            Method::RdnnF => "rdnn-f",
            Method::RdnnC => "rdnn-c",
            Method::Dnn => "dnn",
            Method::NnEf => "nn-ef",
            Method::NnLf => "nn-lf",
        }
    }

    pub fn train_mode(self) -> TrainMode {
        match self {
            Method::Rdnn => TrainMode::Rdnn,
            Method::RdnnF => TrainMode::RdnnF,
            Method::RdnnC => TrainMode::RdnnC,
            Method::Dnn | Method::NnEf | Method::NnLf => TrainMode::Dnn,
        }
    }

    pub fn plan(self, config: &NetworkConfig) -> Result<TrainingPlan> {
        match self {
            Method::NnEf => build_baseline(Baseline::NnEf, config),
            Method::NnLf => build_baseline(Baseline::NnLf, config),
            _ => fused_plan(config),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// Which features a member network sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "modality")]
pub enum InputView {
    All,
    Concatenated,
    Single(usize),
}

impl InputView {
    pub fn apply(self, data: &Dataset) -> Result<Dataset> {
        match self {
            InputView::All => Ok(data.clone()),
            InputView::Concatenated => Ok(data.concat_modalities()),
            InputView::Single(m) if m < data.num_modalities() => Ok(data.select_modality(m)),
            InputView::Single(m) => Err(Error::InvalidArgument(format!(
                "modality {m} out of range for {} modalities",
                data.num_modalities()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    Fused,
    EarlyFusion,
    LateFusion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedNetwork {
    pub view: InputView,
    pub config: NetworkConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPlan {
    pub kind: PlanKind,
    pub networks: Vec<PlannedNetwork>,
}

pub fn fused_plan(config: &NetworkConfig) -> Result<TrainingPlan> {
    config.validate()?;
    Ok(TrainingPlan {
        kind: PlanKind::Fused,
        networks: vec![PlannedNetwork {
            view: InputView::All,
            config: config.clone(),
        }],
    })
}

pub fn build_baseline(kind: Baseline, config: &NetworkConfig) -> Result<TrainingPlan> {
    config.validate()?;
    let single = |dim: usize| NetworkConfig {
        input_dims: vec![dim],
        ..config.clone()
    };
    Ok(match kind {
        Baseline::NnEf => TrainingPlan {
            kind: PlanKind::EarlyFusion,
            networks: vec![PlannedNetwork {
                view: InputView::Concatenated,
                config: single(config.input_dims.iter().sum()),
            }],
        },
        Baseline::NnLf => TrainingPlan {
            kind: PlanKind::LateFusion,
            networks: config
                .input_dims
                .iter()
                .enumerate()
                .map(|(m, &d)| PlannedNetwork {
                    view: InputView::Single(m),
                    config: single(d),
                })
                .collect(),
        },
    })
}

#[derive(Debug, Clone)]
pub struct TrainedMember {
    pub view: InputView,
    pub outcome: TrainOutcome,
}

/// Trained networks of a plan together with how to feed them.
#[derive(Debug, Clone)]
pub struct TrainedPredictor {
    pub kind: PlanKind,
    pub members: Vec<TrainedMember>,
}

/// Scores of one model over a whole dataset, `C × N`.
pub fn predict_dataset(model: &RdnnModel, data: &Dataset) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(model.num_categories(), data.len());
    let all = data.all_indices();
    for chunk in all.chunks(512) {
        let scores = model.predict_batch(&data.batch_inputs(chunk))?;
        for (j, &i) in chunk.iter().enumerate() {
            out.set_column(i, &scores.column(j));
        }
    }
    Ok(out)
}

/// Equal-weight average of member score tables.
pub fn average_scores(members: &[(InputView, &RdnnModel)], data: &Dataset) -> Result<DMatrix<f64>> {
    let mut total: Option<DMatrix<f64>> = None;
    for (view, model) in members {
        let scores = predict_dataset(model, &view.apply(data)?)?;
        total = Some(match total {
            None => scores,
            Some(acc) => acc + scores,
        });
    }
    let total = total.ok_or_else(|| Error::InvalidArgument("no member networks".into()))?;
    Ok(total / members.len() as f64)
}

impl TrainedPredictor {
    /// Category scores `C × N`, averaged over members.
    pub fn predict(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        let members: Vec<(InputView, &RdnnModel)> = self
            .members
            .iter()
            .map(|m| (m.view, &m.outcome.model))
            .collect();
        average_scores(&members, data)
    }
}

/// Trains every network of `plan`. Member `i` is initialized from
/// `cfg.seed + i·1000`; baseline members always train as plain networks.
pub fn train_plan(
    plan: &TrainingPlan,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainedPredictor> {
    let mut members = Vec::with_capacity(plan.networks.len());
    for (i, net) in plan.networks.iter().enumerate() {
        let mut member_cfg = cfg.clone();
        member_cfg.seed = cfg.seed.wrapping_add(i as u64 * MEMBER_SEED_STRIDE);
        if plan.kind != PlanKind::Fused {
            member_cfg = member_cfg.with_mode(TrainMode::Dnn);
        }
        let view_data = net.view.apply(data)?;
        let model = RdnnModel::init(net.config.clone(), member_cfg.seed)?;
        let outcome = train(model, &view_data, &member_cfg)?;
        members.push(TrainedMember {
            view: net.view,
            outcome,
        });
    }
    Ok(TrainedPredictor {
        kind: plan.kind,
        members,
    })
}
