//! Central finite-difference check of the analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backprop, objective, RelationInverses, TrainConfig};
use crate::dataio::{Dataset, LabeledSample};
use crate::error::Result;
use crate::model::{NetworkConfig, RdnnModel};
use crate::relation::{stack_fusion_weights, update_class_relation, update_feature_relation};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
/// Denominator floor for the relative error, so entries whose true gradient is
/// ~0 are judged on absolute error instead of amplifying rounding noise.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Largest relative error between `backprop` and central differences of the
/// batch objective, over every parameter of `model`.
pub fn max_relative_error(
    model: &RdnnModel,
    batch: &Dataset,
    inverses: &RelationInverses,
    cfg: &TrainConfig,
    step: f64,
) -> Result<f64> {
    let analytic = backprop(model, batch, &batch.all_indices(), inverses, cfg)?;
    let analytic: Vec<f64> = analytic.tensors().into_iter().flatten().copied().collect();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut k = 0;
    let counts: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    for (t, &len) in counts.iter().enumerate() {
        for i in 0..len {
            let original = probe.tensors_mut()[t][i];
            probe.tensors_mut()[t][i] = original + step;
            let plus = objective(&probe, batch, inverses, cfg)?.objective;
            probe.tensors_mut()[t][i] = original - step;
            let minus = objective(&probe, batch, inverses, cfg)?.objective;
            probe.tensors_mut()[t][i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(analytic[k], numeric));
            k += 1;
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckCase {
    pub lambda2: f64,
    pub lambda3: f64,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub seed: u64,
    pub num_parameters: usize,
    pub step: f64,
    pub tolerance: f64,
    pub cases: Vec<GradCheckCase>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error() < self.tolerance
    }
}

/// Tiny fixture network: two modalities of dims 3 and 2, `D_T = D_F = 3`, two categories.
pub fn fixture_config() -> NetworkConfig {
    NetworkConfig {
        input_dims: vec![3, 2],
        transform_dim: 3,
        fusion_dim: 3,
        num_categories: 2,
        transform_depth: 1,
    }
}

fn fixture_batch(config: &NetworkConfig, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let samples = (0..n)
        .map(|i| LabeledSample {
            sample_id: format!("g{i}"),
            features: config
                .input_dims
                .iter()
                .map(|&d| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            labels: (0..config.num_categories)
                .map(|_| rng.random_bool(0.5))
                .collect(),
        })
        .collect();
    let cats = (0..config.num_categories)
        .map(|c| format!("c{c}"))
        .collect();
    let mods = (0..config.input_dims.len())
        .map(|m| format!("m{m}"))
        .collect();
    Dataset::new(samples, cats, mods)
}

/// Checks the fixture network under all four `{λ₂, λ₃} ∈ {0, 3e-5}²` patterns,
/// with non-trivial relations taken from an independently drawn network.
pub fn run_fixture(seed: u64, step: f64, tolerance: f64) -> Result<GradCheckReport> {
    let config = fixture_config();
    let model = RdnnModel::init(config.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let batch = fixture_batch(&config, 4, &mut rng)?;

    let other = RdnnModel::init(config.clone(), seed.wrapping_add(2))?;
    let psi = update_feature_relation(&stack_fusion_weights(&other))?;
    let omega = update_class_relation(&other.output_weights)?;

    let mut cases = Vec::with_capacity(4);
    for (lambda2, lambda3) in [(0.0, 0.0), (3e-5, 0.0), (0.0, 3e-5), (3e-5, 3e-5)] {
        let cfg = TrainConfig {
            lambda2,
            lambda3,
            ..TrainConfig::default()
        };
        let inverses = RelationInverses::new(&psi, &omega, cfg.eps)?;
        let err = max_relative_error(&model, &batch, &inverses, &cfg, step)?;
        cases.push(GradCheckCase {
            lambda2,
            lambda3,
            max_relative_error: err,
        });
    }
    Ok(GradCheckReport {
        seed,
        num_parameters: config.num_parameters(),
        step,
        tolerance,
        cases,
    })
}
