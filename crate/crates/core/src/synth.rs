//! Seeded synthetic multimodal datasets with planted category groups.
//!
//! A latent vector `z ~ N(0, I_d)` drives everything. Category `c` belongs to
//! group `c mod k` and has direction `w_c = u_g + ρ·δ_c`; it is positive when
//! `z·w_c` exceeds its empirical `(1-p)`-quantile. Modality `m` observes
//! `B_m z + σ·ε` for a random projection `B_m`. With `complementary` set,
//! `B_m` only reads the `m`-th contiguous block of latent coordinates, so no
//! single modality carries all of the label information.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataio::{write_dataset, Dataset, LabeledSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_samples: usize,
    pub num_categories: usize,
    pub num_groups: usize,
    pub latent_dim: usize,
    /// One entry per modality.
    pub modality_dims: Vec<usize>,
    pub noise_sigma: f64,
    pub group_spread: f64,
    pub positive_rate: f64,
    #[serde(default)]
    pub complementary: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_samples: 2000,
            num_categories: 12,
            num_groups: 3,
            latent_dim: 8,
            modality_dims: vec![64, 64],
            noise_sigma: 1.0,
            group_spread: 0.3,
            positive_rate: 0.2,
            complementary: true,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn num_modalities(&self) -> usize {
        self.modality_dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_owned()));
        if self.num_samples < 2 {
            return bad("num_samples must be at least 2");
        }
        if self.num_categories == 0 || self.num_groups == 0 || self.num_groups > self.num_categories
        {
            return bad("need 1 <= num_groups <= num_categories");
        }
        if self.latent_dim == 0 || self.modality_dims.is_empty() || self.modality_dims.contains(&0)
        {
            return bad("latent and modality dimensions must be positive");
        }
        if self.complementary && self.latent_dim < self.num_modalities() {
            return bad("complementary projections need latent_dim >= number of modalities");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite())
            || !(self.group_spread >= 0.0 && self.group_spread.is_finite())
        {
            return bad("noise_sigma and group_spread must be finite and nonnegative");
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return bad("positive_rate must lie in (0,1)");
        }
        Ok(())
    }

    /// Latent coordinates read by modality `m`.
    pub fn latent_block(&self, m: usize) -> std::ops::Range<usize> {
        if !self.complementary {
            return 0..self.latent_dim;
        }
        let mm = self.num_modalities();
        (m * self.latent_dim / mm)..((m + 1) * self.latent_dim / mm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub dataset: Dataset,
    /// Planted group of each category.
    pub groups: Vec<usize>,
    /// Category directions `w_c`, one column per category.
    pub directions: DMatrix<f64>,
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Threshold leaving `round(p·N)` values (at least one, at most N−1) strictly above it.
fn upper_quantile(values: &[f64], p: f64) -> f64 {
    let n = values.len();
    let positives = ((p * n as f64).round() as usize).clamp(1, n - 1);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[n - positives - 1]
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.latent_dim;
    let c = spec.num_categories;
    let n = spec.num_samples;

    let centroids = normal_matrix(d, spec.num_groups, &mut rng);
    let offsets = normal_matrix(d, c, &mut rng);
    let groups: Vec<usize> = (0..c).map(|cat| cat % spec.num_groups).collect();
    let mut directions = DMatrix::zeros(d, c);
    for (cat, &g) in groups.iter().enumerate() {
        let w = centroids.column(g) + offsets.column(cat) * spec.group_spread;
        directions.set_column(cat, &w);
    }

    let projections: Vec<DMatrix<f64>> = spec
        .modality_dims
        .iter()
        .enumerate()
        .map(|(m, &dim)| {
            let block = spec.latent_block(m);
            let scale = 1.0 / (block.len() as f64).sqrt();
            let dense = normal_matrix(dim, block.len(), &mut rng) * scale;
            let mut b = DMatrix::zeros(dim, d);
            b.columns_mut(block.start, block.len()).copy_from(&dense);
            b
        })
        .collect();

    let latents = normal_matrix(d, n, &mut rng);
    let scores = latents.transpose() * &directions; // n × c
    let thresholds: Vec<f64> = (0..c)
        .map(|cat| upper_quantile(scores.column(cat).as_slice(), spec.positive_rate))
        .collect();

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let z = latents.column(i);
        let features = projections
            .iter()
            .map(|b| {
                let noise: DVector<f64> =
                    DVector::from_fn(b.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = b * z + noise * spec.noise_sigma;
                x.as_slice().to_vec()
            })
            .collect();
        let labels = (0..c)
            .map(|cat| scores[(i, cat)] > thresholds[cat])
            .collect();
        samples.push(LabeledSample {
            sample_id: format!("s{i:06}"),
            features,
            labels,
        });
    }

    let dataset = Dataset::new(
        samples,
        (0..c).map(|k| format!("cat_{k}")).collect(),
        (0..spec.num_modalities())
            .map(|m| format!("mod_{m}"))
            .collect(),
    )?;
    Ok(SynthOutput {
        dataset,
        groups,
        directions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub num_groups: usize,
    /// `(category name, group)` in category order.
    pub groups: Vec<(String, usize)>,
    pub spec: SynthSpec,
}

/// Writes the dataset in the standard on-disk layout plus `ground_truth.json`.
/// Returns the manifest path.
pub fn write_synth(dir: &Path, spec: &SynthSpec, out: &SynthOutput) -> Result<PathBuf> {
    let manifest = write_dataset(dir, &out.dataset, &[])?;
    let truth = GroundTruth {
        num_groups: spec.num_groups,
        groups: out
            .dataset
            .category_names()
            .iter()
            .cloned()
            .zip(out.groups.iter().copied())
            .collect(),
        spec: spec.clone(),
    };
    fs::write(
        dir.join("ground_truth.json"),
        serde_json::to_string_pretty(&truth)? + "\n",
    )?;
    Ok(manifest)
}
