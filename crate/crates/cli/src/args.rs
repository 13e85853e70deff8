use std::path::PathBuf;

use anyhow::Result;
use clap::{ArgGroup, Args, Parser, Subcommand};

use rdnn_core::synth::SynthSpec;
use rdnn_core::trainer::gradcheck::{DEFAULT_STEP, DEFAULT_TOLERANCE};
use rdnn_core::trainer::Loss;
use rdnn_core::{Error, Method};

use crate::run::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "rdnn",
    version,
    about = "Multimodal multi-label networks with learned feature and class relations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network (or a baseline ensemble) and write the model, relations and report.
    Train(TrainArgs),
    /// Score a dataset with a trained run or model and report mAP.
    Eval(EvalArgs),
    /// Group categories by spectral clustering of a class relation.
    Cluster(ClusterArgs),
    /// Generate a synthetic multimodal dataset with planted category groups.
    Synth(SynthArgs),
    /// Compare analytic and finite-difference gradients on a small network.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON config file (or a previous run.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// rdnn, rdnn-f, rdnn-c, dnn, nn-ef or nn-lf.
    #[arg(long, value_parser = parse_method)]
    pub mode: Option<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Regularizer added to the relation before inversion.
    #[arg(long)]
    pub eps: Option<f64>,
    /// binary-cross-entropy or squared-error.
    #[arg(long, value_parser = parse_loss)]
    pub loss: Option<Loss>,
    #[arg(long)]
    pub transform_dim: Option<usize>,
    #[arg(long)]
    pub fusion_dim: Option<usize>,
    #[arg(long)]
    pub transform_depth: Option<usize>,
    /// Update relations every epoch even when their penalty is off.
    #[arg(long)]
    pub track_relations: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(v) = self.mode {
            cfg.method = v;
        }
        let t = &mut cfg.train;
        macro_rules! set {
            ($($field:ident => $target:expr),*) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        set!(
            seed => t.seed,
            learning_rate => t.learning_rate,
            lambda1 => t.lambda1,
            lambda2 => t.lambda2,
            lambda3 => t.lambda3,
            batch_size => t.batch_size,
            epochs => t.epochs,
            eps => t.eps,
            loss => t.loss,
            transform_dim => cfg.network.transform_dim,
            fusion_dim => cfg.network.fusion_dim,
            transform_depth => cfg.network.transform_depth
        );
        if self.track_relations {
            cfg.train.track_relations = true;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["run", "model"])))]
pub struct EvalArgs {
    /// Training run directory or its run.json.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Single model file taking all modalities.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset manifest.
    #[arg(long)]
    pub data: PathBuf,
    /// Metric report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["omega", "model"])))]
pub struct ClusterArgs {
    /// Class relation matrix in text form.
    #[arg(long)]
    pub omega: Option<PathBuf>,
    /// Model file; the relation is computed from its output weights.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of groups.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset manifest supplying category names.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Group report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON spec; flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub categories: Option<usize>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Comma-separated feature dimensions, one per modality.
    #[arg(long, value_delimiter = ',')]
    pub modality_dims: Option<Vec<usize>>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub positive_rate: Option<f64>,
    /// Let every modality observe the whole latent space.
    #[arg(long)]
    pub shared_latent: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn apply(&self, spec: &mut SynthSpec) {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { spec.$target = v; })*
            };
        }
        set!(
            seed => seed,
            samples => num_samples,
            categories => num_categories,
            groups => num_groups,
            latent_dim => latent_dim,
            modality_dims => modality_dims,
            noise => noise_sigma,
            spread => group_spread,
            positive_rate => positive_rate
        );
        if self.shared_latent {
            spec.complementary = false;
        }
    }
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, Error> {
    s.parse()
}

fn parse_loss(s: &str) -> Result<Loss, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| format!("unknown loss {s:?}; expected binary-cross-entropy or squared-error"))
}
