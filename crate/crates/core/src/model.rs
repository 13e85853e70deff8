//! Network topology and forward pass.
//!
//! Each modality runs through its own stack of sigmoid transformation
//! layers (bias folded in as a trailing weight column). The last
//! transformation outputs all share dimension `transform_dim` and are
//! combined by the fusion layer
//!
//! ```text
//! a_F = σ( Σ_m W_E^m · a_E^m + b_E )
//! ```
//!
//! followed by a sigmoid output layer `ŷ = σ(W_outᵀ · a_F + b_out)` with one
//! unit per category. All batch-oriented functions take samples as
//! columns.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"RDNM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_TRANSFORM_DIM: usize = 256;
pub const DEFAULT_FUSION_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dims: Vec<usize>,
    #[serde(default = "default_transform_dim")]
    pub transform_dim: usize,
    #[serde(default = "default_fusion_dim")]
    pub fusion_dim: usize,
    pub num_categories: usize,
    #[serde(default = "default_depth")]
    pub transform_depth: usize,
}

fn default_transform_dim() -> usize {
    DEFAULT_TRANSFORM_DIM
}
fn default_fusion_dim() -> usize {
    DEFAULT_FUSION_DIM
}
fn default_depth() -> usize {
    1
}

impl NetworkConfig {
    /// Config with default hidden sizes and a single transformation layer.
    pub fn new(input_dims: Vec<usize>, num_categories: usize) -> Self {
        Self {
            input_dims,
            transform_dim: DEFAULT_TRANSFORM_DIM,
            fusion_dim: DEFAULT_FUSION_DIM,
            num_categories,
            transform_depth: 1,
        }
    }

    pub fn num_modalities(&self) -> usize {
        self.input_dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one modality is required".into(),
            ));
        }
        if self.input_dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "input dimensions must be positive".into(),
            ));
        }
        if self.transform_dim == 0 || self.fusion_dim == 0 {
            return Err(Error::InvalidArgument(
                "hidden dimensions must be positive".into(),
            ));
        }
        if self.num_categories == 0 {
            return Err(Error::InvalidArgument(
                "at least one category is required".into(),
            ));
        }
        if self.transform_depth == 0 {
            return Err(Error::InvalidArgument(
                "transform_depth must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// `(rows, cols)` of transformation layer `layer` of modality `m`, bias column included.
    pub fn transform_shape(&self, m: usize, layer: usize) -> (usize, usize) {
        let d_in = if layer == 0 {
            self.input_dims[m]
        } else {
            self.transform_dim
        };
        (self.transform_dim, d_in + 1)
    }

    /// Total number of trainable scalars.
    pub fn num_parameters(&self) -> usize {
        let mut n = 0;
        for m in 0..self.num_modalities() {
            for l in 0..self.transform_depth {
                let (r, c) = self.transform_shape(m, l);
                n += r * c;
            }
        }
        n += self.num_modalities() * self.fusion_dim * self.transform_dim + self.fusion_dim;
        n += self.fusion_dim * self.num_categories + self.num_categories;
        n
    }
}

/// All trainable weights of the multi-branch network.
#[derive(Debug, Clone, PartialEq)]
pub struct RdnnModel {
    pub config: NetworkConfig,
    /// `[modality][layer]`, each `transform_dim × (d_in + 1)`.
    pub transform_weights: Vec<Vec<DMatrix<f64>>>,
    /// `W_E^m`, each `fusion_dim × transform_dim`.
    pub fusion_weights: Vec<DMatrix<f64>>,
    pub fusion_bias: DVector<f64>,
    /// `fusion_dim × num_categories`; column `c` is category `c`'s weight vector.
    pub output_weights: DMatrix<f64>,
    pub output_bias: DVector<f64>,
}

/// Per-layer values of a forward pass over a batch (one column per sample).
#[derive(Debug, Clone)]
pub struct Activations {
    /// `[modality][layer]` pre-activations.
    pub transform_pre: Vec<Vec<DMatrix<f64>>>,
    /// `[modality][layer]` sigmoid outputs; the last layer is `a_E^m`.
    pub transform_out: Vec<Vec<DMatrix<f64>>>,
    pub fusion_pre: DMatrix<f64>,
    pub fused: DMatrix<f64>,
    pub output_pre: DMatrix<f64>,
    pub output: DMatrix<f64>,
}

impl Activations {
    pub fn transform_output(&self, m: usize) -> &DMatrix<f64> {
        self.transform_out[m].last().expect("depth >= 1")
    }

    pub fn batch_size(&self) -> usize {
        self.output.ncols()
    }
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sigmoid_scalar(v)).collect()
}

/// `W[:, ..d] · X + W[:, d]` broadcast over columns.
pub(crate) fn affine_with_bias_column(w: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let d_in = w.ncols() - 1;
    let mut z = w.columns(0, d_in) * x;
    let bias = w.column(d_in);
    for mut col in z.column_iter_mut() {
        col += &bias;
    }
    z
}

fn add_bias(mut z: DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    for mut col in z.column_iter_mut() {
        col += b;
    }
    z
}

fn uniform_matrix(rows: usize, cols: usize, limit: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.random_range(-limit..=limit);
        }
    }
    m
}

/// Glorot-uniform limit `√(6 / (fan_in + fan_out))`.
pub fn init_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl RdnnModel {
    /// All-zero model with the right shapes.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let m = config.num_modalities();
        let transform_weights = (0..m)
            .map(|mi| {
                (0..config.transform_depth)
                    .map(|l| {
                        let (r, c) = config.transform_shape(mi, l);
                        DMatrix::zeros(r, c)
                    })
                    .collect()
            })
            .collect();
        let fusion_weights = (0..m)
            .map(|_| DMatrix::zeros(config.fusion_dim, config.transform_dim))
            .collect();
        Ok(Self {
            fusion_bias: DVector::zeros(config.fusion_dim),
            output_weights: DMatrix::zeros(config.fusion_dim, config.num_categories),
            output_bias: DVector::zeros(config.num_categories),
            transform_weights,
            fusion_weights,
            config,
        })
    }

    /// Random initialization: every weight matrix uniform in `[-r, r]` with
    /// `r = √(6/(fan_in+fan_out))`, all biases zero.
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = model.config.clone();
        for (mi, layers) in model.transform_weights.iter_mut().enumerate() {
            for (l, w) in layers.iter_mut().enumerate() {
                let (rows, cols) = cfg.transform_shape(mi, l);
                let d_in = cols - 1;
                let lin = uniform_matrix(rows, d_in, init_limit(d_in, rows), &mut rng);
                w.columns_mut(0, d_in).copy_from(&lin);
            }
        }
        let fusion_limit = init_limit(cfg.transform_dim, cfg.fusion_dim);
        for w in model.fusion_weights.iter_mut() {
            *w = uniform_matrix(cfg.fusion_dim, cfg.transform_dim, fusion_limit, &mut rng);
        }
        model.output_weights = uniform_matrix(
            cfg.fusion_dim,
            cfg.num_categories,
            init_limit(cfg.fusion_dim, cfg.num_categories),
            &mut rng,
        );
        Ok(model)
    }

    pub fn num_modalities(&self) -> usize {
        self.config.num_modalities()
    }

    pub fn num_categories(&self) -> usize {
        self.config.num_categories
    }

    fn check_inputs(&self, inputs: &[DMatrix<f64>]) -> Result<usize> {
        if inputs.len() != self.num_modalities() {
            return Err(Error::Shape(format!(
                "expected {} modalities, got {}",
                self.num_modalities(),
                inputs.len()
            )));
        }
        let batch = inputs[0].ncols();
        for (m, x) in inputs.iter().enumerate() {
            if x.nrows() != self.config.input_dims[m] {
                return Err(Error::Shape(format!(
                    "modality {m}: expected dimension {}, got {}",
                    self.config.input_dims[m],
                    x.nrows()
                )));
            }
            if x.ncols() != batch {
                return Err(Error::Shape("modalities disagree on batch size".into()));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "modality {m} has non-finite features"
                )));
            }
        }
        Ok(batch)
    }

    /// Forward pass over a batch; `inputs[m]` is `input_dims[m] × batch`.
    pub fn forward_batch(&self, inputs: &[DMatrix<f64>]) -> Result<Activations> {
        self.check_inputs(inputs)?;
        let mut transform_pre = Vec::with_capacity(inputs.len());
        let mut transform_out = Vec::with_capacity(inputs.len());
        let mut fusion_pre: Option<DMatrix<f64>> = None;
        for (m, x) in inputs.iter().enumerate() {
            let mut pres = Vec::with_capacity(self.config.transform_depth);
            let mut outs: Vec<DMatrix<f64>> = Vec::with_capacity(self.config.transform_depth);
            for w in &self.transform_weights[m] {
                let input = outs.last().unwrap_or(x);
                let z = affine_with_bias_column(w, input);
                let a = z.map(sigmoid_scalar);
                pres.push(z);
                outs.push(a);
            }
            let contrib = &self.fusion_weights[m] * outs.last().expect("depth >= 1");
            fusion_pre = Some(match fusion_pre {
                None => contrib,
                Some(acc) => acc + contrib,
            });
            transform_pre.push(pres);
            transform_out.push(outs);
        }
        let fusion_pre = add_bias(fusion_pre.expect("M >= 1"), &self.fusion_bias);
        let fused = fusion_pre.map(sigmoid_scalar);
        let output_pre = add_bias(self.output_weights.tr_mul(&fused), &self.output_bias);
        let output = output_pre.map(sigmoid_scalar);
        Ok(Activations {
            transform_pre,
            transform_out,
            fusion_pre,
            fused,
            output_pre,
            output,
        })
    }

    /// Forward pass for one sample given as one slice per modality.
    pub fn forward<S: AsRef<[f64]>>(&self, features: &[S]) -> Result<Activations> {
        let inputs: Vec<DMatrix<f64>> = features
            .iter()
            .map(|f| DMatrix::from_column_slice(f.as_ref().len(), 1, f.as_ref()))
            .collect();
        self.forward_batch(&inputs)
    }

    /// Category scores `ŷ` for a batch, `num_categories × batch`.
    pub fn predict_batch(&self, inputs: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        Ok(self.forward_batch(inputs)?.output)
    }

    /// Flat views of every parameter tensor in a fixed order
    /// (transform weights, fusion weights, fusion bias, output weights, output bias).
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

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for layers in &mut self.transform_weights {
            v.extend(layers.iter_mut().map(|w| w.as_mut_slice()));
        }
        v.extend(self.fusion_weights.iter_mut().map(|w| w.as_mut_slice()));
        v.push(self.fusion_bias.as_mut_slice());
        v.push(self.output_weights.as_mut_slice());
        v.push(self.output_bias.as_mut_slice());
        v
    }

    /// Weight matrices (not biases) in serialization order, paired with their shapes.
    fn matrices_for_io(&self) -> Vec<(usize, usize, Vec<f64>)> {
        let row_major = |m: &DMatrix<f64>| -> (usize, usize, Vec<f64>) {
            let mut data = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                data.extend(m.row(i).iter());
            }
            (m.nrows(), m.ncols(), data)
        };
        let mut out = Vec::new();
        for layers in &self.transform_weights {
            out.extend(layers.iter().map(row_major));
        }
        out.extend(self.fusion_weights.iter().map(row_major));
        out.push((
            self.fusion_bias.len(),
            1,
            self.fusion_bias.as_slice().to_vec(),
        ));
        out.push(row_major(&self.output_weights));
        out.push((
            self.output_bias.len(),
            1,
            self.output_bias.as_slice().to_vec(),
        ));
        out
    }

    fn expected_shapes(config: &NetworkConfig) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        for m in 0..config.num_modalities() {
            for l in 0..config.transform_depth {
                shapes.push(config.transform_shape(m, l));
            }
        }
        for _ in 0..config.num_modalities() {
            shapes.push((config.fusion_dim, config.transform_dim));
        }
        shapes.push((config.fusion_dim, 1));
        shapes.push((config.fusion_dim, config.num_categories));
        shapes.push((config.num_categories, 1));
        shapes
    }

    /// Serializes into the `RDNM` binary format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let cfg = &self.config;
        w.write_all(MODEL_MAGIC)?;
        write_u32(&mut w, MODEL_FORMAT_VERSION as usize)?;
        write_u32(&mut w, cfg.num_modalities())?;
        for &d in &cfg.input_dims {
            write_u32(&mut w, d)?;
        }
        write_u32(&mut w, cfg.transform_dim)?;
        write_u32(&mut w, cfg.fusion_dim)?;
        write_u32(&mut w, cfg.num_categories)?;
        write_u32(&mut w, cfg.transform_depth)?;
        for (rows, cols, data) in self.matrices_for_io() {
            write_u32(&mut w, rows)?;
            write_u32(&mut w, cols)?;
            for v in data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Parses the `RDNM` binary format, validating every shape against the header.
    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = OffsetReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic, "magic")?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "bad magic, expected RDNM".into(),
            });
        }
        let version = r.read_u32("version")?;
        if version != MODEL_FORMAT_VERSION {
            return Err(r.error(format!("unsupported model format version {version}")));
        }
        let m = r.read_u32("modality count")? as usize;
        if m == 0 || m > 1 << 16 {
            return Err(r.error(format!("implausible modality count {m}")));
        }
        let mut input_dims = Vec::with_capacity(m);
        for _ in 0..m {
            input_dims.push(r.read_u32("input dim")? as usize);
        }
        let config = NetworkConfig {
            input_dims,
            transform_dim: r.read_u32("transform dim")? as usize,
            fusion_dim: r.read_u32("fusion dim")? as usize,
            num_categories: r.read_u32("category count")? as usize,
            transform_depth: r.read_u32("transform depth")? as usize,
        };
        config.validate().map_err(|e| r.error(e.to_string()))?;
        let mut model = Self::zeros(config.clone())?;
        let mut mats = Vec::new();
        for (rows, cols) in Self::expected_shapes(&config) {
            let got_rows = r.read_u32("matrix rows")? as usize;
            let got_cols = r.read_u32("matrix cols")? as usize;
            if (got_rows, got_cols) != (rows, cols) {
                return Err(r.error(format!(
                    "matrix shape {got_rows}x{got_cols} does not match expected {rows}x{cols}"
                )));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let v = r.read_f64("matrix entry")?;
                if !v.is_finite() {
                    return Err(Error::Format {
                        offset: r.offset - 8,
                        message: "non-finite weight".into(),
                    });
                }
                data.push(v);
            }
            mats.push(DMatrix::from_row_slice(rows, cols, &data));
        }
        let mut trailing = [0u8; 1];
        if r.inner.read(&mut trailing)? != 0 {
            return Err(r.error("trailing bytes after last matrix".into()));
        }
        let mut it = mats.into_iter();
        for layers in model.transform_weights.iter_mut() {
            for w in layers.iter_mut() {
                *w = it.next().expect("shape list");
            }
        }
        for w in model.fusion_weights.iter_mut() {
            *w = it.next().expect("shape list");
        }
        model.fusion_bias = DVector::from_column_slice(it.next().expect("shape list").as_slice());
        model.output_weights = it.next().expect("shape list");
        model.output_bias = DVector::from_column_slice(it.next().expect("shape list").as_slice());
        Ok(model)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn write_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| Error::InvalidArgument(format!("{v} does not fit in a u32 field")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

/// Reader wrapper that tracks the byte offset for format diagnostics.
pub(crate) struct OffsetReader<R> {
    pub(crate) inner: R,
    pub(crate) offset: u64,
}

impl<R: Read> OffsetReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    pub(crate) fn error(&self, message: String) -> Error {
        Error::Format {
            offset: self.offset,
            message,
        }
    }

    pub(crate) fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            let n = self.inner.read(&mut buf[filled..])?;
            if n == 0 {
                return Err(Error::Format {
                    offset: self.offset + filled as u64,
                    message: format!("unexpected end of file while reading {what}"),
                });
            }
            filled += n;
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    pub(crate) fn read_u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    pub(crate) fn read_f64(&mut self, what: &str) -> Result<f64> {
        let mut b = [0u8; 8];
        self.read_exact(&mut b, what)?;
        Ok(f64::from_le_bytes(b))
    }
}
