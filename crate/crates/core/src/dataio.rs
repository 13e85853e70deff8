//! Loading and writing multimodal datasets.
//!
//! On disk a dataset is a JSON manifest pointing at one `RDNF` feature file
//! per modality (plus a sidecar `.ids` file holding one sample id per line)
//! and a CSV label file with header `id,cat_0,...`.
//!
//! `RDNF` layout, all little-endian: magic `RDNF`, version `u32 = 1`,
//! `N: u32`, `D: u32`, then `N·D` `f64` values row-major.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OffsetReader;

pub const FEATURE_MAGIC: &[u8; 4] = b"RDNF";
pub const FEATURE_FORMAT_VERSION: u32 = 1;

/// One video: a feature vector per modality and a binary label per category.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample_id: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    category_names: Vec<String>,
    modality_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        samples: Vec<LabeledSample>,
        category_names: Vec<String>,
        modality_names: Vec<String>,
    ) -> Result<Self> {
        let m = modality_names.len();
        let c = category_names.len();
        if m == 0 {
            return Err(Error::Data("dataset needs at least one modality".into()));
        }
        if c == 0 {
            return Err(Error::Data("dataset needs at least one category".into()));
        }
        let mut seen = HashSet::new();
        let mut dims: Option<Vec<usize>> = None;
        for s in &samples {
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::Data(format!(
                    "duplicate sample id {:?}",
                    s.sample_id
                )));
            }
            if s.features.len() != m {
                return Err(Error::Data(format!(
                    "sample {:?} has {} modalities, expected {m}",
                    s.sample_id,
                    s.features.len()
                )));
            }
            if s.labels.len() != c {
                return Err(Error::Data(format!(
                    "sample {:?} has {} labels, expected {c}",
                    s.sample_id,
                    s.labels.len()
                )));
            }
            let these: Vec<usize> = s.features.iter().map(Vec::len).collect();
            match &dims {
                None => dims = Some(these),
                Some(d) if *d != these => {
                    return Err(Error::Data(format!(
                        "sample {:?} has feature dims {these:?}, expected {d:?}",
                        s.sample_id
                    )))
                }
                _ => {}
            }
            if s.features.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "sample {:?} has non-finite features",
                    s.sample_id
                )));
            }
        }
        Ok(Self {
            samples,
            category_names,
            modality_names,
        })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn category_names(&self) -> &[String] {
        &self.category_names
    }

    pub fn modality_names(&self) -> &[String] {
        &self.modality_names
    }

    pub fn num_modalities(&self) -> usize {
        self.modality_names.len()
    }

    pub fn num_categories(&self) -> usize {
        self.category_names.len()
    }

    /// Per-modality feature dimensions (empty dataset reports zeros).
    pub fn modality_dims(&self) -> Vec<usize> {
        match self.samples.first() {
            Some(s) => s.features.iter().map(Vec::len).collect(),
            None => vec![0; self.num_modalities()],
        }
    }

    /// Modality `m` of the selected samples as a `D × |indices|` matrix.
    pub fn modality_batch(&self, m: usize, indices: &[usize]) -> DMatrix<f64> {
        let d = self.modality_dims()[m];
        let mut out = DMatrix::zeros(d, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            out.column_mut(j)
                .copy_from_slice(&self.samples[i].features[m]);
        }
        out
    }

    /// All modalities for the selected samples.
    pub fn batch_inputs(&self, indices: &[usize]) -> Vec<DMatrix<f64>> {
        (0..self.num_modalities())
            .map(|m| self.modality_batch(m, indices))
            .collect()
    }

    /// Labels of the selected samples as a `C × |indices|` 0/1 matrix.
    pub fn label_batch(&self, indices: &[usize]) -> DMatrix<f64> {
        let c = self.num_categories();
        DMatrix::from_fn(c, indices.len(), |r, j| {
            if self.samples[indices[j]].labels[r] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            category_names: self.category_names.clone(),
            modality_names: self.modality_names.clone(),
        }
    }

    /// Single-modality view holding only modality `m`.
    pub fn select_modality(&self, m: usize) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| LabeledSample {
                    sample_id: s.sample_id.clone(),
                    features: vec![s.features[m].clone()],
                    labels: s.labels.clone(),
                })
                .collect(),
            category_names: self.category_names.clone(),
            modality_names: vec![self.modality_names[m].clone()],
        }
    }

    /// Single-modality view whose only feature is the concatenation of all modalities.
    pub fn concat_modalities(&self) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| LabeledSample {
                    sample_id: s.sample_id.clone(),
                    features: vec![s.features.concat()],
                    labels: s.labels.clone(),
                })
                .collect(),
            category_names: self.category_names.clone(),
            modality_names: vec![self.modality_names.join("+")],
        }
    }
}

/// L1-normalize a bag-of-words histogram, then take elementwise square roots.
///
/// The zero vector maps to itself.
pub fn rootsift_normalize(v: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = v.iter().find(|&&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "RootSIFT needs finite nonnegative entries, got {bad}"
        )));
    }
    let l1: f64 = v.iter().sum();
    if l1 == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    Ok(v.iter().map(|&x| (x / l1).sqrt()).collect())
}

/// Seeded random split; `fraction` of the samples (rounded) go to the training side.
/// Both sides keep the original relative order.
pub fn split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot split an empty dataset".into(),
        ));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must be in (0,1), got {fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {n} samples leaves one side empty"
        )));
    }
    let mut order = dataset.all_indices();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Sidecar id file for a feature file: same path with extension `.ids`.
pub fn ids_path(features: &Path) -> PathBuf {
    features.with_extension("ids")
}

/// Writes an `RDNF` feature file and its id sidecar. `rows[i]` belongs to `ids[i]`.
pub fn write_modality(path: &Path, ids: &[String], rows: &[Vec<f64>]) -> Result<()> {
    if ids.len() != rows.len() {
        return Err(Error::Shape(format!(
            "{} ids for {} rows",
            ids.len(),
            rows.len()
        )));
    }
    let d = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("ragged feature rows".into()));
    }
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{v} exceeds u32 range")))
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&FEATURE_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&to_u32(rows.len())?.to_le_bytes())?;
    w.write_all(&to_u32(d)?.to_le_bytes())?;
    for v in rows.iter().flatten() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;

    let mut ids_file = BufWriter::new(File::create(ids_path(path))?);
    for id in ids {
        if id.contains('\n') || id.contains('\r') {
            return Err(Error::InvalidInput(format!(
                "sample id {id:?} contains a line break"
            )));
        }
        writeln!(ids_file, "{id}")?;
    }
    ids_file.flush()?;
    Ok(())
}

/// Parses an `RDNF` payload from any reader.
pub fn read_feature_matrix<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut r = OffsetReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic, "magic")?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, expected RDNF".into(),
        });
    }
    let version = r.read_u32("version")?;
    if version != FEATURE_FORMAT_VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let n = r.read_u32("row count")? as usize;
    let d = r.read_u32("column count")? as usize;
    let mut data = Vec::with_capacity(n.saturating_mul(d).min(1 << 24));
    for _ in 0..n * d {
        let v = r.read_f64("feature value")?;
        if !v.is_finite() {
            return Err(Error::Format {
                offset: r.offset - 8,
                message: format!("non-finite feature value {v}"),
            });
        }
        data.push(v);
    }
    let mut extra = [0u8; 1];
    if r.inner.read(&mut extra)? != 0 {
        return Err(r.error("trailing bytes after payload".into()));
    }
    Ok(DMatrix::from_row_slice(n, d, &data))
}

/// Loads an `RDNF` file plus its id sidecar; row `i` of the matrix belongs to `ids[i]`.
pub fn load_modality(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let matrix = read_feature_matrix(BufReader::new(File::open(path)?))?;
    let ids_file = ids_path(path);
    let text = fs::read_to_string(&ids_file)?;
    let ids: Vec<String> = text.lines().map(str::to_owned).collect();
    if ids.len() != matrix.nrows() {
        return Err(Error::Data(format!(
            "{} lists {} ids but {} has {} rows",
            ids_file.display(),
            ids.len(),
            path.display(),
            matrix.nrows()
        )));
    }
    Ok((ids, matrix))
}

/// Label table: category names and, per sample in file order, its id and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    pub category_names: Vec<String>,
    pub rows: Vec<(String, Vec<bool>)>,
}

pub fn write_labels(path: &Path, table: &LabelTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_owned()];
    header.extend(table.category_names.iter().cloned());
    w.write_record(&header)?;
    for (id, labels) in &table.rows {
        let mut rec = vec![id.clone()];
        rec.extend(labels.iter().map(|&b| if b { "1" } else { "0" }.to_owned()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<LabelTable> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("id") || headers.len() < 2 {
        return Err(Error::Data(format!(
            "{}: header must be `id,<category>,...`",
            path.display()
        )));
    }
    let category_names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (lineno, rec) in r.records().enumerate() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_owned();
        let labels = rec
            .iter()
            .skip(1)
            .map(|cell| match cell.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::Data(format!(
                    "{} record {}: label cell {other:?} is not 0 or 1",
                    path.display(),
                    lineno + 1
                ))),
            })
            .collect::<Result<Vec<bool>>>()?;
        rows.push((id, labels));
    }
    Ok(LabelTable {
        category_names,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalityEntry {
    pub name: String,
    /// Path to the `RDNF` file, relative to the manifest's directory.
    pub features: String,
    /// Apply RootSIFT to every row after loading (bag-of-words modalities).
    #[serde(default)]
    pub rootsift: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub modalities: Vec<ModalityEntry>,
    pub labels: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a dataset described by a manifest. Samples follow the label file's order;
/// every labelled id must be present in every modality.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let labels = load_labels(&resolve(base, &manifest.labels))?;

    let mut per_modality: Vec<HashMap<String, Vec<f64>>> = Vec::new();
    for entry in &manifest.modalities {
        let (ids, matrix) = load_modality(&resolve(base, &entry.features))?;
        let mut rows = HashMap::with_capacity(ids.len());
        for (i, id) in ids.into_iter().enumerate() {
            let mut row: Vec<f64> = matrix.row(i).iter().copied().collect();
            if entry.rootsift {
                row = rootsift_normalize(&row).map_err(|e| {
                    Error::Data(format!("modality {:?}, sample {id:?}: {e}", entry.name))
                })?;
            }
            if rows.insert(id.clone(), row).is_some() {
                return Err(Error::Data(format!(
                    "modality {:?} repeats id {id:?}",
                    entry.name
                )));
            }
        }
        per_modality.push(rows);
    }

    let mut samples = Vec::with_capacity(labels.rows.len());
    for (id, label_row) in labels.rows {
        let mut features = Vec::with_capacity(per_modality.len());
        for (entry, rows) in manifest.modalities.iter().zip(per_modality.iter_mut()) {
            let f = rows.remove(&id).ok_or_else(|| {
                Error::Data(format!(
                    "sample {id:?} is missing modality {:?}",
                    entry.name
                ))
            })?;
            features.push(f);
        }
        samples.push(LabeledSample {
            sample_id: id,
            features,
            labels: label_row,
        });
    }
    Dataset::new(
        samples,
        labels.category_names,
        manifest.modalities.iter().map(|e| e.name.clone()).collect(),
    )
}

/// Writes `dataset` as `<dir>/<modality>.rdnf` (+ `.ids`), `<dir>/labels.csv`
/// and `<dir>/manifest.json`. Returns the manifest path.
pub fn write_dataset(dir: &Path, dataset: &Dataset, rootsift: &[bool]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let ids: Vec<String> = dataset
        .samples()
        .iter()
        .map(|s| s.sample_id.clone())
        .collect();
    let mut modalities = Vec::new();
    for (m, name) in dataset.modality_names().iter().enumerate() {
        let file = format!("{name}.rdnf");
        let rows: Vec<Vec<f64>> = dataset
            .samples()
            .iter()
            .map(|s| s.features[m].clone())
            .collect();
        write_modality(&dir.join(&file), &ids, &rows)?;
        modalities.push(ModalityEntry {
            name: name.clone(),
            features: file,
            rootsift: rootsift.get(m).copied().unwrap_or(false),
        });
    }
    let table = LabelTable {
        category_names: dataset.category_names().to_vec(),
        rows: dataset
            .samples()
            .iter()
            .map(|s| (s.sample_id.clone(), s.labels.clone()))
            .collect(),
    };
    write_labels(&dir.join("labels.csv"), &table)?;
    let manifest = Manifest {
        modalities,
        labels: "labels.csv".into(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| LabeledSample {
                sample_id: format!("v{i}"),
                features: vec![vec![i as f64, 1.0], vec![0.5 * i as f64]],
                labels: vec![i % 2 == 0, i % 3 == 0],
            })
            .collect();
        Dataset::new(
            samples,
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
        )
        .unwrap()
    }

    #[test]
    fn rootsift_examples() {
        let out = rootsift_normalize(&[1.0, 1.0, 2.0]).unwrap();
        let expected = [0.5, 0.5, 0.5f64.sqrt()];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(rootsift_normalize(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            rootsift_normalize(&[1.0, -1.0]),
            Err(Error::InvalidInput(_))
        ));
        for k in 0..4 {
            let mut e = vec![0.0; 4];
            e[k] = 1.0;
            assert_eq!(rootsift_normalize(&e).unwrap(), e);
        }
    }

    #[test]
    fn rootsift_output_has_unit_norm() {
        let v = [3.0, 0.0, 7.5, 1e-3, 12.0];
        let out = rootsift_normalize(&v).unwrap();
        let norm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dataset_validation() {
        let ok = toy_dataset(3);
        let mut dup = ok.samples().to_vec();
        dup[1].sample_id = "v0".into();
        assert!(Dataset::new(
            dup,
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()]
        )
        .is_err());
        let mut missing = ok.samples().to_vec();
        missing[2].features.pop();
        assert!(Dataset::new(
            missing,
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()]
        )
        .is_err());
    }

    #[test]
    fn split_even_and_deterministic() {
        let ds = toy_dataset(10);
        let (a, b) = split(&ds, 0.5, 4).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let (a2, b2) = split(&ds, 0.5, 4).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        let mut ids: Vec<&str> = a
            .samples()
            .iter()
            .chain(b.samples())
            .map(|s| s.sample_id.as_str())
            .collect();
        ids.sort_unstable();
        let mut orig: Vec<&str> = ds.samples().iter().map(|s| s.sample_id.as_str()).collect();
        orig.sort_unstable();
        assert_eq!(ids, orig);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let ds = toy_dataset(3);
        assert!(matches!(split(&ds, 0.1, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(split(&ds, 1.0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn batches_and_views() {
        let ds = toy_dataset(4);
        let x = ds.modality_batch(0, &[3, 1]);
        assert_eq!(x, DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 1.0]));
        let y = ds.label_batch(&[0, 1]);
        assert_eq!(y, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]));
        let cat = ds.concat_modalities();
        assert_eq!(cat.samples()[2].features, vec![vec![2.0, 1.0, 1.0]]);
        assert_eq!(ds.select_modality(1).modality_dims(), vec![1]);
    }

    #[test]
    fn feature_file_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.rdnf");
        let ids = vec!["a".to_owned(), "b".to_owned()];
        let rows = vec![vec![1.0, -2.5, 3.25], vec![f64::MIN_POSITIVE, 0.0, -0.0]];
        write_modality(&path, &ids, &rows).unwrap();
        let (got_ids, m) = load_modality(&path).unwrap();
        assert_eq!(got_ids, ids);
        assert_eq!(m.shape(), (2, 3));
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m[(i, j)].to_bits(), rows[i][j].to_bits());
            }
        }

        let bytes = fs::read(&path).unwrap();
        match read_feature_matrix(&bytes[..bytes.len() - 5]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, bytes.len() as u64 - 5),
            other => panic!("expected format error, got {other:?}"),
        }
        let mut nan = bytes.clone();
        nan[16..24].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            read_feature_matrix(&nan[..]),
            Err(Error::Format { offset: 16, .. })
        ));
        assert!(matches!(
            read_feature_matrix(&b"RDNX"[..]),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn dataset_round_trip_through_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(6);
        let manifest = write_dataset(dir.path(), &ds, &[false, false]).unwrap();
        let back = load_dataset(&manifest).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_modality_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(3);
        let manifest = write_dataset(dir.path(), &ds, &[false, false]).unwrap();
        // drop the last sample from modality y
        let ids = vec!["v0".to_owned(), "v1".to_owned()];
        write_modality(&dir.path().join("y.rdnf"), &ids, &[vec![0.0], vec![0.5]]).unwrap();
        let err = load_dataset(&manifest).unwrap_err();
        assert!(err.to_string().contains("missing modality"), "{err}");
    }

    #[test]
    fn rootsift_flag_applies_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(3);
        let manifest = write_dataset(dir.path(), &ds, &[true, false]).unwrap();
        let back = load_dataset(&manifest).unwrap();
        let expected = rootsift_normalize(&ds.samples()[2].features[0]).unwrap();
        assert_eq!(back.samples()[2].features[0], expected);
        assert_eq!(back.samples()[2].features[1], ds.samples()[2].features[1]);
    }

    #[test]
    fn bad_label_cells_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        fs::write(&path, "id,a\nv0,2\n").unwrap();
        assert!(load_labels(&path).is_err());
        fs::write(&path, "name,a\nv0,1\n").unwrap();
        assert!(load_labels(&path).is_err());
    }
}
