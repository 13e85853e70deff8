//! Ranking metrics: per-category average precision, mAP and a single-label
//! confusion summary.
//!
//! AP is the non-interpolated variant. Samples are ranked by descending
//! score with ties broken by ascending original index, so every metric here
//! is deterministic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};

/// Scores and binary labels for `n` samples over `c` categories, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    n: usize,
    c: usize,
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoreTable {
    pub fn new(n: usize, c: usize, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != n * c || labels.len() != n * c {
            return Err(Error::Shape(format!(
                "score table {n}x{c} needs {} entries, got {} scores and {} labels",
                n * c,
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("scores must be finite".into()));
        }
        Ok(Self {
            n,
            c,
            scores,
            labels,
        })
    }

    /// Builds a table from a `C × N` prediction matrix and the dataset it was computed on.
    pub fn from_predictions(predictions: &DMatrix<f64>, data: &Dataset) -> Result<Self> {
        if predictions.shape() != (data.num_categories(), data.len()) {
            return Err(Error::Shape(format!(
                "predictions are {:?}, dataset has {} categories and {} samples",
                predictions.shape(),
                data.num_categories(),
                data.len()
            )));
        }
        let (c, n) = predictions.shape();
        let mut scores = Vec::with_capacity(n * c);
        let mut labels = Vec::with_capacity(n * c);
        for (i, s) in data.samples().iter().enumerate() {
            scores.extend(predictions.column(i).iter());
            labels.extend(s.labels.iter());
        }
        Self::new(n, c, scores, labels)
    }

    pub fn num_samples(&self) -> usize {
        self.n
    }

    pub fn num_categories(&self) -> usize {
        self.c
    }

    pub fn score(&self, i: usize, cat: usize) -> f64 {
        self.scores[i * self.c + cat]
    }

    pub fn label(&self, i: usize, cat: usize) -> bool {
        self.labels[i * self.c + cat]
    }

    pub fn score_column(&self, cat: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.score(i, cat)).collect()
    }

    pub fn label_column(&self, cat: usize) -> Vec<bool> {
        (0..self.n).map(|i| self.label(i, cat)).collect()
    }
}

/// Sample indices by descending score, ties (including `0.0` vs `-0.0`) by ascending index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (scores[b], scores[a]);
        x.partial_cmp(&y)
            .unwrap_or_else(|| x.total_cmp(&y))
            .then(a.cmp(&b))
    });
    idx
}

/// Non-interpolated average precision of one ranked list.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs at least one positive".into(),
        ));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, i) in ranking(scores).into_iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    /// AP per category; `None` for categories without positives.
    pub per_category: Vec<Option<f64>>,
    pub map: f64,
    pub excluded: Vec<usize>,
}

pub fn mean_average_precision(table: &ScoreTable) -> Result<MapResult> {
    let mut per_category = Vec::with_capacity(table.c);
    let mut excluded = Vec::new();
    for cat in 0..table.c {
        match average_precision(&table.score_column(cat), &table.label_column(cat)) {
            Ok(ap) => per_category.push(Some(ap)),
            Err(Error::UndefinedMetric(_)) => {
                per_category.push(None);
                excluded.push(cat);
            }
            Err(e) => return Err(e),
        }
    }
    let included: Vec<f64> = per_category.iter().flatten().copied().collect();
    if included.is_empty() {
        return Err(Error::UndefinedMetric(
            "no category has a positive sample".into(),
        ));
    }
    let map = included.iter().sum::<f64>() / included.len() as f64;
    Ok(MapResult {
        per_category,
        map,
        excluded,
    })
}

/// Row = first positive category of a sample, column = highest-scoring category
/// (first on ties); rows normalized to sum 1. Samples with no positives are skipped,
/// rows without samples stay zero.
pub fn confusion_summary(table: &ScoreTable) -> Result<DMatrix<f64>> {
    if table.n == 0 {
        return Err(Error::InvalidInput(
            "confusion summary of an empty table".into(),
        ));
    }
    let c = table.c;
    let mut counts = DMatrix::<f64>::zeros(c, c);
    for i in 0..table.n {
        let Some(truth) = (0..c).find(|&k| table.label(i, k)) else {
            continue;
        };
        let mut best = 0;
        for k in 1..c {
            if table.score(i, k) > table.score(i, best) {
                best = k;
            }
        }
        counts[(truth, best)] += 1.0;
    }
    for mut row in counts.row_iter_mut() {
        let total = row.sum();
        if total > 0.0 {
            row /= total;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAp {
    pub category: String,
    pub ap: Option<f64>,
}

/// JSON metric report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub map: f64,
    pub per_category: Vec<CategoryAp>,
    pub excluded: Vec<String>,
    pub confusion: Vec<Vec<f64>>,
}

impl MetricReport {
    pub fn build(table: &ScoreTable, category_names: &[String]) -> Result<Self> {
        if category_names.len() != table.c {
            return Err(Error::Shape(format!(
                "{} category names for {} categories",
                category_names.len(),
                table.c
            )));
        }
        let map = mean_average_precision(table)?;
        let confusion = confusion_summary(table)?;
        Ok(Self {
            map: map.map,
            per_category: category_names
                .iter()
                .zip(&map.per_category)
                .map(|(name, ap)| CategoryAp {
                    category: name.clone(),
                    ap: *ap,
                })
                .collect(),
            excluded: map
                .excluded
                .iter()
                .map(|&k| category_names[k].clone())
                .collect(),
            confusion: confusion
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        })
    }
}
