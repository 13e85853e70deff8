//! Category grouping from a learned class relation.
//!
//! Normalized spectral clustering: affinity `A_ij = |Ω_ij|` (zero diagonal),
//! `L = I − D^{-1/2} A D^{-1/2}`, embed each category as its row of the `k`
//! lowest eigenvectors (row-normalized), then k-means with k-means++ seeding.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};
use crate::relation::ClassRelation;

pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITERS: usize = 300;
const ISOLATED_DEGREE: f64 = 1e-12;

/// A partition of `labels.len()` items into `k` groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl GroupAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || labels.iter().any(|&l| l >= k) {
            return Err(Error::InvalidArgument(format!(
                "group labels must lie in [0, {k})"
            )));
        }
        Ok(Self { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of each group.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &g) in self.labels.iter().enumerate() {
            out[g].push(i);
        }
        out
    }
}

/// Relabels groups in order of first appearance.
fn canonical(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k.max(labels.iter().max().map_or(0, |&m| m + 1))];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    if target < w {
                        pick = i;
                        break;
                    }
                    target -= w;
                }
            }
            if d2[pick] == 0.0 {
                // rounding pushed us past the end; take the last positive weight
                pick = d2.iter().rposition(|&w| w > 0.0).expect("total > 0");
            }
            pick
        } else {
            // all remaining points coincide with a center; pick any unchosen index
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Lloyd iterations from k-means++ seeds. Returns `(labels, inertia)`.
fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let dim = points[0].len();
    let mut centers = kmeans_plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (j, _) = nearest(p, &centers);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            } else {
                // refill an empty cluster with the point farthest from its center
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty");
                centers[j] = points[far].clone();
                labels[far] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (labels, inertia)
}

/// Best-of-restarts k-means; restart `r` is seeded with `seed + r`, ties go to the lower `r`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<Vec<usize>> {
    if points.is_empty() || k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k-means needs 1 <= k <= {} points, got k = {k}",
            points.len()
        )));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let (labels, inertia) = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    Ok(best.expect("at least one restart").0)
}

/// Spectral embedding: rows of the `k` lowest eigenvectors of the normalized
/// Laplacian of `|rel|`, each row scaled to unit length.
pub fn spectral_embedding(rel: &SymMatrix, k: usize) -> Result<Vec<Vec<f64>>> {
    let c = rel.order();
    let mut affinity = rel.as_matrix().abs();
    affinity.fill_diagonal(0.0);
    let inv_sqrt_deg = DVector::from_iterator(
        c,
        affinity.row_iter().map(|r| {
            let d = r.sum();
            1.0 / if d > 0.0 { d } else { ISOLATED_DEGREE }.sqrt()
        }),
    );
    let normalized = DMatrix::from_fn(c, c, |i, j| {
        affinity[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j]
    });
    let laplacian = SymMatrix::new(DMatrix::identity(c, c) - normalized)?;
    let eig = sym_eigen(&laplacian)?;
    Ok((0..c)
        .map(|i| {
            let row: Vec<f64> = (0..k).map(|j| eig.vectors[(i, j)]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|v| v / norm).collect()
            } else {
                row
            }
        })
        .collect())
}

/// Groups the rows of a symmetric relation matrix into `k` clusters.
pub fn spectral_cluster_matrix(rel: &SymMatrix, k: usize, seed: u64) -> Result<GroupAssignment> {
    let c = rel.order();
    if k == 0 || k > c {
        return Err(Error::InvalidArgument(format!(
            "k must lie in [1, {c}], got {k}"
        )));
    }
    let labels = if k == 1 {
        vec![0; c]
    } else if k == c {
        (0..c).collect()
    } else {
        let points = spectral_embedding(rel, k)?;
        canonical(&kmeans(&points, k, seed, KMEANS_RESTARTS)?, k)
    };
    GroupAssignment::new(labels, k)
}

pub fn spectral_cluster(omega: &ClassRelation, k: usize, seed: u64) -> Result<GroupAssignment> {
    spectral_cluster_matrix(omega.matrix(), k, seed)
}

fn choose2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two partitions given as label vectors.
pub fn adjusted_rand_index_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "partitions have {} and {} items",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&v| choose2(v)).sum();
    let sum_a: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|r| r[j]).sum()))
        .sum();
    let expected = sum_a * sum_b / choose2(n);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

pub fn adjusted_rand_index(a: &GroupAssignment, b: &GroupAssignment) -> Result<f64> {
    adjusted_rand_index_labels(&a.labels, &b.labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub group: usize,
    pub categories: Vec<String>,
}

/// JSON group report with mean `|Ω_ij|` inside and across groups (off-diagonal pairs only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub k: usize,
    pub groups: Vec<GroupEntry>,
    pub within_group_mean_abs: Option<f64>,
    pub between_group_mean_abs: Option<f64>,
}

impl GroupReport {
    pub fn build(rel: &SymMatrix, assignment: &GroupAssignment, names: &[String]) -> Result<Self> {
        let c = rel.order();
        if assignment.len() != c || names.len() != c {
            return Err(Error::Shape(format!(
                "relation order {c}, {} assignments, {} names",
                assignment.len(),
                names.len()
            )));
        }
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..c {
            for j in (i + 1)..c {
                let v = rel.get(i, j).abs();
                if assignment.labels[i] == assignment.labels[j] {
                    within += v;
                    nw += 1;
                } else {
                    between += v;
                    nb += 1;
                }
            }
        }
        let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
        Ok(Self {
            k: assignment.k,
            groups: assignment
                .members()
                .into_iter()
                .enumerate()
                .map(|(g, idx)| GroupEntry {
                    group: g,
                    categories: idx.into_iter().map(|i| names[i].clone()).collect(),
                })
                .collect(),
            within_group_mean_abs: mean(within, nw),
            between_group_mean_abs: mean(between, nb),
        })
    }
}
