//! Frame-level aggregation: maps a [`FrameMatrix`] to one or more video
//! vectors living in the same space as the text embeddings.
//!
//! Three aggregators are provided:
//!
//! * single frame: the column at a fixed 1-based position, clamped to the
//!   last frame for short videos;
//! * mean: the arithmetic mean of the columns;
//! * k-means: `k` centroids from a deterministic Lloyd's iteration.
//!
//! By default every column is l2-normalized before aggregation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::embedding::{l2_normalize, squared_distance, Embedding, FrameMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_FRAME_INDEX: usize = 30;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum AggregationMethod {
    SingleFrame {
        frame_index: usize,
    },
    Mean,
    #[serde(rename = "kmeans")]
    KMeans(KMeansParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub method: AggregationMethod,
    pub normalize_frames_first: bool,
}

impl AggregationConfig {
    pub fn single_frame(frame_index: usize) -> Self {
        Self {
            method: AggregationMethod::SingleFrame { frame_index },
            normalize_frames_first: true,
        }
    }

    pub fn mean() -> Self {
        Self {
            method: AggregationMethod::Mean,
            normalize_frames_first: true,
        }
    }

    pub fn kmeans(k: usize) -> Self {
        Self {
            method: AggregationMethod::KMeans(KMeansParams::new(k)),
            normalize_frames_first: true,
        }
    }

    pub fn normalize_frames(mut self, on: bool) -> Self {
        self.normalize_frames_first = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            AggregationMethod::SingleFrame { frame_index: 0 } => Err(Error::InvalidConfig(
                "frame index is 1-based and must be at least 1".into(),
            )),
            AggregationMethod::KMeans(p) if p.k == 0 => {
                Err(Error::InvalidConfig("k must be at least 1".into()))
            }
            AggregationMethod::KMeans(p) if p.max_iterations == 0 => Err(Error::InvalidConfig(
                "max iterations must be at least 1".into(),
            )),
            AggregationMethod::KMeans(p)
                if p.convergence_tol.is_nan() || p.convergence_tol <= 0.0 =>
            {
                Err(Error::InvalidConfig(
                    "convergence tolerance must be positive".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Number of vectors each video is reduced to.
    pub fn vectors_per_video(&self) -> usize {
        match self.method {
            AggregationMethod::KMeans(p) => p.k,
            _ => 1,
        }
    }
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self::mean()
    }
}

/// One video reduced to one (single frame, mean) or `k` (k-means) vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRepresentation {
    pub video_id: String,
    pub vectors: Vec<Embedding>,
    pub method: AggregationMethod,
}

fn prepare_columns(w: &FrameMatrix, normalize: bool) -> Result<Vec<Embedding>> {
    if normalize {
        w.columns().iter().map(l2_normalize).collect()
    } else {
        Ok(w.columns().to_vec())
    }
}

/// Mean over columns, summed in column order.
fn column_mean<'a>(columns: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut n = 0usize;
    for col in columns {
        for (a, v) in acc.iter_mut().zip(col) {
            *a += v;
        }
        n += 1;
    }
    let n = n as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Returns the column at 1-based position `frame_index`, or the last column
/// when the video is shorter than that.
pub fn aggregate_single_frame(w: &FrameMatrix, frame_index: usize) -> Result<VideoRepresentation> {
    if frame_index == 0 {
        return Err(Error::InvalidConfig("frame index is 1-based".into()));
    }
    let pos = frame_index.min(w.frame_count()) - 1;
    Ok(VideoRepresentation {
        video_id: w.video_id().to_owned(),
        vectors: vec![w.columns()[pos].clone()],
        method: AggregationMethod::SingleFrame { frame_index },
    })
}

pub fn aggregate_mean(
    w: &FrameMatrix,
    normalize_frames_first: bool,
) -> Result<VideoRepresentation> {
    let columns = prepare_columns(w, normalize_frames_first)?;
    let mean = column_mean(columns.iter().map(Embedding::values), w.dim());
    Ok(VideoRepresentation {
        video_id: w.video_id().to_owned(),
        vectors: vec![Embedding::new(mean)?],
        method: AggregationMethod::Mean,
    })
}

/// Output of [`lloyd`].
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Ordered by descending cluster size, then by smallest member index.
    pub centroids: Vec<Embedding>,
    /// Cluster of every input point, indexing into `centroids`.
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
    pub iterations: usize,
}

impl Clustering {
    /// Within-cluster sum of squared distances.
    pub fn sse(&self, points: &[Embedding]) -> f64 {
        points
            .iter()
            .zip(&self.assignment)
            .map(|(p, &c)| squared_distance(p.values(), self.centroids[c].values()))
            .sum()
    }
}

/// Bit pattern of a vector with `-0.0` folded into `0.0`.
fn bit_key(v: &[f64]) -> Vec<u64> {
    v.iter()
        .map(|&x| if x == 0.0 { 0 } else { x.to_bits() })
        .collect()
}

fn count_distinct(points: &[Embedding]) -> usize {
    points
        .iter()
        .map(|p| bit_key(p.values()))
        .collect::<HashSet<_>>()
        .len()
}

/// Seeds at the temporally stratified positions `⌊i·s/k⌋`, stepping forward
/// (and wrapping) past columns equal to an earlier seed.
fn stratified_seeds(points: &[Embedding], k: usize) -> Vec<Vec<f64>> {
    let s = points.len();
    let mut taken: HashSet<Vec<u64>> = HashSet::with_capacity(k);
    let mut seeds = Vec::with_capacity(k);
    for i in 0..k {
        let mut idx = i * s / k;
        loop {
            let key = bit_key(points[idx].values());
            if taken.insert(key) {
                seeds.push(points[idx].values().to_vec());
                break;
            }
            idx = (idx + 1) % s;
        }
    }
    seeds
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Moves, for every empty cluster in index order, the point farthest from
/// its current centroid into it. Only clusters with at least two members
/// donate.
fn repair_empty(points: &[Embedding], centroids: &mut [Vec<f64>], assignment: &mut [usize]) {
    let mut sizes = vec![0usize; centroids.len()];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    for empty in 0..centroids.len() {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor = None;
        let mut far = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = squared_distance(p.values(), &centroids[c]);
            if d > far {
                far = d;
                donor = Some(i);
            }
        }
        // At least k distinct points exist, so some cluster holds two.
        let i = donor.expect("a cluster with two members exists");
        sizes[assignment[i]] -= 1;
        assignment[i] = empty;
        sizes[empty] = 1;
        centroids[empty] = points[i].values().to_vec();
    }
}

/// Deterministic Lloyd's k-means over `points`.
///
/// Ties in assignment go to the lowest-index centroid. Iteration stops once
/// every centroid moves less than `convergence_tol`, or after
/// `max_iterations` rounds. The returned centroids are exactly the means of
/// the returned assignment.
pub fn lloyd(points: &[Embedding], params: &KMeansParams, video_id: &str) -> Result<Clustering> {
    let k = params.k;
    if points.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if k == 0
        || params.max_iterations == 0
        || params.convergence_tol.is_nan()
        || params.convergence_tol <= 0.0
    {
        return Err(Error::InvalidConfig(format!(
            "bad k-means parameters {params:?}"
        )));
    }
    let distinct = count_distinct(points);
    if distinct < k {
        return Err(Error::InsufficientFrames {
            video_id: video_id.to_owned(),
            distinct,
            k,
        });
    }
    let dim = points[0].dim();

    let mut centroids = stratified_seeds(points, k);
    let mut assignment = vec![0usize; points.len()];
    let mut iterations = 0;
    for _ in 0..params.max_iterations {
        iterations += 1;
        for (slot, p) in assignment.iter_mut().zip(points) {
            *slot = nearest(p.values(), &centroids);
        }
        repair_empty(points, &mut centroids, &mut assignment);

        let updated: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                column_mean(
                    points
                        .iter()
                        .zip(&assignment)
                        .filter(|(_, &a)| a == c)
                        .map(|(p, _)| p.values()),
                    dim,
                )
            })
            .collect();
        let max_shift = centroids
            .iter()
            .zip(&updated)
            .map(|(old, new)| squared_distance(old, new).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if max_shift < params.convergence_tol {
            break;
        }
    }

    let mut sizes = vec![0usize; k];
    let mut first_member = vec![usize::MAX; k];
    for (i, &c) in assignment.iter().enumerate() {
        sizes[c] += 1;
        first_member[c] = first_member[c].min(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        sizes[b]
            .cmp(&sizes[a])
            .then(first_member[a].cmp(&first_member[b]))
    });
    let mut rank_of = vec![0usize; k];
    for (new, &old) in order.iter().enumerate() {
        rank_of[old] = new;
    }

    Ok(Clustering {
        centroids: order
            .iter()
            .map(|&c| Embedding::new(centroids[c].clone()))
            .collect::<Result<_>>()?,
        assignment: assignment.iter().map(|&c| rank_of[c]).collect(),
        sizes: order.iter().map(|&c| sizes[c]).collect(),
        iterations,
    })
}

pub fn aggregate_kmeans(w: &FrameMatrix, cfg: &AggregationConfig) -> Result<VideoRepresentation> {
    let AggregationMethod::KMeans(params) = cfg.method else {
        return Err(Error::InvalidConfig(
            "k-means aggregation needs k-means parameters".into(),
        ));
    };
    let columns = prepare_columns(w, cfg.normalize_frames_first)?;
    let clustering = lloyd(&columns, &params, w.video_id())?;
    Ok(VideoRepresentation {
        video_id: w.video_id().to_owned(),
        vectors: clustering.centroids,
        method: cfg.method,
    })
}

/// Applies whichever aggregator `cfg` selects.
pub fn aggregate(w: &FrameMatrix, cfg: &AggregationConfig) -> Result<VideoRepresentation> {
    cfg.validate()?;
    match cfg.method {
        AggregationMethod::SingleFrame { frame_index } => {
            let mut rep = aggregate_single_frame(w, frame_index)?;
            if cfg.normalize_frames_first {
                rep.vectors[0] = l2_normalize(&rep.vectors[0])?;
            }
            Ok(rep)
        }
        AggregationMethod::Mean => aggregate_mean(w, cfg.normalize_frames_first),
        AggregationMethod::KMeans(_) => aggregate_kmeans(w, cfg),
    }
}
