//! Vector primitives shared by every other module: normalization, cosine
//! similarity and batched similarity matrices.
//!
//! Values are held as `f64` and every dot product and norm accumulates in
//! `f64` in index order, so archives stored as `f32` produce identical scores
//! across runs and thread counts.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Embedding width of the ViT-B/32 image-text model; the engine itself never
/// assumes it.
pub const DEFAULT_DIM: usize = 512;

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// A finite, non-empty feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding has no components"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self(values))
    }

    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.0.iter().map(|&v| v as f32).collect()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    /// Whether the Euclidean norm is 1 within `1e-6`.
    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-6
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The `d × s` matrix of per-frame embeddings of one video, stored as
/// `s` columns in temporal order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    video_id: String,
    columns: Vec<Embedding>,
}

impl FrameMatrix {
    pub fn new(video_id: impl Into<String>, columns: Vec<Embedding>) -> Result<Self> {
        let first = columns.first().ok_or(Error::EmptyMatrix)?;
        uniform_dim(&columns, first.dim())?;
        Ok(Self {
            video_id: video_id.into(),
            columns,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn columns(&self) -> &[Embedding] {
        &self.columns
    }

    /// Number of frames `s`.
    pub fn frame_count(&self) -> usize {
        self.columns.len()
    }

    pub fn dim(&self) -> usize {
        self.columns[0].dim()
    }
}

/// Sequential dot product in index order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| {
        let d = x - y;
        acc + d * d
    })
}

fn check_dims(a: &Embedding, b: &Embedding) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

pub fn l2_normalize(v: &Embedding) -> Result<Embedding> {
    let norm = v.norm();
    if norm < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(Embedding(v.0.iter().map(|x| x / norm).collect()))
}

pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_dims(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na < ZERO_NORM || nb < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(dot(&a.0, &b.0) / (na * nb))
}

/// Dense `n_query × n_gallery` cosine scores, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    query_ids: Vec<String>,
    gallery_ids: Vec<String>,
    scores: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from precomputed rows.
    pub fn from_rows(
        query_ids: Vec<String>,
        gallery_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != query_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: query_ids.len(),
                found: rows.len(),
            });
        }
        let mut scores = Vec::with_capacity(rows.len() * gallery_ids.len());
        for row in rows {
            if row.len() != gallery_ids.len() {
                return Err(Error::DimensionMismatch {
                    expected: gallery_ids.len(),
                    found: row.len(),
                });
            }
            scores.extend(row);
        }
        Ok(Self {
            query_ids,
            gallery_ids,
            scores,
        })
    }

    /// Replaces the positional identifiers.
    pub fn with_ids(mut self, query_ids: Vec<String>, gallery_ids: Vec<String>) -> Result<Self> {
        if query_ids.len() != self.query_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: self.query_ids.len(),
                found: query_ids.len(),
            });
        }
        if gallery_ids.len() != self.gallery_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: self.gallery_ids.len(),
                found: gallery_ids.len(),
            });
        }
        self.query_ids = query_ids;
        self.gallery_ids = gallery_ids;
        Ok(self)
    }

    pub fn n_queries(&self) -> usize {
        self.query_ids.len()
    }

    pub fn n_gallery(&self) -> usize {
        self.gallery_ids.len()
    }

    pub fn query_ids(&self) -> &[String] {
        &self.query_ids
    }

    pub fn gallery_ids(&self) -> &[String] {
        &self.gallery_ids
    }

    pub fn row(&self, query: usize) -> &[f64] {
        let n = self.n_gallery();
        &self.scores[query * n..(query + 1) * n]
    }

    pub fn get(&self, query: usize, gallery: usize) -> f64 {
        self.scores[query * self.n_gallery() + gallery]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_queries()).map(move |i| self.row(i))
    }

    pub fn transpose(&self) -> Self {
        let (nq, ng) = (self.n_queries(), self.n_gallery());
        let mut scores = Vec::with_capacity(self.scores.len());
        for j in 0..ng {
            for i in 0..nq {
                scores.push(self.scores[i * ng + j]);
            }
        }
        Self {
            query_ids: self.gallery_ids.clone(),
            gallery_ids: self.query_ids.clone(),
            scores,
        }
    }
}

fn uniform_dim(items: &[Embedding], expected: usize) -> Result<()> {
    match items.iter().find(|e| e.dim() != expected) {
        Some(e) => Err(Error::DimensionMismatch {
            expected,
            found: e.dim(),
        }),
        None => Ok(()),
    }
}

/// All-pairs cosine similarity with positional ids (`"0"`, `"1"`, ...).
///
/// Rows are computed in parallel, but each entry is a fixed sequential
/// reduction so the result does not depend on the thread count.
pub fn similarity_matrix(queries: &[Embedding], gallery: &[Embedding]) -> Result<SimilarityMatrix> {
    if queries.is_empty() {
        return Err(Error::EmptyInput("no queries"));
    }
    if gallery.is_empty() {
        return Err(Error::EmptyInput("empty gallery"));
    }
    let d = queries[0].dim();
    uniform_dim(queries, d)?;
    uniform_dim(gallery, d)?;

    let norms_of = |items: &[Embedding]| -> Result<Vec<f64>> {
        items
            .iter()
            .map(|e| {
                let n = e.norm();
                if n < ZERO_NORM {
                    Err(Error::ZeroVector)
                } else {
                    Ok(n)
                }
            })
            .collect()
    };
    let q_norms = norms_of(queries)?;
    let g_norms = norms_of(gallery)?;

    let ng = gallery.len();
    let mut scores = vec![0.0; queries.len() * ng];
    scores
        .par_chunks_mut(ng)
        .zip(queries.par_iter().zip(q_norms.par_iter()))
        .for_each(|(row, (q, &qn))| {
            for ((slot, g), &gn) in row.iter_mut().zip(gallery).zip(&g_norms) {
                *slot = dot(&q.0, &g.0) / (qn * gn);
            }
        });

    Ok(SimilarityMatrix {
        query_ids: (0..queries.len()).map(|i| i.to_string()).collect(),
        gallery_ids: (0..ng).map(|i| i.to_string()).collect(),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let n = l2_normalize(&emb(&[3.0, 4.0])).unwrap();
        assert!((n.values()[0] - 0.6).abs() < 1e-12);
        assert!((n.values()[1] - 0.8).abs() < 1e-12);
        assert_eq!(l2_normalize(&emb(&[0.0, 1.0])).unwrap(), emb(&[0.0, 1.0]));
        assert!(matches!(
            l2_normalize(&emb(&[0.0, 0.0])),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn cosine_examples() {
        let a = emb(&[0.6, 0.8]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            cosine_similarity(&emb(&[1.0, 0.0]), &emb(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let c = cosine_similarity(&emb(&[1.0, 0.0]), &emb(&[1.0, 1.0])).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&emb(&[1.0, 0.0]), &emb(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(
            cosine_similarity(&emb(&[1.0, 0.0]), &emb(&[0.0, 0.0])),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Embedding::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(Embedding::new(vec![]).is_err());
    }

    #[test]
    fn matrix_examples() {
        let m =
            similarity_matrix(&[emb(&[1.0, 0.0])], &[emb(&[1.0, 0.0]), emb(&[0.0, 1.0])]).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0]);
        let u = emb(&[0.3, -0.2, 0.9]);
        let m = similarity_matrix(std::slice::from_ref(&u), std::slice::from_ref(&u)).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_errors() {
        assert!(matches!(
            similarity_matrix(&[], &[emb(&[1.0])]),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            similarity_matrix(&[emb(&[1.0, 0.0])], &[emb(&[1.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, d)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn scale_invariance(a in vec_strategy(6), b in vec_strategy(6), alpha in 0.01..100.0f64, beta in 0.01..100.0f64) {
            let (a, b) = (emb(&a), emb(&b));
            let base = cosine_similarity(&a, &b).unwrap();
            let scaled = cosine_similarity(&a.scaled(alpha).unwrap(), &b.scaled(beta).unwrap()).unwrap();
            prop_assert!((base - scaled).abs() < 1e-6);
            prop_assert!(base.abs() <= 1.0 + 1e-6);
        }

        #[test]
        fn symmetry(a in vec_strategy(5), b in vec_strategy(5)) {
            let (a, b) = (emb(&a), emb(&b));
            prop_assert!((cosine_similarity(&a, &b).unwrap() - cosine_similarity(&b, &a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn normalize_idempotent(a in vec_strategy(7)) {
            let once = l2_normalize(&emb(&a)).unwrap();
            let twice = l2_normalize(&once).unwrap();
            prop_assert!(once.is_unit());
            for (x, y) in once.values().iter().zip(twice.values()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        #[test]
        fn matrix_transpose_duality(
            q in prop::collection::vec(vec_strategy(4), 1..6),
            g in prop::collection::vec(vec_strategy(4), 1..6),
        ) {
            let q: Vec<_> = q.iter().map(|v| emb(v)).collect();
            let g: Vec<_> = g.iter().map(|v| emb(v)).collect();
            let qg = similarity_matrix(&q, &g).unwrap();
            let gq = similarity_matrix(&g, &q).unwrap().transpose();
            for i in 0..q.len() {
                for j in 0..g.len() {
                    prop_assert!((qg.get(i, j) - gq.get(i, j)).abs() < 1e-6);
                }
            }
        }
    }
}
