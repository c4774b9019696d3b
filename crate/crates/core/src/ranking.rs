//! Ground-truth ranks under the evaluation protocols: plain ranking, the
//! minimum over several captions of one video, and the minimum over
//! several centroid galleries.
//!
//! Text-to-video and video-to-text retrieval share this code; only the roles
//! of the two modalities in the [`SimilarityMatrix`] change.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::SimilarityMatrix;
use crate::error::{Error, Result};

/// One scored query: row `query` of the similarity matrix should retrieve
/// column `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgement {
    pub id: String,
    pub query: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    judgements: Vec<Judgement>,
}

impl GroundTruth {
    pub fn new(judgements: Vec<Judgement>) -> Self {
        Self { judgements }
    }

    /// Query `i` matches gallery item `i`.
    pub fn diagonal(sim: &SimilarityMatrix) -> Self {
        Self::new(
            sim.query_ids()
                .iter()
                .enumerate()
                .map(|(i, id)| Judgement {
                    id: id.clone(),
                    query: i,
                    target: i,
                })
                .collect(),
        )
    }

    /// Resolves `(entry id, query id, gallery id)` triples against the ids of
    /// `sim`.
    pub fn from_ids<I, A, B, C>(sim: &SimilarityMatrix, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B, C)>,
        A: Into<String>,
        B: AsRef<str>,
        C: AsRef<str>,
    {
        let index = |ids: &[String]| -> HashMap<String, usize> {
            ids.iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), i))
                .collect()
        };
        let queries = index(sim.query_ids());
        let gallery = index(sim.gallery_ids());
        let judgements = triples
            .into_iter()
            .map(|(id, q, g)| {
                let id = id.into();
                let query = *queries.get(q.as_ref()).ok_or_else(|| {
                    Error::MissingGroundTruth(format!("{id}: unknown query {}", q.as_ref()))
                })?;
                let target = *gallery.get(g.as_ref()).ok_or_else(|| {
                    Error::MissingGroundTruth(format!("{id}: target {} not in gallery", g.as_ref()))
                })?;
                Ok(Judgement { id, query, target })
            })
            .collect::<Result<_>>()?;
        Ok(Self { judgements })
    }

    pub fn judgements(&self) -> &[Judgement] {
        &self.judgements
    }

    pub fn len(&self) -> usize {
        self.judgements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgements.is_empty()
    }
}

/// 1-based ranks, one per judged query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector {
    pub ids: Vec<String>,
    pub targets: Vec<String>,
    pub ranks: Vec<usize>,
    pub gallery_size: usize,
}

impl RankVector {
    pub fn new(
        ids: Vec<String>,
        targets: Vec<String>,
        ranks: Vec<usize>,
        gallery_size: usize,
    ) -> Result<Self> {
        if ids.len() != ranks.len() || targets.len() != ranks.len() {
            return Err(Error::MisalignedVectors(format!(
                "{} ids, {} targets, {} ranks",
                ids.len(),
                targets.len(),
                ranks.len()
            )));
        }
        if let Some(pos) = ranks.iter().position(|&r| r == 0 || r > gallery_size) {
            return Err(Error::IndexOutOfRange {
                index: ranks[pos],
                len: gallery_size,
            });
        }
        Ok(Self {
            ids,
            targets,
            ranks,
            gallery_size,
        })
    }

    /// Ranks with positional ids, mainly for tests and tools.
    pub fn from_ranks(ranks: Vec<usize>, gallery_size: usize) -> Result<Self> {
        let ids: Vec<String> = (0..ranks.len()).map(|i| i.to_string()).collect();
        Self::new(ids.clone(), ids, ranks, gallery_size)
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.ids
            .iter()
            .zip(&self.targets)
            .zip(&self.ranks)
            .map(|((i, t), &r)| (i.as_str(), t.as_str(), r))
    }
}

/// `1 + #{scores strictly above the target} + #{earlier entries tied with it}`.
pub fn rank_of_target(scores: &[f64], target: usize) -> Result<usize> {
    let t = *scores.get(target).ok_or(Error::IndexOutOfRange {
        index: target,
        len: scores.len(),
    })?;
    let above = scores.iter().filter(|&&s| s > t).count();
    let tied_before = scores[..target].iter().filter(|&&s| s == t).count();
    Ok(1 + above + tied_before)
}

pub fn rank_queries(sim: &SimilarityMatrix, gt: &GroundTruth) -> Result<RankVector> {
    if gt.is_empty() {
        return Err(Error::MissingGroundTruth("no judged queries".into()));
    }
    for j in gt.judgements() {
        if j.query >= sim.n_queries() {
            return Err(Error::MissingGroundTruth(format!(
                "{}: query row {} missing",
                j.id, j.query
            )));
        }
    }
    let ranks = gt
        .judgements()
        .par_iter()
        .map(|j| rank_of_target(sim.row(j.query), j.target))
        .collect::<Result<Vec<_>>>()?;
    RankVector::new(
        gt.judgements().iter().map(|j| j.id.clone()).collect(),
        gt.judgements()
            .iter()
            .map(|j| sim.gallery_ids()[j.target].clone())
            .collect(),
        ranks,
        sim.n_gallery(),
    )
}

/// Ordered groups of rank entries, e.g. all captions of one video.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Grouping {
    groups: Vec<(String, Vec<String>)>,
}

impl Grouping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, group: impl Into<String>, members: Vec<String>) {
        self.groups.push((group.into(), members));
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }

    /// Whether any group has more than one member.
    pub fn is_multi(&self) -> bool {
        self.groups.iter().any(|(_, m)| m.len() > 1)
    }
}

impl<S: Into<String>> FromIterator<(S, Vec<String>)> for Grouping {
    fn from_iter<T: IntoIterator<Item = (S, Vec<String>)>>(iter: T) -> Self {
        Self {
            groups: iter.into_iter().map(|(g, m)| (g.into(), m)).collect(),
        }
    }
}

/// Minimum rank over each group's members; one output entry per group, in
/// grouping order. The target of a collapsed entry is the best-ranked
/// member's target.
pub fn collapse_min_rank_by_video(ranks: &RankVector, grouping: &Grouping) -> Result<RankVector> {
    let position: HashMap<&str, usize> = ranks
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut covered = vec![false; ranks.len()];
    let mut ids = Vec::with_capacity(grouping.groups.len());
    let mut targets = Vec::with_capacity(grouping.groups.len());
    let mut out = Vec::with_capacity(grouping.groups.len());
    for (group, members) in &grouping.groups {
        let mut best: Option<usize> = None;
        for m in members {
            let &i = position
                .get(m.as_str())
                .ok_or_else(|| Error::MissingGroundTruth(format!("{m} (group {group})")))?;
            covered[i] = true;
            if best.is_none_or(|b| ranks.ranks[i] < ranks.ranks[b]) {
                best = Some(i);
            }
        }
        let best = best.ok_or_else(|| Error::EmptyGroup(group.clone()))?;
        ids.push(group.clone());
        targets.push(ranks.targets[best].clone());
        out.push(ranks.ranks[best]);
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(Error::Integrity(format!(
            "{} belongs to no group",
            ranks.ids[i]
        )));
    }
    RankVector::new(ids, targets, out, ranks.gallery_size)
}

/// Elementwise minimum over aligned rank vectors, one per centroid gallery.
pub fn min_rank_multi_gallery(vectors: &[RankVector]) -> Result<RankVector> {
    let (first, rest) = vectors
        .split_first()
        .ok_or_else(|| Error::MisalignedVectors("no rank vectors".into()))?;
    for v in rest {
        if v.ids != first.ids {
            return Err(Error::MisalignedVectors("query ids differ".into()));
        }
        if v.gallery_size != first.gallery_size {
            return Err(Error::MisalignedVectors(format!(
                "gallery sizes {} and {}",
                first.gallery_size, v.gallery_size
            )));
        }
    }
    let mut out = first.clone();
    for v in rest {
        for i in 0..out.len() {
            if v.ranks[i] < out.ranks[i] {
                out.ranks[i] = v.ranks[i];
                out.targets[i] = v.targets[i].clone();
            }
        }
    }
    Ok(out)
}
