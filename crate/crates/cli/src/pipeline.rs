//! In-memory evaluation pipeline: aggregate frames, score captions against
//! videos, apply the multi-caption and multi-centroid protocols.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vidret_core::dataset::{
    check_references, group_frames_by_video, ArchiveRole, CorpusManifest, EmbeddingArchive,
    FrameGap,
};
use vidret_core::ranking::Judgement;
use vidret_core::{
    aggregate, collapse_min_rank_by_video, evaluate, min_rank_multi_gallery, rank_queries,
    similarity_matrix, AggregationConfig, Embedding, Error, EvalOptions, GroundTruth, Grouping,
    MetricReport, RankVector, Result,
};

/// Query rows scored per similarity block.
const BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Text query, video gallery.
    Tvr,
    /// Video query, caption gallery.
    Vtr,
}

/// Centroid row id: `videoId@centroidIndex`.
pub fn centroid_id(video_id: &str, index: usize) -> String {
    format!("{video_id}@{index}")
}

/// Aggregates every video of a frame archive into a video archive. With
/// k-means each video contributes `k` rows named `videoId@0..videoId@k-1`.
pub fn aggregate_archive(
    frames: &EmbeddingArchive,
    cfg: &AggregationConfig,
) -> Result<(EmbeddingArchive, Vec<FrameGap>)> {
    cfg.validate()?;
    let grouped = group_frames_by_video(frames)?;
    let reps = grouped
        .matrices
        .par_iter()
        .map(|w| aggregate(w, cfg))
        .collect::<Result<Vec<_>>>()?;
    let multi = matches!(cfg.method, vidret_core::AggregationMethod::KMeans(_));
    let rows = reps.into_iter().flat_map(|rep| {
        let id = rep.video_id;
        rep.vectors.into_iter().enumerate().map(move |(i, v)| {
            (
                if multi {
                    centroid_id(&id, i)
                } else {
                    id.clone()
                },
                v,
            )
        })
    });
    Ok((
        EmbeddingArchive::from_embeddings(ArchiveRole::Video, rows)?,
        grouped.gaps,
    ))
}

/// Video vectors keyed by video id; every video has the same number of
/// vectors (1, or `k` for centroid archives).
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSet {
    vectors: HashMap<String, Vec<Embedding>>,
    per_video: usize,
}

impl VideoSet {
    pub fn new(vectors: HashMap<String, Vec<Embedding>>) -> Result<Self> {
        let per_video = vectors.values().map(Vec::len).next().unwrap_or(1);
        if let Some((id, v)) = vectors
            .iter()
            .find(|(_, v)| v.len() != per_video || v.is_empty())
        {
            return Err(Error::Integrity(format!(
                "video {id} has {} vectors, expected {per_video}",
                v.len()
            )));
        }
        Ok(Self { vectors, per_video })
    }

    /// Reads a video archive. When every id ends in `@<digits>` the rows are
    /// treated as centroids and regrouped by video.
    pub fn from_archive(archive: &EmbeddingArchive) -> Result<Self> {
        if archive.role() != ArchiveRole::Video {
            return Err(Error::Format(format!(
                "expected a video archive, found role {:?}",
                archive.role()
            )));
        }
        let split = |id: &str| -> Option<(String, usize)> {
            let (video, idx) = id.rsplit_once('@')?;
            if video.is_empty() || idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((video.to_owned(), idx.parse().ok()?))
        };
        let centroid = !archive.is_empty() && archive.ids().iter().all(|id| split(id).is_some());
        let mut slots: HashMap<String, Vec<(usize, Embedding)>> = HashMap::new();
        for (i, id) in archive.ids().iter().enumerate() {
            let (video, idx) = if centroid {
                split(id).expect("checked")
            } else {
                (id.clone(), 0)
            };
            slots
                .entry(video)
                .or_default()
                .push((idx, archive.embedding(i)?));
        }
        let mut vectors = HashMap::with_capacity(slots.len());
        for (video, mut v) in slots {
            v.sort_by_key(|(idx, _)| *idx);
            if v.iter().enumerate().any(|(pos, (idx, _))| pos != *idx) {
                return Err(Error::Integrity(format!(
                    "video {video} has non-contiguous centroid indices"
                )));
            }
            vectors.insert(video, v.into_iter().map(|(_, e)| e).collect());
        }
        Self::new(vectors)
    }

    pub fn per_video(&self) -> usize {
        self.per_video
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn get(&self, video_id: &str) -> Option<&[Embedding]> {
        self.vectors.get(video_id).map(Vec::as_slice)
    }
}

/// Ranks `judgements` against `queries × gallery` without materializing the
/// full similarity matrix; output follows judgement order.
pub fn rank_blocked(
    queries: &[(String, Embedding)],
    gallery: &[(String, Embedding)],
    judgements: &[Judgement],
) -> Result<RankVector> {
    let gallery_ids: Vec<String> = gallery.iter().map(|(id, _)| id.clone()).collect();
    let gallery_vecs: Vec<Embedding> = gallery.iter().map(|(_, e)| e.clone()).collect();
    let mut by_query: Vec<Vec<usize>> = vec![Vec::new(); queries.len()];
    for (i, j) in judgements.iter().enumerate() {
        by_query
            .get_mut(j.query)
            .ok_or_else(|| {
                Error::MissingGroundTruth(format!("{}: query row {} missing", j.id, j.query))
            })?
            .push(i);
    }

    let mut ranks = vec![0usize; judgements.len()];
    for start in (0..queries.len()).step_by(BLOCK_ROWS) {
        let end = (start + BLOCK_ROWS).min(queries.len());
        let block: Vec<Embedding> = queries[start..end].iter().map(|(_, e)| e.clone()).collect();
        let sim = similarity_matrix(&block, &gallery_vecs)?.with_ids(
            queries[start..end]
                .iter()
                .map(|(id, _)| id.clone())
                .collect(),
            gallery_ids.clone(),
        )?;
        let local: Vec<Judgement> = (start..end)
            .flat_map(|q| by_query[q].iter().map(move |&i| (q, i)))
            .map(|(q, i)| Judgement {
                id: judgements[i].id.clone(),
                query: q - start,
                target: judgements[i].target,
            })
            .collect();
        if local.is_empty() {
            continue;
        }
        let positions: Vec<usize> = (start..end)
            .flat_map(|q| by_query[q].iter().copied())
            .collect();
        let block_ranks = rank_queries(&sim, &GroundTruth::new(local))?;
        for (pos, r) in positions.into_iter().zip(block_ranks.ranks) {
            ranks[pos] = r;
        }
    }
    RankVector::new(
        judgements.iter().map(|j| j.id.clone()).collect(),
        judgements
            .iter()
            .map(|j| gallery_ids[j.target].clone())
            .collect(),
        ranks,
        gallery.len(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub task: Task,
    pub ranks: RankVector,
    pub report: MetricReport,
    /// Centroid galleries merged by minimum rank.
    pub galleries: usize,
    /// Whether some video's rank is a minimum over several captions.
    pub collapsed: bool,
}

/// Runs one retrieval task over the videos and captions of `selected`.
///
/// TVR ranks every caption against all selected videos. VTR ranks every
/// caption of a video from that video's query row, then keeps the best
/// caption per video. Centroid video sets are ranked once per centroid
/// index and merged by elementwise minimum.
pub fn evaluate_corpus(
    full: &CorpusManifest,
    selected: &CorpusManifest,
    videos: &VideoSet,
    texts: &EmbeddingArchive,
    task: Task,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if texts.role() != ArchiveRole::Text {
        return Err(Error::Format(format!(
            "expected a text archive, found role {:?}",
            texts.role()
        )));
    }
    check_references(
        full,
        selected,
        videos.ids(),
        texts.ids().iter().map(String::as_str),
    )?;

    let text_row: HashMap<&str, usize> = texts
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let captions: Vec<(String, Embedding)> = selected
        .captions()
        .map(|(c, _)| {
            Ok((
                c.caption_id.clone(),
                texts.embedding(text_row[c.caption_id.as_str()])?,
            ))
        })
        .collect::<Result<_>>()?;
    let video_index: HashMap<&str, usize> = selected
        .video_ids()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let caption_video: Vec<usize> = selected
        .captions()
        .map(|(_, e)| video_index[e.video_id.as_str()])
        .collect();

    let galleries = videos.per_video();
    let mut passes = Vec::with_capacity(galleries);
    for g in 0..galleries {
        let video_vecs: Vec<(String, Embedding)> = selected
            .video_ids()
            .map(|v| {
                (
                    v.to_owned(),
                    videos.get(v).expect("checked by references")[g].clone(),
                )
            })
            .collect();
        let judgements: Vec<Judgement> = captions
            .iter()
            .enumerate()
            .map(|(ci, (cid, _))| match task {
                Task::Tvr => Judgement {
                    id: cid.clone(),
                    query: ci,
                    target: caption_video[ci],
                },
                Task::Vtr => Judgement {
                    id: cid.clone(),
                    query: caption_video[ci],
                    target: ci,
                },
            })
            .collect();
        passes.push(match task {
            Task::Tvr => rank_blocked(&captions, &video_vecs, &judgements)?,
            Task::Vtr => rank_blocked(&video_vecs, &captions, &judgements)?,
        });
    }
    let mut ranks = min_rank_multi_gallery(&passes)?;

    let mut collapsed = false;
    if task == Task::Vtr {
        let grouping: Grouping = selected
            .entries
            .iter()
            .map(|e| {
                (
                    e.video_id.clone(),
                    e.captions.iter().map(|c| c.caption_id.clone()).collect(),
                )
            })
            .collect();
        collapsed = grouping.is_multi();
        ranks = collapse_min_rank_by_video(&ranks, &grouping)?;
    }
    let report = evaluate(&ranks, opts)?;
    Ok(Evaluation {
        task,
        ranks,
        report,
        galleries,
        collapsed,
    })
}
