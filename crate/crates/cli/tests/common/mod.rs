//! Synthetic corpora and an independent loop-and-sort retrieval oracle.
#![allow(dead_code)]

use std::path::Path;

use rand::Rng;
use vidret_cli::VideoSet;
use vidret_core::dataset::{
    write_archive, write_manifest, ArchiveRole, Caption, CorpusManifest, EmbeddingArchive,
    VideoEntry,
};

pub struct Corpus {
    pub manifest: CorpusManifest,
    pub videos: Vec<(String, Vec<f32>)>,
    pub texts: Vec<(String, Vec<f32>)>,
    pub dim: usize,
}

fn random_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f32>() > 1e-3 {
            return v;
        }
    }
}

/// Captions are noisy copies of their video vector; a few videos are exact
/// duplicates of earlier ones so ties occur.
pub fn random_corpus<R: Rng>(
    rng: &mut R,
    n_videos: usize,
    dim: usize,
    max_captions: usize,
) -> Corpus {
    random_corpus_with_duplicates(rng, n_videos, dim, max_captions, 0.1)
}

pub fn random_corpus_with_duplicates<R: Rng>(
    rng: &mut R,
    n_videos: usize,
    dim: usize,
    max_captions: usize,
    duplicate_rate: f64,
) -> Corpus {
    let mut entries = Vec::new();
    let mut videos: Vec<(String, Vec<f32>)> = Vec::new();
    let mut texts = Vec::new();
    for v in 0..n_videos {
        let vid = format!("video{v}");
        let vec = if v > 0 && rng.gen_bool(duplicate_rate) {
            videos[rng.gen_range(0..v)].1.clone()
        } else {
            random_vec(rng, dim)
        };
        let m = rng.gen_range(1..=max_captions);
        let mut captions = Vec::new();
        for c in 0..m {
            let cid = format!("{vid}_c{c}");
            let noise = rng.gen_range(0.0f32..1.5);
            let t: Vec<f32> = vec
                .iter()
                .map(|x| x + noise * rng.gen_range(-1.0f32..1.0))
                .collect();
            let t = if t.iter().map(|x| x * x).sum::<f32>() > 1e-6 {
                t
            } else {
                vec.clone()
            };
            texts.push((cid.clone(), t));
            captions.push(Caption {
                caption_id: cid,
                text: format!("caption {c} of {vid}"),
            });
        }
        entries.push(VideoEntry {
            video_id: vid.clone(),
            captions,
            duration_seconds: Some(rng.gen_range(1.0..60.0)),
            split: "test".into(),
        });
        videos.push((vid, vec));
    }
    Corpus {
        manifest: CorpusManifest::new("synthetic", entries).unwrap(),
        videos,
        texts,
        dim,
    }
}

impl Corpus {
    pub fn video_archive(&self) -> EmbeddingArchive {
        archive(ArchiveRole::Video, &self.videos, self.dim)
    }

    pub fn text_archive(&self) -> EmbeddingArchive {
        archive(ArchiveRole::Text, &self.texts, self.dim)
    }

    pub fn video_set(&self) -> VideoSet {
        VideoSet::from_archive(&self.video_archive()).unwrap()
    }

    pub fn write(&self, dir: &Path) {
        write_manifest(&self.manifest, dir.join("manifest.jsonl")).unwrap();
        write_archive(&self.video_archive(), dir.join("videos_in.frem")).unwrap();
        write_archive(&self.text_archive(), dir.join("texts.frem")).unwrap();
    }
}

pub fn archive(role: ArchiveRole, rows: &[(String, Vec<f32>)], dim: usize) -> EmbeddingArchive {
    EmbeddingArchive::new(
        role,
        dim,
        rows.iter().map(|(id, _)| id.clone()).collect(),
        rows.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
    )
    .unwrap()
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut ab = 0.0f64;
    let mut aa = 0.0f64;
    let mut bb = 0.0f64;
    for i in 0..a.len() {
        let (x, y) = (a[i] as f64, b[i] as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    ab / (aa.sqrt() * bb.sqrt())
}

/// 1-based position of `target` after a stable descending sort of `scores`.
fn sorted_position(scores: &[f64], target: usize) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    order.iter().position(|&i| i == target).unwrap() + 1
}

/// TVR: one rank per caption. VTR: per video, the best rank among its
/// captions in the full caption gallery.
pub fn oracle_ranks(c: &Corpus, tvr: bool) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    if tvr {
        for (v_idx, entry) in c.manifest.entries.iter().enumerate() {
            for cap in &entry.captions {
                let t = &c
                    .texts
                    .iter()
                    .find(|(id, _)| id == &cap.caption_id)
                    .unwrap()
                    .1;
                let scores: Vec<f64> = c.videos.iter().map(|(_, v)| cosine(t, v)).collect();
                out.push((cap.caption_id.clone(), sorted_position(&scores, v_idx)));
            }
        }
    } else {
        for (v_idx, entry) in c.manifest.entries.iter().enumerate() {
            let video = &c.videos[v_idx].1;
            let scores: Vec<f64> = c.texts.iter().map(|(_, t)| cosine(video, t)).collect();
            let best = entry
                .captions
                .iter()
                .map(|cap| {
                    let idx = c
                        .texts
                        .iter()
                        .position(|(id, _)| id == &cap.caption_id)
                        .unwrap();
                    sorted_position(&scores, idx)
                })
                .min()
                .unwrap();
            out.push((entry.video_id.clone(), best));
        }
    }
    out
}

/// R@1, R@5, R@10, median, mean, population std straight from the formulas.
pub fn oracle_metrics(ranks: &[usize]) -> [f64; 6] {
    let n = ranks.len() as f64;
    let recall = |k: usize| 100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    let mut s = ranks.to_vec();
    s.sort();
    let m = s.len();
    let median = if m % 2 == 1 {
        s[m / 2] as f64
    } else {
        (s[m / 2 - 1] + s[m / 2]) as f64 / 2.0
    };
    let mean = ranks.iter().sum::<usize>() as f64 / n;
    let var = ranks
        .iter()
        .map(|&r| (r as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    [recall(1), recall(5), recall(10), median, mean, var.sqrt()]
}
