//! Video length versus assigned rank, and the worst-ranked queries.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::dataset::CorpusManifest;
use crate::error::{Error, Result};
use crate::metrics::median_rank;
use crate::ranking::RankVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthRankRow {
    pub video_id: String,
    pub duration_seconds: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthRankStudy {
    pub rows: Vec<LengthRankRow>,
    pub median_rank: f64,
    /// Spearman correlation of duration and rank; 0 when undefined.
    pub spearman: f64,
    /// Set when either variable is constant, leaving the correlation undefined.
    pub spearman_undefined: bool,
}

/// 1-based ranks with ties replaced by their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = avg;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation of the average-rank transforms; `None` if either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pairs every ranked query with its video's duration. Query ids may be
/// video ids or caption ids.
pub fn length_rank_table(ranks: &RankVector, manifest: &CorpusManifest) -> Result<LengthRankStudy> {
    if ranks.is_empty() {
        return Err(Error::EmptyRanks);
    }
    let lookup = manifest.lookup();
    let rows = ranks
        .iter()
        .map(|(id, _, rank)| {
            let entry = lookup
                .get(id)
                .ok_or_else(|| Error::MissingDuration(id.to_owned()))?;
            let duration = entry
                .duration_seconds
                .ok_or_else(|| Error::MissingDuration(id.to_owned()))?;
            Ok(LengthRankRow {
                video_id: entry.video_id.clone(),
                duration_seconds: duration,
                rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let durations: Vec<f64> = rows.iter().map(|r| r.duration_seconds).collect();
    let rank_values: Vec<f64> = rows.iter().map(|r| r.rank as f64).collect();
    let rho = spearman(&durations, &rank_values);
    Ok(LengthRankStudy {
        median_rank: median_rank(&ranks.ranks)?,
        spearman: rho.unwrap_or(0.0),
        spearman_undefined: rho.is_none(),
        rows,
    })
}

impl LengthRankStudy {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for row in &self.rows {
            csv.serialize(row).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn summary_text(&self) -> String {
        format!(
            "rows={}\nmedian_rank={:.1}\nspearman={:.6}\nspearman_undefined={}\n",
            self.rows.len(),
            self.median_rank,
            self.spearman,
            self.spearman_undefined
        )
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstPair {
    pub query_id: String,
    pub video_id: String,
    pub target_id: String,
    pub rank: usize,
    pub captions: Vec<String>,
}

/// The `top_n` worst ranks, descending, ties by query id ascending.
pub fn worst_pairs(
    ranks: &RankVector,
    manifest: &CorpusManifest,
    top_n: usize,
) -> Result<Vec<WorstPair>> {
    if ranks.is_empty() {
        return Err(Error::EmptyRanks);
    }
    if top_n == 0 {
        return Err(Error::InvalidConfig("top_n must be at least 1".into()));
    }
    let lookup = manifest.lookup();
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| {
        ranks.ranks[b]
            .cmp(&ranks.ranks[a])
            .then_with(|| ranks.ids[a].cmp(&ranks.ids[b]))
    });
    order
        .into_iter()
        .take(top_n)
        .map(|i| {
            let id = &ranks.ids[i];
            let entry = lookup.get(id.as_str()).ok_or_else(|| {
                Error::Integrity(format!("ranked query {id} is not in the manifest"))
            })?;
            let captions = match entry.captions.iter().find(|c| &c.caption_id == id) {
                Some(c) => vec![c.text.clone()],
                None => entry.captions.iter().map(|c| c.text.clone()).collect(),
            };
            Ok(WorstPair {
                query_id: id.clone(),
                video_id: entry.video_id.clone(),
                target_id: ranks.targets[i].clone(),
                rank: ranks.ranks[i],
                captions,
            })
        })
        .collect()
}

/// Tab-separated listing: rank, query, video, then one caption per line.
pub fn format_worst_pairs(pairs: &[WorstPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = writeln!(out, "{}\t{}\t{}", p.rank, p.query_id, p.video_id);
        for c in &p.captions {
            let _ = writeln!(out, "\t{c}");
        }
    }
    out
}
