use std::collections::BTreeMap;

use crate::dataset::archive::{ArchiveRole, EmbeddingArchive};
use crate::embedding::{Embedding, FrameMatrix};
use crate::error::{Error, Result};

/// Frame row id: `videoId#frameIndex`.
pub fn frame_id(video_id: &str, frame_index: usize) -> String {
    format!("{video_id}#{frame_index}")
}

/// Splits at the last `#`, so video ids may themselves contain `#`.
pub fn parse_frame_id(id: &str) -> Result<(&str, usize)> {
    let (video, index) = id
        .rsplit_once('#')
        .ok_or_else(|| Error::MalformedFrameId(id.to_owned()))?;
    if video.is_empty() || index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::MalformedFrameId(id.to_owned()));
    }
    let index = index
        .parse()
        .map_err(|_| Error::MalformedFrameId(id.to_owned()))?;
    Ok((video, index))
}

/// Frame indices absent between a video's first and last frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameGap {
    pub video_id: String,
    pub missing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedFrames {
    /// Sorted by video id; columns sorted by frame index.
    pub matrices: Vec<FrameMatrix>,
    /// Non-contiguous frame numbering; gaps are tolerated.
    pub gaps: Vec<FrameGap>,
}

pub fn group_frames_by_video(archive: &EmbeddingArchive) -> Result<GroupedFrames> {
    if archive.role() != ArchiveRole::Frame {
        return Err(Error::Format(format!(
            "expected a frame archive, found role {:?}",
            archive.role()
        )));
    }
    let mut by_video: BTreeMap<&str, BTreeMap<usize, usize>> = BTreeMap::new();
    for (row, id) in archive.ids().iter().enumerate() {
        let (video, index) = parse_frame_id(id)?;
        if by_video
            .entry(video)
            .or_default()
            .insert(index, row)
            .is_some()
        {
            return Err(Error::DuplicateId(id.clone()));
        }
    }

    let mut matrices = Vec::with_capacity(by_video.len());
    let mut gaps = Vec::new();
    for (video, frames) in by_video {
        let (first, last) = (
            *frames.keys().next().expect("non-empty"),
            *frames.keys().next_back().expect("non-empty"),
        );
        if last - first + 1 != frames.len() {
            gaps.push(FrameGap {
                video_id: video.to_owned(),
                missing: (first..=last).filter(|i| !frames.contains_key(i)).collect(),
            });
        }
        let columns = frames
            .values()
            .map(|&row| archive.embedding(row))
            .collect::<Result<Vec<Embedding>>>()?;
        matrices.push(FrameMatrix::new(video, columns)?);
    }
    Ok(GroupedFrames { matrices, gaps })
}
