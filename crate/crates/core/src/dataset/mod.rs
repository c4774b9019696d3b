//! On-disk inputs: `.frem` embedding archives, JSON Lines corpus manifests
//! and split selection.

mod archive;
mod frames;
mod manifest;

pub use archive::{
    read_archive, read_sidecar, sidecar_path, write_archive, write_sidecar, ArchiveRole,
    EmbeddingArchive, MAGIC, VERSION,
};
pub use frames::{frame_id, group_frames_by_video, parse_frame_id, FrameGap, GroupedFrames};
pub use manifest::{
    check_references, load_manifest, parse_manifest, read_id_list, select_ids, select_split,
    write_manifest, Caption, CorpusManifest, VideoEntry, KNOWN_SPLITS,
};
