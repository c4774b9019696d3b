//! The `.frem` container: id-keyed `f32` embedding rows.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FREM"
//! 4       2     version (u16, = 1)
//! 6       1     role (u8: 0 frame, 1 video, 2 text)
//! 7       4     dimension (u32)
//! 11      8     count (u64)
//! 19      ...   count ids, each a u16 byte length followed by UTF-8
//! ...     ...   count × dimension f32 values, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FREM";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchiveRole {
    Frame = 0,
    Video = 1,
    Text = 2,
}

impl ArchiveRole {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Self::Frame),
            1 => Ok(Self::Video),
            2 => Ok(Self::Text),
            other => Err(Error::Format(format!("unknown role byte {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingArchive {
    role: ArchiveRole,
    dim: usize,
    ids: Vec<String>,
    values: Vec<f32>,
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

impl EmbeddingArchive {
    pub fn new(role: ArchiveRole, dim: usize, ids: Vec<String>, values: Vec<f32>) -> Result<Self> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(Error::Format(format!("unsupported dimension {dim}")));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                found: values.len(),
            });
        }
        if let Some(id) = ids.iter().find(|id| id.len() > u16::MAX as usize) {
            return Err(Error::Format(format!(
                "id of {} bytes exceeds the u16 length prefix",
                id.len()
            )));
        }
        check_unique(&ids)?;
        Ok(Self {
            role,
            dim,
            ids,
            values,
        })
    }

    /// Stores embeddings as `f32`.
    pub fn from_embeddings<I, S>(role: ArchiveRole, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Embedding)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut values = Vec::new();
        let mut dim = None;
        for (id, e) in rows {
            let d = *dim.get_or_insert(e.dim());
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: e.dim(),
                });
            }
            ids.push(id.into());
            values.extend(e.to_f32());
        }
        let dim = dim.ok_or(Error::EmptyInput("archive has no rows"))?;
        Self::new(role, dim, ids, values)
    }

    pub fn role(&self) -> ArchiveRole {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn embedding(&self, i: usize) -> Result<Embedding> {
        Embedding::from_f32(self.row(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .zip(self.values.chunks_exact(self.dim))
            .map(|(id, row)| (id.as_str(), row))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.role as u8])?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        for id in &self.ids {
            w.write_all(&(id.len() as u16).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:02x?}")));
        }
        let mut buf2 = [0u8; 2];
        read_exact(&mut r, &mut buf2, "version")?;
        let version = u16::from_le_bytes(buf2);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut role = [0u8; 1];
        read_exact(&mut r, &mut role, "role")?;
        let role = ArchiveRole::from_byte(role[0])?;
        let mut buf4 = [0u8; 4];
        read_exact(&mut r, &mut buf4, "dimension")?;
        let dim = u32::from_le_bytes(buf4) as usize;
        if dim == 0 {
            return Err(Error::Format("zero dimension".into()));
        }
        let mut buf8 = [0u8; 8];
        read_exact(&mut r, &mut buf8, "count")?;
        let count = u64::from_le_bytes(buf8);

        let mut ids = Vec::new();
        for i in 0..count {
            read_exact(&mut r, &mut buf2, "id length")?;
            let mut raw = vec![0u8; u16::from_le_bytes(buf2) as usize];
            read_exact(&mut r, &mut raw, "id")?;
            let id = String::from_utf8(raw)
                .map_err(|_| Error::Format(format!("id {i} is not UTF-8")))?;
            ids.push(id);
        }
        check_unique(&ids)?;

        let n_bytes = (count as usize)
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Format("value table size overflows".into()))?;
        let mut raw = Vec::new();
        r.by_ref().take(n_bytes as u64).read_to_end(&mut raw)?;
        if raw.len() < n_bytes {
            return Err(Error::TruncatedFile(format!(
                "expected {n_bytes} value bytes, found {}",
                raw.len()
            )));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after value table".into()));
        }
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(role, dim, ids, values)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::TruncatedFile(format!("while reading {what}")),
        _ => Error::Io(e),
    })
}

pub fn write_archive(archive: &EmbeddingArchive, path: impl AsRef<Path>) -> Result<()> {
    archive.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<EmbeddingArchive> {
    EmbeddingArchive::read_from(BufReader::new(File::open(path)?))
}

/// `<archive>.meta.json`, holding free-form extraction parameters.
pub fn sidecar_path(archive: impl AsRef<Path>) -> PathBuf {
    let mut s = archive.as_ref().as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_sidecar(archive: impl AsRef<Path>, meta: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(sidecar_path(archive), text)?;
    Ok(())
}

/// Sidecar contents, or `None` when the archive has none.
pub fn read_sidecar(archive: impl AsRef<Path>) -> Result<Option<serde_json::Value>> {
    let path = sidecar_path(archive);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}
