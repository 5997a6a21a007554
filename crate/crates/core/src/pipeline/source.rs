//! Pipeline inputs: animated GIFs, or precomputed abstractions that skip the
//! vision call.

use std::io::Cursor as IoCursor;
use std::path::{Path, PathBuf};

use image::codecs::gif::GifDecoder;
use image::{AnimationDecoder, ImageFormat};

use crate::abstraction::{parse_abstraction, VisualAbstraction};
use crate::llm::Attachment;
use crate::schema::SchemaError;

pub const DEFAULT_MAX_FRAMES: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: cannot decode GIF: {message}")]
    Decode { path: String, message: String },
    #[error("{path}: GIF has no frames")]
    NoFrames { path: String },
    #[error("{path}: {source}")]
    Abstraction { path: String, source: SchemaError },
    #[error("{path}: unsupported source type (expected .gif or .json)")]
    Unsupported { path: String },
    #[error("duplicate source id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceOrigin {
    LocalFile(PathBuf),
    Precomputed(VisualAbstraction),
}

/// One item of the GIF corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct GifSource {
    pub id: String,
    /// PNG-encoded frames, uniformly sampled; empty for precomputed sources.
    pub frames: Vec<Attachment>,
    pub origin: SourceOrigin,
}

/// Indices of `m` frames spread uniformly over `n`, always including the
/// first frame. Returns all indices when `n <= m`.
pub fn sample_frame_indices(n: usize, m: usize) -> Vec<usize> {
    if n <= m {
        return (0..n).collect();
    }
    (0..m).map(|i| i * n / m).collect()
}

/// Decodes an animated GIF and re-encodes up to `max_frames` uniformly
/// spaced frames as PNG.
pub fn decode_gif_frames(bytes: &[u8], max_frames: usize, path: &str) -> Result<Vec<Attachment>, SourceError> {
    let decode_err = |e: image::ImageError| SourceError::Decode { path: path.to_string(), message: e.to_string() };
    let decoder = GifDecoder::new(IoCursor::new(bytes)).map_err(decode_err)?;
    let frames = decoder.into_frames().collect_frames().map_err(decode_err)?;
    if frames.is_empty() {
        return Err(SourceError::NoFrames { path: path.to_string() });
    }
    sample_frame_indices(frames.len(), max_frames.max(1))
        .into_iter()
        .map(|i| {
            let mut png = Vec::new();
            frames[i].buffer().write_to(&mut IoCursor::new(&mut png), ImageFormat::Png).map_err(decode_err)?;
            Ok(Attachment::png(png))
        })
        .collect()
}

impl GifSource {
    /// Loads a `.gif` (decoded into frames) or a `.json` abstraction record.
    /// The id is the file stem.
    pub fn load(path: &Path, max_frames: usize) -> Result<Self, SourceError> {
        let shown = path.display().to_string();
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("source").to_string();
        let bytes = std::fs::read(path).map_err(|source| SourceError::Io { path: shown.clone(), source })?;
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("gif") => Ok(GifSource {
                id,
                frames: decode_gif_frames(&bytes, max_frames, &shown)?,
                origin: SourceOrigin::LocalFile(path.to_path_buf()),
            }),
            Some("json") => {
                let parsed = parse_abstraction(&bytes).map_err(|source| SourceError::Abstraction { path: shown, source })?;
                Ok(GifSource { id, frames: Vec::new(), origin: SourceOrigin::Precomputed(parsed.abstraction) })
            }
            _ => Err(SourceError::Unsupported { path: shown }),
        }
    }

    pub fn precomputed(id: impl Into<String>, abstraction: VisualAbstraction) -> Self {
        GifSource { id: id.into(), frames: Vec::new(), origin: SourceOrigin::Precomputed(abstraction) }
    }
}

/// Loads sources from a directory (every `.gif` and `.json`, sorted by name)
/// or from a manifest file listing one path per line, relative to the
/// manifest. Blank lines and `#` comments are skipped.
pub fn load_sources(path: &Path, max_frames: usize) -> Result<Vec<GifSource>, SourceError> {
    let io_err = |source| SourceError::Io { path: path.display().to_string(), source };
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("gif") || e.eq_ignore_ascii_case("json"))
            })
            .collect();
        files.sort();
        files
    } else {
        let base = path.parent().unwrap_or(Path::new("."));
        std::fs::read_to_string(path)
            .map_err(io_err)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };
    let mut seen = std::collections::HashSet::new();
    files
        .iter()
        .map(|f| {
            let src = GifSource::load(f, max_frames)?;
            if !seen.insert(src.id.clone()) {
                return Err(SourceError::DuplicateId(src.id));
            }
            Ok(src)
        })
        .collect()
}
