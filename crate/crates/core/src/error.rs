use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image {path}: {reason}")]
    UnsupportedImage { path: PathBuf, reason: String },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("image {width}x{height} is too small: need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("invalid spatial resolution (P={neighbors}, R={radius}): {reason}")]
    InvalidResolution {
        neighbors: usize,
        radius: usize,
        reason: &'static str,
    },
    #[error("pixel ({row}, {col}) is closer than {radius} to the image border")]
    NearBorder { row: usize, col: usize, radius: usize },
    #[error("cannot split {extent} pixels into {blocks} blocks")]
    TooManyBlocks { extent: usize, blocks: usize },
    #[error("rectangle {rect:?} lies outside a {width}x{height} label map")]
    RectOutOfBounds {
        rect: crate::grid::Rect,
        width: usize,
        height: usize,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("gallery is empty")]
    EmptyGallery,
}
