//! Baseline JPEG input and output.

mod decoder;
mod encoder;
pub mod huffman;
pub mod marker;

pub use decoder::{parse_jpeg, Component, FrameInfo, ParsedJpeg};
pub use encoder::{encode_baseline_gray, EncodeError, Encoder};

use crate::quant::TableError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JpegError {
    #[error("missing SOI marker; not a JPEG file")]
    NotJpeg,
    #[error("unexpected end of file")]
    UnexpectedEof,
    #[error("malformed JPEG: {0}")]
    Malformed(&'static str),
    #[error("unsupported JPEG feature: {0}")]
    Unsupported(String),
    #[error("scan references undefined {class} Huffman table {id}")]
    MissingHuffmanTable { class: &'static str, id: u8 },
    #[error("component references undefined quantization table {0}")]
    MissingQuantTable(u8),
    #[error("invalid Huffman code in scan data")]
    BadHuffmanCode,
    #[error("scan data ended before all blocks were decoded")]
    TruncatedScan,
    #[error("expected restart marker {expected:#04x}, found {found:#04x}")]
    BadRestartMarker { expected: u8, found: u8 },
    #[error("SOS before any SOF")]
    ScanBeforeFrame,
    #[error("no SOF frame header")]
    NoFrame,
    #[error("luminance component was never scanned")]
    NoLuminanceScan,
    #[error("invalid quantization table: {0}")]
    Table(#[from] TableError),
}
