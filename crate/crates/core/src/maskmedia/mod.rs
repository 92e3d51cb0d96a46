//! Dense and run-length masks, mask algebra, object crops and the D4
//! symmetry group acting on square patches.

mod bitmask;
mod d4;
mod frame;
mod rle;

use thiserror::Error;

pub use bitmask::{bbox_of, boundary, dilate, erode, iou, BBox, BinaryMask};
pub use d4::{d4_apply, D4Transform};
pub use frame::{masked_crop, resize_patch, CropParams, FrameImage, Patch};
pub use rle::{rle_decode, rle_encode, rle_iou, RleMask};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("mask dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("RLE counts sum to {actual}, expected {expected}")]
    CountsMismatch { expected: u64, actual: u64 },
    #[error("mask is empty")]
    EmptyMask,
    #[error("zero-sized image {width}x{height}")]
    ZeroSize { width: u32, height: u32 },
    #[error("buffer holds {actual} elements, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("patch must be square, got {width}x{height}")]
    NotSquare { width: u32, height: u32 },
    #[error("{0}")]
    InvalidParameter(String),
}
