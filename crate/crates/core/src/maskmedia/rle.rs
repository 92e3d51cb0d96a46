use serde::{Deserialize, Serialize};

use super::{BinaryMask, MaskError};
use crate::scalar::{ratio, Scalar};

/// Uncompressed run-length mask.
///
/// `counts` alternates zero-runs and one-runs over the pixels in column-major
/// order (top to bottom, then left to right), starting with a zero-run that
/// may have length 0. `size` is `[height, width]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RleMask {
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn height(&self) -> u32 {
        self.size[0]
    }

    pub fn width(&self) -> u32 {
        self.size[1]
    }

    /// Number of set pixels, read directly from the one-runs.
    pub fn area(&self) -> usize {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// Checks the run total against the declared size.
    pub fn validate(&self) -> Result<(), MaskError> {
        let (h, w) = (self.height(), self.width());
        if h == 0 || w == 0 {
            return Err(MaskError::ZeroSize { width: w, height: h });
        }
        let expected = h as u64 * w as u64;
        let actual: u64 = self.counts.iter().map(|&c| c as u64).sum();
        if expected != actual {
            return Err(MaskError::CountsMismatch { expected, actual });
        }
        Ok(())
    }

    /// Empty mask of the given size.
    pub fn empty(width: u32, height: u32) -> RleMask {
        RleMask {
            size: [height, width],
            counts: vec![width * height],
        }
    }
}

/// Encodes a dense mask as column-major RLE.
pub fn rle_encode(mask: &BinaryMask) -> RleMask {
    let (w, h) = (mask.width(), mask.height());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for col in 0..w {
        for row in 0..h {
            let v = mask.get(row, col);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        size: [h, w],
        counts,
    }
}

/// Decodes column-major RLE into a dense mask.
///
/// Zero-length interior runs are tolerated; only the run total is checked.
pub fn rle_decode(rle: &RleMask) -> Result<BinaryMask, MaskError> {
    rle.validate()?;
    let (h, w) = (rle.height(), rle.width());
    let mut mask = BinaryMask::new(w, h)?;
    let mut pos = 0u64;
    for (i, &c) in rle.counts.iter().enumerate() {
        if i % 2 == 1 {
            for p in pos..pos + c as u64 {
                let (col, row) = ((p / h as u64) as u32, (p % h as u64) as u32);
                mask.set(row, col, true);
            }
        }
        pos += c as u64;
    }
    Ok(mask)
}

/// IoU computed directly on run lengths by merging the two run sequences.
/// Agrees exactly with the dense [`iou`](super::iou), including the
/// both-empty convention.
pub fn rle_iou<T: Scalar>(a: &RleMask, b: &RleMask) -> Result<T, MaskError> {
    a.validate()?;
    b.validate()?;
    if a.size != b.size {
        return Err(MaskError::DimensionMismatch {
            left: (a.width(), a.height()),
            right: (b.width(), b.height()),
        });
    }
    let mut ia = RunCursor::new(&a.counts);
    let mut ib = RunCursor::new(&b.counts);
    let (mut inter, mut union) = (0usize, 0usize);
    while let (Some((va, la)), Some((vb, lb))) = (ia.peek(), ib.peek()) {
        let step = la.min(lb);
        if va && vb {
            inter += step as usize;
        }
        if va || vb {
            union += step as usize;
        }
        ia.advance(step);
        ib.advance(step);
    }
    if union == 0 {
        return Ok(T::one());
    }
    Ok(ratio(inter, union))
}

struct RunCursor<'a> {
    counts: &'a [u32],
    idx: usize,
    left: u32,
}

impl<'a> RunCursor<'a> {
    fn new(counts: &'a [u32]) -> Self {
        let mut c = RunCursor {
            counts,
            idx: 0,
            left: counts.first().copied().unwrap_or(0),
        };
        c.skip_empty();
        c
    }

    fn skip_empty(&mut self) {
        while self.left == 0 && self.idx + 1 < self.counts.len() {
            self.idx += 1;
            self.left = self.counts[self.idx];
        }
    }

    fn peek(&self) -> Option<(bool, u32)> {
        (self.left > 0).then_some((self.idx % 2 == 1, self.left))
    }

    fn advance(&mut self, n: u32) {
        self.left -= n;
        self.skip_empty();
    }
}
