use serde::{Deserialize, Serialize};

use super::MaskError;
use crate::scalar::{ratio, Scalar};

/// Axis-aligned box in pixel units. `x`/`y` are the left column and top row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Exclusive right column.
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    /// Exclusive bottom row.
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x <= other.x
            && self.y <= other.y
            && self.right() >= other.right()
            && self.bottom() >= other.bottom()
    }

    /// Clamps the box to a `width`×`height` frame. Returns `None` if nothing
    /// of the box remains inside the frame.
    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BBox> {
        let x0 = self.x.min(width);
        let y0 = self.y.min(height);
        let x1 = self.right().min(width);
        let y1 = self.bottom().min(height);
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }
}

/// Dense binary mask stored as a row-major, bit-packed array.
///
/// Bits past `width * height` in the final word are always zero, so derived
/// equality and popcounts are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryMask({}x{}, area {})", self.width, self.height, self.area())?;
        if self.width * self.height <= 256 {
            for row in 0..self.height {
                f.write_str("\n  ")?;
                for col in 0..self.width {
                    f.write_str(if self.get(row, col) { "#" } else { "." })?;
                }
            }
        }
        Ok(())
    }
}

impl BinaryMask {
    /// All-zero mask.
    pub fn new(width: u32, height: u32) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroSize { width, height });
        }
        let len = width as usize * height as usize;
        Ok(Self {
            width,
            height,
            words: vec![0; len.div_ceil(64)],
        })
    }

    /// Builds a mask from a predicate over `(row, col)`.
    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> bool,
    ) -> Result<Self, MaskError> {
        let mut mask = Self::new(width, height)?;
        for row in 0..height {
            for col in 0..width {
                if f(row, col) {
                    mask.set(row, col, true);
                }
            }
        }
        Ok(mask)
    }

    /// Builds a mask from a row-major slice of flags.
    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self, MaskError> {
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(MaskError::BufferLength {
                expected,
                actual: bits.len(),
            });
        }
        let mut mask = Self::new(width, height)?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                mask.words[i / 64] |= 1 << (i % 64);
            }
        }
        Ok(mask)
    }

    /// Mask with every pixel set.
    pub fn full(width: u32, height: u32) -> Result<Self, MaskError> {
        let mut mask = Self::new(width, height)?;
        let len = mask.len();
        for w in mask.words.iter_mut() {
            *w = u64::MAX;
        }
        mask.clear_tail(len);
        Ok(mask)
    }

    fn clear_tail(&mut self, len: usize) {
        let rem = len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of pixels, `width * height`.
    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    fn index(&self, row: u32, col: u32) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row as usize * self.width as usize + col as usize
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        let i = self.index(row, col);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Like [`get`](Self::get) but treats out-of-range coordinates as unset.
    #[inline]
    pub fn get_signed(&self, row: i64, col: i64) -> bool {
        row >= 0
            && col >= 0
            && row < self.height as i64
            && col < self.width as i64
            && self.get(row as u32, col as u32)
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        let i = self.index(row, col);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Pixel at row-major linear index `i`.
    #[inline]
    pub fn get_linear(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Number of set pixels.
    pub fn area(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<(), MaskError> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(MaskError::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            })
        }
    }

    /// Iterates set pixels as `(row, col)` in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let width = self.width as usize;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                let i = wi * 64 + bit;
                Some(((i / width) as u32, (i % width) as u32))
            })
        })
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize, MaskError> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn union_area(&self, other: &BinaryMask) -> Result<usize, MaskError> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum())
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask, MaskError> {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask, MaskError> {
        self.zip_words(other, |a, b| a | b)
    }

    /// Pixels set in `self` but not in `other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask, MaskError> {
        self.zip_words(other, |a, b| a & !b)
    }

    fn zip_words(
        &self,
        other: &BinaryMask,
        op: impl Fn(u64, u64) -> u64,
    ) -> Result<BinaryMask, MaskError> {
        self.check_dims(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    /// Complement within the frame.
    pub fn not(&self) -> BinaryMask {
        let mut out = BinaryMask {
            width: self.width,
            height: self.height,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail(self.len());
        out
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_dims(other)
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }
}

/// Intersection over union. Two empty masks have IoU 1.
pub fn iou<T: Scalar>(a: &BinaryMask, b: &BinaryMask) -> Result<T, MaskError> {
    let inter = a.intersection_area(b)?;
    let union = a.union_area(b)?;
    if union == 0 {
        return Ok(T::one());
    }
    Ok(ratio(inter, union))
}

/// Tight bounding box of the set pixels, `None` for an empty mask.
pub fn bbox_of(mask: &BinaryMask) -> Option<BBox> {
    let mut it = mask.iter_set();
    let (r0, c0) = it.next()?;
    let (rmin, mut rmax, mut cmin, mut cmax) = (r0, r0, c0, c0);
    for (r, c) in it {
        // rows arrive in ascending order
        rmax = r;
        cmin = cmin.min(c);
        cmax = cmax.max(c);
    }
    Some(BBox::new(cmin, rmin, cmax - cmin + 1, rmax - rmin + 1))
}

/// Set pixels with at least one unset 4-neighbor, or lying on the image border.
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let mut out = BinaryMask::new(mask.width(), mask.height()).expect("source mask is non-degenerate");
    for (r, c) in mask.iter_set() {
        let (ri, ci) = (r as i64, c as i64);
        let edge = !mask.get_signed(ri - 1, ci)
            || !mask.get_signed(ri + 1, ci)
            || !mask.get_signed(ri, ci - 1)
            || !mask.get_signed(ri, ci + 1);
        if edge {
            out.set(r, c, true);
        }
    }
    out
}

/// Euclidean dilation: all pixels within distance `radius` of a set pixel.
///
/// Row-decomposed: a pixel at `(y, x)` is covered iff for some row offset
/// `dy` with `|dy| <= radius`, row `y + dy` has a set pixel within horizontal
/// distance `floor(sqrt(radius² - dy²))`.
pub fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 || mask.is_empty() {
        return mask.clone();
    }
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let r = radius as i64;
    // horizontal distance to the nearest set pixel in the same row
    let mut near = vec![u32::MAX; w * h];
    for y in 0..h {
        let row = &mut near[y * w..(y + 1) * w];
        let mut last: Option<usize> = None;
        for (x, slot) in row.iter_mut().enumerate() {
            if mask.get(y as u32, x as u32) {
                last = Some(x);
            }
            if let Some(l) = last {
                *slot = (x - l) as u32;
            }
        }
        last = None;
        for x in (0..w).rev() {
            if mask.get(y as u32, x as u32) {
                last = Some(x);
            }
            if let Some(l) = last {
                row[x] = row[x].min((l - x) as u32);
            }
        }
    }
    let reach: Vec<u32> = (-r..=r)
        .map(|dy| integer_sqrt((r * r - dy * dy) as u64) as u32)
        .collect();
    let mut out = mask.clone();
    for y in 0..h as i64 {
        for x in 0..w {
            if out.get(y as u32, x as u32) {
                continue;
            }
            let hit = (-r..=r).any(|dy| {
                let yy = y + dy;
                yy >= 0 && yy < h as i64 && near[yy as usize * w + x] <= reach[(dy + r) as usize]
            });
            if hit {
                out.set(y as u32, x as u32, true);
            }
        }
    }
    out
}

/// Morphological erosion with a Euclidean disk, as the dual of [`dilate`].
pub fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    // pixels outside the frame count as background
    let (w, h) = (mask.width(), mask.height());
    let padded = BinaryMask::from_fn(w + 2 * radius, h + 2 * radius, |r, c| {
        let (r, c) = (r as i64 - radius as i64, c as i64 - radius as i64);
        !mask.get_signed(r, c)
    })
    .expect("padded size is non-zero");
    let grown = dilate(&padded, radius);
    BinaryMask::from_fn(w, h, |r, c| !grown.get(r + radius, c + radius))
        .expect("source mask is non-degenerate")
}

pub(crate) fn integer_sqrt(n: u64) -> u64 {
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_with(w: u32, h: u32, pixels: &[(u32, u32)]) -> BinaryMask {
        let mut m = BinaryMask::new(w, h).unwrap();
        for &(r, c) in pixels {
            m.set(r, c, true);
        }
        m
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(BinaryMask::new(0, 3), Err(MaskError::ZeroSize { .. })));
    }

    #[test]
    fn area_and_full() {
        let m = BinaryMask::full(7, 11).unwrap();
        assert_eq!(m.area(), 77);
        assert!(BinaryMask::new(7, 11).unwrap().is_empty());
        assert_eq!(m.not().area(), 0);
    }

    #[test]
    fn iou_examples() {
        let a = BinaryMask::from_fn(4, 4, |r, c| r <= 1 && c <= 1).unwrap();
        let b = BinaryMask::from_fn(4, 4, |r, c| r <= 1 && (1..=2).contains(&c)).unwrap();
        let v: f64 = iou(&a, &b).unwrap();
        assert!((v - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(iou::<f64>(&a, &a).unwrap(), 1.0);
        let far = mask_with(4, 4, &[(3, 3)]);
        assert_eq!(iou::<f64>(&a, &far).unwrap(), 0.0);
        let empty = BinaryMask::new(4, 4).unwrap();
        assert_eq!(iou::<f32>(&empty, &empty).unwrap(), 1.0);
        let other = BinaryMask::new(5, 4).unwrap();
        assert!(matches!(
            iou::<f64>(&a, &other),
            Err(MaskError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bbox_examples() {
        assert_eq!(bbox_of(&mask_with(8, 8, &[(2, 3)])), Some(BBox::new(3, 2, 1, 1)));
        assert_eq!(bbox_of(&BinaryMask::full(5, 6).unwrap()), Some(BBox::new(0, 0, 5, 6)));
        // (row 0, col 0) and (row 4, col 5)
        assert_eq!(
            bbox_of(&mask_with(8, 8, &[(0, 0), (4, 5)])),
            Some(BBox::new(0, 0, 6, 5))
        );
        assert_eq!(bbox_of(&BinaryMask::new(3, 3).unwrap()), None);
    }

    #[test]
    fn boundary_examples() {
        let single = mask_with(5, 5, &[(2, 2)]);
        assert_eq!(boundary(&single), single);
        let square = BinaryMask::from_fn(10, 10, |r, c| (3..7).contains(&r) && (3..7).contains(&c)).unwrap();
        assert_eq!(boundary(&square).area(), 12);
        let empty = BinaryMask::new(4, 4).unwrap();
        assert!(boundary(&empty).is_empty());
        // pixels on the frame border count as boundary
        assert_eq!(boundary(&BinaryMask::full(3, 3).unwrap()).area(), 8);
    }

    #[test]
    fn dilate_examples() {
        let single = mask_with(7, 7, &[(3, 3)]);
        assert_eq!(dilate(&single, 0), single);
        let d1 = dilate(&single, 1);
        assert_eq!(d1.area(), 5);
        assert!(!d1.get(2, 2));
        assert!(d1.get(2, 3) && d1.get(3, 2) && d1.get(4, 3) && d1.get(3, 4));
        // radius 2 disk: 13 pixels
        assert_eq!(dilate(&single, 2).area(), 13);
        assert!(dilate(&BinaryMask::new(6, 6).unwrap(), 3).is_empty());
    }

    #[test]
    fn erode_is_dual_of_dilate() {
        let square = BinaryMask::from_fn(12, 12, |r, c| (2..10).contains(&r) && (2..10).contains(&c)).unwrap();
        let e = erode(&square, 1);
        assert_eq!(e.area(), 36);
        assert!(e.is_subset_of(&square));
        // border pixels erode away because the outside is background
        assert_eq!(erode(&BinaryMask::full(4, 4).unwrap(), 1).area(), 4);
    }

    #[test]
    fn iter_set_row_major() {
        let m = mask_with(70, 2, &[(1, 0), (0, 69), (0, 1)]);
        let got: Vec<_> = m.iter_set().collect();
        assert_eq!(got, vec![(0, 1), (0, 69), (1, 0)]);
    }

    #[test]
    fn integer_sqrt_exact() {
        for n in 0..2000u64 {
            let s = integer_sqrt(n);
            assert!(s * s <= n && (s + 1) * (s + 1) > n);
        }
    }
}
