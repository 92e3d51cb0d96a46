use super::{bbox_of, BBox, BinaryMask, MaskError};

/// 8-bit RGB image, row-major, 3 bytes per pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FrameImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for FrameImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FrameImage({}x{})", self.width, self.height)
    }
}

impl FrameImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroSize { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(MaskError::BufferLength {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, MaskError> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgb.repeat(n))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> [u8; 3] {
        let i = (row as usize * self.width as usize + col as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, row: u32, col: u32, rgb: [u8; 3]) {
        let i = (row as usize * self.width as usize + col as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies the region `b`, which must lie inside the image.
    pub fn sub_image(&self, b: BBox) -> FrameImage {
        debug_assert!(b.right() <= self.width && b.bottom() <= self.height);
        let mut pixels = Vec::with_capacity(b.w as usize * b.h as usize * 3);
        for row in b.y..b.bottom() {
            let start = (row as usize * self.width as usize + b.x as usize) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + b.w as usize * 3]);
        }
        FrameImage {
            width: b.w,
            height: b.h,
            pixels,
        }
    }
}

/// Square RGB patch fed to an embedder.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Patch {
    side: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Patch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Patch({0}x{0})", self.side)
    }
}

impl Patch {
    pub fn new(side: u32, pixels: Vec<u8>) -> Result<Self, MaskError> {
        let img = FrameImage::new(side, side, pixels)?;
        Ok(Patch {
            side,
            pixels: img.pixels,
        })
    }

    pub fn from_image(img: FrameImage) -> Result<Self, MaskError> {
        if img.width != img.height {
            return Err(MaskError::NotSquare {
                width: img.width,
                height: img.height,
            });
        }
        Ok(Patch {
            side: img.width,
            pixels: img.pixels,
        })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> [u8; 3] {
        let i = (row as usize * self.side as usize + col as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, row: u32, col: u32, rgb: [u8; 3]) {
        let i = (row as usize * self.side as usize + col as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Parameters shared by every stage that turns an object mask into a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropParams {
    /// Fractional padding added on each side of the mask's bounding box.
    pub pad_ratio: f64,
    /// Side of the square patch.
    pub patch_side: u32,
}

impl Default for CropParams {
    fn default() -> Self {
        Self {
            pad_ratio: 0.1,
            patch_side: 16,
        }
    }
}

/// Crops `image` to the mask's bounding box grown by `pad_ratio` on each
/// side (`round(pad_ratio * w)` columns, `round(pad_ratio * h)` rows, clamped
/// to the frame). Pixels outside the mask are replaced by the mean colour of
/// the masked pixels, rounded to the nearest integer per channel.
pub fn masked_crop(
    image: &FrameImage,
    mask: &BinaryMask,
    pad_ratio: f64,
) -> Result<FrameImage, MaskError> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(MaskError::DimensionMismatch {
            left: (image.width(), image.height()),
            right: (mask.width(), mask.height()),
        });
    }
    if !(pad_ratio.is_finite() && pad_ratio >= 0.0) {
        return Err(MaskError::InvalidParameter(format!(
            "pad_ratio must be finite and non-negative, got {pad_ratio}"
        )));
    }
    let b = bbox_of(mask).ok_or(MaskError::EmptyMask)?;
    let pad_x = (pad_ratio * b.w as f64).round() as u32;
    let pad_y = (pad_ratio * b.h as f64).round() as u32;
    let x0 = b.x.saturating_sub(pad_x);
    let y0 = b.y.saturating_sub(pad_y);
    let x1 = (b.right() + pad_x).min(image.width());
    let y1 = (b.bottom() + pad_y).min(image.height());
    let region = BBox::new(x0, y0, x1 - x0, y1 - y0);

    let mut sums = [0u64; 3];
    let mut n = 0u64;
    for (r, c) in mask.iter_set() {
        let px = image.get(r, c);
        for k in 0..3 {
            sums[k] += px[k] as u64;
        }
        n += 1;
    }
    let mean = sums.map(|s| ((2 * s + n) / (2 * n)) as u8);

    let mut crop = image.sub_image(region);
    for row in 0..region.h {
        for col in 0..region.w {
            if !mask.get(region.y + row, region.x + col) {
                crop.put(row, col, mean);
            }
        }
    }
    Ok(crop)
}

/// Bilinear resize to a `side`×`side` patch (half-pixel centres, i.e.
/// align-corners = false).
///
/// For output index `i` along an axis of input length `n`, the source
/// coordinate is `s = (i + 0.5) * n / side - 0.5`, clamped to `[0, n - 1]`.
/// With `i0 = floor(s)`, `i1 = min(i0 + 1, n - 1)` and `t = s - i0`, the two
/// axes are blended as `(1-ty)((1-tx)p00 + tx p01) + ty((1-tx)p10 + tx p11)`
/// in `f64` and rounded to the nearest integer (halves away from zero).
pub fn resize_patch(crop: &FrameImage, side: u32) -> Result<Patch, MaskError> {
    if side == 0 {
        return Err(MaskError::ZeroSize {
            width: side,
            height: side,
        });
    }
    let xs = axis_samples(crop.width(), side);
    let ys = axis_samples(crop.height(), side);
    let mut out = Patch {
        side,
        pixels: vec![0; side as usize * side as usize * 3],
    };
    for (orow, &(y0, y1, ty)) in ys.iter().enumerate() {
        for (ocol, &(x0, x1, tx)) in xs.iter().enumerate() {
            let p00 = crop.get(y0, x0);
            let p01 = crop.get(y0, x1);
            let p10 = crop.get(y1, x0);
            let p11 = crop.get(y1, x1);
            let mut px = [0u8; 3];
            for k in 0..3 {
                let top = (1.0 - tx) * p00[k] as f64 + tx * p01[k] as f64;
                let bottom = (1.0 - tx) * p10[k] as f64 + tx * p11[k] as f64;
                let v = (1.0 - ty) * top + ty * bottom;
                px[k] = v.round().clamp(0.0, 255.0) as u8;
            }
            out.put(orow as u32, ocol as u32, px);
        }
    }
    Ok(out)
}

fn axis_samples(input: u32, output: u32) -> Vec<(u32, u32, f64)> {
    let scale = input as f64 / output as f64;
    let max = (input - 1) as f64;
    (0..output)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = s.floor();
            let i1 = (i0 + 1.0).min(max);
            (i0 as u32, i1 as u32, s - i0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RED: [u8; 3] = [255, 0, 0];
    const BLUE: [u8; 3] = [0, 0, 255];

    fn gradient(w: u32, h: u32) -> FrameImage {
        let mut img = FrameImage::filled(w, h, [0, 0, 0]).unwrap();
        for r in 0..h {
            for c in 0..w {
                img.put(r, c, [(r * 10) as u8, (c * 10) as u8, ((r + c) * 3) as u8]);
            }
        }
        img
    }

    #[test]
    fn crop_full_frame_is_copy() {
        let img = gradient(9, 7);
        let full = BinaryMask::full(9, 7).unwrap();
        assert_eq!(masked_crop(&img, &full, 0.0).unwrap(), img);
    }

    #[test]
    fn crop_center_object() {
        let img = gradient(6, 6);
        let m = BinaryMask::from_fn(6, 6, |r, c| (2..4).contains(&r) && (2..4).contains(&c)).unwrap();
        let crop = masked_crop(&img, &m, 0.0).unwrap();
        assert_eq!((crop.width(), crop.height()), (2, 2));
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(crop.get(r, c), img.get(r + 2, c + 2));
            }
        }
    }

    #[test]
    fn crop_fills_with_masked_mean() {
        let mut img = FrameImage::filled(20, 20, BLUE).unwrap();
        let m = BinaryMask::from_fn(20, 20, |r, c| (r as i32 - 10).pow(2) + (c as i32 - 9).pow(2) <= 9).unwrap();
        for (r, c) in m.iter_set() {
            img.put(r, c, RED);
        }
        let crop = masked_crop(&img, &m, 0.5).unwrap();
        // 7x7 disk grown by round(3.5) = 4 on each side
        assert_eq!((crop.width(), crop.height()), (15, 15));
        assert!(crop.pixels().chunks(3).all(|p| p == RED));
    }

    #[test]
    fn crop_padding_clamps_to_frame() {
        let img = gradient(10, 10);
        let m = BinaryMask::from_fn(10, 10, |r, c| r < 2 && c < 3).unwrap();
        let crop = masked_crop(&img, &m, 1.0).unwrap();
        assert_eq!((crop.width(), crop.height()), (6, 4));
    }

    #[test]
    fn crop_errors() {
        let img = gradient(4, 4);
        let empty = BinaryMask::new(4, 4).unwrap();
        assert_eq!(masked_crop(&img, &empty, 0.1), Err(MaskError::EmptyMask));
        let other = BinaryMask::full(5, 4).unwrap();
        assert!(matches!(
            masked_crop(&img, &other, 0.1),
            Err(MaskError::DimensionMismatch { .. })
        ));
        let full = BinaryMask::full(4, 4).unwrap();
        assert!(matches!(
            masked_crop(&img, &full, -0.5),
            Err(MaskError::InvalidParameter(_))
        ));
    }

    #[test]
    fn resize_identity() {
        let img = gradient(5, 5);
        let p = resize_patch(&img, 5).unwrap();
        assert_eq!(p.pixels(), img.pixels());
    }

    #[test]
    fn resize_preserves_constant() {
        for (w, h) in [(1, 1), (3, 17), (40, 9), (13, 13)] {
            let img = FrameImage::filled(w, h, [17, 200, 93]).unwrap();
            let p = resize_patch(&img, 16).unwrap();
            assert!(p.pixels().chunks(3).all(|px| px == [17, 200, 93]), "{w}x{h}");
        }
    }

    #[test]
    fn resize_two_pixel_row() {
        // 2 wide, 1 tall: black | white
        let img = FrameImage::new(2, 1, vec![0, 0, 0, 255, 255, 255]).unwrap();
        // side 2: x samples at s = 0 and 1 exactly; the single row is repeated
        let p = resize_patch(&img, 2).unwrap();
        for r in 0..2 {
            assert_eq!(p.get(r, 0), [0, 0, 0]);
            assert_eq!(p.get(r, 1), [255, 255, 255]);
        }
        // side 4: s = -0.25 -> 0, 0.25, 0.75, 1.25 -> 1; 0.25*255 = 63.75 -> 64
        let p = resize_patch(&img, 4).unwrap();
        let row: Vec<u8> = (0..4).map(|c| p.get(0, c)[0]).collect();
        assert_eq!(row, vec![0, 64, 191, 255]);
        assert_eq!(p.get(3, 2), p.get(0, 2));
    }
}
