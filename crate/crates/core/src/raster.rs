//! Image buffers in linear light, binary masks, and the 8-bit transfer function.

use std::path::Path;
use std::sync::OnceLock;

use image::{GrayImage, Luma, RgbImage};

use crate::error::{Error, Result};

/// Display gamma of the compositing transfer function (pure power law).
pub const GAMMA: f64 = 2.2;

fn decode_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [0.0; 256];
        for (i, v) in lut.iter_mut().enumerate() {
            *v = (i as f64 / 255.0).powf(GAMMA);
        }
        lut
    })
}

/// 8-bit code value to linear light in `[0, 1]`.
#[inline]
pub fn decode(code: u8) -> f64 {
    decode_lut()[code as usize]
}

/// Linear light to an 8-bit code value; clips to `[0, 1]` first.
#[inline]
pub fn encode(linear: f64) -> u8 {
    let v = linear.clamp(0.0, 1.0).powf(1.0 / GAMMA);
    (v * 255.0).round() as u8
}

/// Single-channel floating point image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Three-channel linear-light image, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRgb {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl LinearRgb {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 3]; width * height],
        }
    }

    pub fn from_srgb8(img: &RgbImage) -> Self {
        let data = img
            .pixels()
            .map(|p| [decode(p[0]), decode(p[1]), decode(p[2])])
            .collect();
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data,
        }
    }

    pub fn to_srgb8(&self) -> RgbImage {
        let mut out = RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in out.pixels_mut().zip(&self.data) {
            dst.0 = [encode(src[0]), encode(src[1]), encode(src[2])];
        }
        out
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn same_size(&self, other: &LinearRgb) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn add_assign(&mut self, other: &LinearRgb) {
        assert!(self.same_size(other), "image size mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for c in 0..3 {
                a[c] += b[c];
            }
        }
    }

    pub fn channel(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|p| p[c]).collect(),
        }
    }

    pub fn from_channels(r: &Plane, g: &Plane, b: &Plane) -> Self {
        let data = r
            .data
            .iter()
            .zip(&g.data)
            .zip(&b.data)
            .map(|((&r, &g), &b)| [r, g, b])
            .collect();
        Self {
            width: r.width,
            height: r.height,
            data,
        }
    }

    pub fn max_component(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|p| p.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Binary mask, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn intersects(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).any(|(&a, &b)| a && b)
    }

    pub fn to_gray8(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if self.get(x as usize, y as usize) { 255 } else { 0 }])
        })
    }

    pub fn from_gray8(img: &GrayImage) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.pixels().map(|p| p[0] >= 128).collect(),
        }
    }

    /// Bounding boxes of the 8-connected components.
    pub fn component_boxes(&self) -> Vec<BoundingBox> {
        let (w, h) = (self.width, self.height);
        let mut seen = vec![false; w * h];
        let mut boxes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..w * h {
            if !self.data[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut bb = BoundingBox {
                x0: start % w,
                y0: start / w,
                x1: start % w,
                y1: start / w,
            };
            while let Some(i) = stack.pop() {
                let (x, y) = (i % w, i / w);
                bb.x0 = bb.x0.min(x);
                bb.x1 = bb.x1.max(x);
                bb.y0 = bb.y0.min(y);
                bb.y1 = bb.y1.max(y);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let j = ny as usize * w + nx as usize;
                        if self.data[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            boxes.push(bb);
        }
        boxes
    }

    /// Mask covering the union of the component bounding boxes.
    pub fn box_hull(&self) -> Mask {
        let mut out = Mask::empty(self.width, self.height);
        for bb in self.component_boxes() {
            for y in bb.y0..=bb.y1 {
                for x in bb.x0..=bb.x1 {
                    out.data[y * self.width + x] = true;
                }
            }
        }
        out
    }
}

pub fn load_rgb8(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}

pub fn load_gray8(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_luma8())
}

pub fn save_png<P, C>(img: &image::ImageBuffer<P, C>, path: &Path) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Scales `img` to cover `size × size` and center-crops the excess.
pub fn fit_square(img: &RgbImage, size: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    if w == size && h == size {
        return img.clone();
    }
    let scale = size as f64 / w.min(h) as f64;
    let nw = ((w as f64 * scale).round() as u32).max(size);
    let nh = ((h as f64 * scale).round() as u32).max(size);
    let resized = image::imageops::resize(img, nw, nh, image::imageops::FilterType::Triangle);
    image::imageops::crop_imm(&resized, (nw - size) / 2, (nh - size) / 2, size, size).to_image()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_roundtrip_through_linear() {
        for code in 0..=255u8 {
            assert_eq!(encode(decode(code)), code);
        }
    }

    #[test]
    fn encode_clips() {
        assert_eq!(encode(7.5), 255);
        assert_eq!(encode(-1.0), 0);
    }

    #[test]
    fn components_are_separated() {
        let mut m = Mask::empty(8, 8);
        m.data[0] = true;
        m.data[9] = true; // diagonal neighbour of (0,0)
        m.data[8 * 6 + 6] = true;
        let boxes = m.component_boxes();
        assert_eq!(boxes.len(), 2);
        assert_eq!(
            boxes[0],
            BoundingBox {
                x0: 0,
                y0: 0,
                x1: 1,
                y1: 1
            }
        );
        assert_eq!(m.box_hull().count(), 5);
    }

    #[test]
    fn fit_square_crops_center() {
        let img = RgbImage::from_fn(40, 20, |x, _| image::Rgb([x as u8, 0, 0]));
        let out = fit_square(&img, 20);
        assert_eq!(out.dimensions(), (20, 20));
        assert_eq!(out.get_pixel(0, 0)[0], 10);
    }
}
