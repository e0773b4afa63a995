//! PNG input/output, grayscale conversion, square cropping, bilinear
//! resizing and the periodic-plus-smooth decomposition.

use std::f64::consts::PI;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer as RawBuffer, Luma, Rgb, RgbImage};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Fft2, Image};

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Decoded image, one `height × width` plane per channel, values nominally
/// in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Image>,
}

impl ImageBuffer {
    pub fn from_gray(plane: Image) -> Self {
        let (height, width) = plane.dim();
        Self {
            width,
            height,
            channels: vec![plane],
        }
    }

    pub fn from_rgb(planes: [Image; 3]) -> Result<Self> {
        let dim = planes[0].dim();
        if let Some(p) = planes.iter().find(|p| p.dim() != dim) {
            return Err(Error::ShapeMismatch {
                expected: dim,
                actual: p.dim(),
            });
        }
        Ok(Self {
            width: dim.1,
            height: dim.0,
            channels: planes.to_vec(),
        })
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn is_gray(&self) -> bool {
        self.channels.len() == 1
    }

    /// Luma `0.299 R + 0.587 G + 0.114 B`; gray images are returned as is.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.is_gray() {
            return self.clone();
        }
        let mut plane = Image::zeros((self.height, self.width));
        for (c, w) in self.channels.iter().zip(LUMA_WEIGHTS) {
            plane.scaled_add(w, c);
        }
        Self::from_gray(plane)
    }

    fn map_channels(&self, f: impl Fn(&Image) -> Image) -> ImageBuffer {
        let channels: Vec<Image> = self.channels.iter().map(f).collect();
        let (height, width) = channels[0].dim();
        Self {
            width,
            height,
            channels,
        }
    }
}

/// Reads an 8- or 16-bit PNG (or any format the `image` crate decodes with
/// the enabled features). Alpha is dropped.
pub fn load(path: &Path) -> Result<ImageBuffer> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(from_dynamic(&img))
}

pub fn from_dynamic(img: &DynamicImage) -> ImageBuffer {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb32f();
        let planes = [0, 1, 2].map(|c| Image::from_shape_fn((h, w), |(i, j)| rgb.get_pixel(j as u32, i as u32)[c] as f64));
        ImageBuffer::from_rgb(planes).expect("equal planes")
    } else {
        let luma = img.to_luma32f();
        ImageBuffer::from_gray(Image::from_shape_fn((h, w), |(i, j)| luma.get_pixel(j as u32, i as u32)[0] as f64))
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit PNG; values are clamped to `[0, 1]`.
pub fn save(path: &Path, buf: &ImageBuffer) -> Result<()> {
    let (w, h) = (buf.width as u32, buf.height as u32);
    let wrap = |source| Error::Image {
        path: path.to_path_buf(),
        source,
    };
    match buf.channels.as_slice() {
        [g] => {
            let img: GrayImage = RawBuffer::from_fn(w, h, |x, y| Luma([to_u8(g[[y as usize, x as usize]])]));
            img.save(path).map_err(wrap)
        }
        [r, g, b] => {
            let img: RgbImage = RawBuffer::from_fn(w, h, |x, y| {
                let (i, j) = (y as usize, x as usize);
                Rgb([to_u8(r[[i, j]]), to_u8(g[[i, j]]), to_u8(b[[i, j]])])
            });
            img.save(path).map_err(wrap)
        }
        other => Err(Error::InvalidConfig(format!("cannot write {} channels", other.len()))),
    }
}

pub fn save_gray(path: &Path, plane: &Image) -> Result<()> {
    save(path, &ImageBuffer::from_gray(plane.clone()))
}

/// Largest centered square.
pub fn center_crop(plane: &Image) -> Image {
    let (h, w) = plane.dim();
    let side = h.min(w);
    let (top, left) = ((h - side) / 2, (w - side) / 2);
    plane.slice(ndarray::s![top..top + side, left..left + side]).to_owned()
}

/// Bilinear resampling with pixel centers aligned; edges are clamped.
pub fn resize_bilinear(plane: &Image, height: usize, width: usize) -> Image {
    let (h, w) = plane.dim();
    if (h, w) == (height, width) {
        return plane.clone();
    }
    let coord = |i: usize, src: usize, dst: usize| {
        let c = (i as f64 + 0.5) * src as f64 / dst as f64 - 0.5;
        let c = c.clamp(0.0, (src - 1) as f64);
        let lo = c.floor() as usize;
        let hi = (lo + 1).min(src - 1);
        (lo, hi, c - lo as f64)
    };
    let rows: Vec<_> = (0..height).map(|i| coord(i, h, height)).collect();
    let cols: Vec<_> = (0..width).map(|j| coord(j, w, width)).collect();
    Image::from_shape_fn((height, width), |(i, j)| {
        let (r0, r1, fr) = rows[i];
        let (c0, c1, fc) = cols[j];
        let top = plane[[r0, c0]] * (1.0 - fc) + plane[[r0, c1]] * fc;
        let bottom = plane[[r1, c0]] * (1.0 - fc) + plane[[r1, c1]] * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

/// Squared boundary jumps `Σ|x(0,·) − x(N−1,·)|² + Σ|x(·,0) − x(·,N−1)|²`.
pub fn boundary_jump_energy(x: &Image) -> f64 {
    let (h, w) = x.dim();
    let rows: f64 = (0..w).map(|j| (x[[0, j]] - x[[h - 1, j]]).powi(2)).sum();
    let cols: f64 = (0..h).map(|i| (x[[i, 0]] - x[[i, w - 1]]).powi(2)).sum();
    rows + cols
}

/// Periodic-plus-smooth split `x = p + s` of a square image: `s` solves a
/// discrete Poisson problem driven by the boundary jumps and has zero mean.
pub fn periodic_smooth(x: &Image) -> Result<(Image, Image)> {
    let (h, w) = x.dim();
    if h != w || h == 0 {
        return Err(Error::ShapeMismatch {
            expected: (h.max(w), h.max(w)),
            actual: (h, w),
        });
    }
    let n = h;
    let mut v = Image::zeros((n, n));
    for j in 0..n {
        let d = x[[n - 1, j]] - x[[0, j]];
        v[[0, j]] += d;
        v[[n - 1, j]] -= d;
    }
    for i in 0..n {
        let d = x[[i, n - 1]] - x[[i, 0]];
        v[[i, 0]] += d;
        v[[i, n - 1]] -= d;
    }
    let fft = Fft2::new(n);
    let mut s_hat = fft.forward(&v);
    for ((a, b), c) in s_hat.indexed_iter_mut() {
        let denom = 2.0 * (2.0 * PI * a as f64 / n as f64).cos() + 2.0 * (2.0 * PI * b as f64 / n as f64).cos() - 4.0;
        *c = if a == 0 && b == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            *c / denom
        };
    }
    let s = fft.inverse_real(&s_hat);
    Ok((x - &s, s))
}

/// Center-crops to a square, resizes to `size × size` and optionally
/// replaces every channel by its periodic component.
pub fn prepare(buf: &ImageBuffer, size: usize, periodize: bool) -> Result<ImageBuffer> {
    if size == 0 {
        return Err(Error::InvalidConfig("target size must be positive".into()));
    }
    let resized = buf.map_channels(|c| resize_bilinear(&center_crop(c), size, size));
    if !periodize {
        return Ok(resized);
    }
    let channels = resized
        .channels
        .iter()
        .map(|c| periodic_smooth(c).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageBuffer {
        width: size,
        height: size,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_to_same_size_is_identity() {
        let x = Image::from_shape_fn((5, 5), |(i, j)| (i * 5 + j) as f64);
        assert_eq!(resize_bilinear(&x, 5, 5), x);
    }

    #[test]
    fn downsample_by_two_averages_pairs() {
        let x = Image::from_shape_fn((4, 4), |(i, j)| (i * 4 + j) as f64);
        let y = resize_bilinear(&x, 2, 2);
        assert!((y[[0, 0]] - (0.0 + 1.0 + 4.0 + 5.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn crop_keeps_centre() {
        let x = Image::from_shape_fn((4, 6), |(i, j)| (i * 6 + j) as f64);
        let c = center_crop(&x);
        assert_eq!(c.dim(), (4, 4));
        assert_eq!(c[[0, 0]], 1.0);
    }

    #[test]
    fn luma_of_gray_triplet_is_same_gray() {
        let p = Image::from_elem((2, 2), 0.4);
        let buf = ImageBuffer::from_rgb([p.clone(), p.clone(), p.clone()]).unwrap();
        assert!(buf.to_gray().channels[0].iter().all(|&v| (v - 0.4).abs() < 1e-15));
    }

    #[test]
    fn decomposition_adds_back() {
        let x = Image::from_shape_fn((16, 16), |(i, j)| (i as f64 * 0.3).sin() + j as f64 / 16.0);
        let (p, s) = periodic_smooth(&x).unwrap();
        assert!((&p + &s - &x).iter().all(|v| v.abs() < 1e-12));
        assert!(s.sum().abs() < 1e-10);
        assert!(boundary_jump_energy(&p) <= boundary_jump_energy(&x));
    }
}
