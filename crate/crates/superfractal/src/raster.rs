//! Discrete screens: a binary raster for set attractors, a mass raster for
//! measure attractors, and an RGB raster for colour renders, all tied to a
//! rectangular frame of the plane. Exports are binary PGM (P5) / PPM (P6),
//! row-major with the top row first; set pixels export as 255 on black, and
//! measure mass maps through m ↦ round(255·(m/m_max)^γ).

use crate::error::{invalid, Result};
use crate::geometry::Point2;

/// Default display gamma for measure exports.
pub const GAMMA_DISPLAY: f64 = 0.5;

/// The axis-aligned rectangle of the plane a raster discretizes. Row 0 of a
/// raster is the strip touching `y_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

pub const UNIT_FRAME: Frame = Frame {
    x_min: 0.0,
    x_max: 1.0,
    y_min: 0.0,
    y_max: 1.0,
};

impl Frame {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Frame> {
        if !(x_min < x_max && y_min < y_max)
            || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
        {
            return Err(invalid(format!(
                "Frame: degenerate bounds [{x_min}, {x_max}] × [{y_min}, {y_max}]"
            )));
        }
        Ok(Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Pixel (col, row) containing `p`, or None outside the frame. The upper
    /// x/y boundaries are folded into the last column / top row so attractor
    /// extremes are not dropped.
    pub fn pixel_of(&self, p: Point2, width: usize, height: usize) -> Option<(usize, usize)> {
        let tx = (p.x - self.x_min) / (self.x_max - self.x_min);
        let ty = (self.y_max - p.y) / (self.y_max - self.y_min);
        if !(0.0..=1.0).contains(&tx) || !(0.0..=1.0).contains(&ty) {
            return None;
        }
        let col = ((tx * width as f64) as usize).min(width - 1);
        let row = ((ty * height as f64) as usize).min(height - 1);
        Some((col, row))
    }

    pub fn center(&self, col: usize, row: usize, width: usize, height: usize) -> Point2 {
        let dx = (self.x_max - self.x_min) / width as f64;
        let dy = (self.y_max - self.y_min) / height as f64;
        Point2::new(
            self.x_min + (col as f64 + 0.5) * dx,
            self.y_max - (row as f64 + 0.5) * dy,
        )
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("raster: zero dimension {width}×{height}")));
    }
    Ok(())
}

/// One bit per pixel, packed; equality and popcount are word-wise.
#[derive(Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub frame: Frame,
    words: Vec<u64>,
}

impl Raster {
    pub fn empty(width: usize, height: usize, frame: Frame) -> Result<Raster> {
        check_dims(width, height)?;
        Ok(Raster {
            width,
            height,
            frame,
            words: vec![0; (width * height + 63) / 64],
        })
    }

    pub fn full(width: usize, height: usize, frame: Frame) -> Result<Raster> {
        let mut r = Raster::empty(width, height, frame)?;
        for w in r.words.iter_mut() {
            *w = u64::MAX;
        }
        let tail = width * height % 64;
        if tail != 0 {
            *r.words.last_mut().unwrap() = (1u64 << tail) - 1;
        }
        Ok(r)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        let i = row * self.width + col;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize) {
        let i = row * self.width + col;
        self.words[i / 64] |= 1 << (i % 64);
    }

    /// Sets the pixel containing `p`, ignoring points outside the frame.
    pub fn set_point(&mut self, p: Point2) {
        if let Some((c, r)) = self.frame.pixel_of(p, self.width, self.height) {
            self.set(c, r);
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.frame == other.frame
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
            .filter(move |i| *i < self.width * self.height)
            .map(move |i| (i % self.width, i / self.width))
        })
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend((0..self.height).flat_map(|r| {
            (0..self.width).map(move |c| if self.get(c, r) { 255u8 } else { 0u8 })
        }));
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Raster({}×{}, {} set, frame {:?})",
            self.width,
            self.height,
            self.count(),
            self.frame
        )
    }
}

/// Nonnegative mass per pixel; a discretized measure once normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureRaster {
    pub width: usize,
    pub height: usize,
    pub frame: Frame,
    pub mass: Vec<f64>,
}

impl MeasureRaster {
    pub fn zero(width: usize, height: usize, frame: Frame) -> Result<MeasureRaster> {
        check_dims(width, height)?;
        Ok(MeasureRaster {
            width,
            height,
            frame,
            mass: vec![0.0; width * height],
        })
    }

    /// Unit mass in the pixel containing `p`.
    pub fn point_mass(
        width: usize,
        height: usize,
        frame: Frame,
        p: Point2,
    ) -> Result<MeasureRaster> {
        let mut m = MeasureRaster::zero(width, height, frame)?;
        match frame.pixel_of(p, width, height) {
            Some((c, r)) => m.mass[r * width + c] = 1.0,
            None => {
                return Err(invalid(format!(
                    "point_mass: ({}, {}) outside the frame",
                    p.x, p.y
                )))
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.mass[row * self.width + col]
    }

    /// Adds mass to the pixel containing `p`; mass falling outside the frame
    /// is dropped (callers detect the loss as total-mass drift).
    pub fn add_at_point(&mut self, p: Point2, m: f64) {
        if let Some((c, r)) = self.frame.pixel_of(p, self.width, self.height) {
            self.mass[r * self.width + c] += m;
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total_mass();
        if total <= 0.0 {
            return Err(invalid(format!("normalize: total mass {total} not positive")));
        }
        for m in self.mass.iter_mut() {
            *m /= total;
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &MeasureRaster) -> bool {
        self.width == other.width && self.height == other.height && self.frame == other.frame
    }

    pub fn to_pgm(&self, gamma: f64) -> Vec<u8> {
        let max = self.mass.iter().cloned().fold(0.0f64, f64::max);
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.mass.iter().map(|&m| {
            if max <= 0.0 {
                0u8
            } else {
                (255.0 * (m / max).powf(gamma)).round() as u8
            }
        }));
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<std::path::Path>, gamma: f64) -> Result<()> {
        std::fs::write(path, self.to_pgm(gamma))?;
        Ok(())
    }
}

/// 8-bit RGB per pixel, for colour-stealing renders and texture demos.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorRaster {
    pub width: usize,
    pub height: usize,
    pub frame: Frame,
    pub rgb: Vec<[u8; 3]>,
}

impl ColorRaster {
    pub fn black(width: usize, height: usize, frame: Frame) -> Result<ColorRaster> {
        check_dims(width, height)?;
        Ok(ColorRaster {
            width,
            height,
            frame,
            rgb: vec![[0, 0, 0]; width * height],
        })
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> [u8; 3] {
        self.rgb[row * self.width + col]
    }

    #[inline]
    pub fn put(&mut self, col: usize, row: usize, c: [u8; 3]) {
        self.rgb[row * self.width + col] = c;
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.rgb.iter().flatten());
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_ppm())?;
        Ok(())
    }
}
