//! Square rasters over the equal-area projection disk, and 8-bit images.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sphere::{lambert_inverse, DiskCoord, SpherePoint, DISK_RADIUS};

/// A `resolution x resolution` pixel grid spanning the projection disk.
///
/// Row 0 is the top of the image (`v = +sqrt 2`), column 0 the left
/// (`u = -sqrt 2`). Every in-disk pixel covers the same spherical area.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelGrid {
    resolution: usize,
}

impl PixelGrid {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self, index: usize) -> DiskCoord {
        let (row, col) = (index / self.resolution, index % self.resolution);
        let step = 2.0 * DISK_RADIUS / self.resolution as f64;
        DiskCoord::new(
            -DISK_RADIUS + (col as f64 + 0.5) * step,
            DISK_RADIUS - (row as f64 + 0.5) * step,
        )
    }

    /// Hemisphere point under the pixel centre, `None` outside the disk.
    pub fn point(&self, index: usize) -> Option<SpherePoint> {
        let c = self.center(index);
        if c.u * c.u + c.v * c.v > 2.0 {
            return None;
        }
        lambert_inverse(c).ok()
    }

    /// Number of pixels whose centre lies in the disk.
    pub fn disk_pixels(&self) -> usize {
        (0..self.len()).filter(|&i| self.point(i).is_some()).count()
    }
}

/// 8-bit RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

pub const WHITE: [u8; 3] = [255, 255, 255];

impl RasterImage {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        let rgb = color.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, rgb }
    }

    pub fn pixel(&self, index: usize) -> [u8; 3] {
        let o = 3 * index;
        [self.rgb[o], self.rgb[o + 1], self.rgb[o + 2]]
    }

    pub fn set_pixel(&mut self, index: usize, color: [u8; 3]) {
        let o = 3 * index;
        self.rgb[o..o + 3].copy_from_slice(&color);
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_ppm())?;
        f.flush()?;
        Ok(())
    }

    pub fn read_ppm(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::InvalidArgument("malformed P6 image".into());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad());
        }
        let width: usize = fields[1].parse().map_err(|_| bad())?;
        let height: usize = fields[2].parse().map_err(|_| bad())?;
        let rgb = bytes.get(pos + 1..).ok_or_else(bad)?.to_vec();
        if rgb.len() != width * height * 3 {
            return Err(bad());
        }
        Ok(Self { width, height, rgb })
    }
}

/// HSL to 8-bit RGB; `hue` in degrees, `saturation` and `lightness` in [0, 1].
pub fn hsl_to_rgb(hue: f64, saturation: f64, lightness: f64) -> [u8; 3] {
    let c = (1.0 - (2.0 * lightness - 1.0).abs()) * saturation;
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = lightness - c / 2.0;
    let to8 = |v: f64| ((v + m).clamp(0.0, 1.0) * 255.0).round() as u8;
    [to8(r), to8(g), to8(b)]
}

pub fn gray(value: f64) -> [u8; 3] {
    let g = (value.clamp(0.0, 1.0) * 255.0).round() as u8;
    [g, g, g]
}
