//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical size of one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelSpacing {
    dx_mm: f64,
    dy_mm: f64,
}

impl PixelSpacing {
    pub fn new(dx_mm: f64, dy_mm: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(dx_mm) || !ok(dy_mm) {
            return Err(Error::InvalidSpacing { dx_mm, dy_mm });
        }
        Ok(Self { dx_mm, dy_mm })
    }

    pub fn isotropic(mm: f64) -> Result<Self> {
        Self::new(mm, mm)
    }

    /// Width of one pixel column.
    pub fn dx_mm(&self) -> f64 {
        self.dx_mm
    }

    /// Height of one pixel row.
    pub fn dy_mm(&self) -> f64 {
        self.dy_mm
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dx_mm * factor, self.dy_mm * factor)
    }
}

/// Imaging plane of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneKind {
    Axial,
    Sagittal,
}

impl PlaneKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlaneKind::Axial => "axial",
            PlaneKind::Sagittal => "sagittal",
        }
    }
}

impl fmt::Display for PlaneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One binary segmentation mask, stored row-major.
///
/// Pixel `(row, col)` has its center at `(col * dx_mm, row * dy_mm)` in
/// physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMask {
    width: usize,
    height: usize,
    spacing: PixelSpacing,
    pixels: Vec<bool>,
}

impl FrameMask {
    pub fn empty(width: usize, height: usize, spacing: PixelSpacing) -> Result<Self> {
        Self::from_pixels(width, height, spacing, vec![false; width * height])
    }

    /// Builds a mask from a row-major foreground buffer of `width * height` entries.
    pub fn from_pixels(
        width: usize,
        height: usize,
        spacing: PixelSpacing,
        pixels: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidMask(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidMask(format!(
                "buffer holds {} pixels, expected {}",
                pixels.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            spacing,
            pixels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        spacing: PixelSpacing,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::from_pixels(width, height, spacing, pixels)
    }

    /// Builds a mask from a list of `(row, col)` foreground coordinates.
    pub fn from_foreground(
        width: usize,
        height: usize,
        spacing: PixelSpacing,
        foreground: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut mask = Self::empty(width, height, spacing)?;
        for (row, col) in foreground {
            if row >= height || col >= width {
                return Err(Error::InvalidMask(format!(
                    "foreground pixel ({row}, {col}) outside {width}x{height} frame"
                )));
            }
            mask.pixels[row * width + col] = true;
        }
        Ok(mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> PixelSpacing {
        self.spacing
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    /// Foreground test; coordinates outside the frame read as background.
    #[inline]
    pub fn get(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            return false;
        }
        self.pixels[row as usize * self.width + col as usize]
    }

    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width && self.pixels[row * self.width + col]
    }

    /// Foreground coordinates in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(move |(i, _)| (i / width, i % width))
    }

    pub fn area_px(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.pixels.iter().any(|&p| p)
    }

    pub fn same_geometry(&self, other: &FrameMask) -> bool {
        self.width == other.width && self.height == other.height && self.spacing == other.spacing
    }

    /// Same pixels, different physical spacing.
    pub fn with_spacing(&self, spacing: PixelSpacing) -> FrameMask {
        FrameMask {
            spacing,
            ..self.clone()
        }
    }
}

/// Where a sweep was loaded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepSource {
    Path(PathBuf),
    Phantom,
}

impl fmt::Display for SweepSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepSource::Path(p) => write!(f, "{}", p.display()),
            SweepSource::Phantom => f.write_str("phantom"),
        }
    }
}

/// Ordered frame sequence of one patient in one plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    patient_id: String,
    plane: PlaneKind,
    frames: Vec<FrameMask>,
    source: SweepSource,
}

impl Sweep {
    /// Fails when `frames` is empty or frames disagree on size or spacing.
    pub fn new(
        patient_id: impl Into<String>,
        plane: PlaneKind,
        frames: Vec<FrameMask>,
        source: SweepSource,
    ) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidSweep("sweep has no frames".into()))?;
        for (i, f) in frames.iter().enumerate().skip(1) {
            if f.width != first.width || f.height != first.height {
                return Err(Error::DimensionMismatch {
                    frame: i,
                    expected_width: first.width,
                    expected_height: first.height,
                    found_width: f.width,
                    found_height: f.height,
                });
            }
            if f.spacing != first.spacing {
                return Err(Error::SpacingMismatch { frame: i });
            }
        }
        Ok(Self {
            patient_id: patient_id.into(),
            plane,
            frames,
            source,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn plane(&self) -> PlaneKind {
        self.plane
    }

    pub fn frames(&self) -> &[FrameMask] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; sweeps hold at least one frame.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn source(&self) -> &SweepSource {
        &self.source
    }

    pub fn spacing(&self) -> PixelSpacing {
        self.frames[0].spacing
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn with_patient_id(mut self, patient_id: impl Into<String>) -> Self {
        self.patient_id = patient_id.into();
        self
    }

    /// Replaces the frames, keeping id, plane and source.
    pub fn with_frames(&self, frames: Vec<FrameMask>) -> Result<Self> {
        Sweep::new(
            self.patient_id.clone(),
            self.plane,
            frames,
            self.source.clone(),
        )
    }
}
