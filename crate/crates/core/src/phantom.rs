//! Synthetic ellipsoid sweeps with analytically known geometry.
//!
//! An axial sweep slices the ellipsoid perpendicular to its sagittal axis;
//! each frame shows the frontal diameter horizontally and the longitudinal
//! diameter vertically. A sagittal sweep slices perpendicular to the frontal
//! axis and shows the sagittal diameter horizontally and the longitudinal
//! diameter vertically. A pixel is foreground iff its center lies strictly
//! inside the cross-section.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameMask, PixelSpacing, PlaneKind, Sweep, SweepSource};
use crate::seed::seeded_rng;

/// Background border kept around the largest cross-section by [`PhantomSpec::new`].
pub const DEFAULT_MARGIN_PX: usize = 8;

/// Harmonic orders of the radial boundary perturbation.
pub const NOISE_HARMONICS: std::ops::RangeInclusive<u32> = 1..=4;

/// Frames whose position lies in the outer 20% of the sweep extent
/// (10% at each end) are eligible for dropout.
pub const EXTREMITY_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomNoise {
    /// Standard deviation of the radial boundary displacement.
    pub jitter_sigma_mm: f64,
    /// Probability that an extremity frame loses all foreground.
    pub extremity_dropout: f64,
}

impl PhantomNoise {
    pub const NONE: PhantomNoise = PhantomNoise {
        jitter_sigma_mm: 0.0,
        extremity_dropout: 0.0,
    };

    fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma_mm.is_finite() && self.jitter_sigma_mm >= 0.0) {
            return Err(Error::Input(format!(
                "jitter_sigma_mm must be >= 0, got {}",
                self.jitter_sigma_mm
            )));
        }
        if !(0.0..=1.0).contains(&self.extremity_dropout) {
            return Err(Error::Input(format!(
                "extremity_dropout must lie in [0, 1], got {}",
                self.extremity_dropout
            )));
        }
        Ok(())
    }

    pub fn is_none(&self) -> bool {
        self.jitter_sigma_mm == 0.0 && self.extremity_dropout == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub frontal_mm: f64,
    pub longitudinal_mm: f64,
    pub sagittal_mm: f64,
    pub spacing: PixelSpacing,
    /// Distance between consecutive frames along the sweep axis.
    pub slice_step_mm: f64,
    pub frame_width: usize,
    pub frame_height: usize,
    /// In-plane offset of the ellipsoid center from the frame center.
    pub center_offset_mm: (f64, f64),
    pub noise: PhantomNoise,
    pub seed: u64,
}

impl PhantomSpec {
    /// Noiseless spec with a 1 mm slice step and a frame sized to hold both
    /// planes with [`DEFAULT_MARGIN_PX`] of border.
    pub fn new(
        frontal_mm: f64,
        longitudinal_mm: f64,
        sagittal_mm: f64,
        spacing: PixelSpacing,
    ) -> Self {
        let mut spec = Self {
            frontal_mm,
            longitudinal_mm,
            sagittal_mm,
            spacing,
            slice_step_mm: 1.0,
            frame_width: 1,
            frame_height: 1,
            center_offset_mm: (0.0, 0.0),
            noise: PhantomNoise::NONE,
            seed: 0,
        };
        spec.fit_frame(DEFAULT_MARGIN_PX);
        spec
    }

    /// Resizes the frame so every cross-section (including the center
    /// offset) keeps `margin_px` of background on each side.
    pub fn fit_frame(&mut self, margin_px: usize) {
        let (ox, oy) = self.center_offset_mm;
        let horizontal = self.frontal_mm.max(self.sagittal_mm) + 2.0 * ox.abs();
        let vertical = self.longitudinal_mm + 2.0 * oy.abs();
        let px = |extent: f64, step: f64| {
            if extent.is_finite() && extent > 0.0 {
                (extent / step).ceil() as usize + 2 * margin_px + 1
            } else {
                1
            }
        };
        self.frame_width = px(horizontal, self.spacing.dx_mm());
        self.frame_height = px(vertical, self.spacing.dy_mm());
    }

    pub fn with_slice_step(mut self, mm: f64) -> Self {
        self.slice_step_mm = mm;
        self
    }

    pub fn with_noise(mut self, noise: PhantomNoise, seed: u64) -> Self {
        self.noise = noise;
        self.seed = seed;
        self
    }

    pub fn with_center_offset(mut self, x_mm: f64, y_mm: f64) -> Self {
        self.center_offset_mm = (x_mm, y_mm);
        self
    }

    pub fn with_frame(mut self, width: usize, height: usize) -> Self {
        self.frame_width = width;
        self.frame_height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("frontal_mm", self.frontal_mm),
            ("longitudinal_mm", self.longitudinal_mm),
            ("sagittal_mm", self.sagittal_mm),
            ("slice_step_mm", self.slice_step_mm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::Input(
                "frame dimensions must be at least 1 px".into(),
            ));
        }
        let (ox, oy) = self.center_offset_mm;
        if !(ox.is_finite() && oy.is_finite()) {
            return Err(Error::Input("center offset must be finite".into()));
        }
        self.noise.validate()
    }

    /// `(horizontal, vertical, sweep-axis)` semi-axes for a plane.
    fn semi_axes(&self, plane: PlaneKind) -> (f64, f64, f64) {
        match plane {
            PlaneKind::Axial => (
                self.frontal_mm / 2.0,
                self.longitudinal_mm / 2.0,
                self.sagittal_mm / 2.0,
            ),
            PlaneKind::Sagittal => (
                self.sagittal_mm / 2.0,
                self.longitudinal_mm / 2.0,
                self.frontal_mm / 2.0,
            ),
        }
    }

    /// Ellipse center in frame coordinates (mm).
    pub fn frame_center_mm(&self) -> (f64, f64) {
        (
            (self.frame_width - 1) as f64 / 2.0 * self.spacing.dx_mm() + self.center_offset_mm.0,
            (self.frame_height - 1) as f64 / 2.0 * self.spacing.dy_mm() + self.center_offset_mm.1,
        )
    }

    /// [`PhantomSpec::validate`] plus the frame-size check of both planes.
    pub fn check_geometry(&self) -> Result<()> {
        self.validate()?;
        self.check_fits(PlaneKind::Axial)?;
        self.check_fits(PlaneKind::Sagittal)
    }

    fn check_fits(&self, plane: PlaneKind) -> Result<()> {
        let (ah, av, _) = self.semi_axes(plane);
        let (cx, cy) = self.frame_center_mm();
        let max_x = (self.frame_width - 1) as f64 * self.spacing.dx_mm();
        let max_y = (self.frame_height - 1) as f64 * self.spacing.dy_mm();
        if cx - ah <= 0.0 || cx + ah >= max_x {
            return Err(Error::Geometry(format!(
                "frame_width of {} px ({max_x:.2} mm) cannot hold the {plane} cross-section spanning [{:.2}, {:.2}] mm",
                self.frame_width,
                cx - ah,
                cx + ah
            )));
        }
        if cy - av <= 0.0 || cy + av >= max_y {
            return Err(Error::Geometry(format!(
                "frame_height of {} px ({max_y:.2} mm) cannot hold the {plane} cross-section spanning [{:.2}, {:.2}] mm",
                self.frame_height,
                cy - av,
                cy + av
            )));
        }
        Ok(())
    }

    /// Sweep-axis positions of every frame, symmetric about the mid-plane,
    /// with at least one empty frame beyond each pole.
    pub fn slice_positions_mm(&self, plane: PlaneKind) -> Vec<f64> {
        let (_, _, half) = self.semi_axes(plane);
        let m = (half / self.slice_step_mm).floor() as i64 + 1;
        (-m..=m).map(|k| k as f64 * self.slice_step_mm).collect()
    }
}

/// `frontal · longitudinal · sagittal · π/6` in mL.
pub fn analytic_volume(spec: &PhantomSpec) -> f64 {
    4.0 / 3.0
        * PI
        * (spec.frontal_mm / 2.0)
        * (spec.longitudinal_mm / 2.0)
        * (spec.sagittal_mm / 2.0)
        / 1000.0
}

fn cross_section(spec: &PhantomSpec, plane: PlaneKind, z_mm: f64) -> FrameMask {
    let (ah, av, half) = spec.semi_axes(plane);
    let (cx, cy) = spec.frame_center_mm();
    let (dx, dy) = (spec.spacing.dx_mm(), spec.spacing.dy_mm());
    let t = z_mm / half;
    let k2 = 1.0 - t * t;
    FrameMask::from_fn(spec.frame_width, spec.frame_height, spec.spacing, |r, c| {
        if k2 <= 0.0 {
            return false;
        }
        let u = (c as f64 * dx - cx) / ah;
        let v = (r as f64 * dy - cy) / av;
        u * u + v * v < k2
    })
    .expect("validated frame dimensions")
}

/// Noiseless sweep of the phantom in one plane. Noise fields of the spec are
/// applied separately by [`perturb_sweep`].
pub fn generate_sweep(spec: &PhantomSpec, plane: PlaneKind) -> Result<Sweep> {
    spec.validate()?;
    spec.check_fits(plane)?;
    let frames = spec
        .slice_positions_mm(plane)
        .par_iter()
        .map(|&z| cross_section(spec, plane, z))
        .collect();
    Sweep::new("phantom", plane, frames, SweepSource::Phantom)
}

fn centroid_mm(mask: &FrameMask) -> Option<(f64, f64)> {
    let (mut sr, mut sc, mut n) = (0.0, 0.0, 0usize);
    for (r, c) in mask.foreground() {
        sr += r as f64;
        sc += c as f64;
        n += 1;
    }
    (n > 0).then(|| {
        let sp = mask.spacing();
        (sc / n as f64 * sp.dx_mm(), sr / n as f64 * sp.dy_mm())
    })
}

/// Radial boundary displacement `δ(φ) = Σ a_k cos kφ + b_k sin kφ` with
/// coefficients drawn so that `Var δ(φ) = σ²` at every angle.
struct RadialField {
    coefficients: Vec<(f64, f64, f64)>,
}

impl RadialField {
    fn sample(sigma: f64, rng: &mut impl Rng) -> Self {
        let orders = NOISE_HARMONICS.count() as f64;
        let normal = Normal::new(0.0, sigma / orders.sqrt()).expect("finite sigma");
        let coefficients = NOISE_HARMONICS
            .map(|k| (k as f64, normal.sample(rng), normal.sample(rng)))
            .collect();
        Self { coefficients }
    }

    fn at(&self, phi: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|&(k, a, b)| {
                let (s, c) = (k * phi).sin_cos();
                a * c + b * s
            })
            .sum()
    }
}

/// Pushes every boundary point radially (about the foreground centroid) by the field.
fn warp_frame(mask: &FrameMask, field: &RadialField) -> FrameMask {
    let Some((cx, cy)) = centroid_mm(mask) else {
        return mask.clone();
    };
    let sp = mask.spacing();
    let (dx, dy) = (sp.dx_mm(), sp.dy_mm());
    let sample = |x: f64, y: f64| mask.get((y / dy).round() as isize, (x / dx).round() as isize);
    FrameMask::from_fn(mask.width(), mask.height(), sp, |r, c| {
        let (vx, vy) = (c as f64 * dx - cx, r as f64 * dy - cy);
        let radius = vx.hypot(vy);
        if radius == 0.0 {
            return sample(cx, cy);
        }
        let source = radius - field.at(vy.atan2(vx));
        if source <= 0.0 {
            return sample(cx, cy);
        }
        let s = source / radius;
        sample(cx + vx * s, cy + vy * s)
    })
    .expect("same geometry as input")
}

/// Smooth radial jitter on every frame plus extremity dropout. Deterministic
/// per `(sweep, noise, seed)`; zero noise returns the input unchanged.
pub fn perturb_sweep(sweep: &Sweep, noise: &PhantomNoise, seed: u64) -> Result<Sweep> {
    noise.validate()?;
    if noise.is_none() {
        return Ok(sweep.clone());
    }
    let nonempty: Vec<usize> = sweep
        .frames()
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.is_empty())
        .map(|(i, _)| i)
        .collect();
    let extent = nonempty.first().zip(nonempty.last()).map(|(&a, &b)| (a, b));
    let in_extremity = |i: usize| match extent {
        Some((first, last)) if last > first => {
            let mid = (first + last) as f64 / 2.0;
            let half = (last - first) as f64 / 2.0;
            ((i as f64 - mid) / half).abs() > 1.0 - EXTREMITY_FRACTION
        }
        _ => false,
    };

    let frames = sweep
        .frames()
        .par_iter()
        .enumerate()
        .map(|(i, frame)| {
            let mut rng = seeded_rng(seed, i as u64);
            let dropped = rng.random::<f64>() < noise.extremity_dropout;
            if dropped && in_extremity(i) {
                return FrameMask::empty(frame.width(), frame.height(), frame.spacing())
                    .expect("same geometry as input");
            }
            if noise.jitter_sigma_mm == 0.0 || frame.is_empty() {
                return frame.clone();
            }
            warp_frame(frame, &RadialField::sample(noise.jitter_sigma_mm, &mut rng))
        })
        .collect();
    sweep.with_frames(frames)
}
