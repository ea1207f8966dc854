//! Mid-plane selection, diameter extraction and ellipsoid volume.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ellipse::{fit_ellipse, AxisPolicy, EllipseParams};
use crate::error::{Error, Result};
use crate::model::{PlaneKind, Sweep};
use crate::raster::components::largest_component_area;
use crate::raster::extract_contour;

pub const DEFAULT_MIN_AREA_PX: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeOptions {
    /// Frames whose largest component is smaller than this never become mid-planes.
    pub min_area_px: usize,
    pub axis_policy: AxisPolicy,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self {
            min_area_px: DEFAULT_MIN_AREA_PX,
            axis_policy: AxisPolicy::default(),
        }
    }
}

/// The three diameters entering the ellipsoid formula, in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterTriple {
    pub frontal_mm: f64,
    pub longitudinal_mm: f64,
    pub sagittal_mm: f64,
}

impl DiameterTriple {
    pub fn new(frontal_mm: f64, longitudinal_mm: f64, sagittal_mm: f64) -> Result<Self> {
        let d = Self {
            frontal_mm,
            longitudinal_mm,
            sagittal_mm,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("frontal", self.frontal_mm),
            ("longitudinal", self.longitudinal_mm),
            ("sagittal", self.sagittal_mm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} diameter must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `frontal · longitudinal · sagittal · π/6`, converted from mm³ to mL.
pub fn ellipsoid_volume(d: &DiameterTriple) -> Result<f64> {
    d.validate()?;
    Ok(d.frontal_mm * d.longitudinal_mm * d.sagittal_mm * PI / 6.0 / 1000.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub volume_ml: f64,
    pub diameters: DiameterTriple,
    pub axial_midplane_index: usize,
    pub sagittal_midplane_index: usize,
    pub axial_ellipse: EllipseParams,
    pub sagittal_ellipse: EllipseParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialDiameters {
    pub frontal_mm: f64,
    pub longitudinal_mm: f64,
    pub midplane_index: usize,
    pub ellipse: EllipseParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagittalDiameter {
    pub sagittal_mm: f64,
    pub midplane_index: usize,
    pub ellipse: EllipseParams,
}

/// Largest-component area of every frame, in frame order.
pub fn frame_areas(sweep: &Sweep) -> Vec<usize> {
    sweep
        .frames()
        .par_iter()
        .map(largest_component_area)
        .collect()
}

/// First index of the maximum among areas that reach `min_area_px`.
pub fn argmax_area(areas: &[usize], min_area_px: usize) -> Result<usize> {
    areas
        .iter()
        .enumerate()
        .filter(|(_, &a)| a >= min_area_px && a > 0)
        .fold(None, |best: Option<(usize, usize)>, (i, &a)| match best {
            Some((_, b)) if b >= a => best,
            _ => Some((i, a)),
        })
        .map(|(i, _)| i)
        .ok_or(Error::EmptySweep { min_area_px })
}

/// Index of the frame whose largest component has the most pixels; ties go
/// to the lowest index.
pub fn select_midplane(sweep: &Sweep, min_area_px: usize) -> Result<usize> {
    argmax_area(&frame_areas(sweep), min_area_px)
}

fn expect_plane(sweep: &Sweep, plane: PlaneKind) -> Result<()> {
    if sweep.plane() != plane {
        return Err(Error::PlaneMismatch {
            expected: plane,
            found: sweep.plane(),
        });
    }
    Ok(())
}

/// Mid-plane ellipse of a sweep, whatever its plane.
pub fn midplane_ellipse(sweep: &Sweep, min_area_px: usize) -> Result<(usize, EllipseParams)> {
    let index = select_midplane(sweep, min_area_px)?;
    let frame = &sweep.frames()[index];
    let ellipse = extract_contour(frame)
        .and_then(|c| fit_ellipse(&c.edge_points))
        .map_err(|e| e.at_frame(index))?;
    Ok((index, ellipse))
}

pub fn extract_axial_diameters(sweep: &Sweep, opts: &VolumeOptions) -> Result<AxialDiameters> {
    expect_plane(sweep, PlaneKind::Axial)?;
    let (midplane_index, ellipse) = midplane_ellipse(sweep, opts.min_area_px)?;
    let (frontal_mm, longitudinal_mm) = opts.axis_policy.diameters(&ellipse);
    Ok(AxialDiameters {
        frontal_mm,
        longitudinal_mm,
        midplane_index,
        ellipse,
    })
}

pub fn extract_sagittal_diameter(sweep: &Sweep, opts: &VolumeOptions) -> Result<SagittalDiameter> {
    expect_plane(sweep, PlaneKind::Sagittal)?;
    let (midplane_index, ellipse) = midplane_ellipse(sweep, opts.min_area_px)?;
    let (sagittal_mm, _) = opts.axis_policy.diameters(&ellipse);
    Ok(SagittalDiameter {
        sagittal_mm,
        midplane_index,
        ellipse,
    })
}

/// Full pipeline on one axial and one sagittal sweep.
pub fn estimate_volume(
    axial: &Sweep,
    sagittal: &Sweep,
    opts: &VolumeOptions,
) -> Result<VolumeEstimate> {
    let ax = extract_axial_diameters(axial, opts).map_err(|e| e.in_plane(PlaneKind::Axial))?;
    let sag =
        extract_sagittal_diameter(sagittal, opts).map_err(|e| e.in_plane(PlaneKind::Sagittal))?;
    let diameters = DiameterTriple::new(ax.frontal_mm, ax.longitudinal_mm, sag.sagittal_mm)?;
    Ok(VolumeEstimate {
        volume_ml: ellipsoid_volume(&diameters)?,
        diameters,
        axial_midplane_index: ax.midplane_index,
        sagittal_midplane_index: sag.midplane_index,
        axial_ellipse: ax.ellipse,
        sagittal_ellipse: sag.ellipse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FrameMask, PixelSpacing, SweepSource};

    fn sp(mm: f64) -> PixelSpacing {
        PixelSpacing::isotropic(mm).unwrap()
    }

    /// Frame with a single filled `n`-pixel run on row 1.
    fn frame_with_area(n: usize) -> FrameMask {
        FrameMask::from_foreground(400, 3, sp(1.0), (0..n).map(|c| (1, c))).unwrap()
    }

    fn disk(radius_px: f64, size: usize, spacing: f64) -> FrameMask {
        let c = (size as f64 - 1.0) / 2.0;
        FrameMask::from_fn(size, size, sp(spacing), |r, col| {
            let (x, y) = (col as f64 - c, r as f64 - c);
            x * x + y * y < radius_px * radius_px
        })
        .unwrap()
    }

    fn sweep(plane: PlaneKind, frames: Vec<FrameMask>) -> Sweep {
        Sweep::new("P", plane, frames, SweepSource::Phantom).unwrap()
    }

    #[test]
    fn midplane_tie_and_floor() {
        let s = sweep(
            PlaneKind::Axial,
            [10, 50, 50, 20].map(frame_with_area).to_vec(),
        );
        assert_eq!(select_midplane(&s, 1).unwrap(), 1);
        let s = sweep(
            PlaneKind::Axial,
            [120, 300, 80].map(frame_with_area).to_vec(),
        );
        assert_eq!(select_midplane(&s, 100).unwrap(), 1);
        let s = sweep(
            PlaneKind::Axial,
            vec![FrameMask::empty(5, 5, sp(1.0)).unwrap(); 4],
        );
        assert!(matches!(
            select_midplane(&s, 1),
            Err(Error::EmptySweep { .. })
        ));
        assert!(matches!(
            select_midplane(&s, 0),
            Err(Error::EmptySweep { .. })
        ));
    }

    #[test]
    fn midplane_uses_largest_component_not_total_area() {
        // Frame 0: 60 px spread over 30 separate dots; frame 1: one 40 px blob.
        let dots = FrameMask::from_foreground(
            400,
            3,
            sp(1.0),
            (0..30).flat_map(|i| [(0, 4 * i), (1, 4 * i)]),
        )
        .unwrap();
        let s = sweep(PlaneKind::Axial, vec![dots, frame_with_area(40)]);
        assert_eq!(select_midplane(&s, 1).unwrap(), 1);
    }

    #[test]
    fn volume_formula() {
        let v = ellipsoid_volume(&DiameterTriple::new(10.0, 10.0, 10.0).unwrap()).unwrap();
        assert!((v - PI / 6.0).abs() < 1e-12);
        let v = ellipsoid_volume(&DiameterTriple::new(50.0, 40.0, 30.0).unwrap()).unwrap();
        assert!((v - 31.416).abs() < 5e-4);
        let v = ellipsoid_volume(&DiameterTriple::new(50.0, 40.1, 48.9).unwrap()).unwrap();
        assert!((v - 51.34).abs() < 5e-3, "{v}");
        assert!(DiameterTriple::new(0.0, 1.0, 1.0).is_err());
        let bad = DiameterTriple {
            frontal_mm: -1.0,
            longitudinal_mm: 1.0,
            sagittal_mm: 1.0,
        };
        assert!(matches!(ellipsoid_volume(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn disk_midplane_diameters() {
        let frames = vec![
            disk(10.0, 60, 1.0),
            disk(25.0, 60, 1.0),
            disk(15.0, 60, 1.0),
        ];
        let d =
            extract_axial_diameters(&sweep(PlaneKind::Axial, frames), &VolumeOptions::default())
                .unwrap();
        assert_eq!(d.midplane_index, 1);
        assert!((d.frontal_mm - 50.0).abs() <= 1.0, "{}", d.frontal_mm);
        assert!(
            (d.longitudinal_mm - 50.0).abs() <= 1.0,
            "{}",
            d.longitudinal_mm
        );

        let frames = vec![disk(20.0, 50, 0.5)];
        let d = extract_sagittal_diameter(
            &sweep(PlaneKind::Sagittal, frames),
            &VolumeOptions::default(),
        )
        .unwrap();
        assert!((d.sagittal_mm - 20.0).abs() <= 0.5, "{}", d.sagittal_mm);
    }

    #[test]
    fn plane_and_emptiness_errors_carry_context() {
        let axial = sweep(PlaneKind::Axial, vec![disk(20.0, 50, 0.5)]);
        let err = extract_sagittal_diameter(&axial, &VolumeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::PlaneMismatch { .. }));

        let empty = sweep(
            PlaneKind::Axial,
            vec![FrameMask::empty(50, 50, sp(0.5)).unwrap(); 3],
        );
        let sag = sweep(PlaneKind::Sagittal, vec![disk(20.0, 50, 0.5)]);
        let err = estimate_volume(&empty, &sag, &VolumeOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::InPlane {
                plane: PlaneKind::Axial,
                ..
            }
        ));
        assert!(matches!(err.root(), Error::EmptySweep { .. }));
        assert!(err.to_string().starts_with("axial sweep"));
    }

    #[test]
    fn fit_errors_name_the_frame() {
        // Two pixels pass a floor of 1 but cannot carry a contour.
        let pair = FrameMask::from_foreground(6, 3, sp(1.0), [(1, 1), (1, 2)]).unwrap();
        let s = sweep(
            PlaneKind::Axial,
            vec![FrameMask::empty(6, 3, sp(1.0)).unwrap(), pair],
        );
        let opts = VolumeOptions {
            min_area_px: 1,
            ..Default::default()
        };
        let err = extract_axial_diameters(&s, &opts).unwrap_err();
        assert!(matches!(err, Error::AtFrame { index: 1, .. }), "{err}");
        assert!(matches!(err.root(), Error::DegenerateMask { pixels: 2 }));
    }
}
