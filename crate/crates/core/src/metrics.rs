//! Segmentation quality metrics: Dice, mid-plane Dice and mid-plane
//! Hausdorff distance, plus inter-observer aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameMask, Sweep};
use crate::raster::{boundary_mask, squared_distance_transform};
use crate::volumetry::{argmax_area, frame_areas};

fn check_geometry(a: &FrameMask, b: &FrameMask) -> Result<()> {
    if !a.same_geometry(b) {
        return Err(Error::Alignment(format!(
            "mask geometry differs: {}x{} {:?} vs {}x{} {:?}",
            a.width(),
            a.height(),
            a.spacing(),
            b.width(),
            b.height(),
            b.spacing()
        )));
    }
    Ok(())
}

/// `2|A∩B| / (|A|+|B|)`; 1 when both masks are empty.
pub fn dice(a: &FrameMask, b: &FrameMask) -> Result<f64> {
    check_geometry(a, b)?;
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&pa, &pb) in a.pixels().iter().zip(b.pixels()) {
        na += pa as usize;
        nb += pb as usize;
        inter += (pa && pb) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

fn nonempty_pair(a: &FrameMask, b: &FrameMask) -> Result<()> {
    check_geometry(a, b)?;
    if a.is_empty() {
        return Err(Error::UndefinedDistance("first"));
    }
    if b.is_empty() {
        return Err(Error::UndefinedDistance("second"));
    }
    Ok(())
}

/// Largest squared distance from a boundary pixel of `from` to the boundary of `to`.
fn directed_sq(from_boundary: &FrameMask, to_distance_sq: &[f64]) -> f64 {
    let w = from_boundary.width();
    from_boundary
        .foreground()
        .map(|(r, c)| to_distance_sq[r * w + c])
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance (mm) between the boundaries of two masks,
/// using exact distance transforms of each boundary.
pub fn hausdorff_mm(a: &FrameMask, b: &FrameMask) -> Result<f64> {
    nonempty_pair(a, b)?;
    let (ba, bb) = (boundary_mask(a), boundary_mask(b));
    let (da, db) = (
        squared_distance_transform(&ba),
        squared_distance_transform(&bb),
    );
    Ok(directed_sq(&ba, &db).max(directed_sq(&bb, &da)).sqrt())
}

/// Directed Hausdorff distance from the boundary of `a` to the boundary of `b`.
pub fn directed_hausdorff_mm(a: &FrameMask, b: &FrameMask) -> Result<f64> {
    nonempty_pair(a, b)?;
    let (ba, bb) = (boundary_mask(a), boundary_mask(b));
    Ok(directed_sq(&ba, &squared_distance_transform(&bb)).sqrt())
}

/// Exhaustive pairwise evaluation of [`hausdorff_mm`]; verification oracle.
pub fn hausdorff_bruteforce(a: &FrameMask, b: &FrameMask) -> Result<f64> {
    nonempty_pair(a, b)?;
    let sp = a.spacing();
    let pa: Vec<_> = boundary_mask(a).foreground().collect();
    let pb: Vec<_> = boundary_mask(b).foreground().collect();
    let directed = |from: &[(usize, usize)], to: &[(usize, usize)]| {
        from.iter()
            .map(|&(r0, c0)| {
                to.iter()
                    .map(|&(r1, c1)| {
                        let x = (c0 as f64 - c1 as f64) * sp.dx_mm();
                        let y = (r0 as f64 - r1 as f64) * sp.dy_mm();
                        x * x + y * y
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(&pa, &pb).max(directed(&pb, &pa)).sqrt())
}

/// Which sweep defines the evaluated mid-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MidplaneSource {
    #[default]
    GroundTruth,
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetrics {
    pub per_frame_dice: Vec<(usize, f64)>,
    pub dice_mean: f64,
    pub dice_midplane: f64,
    /// `None` when either mask on the mid-plane is empty.
    pub hd_midplane_mm: Option<f64>,
    pub midplane_index: usize,
}

fn check_alignment(pred: &Sweep, gt: &Sweep) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Alignment(format!(
            "prediction has {} frames, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    check_geometry(&pred.frames()[0], &gt.frames()[0])
}

/// Per-frame Dice over the whole sweep plus Dice and Hausdorff distance on the mid-plane.
pub fn sweep_metrics(
    pred: &Sweep,
    gt: &Sweep,
    min_area_px: usize,
    source: MidplaneSource,
) -> Result<SweepMetrics> {
    check_alignment(pred, gt)?;
    let anchor = match source {
        MidplaneSource::GroundTruth => gt,
        MidplaneSource::Prediction => pred,
    };
    let midplane_index = argmax_area(&frame_areas(anchor), min_area_px)?;

    let per_frame_dice = pred
        .frames()
        .par_iter()
        .zip(gt.frames().par_iter())
        .enumerate()
        .map(|(i, (p, g))| dice(p, g).map(|d| (i, d)))
        .collect::<Result<Vec<_>>>()?;
    let dice_mean =
        per_frame_dice.iter().map(|(_, d)| d).sum::<f64>() / per_frame_dice.len() as f64;

    let (p, g) = (&pred.frames()[midplane_index], &gt.frames()[midplane_index]);
    let hd_midplane_mm = match hausdorff_mm(p, g) {
        Ok(d) => Some(d),
        Err(Error::UndefinedDistance(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SweepMetrics {
        dice_midplane: per_frame_dice[midplane_index].1,
        per_frame_dice,
        dice_mean,
        hd_midplane_mm,
        midplane_index,
    })
}

/// Compares every observer against the reference delineation and averages each
/// scalar field. The mid-plane is always anchored on the reference. Undefined
/// Hausdorff distances are left out of the mean.
pub fn interobserver(
    observers: &[Sweep],
    reference: &Sweep,
    min_area_px: usize,
) -> Result<SweepMetrics> {
    if observers.is_empty() {
        return Err(Error::Input(
            "inter-observer comparison needs at least one observer".into(),
        ));
    }
    let all = observers
        .iter()
        .map(|o| sweep_metrics(o, reference, min_area_px, MidplaneSource::GroundTruth))
        .collect::<Result<Vec<_>>>()?;
    let n = all.len() as f64;
    let mean = |f: &dyn Fn(&SweepMetrics) -> f64| all.iter().map(f).sum::<f64>() / n;

    let per_frame_dice = (0..reference.len())
        .map(|i| (i, mean(&|m| m.per_frame_dice[i].1)))
        .collect();
    let hds: Vec<f64> = all.iter().filter_map(|m| m.hd_midplane_mm).collect();
    Ok(SweepMetrics {
        per_frame_dice,
        dice_mean: mean(&|m| m.dice_mean),
        dice_midplane: mean(&|m| m.dice_midplane),
        hd_midplane_mm: (!hds.is_empty()).then(|| hds.iter().sum::<f64>() / hds.len() as f64),
        midplane_index: all[0].midplane_index,
    })
}
