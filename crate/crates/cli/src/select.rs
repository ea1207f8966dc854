//! Choice of one predicted sweep per plane when a patient has several.

use pvol_core::manifest::{load_sweep, PatientRecord};
use pvol_core::volumetry::frame_areas;
use pvol_core::{Error, PlaneKind, Result, Sweep};

pub struct ChosenSweep {
    /// Position in the patient's list of prediction sweeps for the plane.
    pub index: usize,
    pub sweep: Sweep,
}

/// Largest qualifying frame area of a sweep, 0 when none qualifies.
fn midplane_area(sweep: &Sweep, min_area_px: usize) -> usize {
    frame_areas(sweep)
        .into_iter()
        .filter(|&a| a >= min_area_px)
        .max()
        .unwrap_or(0)
}

/// Loads the prediction sweep `forced`, or else the one whose mid-plane has
/// the most pixels (ties to the lower index).
pub fn choose_pred_sweep(
    patient: &PatientRecord,
    plane: PlaneKind,
    min_area_px: usize,
    forced: Option<usize>,
) -> Result<ChosenSweep> {
    let refs = patient.pred(plane);
    if refs.is_empty() {
        return Err(Error::Input(format!("no {plane} prediction sweep")));
    }
    let load = |index: usize| {
        load_sweep(&refs[index], &patient.patient_id, plane)
            .map(|sweep| ChosenSweep { index, sweep })
    };
    if let Some(index) = forced {
        if index >= refs.len() {
            return Err(Error::Input(format!(
                "{plane} sweep index {index} out of range ({} available)",
                refs.len()
            )));
        }
        return load(index);
    }
    if refs.len() == 1 {
        return load(0);
    }
    let mut best: Option<(usize, ChosenSweep)> = None;
    for index in 0..refs.len() {
        let chosen = load(index)?;
        let area = midplane_area(&chosen.sweep, min_area_px);
        match &best {
            Some((best_area, _)) if *best_area >= area => {}
            _ => best = Some((area, chosen)),
        }
    }
    Ok(best.expect("at least one sweep").1)
}
