//! `phantom`: synthetic cohort on disk.
//!
//! Each patient gets clean ground-truth sweeps, prediction sweeps carrying the
//! requested jitter and dropout, optional jittered observer delineations and
//! the analytic volume as its reference.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use pvol_core::manifest::{manifest_to_json, write_sweep, ObserverSet, PatientRecord};
use pvol_core::phantom::{
    analytic_volume, generate_sweep, perturb_sweep, PhantomNoise, PhantomSpec,
};
use pvol_core::seed::seeded_rng;
use pvol_core::{PixelSpacing, PlaneKind, Sweep};

use crate::args::PhantomArgs;
use crate::error::{CliError, Status};
use crate::output::{create_dir, json_bytes, write};

/// Cohort medians (frontal, longitudinal, sagittal) used when no diameters are given.
pub const DEFAULT_DIAMETERS_MM: [f64; 3] = [50.0, 40.1, 48.9];

const DIAMETER_STREAM: u64 = 10;
const NOISE_STREAM: u64 = 11;

const PLANES: [PlaneKind; 2] = [PlaneKind::Axial, PlaneKind::Sagittal];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhantomPatient {
    pub patient_id: String,
    pub spec: PhantomSpec,
    pub analytic_volume_ml: f64,
    /// Perturbation seeds: axial and sagittal predictions, then one pair per observer.
    pub noise_seeds: Vec<[u64; 2]>,
}

fn check_config(args: &PhantomArgs) -> Result<(), CliError> {
    let (lo, hi) = (args.min_diameter_mm, args.max_diameter_mm);
    if args.random.is_some() && !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return Err(CliError::Config(format!(
            "diameter range [{lo}, {hi}] must be positive and ordered"
        )));
    }
    if args.random == Some(0) {
        return Err(CliError::Config(
            "--random needs at least one patient".into(),
        ));
    }
    Ok(())
}

/// Validated cohort description; nothing is rasterized yet.
pub fn plan_cohort(args: &PhantomArgs) -> Result<Vec<PhantomPatient>, CliError> {
    check_config(args)?;
    let spacing = PixelSpacing::new(args.spacing_mm[0], args.spacing_mm[1])?;
    let noise = PhantomNoise {
        jitter_sigma_mm: args.jitter_mm,
        extremity_dropout: args.dropout,
    };
    let diameters: Vec<[f64; 3]> = match (args.random, args.diameters.is_empty()) {
        (Some(n), _) => {
            let mut rng = seeded_rng(args.seed, DIAMETER_STREAM);
            (0..n)
                .map(|_| {
                    std::array::from_fn(|_| {
                        rng.random_range(args.min_diameter_mm..=args.max_diameter_mm)
                    })
                })
                .collect()
        }
        (None, true) => vec![DEFAULT_DIAMETERS_MM],
        (None, false) => args.diameters.clone(),
    };
    let mut seeds = seeded_rng(args.seed, NOISE_STREAM);
    diameters
        .iter()
        .enumerate()
        .map(|(i, &[f, l, s])| {
            let mut spec = PhantomSpec::new(f, l, s, spacing)
                .with_slice_step(args.slice_step_mm)
                .with_noise(noise, args.seed);
            spec.frame_width = args.frame_width.unwrap_or(spec.frame_width);
            spec.frame_height = args.frame_height.unwrap_or(spec.frame_height);
            let patient_id = format!("PH{:03}", i + 1);
            spec.check_geometry()
                .map_err(|e| CliError::Config(format!("{patient_id}: {e}")))?;
            Ok(PhantomPatient {
                patient_id,
                analytic_volume_ml: analytic_volume(&spec),
                noise_seeds: (0..=args.observers)
                    .map(|_| [seeds.random(), seeds.random()])
                    .collect(),
                spec,
            })
        })
        .collect()
}

/// Rasterizes and writes one patient; returns its manifest record.
fn write_patient(p: &PhantomPatient, out_dir: &Path) -> Result<PatientRecord, CliError> {
    let id = &p.patient_id;
    let mut record = PatientRecord::new(id);
    record.reference_volume_ml = Some(p.analytic_volume_ml);
    record.observers = vec![ObserverSet::default(); p.noise_seeds.len() - 1];
    let jitter_only = PhantomNoise {
        extremity_dropout: 0.0,
        ..p.spec.noise
    };
    for (k, plane) in PLANES.into_iter().enumerate() {
        let clean = generate_sweep(&p.spec, plane)?.with_patient_id(id);
        let save = |sweep: &Sweep, name: String| {
            let rel = Path::new(id).join(name);
            write_sweep(sweep, &out_dir.join(&rel), &rel).map_err(CliError::from)
        };
        let pred = perturb_sweep(&clean, &p.spec.noise, p.noise_seeds[0][k])?;
        let pred_ref = save(&pred, format!("{plane}_pred"))?;
        let gt_ref = save(&clean, format!("{plane}_gt"))?;
        for (o, seeds) in p.noise_seeds[1..].iter().enumerate() {
            let observed = perturb_sweep(&clean, &jitter_only, seeds[k])?;
            let r = save(&observed, format!("observer_{}/{plane}_gt", o + 1))?;
            match plane {
                PlaneKind::Axial => record.observers[o].axial_gt = Some(r),
                PlaneKind::Sagittal => record.observers[o].sagittal_gt = Some(r),
            }
        }
        match plane {
            PlaneKind::Axial => {
                record.axial_pred = vec![pred_ref];
                record.axial_gt = Some(gt_ref);
            }
            PlaneKind::Sagittal => {
                record.sagittal_pred = vec![pred_ref];
                record.sagittal_gt = Some(gt_ref);
            }
        }
    }
    Ok(record)
}

pub fn cmd_phantom(args: &PhantomArgs) -> Result<Status, CliError> {
    let cohort = plan_cohort(args)?;
    let out = &args.run.out_dir;
    create_dir(out)?;
    let records = cohort
        .par_iter()
        .map(|p| write_patient(p, out))
        .collect::<Result<Vec<_>, _>>()?;
    write(out, "manifest.json", manifest_to_json(&records).as_bytes())?;
    write(out, "phantoms.json", &json_bytes(&cohort))?;
    Ok(Status::Success)
}
