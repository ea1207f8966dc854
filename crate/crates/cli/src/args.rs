//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pvol_core::ellipse::AxisPolicy;
use pvol_core::metrics::MidplaneSource;
use pvol_core::volumetry::DEFAULT_MIN_AREA_PX;

#[derive(Debug, Parser)]
#[command(
    name = "pvol",
    version,
    about = "Prostate volume estimation from segmentation mask sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate one ellipsoid volume per patient from its predicted sweeps.
    Estimate(EstimateArgs),
    /// Segmentation metrics, volume agreement and inter-observer summaries.
    Evaluate(EvaluateArgs),
    /// Hold out a test set and deal the remaining patients into folds.
    Split(SplitArgs),
    /// Write synthetic ellipsoid sweeps and a manifest.
    Phantom(PhantomArgs),
}

impl Command {
    pub fn jobs(&self) -> usize {
        match self {
            Command::Estimate(a) => a.run.jobs,
            Command::Evaluate(a) => a.run.jobs,
            Command::Split(a) => a.run.jobs,
            Command::Phantom(a) => a.run.jobs,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Directory receiving the outputs; created if missing.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Frames whose largest component is smaller than this never become mid-planes.
    #[arg(long, default_value_t = DEFAULT_MIN_AREA_PX)]
    pub min_area_px: usize,
    #[arg(long, value_enum, default_value_t = AxisPolicyArg::OrientationQuadrant)]
    pub axis_policy: AxisPolicyArg,
    /// Use this axial prediction sweep for every patient instead of the one
    /// with the largest mid-plane.
    #[arg(long)]
    pub axial_sweep: Option<usize>,
    /// Same for the sagittal plane.
    #[arg(long)]
    pub sagittal_sweep: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisPolicyArg {
    OrientationQuadrant,
    Vertical,
    Horizontal,
    Major,
    Minor,
}

impl From<AxisPolicyArg> for AxisPolicy {
    fn from(a: AxisPolicyArg) -> Self {
        match a {
            AxisPolicyArg::OrientationQuadrant => AxisPolicy::OrientationQuadrant,
            AxisPolicyArg::Vertical => AxisPolicy::Vertical,
            AxisPolicyArg::Horizontal => AxisPolicy::Horizontal,
            AxisPolicyArg::Major => AxisPolicy::Major,
            AxisPolicyArg::Minor => AxisPolicy::Minor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MidplaneSourceArg {
    GroundTruth,
    Prediction,
}

impl From<MidplaneSourceArg> for MidplaneSource {
    fn from(a: MidplaneSourceArg) -> Self {
        match a {
            MidplaneSourceArg::GroundTruth => MidplaneSource::GroundTruth,
            MidplaneSourceArg::Prediction => MidplaneSource::Prediction,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Which sweep's largest frame is the evaluated mid-plane.
    #[arg(long, value_enum, default_value_t = MidplaneSourceArg::GroundTruth)]
    pub midplane_source: MidplaneSourceArg,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Patients held out for testing, drawn among those with both planes.
    #[arg(long, default_value_t = 10)]
    pub test_count: usize,
    #[arg(long, default_value_t = 4)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub seed: u64,
    /// Frontal, longitudinal and sagittal diameters in mm; repeat for more patients.
    #[arg(long, value_name = "F,L,S", value_parser = parse_triple)]
    pub diameters: Vec<[f64; 3]>,
    /// Number of patients with diameters drawn uniformly from the range below.
    #[arg(long, conflicts_with = "diameters")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 25.0)]
    pub min_diameter_mm: f64,
    #[arg(long, default_value_t = 70.0)]
    pub max_diameter_mm: f64,
    /// Pixel spacing `dx` or `dx,dy` in mm.
    #[arg(long, value_name = "DX[,DY]", default_value = "0.4", value_parser = parse_spacing)]
    pub spacing_mm: [f64; 2],
    #[arg(long, default_value_t = 1.0)]
    pub slice_step_mm: f64,
    /// Frame width in pixels; sized to the largest cross-section when omitted.
    #[arg(long)]
    pub frame_width: Option<usize>,
    #[arg(long)]
    pub frame_height: Option<usize>,
    /// Standard deviation of the radial boundary jitter on predicted sweeps.
    #[arg(long, default_value_t = 0.0)]
    pub jitter_mm: f64,
    /// Probability that a predicted apex/base frame is emptied.
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Additional jittered ground-truth delineations per patient.
    #[arg(long, default_value_t = 0)]
    pub observers: usize,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_floats(s)?
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn parse_spacing(s: &str) -> Result<[f64; 2], String> {
    match parse_floats(s)?[..] {
        [d] => Ok([d, d]),
        [dx, dy] => Ok([dx, dy]),
        ref v => Err(format!(
            "expected 1 or 2 comma-separated values, got {}",
            v.len()
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_value_lists() {
        assert_eq!(parse_triple("50,40.5, 30").unwrap(), [50.0, 40.5, 30.0]);
        assert!(parse_triple("50,40").is_err());
        assert_eq!(parse_spacing("0.4").unwrap(), [0.4, 0.4]);
        assert_eq!(parse_spacing("0.4,0.5").unwrap(), [0.4, 0.5]);
        assert!(parse_spacing("a").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
