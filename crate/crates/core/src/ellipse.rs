//! Direct least-squares ellipse fitting and conversion of the fitted conic to
//! center / semi-axes / orientation.
//!
//! The fit minimizes the algebraic residual of
//! `A x² + B xy + C y² + D x + E y + F` over the points subject to the
//! ellipse normalization `4AC − B² = 1`. Points are mean-centered and
//! isotropically scaled first; the reduced 3×3 eigenproblem on the quadratic
//! coefficients then follows the numerically stable block formulation
//! (Halíř & Flusser).

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semi-axes closer than this (relative) are treated as a circle, reported with θ = 0.
pub const CIRCLE_TOLERANCE: f64 = 1e-9;

pub const MIN_POINTS: usize = 5;

/// Planar ellipse in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub center_mm: (f64, f64),
    pub semi_major_mm: f64,
    pub semi_minor_mm: f64,
    /// Angle of the major axis against +x, in `[0, π)`.
    pub orientation_rad: f64,
}

impl EllipseParams {
    /// Validating constructor. Swaps the axes when `semi_major < semi_minor`
    /// and normalizes the angle.
    pub fn new(center_mm: (f64, f64), semi_a: f64, semi_b: f64, angle_a_rad: f64) -> Result<Self> {
        if !(semi_a.is_finite() && semi_b.is_finite() && semi_a > 0.0 && semi_b > 0.0) {
            return Err(Error::Domain(format!(
                "semi-axes must be positive, got {semi_a} and {semi_b}"
            )));
        }
        let (major, minor, angle) = if semi_a >= semi_b {
            (semi_a, semi_b, angle_a_rad)
        } else {
            (semi_b, semi_a, angle_a_rad + PI / 2.0)
        };
        let orientation_rad = if (major - minor) <= CIRCLE_TOLERANCE * major {
            0.0
        } else {
            normalize_angle(angle)
        };
        Ok(Self {
            center_mm,
            semi_major_mm: major,
            semi_minor_mm: minor,
            orientation_rad,
        })
    }

    /// Point on the ellipse at parameter `t` (radians).
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        let (s, c) = self.orientation_rad.sin_cos();
        let (u, v) = (self.semi_major_mm * t.cos(), self.semi_minor_mm * t.sin());
        (
            self.center_mm.0 + u * c - v * s,
            self.center_mm.1 + u * s + v * c,
        )
    }

    /// True when the major axis reads as horizontal: θ ∈ [0, π/4) ∪ [3π/4, π).
    pub fn major_is_horizontal(&self) -> bool {
        let t = self.orientation_rad;
        !(FRAC_PI_4..3.0 * FRAC_PI_4).contains(&t)
    }

    /// Full width and height of the axis-aligned bounding box.
    pub fn bounding_extent_mm(&self) -> (f64, f64) {
        let (s, c) = self.orientation_rad.sin_cos();
        let (a, b) = (self.semi_major_mm, self.semi_minor_mm);
        (
            2.0 * (a * a * c * c + b * b * s * s).sqrt(),
            2.0 * (a * a * s * s + b * b * c * c).sqrt(),
        )
    }
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// `(horizontal_mm, vertical_mm)` full diameters by orientation quadrant: the
/// major axis counts as horizontal when θ ∈ [0, π/4) ∪ [3π/4, π), otherwise as
/// vertical.
pub fn image_axis_diameters(e: &EllipseParams) -> (f64, f64) {
    let (major, minor) = (2.0 * e.semi_major_mm, 2.0 * e.semi_minor_mm);
    if e.major_is_horizontal() {
        (major, minor)
    } else {
        (minor, major)
    }
}

/// Which ellipse measurement becomes a plane's primary diameter (frontal in
/// axial frames, sagittal in sagittal frames). The other one is the
/// complementary measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisPolicy {
    /// Axis classified horizontal by [`image_axis_diameters`].
    #[default]
    OrientationQuadrant,
    /// Axis classified vertical by [`image_axis_diameters`].
    Vertical,
    /// Horizontal extent of the ellipse's bounding box, regardless of axes.
    Horizontal,
    Major,
    Minor,
}

impl AxisPolicy {
    /// `(primary_mm, secondary_mm)` full diameters.
    pub fn diameters(&self, e: &EllipseParams) -> (f64, f64) {
        let (major, minor) = (2.0 * e.semi_major_mm, 2.0 * e.semi_minor_mm);
        match self {
            AxisPolicy::OrientationQuadrant => image_axis_diameters(e),
            AxisPolicy::Vertical => {
                let (h, v) = image_axis_diameters(e);
                (v, h)
            }
            AxisPolicy::Horizontal => e.bounding_extent_mm(),
            AxisPolicy::Major => (major, minor),
            AxisPolicy::Minor => (minor, major),
        }
    }
}

/// Conic fitted in normalized coordinates `u = (x − mean_x)·scale`,
/// `v = (y − mean_y)·scale`, coefficients `[A, B, C, D, E, F]` with unit norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicFit {
    pub coeffs: [f64; 6],
    pub mean: (f64, f64),
    pub scale: f64,
}

impl ConicFit {
    /// Algebraic residual of a point in input coordinates, evaluated in the
    /// normalized frame.
    pub fn residual(&self, (x, y): (f64, f64)) -> f64 {
        let u = (x - self.mean.0) * self.scale;
        let v = (y - self.mean.1) * self.scale;
        let [a, b, c, d, e, f] = self.coeffs;
        a * u * u + b * u * v + c * v * v + d * u + e * v + f
    }

    pub fn to_params(&self) -> Result<EllipseParams> {
        let n = conic_to_params(&self.coeffs)?;
        EllipseParams::new(
            (
                n.center_mm.0 / self.scale + self.mean.0,
                n.center_mm.1 / self.scale + self.mean.1,
            ),
            n.semi_major_mm / self.scale,
            n.semi_minor_mm / self.scale,
            n.orientation_rad,
        )
    }
}

/// Centroid and isotropic scale mapping the mean distance to the centroid to √2.
fn normalization(points: &[(f64, f64)]) -> ((f64, f64), f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| (p.0 - mx).hypot(p.1 - my))
        .sum::<f64>()
        / n;
    let scale = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    ((mx, my), scale)
}

/// Null vector of a (numerically) rank-2 3×3 matrix via the best-conditioned
/// cross product of its rows.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [
        m.row(0).transpose(),
        m.row(1).transpose(),
        m.row(2).transpose(),
    ];
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| rows[i].cross(&rows[j]))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .filter(|v| v.norm() > 0.0)
        .map(|v| v.normalize())
}

/// Direct least-squares conic fit constrained to ellipses.
pub fn fit_conic(points: &[(f64, f64)]) -> Result<ConicFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_POINTS,
            got: points.len(),
        });
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::FitFailure("non-finite point coordinates".into()));
    }
    let (mean, scale) = normalization(points);

    // Scatter blocks of the design matrix rows [u², uv, v² | u, v, 1].
    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    let mut cov = [0.0f64; 3];
    for &(x, y) in points {
        let u = (x - mean.0) * scale;
        let v = (y - mean.1) * scale;
        let quad = Vector3::new(u * u, u * v, v * v);
        let lin = Vector3::new(u, v, 1.0);
        s1 += quad * quad.transpose();
        s2 += quad * lin.transpose();
        s3 += lin * lin.transpose();
        cov[0] += u * u;
        cov[1] += u * v;
        cov[2] += v * v;
    }

    // Collinear (or coincident) scatter leaves no second direction.
    let tr = cov[0] + cov[2];
    let det = cov[0] * cov[2] - cov[1] * cov[1];
    if tr <= 0.0 || det <= 1e-12 * tr * tr {
        return Err(Error::FitFailure("points are collinear".into()));
    }

    let s3_inv = s3
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("rank-deficient design matrix".into()))?;
    let t = -s3_inv * s2.transpose();
    let reduced = s1 + s2 * t;
    // Premultiply by the inverse of the constraint matrix [[0,0,2],[0,-1,0],[2,0,0]].
    let m = Matrix3::new(
        reduced[(2, 0)] / 2.0,
        reduced[(2, 1)] / 2.0,
        reduced[(2, 2)] / 2.0,
        -reduced[(1, 0)],
        -reduced[(1, 1)],
        -reduced[(1, 2)],
        reduced[(0, 0)] / 2.0,
        reduced[(0, 1)] / 2.0,
        reduced[(0, 2)] / 2.0,
    );

    let eigenvalues = m.complex_eigenvalues();
    let scale_m = m.norm().max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lambda in eigenvalues.iter() {
        if lambda.im.abs() > 1e-9 * scale_m {
            continue;
        }
        let shifted = m - Matrix3::identity() * lambda.re;
        let Some(a1) = null_vector(&shifted) else {
            continue;
        };
        let constraint = 4.0 * a1[0] * a1[2] - a1[1] * a1[1];
        if constraint > 0.0 && best.as_ref().is_none_or(|(c, _)| constraint > *c) {
            best = Some((constraint, a1));
        }
    }
    let (_, a1) = best.ok_or_else(|| Error::FitFailure("no elliptical solution".into()))?;
    let a2 = t * a1;
    let mut coeffs = [a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]];
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::FitFailure("degenerate conic".into()));
    }
    for c in &mut coeffs {
        *c /= norm;
    }
    Ok(ConicFit {
        coeffs,
        mean,
        scale,
    })
}

/// Center, semi-axes and major-axis angle of an elliptical conic.
pub fn conic_to_params(coeffs: &[f64; 6]) -> Result<EllipseParams> {
    let [a, b, c, d, e, f] = *coeffs;
    let disc = 4.0 * a * c - b * b;
    if disc.is_nan() || disc <= 0.0 {
        return Err(Error::FitFailure("conic is not an ellipse".into()));
    }
    let cx = (b * e - 2.0 * c * d) / disc;
    let cy = (b * d - 2.0 * a * e) / disc;
    let f0 = f + (d * cx + e * cy) / 2.0;

    // Eigen-directions of the quadratic form [[a, b/2], [b/2, c]].
    let phi = 0.5 * b.atan2(a - c);
    let half_sum = (a + c) / 2.0;
    let radius = ((a - c) / 2.0).hypot(b / 2.0);
    let along_phi = half_sum + radius;
    let across_phi = half_sum - radius;
    let r_phi = -f0 / along_phi;
    let r_across = -f0 / across_phi;
    if !(r_phi > 0.0 && r_across > 0.0 && r_phi.is_finite() && r_across.is_finite()) {
        return Err(Error::FitFailure("imaginary or degenerate ellipse".into()));
    }
    EllipseParams::new((cx, cy), r_phi.sqrt(), r_across.sqrt(), phi)
}

/// Fits an ellipse through at least five non-collinear points.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Result<EllipseParams> {
    fit_conic(points)?.to_params()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(e: &EllipseParams, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| e.point_at(2.0 * PI * i as f64 / n as f64))
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Smallest angular distance modulo π.
    fn angle_gap(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    #[test]
    fn unit_circle() {
        let pts: Vec<_> = (0..100)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 100.0;
                (t.cos(), t.sin())
            })
            .collect();
        let e = fit_ellipse(&pts).unwrap();
        assert!(rel(e.semi_major_mm, 1.0) < 1e-9);
        assert!(rel(e.semi_minor_mm, 1.0) < 1e-9);
        assert!(e.center_mm.0.abs() < 1e-12 && e.center_mm.1.abs() < 1e-12);
        assert_eq!(e.orientation_rad, 0.0);
    }

    #[test]
    fn tilted_ellipse_recovered() {
        let truth = EllipseParams::new((3.0, 2.0), 2.5, 1.0, 30f64.to_radians()).unwrap();
        let fit = fit_conic(&samples(&truth, 100)).unwrap();
        let e = fit.to_params().unwrap();
        assert!(rel(e.center_mm.0, 3.0) < 1e-6);
        assert!(rel(e.center_mm.1, 2.0) < 1e-6);
        assert!(rel(e.semi_major_mm, 2.5) < 1e-6);
        assert!(rel(e.semi_minor_mm, 1.0) < 1e-6);
        assert!(rel(e.orientation_rad, 30f64.to_radians()) < 1e-6);
        let max_res = samples(&truth, 100)
            .iter()
            .map(|&p| fit.residual(p).abs())
            .fold(0.0, f64::max);
        assert!(max_res < 1e-9, "{max_res}");
        let [a, b, c, ..] = fit.coeffs;
        assert!(4.0 * a * c - b * b > 0.0);
    }

    #[test]
    fn too_few_or_collinear_points_fail() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (1.0, -1.0)];
        assert!(matches!(
            fit_ellipse(&pts),
            Err(Error::InsufficientPoints { needed: 5, got: 4 })
        ));
        let line: Vec<_> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!(matches!(fit_ellipse(&line), Err(Error::FitFailure(_))));
        let same = vec![(1.0, 1.0); 8];
        assert!(matches!(fit_ellipse(&same), Err(Error::FitFailure(_))));
    }

    #[test]
    fn quadrant_classification() {
        let at = |theta| EllipseParams::new((0.0, 0.0), 25.0, 20.0, theta).unwrap();
        assert_eq!(image_axis_diameters(&at(0.0)), (50.0, 40.0));
        assert_eq!(image_axis_diameters(&at(PI / 2.0)), (40.0, 50.0));
        assert_eq!(image_axis_diameters(&at(FRAC_PI_4)), (40.0, 50.0));
        assert_eq!(image_axis_diameters(&at(3.0 * FRAC_PI_4)), (50.0, 40.0));
        assert_eq!(image_axis_diameters(&at(0.9 * PI)), (50.0, 40.0));
    }

    #[test]
    fn policies() {
        let e = EllipseParams::new((0.0, 0.0), 25.0, 20.0, PI / 2.0).unwrap();
        assert_eq!(AxisPolicy::OrientationQuadrant.diameters(&e), (40.0, 50.0));
        assert_eq!(AxisPolicy::Vertical.diameters(&e), (50.0, 40.0));
        assert_eq!(AxisPolicy::Major.diameters(&e), (50.0, 40.0));
        assert_eq!(AxisPolicy::Minor.diameters(&e), (40.0, 50.0));
        let (w, h) = AxisPolicy::Horizontal.diameters(&e);
        assert!((w - 40.0).abs() < 1e-12 && (h - 50.0).abs() < 1e-12);
    }

    #[test]
    fn params_constructor_normalizes() {
        let e = EllipseParams::new((0.0, 0.0), 1.0, 2.0, 0.0).unwrap();
        assert_eq!((e.semi_major_mm, e.semi_minor_mm), (2.0, 1.0));
        assert!((e.orientation_rad - PI / 2.0).abs() < 1e-15);
        let e = EllipseParams::new((0.0, 0.0), 2.0, 1.0, -0.25).unwrap();
        assert!((e.orientation_rad - (PI - 0.25)).abs() < 1e-15);
        assert!(EllipseParams::new((0.0, 0.0), 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let truth = EllipseParams::new(
                (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
                rng.random_range(10.0..30.0),
                rng.random_range(5.0..10.0),
                rng.random_range(0.0..PI),
            )
            .unwrap();
            // Noisy points so the test exercises a genuine least-squares solution.
            let pts: Vec<_> = samples(&truth, 80)
                .into_iter()
                .map(|(x, y)| {
                    (
                        x + rng.random_range(-0.3..0.3),
                        y + rng.random_range(-0.3..0.3),
                    )
                })
                .collect();
            let (tx, ty) = (
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            let moved: Vec<_> = pts.iter().map(|&(x, y)| (x + tx, y + ty)).collect();
            let a = fit_ellipse(&pts).unwrap();
            let b = fit_ellipse(&moved).unwrap();
            assert!((b.center_mm.0 - a.center_mm.0 - tx).abs() < 1e-9 * (1.0 + tx.abs()));
            assert!((b.center_mm.1 - a.center_mm.1 - ty).abs() < 1e-9 * (1.0 + ty.abs()));
            assert!(rel(b.semi_major_mm, a.semi_major_mm) < 1e-9);
            assert!(rel(b.semi_minor_mm, a.semi_minor_mm) < 1e-9);
            assert!(angle_gap(b.orientation_rad, a.orientation_rad) < 1e-9);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let truth = EllipseParams::new(
                (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
                rng.random_range(10.0..30.0),
                rng.random_range(3.0..9.0),
                rng.random_range(0.0..PI),
            )
            .unwrap();
            let pts: Vec<_> = samples(&truth, 60)
                .into_iter()
                .map(|(x, y)| {
                    (
                        x + rng.random_range(-0.2..0.2),
                        y + rng.random_range(-0.2..0.2),
                    )
                })
                .collect();
            let phi: f64 = rng.random_range(-PI..PI);
            let (s, c) = phi.sin_cos();
            let rotated: Vec<_> = pts
                .iter()
                .map(|&(x, y)| (c * x - s * y, s * x + c * y))
                .collect();
            let a = fit_ellipse(&pts).unwrap();
            let b = fit_ellipse(&rotated).unwrap();
            assert!(rel(b.semi_major_mm, a.semi_major_mm) < 1e-9);
            assert!(rel(b.semi_minor_mm, a.semi_minor_mm) < 1e-9);
            assert!(angle_gap(b.orientation_rad, a.orientation_rad + phi) < 1e-9);
        }
    }

    #[test]
    fn jittered_contours_keep_diameters_within_two_percent() {
        for seed in 0..120u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = EllipseParams::new(
                (rng.random_range(20.0..60.0), rng.random_range(20.0..60.0)),
                rng.random_range(20.0..35.0),
                rng.random_range(15.0..20.0),
                rng.random_range(0.0..PI),
            )
            .unwrap();
            // Dense, contour-like sampling (about one point per 0.5 mm of arc).
            let pts: Vec<_> = samples(&truth, 360)
                .into_iter()
                .map(|(x, y)| {
                    (
                        x + rng.random_range(-0.5..0.5),
                        y + rng.random_range(-0.5..0.5),
                    )
                })
                .collect();
            let e = fit_ellipse(&pts).unwrap();
            assert!(
                rel(e.semi_major_mm, truth.semi_major_mm) < 0.02,
                "seed {seed}"
            );
            assert!(
                rel(e.semi_minor_mm, truth.semi_minor_mm) < 0.02,
                "seed {seed}"
            );
        }
    }
}
