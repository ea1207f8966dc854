//! Outer boundary tracing (Moore neighborhood, 8-connected foreground).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::components::largest_component;
use super::NEIGHBORS_4;
use crate::error::{Error, Result};
use crate::model::FrameMask;

/// Closed, ordered boundary in physical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// `(x_mm, y_mm)` pixel centers.
    pub points: Vec<(f64, f64)>,
    /// `(row, col)` of each point.
    pub pixels: Vec<(usize, usize)>,
    /// Midpoints of the pixel edges between the traced pixels and the outer
    /// background, in trace order. These lie on the outline of the pixel
    /// region rather than half a pixel inside it.
    pub edge_points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Clockwise on screen (rows grow downwards), starting west.
const RING: [(isize, isize); 8] = [
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
];

fn ring_index(dr: isize, dc: isize) -> usize {
    RING.iter()
        .position(|&d| d == (dr, dc))
        .expect("backtrack pixel is a Moore neighbor")
}

/// Moore-neighbor trace of the outer boundary of the component containing
/// the first foreground pixel in raster order. Returns pixel coordinates
/// without repeating the start pixel at the end.
pub fn trace_boundary(mask: &FrameMask) -> Vec<(usize, usize)> {
    let Some(start) = mask.foreground().next() else {
        return Vec::new();
    };
    let start = (start.0 as isize, start.1 as isize);

    // Returns the next boundary pixel and the new backtrack (the background
    // neighbor examined just before it).
    let step = |p: (isize, isize), back: (isize, isize)| {
        let from = ring_index(back.0 - p.0, back.1 - p.1);
        let mut prev = back;
        for k in 1..=8 {
            let (dr, dc) = RING[(from + k) % 8];
            let q = (p.0 + dr, p.1 + dc);
            if mask.get(q.0, q.1) {
                return Some((q, prev));
            }
            prev = q;
        }
        None
    };

    // The raster-first pixel always has background to its west.
    let first_back = (start.0, start.1 - 1);
    let Some((second, mut back)) = step(start, first_back) else {
        return vec![(start.0 as usize, start.1 as usize)];
    };

    let mut path = vec![start];
    let mut current = second;
    // A simple boundary visits each pixel at most four times.
    let limit = 4 * mask.area_px() + 8;
    while path.len() <= limit {
        let (next, nb) = step(current, back).expect("connected to previous pixel");
        if current == start && next == second {
            break;
        }
        path.push(current);
        current = next;
        back = nb;
    }
    path.into_iter()
        .map(|(r, c)| (r as usize, c as usize))
        .collect()
}

/// Boundary of the largest component, converted to millimetres:
/// `x = col * dx_mm`, `y = row * dy_mm`.
pub fn extract_contour(mask: &FrameMask) -> Result<Contour> {
    let component = largest_component(mask);
    let pixels_in_component = component.area_px();
    if pixels_in_component < 3 {
        return Err(Error::DegenerateMask {
            pixels: pixels_in_component,
        });
    }
    let pixels = trace_boundary(&component);
    let sp = mask.spacing();
    let points = pixels
        .iter()
        .map(|&(r, c)| (c as f64 * sp.dx_mm(), r as f64 * sp.dy_mm()))
        .collect();
    let edge_points = outer_edge_points(&component, &pixels);
    Ok(Contour {
        points,
        pixels,
        edge_points,
        closed: true,
    })
}

/// Background reachable from outside the frame through 4-connected
/// background pixels; holes are excluded.
fn outer_background(mask: &FrameMask) -> Vec<bool> {
    let (w, h) = (mask.width(), mask.height());
    let mut outer = vec![false; w * h];
    let mut stack = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let on_border = row == 0 || col == 0 || row == h - 1 || col == w - 1;
            if on_border && !mask.contains(row, col) && !outer[row * w + col] {
                outer[row * w + col] = true;
                stack.push((row, col));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        for (dr, dc) in NEIGHBORS_4 {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            if !mask.contains(nr, nc) && !outer[nr * w + nc] {
                outer[nr * w + nc] = true;
                stack.push((nr, nc));
            }
        }
    }
    outer
}

fn outer_edge_points(component: &FrameMask, pixels: &[(usize, usize)]) -> Vec<(f64, f64)> {
    let (w, h) = (component.width(), component.height());
    let sp = component.spacing();
    let outer = outer_background(component);
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for &(r, c) in pixels {
        for (k, (dr, dc)) in NEIGHBORS_4.into_iter().enumerate() {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            let outside = nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w;
            if !outside && !outer[nr as usize * w + nc as usize] {
                continue;
            }
            if seen.insert((r, c, k)) {
                points.push((
                    (c as f64 + dc as f64 / 2.0) * sp.dx_mm(),
                    (r as f64 + dr as f64 / 2.0) * sp.dy_mm(),
                ));
            }
        }
    }
    points
}
