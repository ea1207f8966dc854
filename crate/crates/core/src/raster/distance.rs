//! Exact Euclidean distance transform with anisotropic pixel spacing.
//!
//! Separable lower-envelope algorithm (Felzenszwalb & Huttenlocher): an exact
//! 1D pass down every column followed by a parabola-envelope pass along every
//! row. Squared distances are accumulated as `(dcol * dx)^2 + (drow * dy)^2`
//! so that results are bit-comparable with a direct pairwise evaluation.

use super::NEIGHBORS_4;
use crate::model::FrameMask;

/// Foreground pixels with at least one background 4-neighbor. Pixels outside
/// the frame count as background.
pub fn boundary_mask(mask: &FrameMask) -> FrameMask {
    FrameMask::from_fn(mask.width(), mask.height(), mask.spacing(), |r, c| {
        let (r, c) = (r as isize, c as isize);
        mask.get(r, c)
            && NEIGHBORS_4
                .iter()
                .any(|&(dr, dc)| !mask.get(r + dr, c + dc))
    })
    .expect("same geometry as input")
}

/// Squared physical distance (mm²) from every pixel to the nearest foreground
/// pixel of `seeds`; `f64::INFINITY` everywhere when `seeds` is empty.
pub fn squared_distance_transform(seeds: &FrameMask) -> Vec<f64> {
    let (w, h) = (seeds.width(), seeds.height());
    let sp = seeds.spacing();

    // Column pass: exact integer row offset to the nearest seed in the column.
    let mut column_sq = vec![f64::INFINITY; w * h];
    let mut nearest = vec![None::<usize>; h];
    for col in 0..w {
        let mut last = None;
        for (row, slot) in nearest.iter_mut().enumerate() {
            if seeds.contains(row, col) {
                last = Some(row);
            }
            *slot = last;
        }
        let mut next = None;
        for row in (0..h).rev() {
            if seeds.contains(row, col) {
                next = Some(row);
            }
            let up = nearest[row].map(|s| row - s);
            let down = next.map(|s| s - row);
            let offset = match (up, down) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            if let Some(dr) = offset {
                let y = dr as f64 * sp.dy_mm();
                column_sq[row * w + col] = y * y;
            }
        }
    }

    // Row pass over the column results.
    let mut out = vec![f64::INFINITY; w * h];
    let mut scratch = Envelope::with_capacity(w);
    for row in 0..h {
        let f = &column_sq[row * w..(row + 1) * w];
        scratch.transform(f, sp.dx_mm(), &mut out[row * w..(row + 1) * w]);
    }
    out
}

struct Envelope {
    /// Column index of each envelope parabola.
    sites: Vec<usize>,
    /// Left breakpoint of each parabola; `bounds[k + 1]` is its right breakpoint.
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `out[q] = min_p ((q - p) * step)^2 + f[p]`.
    fn transform(&mut self, f: &[f64], step: f64, out: &mut [f64]) {
        let s2 = step * step;
        self.sites.clear();
        self.bounds.clear();

        let value = |p: usize, q: usize| {
            let x = (q as f64 - p as f64) * step;
            x * x + f[p]
        };
        let intersect = |p: usize, q: usize| {
            let (pf, qf) = (p as f64, q as f64);
            ((f[q] + s2 * qf * qf) - (f[p] + s2 * pf * pf)) / (2.0 * s2 * (qf - pf))
        };

        for (q, fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            loop {
                let Some(&top) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let s = intersect(top, q);
                if s <= *self.bounds.last().expect("one bound per site") {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }

        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            // Breakpoints carry rounding error; settle near-ties against the
            // neighboring parabolas with the exact per-candidate value.
            let mut best = value(self.sites[k], q);
            if k > 0 {
                best = best.min(value(self.sites[k - 1], q));
            }
            if k + 1 < self.sites.len() {
                best = best.min(value(self.sites[k + 1], q));
            }
            *o = best;
        }
    }
}
