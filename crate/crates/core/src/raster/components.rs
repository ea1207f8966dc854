//! 8-connected component labeling (two-pass, union-find).

use crate::model::FrameMask;

/// Disjoint-set forest over provisional labels.
#[derive(Debug, Default)]
struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grandparent = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grandparent;
            x = grandparent;
        }
        x
    }

    /// Merges two sets; the smaller root id survives so roots follow raster order.
    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (keep, drop) = if ra <= rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop as usize] = keep;
        keep
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub area_px: usize,
    /// First pixel of the component in raster order, i.e. its lexicographically smallest `(row, col)`.
    pub seed: (usize, usize),
}

/// Per-pixel component labels; 0 is background, components are numbered from 1
/// in order of their seed pixel.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    /// `components[i]` describes label `i + 1`.
    pub components: Vec<Component>,
}

impl Labeling {
    /// Label of the largest component; ties go to the smallest seed.
    pub fn largest(&self) -> Option<u32> {
        self.components
            .iter()
            .enumerate()
            // Components are seed-ordered, so the first maximum wins ties.
            .fold(None, |best: Option<(usize, usize)>, (i, c)| match best {
                Some((_, area)) if area >= c.area_px => best,
                _ => Some((i, c.area_px)),
            })
            .map(|(i, _)| i as u32 + 1)
    }
}

pub fn label_components(mask: &FrameMask) -> Labeling {
    let (w, h) = (mask.width(), mask.height());
    let mut provisional = vec![0u32; w * h];
    let mut uf = UnionFind::default();
    uf.make_set(); // background sentinel, id 0

    // First pass: provisional labels from the already visited half-neighborhood.
    for row in 0..h {
        for col in 0..w {
            if !mask.contains(row, col) {
                continue;
            }
            let (r, c) = (row as isize, col as isize);
            let mut label = 0u32;
            for (dr, dc) in [(-1, -1), (-1, 0), (-1, 1), (0, -1)] {
                let (nr, nc) = (r + dr, c + dc);
                if !mask.get(nr, nc) {
                    continue;
                }
                let n = provisional[nr as usize * w + nc as usize];
                label = if label == 0 { n } else { uf.union(label, n) };
            }
            if label == 0 {
                label = uf.make_set();
            }
            provisional[row * w + col] = label;
        }
    }

    // Second pass: resolve to roots and renumber densely in raster order.
    let mut dense = vec![0u32; uf.parent.len()];
    let mut components: Vec<Component> = Vec::new();
    let mut labels = vec![0u32; w * h];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = uf.find(p) as usize;
        if dense[root] == 0 {
            components.push(Component {
                area_px: 0,
                seed: (i / w, i % w),
            });
            dense[root] = components.len() as u32;
        }
        let label = dense[root];
        components[label as usize - 1].area_px += 1;
        labels[i] = label;
    }

    Labeling {
        width: w,
        height: h,
        labels,
        components,
    }
}

/// Keeps only the largest 8-connected component, ties broken by the
/// lexicographically smallest seed pixel. Empty input gives empty output.
pub fn largest_component(mask: &FrameMask) -> FrameMask {
    let labeling = label_components(mask);
    let Some(keep) = labeling.largest() else {
        return mask.clone();
    };
    let pixels = labeling.labels.iter().map(|&l| l == keep).collect();
    FrameMask::from_pixels(mask.width(), mask.height(), mask.spacing(), pixels)
        .expect("same geometry as input")
}

/// Area of the largest 8-connected component, 0 for an empty mask.
pub fn largest_component_area(mask: &FrameMask) -> usize {
    let labeling = label_components(mask);
    labeling
        .largest()
        .map(|l| labeling.components[l as usize - 1].area_px)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PixelSpacing;
    use proptest::prelude::*;

    fn sp() -> PixelSpacing {
        PixelSpacing::isotropic(1.0).unwrap()
    }

    fn rect(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<(usize, usize)> {
        rows.flat_map(|r| cols.clone().map(move |c| (r, c)))
            .collect()
    }

    /// Flood-fill reference labeling, independent of the union-find pass.
    fn flood_component_sizes(mask: &FrameMask) -> Vec<usize> {
        let (w, h) = (mask.width(), mask.height());
        let mut seen = vec![false; w * h];
        let mut sizes = Vec::new();
        for (r0, c0) in mask.foreground() {
            if seen[r0 * w + c0] {
                continue;
            }
            let mut stack = vec![(r0, c0)];
            seen[r0 * w + c0] = true;
            let mut n = 0;
            while let Some((r, c)) = stack.pop() {
                n += 1;
                for dr in -1..=1isize {
                    for dc in -1..=1isize {
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if mask.get(nr, nc) && !seen[nr as usize * w + nc as usize] {
                            seen[nr as usize * w + nc as usize] = true;
                            stack.push((nr as usize, nc as usize));
                        }
                    }
                }
            }
            sizes.push(n);
        }
        sizes
    }

    #[test]
    fn keeps_the_bigger_blob() {
        let mut fg = rect(0..4, 0..5); // 20 px
        fg.extend(rect(8..9, 8..13)); // 5 px
        let m = FrameMask::from_foreground(16, 16, sp(), fg).unwrap();
        let big = largest_component(&m);
        assert_eq!(big.area_px(), 20);
        assert!(big.contains(0, 0));
        assert!(!big.contains(8, 8));
    }

    #[test]
    fn single_blob_is_identity() {
        let m = FrameMask::from_foreground(10, 10, sp(), rect(2..6, 3..7)).unwrap();
        assert_eq!(largest_component(&m), m);
    }

    #[test]
    fn tie_goes_to_smallest_seed() {
        let mut fg = rect(5..7, 5..10); // seed (5,5), 10 px
        fg.extend(rect(0..2, 0..5)); // seed (0,0), 10 px
        let m = FrameMask::from_foreground(12, 12, sp(), fg).unwrap();
        let big = largest_component(&m);
        assert_eq!(big.area_px(), 10);
        assert!(big.contains(0, 0));
        assert!(!big.contains(5, 5));
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let m = FrameMask::from_foreground(4, 4, sp(), [(0, 0), (1, 1), (2, 2), (3, 3)]).unwrap();
        assert_eq!(label_components(&m).components.len(), 1);
    }

    #[test]
    fn u_shape_merges_late() {
        // Two arms joined only on the bottom row force a union in pass one.
        let mut fg = rect(0..4, 0..1);
        fg.extend(rect(0..4, 4..5));
        fg.extend(rect(4..5, 0..5));
        let m = FrameMask::from_foreground(6, 6, sp(), fg).unwrap();
        let l = label_components(&m);
        assert_eq!(l.components.len(), 1);
        assert_eq!(l.components[0].area_px, 13);
        assert_eq!(l.components[0].seed, (0, 0));
    }

    #[test]
    fn empty_stays_empty() {
        let m = FrameMask::empty(5, 5, sp()).unwrap();
        assert!(largest_component(&m).is_empty());
        assert_eq!(largest_component_area(&m), 0);
    }

    proptest! {
        #[test]
        fn matches_flood_fill_and_never_grows(
            width in 1usize..20, height in 1usize..20, bits in proptest::collection::vec(any::<bool>(), 400)
        ) {
            let m = FrameMask::from_fn(width, height, sp(), |r, c| bits[r * 20 + c]).unwrap();
            let mut expected = flood_component_sizes(&m);
            let labeling = label_components(&m);
            let mut got: Vec<_> = labeling.components.iter().map(|c| c.area_px).collect();
            expected.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(&got, &expected);

            let big = largest_component(&m);
            prop_assert!(big.area_px() <= m.area_px());
            prop_assert_eq!(big.area_px() == m.area_px(), expected.len() <= 1);
        }
    }
}
