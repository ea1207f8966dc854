//! Pixel-level operations on binary masks.

pub mod components;
pub mod contour;
pub mod distance;
pub mod pgm;

pub use components::{label_components, largest_component, Labeling};
pub use contour::{extract_contour, Contour};
pub use distance::{boundary_mask, squared_distance_transform};
pub use pgm::{decode_mask, encode_mask};

use crate::model::FrameMask;

/// Exact foreground pixel count.
pub fn area_px(mask: &FrameMask) -> usize {
    mask.area_px()
}

/// 4-neighborhood offsets as `(drow, dcol)`.
pub(crate) const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PixelSpacing;

    #[test]
    fn area_counts() {
        let sp = PixelSpacing::isotropic(1.0).unwrap();
        assert_eq!(area_px(&FrameMask::empty(10, 10, sp).unwrap()), 0);
        assert_eq!(
            area_px(&FrameMask::from_fn(10, 10, sp, |_, _| true).unwrap()),
            100
        );
        let checker = FrameMask::from_fn(4, 4, sp, |r, c| (r + c) % 2 == 0).unwrap();
        assert_eq!(area_px(&checker), 8);
    }
}
