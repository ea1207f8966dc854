//! Binary PGM (P5) mask files, maxval 255.

use crate::error::{Error, Result};
use crate::model::{FrameMask, PixelSpacing};

/// Pixel values strictly above this are foreground.
pub const FOREGROUND_THRESHOLD: u8 = 127;

const FOREGROUND_VALUE: u8 = 255;

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("missing P5 magic number".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // Whitespace and comments may precede every header field.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            let name = ["width", "height", "maxval"][i];
            return Err(Error::Format(format!("expected {name} in header")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::Format(format!("header value {text} out of range")))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("truncated header".into())),
    }
    Ok(Header {
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_offset: pos,
    })
}

/// Decodes a P5 file into a mask; values > 127 are foreground.
pub fn decode_mask(bytes: &[u8], spacing: PixelSpacing) -> Result<FrameMask> {
    let h = parse_header(bytes)?;
    if h.maxval != 255 {
        return Err(Error::Format(format!(
            "maxval must be 255, got {}",
            h.maxval
        )));
    }
    if h.width == 0 || h.height == 0 {
        return Err(Error::Format(format!(
            "empty image {}x{}",
            h.width, h.height
        )));
    }
    let expected = h
        .width
        .checked_mul(h.height)
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let payload = &bytes[h.data_offset..];
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    let pixels = payload[..expected]
        .iter()
        .map(|&v| v > FOREGROUND_THRESHOLD)
        .collect();
    FrameMask::from_pixels(h.width, h.height, spacing, pixels)
}

/// Encodes a mask as P5 with foreground 255 and background 0.
pub fn encode_mask(mask: &FrameMask) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", mask.width(), mask.height());
    let mut out = Vec::with_capacity(header.len() + mask.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(
        mask.pixels()
            .iter()
            .map(|&p| if p { FOREGROUND_VALUE } else { 0 }),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sp() -> PixelSpacing {
        PixelSpacing::isotropic(0.4).unwrap()
    }

    fn pgm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
        let mut v = format!("P5 {width} {height} 255\n").into_bytes();
        v.extend_from_slice(data);
        v
    }

    #[test]
    fn all_white_and_all_black() {
        let m = decode_mask(&pgm(4, 4, &[255; 16]), sp()).unwrap();
        assert_eq!(m.area_px(), 16);
        let m = decode_mask(&pgm(4, 4, &[0; 16]), sp()).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn threshold_is_strictly_above_127() {
        let m = decode_mask(&pgm(3, 1, &[127, 128, 200]), sp()).unwrap();
        assert_eq!(m.pixels(), &[false, true, true]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 # width\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255]);
        let m = decode_mask(&bytes, sp()).unwrap();
        assert_eq!((m.width(), m.height()), (2, 1));
        assert!(m.contains(0, 1));
    }

    #[test]
    fn rejects_bad_files() {
        let short = pgm(4, 4, &[255; 15]);
        assert!(
            matches!(decode_mask(&short, sp()), Err(Error::Format(m)) if m.contains("truncated"))
        );

        let mut p2 = pgm(1, 1, &[0]);
        p2[1] = b'2';
        assert!(matches!(decode_mask(&p2, sp()), Err(Error::Format(m)) if m.contains("magic")));

        let mut deep = b"P5 1 1 65535\n".to_vec();
        deep.extend_from_slice(&[0, 0]);
        assert!(matches!(decode_mask(&deep, sp()), Err(Error::Format(m)) if m.contains("maxval")));

        assert!(decode_mask(b"P5 4", sp()).is_err());
        assert!(decode_mask(b"", sp()).is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(
            width in 1usize..24,
            height in 1usize..24,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let m = FrameMask::from_fn(width, height, sp(), |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 63 == 1
            }).unwrap();
            let back = decode_mask(&encode_mask(&m), sp()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
