//! Binary PGM (P5, 8-bit) images.

use std::path::Path;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixel intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
}

pub fn parse(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("non-ASCII PGM header".into()))?);
    }
    if fields[0] != "P5" {
        return Err(Error::Format(format!("expected binary PGM magic P5, found {}", fields[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM header field {s:?}")));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(Error::Format(format!("only 8-bit PGM (maxval 255) is supported, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let count = width * height;
    if count == 0 || bytes.len() < pos + count {
        return Err(Error::Format("PGM raster is empty or truncated".into()));
    }
    let pixels = bytes[pos..pos + count].iter().map(|b| *b as f64 / 255.0).collect();
    Ok(GrayImage { width, height, pixels })
}

pub fn encode(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.pixels.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn read(path: &Path) -> Result<GrayImage> {
    parse(&std::fs::read(path)?)
}

pub fn write(path: &Path, image: &GrayImage) -> Result<()> {
    crate::write_atomic(path, &encode(image))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        bytes.extend([0u8, 255, 51, 102]);
        let img = parse(&bytes).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![0.0, 1.0, 0.2, 0.4]);
        assert_eq!(parse(&encode(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(matches!(parse(b"P2\n2 2\n255\n0 0 0 0"), Err(Error::Format(_))));
        assert!(matches!(parse(b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(parse(b"P5\n2 2\n255\n\0"), Err(Error::Format(_))));
    }
}
