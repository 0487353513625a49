//! PGM (P2/P5) and 8-bit grayscale PNG reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::{BinaryMask, GrayImage};
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Loads a mask; any nonzero sample is object.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_image(path)?;
    BinaryMask::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| v > 0.0).collect(),
    )
}

/// Writes PNG when the extension is `.png`, binary PGM otherwise.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_u8(path.as_ref(), img.width(), img.height(), &img.to_u8())
}

pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_u8(path.as_ref(), mask.width(), mask.height(), &bytes)
}

fn write_u8(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let encoded = if is_png {
        encode_png(width, height, pixels)?
    } else {
        let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
        out.extend_from_slice(pixels);
        out
    };
    fs::write(path, encoded).map_err(|e| Error::io(path, e))
}

fn encode_png(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let png_err = |e: png::EncodingError| Error::Malformed {
        format: "PNG",
        offset: 0,
        reason: e.to_string(),
    };
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(pixels).map_err(png_err)?;
    }
    Ok(out)
}

/// Decodes PGM or PNG bytes, dispatching on the magic number.
pub(crate) fn decode(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        Err(Error::Malformed {
            format: "image",
            offset: 0,
            reason: "unrecognized magic number".into(),
        })
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let malformed = |reason: String| Error::Malformed {
        format: "PNG",
        offset: 0,
        reason,
    };
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| malformed(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| malformed("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| malformed(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(malformed(format!(
            "expected 8-bit grayscale, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let data = buf[..w * h].iter().map(|&b| b as f64).collect();
    GrayImage::new(w, h, data)
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn error(&self, reason: impl Into<String>) -> Error {
        Error::Malformed {
            format: "PGM",
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an unsigned integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed {
                format: "PGM",
                offset: start,
                reason: "integer overflow".into(),
            })
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let binary = bytes[1] == b'5';
    let mut cur = PgmCursor { bytes, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if width == 0 || height == 0 {
        return Err(cur.error("zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.error(format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let scale = 255.0 / maxval as f64;
    let mut data = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        if !bytes.get(cur.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            return Err(cur.error("missing whitespace before raster"));
        }
        cur.pos += 1;
        let sample = if maxval < 256 { 1 } else { 2 };
        let need = n * sample;
        if bytes.len() - cur.pos < need {
            cur.pos = bytes.len();
            return Err(cur.error(format!("raster truncated, need {need} bytes")));
        }
        for chunk in bytes[cur.pos..cur.pos + need].chunks(sample) {
            let v = if sample == 1 {
                chunk[0] as usize
            } else {
                ((chunk[0] as usize) << 8) | chunk[1] as usize
            };
            data.push(v);
        }
    } else {
        for _ in 0..n {
            data.push(cur.number()?);
        }
    }
    if let Some(i) = data.iter().position(|&v| v > maxval) {
        return Err(Error::Malformed {
            format: "PGM",
            offset: cur.pos,
            reason: format!("sample {i} exceeds maxval {maxval}"),
        });
    }
    let data = data
        .into_iter()
        .map(|v| if maxval == 255 { v as f64 } else { v as f64 * scale })
        .collect();
    GrayImage::new(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ascii_pgm_zeros() {
        let img = decode(b"P2\n# comment\n3 3\n255\n0 0 0\n0 0 0\n0 0 0\n").unwrap();
        assert_eq!(img.dims(), (3, 3));
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ascii_pgm_rescales_maxval() {
        let img = decode(b"P2 2 1 15 0 15").unwrap();
        assert_eq!(img.data(), &[0.0, 255.0]);
    }

    #[test]
    fn malformed_reports_offset() {
        match decode(b"P2\n3 x\n") {
            Err(Error::Malformed { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
        match decode(b"P5\n2 2\n255\n\x01\x02") {
            Err(Error::Malformed { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("unexpected {other:?}"),
        }
        assert!(decode(b"GIF89a").is_err());
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = GrayImage::from_fn(17, 9, |_, _| rng.random_range(0..=255u8) as f64);
        for name in ["a.pgm", "a.png"] {
            let p = dir.path().join(name);
            save_image(&img, &p).unwrap();
            assert_eq!(load_image(&p).unwrap(), img, "{name}");
        }
    }

    #[test]
    fn mask_png_thresholds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let bytes = encode_png(3, 1, &[0, 255, 0]).unwrap();
        fs::write(&p, bytes).unwrap();
        let m = load_mask(&p).unwrap();
        assert_eq!(m.data(), &[false, true, false]);

        let m2 = BinaryMask::from_fn(5, 4, |x, y| (x + y) % 3 == 0);
        let q = dir.path().join("m.pgm");
        save_mask(&m2, &q).unwrap();
        assert_eq!(load_mask(&q).unwrap(), m2);
    }
}
