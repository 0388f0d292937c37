use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// An 8-bit image as one `height × width` matrix per channel (1 or 3).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub channels: Vec<DMatrix<f64>>,
}

impl Image {
    pub fn new(channels: Vec<DMatrix<f64>>) -> Result<Self> {
        if !matches!(channels.len(), 1 | 3) {
            return Err(Error::arg(format!(
                "expected 1 or 3 channels, got {}",
                channels.len()
            )));
        }
        let shape = channels[0].shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::arg("image must be nonempty"));
        }
        if let Some(c) = channels.iter().find(|c| c.shape() != shape) {
            return Err(Error::shape(
                format!("{:?}", shape),
                format!("{:?}", c.shape()),
            ));
        }
        Ok(Image { channels })
    }

    /// `(height, width)`.
    pub fn shape(&self) -> (usize, usize) {
        self.channels[0].shape()
    }
}

/// Splits the header into whitespace-separated tokens, skipping `#` comments.
/// Returns the four tokens and the offset of the raster.
fn parse_header(bytes: &[u8]) -> Option<([String; 4], usize)> {
    let mut tokens: Vec<String> = Vec::with_capacity(4);
    let mut i = 0;
    while tokens.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return None;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return None;
    }
    let tokens: [String; 4] = tokens.try_into().ok()?;
    Some((tokens, i + 1))
}

/// Reads a binary PGM (`P5`) or PPM (`P6`) with depth 255.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (tokens, offset) =
        parse_header(&bytes).ok_or_else(|| Error::format(path, "malformed header"))?;
    let channels = match tokens[0].as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::format(path, format!("unsupported magic '{other}'"))),
    };
    let dim = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::format(path, format!("bad {what} '{s}'")))
    };
    let width = dim(&tokens[1], "width")?;
    let height = dim(&tokens[2], "height")?;
    if tokens[3] != "255" {
        return Err(Error::format(
            path,
            format!("depth must be 255, got '{}'", tokens[3]),
        ));
    }
    let raster = &bytes[offset..];
    let expected = width * height * channels;
    if raster.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} pixel bytes, got {}", raster.len()),
        ));
    }
    let planes = (0..channels)
        .map(|c| {
            DMatrix::from_fn(height, width, |i, j| {
                raster[(i * width + j) * channels + c] as f64
            })
        })
        .collect();
    Image::new(planes)
}

/// Writes 1 channel as `P5` or 3 as `P6`, rounding and clamping to `0..=255`.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (height, width) = image.shape();
    let channels = image.channels.len();
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut bytes = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    bytes.reserve(width * height * channels);
    for i in 0..height {
        for j in 0..width {
            for plane in &image.channels {
                bytes.push(plane[(i, j)].round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Deterministic 3-channel test image: a rank-4 smooth composite plus a
/// texture layer, quantised to 8 bits. `variant` selects the texture:
/// 0 stripes, 1 checkerboard, otherwise grain.
pub fn synthetic_test_image(variant: usize, rows: usize, cols: usize, seed: u64) -> Result<Image> {
    if rows < 2 || cols < 2 {
        return Err(Error::arg("test image needs at least 2x2 pixels"));
    }
    let mut rng = stream_rng(
        seed ^ (variant as u64).wrapping_mul(0x9e37_79b9),
        Stream::Image,
    );
    let mut profile = |len: usize| -> Vec<f64> {
        let freq: f64 = rng.random_range(0.5..3.0);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        (0..len)
            .map(|i| (std::f64::consts::PI * freq * i as f64 / len as f64 + phase).cos())
            .collect()
    };
    let factors: Vec<(Vec<f64>, Vec<f64>)> =
        (0..4).map(|_| (profile(rows), profile(cols))).collect();
    let weights = [60.0, 30.0, 15.0, 8.0];
    let mut channels = Vec::with_capacity(3);
    for c in 0..3 {
        let mix: Vec<f64> = (0..4).map(|_| rng.random_range(0.6..1.4)).collect();
        let base = 110.0 + 25.0 * c as f64;
        let grain: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-4.0..4.0))
            .collect();
        channels.push(DMatrix::from_fn(rows, cols, |i, j| {
            let smooth: f64 = (0..4)
                .map(|k| weights[k] * mix[k] * factors[k].0[i] * factors[k].1[j])
                .sum();
            let texture = match variant {
                0 => 6.0 * ((i as f64) * 1.7).sin(),
                1 => {
                    if (i / 4 + j / 4) % 2 == 0 {
                        5.0
                    } else {
                        -5.0
                    }
                }
                _ => grain[i * cols + j],
            };
            (base + smooth + texture).round().clamp(0.0, 255.0)
        }));
    }
    Image::new(channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_color_and_gray() {
        let dir = tempfile::tempdir().unwrap();
        let color = synthetic_test_image(1, 9, 13, 4).unwrap();
        let p = dir.path().join("c.ppm");
        save_image(&color, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        let loaded = load_image(&p).unwrap();
        assert_eq!(loaded, color);
        save_image(&loaded, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), bytes);

        let gray = Image::new(vec![DMatrix::from_fn(3, 5, |i, j| (i * 50 + j) as f64)]).unwrap();
        let q = dir.path().join("g.pgm");
        save_image(&gray, &q).unwrap();
        assert_eq!(load_image(&q).unwrap(), gray);
        assert!(fs::read(&q).unwrap().starts_with(b"P5"));
    }

    #[test]
    fn header_comments_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.ppm");
        let mut bytes = b"P6 # color\n# size next\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.shape(), (1, 2));
        assert_eq!(img.channels[0], DMatrix::from_row_slice(1, 2, &[1.0, 4.0]));
        assert_eq!(img.channels[2], DMatrix::from_row_slice(1, 2, &[3.0, 6.0]));
    }

    #[test]
    fn malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cases: [&[u8]; 5] = [
            b"P3\n1 1\n255\n\x00\x00\x00",
            b"P5\n1 1\n65535\n\x00\x00",
            b"P5\n2 2\n255\n\x00",
            b"P5\n0 1\n255\n",
            b"P5\n1",
        ];
        for (k, case) in cases.iter().enumerate() {
            let p = dir.path().join(format!("{k}.pgm"));
            fs::write(&p, case).unwrap();
            assert!(
                matches!(load_image(&p), Err(Error::Format { .. })),
                "case {k}"
            );
        }
        assert!(matches!(
            load_image(dir.path().join("none.pgm")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn test_images_are_deterministic_and_distinct() {
        let a = synthetic_test_image(0, 16, 20, 1).unwrap();
        assert_eq!(a, synthetic_test_image(0, 16, 20, 1).unwrap());
        assert_ne!(a, synthetic_test_image(1, 16, 20, 1).unwrap());
        assert_eq!(a.channels.len(), 3);
        assert!(a.channels.iter().all(|c| c
            .iter()
            .all(|v| (0.0..=255.0).contains(v) && v.fract() == 0.0)));
    }
}
