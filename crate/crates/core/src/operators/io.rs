//! Text formats for operator index sets.
//!
//! Mask file: header `m n p`, then `p` lines `i j` (0-based).
//! DCT-keep file: header `m n p`, then `p` lines holding a flattened
//! row-major coefficient index.

use std::fmt::Write as _;
use std::path::Path;

use super::{PartialDct2D, SamplingMask};
use crate::error::{Error, Result};
use crate::scalar::Real;

struct Parsed {
    rows: usize,
    cols: usize,
    lines: Vec<Vec<usize>>,
}

fn parse(path: &Path, width: usize) -> Result<Parsed> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let numbers = |no: usize, line: &str| -> Result<Vec<usize>> {
        line.split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| {
                    Error::format(path, format!("line {}: bad integer '{tok}'", no + 1))
                })
            })
            .collect()
    };
    let (no, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty file"))?;
    let header = numbers(no, header)?;
    let [rows, cols, p] = header[..] else {
        return Err(Error::format(path, "header must be 'm n p'"));
    };
    let mut body = Vec::with_capacity(p);
    for (no, line) in lines {
        let nums = numbers(no, line)?;
        if nums.len() != width {
            return Err(Error::format(
                path,
                format!(
                    "line {}: expected {width} values, got {}",
                    no + 1,
                    nums.len()
                ),
            ));
        }
        body.push(nums);
    }
    if body.len() != p {
        return Err(Error::format(
            path,
            format!("header declares {p} entries, found {}", body.len()),
        ));
    }
    Ok(Parsed {
        rows,
        cols,
        lines: body,
    })
}

fn rewrap(path: &Path, err: Error) -> Error {
    match err {
        Error::Argument(msg) => Error::format(path, msg),
        other => other,
    }
}

pub fn read_mask_file(path: impl AsRef<Path>) -> Result<SamplingMask> {
    let path = path.as_ref();
    let parsed = parse(path, 2)?;
    let indices = parsed.lines.iter().map(|v| (v[0], v[1])).collect();
    SamplingMask::new(parsed.rows, parsed.cols, indices).map_err(|e| rewrap(path, e))
}

pub fn write_mask_file(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    let path = path.as_ref();
    let (m, n) = mask.shape();
    let mut out = format!("{m} {n} {}\n", mask.len());
    for &(i, j) in mask.indices() {
        let _ = writeln!(out, "{i} {j}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_keep_file<T: Real>(path: impl AsRef<Path>) -> Result<PartialDct2D<T>> {
    let path = path.as_ref();
    let parsed = parse(path, 1)?;
    let kept = parsed.lines.iter().map(|v| v[0]).collect();
    PartialDct2D::new(parsed.rows, parsed.cols, kept).map_err(|e| rewrap(path, e))
}

pub fn write_keep_file<T: Real>(path: impl AsRef<Path>, dct: &PartialDct2D<T>) -> Result<()> {
    let path = path.as_ref();
    let (m, n) = dct.shape();
    let mut out = format!("{m} {n} {}\n", dct.len());
    for &k in dct.kept() {
        let _ = writeln!(out, "{k}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearMap;

    #[test]
    fn mask_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.txt");
        let mask = SamplingMask::new(3, 4, vec![(0, 1), (2, 3), (1, 0)]).unwrap();
        write_mask_file(&path, &mask).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "3 4 3\n0 1\n2 3\n1 0\n"
        );
        assert_eq!(read_mask_file(&path).unwrap(), mask);
    }

    #[test]
    fn keep_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keep.txt");
        let LinearMap::PartialDct2D(dct) =
            LinearMap::<f64>::random_dct(5, 5, 0.4, 3, false).unwrap()
        else {
            unreachable!()
        };
        write_keep_file(&path, &dct).unwrap();
        let back: PartialDct2D<f64> = read_keep_file(&path).unwrap();
        assert_eq!(back.kept(), dct.kept());
        assert_eq!(back.shape(), (5, 5));
    }

    #[test]
    fn malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        for body in [
            "",
            "3 3\n",
            "2 2 2\n0 0\n",
            "2 2 1\n0 x\n",
            "2 2 1\n5 0\n",
            "2 2 2\n0 0\n0 0\n",
        ] {
            std::fs::write(&path, body).unwrap();
            assert!(
                matches!(read_mask_file(&path), Err(Error::Format { .. })),
                "{body:?}"
            );
        }
        assert!(matches!(
            read_mask_file(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
