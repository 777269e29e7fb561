//! Minimal readers and writers for binary PGM (P5) and PFM, plus PNG output.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Writes an 8-bit binary PGM (maxval 255).
pub fn write_pgm(path: &Path, image: &Grid<u8>) -> Result<()> {
    let mut out = Vec::with_capacity(image.len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.cols(), image.rows())?;
    out.extend_from_slice(image.as_slice());
    fs::write(path, out)?;
    Ok(())
}

/// Splits the next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("truncated header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::Parse("non-ASCII header".into()))
}

fn parse_dim(tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse(format!("bad dimension {tok:?}")))
}

/// Reads an 8-bit binary PGM.
pub fn read_pgm(path: &Path) -> Result<Grid<u8>> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    if next_token(&bytes, &mut pos)? != "P5" {
        return Err(Error::Parse(format!("{} is not a binary PGM", path.display())));
    }
    let cols = parse_dim(next_token(&bytes, &mut pos)?)?;
    let rows = parse_dim(next_token(&bytes, &mut pos)?)?;
    let maxval = parse_dim(next_token(&bytes, &mut pos)?)?;
    if maxval != 255 {
        return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
    }
    pos += 1; // single whitespace byte after maxval
    let data = bytes
        .get(pos..pos + rows * cols)
        .ok_or_else(|| Error::Parse("PGM pixel data truncated".into()))?;
    Ok(Grid::from_vec(rows, cols, data.to_vec()))
}

/// Writes a single-channel little-endian PFM (negative scale), bottom row first.
pub fn write_pfm(path: &Path, image: &Grid<f32>) -> Result<()> {
    write_pfm_with(path, image, true)
}

pub(crate) fn write_pfm_with(path: &Path, image: &Grid<f32>, little_endian: bool) -> Result<()> {
    let mut out = Vec::with_capacity(image.len() * 4 + 32);
    let scale = if little_endian { -1.0 } else { 1.0 };
    write!(out, "Pf\n{} {}\n{scale:.1}\n", image.cols(), image.rows())?;
    for r in (0..image.rows()).rev() {
        for &v in image.row(r) {
            if little_endian {
                out.extend_from_slice(&v.to_le_bytes());
            } else {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a single-channel PFM; the sign of the scale selects byte order and
/// its magnitude multiplies every sample.
pub fn read_pfm(path: &Path) -> Result<Grid<f32>> {
    let bytes = fs::read(path)?;
    let mut pos = 0;
    match next_token(&bytes, &mut pos)? {
        "Pf" => {}
        "PF" => return Err(Error::Parse("color PFM is not supported".into())),
        other => return Err(Error::Parse(format!("bad PFM magic {other:?}"))),
    }
    let cols = parse_dim(next_token(&bytes, &mut pos)?)?;
    let rows = parse_dim(next_token(&bytes, &mut pos)?)?;
    let scale_tok = next_token(&bytes, &mut pos)?;
    let scale: f32 = scale_tok
        .parse()
        .map_err(|_| Error::Parse(format!("bad PFM scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Parse("PFM scale must be finite and nonzero".into()));
    }
    pos += 1;
    let payload = bytes
        .get(pos..pos + rows * cols * 4)
        .ok_or_else(|| Error::Parse("PFM pixel data truncated".into()))?;
    let little = scale < 0.0;
    let magnitude = scale.abs();
    let mut grid = Grid::filled(rows, cols, 0.0f32);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let file_row = i / cols;
        grid.set(rows - 1 - file_row, i % cols, v * magnitude);
    }
    Ok(grid)
}

pub fn write_png_gray(path: &Path, image: &Grid<u8>) -> Result<()> {
    image::save_buffer(
        path,
        image.as_slice(),
        image.cols() as u32,
        image.rows() as u32,
        image::ExtendedColorType::L8,
    )?;
    Ok(())
}

pub fn write_png_rgb(path: &Path, image: &Grid<[u8; 3]>) -> Result<()> {
    let flat: Vec<u8> = image.iter().flat_map(|p| p.iter().copied()).collect();
    image::save_buffer(
        path,
        &flat,
        image.cols() as u32,
        image.rows() as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let g = Grid::from_fn(3, 5, |r, c| (r * 40 + c) as u8);
        write_pgm(&p, &g).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), g);
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n5 3\n255\n"));
    }

    #[test]
    fn pfm_endianness_symmetry() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::from_fn(4, 3, |r, c| r as f32 * 1.5 - c as f32 + 0.25);
        let le = dir.path().join("le.pfm");
        let be = dir.path().join("be.pfm");
        write_pfm_with(&le, &g, true).unwrap();
        write_pfm_with(&be, &g, false).unwrap();
        let a = read_pfm(&le).unwrap();
        let b = read_pfm(&be).unwrap();
        assert_eq!(a, g);
        assert_eq!(a, b);
    }

    #[test]
    fn pfm_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pfm");
        fs::write(&p, b"P7\n1 1\n-1.0\n\0\0\0\0").unwrap();
        assert!(matches!(read_pfm(&p), Err(Error::Parse(_))));
        fs::write(&p, b"Pf\n2 2\n-1.0\n\0\0\0\0").unwrap();
        assert!(matches!(read_pfm(&p), Err(Error::Parse(_))));
    }
}
