//! Projector pattern cubes.
//!
//! Column codes vary only horizontally, so a cube stores one row profile per
//! frame and materializes full frames on export.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::codebook::{crc_append, gray_encode_q, gray_index, symbols_value, Codebook, Codeword};
use crate::error::{domain, Error, Result};
use crate::grid::Grid;
use crate::imageio;

/// Which codebook entry each projector column carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arrangement {
    /// Column `m` carries the word whose data string is the Gray code of `m`.
    Gray,
    /// Column `m` carries word `m`.
    Binary,
    /// Column `m` carries word `perm[m]`.
    Explicit(Vec<usize>),
}

impl Arrangement {
    /// Codebook index carried by column `m`.
    pub fn index(&self, m: usize, k: usize, q: u8) -> Result<usize> {
        match self {
            Arrangement::Gray if q == 2 => Ok(gray_index(m)),
            Arrangement::Gray => Ok(symbols_value(&gray_encode_q(m, k, q)?, q)),
            Arrangement::Binary => Ok(m),
            Arrangement::Explicit(perm) => perm
                .get(m)
                .copied()
                .ok_or_else(|| Error::Domain(format!("permutation has no entry for column {m}"))),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Arrangement::Gray => "gray",
            Arrangement::Binary => "binary",
            Arrangement::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `n` frames of `rows × cols` projector pixels with symbols in `0..q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternCube {
    rows: usize,
    q: u8,
    /// frame-major column profiles: `profiles[frame][col]`
    profiles: Vec<Vec<u8>>,
    /// columns that are lit; masked columns stay dark in every frame
    active: Vec<bool>,
    arrangement: Arrangement,
    codebook: String,
}

impl PatternCube {
    /// Builds a cube from explicit column codes (all of the same length).
    pub fn from_column_codes(
        rows: usize,
        q: u8,
        codes: &[Codeword],
        arrangement: Arrangement,
        codebook: impl Into<String>,
    ) -> Result<Self> {
        let n = codes.first().map_or(0, Codeword::len);
        if codes.iter().any(|c| c.len() != n) {
            return domain("column codes differ in length");
        }
        let profiles = (0..n)
            .map(|f| codes.iter().map(|c| c.symbols()[f]).collect())
            .collect();
        Ok(PatternCube {
            rows,
            q,
            profiles,
            active: vec![true; codes.len()],
            arrangement,
            codebook: codebook.into(),
        })
    }

    pub fn n_frames(&self) -> usize {
        self.profiles.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.profiles.first().map_or(0, Vec::len)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }

    pub fn codebook_name(&self) -> &str {
        &self.codebook
    }

    /// Symbol of `frame` at projector column `col` (identical on every row).
    #[inline]
    pub fn symbol(&self, frame: usize, col: usize) -> u8 {
        self.profiles[frame][col]
    }

    /// Normalized projector intensity in [0, 1] for `frame`, `col`.
    #[inline]
    pub fn level(&self, frame: usize, col: usize) -> f32 {
        self.profiles[frame][col] as f32 / (self.q - 1) as f32
    }

    /// Whether projector column `col` is lit (also in the all-on calibration frame).
    #[inline]
    pub fn is_active(&self, col: usize) -> bool {
        self.active[col]
    }

    pub fn active_columns(&self) -> &[bool] {
        &self.active
    }

    pub fn profile(&self, frame: usize) -> &[u8] {
        &self.profiles[frame]
    }

    /// Temporal string of projector column `col`.
    pub fn column_code(&self, col: usize) -> Codeword {
        Codeword::new(self.profiles.iter().map(|p| p[col]).collect())
    }

    pub fn column_codes(&self) -> Vec<Codeword> {
        (0..self.cols()).map(|c| self.column_code(c)).collect()
    }

    /// Full `rows × cols` image of one frame.
    pub fn frame(&self, frame: usize) -> Grid<u8> {
        let profile = &self.profiles[frame];
        Grid::from_fn(self.rows, self.cols(), |_, c| profile[c])
    }

    /// Copy with every column whose `active` flag is false switched off in all frames.
    pub fn masked(&self, active: &[bool]) -> Result<PatternCube> {
        if active.len() != self.cols() {
            return domain("active mask length differs from column count");
        }
        let mut out = self.clone();
        for (a, &on) in out.active.iter_mut().zip(active) {
            *a &= on;
        }
        for p in &mut out.profiles {
            for (v, &on) in p.iter_mut().zip(active) {
                if !on {
                    *v = 0;
                }
            }
        }
        Ok(out)
    }

    /// Appends CRC parity frames computed over each column's temporal string.
    pub fn with_crc(&self, poly: &[u8]) -> Result<PatternCube> {
        if self.q != 2 {
            return Err(Error::Unsupported("CRC frames need a binary cube".into()));
        }
        let codes = self
            .column_codes()
            .iter()
            .map(|c| crc_append(c.symbols(), poly))
            .collect::<Result<Vec<_>>>()?;
        let mut out = PatternCube::from_column_codes(
            self.rows,
            2,
            &codes,
            self.arrangement.clone(),
            format!("{}+crc{}", self.codebook, poly.len() - 1),
        )?;
        out.active = self.active.clone();
        Ok(out)
    }
}

/// Lays `book` out over `cols` projector columns using `arrangement`.
pub fn build_pattern_cube(book: &Codebook, rows: usize, cols: usize, arrangement: Arrangement) -> Result<PatternCube> {
    if cols > book.len() {
        return domain(format!("{cols} columns exceed codebook capacity {}", book.len()));
    }
    if rows == 0 || cols == 0 {
        return domain("pattern cube needs at least one row and column");
    }
    let mut codes = Vec::with_capacity(cols);
    for m in 0..cols {
        let idx = arrangement.index(m, book.k(), book.q())?;
        let word = book
            .words()
            .get(idx)
            .ok_or_else(|| Error::Domain(format!("arranged index {idx} outside codebook")))?;
        codes.push(word.clone());
    }
    if let Arrangement::Explicit(_) = arrangement {
        let mut seen = codes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != codes.len() {
            return domain("explicit arrangement repeats a codeword");
        }
    }
    PatternCube::from_column_codes(rows, book.q(), &codes, arrangement, book.name())
}

/// XORs every frame except `base` with frame `base`.
pub fn xor_transform(cube: &PatternCube, base: usize) -> Result<PatternCube> {
    let targets: Vec<usize> = (0..cube.n_frames()).filter(|&f| f != base).collect();
    xor_transform_frames(cube, base, &targets)
}

/// XORs the listed frames with frame `base`; other frames are copied unchanged.
pub fn xor_transform_frames(cube: &PatternCube, base: usize, targets: &[usize]) -> Result<PatternCube> {
    if cube.q != 2 {
        return Err(Error::Unsupported("XOR transform needs a binary cube".into()));
    }
    if base >= cube.n_frames() || targets.iter().any(|&t| t >= cube.n_frames()) {
        return domain("frame index out of range");
    }
    let mut out = cube.clone();
    let base_profile = cube.profiles[base].clone();
    for &t in targets.iter().filter(|&&t| t != base) {
        for (v, b) in out.profiles[t].iter_mut().zip(&base_profile) {
            *v ^= b;
        }
    }
    Ok(out)
}

/// XOR02: every frame above the second-finest is XORed with the second-finest
/// frame; the two finest frames are kept.
pub fn xor02(cube: &PatternCube) -> Result<PatternCube> {
    let n = cube.n_frames();
    if n < 2 {
        return domain("XOR02 needs at least two frames");
    }
    let targets: Vec<usize> = (0..n - 2).collect();
    let mut out = xor_transform_frames(cube, n - 2, &targets)?;
    out.codebook = format!("{}+xor02", cube.codebook);
    Ok(out)
}

/// Adjacent-column distance and stripe-width statistics of a cube.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrangementProfile {
    pub max_adjacent_distance: usize,
    pub mean_adjacent_distance: f64,
    /// Longest horizontal run of a constant value, per frame.
    pub frame_max_runs: Vec<usize>,
    /// Mean horizontal run length, per frame.
    pub frame_mean_runs: Vec<f64>,
}

pub fn adjacency_profile(cube: &PatternCube) -> Result<ArrangementProfile> {
    let cols = cube.cols();
    if cols < 2 {
        return domain("adjacency profile needs at least two columns");
    }
    let mut distances = vec![0usize; cols - 1];
    for p in &cube.profiles {
        for (d, w) in distances.iter_mut().zip(p.windows(2)) {
            if w[0] != w[1] {
                *d += 1;
            }
        }
    }
    let mut frame_max_runs = Vec::with_capacity(cube.n_frames());
    let mut frame_mean_runs = Vec::with_capacity(cube.n_frames());
    for p in &cube.profiles {
        let mut runs = Vec::new();
        let mut current = 1usize;
        for w in p.windows(2) {
            if w[0] == w[1] {
                current += 1;
            } else {
                runs.push(current);
                current = 1;
            }
        }
        runs.push(current);
        frame_max_runs.push(*runs.iter().max().unwrap());
        frame_mean_runs.push(runs.iter().sum::<usize>() as f64 / runs.len() as f64);
    }
    Ok(ArrangementProfile {
        max_adjacent_distance: *distances.iter().max().unwrap(),
        mean_adjacent_distance: distances.iter().sum::<usize>() as f64 / distances.len() as f64,
        frame_max_runs,
        frame_mean_runs,
    })
}

/// Frame file formats for [`export_frames`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameFormat {
    Pgm,
    Png,
}

impl FrameFormat {
    fn extension(self) -> &'static str {
        match self {
            FrameFormat::Pgm => "pgm",
            FrameFormat::Png => "png",
        }
    }
}

const MANIFEST: &str = "manifest.txt";

fn to_pixel(symbol: u8, q: u8) -> u8 {
    ((symbol as u32 * 255 + (q as u32 - 1) / 2) / (q as u32 - 1)) as u8
}

/// Writes one image per frame (0 → black, top symbol → 255) plus `manifest.txt`.
pub fn export_frames(cube: &PatternCube, dir: &Path, format: FrameFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    manifest.push_str(&format!("codebook {}\n", cube.codebook));
    manifest.push_str(&format!("arrangement {}\n", cube.arrangement));
    if let Arrangement::Explicit(perm) = &cube.arrangement {
        let perm: Vec<String> = perm.iter().map(usize::to_string).collect();
        manifest.push_str(&format!("permutation {}\n", perm.join(" ")));
    }
    manifest.push_str(&format!("q {}\nrows {}\ncols {}\nframes {}\n", cube.q, cube.rows, cube.cols(), cube.n_frames()));
    let mut paths = Vec::with_capacity(cube.n_frames());
    for f in 0..cube.n_frames() {
        let name = format!("frame_{f:03}.{}", format.extension());
        let path = dir.join(&name);
        let img = cube.frame(f).map(|&s| to_pixel(s, cube.q));
        match format {
            FrameFormat::Pgm => imageio::write_pgm(&path, &img)?,
            FrameFormat::Png => imageio::write_png_gray(&path, &img)?,
        }
        manifest.push_str(&name);
        manifest.push('\n');
        paths.push(path);
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(paths)
}

/// Reads a PGM export back into a cube.
pub fn import_frames(dir: &Path) -> Result<PatternCube> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let mut codebook = String::new();
    let mut arrangement = Arrangement::Binary;
    let mut q = 2u8;
    let mut files = Vec::new();
    let parse_num = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad manifest value {v:?}")));
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (key, value) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "codebook" => codebook = value.to_string(),
            "arrangement" => {
                arrangement = match value {
                    "gray" => Arrangement::Gray,
                    "binary" => Arrangement::Binary,
                    "explicit" => Arrangement::Explicit(Vec::new()),
                    other => return Err(Error::Parse(format!("unknown arrangement {other:?}"))),
                }
            }
            "permutation" => {
                arrangement = Arrangement::Explicit(value.split_whitespace().map(parse_num).collect::<Result<_>>()?)
            }
            "q" => q = parse_num(value)? as u8,
            "rows" | "cols" | "frames" => {}
            _ if key.ends_with(".pgm") => files.push(key.to_string()),
            _ => return Err(Error::Parse(format!("unexpected manifest line {line:?}"))),
        }
    }
    if q < 2 {
        return Err(Error::Parse("q must be at least 2".into()));
    }
    let mut rows = 0;
    let mut profiles = Vec::with_capacity(files.len());
    for name in &files {
        let img = imageio::read_pgm(&dir.join(name))?;
        rows = img.rows();
        let first = img.row(0).to_vec();
        if (1..img.rows()).any(|r| img.row(r) != first.as_slice()) {
            return Err(Error::Parse(format!("{name}: rows differ within a frame")));
        }
        let profile = first
            .iter()
            .map(|&px| {
                (0..q)
                    .find(|&s| to_pixel(s, q) == px)
                    .ok_or_else(|| Error::Parse(format!("{name}: pixel value {px} is not a pattern level")))
            })
            .collect::<Result<Vec<_>>>()?;
        profiles.push(profile);
    }
    let cols = profiles.first().map_or(0, Vec::len);
    Ok(PatternCube {
        rows,
        q,
        profiles,
        active: vec![true; cols],
        arrangement,
        codebook,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_codebook, GeneratorSpec, Preset};

    fn uncoded(k: usize) -> Codebook {
        build_codebook(&GeneratorSpec::Identity { k, q: 2 }, k, "id").unwrap()
    }

    #[test]
    fn two_bit_binary_and_gray() {
        let book = uncoded(2);
        let bin = build_pattern_cube(&book, 3, 4, Arrangement::Binary).unwrap();
        assert_eq!(bin.profile(0), &[0, 0, 1, 1]);
        assert_eq!(bin.profile(1), &[0, 1, 0, 1]);
        let gray = build_pattern_cube(&book, 3, 4, Arrangement::Gray).unwrap();
        assert_eq!(gray.profile(1), &[0, 1, 1, 0]);
    }

    #[test]
    fn capacity_enforced() {
        assert!(build_pattern_cube(&uncoded(2), 1, 5, Arrangement::Binary).is_err());
    }

    #[test]
    fn golay22_column_zero_is_zero() {
        let book = Preset::Golay22.build().unwrap();
        let cube = build_pattern_cube(&book, 2, 1024, Arrangement::Gray).unwrap();
        assert!(cube.column_code(0).symbols().iter().all(|&s| s == 0));
        assert_eq!(cube.n_frames(), 22);
    }

    #[test]
    fn xor_involution_and_base() {
        let cube = build_pattern_cube(&uncoded(10), 1, 1024, Arrangement::Gray).unwrap();
        let once = xor_transform(&cube, 8).unwrap();
        assert_eq!(once.profile(8), cube.profile(8));
        assert_eq!(xor_transform(&once, 8).unwrap(), cube);
    }

    #[test]
    fn xor02_has_short_runs() {
        let cube = build_pattern_cube(&uncoded(10), 1, 1024, Arrangement::Gray).unwrap();
        let x = xor02(&cube).unwrap();
        let prof = adjacency_profile(&x).unwrap();
        assert!(prof.frame_max_runs.iter().all(|&r| r <= 4), "{:?}", prof.frame_max_runs);
        // the plain Gray code's coarsest stripe spans half the projector
        assert_eq!(adjacency_profile(&cube).unwrap().frame_max_runs[0], 512);
    }

    #[test]
    fn xor02_crc_cube_matches_preset() {
        let cube = build_pattern_cube(&uncoded(10), 1, 1024, Arrangement::Gray).unwrap();
        let cube = xor02(&cube).unwrap().with_crc(&crate::codebook::CRC5_ITU).unwrap();
        let book = Preset::Xor02Crc5.build().unwrap();
        assert_eq!(cube.column_codes(), book.words());
    }

    #[test]
    fn non_binary_xor_rejected() {
        let book = Preset::Ternary6.build().unwrap();
        let cube = build_pattern_cube(&book, 1, 9, Arrangement::Gray).unwrap();
        assert!(matches!(xor_transform(&cube, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn masked_columns_go_dark() {
        let cube = build_pattern_cube(&uncoded(2), 1, 4, Arrangement::Binary).unwrap();
        let m = cube.masked(&[true, true, false, true]).unwrap();
        assert_eq!(m.column_code(2).symbols(), &[0, 0]);
        assert_eq!(m.column_code(3).symbols(), &[1, 1]);
    }
}
