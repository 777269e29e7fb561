//! Correspondence decoding.
//!
//! Captured frames are normalized against the calibration pair, then each
//! pixel's received string is matched against every projector column's code.
//! Soft decoding ranks columns by squared Euclidean distance on the normalized
//! values; hard decoding first rounds to symbols and ranks by Hamming distance.

mod refine;
mod sweep;

pub use refine::{confidence_median_filter, list_decode_order_prior, OrderPriorResult};
pub use sweep::{
    aggregate, mid_snr_ratio, run_method, sweep, DecodeMethod, DecodeOptions, SweepCode, SweepRecord, SweepRow, SweepSpec,
};

use crate::channel::{CaptureCube, Scene};
use crate::codebook::{Codebook, Codeword};
use crate::error::{domain, Result};
use crate::grid::{DisparityMap, Grid, Mask};
use crate::par;
use crate::patterns::PatternCube;

/// Pixels whose calibration contrast `on - off` is at or below this are invalid.
pub const DEFAULT_CONTRAST_FLOOR: f32 = 0.0;
/// Candidates kept per pixel.
pub const DEFAULT_TOP_L: usize = 3;

/// Calibrated received strings, `n` values per pixel in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedCube {
    rows: usize,
    cols: usize,
    n: usize,
    values: Vec<f32>,
    pub valid: Mask,
}

impl NormalizedCube {
    /// Builds a cube from per-pixel strings (row-major pixels, `n` values each).
    pub fn from_values(rows: usize, cols: usize, n: usize, values: Vec<f32>, valid: Mask) -> Result<Self> {
        if values.len() != rows * cols * n || valid.rows() != rows || valid.cols() != cols {
            return domain("normalized cube dimensions are inconsistent");
        }
        Ok(NormalizedCube {
            rows,
            cols,
            n,
            values,
            valid,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_frames(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let start = (row * self.cols + col) * self.n;
        &self.values[start..start + self.n]
    }
}

/// `clamp((I - off) / (on - off), 0, 1)`; pixels with contrast at or below
/// zero, or below `contrast_floor`, are flagged invalid.
pub fn normalize(capture: &CaptureCube, contrast_floor: f32) -> NormalizedCube {
    let (rows, cols, n) = (capture.rows(), capture.cols(), capture.n_frames());
    let mut values = vec![0.0f32; rows * cols * n];
    let mut valid = Grid::filled(rows, cols, false);
    for r in 0..rows {
        for c in 0..cols {
            let off = *capture.calib_off.get(r, c);
            let contrast = *capture.calib_on.get(r, c) - off;
            if contrast <= 0.0 || contrast < contrast_floor {
                continue;
            }
            valid.set(r, c, true);
            let base = (r * cols + c) * n;
            for (f, frame) in capture.frames.iter().enumerate() {
                values[base + f] = ((*frame.get(r, c) - off) / contrast).clamp(0.0, 1.0);
            }
        }
    }
    NormalizedCube {
        rows,
        cols,
        n,
        values,
        valid,
    }
}

/// The codes a decoder searches, indexed by projector column.
#[derive(Clone, Debug)]
pub struct CodeTable {
    n: usize,
    q: u8,
    count: usize,
    /// frame-major normalized levels: `levels[f * count + j]`
    levels: Vec<f32>,
    norms: Vec<f32>,
    /// code-major symbols: `symbols[j * n + f]`
    symbols: Vec<u8>,
    /// MSB-first packed binary codes (binary tables with n ≤ 64 only)
    packed: Option<Vec<u64>>,
}

impl CodeTable {
    pub fn from_codes(codes: &[Codeword], q: u8) -> Result<Self> {
        if codes.len() < 2 {
            return domain("decoding needs at least two codes");
        }
        if q < 2 {
            return domain("alphabet size must be at least 2");
        }
        let n = codes[0].len();
        if n == 0 || codes.iter().any(|c| c.len() != n) {
            return domain("codes must share a nonzero length");
        }
        if codes.iter().any(|c| c.symbols().iter().any(|&s| s >= q)) {
            return domain("code symbol outside the alphabet");
        }
        let count = codes.len();
        let scale = 1.0 / (q - 1) as f32;
        let mut levels = vec![0.0f32; n * count];
        for (j, code) in codes.iter().enumerate() {
            for (f, &s) in code.symbols().iter().enumerate() {
                levels[f * count + j] = s as f32 * scale;
            }
        }
        let norms = codes
            .iter()
            .map(|c| c.symbols().iter().map(|&s| (s as f32 * scale).powi(2)).sum())
            .collect();
        let symbols = codes.iter().flat_map(|c| c.symbols().iter().copied()).collect();
        let packed = (q == 2 && n <= 64).then(|| codes.iter().map(Codeword::to_bits).collect());
        Ok(CodeTable {
            n,
            q,
            count,
            levels,
            norms,
            symbols,
            packed,
        })
    }

    /// Column `m` of the cube is entry `m`.
    pub fn from_cube(cube: &PatternCube) -> Result<Self> {
        CodeTable::from_codes(&cube.column_codes(), cube.q())
    }

    /// Word `i` of the book is entry `i`.
    pub fn from_codebook(book: &Codebook) -> Result<Self> {
        CodeTable::from_codes(book.words(), book.q())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn code(&self, j: usize) -> &[u8] {
        &self.symbols[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    fn level(&self, f: usize, j: usize) -> f32 {
        self.levels[f * self.count + j]
    }

    /// Exact squared Euclidean distance between `r` and code `j`.
    pub fn soft_distance(&self, r: &[f32], j: usize) -> f32 {
        r.iter().enumerate().map(|(f, &v)| (v - self.level(f, j)).powi(2)).sum()
    }

    /// Nearest symbol to each normalized value.
    pub fn hard_symbols(&self, r: &[f32]) -> Vec<u8> {
        let top = (self.q - 1) as f32;
        r.iter().map(|&v| (v * top).round().clamp(0.0, top) as u8).collect()
    }
}

/// A ranked decoding candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub column: usize,
    pub distance: f32,
}

/// Per-pixel decoding output. Pixels that failed normalization have no
/// correspondence, zero confidence and no candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub corr: Grid<Option<usize>>,
    pub disparity: DisparityMap,
    pub confidence: Grid<f32>,
    pub d1: Grid<f32>,
    pub d2: Grid<f32>,
    top_l: usize,
    candidates: Vec<Candidate>,
}

impl DecodeResult {
    pub fn rows(&self) -> usize {
        self.corr.rows()
    }

    pub fn cols(&self) -> usize {
        self.corr.cols()
    }

    pub fn top_l(&self) -> usize {
        self.top_l
    }

    /// Candidates in ascending distance (ties by column).
    pub fn candidates(&self, row: usize, col: usize) -> &[Candidate] {
        if self.corr.get(row, col).is_none() {
            return &[];
        }
        let start = (row * self.cols() + col) * self.top_l;
        &self.candidates[start..start + self.top_l]
    }
}

/// `(d2 - d1) / d2`, or 0 when `d2 = 0`.
#[inline]
pub fn confidence(d1: f32, d2: f32) -> f32 {
    if d2 <= 0.0 {
        0.0
    } else {
        ((d2 - d1) / d2).clamp(0.0, 1.0)
    }
}

/// Keeps the `l` smallest `(distance, column)` pairs; columns arrive in
/// ascending order, so earlier columns win ties.
struct TopL {
    items: Vec<Candidate>,
    l: usize,
}

impl TopL {
    fn new(l: usize) -> Self {
        TopL {
            items: Vec::with_capacity(l + 1),
            l,
        }
    }

    fn clear(&mut self) {
        self.items.clear();
    }

    #[inline]
    fn worst(&self) -> f32 {
        if self.items.len() < self.l {
            f32::INFINITY
        } else {
            self.items[self.l - 1].distance
        }
    }

    #[inline]
    fn offer(&mut self, column: usize, distance: f32) {
        if distance >= self.worst() && self.items.len() >= self.l {
            return;
        }
        let pos = self.items.partition_point(|c| c.distance <= distance);
        self.items.insert(pos, Candidate { column, distance });
        self.items.truncate(self.l);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Metric {
    Soft,
    Hard,
}

struct RowOut {
    corr: Vec<Option<usize>>,
    confidence: Vec<f32>,
    d1: Vec<f32>,
    d2: Vec<f32>,
    candidates: Vec<Candidate>,
}

fn decode_row(norm: &NormalizedCube, table: &CodeTable, top_l: usize, metric: Metric, r: usize) -> RowOut {
    let cols = norm.cols();
    let count = table.len();
    let mut out = RowOut {
        corr: vec![None; cols],
        confidence: vec![0.0; cols],
        d1: vec![0.0; cols],
        d2: vec![0.0; cols],
        candidates: vec![
            Candidate {
                column: 0,
                distance: f32::INFINITY
            };
            cols * top_l
        ],
    };
    let mut acc = vec![0.0f32; count];
    let mut top = TopL::new(top_l);
    for c in 0..cols {
        if !*norm.valid.get(r, c) {
            continue;
        }
        let rv = norm.pixel(r, c);
        top.clear();
        match metric {
            Metric::Soft => {
                // ‖r − c‖² = ‖r‖² − 2 r·c + ‖c‖²; ‖r‖² is shared by all codes
                acc.fill(0.0);
                for (f, &v) in rv.iter().enumerate() {
                    if v != 0.0 {
                        let row = &table.levels[f * count..(f + 1) * count];
                        for (a, &l) in acc.iter_mut().zip(row) {
                            *a += v * l;
                        }
                    }
                }
                for (j, (&a, &norm2)) in acc.iter().zip(&table.norms).enumerate() {
                    top.offer(j, norm2 - 2.0 * a);
                }
                for cand in &mut top.items {
                    cand.distance = table.soft_distance(rv, cand.column);
                }
                top.items
                    .sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.column.cmp(&b.column)));
            }
            Metric::Hard => {
                let sym = table.hard_symbols(rv);
                if let Some(packed) = &table.packed {
                    let word = sym.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
                    for (j, &p) in packed.iter().enumerate() {
                        top.offer(j, (p ^ word).count_ones() as f32);
                    }
                } else {
                    for j in 0..count {
                        let d = table.code(j).iter().zip(&sym).filter(|(a, b)| a != b).count();
                        top.offer(j, d as f32);
                    }
                }
            }
        }
        let best = top.items[0];
        let second = top.items.get(1).map_or(f32::INFINITY, |c| c.distance);
        out.corr[c] = Some(best.column);
        out.d1[c] = best.distance;
        out.d2[c] = second;
        out.confidence[c] = confidence(best.distance, second);
        out.candidates[c * top_l..c * top_l + top.items.len()].copy_from_slice(&top.items);
    }
    out
}

fn decode(norm: &NormalizedCube, table: &CodeTable, top_l: usize, metric: Metric) -> Result<DecodeResult> {
    if norm.n_frames() != table.n() {
        return domain(format!(
            "cube has {} frames but codes have length {}",
            norm.n_frames(),
            table.n()
        ));
    }
    if top_l < 2 {
        return domain("at least two candidates are needed for confidence");
    }
    let top_l = top_l.min(table.len());
    let (rows, cols) = (norm.rows(), norm.cols());
    let row_outs = par::map_range(rows, |r| decode_row(norm, table, top_l, metric, r));
    let mut corr = Vec::with_capacity(rows * cols);
    let mut conf = Vec::with_capacity(rows * cols);
    let mut d1 = Vec::with_capacity(rows * cols);
    let mut d2 = Vec::with_capacity(rows * cols);
    let mut candidates = Vec::with_capacity(rows * cols * top_l);
    for ro in row_outs {
        corr.extend(ro.corr);
        conf.extend(ro.confidence);
        d1.extend(ro.d1);
        d2.extend(ro.d2);
        candidates.extend(ro.candidates);
    }
    let corr = Grid::from_vec(rows, cols, corr);
    let disparity = disparity_from_corr(&corr);
    Ok(DecodeResult {
        corr,
        disparity,
        confidence: Grid::from_vec(rows, cols, conf),
        d1: Grid::from_vec(rows, cols, d1),
        d2: Grid::from_vec(rows, cols, d2),
        top_l,
        candidates,
    })
}

/// `m - corr` for every decoded pixel.
pub fn disparity_from_corr(corr: &Grid<Option<usize>>) -> DisparityMap {
    Grid::from_fn(corr.rows(), corr.cols(), |r, c| corr.get(r, c).map(|p| c as i32 - p as i32))
}

/// Nearest code in squared Euclidean distance; ties go to the smaller column.
pub fn soft_decode(norm: &NormalizedCube, table: &CodeTable, top_l: usize) -> Result<DecodeResult> {
    decode(norm, table, top_l, Metric::Soft)
}

/// Nearest code in Hamming distance after rounding each value to a symbol
/// (binary: threshold 0.5); ties go to the smaller column.
pub fn hard_decode(norm: &NormalizedCube, table: &CodeTable, top_l: usize) -> Result<DecodeResult> {
    decode(norm, table, top_l, Metric::Hard)
}

/// Fraction of the scene's valid pixels whose estimate is missing or differs
/// from ground truth by more than `tolerance`.
pub fn error_rate(est: &DisparityMap, scene: &Scene, tolerance: u32) -> Result<f64> {
    if !est.same_shape(&scene.gt_disparity) {
        return domain("estimate and ground truth differ in shape");
    }
    let mut valid = 0usize;
    let mut wrong = 0usize;
    for ((e, gt), &ok) in est.iter().zip(scene.gt_disparity.iter()).zip(scene.valid.iter()) {
        if !ok {
            continue;
        }
        valid += 1;
        match e {
            Some(d) if d.abs_diff(*gt) <= tolerance => {}
            _ => wrong += 1,
        }
    }
    Ok(if valid == 0 { 0.0 } else { wrong as f64 / valid as f64 })
}

/// Pixels (valid in the scene) whose estimate is wrong at `tolerance`.
pub fn error_mask(est: &DisparityMap, scene: &Scene, tolerance: u32) -> Mask {
    Grid::from_fn(est.rows(), est.cols(), |r, c| {
        *scene.valid.get(r, c)
            && !matches!(est.get(r, c), Some(d) if d.abs_diff(*scene.gt_disparity.get(r, c)) <= tolerance)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate, NoiseModel, Scene};
    use crate::codebook::Preset;
    use crate::patterns::build_pattern_cube;

    fn fixture(preset: Preset, cols: usize, d: i32) -> (PatternCube, Scene) {
        let book = preset.build().unwrap();
        let cube = build_pattern_cube(&book, 16, cols, preset.default_arrangement()).unwrap();
        let scene = Scene::uniform(Grid::filled(16, cols, d), 0.8, 0.1).unwrap();
        (cube, scene)
    }

    #[test]
    fn normalization_endpoints() {
        let on = Grid::filled(1, 2, 0.8f32);
        let off = Grid::filled(1, 2, 0.2f32);
        let cap = CaptureCube {
            frames: vec![Grid::from_vec(1, 2, vec![0.8, 0.2])],
            calib_on: on,
            calib_off: off,
            exposure_scale: 1.0,
        };
        let norm = normalize(&cap, 0.0);
        assert_eq!(norm.pixel(0, 0), &[1.0]);
        assert_eq!(norm.pixel(0, 1), &[0.0]);

        let flat = CaptureCube {
            calib_on: Grid::filled(1, 2, 0.2),
            ..cap
        };
        assert!(!normalize(&flat, 0.0).valid.iter().any(|&v| v));
    }

    #[test]
    fn noiseless_round_trip() {
        for preset in [Preset::Gray10, Preset::Golay22, Preset::Hamming15, Preset::TernaryGolay12] {
            let cols = 64.min(Preset::build(preset).unwrap().len());
            let (cube, scene) = fixture(preset, cols, 2);
            let cap = simulate(&cube, &scene, &NoiseModel::noiseless(), 4.0, 1.0).unwrap();
            let norm = normalize(&cap, DEFAULT_CONTRAST_FLOOR);
            let table = CodeTable::from_cube(&cube).unwrap();
            let soft = soft_decode(&norm, &table, 3).unwrap();
            let hard = hard_decode(&norm, &table, 3).unwrap();
            assert_eq!(error_rate(&soft.disparity, &scene, 0).unwrap(), 0.0, "{preset}");
            assert_eq!(soft.corr, hard.corr);
            for r in 0..16 {
                for c in 2..cols {
                    assert!(*soft.d1.get(r, c) < 1e-6);
                    assert!(*soft.confidence.get(r, c) > 0.999, "{}", soft.confidence.get(r, c));
                }
            }
        }
    }

    #[test]
    fn frame_count_mismatch_rejected() {
        let (cube, scene) = fixture(Preset::Gray10, 32, 0);
        let cap = simulate(&cube, &scene, &NoiseModel::noiseless(), 1.0, 1.0).unwrap();
        let norm = normalize(&cap, 0.0);
        let other = CodeTable::from_codebook(&Preset::Hamming15.build().unwrap()).unwrap();
        assert!(soft_decode(&norm, &other, 3).is_err());
        assert!(hard_decode(&norm, &other, 3).is_err());
    }

    #[test]
    fn ties_go_to_smaller_column() {
        let codes: Vec<Codeword> = vec!["00".into(), "01".into(), "10".into(), "11".into()];
        let table = CodeTable::from_codes(&codes, 2).unwrap();
        let norm = NormalizedCube::from_values(1, 1, 2, vec![0.5, 0.5], Grid::filled(1, 1, true)).unwrap();
        let soft = soft_decode(&norm, &table, 3).unwrap();
        assert_eq!(*soft.corr.get(0, 0), Some(0));
        assert_eq!(*soft.confidence.get(0, 0), 0.0);
        let cands: Vec<usize> = soft.candidates(0, 0).iter().map(|c| c.column).collect();
        assert_eq!(cands, vec![0, 1, 2]);
    }

    #[test]
    fn error_rate_counts() {
        let scene = Scene::uniform(Grid::filled(10, 20, 3), 1.0, 0.0).unwrap();
        let gt: DisparityMap = scene.gt_disparity.map(|&d| Some(d));
        assert_eq!(error_rate(&gt, &scene, 0).unwrap(), 0.0);
        // 10 × 17 valid pixels
        let mut est = gt.clone();
        est.set(0, 5, Some(5));
        assert!((error_rate(&est, &scene, 2).unwrap()).abs() < 1e-12);
        est.set(0, 6, Some(6));
        assert!((error_rate(&est, &scene, 2).unwrap() - 1.0 / 170.0).abs() < 1e-12);
        est.set(0, 7, None);
        assert!((error_rate(&est, &scene, 2).unwrap() - 2.0 / 170.0).abs() < 1e-12);
    }
}
