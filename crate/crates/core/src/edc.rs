//! Error detection by codebook membership, and the adaptive
//! detect–mask–reproject loop.

use std::collections::HashMap;

use crate::channel::{capture, mix_global, warp, MixParams, NoiseModel, Scene};
use crate::codebook::Codebook;
use crate::decoder::{disparity_from_corr, normalize, soft_decode, CodeTable, NormalizedCube};
use crate::error::{domain, Result};
use crate::grid::{DisparityMap, Grid, Mask};
use crate::patterns::PatternCube;

/// Per-pixel symbol strings rounded from a normalized cube.
#[derive(Clone, Debug, PartialEq)]
pub struct HardBits {
    rows: usize,
    cols: usize,
    n: usize,
    symbols: Vec<u8>,
    pub valid: Mask,
}

impl HardBits {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> &[u8] {
        let start = (row * self.cols + col) * self.n;
        &self.symbols[start..start + self.n]
    }
}

/// Rounds every value to the nearest of `q` levels (binary: threshold 0.5).
pub fn binarize(norm: &NormalizedCube, q: u8) -> HardBits {
    let (rows, cols, n) = (norm.rows(), norm.cols(), norm.n_frames());
    let top = (q.max(2) - 1) as f32;
    let mut symbols = Vec::with_capacity(rows * cols * n);
    for r in 0..rows {
        for c in 0..cols {
            symbols.extend(norm.pixel(r, c).iter().map(|&v| (v * top).round().clamp(0.0, top) as u8));
        }
    }
    HardBits {
        rows,
        cols,
        n,
        symbols,
        valid: norm.valid.clone(),
    }
}

/// Detected errors; `true` means the received string is not a codeword.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMask {
    pub mask: Mask,
    /// Adaptive-loop iteration that produced the mask (0 outside the loop).
    pub iteration: usize,
}

impl ErrorMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Hash set of a codebook's words, each mapped to its index.
pub struct Membership {
    index: HashMap<Vec<u8>, usize>,
    n: usize,
}

impl Membership {
    pub fn new(book: &Codebook) -> Self {
        Membership {
            index: book.words().iter().enumerate().map(|(i, w)| (w.symbols().to_vec(), i)).collect(),
            n: book.n(),
        }
    }

    pub fn from_cube(cube: &PatternCube) -> Self {
        Membership {
            index: (0..cube.cols()).map(|c| (cube.column_code(c).into_inner(), c)).collect(),
            n: cube.n_frames(),
        }
    }

    #[inline]
    pub fn lookup(&self, word: &[u8]) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &[u8]) -> bool {
        self.index.contains_key(word)
    }
}

/// Flags every valid pixel whose string is not a member of `book`.
pub fn parity_check(bits: &HardBits, book: &Codebook) -> Result<ErrorMask> {
    let members = Membership::new(book);
    check_against(bits, &members)
}

fn check_against(bits: &HardBits, members: &Membership) -> Result<ErrorMask> {
    if bits.n() != members.n {
        return domain(format!("strings have length {} but codewords {}", bits.n(), members.n));
    }
    let mask = Grid::from_fn(bits.rows(), bits.cols(), |r, c| {
        *bits.valid.get(r, c) && !members.contains(bits.pixel(r, c))
    });
    Ok(ErrorMask { mask, iteration: 0 })
}

/// Precision and recall of a detection mask against known corruptions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Compares `detected` with `truth` over the scene's valid pixels, optionally
/// restricted to `region`. An empty detection has precision 1; an empty truth
/// has recall 1.
pub fn detection_report(detected: &Mask, truth: &Mask, scene: &Scene, region: Option<&Mask>) -> Result<DetectionReport> {
    if !detected.same_shape(truth) || !detected.same_shape(&scene.valid) || region.is_some_and(|m| !m.same_shape(truth)) {
        return domain("masks differ in shape");
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..truth.len() {
        let (r, c) = (i / truth.cols(), i % truth.cols());
        if !*scene.valid.get(r, c) || region.is_some_and(|m| !*m.get(r, c)) {
            continue;
        }
        match (*detected.get(r, c), *truth.get(r, c)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Ok(DetectionReport {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
    })
}

/// Projection and capture settings for [`adaptive_loop`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveConfig {
    pub mix: MixParams,
    pub noise: NoiseModel,
    pub projector_power: f32,
    pub budget: f32,
    pub max_iters: usize,
    pub contrast_floor: f32,
    pub top_l: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            mix: MixParams { alpha: 0.5, radius: 48 },
            noise: NoiseModel::shot(0.04, 0),
            projector_power: 6.0,
            budget: 1.0,
            max_iters: 5,
            contrast_floor: 0.0,
            top_l: 3,
        }
    }
}

/// Snapshot after one iteration of the loop.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Pixels pending at the start of the iteration that failed the membership check.
    pub error_mask: ErrorMask,
    /// Pending pixels whose received string was not the code of their true column.
    pub corrupted: Mask,
    /// Valid pixels still unresolved after this iteration's commits.
    pub unresolved: Mask,
    pub committed_now: usize,
    pub active_columns: usize,
    pub frames_used: usize,
    pub disparity: DisparityMap,
}

/// Final state of [`adaptive_loop`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveOutcome {
    pub disparity: DisparityMap,
    pub resolved: Mask,
    pub active: Vec<bool>,
    pub iterations: usize,
    pub frames_used: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

/// Repeats projection, detection and column retirement until the membership
/// check flags no pending pixel, the flagged set stops changing, or
/// `max_iters` is hit.
///
/// A pixel commits when its rounded string is a member of `book`, equals the
/// code of an active projector column, and that column is also the soft
/// decoder's choice. Committed pixels keep their disparity. A column stays lit
/// only while some unresolved pixel lists it among its top soft candidates.
/// Unresolved pixels report their latest soft estimate.
pub fn adaptive_loop(scene: &Scene, cube: &PatternCube, book: &Codebook, cfg: &AdaptiveConfig) -> Result<AdaptiveOutcome> {
    if cfg.max_iters == 0 {
        return domain("adaptive loop needs at least one iteration");
    }
    if cube.n_frames() != book.n() {
        return domain("pattern cube and codebook differ in length");
    }
    let (rows, cols, n) = (scene.rows(), scene.cols(), cube.n_frames());
    let members = Membership::new(book);
    let columns = Membership::from_cube(cube);
    let table = CodeTable::from_cube(cube)?;

    let mut active = cube.active_columns().to_vec();
    let mut resolved: Mask = Grid::filled(rows, cols, false);
    let mut committed: DisparityMap = Grid::filled(rows, cols, None);
    let mut latest: DisparityMap = Grid::filled(rows, cols, None);
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut converged = false;

    for it in 1..=cfg.max_iters {
        let lit = cube.masked(&active)?;
        let ideal = mix_global(&warp(&lit, scene)?, &lit, scene, cfg.mix)?;
        let noise = cfg.noise.with_seed(cfg.noise.seed.wrapping_add(it as u64 - 1));
        let cap = capture(&ideal, scene, &noise, cfg.projector_power, cfg.budget, n)?;
        let norm = normalize(&cap, cfg.contrast_floor);
        let bits = binarize(&norm, cube.q());
        let parity = check_against(&bits, &members)?;
        let soft = soft_decode(&norm, &table, cfg.top_l)?;
        let soft_disp = disparity_from_corr(&soft.corr);

        let pending = Grid::from_fn(rows, cols, |r, c| *scene.valid.get(r, c) && !*resolved.get(r, c));
        let mut corrupted = Grid::filled(rows, cols, false);
        let mut committed_now = 0;
        for r in 0..rows {
            for c in 0..cols {
                let Some(true_col) = scene.projector_column(r, c) else { continue };
                if *resolved.get(r, c) {
                    continue;
                }
                latest.set(r, c, *soft_disp.get(r, c));
                if !*norm.valid.get(r, c) {
                    continue;
                }
                let word = bits.pixel(r, c);
                corrupted.set(r, c, columns.lookup(word) != Some(true_col));
                if *parity.mask.get(r, c) {
                    continue;
                }
                let Some(col) = columns.lookup(word) else { continue };
                if active[col] && *soft.corr.get(r, c) == Some(col) {
                    resolved.set(r, c, true);
                    committed.set(r, c, Some(c as i32 - col as i32));
                    committed_now += 1;
                }
            }
        }

        let unresolved = Grid::from_fn(rows, cols, |r, c| *scene.valid.get(r, c) && !*resolved.get(r, c));
        let mut referenced = vec![false; cols];
        for r in 0..rows {
            for c in 0..cols {
                if *unresolved.get(r, c) {
                    for cand in soft.candidates(r, c) {
                        referenced[cand.column] = true;
                    }
                }
            }
        }
        for (a, keep) in active.iter_mut().zip(&referenced) {
            *a &= keep;
        }

        let snapshot = Grid::from_fn(rows, cols, |r, c| {
            if *resolved.get(r, c) {
                *committed.get(r, c)
            } else {
                *latest.get(r, c)
            }
        });
        let mut flagged = parity.mask;
        for (p, &u) in flagged.as_mut_slice().iter_mut().zip(pending.iter()) {
            *p &= u;
        }
        let error_mask = ErrorMask {
            mask: flagged,
            iteration: it,
        };
        let repeated = history.last().is_some_and(|h| h.error_mask.mask == error_mask.mask);
        let done = error_mask.count() == 0;
        history.push(IterationRecord {
            iteration: it,
            error_mask,
            corrupted,
            unresolved,
            committed_now,
            active_columns: active.iter().filter(|&&a| a).count(),
            frames_used: it * n,
            disparity: snapshot,
        });
        if done {
            converged = true;
            break;
        }
        if repeated {
            break;
        }
    }
    let last = history.last().expect("at least one iteration");
    Ok(AdaptiveOutcome {
        disparity: last.disparity.clone(),
        resolved,
        active,
        iterations: last.iteration,
        frames_used: last.frames_used,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Preset;
    use crate::decoder::NormalizedCube;

    fn bits_of(strings: &[&str]) -> HardBits {
        let n = strings[0].len();
        let values: Vec<f32> = strings.iter().flat_map(|s| s.bytes().map(|b| (b - b'0') as f32)).collect();
        let norm = NormalizedCube::from_values(1, strings.len(), n, values, Grid::filled(1, strings.len(), true)).unwrap();
        binarize(&norm, 2)
    }

    #[test]
    fn membership_flags_non_codewords() {
        let book = Preset::Hamming15.build().unwrap();
        let good = book.word(37).to_string();
        let mut bad = good.clone().into_bytes();
        bad[3] ^= 1;
        let bad = String::from_utf8(bad).unwrap();
        let mask = parity_check(&bits_of(&[&good, &bad]), &book).unwrap();
        assert_eq!(mask.mask.as_slice(), &[false, true]);
        assert_eq!(mask.count(), 1);
    }

    #[test]
    fn length_mismatch_rejected() {
        let book = Preset::Hamming15.build().unwrap();
        assert!(parity_check(&bits_of(&["0101"]), &book).is_err());
    }

    #[test]
    fn report_extremes() {
        let scene = Scene::uniform(Grid::filled(2, 2, 0), 1.0, 0.0).unwrap();
        let truth = Grid::from_vec(2, 2, vec![true, false, true, false]);
        let exact = detection_report(&truth, &truth, &scene, None).unwrap();
        assert_eq!((exact.precision, exact.recall), (1.0, 1.0));
        let empty = detection_report(&Grid::filled(2, 2, false), &truth, &scene, None).unwrap();
        assert_eq!(empty.recall, 0.0);
        assert_eq!(empty.false_negatives, 2);
    }

    fn plane(rows: usize, cols: usize, d: i32) -> Scene {
        Scene::uniform(Grid::filled(rows, cols, d), 1.0, 0.0).unwrap()
    }

    #[test]
    fn clean_scene_converges_at_once() {
        let book = Preset::Hamming15.build().unwrap();
        let cube = crate::patterns::build_pattern_cube(&book, 4, 64, crate::patterns::Arrangement::Gray).unwrap();
        let scene = plane(4, 64, 3);
        let cfg = AdaptiveConfig {
            mix: MixParams { alpha: 0.0, radius: 1 },
            noise: NoiseModel::noiseless(),
            ..AdaptiveConfig::default()
        };
        let out = adaptive_loop(&scene, &cube, &book, &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.frames_used, 15);
        for r in 0..4 {
            for c in 0..64 {
                let expect = scene.projector_column(r, c).map(|_| 3);
                assert_eq!(*out.disparity.get(r, c), expect);
            }
        }
        assert_eq!(out.history[0].error_mask.iteration, 1);
    }

    #[test]
    fn zero_iterations_rejected() {
        let book = Preset::Hamming15.build().unwrap();
        let cube = crate::patterns::build_pattern_cube(&book, 2, 16, crate::patterns::Arrangement::Gray).unwrap();
        let cfg = AdaptiveConfig { max_iters: 0, ..AdaptiveConfig::default() };
        assert!(adaptive_loop(&plane(2, 16, 0), &cube, &book, &cfg).is_err());
    }
}
