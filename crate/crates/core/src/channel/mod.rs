//! Camera-side measurement model.
//!
//! A pattern cube is warped through the scene's disparity, optionally mixed
//! with inter-reflected light from other projector columns, scaled by albedo,
//! ambient light and the per-frame share of the exposure budget, and finally
//! corrupted by signal-dependent Gaussian noise, clamped and quantized.

mod scene;

pub use scene::{load_pfm_disparity, procedural_scene, Scene, SceneKind, SceneParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::grid::{Grid, Mask};
use crate::par;
use crate::patterns::PatternCube;

/// Sensor noise: readout std, shot-noise coefficient, ADC depth and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma_r: f32,
    pub sigma_s: f32,
    pub quant_bits: u32,
    pub seed: u64,
}

impl NoiseModel {
    /// Shot-noise-limited sensor with a 16-bit ADC.
    pub fn shot(sigma_s: f32, seed: u64) -> Self {
        NoiseModel {
            sigma_r: 0.0,
            sigma_s,
            quant_bits: 16,
            seed,
        }
    }

    /// Readout-noise-limited sensor with a 12-bit ADC.
    pub fn readout(sigma_r: f32, seed: u64) -> Self {
        NoiseModel {
            sigma_r,
            sigma_s: 0.0,
            quant_bits: 12,
            seed,
        }
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            sigma_r: 0.0,
            sigma_s: 0.0,
            quant_bits: 16,
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NoiseModel { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_r >= 0.0 && self.sigma_s >= 0.0 && self.sigma_r.is_finite() && self.sigma_s.is_finite()) {
            return domain("noise deviations must be finite and nonnegative");
        }
        if !(1..=16).contains(&self.quant_bits) {
            return domain(format!("quantization depth {} outside 1..=16", self.quant_bits));
        }
        Ok(())
    }

    /// Noise variance at mean intensity `i`.
    #[inline]
    pub fn variance(&self, i: f32) -> f32 {
        self.sigma_r * self.sigma_r + self.sigma_s * self.sigma_s * i.max(0.0)
    }

    /// Mid-rise uniform quantizer on [0, 1].
    #[inline]
    pub fn quantize(&self, v: f32) -> f32 {
        let levels = (1u32 << self.quant_bits) as f32;
        let idx = (v * levels).floor().min(levels - 1.0).max(0.0);
        (idx + 0.5) / levels
    }

    /// One noisy, clamped, quantized sample of intensity `i`.
    #[inline]
    pub fn sample(&self, i: f32, rng: &mut ChaCha8Rng) -> f32 {
        let z: f32 = StandardNormal.sample(rng);
        let v = i + self.variance(i).sqrt() * z;
        self.quantize(v.clamp(0.0, 1.0))
    }

    /// Independent stream for `(slot, row)`; rows are filled left to right.
    pub(crate) fn stream(&self, slot: usize, rows: usize, row: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((slot * rows + row) as u64);
        rng
    }
}

/// Noise-free projector light reaching each camera pixel, in [0, 1] before
/// albedo and exposure scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealCube {
    pub frames: Vec<Grid<f32>>,
    /// Projector all-on calibration frame (active columns only).
    pub on: Grid<f32>,
    /// Projector all-off calibration frame.
    pub off: Grid<f32>,
    /// Pixels with a valid correspondence.
    pub valid: Mask,
}

impl IdealCube {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }
}

/// Noisy camera measurements for one projection sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct CaptureCube {
    pub frames: Vec<Grid<f32>>,
    pub calib_on: Grid<f32>,
    pub calib_off: Grid<f32>,
    /// Fraction of the exposure budget each frame received.
    pub exposure_scale: f32,
}

impl CaptureCube {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn rows(&self) -> usize {
        self.calib_on.rows()
    }

    pub fn cols(&self) -> usize {
        self.calib_on.cols()
    }
}

fn check_shape(cube: &PatternCube, scene: &Scene) -> Result<()> {
    if cube.rows() != scene.rows() || cube.cols() != scene.cols() {
        return domain(format!(
            "pattern cube is {}x{} but scene is {}x{}",
            cube.rows(),
            cube.cols(),
            scene.rows(),
            scene.cols()
        ));
    }
    Ok(())
}

/// Pixel `(r, m)` of frame `i` receives projector column `m - gt_disparity[r][m]`.
pub fn warp(cube: &PatternCube, scene: &Scene) -> Result<IdealCube> {
    check_shape(cube, scene)?;
    let (rows, cols) = (scene.rows(), scene.cols());
    let valid = Grid::from_fn(rows, cols, |r, c| scene.projector_column(r, c).is_some());
    let frames = (0..cube.n_frames())
        .map(|f| {
            Grid::from_fn(rows, cols, |r, c| {
                scene.projector_column(r, c).map_or(0.0, |p| cube.level(f, p))
            })
        })
        .collect();
    let on = Grid::from_fn(rows, cols, |r, c| {
        scene
            .projector_column(r, c)
            .map_or(0.0, |p| if cube.is_active(p) { 1.0 } else { 0.0 })
    });
    Ok(IdealCube {
        frames,
        on,
        off: Grid::filled(rows, cols, 0.0),
        valid,
    })
}

/// Parameters of the column-axis inter-reflection model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixParams {
    pub alpha: f32,
    pub radius: usize,
}

/// Blends each pixel's own signal with light from nearby projector columns.
///
/// The result is `(1 - alpha) * own + alpha * S / K`, where the window spans
/// `radius` columns either side of the pixel's reflection source (its own
/// column when the scene defines none), `K` counts the in-range window columns
/// other than the pixel's own, and `S` sums the light of those that are active
/// in `cube`. Dark columns add nothing, so retiring columns weakens the
/// contamination. Pixels for which the scene defines no reflection source are
/// left unchanged.
pub fn mix_global(ideal: &IdealCube, cube: &PatternCube, scene: &Scene, params: MixParams) -> Result<IdealCube> {
    check_shape(cube, scene)?;
    if !(0.0..=1.0).contains(&params.alpha) {
        return domain("alpha must lie in [0, 1]");
    }
    if params.radius == 0 {
        return domain("mixing radius must be at least 1");
    }
    if params.alpha == 0.0 {
        return Ok(ideal.clone());
    }
    let (rows, cols) = (scene.rows(), scene.cols());
    let prefix = |level: &dyn Fn(usize) -> f32| -> Vec<f32> {
        let mut acc = vec![0.0f32; cols + 1];
        for c in 0..cols {
            acc[c + 1] = acc[c] + level(c);
        }
        acc
    };
    let mut sums: Vec<Vec<f32>> = (0..cube.n_frames())
        .map(|f| prefix(&|c| if cube.is_active(c) { cube.level(f, c) } else { 0.0 }))
        .collect();
    sums.push(prefix(&|c| if cube.is_active(c) { 1.0 } else { 0.0 }));

    let alpha = params.alpha;
    let mut out = ideal.clone();
    for r in 0..rows {
        for c in 0..cols {
            let Some(own) = scene.projector_column(r, c) else {
                continue;
            };
            let center = match &scene.reflection {
                None => own,
                Some(refl) => match *refl.get(r, c) {
                    Some(src) => src,
                    None => continue,
                },
            };
            let lo = center.saturating_sub(params.radius);
            let hi = (center + params.radius).min(cols - 1);
            let own_inside = (lo..=hi).contains(&own);
            let kernel = (hi - lo + 1 - own_inside as usize) as f32;
            if kernel == 0.0 {
                continue;
            }
            let window = |s: &Vec<f32>, own_level: f32| {
                let total = s[hi + 1] - s[lo];
                if own_inside {
                    total - own_level
                } else {
                    total
                }
            };
            let active_own = cube.is_active(own);
            for (f, frame) in out.frames.iter_mut().enumerate() {
                let own_level = if active_own { cube.level(f, own) } else { 0.0 };
                let v = (1.0 - alpha) * *frame.get(r, c) + alpha * window(&sums[f], own_level) / kernel;
                frame.set(r, c, v);
            }
            let own_on = if active_own { 1.0 } else { 0.0 };
            let v = (1.0 - alpha) * *out.on.get(r, c) + alpha * window(&sums[cube.n_frames()], own_on) / kernel;
            out.on.set(r, c, v);
        }
    }
    Ok(out)
}

/// Applies exposure, albedo, ambient light and sensor noise to an ideal cube.
///
/// Every frame, and both calibration frames, receive `budget / n_frames` of
/// the exposure: the mean intensity is
/// `(projector_power * light * albedo + ambient) * budget / n_frames`.
pub fn capture(
    ideal: &IdealCube,
    scene: &Scene,
    noise: &NoiseModel,
    projector_power: f32,
    budget: f32,
    n_frames: usize,
) -> Result<CaptureCube> {
    noise.validate()?;
    if !(budget > 0.0 && budget.is_finite()) {
        return domain("exposure budget must be positive");
    }
    if !(projector_power >= 0.0 && projector_power.is_finite()) {
        return domain("projector power must be finite and nonnegative");
    }
    if n_frames == 0 {
        return domain("frame count must be positive");
    }
    if !ideal.on.same_shape(&scene.albedo) {
        return domain("ideal cube and scene differ in shape");
    }
    let (rows, cols) = (scene.rows(), scene.cols());
    let exposure = budget / n_frames as f32;
    let n = ideal.n_frames();
    let source = |slot: usize| -> &Grid<f32> {
        match slot.cmp(&n) {
            std::cmp::Ordering::Less => &ideal.frames[slot],
            std::cmp::Ordering::Equal => &ideal.on,
            std::cmp::Ordering::Greater => &ideal.off,
        }
    };
    let rows_out = par::map_range((n + 2) * rows, |idx| {
        let (slot, r) = (idx / rows, idx % rows);
        let light = source(slot).row(r);
        let albedo = scene.albedo.row(r);
        let ambient = scene.ambient.row(r);
        let mut rng = noise.stream(slot, rows, r);
        (0..cols)
            .map(|c| {
                let mean = (projector_power * light[c] * albedo[c] + ambient[c]) * exposure;
                noise.sample(mean, &mut rng)
            })
            .collect::<Vec<f32>>()
    });
    let mut grids: Vec<Grid<f32>> = rows_out
        .chunks(rows)
        .map(|chunk| Grid::from_vec(rows, cols, chunk.concat()))
        .collect();
    let calib_off = grids.pop().expect("off frame");
    let calib_on = grids.pop().expect("on frame");
    Ok(CaptureCube {
        frames: grids,
        calib_on,
        calib_off,
        exposure_scale: exposure,
    })
}

/// Warp, then capture with the cube's own frame count.
pub fn simulate(
    cube: &PatternCube,
    scene: &Scene,
    noise: &NoiseModel,
    projector_power: f32,
    budget: f32,
) -> Result<CaptureCube> {
    let ideal = warp(cube, scene)?;
    capture(&ideal, scene, noise, projector_power, budget, cube.n_frames())
}
