use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::grid::{Grid, Mask};
use crate::imageio;

/// Ground truth seen by the camera.
///
/// `gt_disparity[r][m]` is the projector-column offset, so camera column `m`
/// sees projector column `m - gt_disparity[r][m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub gt_disparity: Grid<i32>,
    pub albedo: Grid<f32>,
    pub ambient: Grid<f32>,
    pub valid: Mask,
    /// Per pixel, the projector column that inter-reflected light reaching it
    /// comes from. `None` for the whole scene means every pixel's own column.
    pub reflection: Option<Grid<Option<usize>>>,
}

impl Scene {
    /// Scene with every pixel valid, uniform albedo and ambient.
    pub fn uniform(gt_disparity: Grid<i32>, albedo: f32, ambient: f32) -> Result<Scene> {
        let (rows, cols) = (gt_disparity.rows(), gt_disparity.cols());
        let mut scene = Scene {
            gt_disparity,
            albedo: Grid::filled(rows, cols, albedo),
            ambient: Grid::filled(rows, cols, ambient),
            valid: Grid::filled(rows, cols, true),
            reflection: None,
        };
        scene.mask_out_of_range();
        scene.validate()?;
        Ok(scene)
    }

    pub fn rows(&self) -> usize {
        self.gt_disparity.rows()
    }

    pub fn cols(&self) -> usize {
        self.gt_disparity.cols()
    }

    /// Projector column seen by a valid pixel.
    #[inline]
    pub fn projector_column(&self, row: usize, col: usize) -> Option<usize> {
        if !*self.valid.get(row, col) {
            return None;
        }
        let p = col as i64 - *self.gt_disparity.get(row, col) as i64;
        (0..self.cols() as i64).contains(&p).then_some(p as usize)
    }

    /// Marks pixels whose correspondence falls outside the projector invalid.
    pub fn mask_out_of_range(&mut self) {
        let cols = self.cols() as i64;
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                let p = c as i64 - *self.gt_disparity.get(r, c) as i64;
                if !(0..cols).contains(&p) {
                    self.valid.set(r, c, false);
                }
            }
        }
    }

    /// Number of valid pixels.
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Pixels that receive inter-reflected light from a specific source column.
    pub fn reflection_mask(&self) -> Mask {
        match &self.reflection {
            Some(refl) => refl.map(Option::is_some),
            None => Grid::filled(self.rows(), self.cols(), false),
        }
    }

    /// Checks shapes, value ranges and the correspondence range of valid pixels.
    pub fn validate(&self) -> Result<()> {
        let g = &self.gt_disparity;
        if !g.same_shape(&self.albedo) || !g.same_shape(&self.ambient) || !g.same_shape(&self.valid) {
            return domain("scene maps differ in shape");
        }
        if let Some(refl) = &self.reflection {
            if !g.same_shape(refl) {
                return domain("reflection map differs in shape");
            }
            if refl.iter().flatten().any(|&p| p >= self.cols()) {
                return domain("reflection source outside the projector");
            }
        }
        if self.albedo.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return domain("albedo outside [0, 1]");
        }
        if self.ambient.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return domain("ambient must be finite and nonnegative");
        }
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                if *self.valid.get(r, c) && self.projector_column(r, c).is_none() {
                    return domain(format!("valid pixel ({r}, {c}) maps outside the projector"));
                }
            }
        }
        Ok(())
    }
}

/// Shapes produced by [`procedural_scene`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneKind {
    SlantedPlane,
    Steps,
    VGrooveBand,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::SlantedPlane => "slanted-plane",
            SceneKind::Steps => "steps",
            SceneKind::VGrooveBand => "v-groove-band",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slanted-plane" => Ok(SceneKind::SlantedPlane),
            "steps" => Ok(SceneKind::Steps),
            "v-groove-band" => Ok(SceneKind::VGrooveBand),
            _ => Err(Error::Config(format!(
                "unknown scene kind {s:?}; expected slanted-plane, steps or v-groove-band"
            ))),
        }
    }
}

/// Parameters of [`procedural_scene`]. Fields that do not apply to a kind are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    /// Disparity at column 0 (slanted plane) or of the background.
    pub base_disparity: i32,
    /// Disparity change per camera column (slanted plane).
    pub slope_x: f32,
    /// Disparity change per camera row (slanted plane).
    pub slope_y: f32,
    /// Number of disparity discontinuities along each row (steps).
    pub steps: usize,
    /// Disparity increment at each step.
    pub step_height: i32,
    /// Width in columns of the groove (v-groove-band).
    pub band_width: usize,
    /// Extra disparity at the groove's hinge (v-groove-band).
    pub groove_depth: i32,
    pub albedo_min: f32,
    pub albedo_max: f32,
    pub ambient: f32,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            base_disparity: 0,
            slope_x: 0.0,
            slope_y: 0.0,
            steps: 4,
            step_height: 6,
            band_width: 64,
            groove_depth: 12,
            albedo_min: 0.5,
            albedo_max: 1.0,
            ambient: 1.0,
        }
    }
}

/// Synthesizes a scene of the given kind.
///
/// Albedo is drawn uniformly from `[albedo_min, albedo_max]` per pixel with a
/// ChaCha8 stream seeded by `seed`; ambient is constant.
pub fn procedural_scene(kind: SceneKind, rows: usize, cols: usize, params: &SceneParams, seed: u64) -> Result<Scene> {
    if rows < 16 || cols < 16 {
        return domain("procedural scenes need at least 16 rows and columns");
    }
    let p = params;
    if !(0.0..=p.albedo_max).contains(&p.albedo_min) || p.albedo_max > 1.0 {
        return domain("albedo range must satisfy 0 ≤ min ≤ max ≤ 1");
    }
    if !(p.ambient.is_finite() && p.ambient >= 0.0) {
        return domain("ambient must be finite and nonnegative");
    }
    let mut reflection = None;
    let gt = match kind {
        SceneKind::SlantedPlane => Grid::from_fn(rows, cols, |r, c| {
            p.base_disparity + (p.slope_x * c as f32 + p.slope_y * r as f32).round() as i32
        }),
        SceneKind::Steps => {
            if p.steps >= cols {
                return domain("more steps than columns");
            }
            let segment = cols as f64 / (p.steps + 1) as f64;
            Grid::from_fn(rows, cols, |_, c| {
                let level = ((c as f64 / segment) as usize).min(p.steps);
                p.base_disparity + level as i32 * p.step_height
            })
        }
        SceneKind::VGrooveBand => {
            let w = p.band_width;
            if w < 2 || w > cols {
                return domain("band width must be between 2 and the column count");
            }
            let c0 = (cols - w) / 2;
            let half = (w - 1) as f32 / 2.0;
            let depth_at = |c: usize| -> i32 {
                if (c0..c0 + w).contains(&c) {
                    let t = 1.0 - ((c - c0) as f32 - half).abs() / half;
                    p.base_disparity + (p.groove_depth as f32 * t).round() as i32
                } else {
                    p.base_disparity
                }
            };
            let gt = Grid::from_fn(rows, cols, |_, c| depth_at(c));
            // each face of the groove is lit by light bouncing off the mirrored face
            reflection = Some(Grid::from_fn(rows, cols, |_, c| {
                if !(c0..c0 + w).contains(&c) {
                    return None;
                }
                let mirror = 2 * c0 + w - 1 - c;
                let src = mirror as i64 - depth_at(mirror) as i64;
                (0..cols as i64).contains(&src).then_some(src as usize)
            }));
            gt
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = p.albedo_max - p.albedo_min;
    let albedo = Grid::from_fn(rows, cols, |_, _| p.albedo_min + span * rng.random::<f32>());
    let mut scene = Scene {
        gt_disparity: gt,
        albedo,
        ambient: Grid::filled(rows, cols, p.ambient),
        valid: Grid::filled(rows, cols, true),
        reflection,
    };
    scene.mask_out_of_range();
    scene.validate()?;
    Ok(scene)
}

/// Loads a single-channel PFM disparity map into a scene with unit albedo and
/// no ambient light. Disparities are rounded to the nearest integer; NaN,
/// infinite and out-of-range pixels are marked invalid.
pub fn load_pfm_disparity(path: &Path) -> Result<Scene> {
    let map = imageio::read_pfm(path)?;
    let (rows, cols) = (map.rows(), map.cols());
    let valid = map.map(|v| v.is_finite());
    let gt = map.map(|&v| if v.is_finite() { v.round().clamp(i32::MIN as f32, i32::MAX as f32) as i32 } else { 0 });
    let mut scene = Scene {
        gt_disparity: gt,
        albedo: Grid::filled(rows, cols, 1.0),
        ambient: Grid::filled(rows, cols, 0.0),
        valid,
        reflection: None,
    };
    scene.mask_out_of_range();
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plane_is_constant() {
        let params = SceneParams {
            base_disparity: 5,
            ..SceneParams::default()
        };
        let s = procedural_scene(SceneKind::SlantedPlane, 16, 32, &params, 1).unwrap();
        assert!(s.gt_disparity.iter().all(|&d| d == 5));
        // columns 0..5 would need projector columns below zero
        assert_eq!(s.valid_count(), 16 * 27);
    }

    #[test]
    fn steps_have_requested_discontinuities() {
        for steps in [0, 1, 3, 7] {
            let params = SceneParams {
                steps,
                ..SceneParams::default()
            };
            let s = procedural_scene(SceneKind::Steps, 16, 128, &params, 2).unwrap();
            for r in 0..16 {
                let jumps = s.gt_disparity.row(r).windows(2).filter(|w| w[0] != w[1]).count();
                assert_eq!(jumps, steps);
            }
        }
    }

    #[test]
    fn groove_reflection_is_mirrored() {
        let params = SceneParams {
            band_width: 20,
            groove_depth: 4,
            base_disparity: 2,
            ..SceneParams::default()
        };
        let s = procedural_scene(SceneKind::VGrooveBand, 16, 64, &params, 3).unwrap();
        let refl = s.reflection.as_ref().unwrap();
        assert!(refl.get(0, 10).is_none());
        // band spans 22..42; column 22 mirrors column 41
        assert_eq!(*refl.get(0, 22), Some(41 - *s.gt_disparity.get(0, 41) as usize));
        assert_eq!(s.reflection_mask().iter().filter(|&&b| b).count(), 16 * 20);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let p = SceneParams::default();
        assert!(procedural_scene(SceneKind::SlantedPlane, 8, 64, &p, 0).is_err());
        let bad = SceneParams {
            albedo_min: 0.9,
            albedo_max: 0.5,
            ..p
        };
        assert!(procedural_scene(SceneKind::SlantedPlane, 16, 64, &bad, 0).is_err());
        assert!("cube".parse::<SceneKind>().is_err());
    }
}
