use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slcode::channel::{load_pfm_disparity, procedural_scene, NoiseModel, Scene, SceneKind, SceneParams};
use slcode::codebook::Preset;
use slcode::decoder::{DecodeMethod, DecodeOptions};

/// Everything an experiment depends on. Loaded from TOML, then overridden by flags.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output: PathBuf,
    pub seeds: Vec<u64>,
    pub scene: SceneConfig,
    pub noise: NoiseConfig,
    pub sweep: SweepConfig,
    pub decode: DecodeConfig,
    pub adaptive: AdaptiveSection,
    pub mux: MuxSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output: PathBuf::from("out"),
            seeds: vec![1],
            scene: SceneConfig::default(),
            noise: NoiseConfig::default(),
            sweep: SweepConfig::default(),
            decode: DecodeConfig::default(),
            adaptive: AdaptiveSection::default(),
            mux: MuxSection::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Ground-truth disparity file; replaces the procedural scene when set.
    pub pfm: Option<PathBuf>,
    pub base_disparity: i32,
    pub slope_x: f32,
    pub slope_y: f32,
    pub steps: usize,
    pub step_height: i32,
    pub band_width: usize,
    pub groove_depth: i32,
    pub albedo_min: f32,
    pub albedo_max: f32,
    pub ambient: f32,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let p = SceneParams::default();
        SceneConfig {
            kind: SceneKind::Steps.name().to_string(),
            rows: 256,
            cols: 256,
            seed: 1,
            pfm: None,
            base_disparity: p.base_disparity,
            slope_x: p.slope_x,
            slope_y: p.slope_y,
            steps: p.steps,
            step_height: p.step_height,
            band_width: p.band_width,
            groove_depth: p.groove_depth,
            albedo_min: p.albedo_min,
            albedo_max: p.albedo_max,
            ambient: p.ambient,
        }
    }
}

impl SceneConfig {
    pub fn build(&self) -> Result<Scene> {
        if let Some(path) = &self.pfm {
            return load_pfm_disparity(path).with_context(|| format!("loading {}", path.display()));
        }
        let kind: SceneKind = self.kind.parse()?;
        let params = SceneParams {
            base_disparity: self.base_disparity,
            slope_x: self.slope_x,
            slope_y: self.slope_y,
            steps: self.steps,
            step_height: self.step_height,
            band_width: self.band_width,
            groove_depth: self.groove_depth,
            albedo_min: self.albedo_min,
            albedo_max: self.albedo_max,
            ambient: self.ambient,
        };
        Ok(procedural_scene(kind, self.rows, self.cols, &params, self.seed)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_s: f32,
    pub sigma_r: f32,
    pub bits: u32,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_s: 0.04,
            sigma_r: 0.0,
            bits: 16,
        }
    }
}

impl NoiseConfig {
    pub fn model(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            sigma_r: self.sigma_r,
            sigma_s: self.sigma_s,
            quant_bits: self.bits,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub codes: Vec<String>,
    pub ratios: Vec<f32>,
    pub methods: Vec<String>,
    pub budget: f32,
    pub ambient_level: f32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            codes: vec!["gray10".into(), "golay22".into()],
            ratios: (0..12).map(|i| (0.25 * 1.5f32.powi(i) * 1000.0).round() / 1000.0).collect(),
            methods: vec!["soft".into()],
            budget: 1.0,
            ambient_level: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub preset: String,
    pub ratio: f32,
    pub t_low: f32,
    pub t_high: f32,
    pub window: usize,
    pub top_l: usize,
    pub tolerance: u32,
    pub report_tolerance: u32,
    pub contrast_floor: f32,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        let d = DecodeOptions::default();
        DecodeConfig {
            preset: "golay22".into(),
            ratio: 1.0,
            t_low: d.t_low,
            t_high: d.t_high,
            window: d.window,
            top_l: d.top_l,
            tolerance: 0,
            report_tolerance: 2,
            contrast_floor: d.contrast_floor,
        }
    }
}

impl DecodeConfig {
    pub fn options(&self) -> DecodeOptions {
        DecodeOptions {
            contrast_floor: self.contrast_floor,
            top_l: self.top_l,
            t_low: self.t_low,
            t_high: self.t_high,
            window: self.window,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveSection {
    pub preset: String,
    pub alpha: f32,
    pub radius: usize,
    pub power: f32,
    pub max_iters: usize,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        let d = slcode::edc::AdaptiveConfig::default();
        AdaptiveSection {
            preset: Preset::Xor02Crc5.name().into(),
            alpha: d.mix.alpha,
            radius: d.mix.radius,
            power: d.projector_power,
            max_iters: d.max_iters,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MuxSection {
    pub chip: String,
    /// Interfering source sequence in the event demo.
    pub interferer: String,
    pub curtain_chips: [String; 2],
    pub coupling: f32,
    pub rows: usize,
    pub cols: usize,
    pub event_threshold: f32,
    pub score_threshold: f32,
}

impl Default for MuxSection {
    fn default() -> Self {
        MuxSection {
            chip: "10100010".into(),
            interferer: "10".into(),
            curtain_chips: ["1100".into(), "0101".into()],
            coupling: 1.0,
            rows: 32,
            cols: 64,
            event_threshold: 0.5,
            score_threshold: 0.9,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Checks references that serde cannot: preset and method names, seeds.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        for name in self.sweep.codes.iter().chain([&self.decode.preset, &self.adaptive.preset]) {
            name.parse::<Preset>()?;
        }
        for m in &self.sweep.methods {
            m.parse::<DecodeMethod>()?;
        }
        self.scene.kind.parse::<SceneKind>()?;
        Ok(())
    }

    /// Short digest of the effective configuration, used in output file names.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest[..5].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
