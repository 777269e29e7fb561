use std::fmt;
use std::str::FromStr;

use super::{
    confidence_median_filter, error_rate, hard_decode, list_decode_order_prior, normalize, soft_decode, CodeTable,
    DecodeResult, NormalizedCube, DEFAULT_CONTRAST_FLOOR, DEFAULT_TOP_L,
};
use crate::channel::{simulate, NoiseModel, Scene};
use crate::codebook::Preset;
use crate::error::{domain, Error, Result};
use crate::grid::DisparityMap;
use crate::par;
use crate::patterns::{build_pattern_cube, PatternCube};

/// Decoding pipelines compared by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecodeMethod {
    Soft,
    Hard,
    /// Soft decoding followed by the order prior.
    List,
    /// Soft decoding followed by the confidence median filter.
    Median,
}

impl DecodeMethod {
    pub const ALL: [DecodeMethod; 4] = [DecodeMethod::Soft, DecodeMethod::Hard, DecodeMethod::List, DecodeMethod::Median];

    pub fn name(self) -> &'static str {
        match self {
            DecodeMethod::Soft => "soft",
            DecodeMethod::Hard => "hard",
            DecodeMethod::List => "list",
            DecodeMethod::Median => "median",
        }
    }
}

impl fmt::Display for DecodeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecodeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecodeMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown decode method {s:?}; expected soft, hard, list or median")))
    }
}

/// Thresholds shared by the decoding pipelines.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOptions {
    pub contrast_floor: f32,
    pub top_l: usize,
    pub t_low: f32,
    pub t_high: f32,
    pub window: usize,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            contrast_floor: DEFAULT_CONTRAST_FLOOR,
            top_l: DEFAULT_TOP_L,
            t_low: 0.1,
            t_high: 0.5,
            window: 5,
        }
    }
}

/// Runs one pipeline on a normalized cube. `soft` may carry a precomputed
/// soft decode of the same cube.
pub fn run_method(
    method: DecodeMethod,
    norm: &NormalizedCube,
    table: &CodeTable,
    opts: &DecodeOptions,
    soft: Option<&DecodeResult>,
) -> Result<DisparityMap> {
    let fresh;
    let soft = match (method, soft) {
        (DecodeMethod::Hard, _) => return Ok(hard_decode(norm, table, opts.top_l)?.disparity),
        (_, Some(s)) => s,
        (_, None) => {
            fresh = soft_decode(norm, table, opts.top_l)?;
            &fresh
        }
    };
    Ok(match method {
        DecodeMethod::Soft => soft.disparity.clone(),
        DecodeMethod::List => list_decode_order_prior(soft, opts.t_high)?.disparity,
        DecodeMethod::Median => {
            confidence_median_filter(&soft.disparity, &soft.confidence, opts.t_low, opts.t_high, opts.window)?
        }
        DecodeMethod::Hard => unreachable!(),
    })
}

/// One code under test: its projected cube and the table decoded against.
#[derive(Clone, Debug)]
pub struct SweepCode {
    pub label: String,
    pub cube: PatternCube,
    pub table: CodeTable,
}

impl SweepCode {
    pub fn new(label: impl Into<String>, cube: PatternCube) -> Result<Self> {
        let table = CodeTable::from_cube(&cube)?;
        Ok(SweepCode {
            label: label.into(),
            cube,
            table,
        })
    }

    /// A preset laid out with its default arrangement.
    pub fn from_preset(preset: Preset, rows: usize, cols: usize) -> Result<Self> {
        let book = preset.build()?;
        let cube = build_pattern_cube(&book, rows, cols, preset.default_arrangement())?;
        SweepCode::new(preset.name(), cube)
    }
}

/// A grid of (code, projector/ambient ratio, seed) experiments.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub codes: Vec<SweepCode>,
    /// Projector power is `ratio * ambient_level`.
    pub ratios: Vec<f32>,
    pub ambient_level: f32,
    pub budget: f32,
    /// Noise parameters; the seed is replaced by each entry of `seeds`.
    pub noise: NoiseModel,
    pub seeds: Vec<u64>,
    pub methods: Vec<DecodeMethod>,
    /// Tolerance of the primary error metric.
    pub tolerance: u32,
    /// Tolerance of the secondary error metric reported alongside.
    pub report_tolerance: u32,
    pub decode: DecodeOptions,
}

impl SweepSpec {
    pub fn new(codes: Vec<SweepCode>, ratios: Vec<f32>, noise: NoiseModel, seeds: Vec<u64>) -> Self {
        SweepSpec {
            codes,
            ratios,
            ambient_level: 1.0,
            budget: 1.0,
            noise,
            seeds,
            methods: vec![DecodeMethod::Soft],
            tolerance: 0,
            report_tolerance: 2,
            decode: DecodeOptions::default(),
        }
    }
}

/// Error rates of one (code, ratio, seed, method) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub code: String,
    pub ratio: f32,
    pub seed: u64,
    pub method: DecodeMethod,
    pub error: f64,
    pub error_report: f64,
}

/// Seed-aggregated error of one (code, ratio, method).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub code: String,
    pub ratio: f32,
    pub method: DecodeMethod,
    pub seeds: usize,
    pub mean_error: f64,
    /// Half-width of the normal 95% interval of the mean.
    pub ci95: f64,
    pub mean_error_report: f64,
}

impl SweepRow {
    pub fn csv_header(report_tolerance: u32) -> String {
        format!("code,ratio,method,seeds,mean_error,ci95,mean_error_tol{report_tolerance}")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6}",
            self.code, self.ratio, self.method, self.seeds, self.mean_error, self.ci95, self.mean_error_report
        )
    }
}

fn run_cell(scene: &Scene, spec: &SweepSpec, code: &SweepCode, ratio: f32, seed: u64) -> Result<Vec<SweepRecord>> {
    let power = ratio * spec.ambient_level;
    let cap = simulate(&code.cube, scene, &spec.noise.with_seed(seed), power, spec.budget)?;
    let norm = normalize(&cap, spec.decode.contrast_floor);
    let needs_soft = spec.methods.iter().any(|&m| m != DecodeMethod::Hard);
    let soft = if needs_soft {
        Some(soft_decode(&norm, &code.table, spec.decode.top_l)?)
    } else {
        None
    };
    spec.methods
        .iter()
        .map(|&method| {
            let est = run_method(method, &norm, &code.table, &spec.decode, soft.as_ref())?;
            Ok(SweepRecord {
                code: code.label.clone(),
                ratio,
                seed,
                method,
                error: error_rate(&est, scene, spec.tolerance)?,
                error_report: error_rate(&est, scene, spec.report_tolerance)?,
            })
        })
        .collect()
}

/// Runs the full pipeline for every cell. Records are ordered by code, ratio,
/// seed and method, independent of scheduling.
pub fn sweep(scene: &Scene, spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    if spec.seeds.is_empty() {
        return domain("sweep needs at least one seed");
    }
    if spec.codes.is_empty() || spec.ratios.is_empty() || spec.methods.is_empty() {
        return domain("sweep needs at least one code, ratio and method");
    }
    let (nr, ns) = (spec.ratios.len(), spec.seeds.len());
    let cells = spec.codes.len() * nr * ns;
    let results = par::map_range(cells, |i| {
        let code = &spec.codes[i / (nr * ns)];
        let ratio = spec.ratios[(i / ns) % nr];
        let seed = spec.seeds[i % ns];
        run_cell(scene, spec, code, ratio, seed)
    });
    let mut records = Vec::with_capacity(cells * spec.methods.len());
    for r in results {
        records.extend(r?);
    }
    Ok(records)
}

/// Averages records over seeds, keeping first-appearance order.
pub fn aggregate(records: &[SweepRecord]) -> Vec<SweepRow> {
    let mut keys: Vec<(String, u32, DecodeMethod)> = Vec::new();
    for r in records {
        let key = (r.code.clone(), r.ratio.to_bits(), r.method);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(code, ratio_bits, method)| {
            let cell: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.code == code && r.ratio.to_bits() == ratio_bits && r.method == method)
                .collect();
            let n = cell.len() as f64;
            let mean = cell.iter().map(|r| r.error).sum::<f64>() / n;
            let var = if cell.len() > 1 {
                cell.iter().map(|r| (r.error - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SweepRow {
                code,
                ratio: f32::from_bits(ratio_bits),
                method,
                seeds: cell.len(),
                mean_error: mean,
                ci95: 1.96 * (var / n).sqrt(),
                mean_error_report: cell.iter().map(|r| r.error_report).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Ratio at which `code`'s `method` mean error is closest to `target`.
pub fn mid_snr_ratio(rows: &[SweepRow], code: &str, method: DecodeMethod, target: f64) -> Option<f32> {
    rows.iter()
        .filter(|r| r.code == code && r.method == method)
        .min_by(|a, b| (a.mean_error - target).abs().total_cmp(&(b.mean_error - target).abs()))
        .map(|r| r.ratio)
}
