//! WebAssembly bindings behind `www/index.html`.
//!
//! Images cross the boundary as RGBA byte vectors ready for `ImageData`.

use slcode::channel::{procedural_scene, simulate, NoiseModel, Scene, SceneKind, SceneParams};
use slcode::codebook::Preset;
use slcode::decoder::{error_rate, normalize, run_method, CodeTable, DecodeMethod, DecodeOptions};
use slcode::patterns::build_pattern_cube;
use slcode::DisparityMap;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Preset names, one per line.
#[wasm_bindgen]
pub fn preset_names() -> String {
    Preset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join("\n")
}

/// `name,n,k,q,d_min` rows for every preset.
#[wasm_bindgen]
pub fn codebook_table() -> Result<String, JsValue> {
    let mut out = String::from("name,n,k,q,d_min\n");
    for p in Preset::ALL {
        let b = p.build().map_err(js_err)?;
        out.push_str(&format!("{},{},{},{},{}\n", p.name(), b.n(), b.k(), b.q(), b.d_min()));
    }
    Ok(out)
}

/// All frames of a preset stacked top to bottom, `band` pixel rows each.
/// The image is `cols` wide and `n * band` tall.
#[wasm_bindgen]
pub fn pattern_strip(preset: &str, cols: usize, band: usize) -> Result<Vec<u8>, JsValue> {
    let preset: Preset = preset.parse().map_err(js_err)?;
    let book = preset.build().map_err(js_err)?;
    let cube = build_pattern_cube(&book, 1, cols, preset.default_arrangement()).map_err(js_err)?;
    let mut rgba = Vec::with_capacity(cube.n_frames() * band * cols * 4);
    for f in 0..cube.n_frames() {
        let row: Vec<u8> = (0..cols).map(|c| (cube.level(f, c) * 255.0).round() as u8).collect();
        for _ in 0..band {
            for &v in &row {
                rgba.extend_from_slice(&[v, v, v, 255]);
            }
        }
    }
    Ok(rgba)
}

/// Outcome of [`decode_scene`].
#[wasm_bindgen]
pub struct DecodeView {
    rows: usize,
    cols: usize,
    error_rate: f64,
    frames: usize,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl DecodeView {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[wasm_bindgen(getter)]
    pub fn error_rate(&self) -> f64 {
        self.error_rate
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Disparity in gray, wrong pixels red, invalid pixels black.
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

fn paint(est: &DisparityMap, scene: &Scene) -> Vec<u8> {
    let valid = || scene.gt_disparity.iter().zip(scene.valid.iter()).filter(|(_, &v)| v).map(|(&d, _)| d);
    let lo = valid().min().unwrap_or(0);
    let span = (valid().max().unwrap_or(0) - lo).max(1) as f32;
    let mut rgba = Vec::with_capacity(est.rows() * est.cols() * 4);
    for r in 0..est.rows() {
        for c in 0..est.cols() {
            let px = match (*scene.valid.get(r, c), *est.get(r, c)) {
                (false, _) => [0, 0, 0],
                (true, Some(d)) if d == *scene.gt_disparity.get(r, c) => {
                    let v = (40.0 + 215.0 * (d - lo) as f32 / span) as u8;
                    [v, v, v]
                }
                _ => [255, 0, 0],
            };
            rgba.extend_from_slice(&[px[0], px[1], px[2], 255]);
        }
    }
    rgba
}

/// Simulates and decodes a stepped scene with the given code, projector/ambient
/// ratio, shot-noise coefficient and method (`hard`, `soft`, `list`, `median`).
#[wasm_bindgen]
pub fn decode_scene(
    preset: &str,
    ratio: f32,
    sigma_s: f32,
    method: &str,
    seed: u32,
) -> Result<DecodeView, JsValue> {
    let (rows, cols) = (96, 256);
    let preset: Preset = preset.parse().map_err(js_err)?;
    let method: DecodeMethod = method.parse().map_err(js_err)?;
    let book = preset.build().map_err(js_err)?;
    let scene = procedural_scene(SceneKind::Steps, rows, cols, &SceneParams::default(), 1).map_err(js_err)?;
    let cube = build_pattern_cube(&book, rows, cols, preset.default_arrangement()).map_err(js_err)?;
    let noise = NoiseModel::shot(sigma_s, seed as u64);
    let cap = simulate(&cube, &scene, &noise, ratio, 1.0).map_err(js_err)?;
    let opts = DecodeOptions::default();
    let table = CodeTable::from_cube(&cube).map_err(js_err)?;
    let est = run_method(method, &normalize(&cap, opts.contrast_floor), &table, &opts, None).map_err(js_err)?;
    Ok(DecodeView {
        rows,
        cols,
        error_rate: error_rate(&est, &scene, 0).map_err(js_err)?,
        frames: cube.n_frames(),
        rgba: paint(&est, &scene),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lists_every_preset() {
        let t = codebook_table().unwrap();
        assert_eq!(t.lines().count(), 1 + Preset::ALL.len());
        assert!(t.contains("golay22,22,10,2,8"));
    }

    #[test]
    fn strip_has_one_band_per_frame() {
        let px = pattern_strip("hamming15", 64, 3).unwrap();
        assert_eq!(px.len(), 15 * 3 * 64 * 4);
    }

    #[test]
    fn clean_decode_is_exact() {
        let v = decode_scene("golay22", 4.0, 0.0, "soft", 1).unwrap();
        assert_eq!(v.error_rate(), 0.0);
        assert_eq!(v.rgba().len(), v.rows() * v.cols() * 4);
        assert!(v.rgba().chunks(4).all(|p| p != [255, 0, 0, 255]));
    }
}
