use slcode::channel::Scene;
use slcode::{DisparityMap, Grid, Mask};

const RED: [u8; 3] = [255, 0, 0];

/// Grayscale disparity over the ground-truth range; pixels off by more than
/// `tolerance` are painted red, invalid pixels black.
pub fn disparity_with_errors(est: &DisparityMap, scene: &Scene, tolerance: u32) -> Grid<[u8; 3]> {
    let valid: Vec<i32> = scene
        .gt_disparity
        .iter()
        .zip(scene.valid.iter())
        .filter(|(_, &v)| v)
        .map(|(&d, _)| d)
        .collect();
    let lo = valid.iter().copied().min().unwrap_or(0);
    let hi = valid.iter().copied().max().unwrap_or(0);
    let span = (hi - lo).max(1) as f32;
    Grid::from_fn(est.rows(), est.cols(), |r, c| {
        if !*scene.valid.get(r, c) {
            return [0, 0, 0];
        }
        let gt = *scene.gt_disparity.get(r, c);
        match *est.get(r, c) {
            Some(d) if d.abs_diff(gt) <= tolerance => {
                let v = (40.0 + 215.0 * (d - lo) as f32 / span).clamp(0.0, 255.0) as u8;
                [v, v, v]
            }
            _ => RED,
        }
    })
}

/// Boolean mask as a black/white image.
pub fn mask(m: &Mask) -> Grid<u8> {
    m.map(|&b| if b { 255 } else { 0 })
}

/// Disparity as float, NaN where undecoded.
pub fn disparity_pfm(est: &DisparityMap) -> Grid<f32> {
    est.map(|d| d.map_or(f32::NAN, |d| d as f32))
}

/// Ground truth as float, NaN where invalid.
pub fn ground_truth_pfm(scene: &Scene) -> Grid<f32> {
    Grid::from_fn(scene.rows(), scene.cols(), |r, c| {
        if *scene.valid.get(r, c) {
            *scene.gt_disparity.get(r, c) as f32
        } else {
            f32::NAN
        }
    })
}
