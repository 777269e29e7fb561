use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slcode::channel::{capture, procedural_scene, simulate, warp, NoiseModel, Scene, SceneKind, SceneParams};
use slcode::codebook::{Codebook, Preset};
use slcode::decoder::{
    confidence, confidence_median_filter, error_rate, hard_decode, list_decode_order_prior, normalize, soft_decode,
    CodeTable, NormalizedCube,
};
use slcode::edc::{adaptive_loop, AdaptiveConfig};
use slcode::patterns::{adjacency_profile, build_pattern_cube, xor02, xor_transform, Arrangement, PatternCube};
use slcode::Grid;

fn cube_for(preset: Preset, rows: usize, cols: usize) -> (Codebook, PatternCube) {
    let book = preset.build().unwrap();
    let cube = build_pattern_cube(&book, rows, cols, preset.default_arrangement()).unwrap();
    (book, cube)
}

fn one_pixel_cube(values: &[f32]) -> NormalizedCube {
    NormalizedCube::from_values(1, 1, values.len(), values.to_vec(), Grid::filled(1, 1, true)).unwrap()
}

#[test]
fn gray_arrangement_distance_matches_d_min() {
    for preset in [Preset::Golay22, Preset::Hamming15] {
        let (book, cube) = cube_for(preset, 1, 1024);
        let profile = adjacency_profile(&cube).unwrap();
        assert_eq!(profile.max_adjacent_distance, book.d_min(), "{}", preset.name());
    }
}

#[test]
fn noise_free_round_trip_recovers_ground_truth() {
    let (_, cube) = cube_for(Preset::Golay22, 32, 128);
    let params = SceneParams { base_disparity: 5, slope_x: 0.02, ..SceneParams::default() };
    let scene = procedural_scene(SceneKind::SlantedPlane, 32, 128, &params, 1).unwrap();
    let cap = simulate(&cube, &scene, &NoiseModel::noiseless(), 4.0, 1.0).unwrap();
    let table = CodeTable::from_cube(&cube).unwrap();
    let res = soft_decode(&normalize(&cap, 0.0), &table, 3).unwrap();
    assert_eq!(error_rate(&res.disparity, &scene, 0).unwrap(), 0.0);
}

#[test]
fn energy_is_independent_of_frame_count() {
    let scene = Scene::uniform(Grid::filled(4, 16, 0), 0.8, 0.0).unwrap();
    let total = |preset: Preset| {
        let (_, cube) = cube_for(preset, 4, 16);
        let ideal = warp(&cube, &scene).unwrap();
        let noise = NoiseModel::noiseless();
        let cap = capture(&ideal, &scene, &noise, 1.0, 1.0, 1).unwrap();
        let single = *cap.calib_on.get(0, 3);
        let cap = capture(&ideal, &scene, &noise, 1.0, 1.0, cube.n_frames()).unwrap();
        let spread = *cap.calib_on.get(0, 3) * cube.n_frames() as f32;
        (single, spread)
    };
    for preset in [Preset::Gray10, Preset::Golay22, Preset::Bch63] {
        let (single, spread) = total(preset);
        assert!((single - spread).abs() < 1e-3, "{}: {single} vs {spread}", preset.name());
    }
}

#[test]
fn variance_law_at_mid_intensity() {
    let noise = NoiseModel { sigma_r: 0.01, sigma_s: 0.04, quant_bits: 16, seed: 9 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let samples: Vec<f64> = (0..100_000).map(|_| noise.sample(0.5, &mut rng) as f64).collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    let expect = 0.01f64.powi(2) + 0.04f64.powi(2) * 0.5;
    assert!((var / expect - 1.0).abs() < 0.05, "variance {var} vs {expect}");
}

#[test]
fn argmin_is_exhaustively_minimal() {
    let book = Preset::Hamming15.build().unwrap();
    let table = CodeTable::from_codebook(&book).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let r: Vec<f32> = (0..15).map(|_| rng.random::<f32>()).collect();
        let res = soft_decode(&one_pixel_cube(&r), &table, 3).unwrap();
        let best = res.corr.get(0, 0).unwrap();
        let d1 = *res.d1.get(0, 0);
        let exact: Vec<f32> = (0..table.len()).map(|j| table.soft_distance(&r, j)).collect();
        assert!((exact[best] - d1).abs() < 1e-5);
        for (j, &d) in exact.iter().enumerate() {
            assert!(d > d1 - 1e-5 || j == best, "column {j} beats the argmin");
            if (d - d1).abs() < 1e-6 {
                assert!(j >= best, "tie not broken toward the smaller column");
            }
        }
    }
}

#[test]
fn adaptive_invariants_hold_on_contaminated_scene() {
    let book = Preset::Xor02Crc5.build().unwrap();
    let cube = build_pattern_cube(&book, 32, 256, Arrangement::Binary).unwrap();
    let params = SceneParams { base_disparity: 8, band_width: 64, ..SceneParams::default() };
    let scene = procedural_scene(SceneKind::VGrooveBand, 32, 256, &params, 4).unwrap();
    let cfg = AdaptiveConfig { max_iters: 4, ..AdaptiveConfig::default() };
    let out = adaptive_loop(&scene, &cube, &book, &cfg).unwrap();
    let mut prev_active = usize::MAX;
    let mut committed: Grid<Option<Option<i32>>> = Grid::filled(32, 256, None);
    for rec in &out.history {
        assert!(rec.active_columns <= prev_active);
        prev_active = rec.active_columns;
        assert_eq!(rec.frames_used, rec.iteration * cube.n_frames());
        for r in 0..32 {
            for c in 0..256 {
                let now = *rec.disparity.get(r, c);
                if let Some(before) = committed.get(r, c) {
                    assert_eq!(*before, now, "committed pixel changed");
                } else if !*rec.unresolved.get(r, c) && scene.valid.get(r, c) == &true {
                    committed.set(r, c, Some(now));
                }
            }
        }
    }
    assert_eq!(out.frames_used, out.iterations * cube.n_frames());
}

#[test]
fn pfm_disparity_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gt.pfm");
    let gt = Grid::from_fn(6, 10, |r, c| (r + c) as f32 * 0.5 - 1.2);
    slcode::imageio::write_pfm(&path, &gt).unwrap();
    assert_eq!(slcode::imageio::read_pfm(&path).unwrap(), gt);
    let scene = slcode::channel::load_pfm_disparity(&path).unwrap();
    for r in 0..6 {
        for c in 0..10 {
            assert_eq!(*scene.gt_disparity.get(r, c), gt.get(r, c).round() as i32);
        }
    }
}

fn flip(word: &[u8], positions: &[usize]) -> Vec<f32> {
    let mut out: Vec<f32> = word.iter().map(|&b| b as f32).collect();
    for &p in positions {
        out[p] = 1.0 - out[p];
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn column_codes_read_back(cols in 16usize..300, gray in any::<bool>()) {
        let book = Preset::Golay22.build().unwrap();
        let arrangement = if gray { Arrangement::Gray } else { Arrangement::Binary };
        let cube = build_pattern_cube(&book, 2, cols, arrangement.clone()).unwrap();
        for c in 0..cols {
            let idx = arrangement.index(c, book.k(), book.q()).unwrap();
            prop_assert_eq!(&cube.column_code(c), book.word(idx));
        }
    }

    #[test]
    fn xor_is_an_involution(base in 0usize..10, cols in 16usize..200) {
        let (_, cube) = cube_for(Preset::Gray10, 1, cols);
        let once = xor_transform(&cube, base).unwrap();
        prop_assert_eq!(once.profile(base), cube.profile(base));
        prop_assert_eq!(xor_transform(&once, base).unwrap().column_codes(), cube.column_codes());
    }

    #[test]
    fn xor02_keeps_two_finest_frames(cols in 16usize..1024) {
        let (_, cube) = cube_for(Preset::Gray10, 1, cols);
        let x = xor02(&cube).unwrap();
        prop_assert_eq!(x.profile(8), cube.profile(8));
        prop_assert_eq!(x.profile(9), cube.profile(9));
    }

    #[test]
    fn capture_is_deterministic(seed in any::<u64>()) {
        let (_, cube) = cube_for(Preset::Hamming15, 8, 32);
        let scene = Scene::uniform(Grid::filled(8, 32, 2), 0.7, 0.3).unwrap();
        let noise = NoiseModel::shot(0.04, seed);
        let a = simulate(&cube, &scene, &noise, 3.0, 1.0).unwrap();
        let b = simulate(&cube, &scene, &noise, 3.0, 1.0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn decoders_correct_within_radius(preset_idx in 0usize..4, word in 0usize..1024, seed in any::<u64>()) {
        let preset = [Preset::Golay22, Preset::Golay24, Preset::Hamming15, Preset::Bch63][preset_idx];
        let book = preset.build().unwrap();
        let table = CodeTable::from_codebook(&book).unwrap();
        let word = word % book.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = rand::seq::index::sample(&mut rng, book.n(), book.correction_radius()).into_vec();
        let received = one_pixel_cube(&flip(book.word(word).symbols(), &positions));
        prop_assert_eq!(*soft_decode(&received, &table, 2).unwrap().corr.get(0, 0), Some(word));
        prop_assert_eq!(*hard_decode(&received, &table, 2).unwrap().corr.get(0, 0), Some(word));
    }

    #[test]
    fn confidence_bounds(d1 in 0.0f32..10.0, gap in 0.0f32..10.0) {
        let d2 = d1 + gap;
        let c = confidence(d1, d2);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c == 1.0, d1 == 0.0 && d2 > 0.0);
        prop_assert_eq!(c == 0.0, d1 == d2);
    }

    #[test]
    fn order_prior_leaves_anchors(seed in any::<u64>(), t_high in 0.2f32..0.9) {
        let (_, cube) = cube_for(Preset::Hamming15, 4, 64);
        let scene = Scene::uniform(Grid::filled(4, 64, 3), 1.0, 0.5).unwrap();
        let cap = simulate(&cube, &scene, &NoiseModel::shot(0.04, seed), 2.0, 1.0).unwrap();
        let table = CodeTable::from_cube(&cube).unwrap();
        let res = soft_decode(&normalize(&cap, 0.0), &table, 3).unwrap();
        let out = list_decode_order_prior(&res, t_high).unwrap();
        for r in 0..4 {
            for c in 0..64 {
                if res.corr.get(r, c).is_some() && *res.confidence.get(r, c) > t_high {
                    prop_assert_eq!(out.corr.get(r, c), res.corr.get(r, c));
                }
            }
        }
    }

    #[test]
    fn median_filter_is_idempotent(values in prop::collection::vec(-20i32..20, 64), conf in prop::collection::vec(0.0f32..1.0, 64)) {
        let d = Grid::from_fn(8, 8, |r, c| Some(values[r * 8 + c]));
        let k = Grid::from_fn(8, 8, |r, c| conf[r * 8 + c]);
        let once = confidence_median_filter(&d, &k, 0.1, 0.5, 5).unwrap();
        let twice = confidence_median_filter(&once, &k, 0.1, 0.5, 5).unwrap();
        prop_assert_eq!(once, twice);
    }
}
