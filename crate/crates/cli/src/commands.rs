use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use slcode::channel::{load_pfm_disparity, simulate as simulate_capture, CaptureCube, MixParams, Scene};
use slcode::codebook::{min_distance, poisson_disk_search, Preset, CRC5_ITU};
use slcode::decoder::{
    aggregate, error_rate, hard_decode, mid_snr_ratio, normalize, run_method, soft_decode, sweep as run_sweep,
    CodeTable, DecodeMethod, SweepCode, SweepRow, SweepSpec,
};
use slcode::edc::{adaptive_loop, AdaptiveConfig};
use slcode::imageio::{read_pfm, write_pfm, write_png_gray, write_png_rgb};
use slcode::patterns::{adjacency_profile, build_pattern_cube, export_frames, xor02, Arrangement, FrameFormat, PatternCube};
use slcode::source_mux::{
    run_event_demo, simulate_light_curtains, standard_curtain_scene, ChipCode, CurtainDevice, DetectionFrame,
    EventDemo, MuxReport,
};
use slcode::Grid;

use crate::config::RunConfig;
use crate::render;

fn out_dir(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    let dir = cfg.output.join(name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Stores the effective configuration beside the outputs it produced.
fn save_config(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    let path = cfg.output.join(format!("config-{}.toml", cfg.hash()));
    fs::write(&path, cfg.to_toml()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn codebook_list() -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "name,n,k,q,d_min,systematic")?;
    for preset in Preset::ALL {
        let book = preset.build()?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            preset.name(),
            book.n(),
            book.k(),
            book.q(),
            book.d_min(),
            book.is_systematic()
        )?;
    }
    Ok(())
}

pub fn codebook_search(cfg: &RunConfig, n: usize, k: usize, d: usize, seed: u64, budget: u64) -> Result<()> {
    let book = poisson_disk_search(n, k, d, seed, budget)?;
    let verified = min_distance(&book)?;
    let dir = out_dir(cfg, "codebooks")?;
    let path = dir.join(format!("search-n{n}-k{k}-d{d}-seed{seed}.txt"));
    let mut text = Vec::new();
    book.write_text(&mut text)?;
    write_text(&path, &String::from_utf8(text)?)?;
    println!("({n}, {k}, {verified}) code with {} words", book.len());
    Ok(())
}

pub fn codebook_export(cfg: &RunConfig, preset: &str) -> Result<()> {
    let preset: Preset = preset.parse()?;
    let book = preset.build()?;
    let dir = out_dir(cfg, "codebooks")?;
    let mut text = Vec::new();
    book.write_text(&mut text)?;
    write_text(&dir.join(format!("{}.txt", preset.name())), &String::from_utf8(text)?)
}

pub fn patterns(
    cfg: &RunConfig,
    preset: &str,
    gray: Option<bool>,
    xor02_crc: bool,
    (rows, cols): (usize, usize),
    png: bool,
) -> Result<()> {
    let preset: Preset = preset.parse()?;
    let book = preset.build()?;
    let arrangement = match gray {
        Some(true) => Arrangement::Gray,
        Some(false) => Arrangement::Binary,
        None => preset.default_arrangement(),
    };
    let mut cube = build_pattern_cube(&book, rows, cols, arrangement.clone())?;
    let mut label = format!("{}-{arrangement}", preset.name());
    if xor02_crc {
        cube = xor02(&cube)?.with_crc(&CRC5_ITU)?;
        label.push_str("-xor02-crc5");
    }
    let dir = out_dir(cfg, &format!("patterns-{label}-{rows}x{cols}"))?;
    let format = if png { FrameFormat::Png } else { FrameFormat::Pgm };
    let files = export_frames(&cube, &dir, format)?;
    let profile = adjacency_profile(&cube)?;
    println!("wrote {} frames to {}", files.len(), dir.display());
    println!(
        "adjacent column distance: max {}, mean {:.3}",
        profile.max_adjacent_distance, profile.mean_adjacent_distance
    );
    let runs: Vec<String> = profile.frame_max_runs.iter().map(usize::to_string).collect();
    println!("longest run per frame: {}", runs.join(" "));
    Ok(())
}

fn preset_cube(name: &str, scene: &Scene, arrangement: Option<Arrangement>) -> Result<(Preset, PatternCube)> {
    let preset: Preset = name.parse()?;
    let book = preset.build()?;
    let arrangement = arrangement.unwrap_or_else(|| preset.default_arrangement());
    let cube = build_pattern_cube(&book, scene.rows(), scene.cols(), arrangement)?;
    Ok((preset, cube))
}

fn simulate_from_config(cfg: &RunConfig, scene: &Scene, cube: &PatternCube) -> Result<CaptureCube> {
    let power = cfg.decode.ratio * cfg.sweep.ambient_level;
    Ok(simulate_capture(cube, scene, &cfg.noise.model(cfg.seeds[0]), power, cfg.sweep.budget)?)
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let scene = cfg.scene.build()?;
    let (preset, cube) = preset_cube(&cfg.decode.preset, &scene, None)?;
    let cap = simulate_from_config(cfg, &scene, &cube)?;
    let dir = out_dir(cfg, &format!("capture-{}-{}", preset.name(), cfg.hash()))?;
    for (i, frame) in cap.frames.iter().enumerate() {
        write_pfm(&dir.join(format!("frame_{i:03}.pfm")), frame)?;
    }
    write_pfm(&dir.join("calib_on.pfm"), &cap.calib_on)?;
    write_pfm(&dir.join("calib_off.pfm"), &cap.calib_off)?;
    write_pfm(&dir.join("gt.pfm"), &render::ground_truth_pfm(&scene))?;
    let meta = format!(
        "preset {}\narrangement {}\nframes {}\nexposure_scale {}\n",
        preset.name(),
        cube.arrangement(),
        cap.n_frames(),
        cap.exposure_scale
    );
    fs::write(dir.join("meta.txt"), meta)?;
    save_config(cfg)?;
    println!("wrote {} frames and calibration to {}", cap.n_frames(), dir.display());
    Ok(())
}

struct StoredCapture {
    preset: String,
    arrangement: Arrangement,
    capture: CaptureCube,
    scene: Scene,
}

fn read_capture(dir: &Path) -> Result<StoredCapture> {
    let meta = fs::read_to_string(dir.join("meta.txt")).with_context(|| format!("no capture in {}", dir.display()))?;
    let field = |key: &str| -> Result<&str> {
        meta.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')))
            .with_context(|| format!("meta.txt lacks {key:?}"))
    };
    let arrangement = match field("arrangement")? {
        "gray" => Arrangement::Gray,
        "binary" => Arrangement::Binary,
        other => bail!("unsupported arrangement {other:?} in meta.txt"),
    };
    let frames: usize = field("frames")?.parse()?;
    let capture = CaptureCube {
        frames: (0..frames)
            .map(|i| read_pfm(&dir.join(format!("frame_{i:03}.pfm"))))
            .collect::<slcode::Result<Vec<_>>>()?,
        calib_on: read_pfm(&dir.join("calib_on.pfm"))?,
        calib_off: read_pfm(&dir.join("calib_off.pfm"))?,
        exposure_scale: field("exposure_scale")?.parse()?,
    };
    Ok(StoredCapture {
        preset: field("preset")?.to_string(),
        arrangement,
        capture,
        scene: load_pfm_disparity(&dir.join("gt.pfm"))?,
    })
}

pub fn decode(cfg: &RunConfig, input: Option<&Path>, method: &str) -> Result<()> {
    let method: DecodeMethod = method.parse()?;
    let (scene, cube, cap) = match input {
        Some(dir) => {
            let stored = read_capture(dir)?;
            let (_, cube) = preset_cube(&stored.preset, &stored.scene, Some(stored.arrangement))?;
            (stored.scene, cube, stored.capture)
        }
        None => {
            let scene = cfg.scene.build()?;
            let (_, cube) = preset_cube(&cfg.decode.preset, &scene, None)?;
            let cap = simulate_from_config(cfg, &scene, &cube)?;
            (scene, cube, cap)
        }
    };
    let opts = cfg.decode.options();
    let table = CodeTable::from_cube(&cube)?;
    let norm = normalize(&cap, opts.contrast_floor);
    let reference = if method == DecodeMethod::Hard {
        hard_decode(&norm, &table, opts.top_l)?
    } else {
        soft_decode(&norm, &table, opts.top_l)?
    };
    let est = run_method(method, &norm, &table, &opts, Some(&reference))?;
    let tol = cfg.decode.tolerance;
    let report_tol = cfg.decode.report_tolerance;
    let err = error_rate(&est, &scene, tol)?;
    let err_report = error_rate(&est, &scene, report_tol)?;

    let dir = out_dir(cfg, "decode")?;
    let stem = format!("{}-{method}-{}", cube.codebook_name(), cfg.hash());
    write_pfm(&dir.join(format!("{stem}-disparity.pfm")), &render::disparity_pfm(&est))?;
    write_pfm(&dir.join(format!("{stem}-confidence.pfm")), &reference.confidence)?;
    let png = dir.join(format!("{stem}-errors.png"));
    write_png_rgb(&png, &render::disparity_with_errors(&est, &scene, tol))?;
    save_config(cfg)?;
    println!("wrote {}", png.display());
    println!("{method} error rate {err:.6} (tolerance {tol}), {err_report:.6} (tolerance {report_tol})");
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let scene = cfg.scene.build()?;
    let codes = cfg
        .sweep
        .codes
        .iter()
        .map(|name| {
            let preset: Preset = name.parse()?;
            Ok(SweepCode::from_preset(preset, scene.rows(), scene.cols())?)
        })
        .collect::<Result<Vec<_>>>()?;
    let methods = cfg
        .sweep
        .methods
        .iter()
        .map(|m| m.parse::<DecodeMethod>())
        .collect::<slcode::Result<Vec<_>>>()?;
    let mut spec = SweepSpec::new(codes, cfg.sweep.ratios.clone(), cfg.noise.model(0), cfg.seeds.clone());
    spec.methods = methods.clone();
    spec.budget = cfg.sweep.budget;
    spec.ambient_level = cfg.sweep.ambient_level;
    spec.tolerance = cfg.decode.tolerance;
    spec.report_tolerance = cfg.decode.report_tolerance;
    spec.decode = cfg.decode.options();
    let rows = aggregate(&run_sweep(&scene, &spec)?);

    let hash = cfg.hash();
    let dir = out_dir(cfg, "sweep")?;
    let mut csv = SweepRow::csv_header(spec.report_tolerance);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    write_text(&dir.join(format!("sweep-{hash}.csv")), &csv)?;

    // one marked-error image per code and method, at the ratio nearest 30% error
    for code in &spec.codes {
        for &method in &methods {
            let Some(ratio) = mid_snr_ratio(&rows, &code.label, method, 0.3) else { continue };
            let power = ratio * spec.ambient_level;
            let cap = simulate_capture(&code.cube, &scene, &spec.noise.with_seed(spec.seeds[0]), power, spec.budget)?;
            let norm = normalize(&cap, spec.decode.contrast_floor);
            let est = run_method(method, &norm, &code.table, &spec.decode, None)?;
            let path = dir.join(format!("sweep-{hash}-{}-{method}-ratio{ratio:.3}.png", code.label));
            write_png_rgb(&path, &render::disparity_with_errors(&est, &scene, spec.tolerance))?;
            println!("wrote {}", path.display());
        }
    }
    save_config(cfg)?;
    Ok(())
}

pub fn adaptive(cfg: &RunConfig) -> Result<()> {
    let scene = cfg.scene.build()?;
    let (preset, cube) = preset_cube(&cfg.adaptive.preset, &scene, None)?;
    let book = preset.build()?;
    let acfg = AdaptiveConfig {
        mix: MixParams {
            alpha: cfg.adaptive.alpha,
            radius: cfg.adaptive.radius,
        },
        noise: cfg.noise.model(cfg.seeds[0]),
        projector_power: cfg.adaptive.power,
        budget: cfg.sweep.budget,
        max_iters: cfg.adaptive.max_iters,
        contrast_floor: cfg.decode.contrast_floor,
        top_l: cfg.decode.top_l.max(2),
    };
    let out = adaptive_loop(&scene, &cube, &book, &acfg)?;
    let hash = cfg.hash();
    let dir = out_dir(cfg, &format!("adaptive-{hash}"))?;
    let mut csv = String::from("iteration,flagged,corrupted,committed,unresolved,active_columns,frames_used,error_rate\n");
    for rec in &out.history {
        let it = rec.iteration;
        write_png_gray(&dir.join(format!("iter{it:02}-mask.png")), &render::mask(&rec.error_mask.mask))?;
        write_pfm(&dir.join(format!("iter{it:02}-disparity.pfm")), &render::disparity_pfm(&rec.disparity))?;
        write_png_rgb(
            &dir.join(format!("iter{it:02}-errors.png")),
            &render::disparity_with_errors(&rec.disparity, &scene, cfg.decode.tolerance),
        )?;
        let count = |m: &slcode::Mask| m.iter().filter(|&&b| b).count();
        csv.push_str(&format!(
            "{it},{},{},{},{},{},{},{:.6}\n",
            rec.error_mask.count(),
            count(&rec.corrupted),
            rec.committed_now,
            count(&rec.unresolved),
            rec.active_columns,
            rec.frames_used,
            error_rate(&rec.disparity, &scene, cfg.decode.tolerance)?
        ));
    }
    write_text(&dir.join(format!("adaptive-{hash}.csv")), &csv)?;
    save_config(cfg)?;
    println!(
        "{} after {} iterations, {} frames; final error rate {:.6}",
        if out.converged { "converged" } else { "stopped" },
        out.iterations,
        out.frames_used,
        error_rate(&out.disparity, &scene, cfg.decode.tolerance)?
    );
    Ok(())
}

fn print_report(label: &str, r: &MuxReport) {
    println!(
        "{label}: false detections {} -> {}, missed {} -> {}, frame overhead {}x",
        r.false_before, r.false_after, r.missed_before, r.missed_after, r.frame_overhead
    );
}

fn mux_noise(cfg: &RunConfig) -> Option<slcode::channel::NoiseModel> {
    (cfg.noise.sigma_s > 0.0 || cfg.noise.sigma_r > 0.0).then(|| cfg.noise.model(cfg.seeds[0]))
}

pub fn mux_events(cfg: &RunConfig) -> Result<()> {
    let m = &cfg.mux;
    let chip = ChipCode::parse(&m.chip, 0)?;
    let interferer = ChipCode::parse(&m.interferer, 1)?;
    let demo = EventDemo {
        interferer_sequence: interferer.bits().to_vec(),
        event_threshold: m.event_threshold,
        score_threshold: m.score_threshold,
        noise: mux_noise(cfg),
        ..EventDemo::standard(m.rows, m.cols, chip)
    };
    let res = run_event_demo(&demo)?;
    let hash = cfg.hash();
    let dir = out_dir(cfg, &format!("mux-events-{hash}"))?;
    write_png_gray(&dir.join("before.png"), &render::mask(&res.raw.active_pixels(m.rows, m.cols)))?;
    write_png_gray(&dir.join("after.png"), &render::mask(&res.filtered.active_pixels(m.rows, m.cols)))?;
    write_text(&dir.join("events-raw.csv"), &res.raw.to_csv())?;
    write_text(&dir.join("events-filtered.csv"), &res.filtered.to_csv())?;
    save_config(cfg)?;
    println!("{} events before filtering, {} after", res.raw.len(), res.filtered.len());
    print_report("events", &res.report);
    Ok(())
}

fn detection_image(frames: &[DetectionFrame]) -> Grid<u8> {
    let rows = frames.first().map_or(0, |f| f.detections.len());
    Grid::from_fn(rows, frames.len(), |r, s| if frames[s].detections[r] { 255 } else { 0 })
}

pub fn mux_curtains(cfg: &RunConfig) -> Result<()> {
    let m = &cfg.mux;
    let (objects, schedules) = standard_curtain_scene(m.rows, m.cols)?;
    let devices = [
        CurtainDevice {
            chip: ChipCode::parse(&m.curtain_chips[0], 0)?,
            schedule: schedules[0].clone(),
        },
        CurtainDevice {
            chip: ChipCode::parse(&m.curtain_chips[1], 1)?,
            schedule: schedules[1].clone(),
        },
    ];
    let noise = mux_noise(cfg);
    let res = simulate_light_curtains(&devices, &objects, m.coupling, noise.as_ref())?;
    if let Some(w) = &res.warning {
        eprintln!("warning: {w}");
    }
    let hash = cfg.hash();
    let dir = out_dir(cfg, &format!("mux-curtains-{hash}"))?;
    for d in 0..2 {
        write_png_gray(&dir.join(format!("device{d}-before.png")), &detection_image(&res.raw[d]))?;
        write_png_gray(&dir.join(format!("device{d}-after.png")), &detection_image(&res.filtered[d]))?;
        print_report(&format!("device {d} ({})", devices[d].chip), &res.report(d));
    }
    save_config(cfg)?;
    println!("wrote detection frames to {}", dir.display());
    Ok(())
}
