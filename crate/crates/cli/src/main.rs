//! `slcode`: structured-light coding experiments from the command line.

mod commands;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "slcode", version, about = "Redundancy-coded structured light experiments")]
struct Cli {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seeds (repeatable); replaces the configured list.
    #[arg(long = "seed", global = true)]
    seeds: Vec<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List, search or export codebooks.
    #[command(subcommand)]
    Codebook(CodebookCmd),
    /// Write the projector frames of a preset.
    Patterns(PatternsArgs),
    /// Simulate a capture and store it for `decode --input`.
    Simulate(SimArgs),
    /// Decode a stored or freshly simulated capture.
    Decode(DecodeArgs),
    /// Error rate against projector/ambient ratio for several codes.
    Sweep(SweepArgs),
    /// Run the detect-mask-reproject loop.
    Adaptive(AdaptiveArgs),
    /// Chip-code interference rejection demos.
    Mux(MuxArgs),
}

#[derive(Subcommand, Debug)]
enum CodebookCmd {
    /// Preset table with oracle-verified minimum distance, as CSV.
    List,
    /// Random search for a binary code with a target minimum distance.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = slcode::codebook::DEFAULT_SEARCH_BUDGET)]
        budget: u64,
    },
    /// Write a preset's codewords as text.
    Export {
        #[arg(long)]
        preset: String,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ArrangementArg {
    Gray,
    Binary,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Pgm,
    Png,
}

#[derive(Args, Debug)]
struct PatternsArgs {
    #[arg(long)]
    preset: String,
    /// Column arrangement; defaults to the preset's own.
    #[arg(long, value_enum)]
    arrangement: Option<ArrangementArg>,
    /// Apply the XOR02 transform and append CRC-5 (binary uncoded presets).
    #[arg(long)]
    xor02_crc: bool,
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 1024)]
    cols: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Pgm)]
    format: FormatArg,
}

/// Scene and noise overrides shared by several subcommands.
#[derive(Args, Debug, Default)]
struct SceneArgs {
    /// slanted-plane, steps or v-groove-band.
    #[arg(long)]
    scene: Option<String>,
    /// Ground-truth disparity PFM instead of a procedural scene.
    #[arg(long)]
    pfm: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    sigma_s: Option<f32>,
    #[arg(long)]
    sigma_r: Option<f32>,
    #[arg(long)]
    bits: Option<u32>,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long)]
    preset: Option<String>,
    /// Projector/ambient power ratio.
    #[arg(long)]
    ratio: Option<f32>,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// Capture directory written by `simulate`; simulates from the config when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "soft")]
    method: String,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    ratio: Option<f32>,
    #[arg(long)]
    t_low: Option<f32>,
    #[arg(long)]
    t_high: Option<f32>,
    #[arg(long)]
    window: Option<usize>,
    /// Candidates kept per pixel.
    #[arg(long)]
    top_l: Option<usize>,
    #[arg(long)]
    tolerance: Option<u32>,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Presets to compare (repeatable).
    #[arg(long = "code")]
    codes: Vec<String>,
    /// Ratios (repeatable).
    #[arg(long = "ratio")]
    ratios: Vec<f32>,
    /// Decoding methods (repeatable).
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long)]
    tolerance: Option<u32>,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Args, Debug)]
struct AdaptiveArgs {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    alpha: Option<f32>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    power: Option<f32>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Demo {
    Events,
    Curtains,
}

#[derive(Args, Debug)]
struct MuxArgs {
    #[arg(long, value_enum)]
    demo: Demo,
    /// Our chip code, e.g. 10100010.
    #[arg(long)]
    chip: Option<String>,
    /// Interfering sequence (events) or the second device's chip (curtains).
    #[arg(long)]
    interferer: Option<String>,
    #[arg(long)]
    coupling: Option<f32>,
    /// Add shot noise with this coefficient.
    #[arg(long)]
    sigma_s: Option<f32>,
}

fn apply_scene(cfg: &mut RunConfig, a: &SceneArgs) {
    if let Some(v) = &a.scene {
        cfg.scene.kind = v.clone();
    }
    if let Some(v) = &a.pfm {
        cfg.scene.pfm = Some(v.clone());
    }
    if let Some(v) = a.rows {
        cfg.scene.rows = v;
    }
    if let Some(v) = a.cols {
        cfg.scene.cols = v;
    }
    if let Some(v) = a.sigma_s {
        cfg.noise.sigma_s = v;
    }
    if let Some(v) = a.sigma_r {
        cfg.noise.sigma_r = v;
    }
    if let Some(v) = a.bits {
        cfg.noise.bits = v;
    }
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

/// Merges flags into the loaded configuration.
fn effective_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    set(&mut cfg.output, &cli.output);
    if !cli.seeds.is_empty() {
        cfg.seeds = cli.seeds.clone();
    }
    match &cli.command {
        Command::Simulate(a) => {
            set(&mut cfg.decode.preset, &a.preset);
            set(&mut cfg.decode.ratio, &a.ratio);
            apply_scene(&mut cfg, &a.scene);
        }
        Command::Decode(a) => {
            set(&mut cfg.decode.preset, &a.preset);
            set(&mut cfg.decode.ratio, &a.ratio);
            set(&mut cfg.decode.t_low, &a.t_low);
            set(&mut cfg.decode.t_high, &a.t_high);
            set(&mut cfg.decode.window, &a.window);
            set(&mut cfg.decode.top_l, &a.top_l);
            set(&mut cfg.decode.tolerance, &a.tolerance);
            apply_scene(&mut cfg, &a.scene);
        }
        Command::Sweep(a) => {
            if !a.codes.is_empty() {
                cfg.sweep.codes = a.codes.clone();
            }
            if !a.ratios.is_empty() {
                cfg.sweep.ratios = a.ratios.clone();
            }
            if !a.methods.is_empty() {
                cfg.sweep.methods = a.methods.clone();
            }
            set(&mut cfg.decode.tolerance, &a.tolerance);
            apply_scene(&mut cfg, &a.scene);
        }
        Command::Adaptive(a) => {
            set(&mut cfg.adaptive.preset, &a.preset);
            set(&mut cfg.adaptive.alpha, &a.alpha);
            set(&mut cfg.adaptive.radius, &a.radius);
            set(&mut cfg.adaptive.power, &a.power);
            set(&mut cfg.adaptive.max_iters, &a.max_iters);
            apply_scene(&mut cfg, &a.scene);
        }
        Command::Mux(a) => {
            match a.demo {
                Demo::Events => {
                    set(&mut cfg.mux.chip, &a.chip);
                    set(&mut cfg.mux.interferer, &a.interferer);
                }
                Demo::Curtains => {
                    set(&mut cfg.mux.curtain_chips[0], &a.chip);
                    set(&mut cfg.mux.curtain_chips[1], &a.interferer);
                }
            }
            set(&mut cfg.mux.coupling, &a.coupling);
            if let Some(s) = a.sigma_s {
                cfg.noise.sigma_s = s;
            }
        }
        Command::Codebook(_) | Command::Patterns(_) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SLCODE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("SLCODE_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let cfg = effective_config(&cli)?;
    match cli.command {
        Command::Codebook(CodebookCmd::List) => commands::codebook_list(),
        Command::Codebook(CodebookCmd::Search { n, k, d, budget }) => {
            commands::codebook_search(&cfg, n, k, d, cfg.seeds[0], budget)
        }
        Command::Codebook(CodebookCmd::Export { preset }) => commands::codebook_export(&cfg, &preset),
        Command::Patterns(a) => commands::patterns(
            &cfg,
            &a.preset,
            a.arrangement.map(|a| a == ArrangementArg::Gray),
            a.xor02_crc,
            (a.rows, a.cols),
            a.format == FormatArg::Png,
        ),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Decode(a) => commands::decode(&cfg, a.input.as_deref(), &a.method),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Adaptive(_) => commands::adaptive(&cfg),
        Command::Mux(a) => match a.demo {
            Demo::Events => commands::mux_events(&cfg),
            Demo::Curtains => commands::mux_curtains(&cfg),
        },
    }
}

/// 1 for bad input or configuration, 2 for internal failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<slcode::Error>() {
        Some(slcode::Error::Construction(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::parse_from(["slcode", "--seed", "7", "--seed", "8", "sweep", "--code", "bch63", "--rows", "32"]);
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.seeds, vec![7, 8]);
        assert_eq!(cfg.sweep.codes, vec!["bch63".to_string()]);
        assert_eq!(cfg.scene.rows, 32);
    }
}
