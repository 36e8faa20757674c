//! Command-line experiments: dataset checks, training, evaluation, sweeps,
//! image reconstruction and plotting.
//!
//! Exit codes: 0 ok, 1 internal failure, 2 configuration, 3 training abort,
//! 4 incompatible checkpoint, 5 input format, 6 empty result.

mod config;
mod image;
mod plot;
mod table;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

pub use config::{EvalFile, ImageFile, ManifestSource, SweepFile, SweepKind, TrainFile};
pub use image::{reconstruct_image, ImageReport};
pub use plot::{render_svg, scenario_charts, sweep_chart};
pub use table::{ResultRow, ResultTable, MEAN, MEDIAN};

use crate::gecsr::Schedule;
use crate::model::{ClassSpec, DatasetManifest, MatrixClass};
use crate::training::{evaluate, evaluate_policy, write_loss_csv, Controller, Trainer, Variant};
use crate::{write_atomic, Error, Result};

pub const BASELINE_EXP: &str = "gecsr_0.9t";
pub const BASELINE_HALF: &str = "gecsr_0.5";
const PROBE_SAMPLES: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "gecsr", version, about = "Phase retrieval with learned damping")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a dataset manifest and print statistics of a probe.
    Gen(CommonArgs),
    /// Train one checkpoint per requested variant.
    Train(CommonArgs),
    /// Per-layer NMSE curves of checkpoints and fixed schedules.
    Eval(CommonArgs),
    /// Evaluate over a grid of SNR, gamma, ratio, rho or size values.
    Sweep(SweepArgs),
    /// Reconstruct a PGM image from simulated phaseless measurements.
    ReconImage(CommonArgs),
    /// Render SVG charts from a result table.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub layers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub kind: Option<SweepKind>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, alias = "config")]
    pub table: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Manifest(_)
        | Error::Json(_)
        | Error::Checkpoint(_)
        | Error::InvalidPrior(_)
        | Error::InvalidSpectrum(_) => 2,
        Error::TrainingAborted(_) => 3,
        Error::Incompatible(_) => 4,
        Error::Format(_) => 5,
        Error::Empty(_) => 6,
        _ => 1,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::ReconImage(a) => cmd_recon_image(&a),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn cmd_gen(args: &CommonArgs) -> Result<()> {
    let mut manifest = DatasetManifest::from_json(&config::read_text(&args.config)?)?;
    if let Some(seed) = args.seed {
        manifest.seed = seed;
    }
    println!("manifest {} ({} samples, M = {}, N = {})", manifest.hash(), manifest.count, manifest.m, manifest.n);
    let probe = manifest.count.min(PROBE_SAMPLES);
    if probe == 0 {
        warn!("manifest has no samples; nothing to probe");
        println!("probe: empty");
        return Ok(());
    }
    let samples = (0..probe as u64).into_par_iter().map(|i| manifest.sample(i)).collect::<Result<Vec<_>>>()?;
    let mean_snr = samples.iter().map(|s| crate::model::linear_to_db(s.snr)).sum::<f64>() / probe as f64;
    let mut hist = [0usize; 5];
    for s in &samples {
        hist[((s.rho * 5.0) as usize).min(4)] += 1;
    }
    println!("probe: {probe} samples, mean SNR {mean_snr:.2} dB");
    for (k, c) in hist.iter().enumerate() {
        println!("  rho in [{:.1}, {:.1}): {c}", k as f64 / 5.0, (k + 1) as f64 / 5.0);
    }
    for class in manifest.matrix_class.classes() {
        let hits = (0..probe as u64).filter(|i| &manifest.class_of(*i).0 == class).count();
        println!("  class {}: {hits}", serde_json::to_string(class)?);
    }
    Ok(())
}

fn cmd_train(args: &CommonArgs) -> Result<()> {
    let (file, base): (TrainFile, _) = config::load(&args.config)?;
    let mut manifest = file.manifest.load(&base)?;
    let mut trainer = file.trainer;
    if let Some(seed) = args.seed {
        trainer.seed = seed;
        manifest.seed = seed;
    }
    if let Some(layers) = args.layers {
        trainer.layers = layers;
    }
    let variants = match args.variant {
        Some(v) => vec![v],
        None if file.variants.is_empty() => return Err(Error::Config("no variants to train".into())),
        None => file.variants,
    };
    fs::create_dir_all(&args.out)?;
    let mut written: Vec<PathBuf> = Vec::new();
    for variant in variants {
        let outcome = Trainer::new(variant, &manifest, trainer.clone()).and_then(|t| t.run());
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e);
            }
        };
        let ck_path = args.out.join(format!("{variant}.json"));
        outcome.checkpoint.save(&ck_path)?;
        written.push(ck_path.clone());
        let mut csv = Vec::new();
        write_loss_csv(&mut csv, &outcome.history)?;
        let loss_path = args.out.join(format!("{variant}_loss.csv"));
        write_atomic(&loss_path, &csv)?;
        written.push(loss_path);
        println!("{variant}: {} steps, checkpoint {}", outcome.history.len(), ck_path.display());
    }
    Ok(())
}

/// Checkpoints labelled by variant, filtered by `--variant`.
fn load_controllers(paths: &[PathBuf], base: &Path, only: Option<Variant>) -> Result<Vec<(String, Controller)>> {
    let mut out: Vec<(String, Controller)> = Vec::new();
    for p in paths {
        let c = config::load_controller(&base.join(p))?;
        if only.is_some_and(|v| v != c.variant()) {
            continue;
        }
        let mut label = c.variant().to_string();
        let mut k = 2;
        while out.iter().any(|(l, _)| *l == label) {
            label = format!("{}_{k}", c.variant());
            k += 1;
        }
        out.push((label, c));
    }
    Ok(out)
}

fn evaluate_into(
    table: &mut ResultTable,
    scenario: &str,
    controllers: &[(String, Controller)],
    baselines: bool,
    manifest: &DatasetManifest,
    layers: usize,
    skip_incompatible: bool,
) -> Result<()> {
    for (label, c) in controllers {
        if skip_incompatible && c.check_compatible(manifest.n).is_err() {
            info!("{label}: skipped at {scenario} (built for another N)");
            continue;
        }
        table.push_curve(label, scenario, &evaluate(c, manifest, layers)?);
    }
    if baselines {
        let exp = evaluate_policy(|| Box::new(Schedule::Exponential(0.9)), manifest, layers)?;
        table.push_curve(BASELINE_EXP, scenario, &exp);
        let half = evaluate_policy(|| Box::new(Schedule::Constant(0.5)), manifest, layers)?;
        table.push_curve(BASELINE_HALF, scenario, &half);
    }
    Ok(())
}

fn scenario_of(m: &DatasetManifest) -> String {
    let [s0, s1] = m.snr_db_range;
    let snr = if s0 == s1 { format!("{s0}") } else { format!("{s0}-{s1}") };
    format!("M={};N={};snr_db={snr}", m.m, m.n)
}

fn cmd_eval(args: &CommonArgs) -> Result<()> {
    let (file, base): (EvalFile, _) = config::load(&args.config)?;
    let mut manifest = file.manifest.load(&base)?;
    if let Some(seed) = args.seed {
        manifest.seed = seed;
    }
    let layers = args.layers.unwrap_or(file.layers);
    let controllers = load_controllers(&file.checkpoints, &base, args.variant)?;
    if controllers.is_empty() && !file.baselines {
        return Err(Error::Empty("nothing to evaluate".into()));
    }
    let mut table = ResultTable::default();
    evaluate_into(&mut table, &scenario_of(&manifest), &controllers, file.baselines, &manifest, layers, false)?;
    let path = args.out.join("eval.csv");
    table.write(&path)?;
    println!("wrote {} ({} rows)", path.display(), table.rows.len());
    Ok(())
}

/// The manifest evaluated at one grid value, and its scenario label.
pub fn sweep_point(base: &DatasetManifest, kind: SweepKind, value: f64) -> Result<(DatasetManifest, String)> {
    let mut m = base.clone();
    let label = match kind {
        SweepKind::Snr => {
            m.snr_db_range = [value, value];
            format!("snr_db={value}")
        }
        SweepKind::Gamma => {
            m.matrix_class = ClassSpec::One(MatrixClass::Geometric(vec![value]));
            format!("gamma={value}")
        }
        SweepKind::Ratio => {
            if !(value > 0.0) {
                return Err(Error::Config(format!("measurement ratio must be positive, got {value}")));
            }
            m.m = (value * m.n as f64).ceil() as usize;
            format!("ratio={value}")
        }
        SweepKind::Rho => {
            m.rho_range = [value, value];
            format!("rho={value}")
        }
        SweepKind::Size => {
            if !(value >= 1.0) || value.fract() != 0.0 {
                return Err(Error::Config(format!("signal length must be a positive integer, got {value}")));
            }
            let ratio = base.m as f64 / base.n as f64;
            m.n = value as usize;
            m.m = (ratio * value).ceil() as usize;
            format!("N={value}")
        }
    };
    m.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok((m, label))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let common = &args.common;
    let (file, base): (SweepFile, _) = config::load(&common.config)?;
    let kind = args.kind.or(file.kind).ok_or_else(|| Error::Config("sweep kind not given".into()))?;
    if file.grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut manifest = file.manifest.load(&base)?;
    if let Some(seed) = common.seed {
        manifest.seed = seed;
    }
    let layers = common.layers.unwrap_or(file.layers);
    let controllers = load_controllers(&file.checkpoints, &base, common.variant)?;
    let points = file.grid.iter().map(|g| sweep_point(&manifest, kind, *g)).collect::<Result<Vec<_>>>()?;
    let skip = kind == SweepKind::Size;
    if !skip {
        for (_, c) in &controllers {
            c.check_compatible(manifest.n)?;
        }
    }
    let parts = points
        .par_iter()
        .map(|(m, label)| {
            let mut t = ResultTable::default();
            evaluate_into(&mut t, label, &controllers, file.baselines, m, layers, skip)?;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = ResultTable { rows: parts.into_iter().flat_map(|t| t.rows).collect() };
    if table.is_empty() {
        return Err(Error::Empty("sweep produced no rows".into()));
    }
    let name = format!("sweep_{}.csv", format!("{kind:?}").to_lowercase());
    let path = common.out.join(name);
    table.write(&path)?;
    println!("wrote {} ({} rows)", path.display(), table.rows.len());
    Ok(())
}

fn cmd_recon_image(args: &CommonArgs) -> Result<()> {
    let (mut file, base): (ImageFile, _) = config::load(&args.config)?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(layers) = args.layers {
        file.layers = layers;
    }
    let img = crate::model::pgm::read(&base.join(&file.image))?;
    let controller = file.checkpoint.as_ref().map(|p| config::load_controller(&base.join(p))).transpose()?;
    let (recon, report) = reconstruct_image(&img, controller.as_ref(), &file)?;
    fs::create_dir_all(&args.out)?;
    write_atomic(&args.out.join("recon.pgm"), &crate::model::pgm::encode(&recon))?;
    write_atomic(&args.out.join("recon.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    println!("{}: t = {}, NMSE {:.2} dB", report.variant, report.layers, report.nmse_db);
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let table = ResultTable::read(&args.table)?;
    if table.is_empty() {
        return Err(Error::Empty(format!("{} has no rows", args.table.display())));
    }
    fs::create_dir_all(&args.out)?;
    let mut charts = scenario_charts(&table);
    charts.extend(sweep_chart(&table));
    for (name, svg) in &charts {
        let file: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
        write_atomic(&args.out.join(format!("{file}.svg")), svg.as_bytes())?;
    }
    println!("wrote {} charts to {}", charts.len(), args.out.display());
    Ok(())
}
