use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tfadapt::adaptation::adapt;
use tfadapt::bands::WeightKind;
use tfadapt::coeff_io::write_grid;
use tfadapt::experiments::{
    default_alpha_grid, default_l_grid, default_m_grid, entropy_surface, SurfaceFamily,
};
use tfadapt::gabor::{analyze, dual_plan, synthesize, CoefficientGrid, NsgfPlan};
use tfadapt::recon::{
    energy_fraction_near, error_metrics, reconstruct_weighted, weight_coefficients, WeightedBand,
};
use tfadapt::signal::{read_wav, write_wav, Signal, WavFormat};
use tfadapt::window::{make_window, WindowFamily};

use crate::config::RunConfig;

/// Display floor for spectrogram exports, in dB below the maximum.
pub const DB_FLOOR: f64 = -120.0;

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn load(input: &Path) -> Result<Signal> {
    read_wav(input).with_context(|| format!("reading {}", input.display()))
}

fn uniform_plan(family: WindowFamily, scale: usize, hop: usize, f: &Signal) -> Result<NsgfPlan> {
    let window = make_window(family, scale)?;
    Ok(NsgfPlan::uniform(window, hop, f.len(), f.sample_rate())?)
}

/// Power in dB relative to the grid maximum, floored; `[frame][bin]` for bins `0..=M/2`.
fn db_grid(grid: &CoefficientGrid) -> Vec<Vec<f64>> {
    let max = grid
        .rows()
        .iter()
        .flatten()
        .map(|c| c.norm_sqr())
        .fold(0.0, f64::max);
    grid.rows()
        .iter()
        .map(|row| {
            row[..=row.len() / 2]
                .iter()
                .map(|c| {
                    if max > 0.0 {
                        (10.0 * (c.norm_sqr() / max).log10()).max(DB_FLOOR)
                    } else {
                        DB_FLOOR
                    }
                })
                .collect()
        })
        .collect()
}

fn spectrogram_csv(plan: &NsgfPlan, db: &[Vec<f64>]) -> String {
    let sr = plan.sample_rate();
    let mut out = String::from("freq_hz");
    for e in plan.elements() {
        let _ = write!(out, ",{:.6}", e.center() / sr);
    }
    out.push('\n');
    let m = plan.elements()[0].channels();
    for l in 0..db[0].len() {
        let _ = write!(out, "{}", l as f64 * sr / m as f64);
        for frame in db {
            let _ = write!(out, ",{:.4}", frame[l]);
        }
        out.push('\n');
    }
    out
}

/// Binary greyscale image, highest frequency on top.
fn write_pgm(path: &Path, db: &[Vec<f64>]) -> Result<()> {
    let (width, height) = (db.len(), db[0].len());
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    for l in (0..height).rev() {
        let row: Vec<u8> = db
            .iter()
            .map(|f| ((f[l] - DB_FLOOR) / -DB_FLOOR * 255.0).round() as u8)
            .collect();
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub struct AnalyzeArgs {
    pub input: PathBuf,
    pub scale: usize,
    pub hop: usize,
    pub family: WindowFamily,
    pub pgm: bool,
}

pub fn analyze_cmd(args: &AnalyzeArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load(&args.input)?;
    let plan = uniform_plan(args.family, args.scale, args.hop, &f)?;
    let grid = analyze(&f, &plan)?;
    let dir = out_dir(cfg)?;

    let coeff_path = dir.join("coefficients.nsgf");
    let mut w = BufWriter::new(File::create(&coeff_path)?);
    write_grid(&mut w, &plan, &grid)?;
    w.flush()?;

    let db = db_grid(&grid);
    let mut written = vec![
        coeff_path,
        write_text(dir.join("spectrogram.csv"), &spectrogram_csv(&plan, &db))?,
    ];
    if args.pgm {
        let path = dir.join("spectrogram.pgm");
        write_pgm(&path, &db)?;
        written.push(path);
    }
    Ok(written)
}

fn plan_csv(plan: &NsgfPlan) -> String {
    let mut out = String::from("position,window_len,channels,start_s\n");
    for e in plan.elements() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.position(),
            e.len(),
            e.channels(),
            e.position() as f64 / plan.sample_rate()
        );
    }
    out
}

pub fn adapt_cmd(input: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load(input)?;
    let result = adapt(&f, &cfg.adaptation(f.sample_rate())?)?;
    let dir = out_dir(cfg)?;
    let mut written = vec![write_text(dir.join("decisions.csv"), &result.to_csv())?];
    for (p, band) in result.bands.iter().enumerate() {
        written.push(write_text(
            dir.join(format!("plan_band{p}.csv")),
            &plan_csv(&band.plan),
        )?);
    }
    Ok(written)
}

#[derive(Serialize)]
struct BandReport {
    frames: usize,
    scales: Vec<usize>,
    /// Sum of squared weighted coefficient magnitudes.
    weighted_energy: f64,
}

#[derive(Serialize)]
struct ReconstructReport {
    input: String,
    sample_rate: f64,
    samples: usize,
    weights: String,
    cut_hz: f64,
    transition_hz: Option<f64>,
    epsilon: f64,
    shared_scale: Option<usize>,
    bands: Vec<BandReport>,
    max_abs: f64,
    rms: f64,
    near_cut_halfwidth_hz: f64,
    near_cut_error_fraction: f64,
    dead_bin_energy: f64,
    warning: Option<String>,
}

pub fn reconstruct_cmd(
    input: &Path,
    shared_scale: Option<usize>,
    error_wav: bool,
    cfg: &RunConfig,
) -> Result<Vec<PathBuf>> {
    let f = load(input)?;
    let sr = f.sample_rate();
    let set = cfg.band_weights(sr)?;
    let plans: Vec<NsgfPlan> = match shared_scale {
        Some(scale) => vec![uniform_plan(cfg.window, scale, scale / 2, &f)?; set.len()],
        None => {
            let adaptation = cfg.adaptation(sr)?;
            if adaptation.band_masks.len() != set.len() {
                anyhow::bail!(
                    "{} adaptation masks for {} reconstruction bands",
                    adaptation.band_masks.len(),
                    set.len()
                );
            }
            adapt(&f, &adaptation)?
                .bands
                .into_iter()
                .map(|b| b.plan)
                .collect()
        }
    };

    let bands = plans
        .iter()
        .zip(set.weights())
        .map(|(plan, w)| {
            let c = analyze(&f, plan)?;
            Ok(WeightedBand {
                coeffs: weight_coefficients(&c, plan, w),
                dual: dual_plan(plan)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = reconstruct_weighted(&bands, &set)?;
    let err = error_metrics(&f, &out.signal)?;
    let b_max = plans
        .iter()
        .map(NsgfPlan::max_freq_step)
        .fold(0.0, f64::max);

    let mut band_reports = Vec::new();
    for (plan, band) in plans.iter().zip(&bands) {
        let mut scales: Vec<usize> = plan.elements().iter().map(|e| e.len()).collect();
        scales.sort_unstable();
        scales.dedup();
        band_reports.push(BandReport {
            frames: plan.len(),
            scales,
            weighted_energy: band.coeffs.energy(),
        });
    }
    let report = ReconstructReport {
        input: input.display().to_string(),
        sample_rate: sr,
        samples: f.len(),
        weights: cfg.weights.to_string(),
        cut_hz: cfg.cut,
        transition_hz: matches!(cfg.weights, WeightKind::RaisedCosine).then_some(cfg.transition),
        epsilon: cfg.epsilon,
        shared_scale,
        bands: band_reports,
        max_abs: err.max_abs,
        rms: err.rms,
        near_cut_halfwidth_hz: 2.0 * b_max,
        near_cut_error_fraction: energy_fraction_near(&err.error_signal, cfg.cut, 2.0 * b_max),
        dead_bin_energy: out.dead_bin_energy,
        warning: out.warning.clone(),
    };
    if let Some(w) = &out.warning {
        eprintln!("warning: {w}");
    }

    let dir = out_dir(cfg)?;
    let recon_path = dir.join("reconstruction.wav");
    write_wav(&out.signal, &recon_path, WavFormat::Float32)?;
    let mut written = vec![recon_path, write_json(dir.join("report.json"), &report)?];
    if error_wav {
        let path = dir.join("error.wav");
        write_wav(&err.error_signal, &path, WavFormat::Float32)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Copy, Debug)]
pub enum Model {
    Dm,
    Dl,
}

pub struct ExperimentArgs {
    pub model: Model,
    pub n: usize,
    pub n_part: usize,
    pub r_part: f64,
}

pub fn experiment_cmd(args: &ExperimentArgs, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (family, sweep, name) = match args.model {
        Model::Dm => (
            SurfaceFamily::Dm { n: args.n },
            default_m_grid(args.n),
            "dm_surface.csv",
        ),
        Model::Dl => (
            SurfaceFamily::Dl {
                n: args.n,
                n_part: args.n_part,
                r_part: args.r_part,
            },
            default_l_grid(),
            "dl_surface.csv",
        ),
    };
    let surface = entropy_surface(family, &default_alpha_grid(), &sweep, cfg.seed)?;
    Ok(vec![write_text(
        out_dir(cfg)?.join(name),
        &surface.to_csv(),
    )?])
}

#[derive(Serialize)]
struct RoundtripEntry {
    label: String,
    frames: usize,
    max_abs: f64,
    relative: f64,
}

/// Analyze and resynthesize with a fixed plan, or with every adapted band plan.
pub fn roundtrip_cmd(input: &Path, scale: Option<usize>, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = load(input)?;
    let plans: Vec<(String, NsgfPlan)> = match scale {
        Some(s) => vec![(
            format!("uniform_{s}"),
            uniform_plan(cfg.window, s, s / 2, &f)?,
        )],
        None => adapt(&f, &cfg.adaptation(f.sample_rate())?)?
            .bands
            .into_iter()
            .enumerate()
            .map(|(p, b)| (format!("band{p}"), b.plan))
            .collect(),
    };
    let peak = f.max_abs();
    let entries = plans
        .iter()
        .map(|(label, plan)| {
            let g = synthesize(&analyze(&f, plan)?, &dual_plan(plan)?)?;
            let e = error_metrics(&f, &g)?;
            let relative = if peak > 0.0 {
                e.max_abs / peak
            } else {
                e.max_abs
            };
            Ok(RoundtripEntry {
                label: label.clone(),
                frames: plan.len(),
                max_abs: e.max_abs,
                relative,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![write_json(
        out_dir(cfg)?.join("roundtrip.json"),
        &entries,
    )?])
}
