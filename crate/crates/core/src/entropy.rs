//! Rényi entropies of sampled, optionally weighted, spectrograms.
//!
//! For a region `G` of cells with normalized density `p = z / Σ_G z` and a
//! common cell area `ab`:
//!
//! ```text
//! H_α = 1/(1-α) · log2 Σ_G p^α + log2(ab)        α ∉ {0, 1}
//! H_1 = -Σ_G p log2 p + log2(ab)
//! H_0 = log2 #{z > 0} + log2(ab)
//! ```
//!
//! Regions spanning rows of different cell areas are only accepted in
//! [`AreaMode::Mixed`], which evaluates the sampled continuous entropy with
//! per-cell areas: `1/(1-α) · log2 Σ_G A^(1-α) p^α`. It reduces to the
//! uniform formula when all areas agree.

use std::sync::Arc;

use thiserror::Error;

use crate::gabor::{CoefficientGrid, NsgfPlan};

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("entropy order must be finite and >= 0, got {0}")]
    BadOrder(f64),
    #[error("region contains no strictly positive cell")]
    EmptyRegion,
    #[error("cell ({0}, {1}) is negative or not finite")]
    BadCell(usize, usize),
    #[error("weight at ({0}, {1}) is negative or not finite")]
    BadWeight(usize, usize),
    #[error("region mixes cell areas; request AreaMode::Mixed to evaluate it")]
    MixedArea,
    #[error("grid shape is inconsistent: {0}")]
    Shape(String),
}

/// Nonnegative time-frequency density `z[k][l]` with per-row geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrogramGrid {
    cells: Vec<Vec<f64>>,
    cell_area: Vec<f64>,
    row_time: Vec<f64>,
    freq_step: Vec<f64>,
}

impl SpectrogramGrid {
    /// Grid with explicit per-row cell areas; row times and frequency steps default to indices.
    pub fn new(cells: Vec<Vec<f64>>, cell_area: Vec<f64>) -> Result<Self, EntropyError> {
        let rows = cells.len();
        let freq_step = cells.iter().map(|_| 1.0).collect();
        Self::with_geometry(
            cells,
            cell_area,
            (0..rows).map(|k| k as f64).collect(),
            freq_step,
        )
    }

    /// A single-row density with unit area; handy for pure density studies.
    pub fn from_density(values: Vec<f64>) -> Result<Self, EntropyError> {
        Self::new(vec![values], vec![1.0])
    }

    pub fn with_geometry(
        cells: Vec<Vec<f64>>,
        cell_area: Vec<f64>,
        row_time: Vec<f64>,
        freq_step: Vec<f64>,
    ) -> Result<Self, EntropyError> {
        if cell_area.len() != cells.len()
            || row_time.len() != cells.len()
            || freq_step.len() != cells.len()
        {
            return Err(EntropyError::Shape(
                "per-row metadata length differs from row count".into(),
            ));
        }
        if cell_area.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(EntropyError::Shape("cell areas must be positive".into()));
        }
        for (k, row) in cells.iter().enumerate() {
            if let Some(l) = row.iter().position(|z| !(z.is_finite() && *z >= 0.0)) {
                return Err(EntropyError::BadCell(k, l));
            }
        }
        Ok(Self {
            cells,
            cell_area,
            row_time,
            freq_step,
        })
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    pub fn cell_area(&self) -> &[f64] {
        &self.cell_area
    }

    /// Row centre time in seconds.
    pub fn row_time(&self) -> &[f64] {
        &self.row_time
    }

    /// Row frequency step `b_k` in Hz.
    pub fn freq_step(&self) -> &[f64] {
        &self.freq_step
    }

    /// Aliased magnitude frequency of cell `(k, l)` in Hz.
    pub fn cell_frequency(&self, k: usize, l: usize) -> f64 {
        let m = self.cells[k].len();
        l.min(m - l) as f64 * self.freq_step[k]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }
}

/// `z[k][l] = |c[k][l]|²`, with cell area `hop_k / M_k` (seconds times Hz).
pub fn spectrogram(
    coeffs: &CoefficientGrid,
    plan: &NsgfPlan,
) -> Result<SpectrogramGrid, EntropyError> {
    if !coeffs.belongs_to(plan) {
        return Err(EntropyError::Shape(
            "coefficient grid does not belong to plan".into(),
        ));
    }
    let sr = plan.sample_rate();
    let cells = coeffs
        .rows()
        .iter()
        .map(|row| row.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    let elems = plan.elements();
    let area = (0..plan.len())
        .map(|k| plan.hop(k) as f64 / elems[k].channels() as f64)
        .collect();
    let time = elems.iter().map(|e| e.center() / sr).collect();
    let step = elems.iter().map(|e| e.freq_step(sr)).collect();
    SpectrogramGrid::with_geometry(cells, area, time, step)
}

/// `z*[k][l] = w(k, l) · z[k][l]`; cell areas are unchanged.
pub fn weighted_spectrogram(
    z: &SpectrogramGrid,
    w: impl Fn(usize, usize) -> f64,
) -> Result<SpectrogramGrid, EntropyError> {
    let mut cells = z.cells.clone();
    for (k, row) in cells.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            let wt = w(k, l);
            if !(wt.is_finite() && wt >= 0.0) {
                return Err(EntropyError::BadWeight(k, l));
            }
            *v *= wt;
        }
    }
    Ok(SpectrogramGrid { cells, ..z.clone() })
}

/// Weighting by frequency only: `w(k, l) = mask(ν_{k,l})`.
pub fn frequency_weighted(
    z: &SpectrogramGrid,
    mask: impl Fn(f64) -> f64,
) -> Result<SpectrogramGrid, EntropyError> {
    weighted_spectrogram(z, |k, l| mask(z.cell_frequency(k, l)))
}

/// Time-frequency region `G` over which the entropy is evaluated.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Region {
    #[default]
    Full,
    /// Rows `k1..=k2`, bins `l1..=l2` (clipped to each row's length).
    Indices {
        rows: (usize, usize),
        bins: (usize, usize),
    },
    /// Rows whose centre lies in `[t1, t2]` seconds, cells whose aliased frequency lies in `[ν1, ν2]` Hz.
    TimeFrequency { time: (f64, f64), freq: (f64, f64) },
}

impl Region {
    fn contains(&self, z: &SpectrogramGrid, k: usize, l: usize) -> bool {
        match *self {
            Region::Full => true,
            Region::Indices { rows, bins } => {
                (rows.0..=rows.1).contains(&k) && (bins.0..=bins.1).contains(&l)
            }
            Region::TimeFrequency { time, freq } => {
                let t = z.row_time[k];
                let nu = z.cell_frequency(k, l);
                (time.0..=time.1).contains(&t) && (freq.0..=freq.1).contains(&nu)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AreaMode {
    /// Region must have a single cell area (the usual single-scale case).
    #[default]
    Uniform,
    /// Experimental: per-cell area weighting for mixed-scale regions.
    Mixed,
}

pub type WeightFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// Order, region and optional spectrogram weight of an entropy evaluation.
#[derive(Clone, Default)]
pub struct EntropyQuery {
    pub alpha: f64,
    pub region: Region,
    pub weight: Option<WeightFn>,
    pub area_mode: AreaMode,
}

impl EntropyQuery {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn weight(mut self, w: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.weight = Some(Arc::new(w));
        self
    }

    pub fn area_mode(mut self, mode: AreaMode) -> Self {
        self.area_mode = mode;
        self
    }
}

impl std::fmt::Debug for EntropyQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EntropyQuery")
            .field("alpha", &self.alpha)
            .field("region", &self.region)
            .field("weighted", &self.weight.is_some())
            .field("area_mode", &self.area_mode)
            .finish()
    }
}

/// Rényi entropy in bits of the (weighted) density restricted to the query region.
pub fn renyi_entropy(z: &SpectrogramGrid, q: &EntropyQuery) -> Result<f64, EntropyError> {
    let alpha = q.alpha;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(EntropyError::BadOrder(alpha));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for (k, row) in z.cells.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            if !q.region.contains(z, k, l) {
                continue;
            }
            let v = match &q.weight {
                Some(w) => {
                    let wt = w(k, l);
                    if !(wt.is_finite() && wt >= 0.0) {
                        return Err(EntropyError::BadWeight(k, l));
                    }
                    wt * v
                }
                None => v,
            };
            cells.push((v, z.cell_area[k]));
        }
    }
    let total: f64 = cells.iter().map(|c| c.0).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(EntropyError::EmptyRegion);
    }
    let area0 = cells[0].1;
    let uniform = cells.iter().all(|c| (c.1 - area0).abs() <= 1e-12 * area0);
    match (uniform, q.area_mode) {
        (true, _) => Ok(uniform_entropy(cells.iter().map(|c| c.0 / total), alpha) + area0.log2()),
        (false, AreaMode::Uniform) => Err(EntropyError::MixedArea),
        (false, AreaMode::Mixed) => Ok(mixed_entropy(&cells, total, alpha)),
    }
}

fn uniform_entropy(p: impl Iterator<Item = f64>, alpha: f64) -> f64 {
    if alpha == 0.0 {
        (p.filter(|&x| x > 0.0).count() as f64).log2()
    } else if alpha == 1.0 {
        -p.filter(|&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
    } else {
        p.filter(|&x| x > 0.0)
            .map(|x| x.powf(alpha))
            .sum::<f64>()
            .log2()
            / (1.0 - alpha)
    }
}

fn mixed_entropy(cells: &[(f64, f64)], total: f64, alpha: f64) -> f64 {
    let live = cells
        .iter()
        .filter(|c| c.0 > 0.0)
        .map(|&(v, a)| (v / total, a));
    if alpha == 0.0 {
        live.map(|(_, a)| a).sum::<f64>().log2()
    } else if alpha == 1.0 {
        -live.map(|(p, a)| p * (p / a).log2()).sum::<f64>()
    } else {
        live.map(|(p, a)| a.powf(1.0 - alpha) * p.powf(alpha))
            .sum::<f64>()
            .log2()
            / (1.0 - alpha)
    }
}

/// Convenience: entropy of a plain density vector with unit cell area.
pub fn density_entropy(values: &[f64], alpha: f64) -> Result<f64, EntropyError> {
    renyi_entropy(
        &SpectrogramGrid::from_density(values.to_vec())?,
        &EntropyQuery::new(alpha),
    )
}

/// Deviations of `H_α` from the Shannon entropy as `α → 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShannonLimit {
    pub shannon: f64,
    /// `(α, |H_α - H_1|)` for α = 1 ± 1e-2 and 1 ± 1e-4.
    pub deviations: Vec<(f64, f64)>,
}

impl ShannonLimit {
    /// Largest deviation at the closest orders `1 ± 1e-4`.
    pub fn closest_gap(&self) -> f64 {
        self.deviations
            .iter()
            .filter(|(a, _)| (a - 1.0).abs() < 1e-3)
            .map(|d| d.1)
            .fold(0.0, f64::max)
    }

    /// Whether the gap shrinks as α approaches 1 on each side.
    pub fn is_monotone(&self) -> bool {
        let gap = |a: f64| {
            self.deviations
                .iter()
                .find(|d| d.0 == a)
                .map(|d| d.1)
                .unwrap_or(f64::NAN)
        };
        gap(1.0 + 1e-4) <= gap(1.0 + 1e-2) && gap(1.0 - 1e-4) <= gap(1.0 - 1e-2)
    }
}

pub fn shannon_limit_check(
    z: &SpectrogramGrid,
    region: &Region,
) -> Result<ShannonLimit, EntropyError> {
    let q = |alpha| EntropyQuery::new(alpha).region(region.clone());
    let shannon = renyi_entropy(z, &q(1.0))?;
    let deviations = [1.0 - 1e-2, 1.0 + 1e-2, 1.0 - 1e-4, 1.0 + 1e-4]
        .into_iter()
        .map(|a| renyi_entropy(z, &q(a)).map(|h| (a, (h - shannon).abs())))
        .collect::<Result<_, _>>()?;
    Ok(ShannonLimit {
        shannon,
        deviations,
    })
}
