//! Entropy-driven selection of the analysis window per time segment and band.
//!
//! The signal is cut into overlapping segments measured in frames of the
//! largest window. Inside each segment every candidate window is used for a
//! uniform analysis (hop half the window, as many channels as samples), the
//! band mask weights the resulting spectrogram, and the window giving the
//! smallest Rényi entropy wins. Each frame of the final plan takes the
//! decision of the segment whose centre is nearest to it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::bands::{FrequencyWeight, MaskPreset};
use crate::entropy::{
    frequency_weighted, renyi_entropy, EntropyError, EntropyQuery, SpectrogramGrid,
};
use crate::gabor::{build_plan_with, GaborError, HopRule, NsgfPlan};
use crate::signal::Signal;
use crate::window::{make_window, scale_window, Window, WindowError, WindowFamily};

/// Entropy order used when none is given.
pub const DEFAULT_ALPHA: f64 = 0.7;
pub const DEFAULT_SCALES: [usize; 4] = [512, 1024, 2048, 4096];

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("invalid adaptation config: {0}")]
    Config(String),
    #[error("signal of {len} samples is shorter than one segment ({segment} samples)")]
    SignalTooShort { len: usize, segment: usize },
    #[error("window of {window} samples does not fit in a {segment}-sample segment")]
    WindowTooLarge { window: usize, segment: usize },
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Gabor(#[from] GaborError),
    #[error(transparent)]
    Window(#[from] WindowError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptationConfig {
    /// Candidate window lengths in samples, ascending.
    pub scales: Vec<usize>,
    pub alpha: f64,
    /// Segment length, in frames (half-lengths) of the largest window.
    pub segment_frames: usize,
    /// Overlap between consecutive segments, same unit.
    pub overlap_frames: usize,
    /// One spectrogram weight per band; only steers the adaptation.
    pub band_masks: Vec<FrequencyWeight>,
    pub window_family: WindowFamily,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            scales: DEFAULT_SCALES.to_vec(),
            alpha: DEFAULT_ALPHA,
            segment_frames: 4,
            overlap_frames: 3,
            band_masks: vec![MaskPreset::Low300.weight(), MaskPreset::High300.weight()],
            window_family: WindowFamily::Hann,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<(), AdaptError> {
        let err = |m: &str| Err(AdaptError::Config(m.into()));
        if self.scales.is_empty() {
            return err("scale set is empty");
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return err("scales must be strictly ascending");
        }
        if self.scales[0] < 4 {
            return err("scales must be at least 4 samples");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return err("alpha must be finite and >= 0");
        }
        if self.segment_frames == 0 || self.overlap_frames >= self.segment_frames {
            return err("need 0 <= overlap_frames < segment_frames");
        }
        if self.band_masks.is_empty() {
            return err("at least one band mask is required");
        }
        for m in &self.band_masks {
            m.validate()
                .map_err(|e| AdaptError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn largest_scale(&self) -> usize {
        *self.scales.last().expect("validated")
    }

    /// Segment length in samples.
    pub fn segment_len(&self) -> usize {
        let frame = self.largest_scale() / 2;
        self.segment_frames * frame + frame
    }

    /// Advance between consecutive segments in samples.
    pub fn segment_hop(&self) -> usize {
        (self.segment_frames - self.overlap_frames) * (self.largest_scale() / 2)
    }
}

/// Half-open sample range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn center(&self) -> f64 {
        (self.start + self.end) as f64 / 2.0
    }
}

/// Overlapping segments covering the signal; the last one is clipped at the end.
pub fn segment_grid(
    signal_length: usize,
    config: &AdaptationConfig,
) -> Result<Vec<Segment>, AdaptError> {
    config.validate()?;
    let len = config.segment_len();
    if signal_length < len {
        return Err(AdaptError::SignalTooShort {
            len: signal_length,
            segment: len,
        });
    }
    let hop = config.segment_hop();
    let mut segments = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + len).min(signal_length);
        segments.push(Segment { start, end });
        if end == signal_length {
            break;
        }
        start += hop;
    }
    Ok(segments)
}

/// Uniform short-time analysis of a segment with cached FFT plans per scale.
struct SegmentAnalyzer {
    windows: HashMap<usize, Window>,
    ffts: HashMap<usize, Arc<dyn Fft<f64>>>,
    sample_rate: f64,
}

impl SegmentAnalyzer {
    fn new(config: &AdaptationConfig, sample_rate: f64) -> Result<Self, AdaptError> {
        let base = make_window(config.window_family, config.scales[0])?;
        let mut planner = FftPlanner::new();
        let mut windows = HashMap::new();
        let mut ffts = HashMap::new();
        for &scale in &config.scales {
            let s = scale as f64 / config.scales[0] as f64;
            windows.insert(scale, scale_window(&base, s)?);
            ffts.insert(scale, planner.plan_fft_forward(scale));
        }
        Ok(Self {
            windows,
            ffts,
            sample_rate,
        })
    }

    /// Spectrogram of `samples` with frames fully inside the segment.
    fn spectrogram(&self, samples: &[f64], scale: usize) -> Result<SpectrogramGrid, AdaptError> {
        if scale > samples.len() {
            return Err(AdaptError::WindowTooLarge {
                window: scale,
                segment: samples.len(),
            });
        }
        let window = &self.windows[&scale];
        let fft = &self.ffts[&scale];
        let hop = scale / 2;
        let frames = (samples.len() - scale) / hop + 1;
        let mut cells = Vec::with_capacity(frames);
        let mut buf = vec![Complex64::new(0.0, 0.0); scale];
        for j in 0..frames {
            let slice = &samples[j * hop..j * hop + scale];
            for ((b, &x), &g) in buf.iter_mut().zip(slice).zip(window.values()) {
                *b = Complex64::new(x * g, 0.0);
            }
            fft.process(&mut buf);
            cells.push(buf.iter().map(|c| c.norm_sqr()).collect());
        }
        let area = vec![hop as f64 / scale as f64; frames];
        let time = (0..frames)
            .map(|j| (j * hop) as f64 / self.sample_rate)
            .collect();
        let step = vec![self.sample_rate / scale as f64; frames];
        Ok(SpectrogramGrid::with_geometry(cells, area, time, step)?)
    }
}

fn masked_entropy(
    z: &SpectrogramGrid,
    mask: &FrequencyWeight,
    alpha: f64,
) -> Result<f64, EntropyError> {
    let weighted = frequency_weighted(z, |nu| mask.eval(nu))?;
    renyi_entropy(&weighted, &EntropyQuery::new(alpha))
}

/// Entropy (bits) of one segment analyzed at one scale under a band mask.
pub fn evaluate_segment(
    f: &Signal,
    segment: Segment,
    scale: usize,
    config: &AdaptationConfig,
    band_mask: &FrequencyWeight,
) -> Result<f64, AdaptError> {
    config.validate()?;
    if !config.scales.contains(&scale) {
        return Err(AdaptError::Config(format!(
            "scale {scale} is not in the scale set"
        )));
    }
    if segment.end > f.len() || segment.is_empty() {
        return Err(AdaptError::Config("segment outside the signal".into()));
    }
    let analyzer = SegmentAnalyzer::new(config, f.sample_rate())?;
    let z = analyzer.spectrogram(&f.samples()[segment.start..segment.end], scale)?;
    Ok(masked_entropy(&z, band_mask, config.alpha)?)
}

/// Argmin over `(scale, entropy)` pairs; ties go to the smallest scale.
pub fn select_scale(entropies: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(scale, h) in entropies {
        best = match best {
            Some((bs, bh)) if h > bh || (h == bh && scale >= bs) => Some((bs, bh)),
            _ => Some((scale, h)),
        };
    }
    best.map(|b| b.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentDecision {
    pub segment: Segment,
    pub chosen: usize,
    /// Entropy per candidate scale, in config order; `None` when the scale did
    /// not fit or the masked spectrogram was empty.
    pub entropies: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct BandAdaptation {
    pub decisions: Vec<SegmentDecision>,
    pub plan: NsgfPlan,
}

impl BandAdaptation {
    /// Window length of the plan frame covering each element, in plan order.
    pub fn frame_scales(&self) -> Vec<usize> {
        self.plan.elements().iter().map(|e| e.len()).collect()
    }

    pub fn chosen_scales(&self) -> Vec<usize> {
        self.decisions.iter().map(|d| d.chosen).collect()
    }
}

#[derive(Clone, Debug)]
pub struct AdaptationResult {
    pub scales: Vec<usize>,
    pub sample_rate: f64,
    pub bands: Vec<BandAdaptation>,
}

impl AdaptationResult {
    /// One row per (band, segment): start time, chosen scale and entropy per candidate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("band,segment_start_s,chosen_scale");
        for s in &self.scales {
            let _ = write!(out, ",entropy_{s}");
        }
        out.push('\n');
        for (p, band) in self.bands.iter().enumerate() {
            for d in &band.decisions {
                let _ = write!(
                    out,
                    "{},{},{}",
                    p,
                    d.segment.start as f64 / self.sample_rate,
                    d.chosen
                );
                for h in &d.entropies {
                    match h {
                        Some(h) => {
                            let _ = write!(out, ",{h}");
                        }
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Run the full adaptation: per band, per segment scale choice, then plan assembly.
pub fn adapt(f: &Signal, config: &AdaptationConfig) -> Result<AdaptationResult, AdaptError> {
    let segments = segment_grid(f.len(), config)?;
    let analyzer = SegmentAnalyzer::new(config, f.sample_rate())?;
    let bands = config.band_masks.len();

    // evaluations[segment][scale][band]
    let evaluations: Vec<Vec<Vec<Option<f64>>>> = segments
        .par_iter()
        .map(|seg| {
            let samples = &f.samples()[seg.start..seg.end];
            config
                .scales
                .iter()
                .map(|&scale| {
                    if scale > seg.len() {
                        return Ok(vec![None; bands]);
                    }
                    let z = analyzer.spectrogram(samples, scale)?;
                    config
                        .band_masks
                        .iter()
                        .map(|mask| match masked_entropy(&z, mask, config.alpha) {
                            Ok(h) => Ok(Some(h)),
                            Err(EntropyError::EmptyRegion) => Ok(None),
                            Err(e) => Err(AdaptError::from(e)),
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, AdaptError>>()
        })
        .collect::<Result<_, _>>()?;

    let windows: HashMap<usize, Arc<Window>> = config
        .scales
        .iter()
        .map(|&s| make_window(config.window_family, s).map(|w| (s, Arc::new(w))))
        .collect::<Result<_, _>>()?;
    let centers: Vec<f64> = segments.iter().map(Segment::center).collect();

    let mut out = Vec::with_capacity(bands);
    for p in 0..bands {
        let mut decisions = Vec::with_capacity(segments.len());
        let mut previous = config.largest_scale();
        for (seg, eval) in segments.iter().zip(&evaluations) {
            let entropies: Vec<Option<f64>> = eval.iter().map(|per_band| per_band[p]).collect();
            let candidates: Vec<(usize, f64)> = config
                .scales
                .iter()
                .zip(&entropies)
                .filter_map(|(&s, h)| h.map(|h| (s, h)))
                .collect();
            let chosen = select_scale(&candidates).unwrap_or(previous);
            previous = chosen;
            decisions.push(SegmentDecision {
                segment: *seg,
                chosen,
                entropies,
            });
        }
        let plan = build_plan_with(
            |pos| windows[&decisions[nearest_center(&centers, pos as f64)].chosen].clone(),
            HopRule::HalfMinOverlap,
            f.len(),
            f.sample_rate(),
        )?;
        out.push(BandAdaptation { decisions, plan });
    }
    Ok(AdaptationResult {
        scales: config.scales.clone(),
        sample_rate: f.sample_rate(),
        bands: out,
    })
}

/// Index of the segment whose centre is nearest to `t` (earliest on ties).
fn nearest_center(centers: &[f64], t: f64) -> usize {
    let i = centers.partition_point(|&c| c < t);
    match (i.checked_sub(1), centers.get(i)) {
        (Some(j), Some(&c)) if (t - centers[j]) <= (c - t) => j,
        (Some(j), None) => j,
        _ => i,
    }
}
