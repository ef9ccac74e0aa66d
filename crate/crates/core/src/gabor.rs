//! Nonstationary Gabor frames in the painless case.
//!
//! A plan is a sequence of frame elements `(g_k, a_k, M_k)` on a periodic
//! signal of length `N`. Atoms are
//!
//! ```text
//! g_{k,l}(t) = g_k(t - a_k) * exp(2πi l t / M_k),   t = a_k + τ, 0 <= τ < L_k
//! ```
//!
//! with `t` the absolute (unwrapped) time, so coefficients from different
//! plans share one phase reference. Sample indices are taken modulo `N`.
//! With `M_k >= L_k` the frame operator is diagonal,
//! `S(t) = Σ_k M_k |g_k(t - a_k)|²`, and the canonical dual windows are
//! `g_k / S`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::signal::{Signal, SignalError};
use crate::window::Window;

/// Relative floor applied to the frame-operator diagonal.
pub const DEFAULT_COVERAGE_FLOOR: f64 = 1e-6;

/// Allowed imaginary residue (L2, relative) when collapsing a synthesis to a real signal.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GaborError {
    #[error("painless condition violated: {channels} channels < window length {window_len}")]
    NotPainless { channels: usize, window_len: usize },
    #[error("plan has no frame elements")]
    EmptyPlan,
    #[error("frame positions must be strictly increasing and inside the signal (element {0})")]
    BadPosition(usize),
    #[error("window of length {window_len} exceeds signal length {signal_length}")]
    WindowTooLong {
        window_len: usize,
        signal_length: usize,
    },
    #[error("frame coverage too low at sample {sample}: S = {value:e} below floor {floor:e}")]
    CoverageViolated {
        sample: usize,
        value: f64,
        floor: f64,
    },
    #[error("windows ran out before covering {signal_length} samples (reached {reached})")]
    Uncovered {
        reached: usize,
        signal_length: usize,
    },
    #[error("too many windows for signal length {0}")]
    TooManyWindows(usize),
    #[error("signal length {signal} does not match plan length {plan}")]
    LengthMismatch { signal: usize, plan: usize },
    #[error("coefficient grid does not belong to this plan")]
    PlanMismatch,
    #[error("synthesized signal has imaginary residue {ratio:e} relative to its real part")]
    ImaginaryResidue { ratio: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// One window of a nonstationary frame: `g_k` placed at `a_k` with `M_k` channels.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameElement {
    window: Arc<Window>,
    position: usize,
    channels: usize,
}

impl FrameElement {
    pub fn new(window: Arc<Window>, position: usize, channels: usize) -> Result<Self, GaborError> {
        if channels < window.len() {
            return Err(GaborError::NotPainless {
                channels,
                window_len: window.len(),
            });
        }
        Ok(Self {
            window,
            position,
            channels,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn shared_window(&self) -> &Arc<Window> {
        &self.window
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Frequency step `b_k` in Hz.
    pub fn freq_step(&self, sample_rate: f64) -> f64 {
        sample_rate / self.channels as f64
    }

    /// Aliased magnitude frequency of bin `l`, in Hz.
    pub fn bin_frequency(&self, l: usize, sample_rate: f64) -> f64 {
        l.min(self.channels - l) as f64 * self.freq_step(sample_rate)
    }

    /// Sample index of the window centre (may exceed the signal length before wrapping).
    pub fn center(&self) -> f64 {
        self.position as f64 + (self.len() as f64 - 1.0) / 2.0
    }
}

/// How consecutive frame positions are derived from window lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HopRule {
    /// `a_{k+1} - a_k = min(L_k, L_{k+1}) / 2`.
    #[default]
    HalfMinOverlap,
}

impl HopRule {
    pub fn hop(self, current_len: usize, next_len: usize) -> usize {
        match self {
            HopRule::HalfMinOverlap => (current_len.min(next_len) / 2).max(1),
        }
    }
}

/// A validated painless nonstationary Gabor frame with periodic boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct NsgfPlan {
    elements: Vec<FrameElement>,
    signal_length: usize,
    sample_rate: f64,
    id: u64,
}

impl NsgfPlan {
    /// Validate elements against the signal geometry and the coverage floor.
    pub fn new(
        elements: Vec<FrameElement>,
        signal_length: usize,
        sample_rate: f64,
    ) -> Result<Self, GaborError> {
        Self::with_floor(elements, signal_length, sample_rate, DEFAULT_COVERAGE_FLOOR)
    }

    /// As [`NsgfPlan::new`] with an explicit relative coverage floor.
    pub fn with_floor(
        elements: Vec<FrameElement>,
        signal_length: usize,
        sample_rate: f64,
        floor: f64,
    ) -> Result<Self, GaborError> {
        if elements.is_empty() {
            return Err(GaborError::EmptyPlan);
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::Invalid(format!(
                "sample rate {sample_rate} must be positive"
            ))
            .into());
        }
        for (k, e) in elements.iter().enumerate() {
            if e.len() > signal_length {
                return Err(GaborError::WindowTooLong {
                    window_len: e.len(),
                    signal_length,
                });
            }
            if e.position >= signal_length || (k > 0 && e.position <= elements[k - 1].position) {
                return Err(GaborError::BadPosition(k));
            }
        }
        let mut plan = Self {
            elements,
            signal_length,
            sample_rate,
            id: 0,
        };
        let diag = plan.frame_operator_diagonal();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let threshold = floor * max;
        if let Some((sample, &value)) = diag
            .iter()
            .enumerate()
            .find(|(_, &s)| !(s >= threshold && s > 0.0))
        {
            return Err(GaborError::CoverageViolated {
                sample,
                value,
                floor: threshold,
            });
        }
        plan.id = plan.fingerprint();
        Ok(plan)
    }

    /// Uniform plan: the same window every `hop` samples, `M = L`.
    pub fn uniform(
        window: Window,
        hop: usize,
        signal_length: usize,
        sample_rate: f64,
    ) -> Result<Self, GaborError> {
        if hop == 0 {
            return Err(GaborError::BadPosition(0));
        }
        let window = Arc::new(window);
        let channels = window.len();
        let elements = (0..signal_length)
            .step_by(hop)
            .map(|a| FrameElement::new(window.clone(), a, channels))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(elements, signal_length, sample_rate)
    }

    pub fn elements(&self) -> &[FrameElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Identifier binding coefficient grids and duals to this plan.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Hop from element `k` to the next one, wrapping at the end.
    pub fn hop(&self, k: usize) -> usize {
        let a = self.elements[k].position;
        match self.elements.get(k + 1) {
            Some(next) => next.position - a,
            None => self.signal_length - a + self.elements[0].position,
        }
    }

    /// Largest frequency step `b_k` over the plan.
    pub fn max_freq_step(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.freq_step(self.sample_rate))
            .fold(0.0, f64::max)
    }

    /// The diagonal `S(t) = Σ_k M_k |g_k(t - a_k)|²` of the painless frame operator.
    pub fn frame_operator_diagonal(&self) -> Vec<f64> {
        let n = self.signal_length;
        let mut diag = vec![0.0; n];
        for e in &self.elements {
            let m = e.channels as f64;
            for (tau, g) in e.window.values().iter().enumerate() {
                diag[(e.position + tau) % n] += m * g * g;
            }
        }
        diag
    }

    fn fingerprint(&self) -> u64 {
        // FNV-1a over the geometry
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(&(self.signal_length as u64).to_le_bytes());
        eat(&self.sample_rate.to_bits().to_le_bytes());
        for e in &self.elements {
            eat(&(e.position as u64).to_le_bytes());
            eat(&(e.channels as u64).to_le_bytes());
            eat(&[e.window.family().code()]);
            eat(&(e.window.len() as u64).to_le_bytes());
            eat(&e.window.gain().to_bits().to_le_bytes());
        }
        h
    }
}

/// Lay out an explicit window sequence with the given hop rule (`M_k = L_k`).
pub fn build_plan(
    windows: Vec<Window>,
    hop_rule: HopRule,
    signal_length: usize,
    sample_rate: f64,
) -> Result<NsgfPlan, GaborError> {
    if windows.is_empty() {
        return Err(GaborError::EmptyPlan);
    }
    let windows: Vec<Arc<Window>> = share_windows(windows);
    let mut elements = Vec::with_capacity(windows.len());
    let mut position = 0usize;
    for (k, w) in windows.iter().enumerate() {
        if position >= signal_length {
            return Err(GaborError::TooManyWindows(signal_length));
        }
        elements.push(FrameElement::new(w.clone(), position, w.len())?);
        let next_len = windows.get(k + 1).map_or(w.len(), |n| n.len());
        position += hop_rule.hop(w.len(), next_len);
    }
    let last = elements.last().expect("nonempty");
    let reached = last.position + last.len();
    if reached < signal_length {
        return Err(GaborError::Uncovered {
            reached,
            signal_length,
        });
    }
    NsgfPlan::new(elements, signal_length, sample_rate)
}

/// Lay out frames until the signal is covered, asking `window_at` for the
/// window of each frame given its tentative start (previous start plus half
/// the previous window length).
pub fn build_plan_with<F>(
    mut window_at: F,
    hop_rule: HopRule,
    signal_length: usize,
    sample_rate: f64,
) -> Result<NsgfPlan, GaborError>
where
    F: FnMut(usize) -> Arc<Window>,
{
    let mut elements: Vec<FrameElement> = Vec::new();
    let mut window = window_at(0);
    let mut position = 0usize;
    loop {
        let len = window.len();
        elements.push(FrameElement::new(window.clone(), position, len)?);
        let next = window_at(position + len / 2);
        let next_position = position + hop_rule.hop(len, next.len());
        if next_position >= signal_length {
            break;
        }
        position = next_position;
        window = next;
    }
    NsgfPlan::new(elements, signal_length, sample_rate)
}

fn share_windows(windows: Vec<Window>) -> Vec<Arc<Window>> {
    let mut out: Vec<Arc<Window>> = Vec::with_capacity(windows.len());
    for w in windows {
        match out.iter().rev().find(|prev| ***prev == w) {
            Some(prev) => out.push(prev.clone()),
            None => out.push(Arc::new(w)),
        }
    }
    out
}

/// Jagged array of analysis coefficients, row `k` holding `M_k` values.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientGrid {
    rows: Vec<Vec<Complex64>>,
    plan_id: u64,
}

impl CoefficientGrid {
    /// Wrap rows for `plan`, checking row lengths against channel counts.
    pub fn new(rows: Vec<Vec<Complex64>>, plan: &NsgfPlan) -> Result<Self, GaborError> {
        if rows.len() != plan.len()
            || rows
                .iter()
                .zip(plan.elements())
                .any(|(r, e)| r.len() != e.channels)
        {
            return Err(GaborError::PlanMismatch);
        }
        Ok(Self {
            rows,
            plan_id: plan.id(),
        })
    }

    pub fn zeros(plan: &NsgfPlan) -> Self {
        Self {
            rows: plan
                .elements()
                .iter()
                .map(|e| vec![Complex64::new(0.0, 0.0); e.channels])
                .collect(),
            plan_id: plan.id(),
        }
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.rows
    }

    pub fn plan_id(&self) -> u64 {
        self.plan_id
    }

    pub fn belongs_to(&self, plan: &NsgfPlan) -> bool {
        self.plan_id == plan.id()
    }

    /// Apply `f(k, l, c)` to every coefficient.
    pub fn map(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(k, row)| row.iter().enumerate().map(|(l, &c)| f(k, l, c)).collect())
            .collect();
        Self {
            rows,
            plan_id: self.plan_id,
        }
    }

    pub fn energy(&self) -> f64 {
        self.rows.iter().flatten().map(|c| c.norm_sqr()).sum()
    }
}

fn fft_plans(plan: &NsgfPlan, inverse: bool) -> HashMap<usize, Arc<dyn Fft<f64>>> {
    let mut planner = FftPlanner::new();
    let mut plans = HashMap::new();
    for e in plan.elements() {
        plans.entry(e.channels).or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(e.channels)
            } else {
                planner.plan_fft_forward(e.channels)
            }
        });
    }
    plans
}

/// `exp(sign * 2πi * (l * a mod m) / m)`, reduced in integers to keep the phase exact.
fn twiddle(l: usize, a: usize, m: usize, sign: f64) -> Complex64 {
    let r = ((l as u128 * a as u128) % m as u128) as f64;
    Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * r / m as f64)
}

/// Analyze a real signal.
pub fn analyze(f: &Signal, plan: &NsgfPlan) -> Result<CoefficientGrid, GaborError> {
    let data: Vec<Complex64> = f
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    analyze_complex(&data, plan)
}

/// `c[k][l] = Σ_t f(t) g_k(t - a_k) exp(-2πi l t / M_k)` via one FFT per frame.
pub fn analyze_complex(f: &[Complex64], plan: &NsgfPlan) -> Result<CoefficientGrid, GaborError> {
    let n = plan.signal_length();
    if f.len() != n {
        return Err(GaborError::LengthMismatch {
            signal: f.len(),
            plan: n,
        });
    }
    let ffts = fft_plans(plan, false);
    let rows = plan
        .elements()
        .par_iter()
        .map(|e| {
            let m = e.channels;
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for (tau, &g) in e.window.values().iter().enumerate() {
                buf[tau] = f[(e.position + tau) % n] * g;
            }
            ffts[&m].process(&mut buf);
            for (l, c) in buf.iter_mut().enumerate() {
                *c *= twiddle(l, e.position, m, -1.0);
            }
            buf
        })
        .collect();
    Ok(CoefficientGrid {
        rows,
        plan_id: plan.id(),
    })
}

/// Canonical dual of a painless plan: `g̃_k = g_k / S`.
#[derive(Clone, Debug)]
pub struct DualPlan {
    plan: NsgfPlan,
    windows: Vec<Vec<f64>>,
    diagonal: Vec<f64>,
}

impl DualPlan {
    pub fn plan(&self) -> &NsgfPlan {
        &self.plan
    }

    /// Dual window of element `k`, aligned with its support.
    pub fn window(&self, k: usize) -> &[f64] {
        &self.windows[k]
    }

    pub fn windows(&self) -> &[Vec<f64>] {
        &self.windows
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }
}

/// Build the dual frame of a plan.
pub fn dual_plan(plan: &NsgfPlan) -> Result<DualPlan, GaborError> {
    let diagonal = plan.frame_operator_diagonal();
    let n = plan.signal_length();
    let max = diagonal.iter().cloned().fold(0.0, f64::max);
    let threshold = DEFAULT_COVERAGE_FLOOR * max;
    if let Some((sample, &value)) = diagonal
        .iter()
        .enumerate()
        .find(|(_, &s)| !(s >= threshold && s > 0.0))
    {
        return Err(GaborError::CoverageViolated {
            sample,
            value,
            floor: threshold,
        });
    }
    let windows = plan
        .elements()
        .iter()
        .map(|e| {
            e.window
                .values()
                .iter()
                .enumerate()
                .map(|(tau, g)| g / diagonal[(e.position + tau) % n])
                .collect()
        })
        .collect();
    Ok(DualPlan {
        plan: plan.clone(),
        windows,
        diagonal,
    })
}

/// Per-frame synthesis contributions `g̃_k(τ) Σ_l c[k][l] exp(2πi l (a_k+τ)/M_k)`,
/// computed in parallel and returned in frame order.
pub(crate) fn frame_contributions(
    coeffs: &CoefficientGrid,
    dual: &DualPlan,
) -> Vec<Vec<Complex64>> {
    let plan = dual.plan();
    let ffts = fft_plans(plan, true);
    plan.elements()
        .par_iter()
        .zip(coeffs.rows().par_iter())
        .zip(dual.windows().par_iter())
        .map(|((e, row), gd)| {
            let m = e.channels;
            let mut buf: Vec<Complex64> = row
                .iter()
                .enumerate()
                .map(|(l, &c)| c * twiddle(l, e.position, m, 1.0))
                .collect();
            ffts[&m].process(&mut buf);
            buf.truncate(gd.len());
            for (y, &g) in buf.iter_mut().zip(gd) {
                *y *= g;
            }
            buf
        })
        .collect()
}

/// Overlap-add per-frame contributions in frame order onto a periodic signal.
pub(crate) fn overlap_add(plan: &NsgfPlan, contributions: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = plan.signal_length();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (e, frame) in plan.elements().iter().zip(contributions) {
        for (tau, &y) in frame.iter().enumerate() {
            out[(e.position + tau) % n] += y;
        }
    }
    out
}

/// Dual-frame expansion of a coefficient grid, complex valued.
pub fn synthesize_complex(
    coeffs: &CoefficientGrid,
    dual: &DualPlan,
) -> Result<Vec<Complex64>, GaborError> {
    if !coeffs.belongs_to(dual.plan()) {
        return Err(GaborError::PlanMismatch);
    }
    Ok(overlap_add(dual.plan(), &frame_contributions(coeffs, dual)))
}

/// Collapse a complex synthesis to a real signal, rejecting a non-negligible imaginary part.
pub fn real_part(values: &[Complex64], sample_rate: f64) -> Result<Signal, GaborError> {
    let re2: f64 = values.iter().map(|c| c.re * c.re).sum();
    let im2: f64 = values.iter().map(|c| c.im * c.im).sum();
    if im2 > 0.0 {
        let ratio = (im2 / re2).sqrt();
        if ratio.is_nan() || ratio > IMAG_RESIDUE_TOL {
            return Err(GaborError::ImaginaryResidue { ratio });
        }
    }
    Ok(Signal::new(
        values.iter().map(|c| c.re).collect(),
        sample_rate,
    )?)
}

/// Dual-frame expansion of a coefficient grid as a real signal.
pub fn synthesize(coeffs: &CoefficientGrid, dual: &DualPlan) -> Result<Signal, GaborError> {
    let values = synthesize_complex(coeffs, dual)?;
    real_part(&values, dual.plan().sample_rate())
}
