//! Multi-band analysis-weighting reconstruction.
//!
//! Each band `p` contributes the dual expansion of its weighted coefficients
//! divided back by their weights, restricted to bins where `w^p >= ε`.
//! The band sum is moved to the global Fourier domain (length `N`), every
//! bin is divided by the number of active bands `p(ν)` there (bins with
//! `p(ν) = 0` are zeroed) and transformed back.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::bands::{BandWeightSet, FrequencyWeight};
use crate::gabor::{self, real_part, CoefficientGrid, DualPlan, GaborError, NsgfPlan};
use crate::signal::{Signal, SignalError};

/// Relative energy above which zeroed `p(ν) = 0` bins raise a diagnostic.
pub const DEAD_BIN_ENERGY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WeightedReconError {
    #[error("band {band} has signal length {got}, expected {expected}")]
    LengthMismatch {
        band: usize,
        got: usize,
        expected: usize,
    },
    #[error("band {band} has sample rate {got}, expected {expected}")]
    RateMismatch {
        band: usize,
        got: f64,
        expected: f64,
    },
    #[error("{bands} band inputs for {weights} weight functions")]
    BandCount { bands: usize, weights: usize },
    #[error("no bands to reconstruct")]
    NoBands,
    #[error("signals differ in length ({0} vs {1})")]
    SignalLength(usize, usize),
    #[error(transparent)]
    Gabor(#[from] GaborError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Multiply each coefficient by the band weight at its bin's aliased frequency.
pub fn weight_coefficients(
    coeffs: &CoefficientGrid,
    plan: &NsgfPlan,
    w: &FrequencyWeight,
) -> CoefficientGrid {
    let sr = plan.sample_rate();
    let elems = plan.elements();
    coeffs.map(|k, l, c| c * w.eval(elems[k].bin_frequency(l, sr)))
}

/// Weighted coefficients of one band with the dual frame of its plan.
#[derive(Clone, Debug)]
pub struct WeightedBand {
    pub coeffs: CoefficientGrid,
    pub dual: DualPlan,
}

/// Reconstruction output and its diagnostics.
#[derive(Clone, Debug)]
pub struct WeightedReconstruction {
    pub signal: Signal,
    /// Energy of the band sum that fell on `p(ν) = 0` bins, relative to its total.
    pub dead_bin_energy: f64,
    pub warning: Option<String>,
}

/// The band-summed expansion before the global normalization.
fn band_expansion(
    band: &WeightedBand,
    w: &FrequencyWeight,
    epsilon: f64,
) -> Result<Vec<Complex64>, GaborError> {
    let plan = band.dual.plan();
    let sr = plan.sample_rate();
    let elems = plan.elements();
    let restored = band.coeffs.map(|k, l, c| {
        let wt = w.eval(elems[k].bin_frequency(l, sr));
        if wt >= epsilon {
            c / wt
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    gabor::synthesize_complex(&restored, &band.dual)
}

/// Weighted multi-band reconstruction; `bands[p]` pairs with `weights.weight(p)`.
pub fn reconstruct_weighted(
    bands: &[WeightedBand],
    weights: &BandWeightSet,
) -> Result<WeightedReconstruction, WeightedReconError> {
    let first = bands.first().ok_or(WeightedReconError::NoBands)?;
    if bands.len() != weights.len() {
        return Err(WeightedReconError::BandCount {
            bands: bands.len(),
            weights: weights.len(),
        });
    }
    let n = first.dual.plan().signal_length();
    let sr = first.dual.plan().sample_rate();
    for (p, b) in bands.iter().enumerate() {
        let plan = b.dual.plan();
        if plan.signal_length() != n {
            return Err(WeightedReconError::LengthMismatch {
                band: p,
                got: plan.signal_length(),
                expected: n,
            });
        }
        if plan.sample_rate() != sr {
            return Err(WeightedReconError::RateMismatch {
                band: p,
                got: plan.sample_rate(),
                expected: sr,
            });
        }
        if !b.coeffs.belongs_to(plan) {
            return Err(GaborError::PlanMismatch.into());
        }
    }

    let expansions = bands
        .par_iter()
        .enumerate()
        .map(|(p, b)| band_expansion(b, weights.weight(p), weights.epsilon()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sum = vec![Complex64::new(0.0, 0.0); n];
    for e in &expansions {
        for (s, v) in sum.iter_mut().zip(e) {
            *s += v;
        }
    }

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut sum);
    let total: f64 = sum.iter().map(|c| c.norm_sqr()).sum();
    let mut dead = 0.0;
    for (i, c) in sum.iter_mut().enumerate() {
        let nu = i.min(n - i) as f64 * sr / n as f64;
        match weights.count_active(nu) {
            0 => {
                dead += c.norm_sqr();
                *c = Complex64::new(0.0, 0.0);
            }
            1 => {}
            count => *c /= count as f64,
        }
    }
    planner.plan_fft_inverse(n).process(&mut sum);
    let scale = 1.0 / n as f64;
    for c in sum.iter_mut() {
        *c *= scale;
    }

    let dead_bin_energy = if total > 0.0 { dead / total } else { 0.0 };
    let warning = (dead_bin_energy > DEAD_BIN_ENERGY_TOL).then(|| {
        format!("{dead_bin_energy:.3e} of the band-sum energy fell on bins with no active band")
    });
    Ok(WeightedReconstruction {
        signal: real_part(&sum, sr)?,
        dead_bin_energy,
        warning,
    })
}

/// Maximum absolute and root-mean-square sample differences.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconError {
    pub max_abs: f64,
    pub rms: f64,
    /// `approx - original`.
    pub error_signal: Signal,
}

pub fn error_metrics(original: &Signal, approx: &Signal) -> Result<ReconError, WeightedReconError> {
    if original.len() != approx.len() {
        return Err(WeightedReconError::SignalLength(
            original.len(),
            approx.len(),
        ));
    }
    let diff: Vec<f64> = approx
        .samples()
        .iter()
        .zip(original.samples())
        .map(|(a, b)| a - b)
        .collect();
    let max_abs = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let rms = (diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64).sqrt();
    Ok(ReconError {
        max_abs,
        rms,
        error_signal: Signal::new(diff, original.sample_rate())?,
    })
}

/// Fraction of a signal's energy whose (aliased) frequency lies within
/// `half_width` Hz of `center`.
pub fn energy_fraction_near(signal: &Signal, center: f64, half_width: f64) -> f64 {
    let n = signal.len();
    let mut spec: Vec<Complex64> = signal
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut spec);
    let sr = signal.sample_rate();
    let mut near = 0.0;
    let mut total = 0.0;
    for (i, c) in spec.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let nu = i.min(n - i) as f64 * sr / n as f64;
        if (nu - center).abs() <= half_width {
            near += e;
        }
    }
    if total > 0.0 {
        near / total
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisplayMode {
    /// `|Σ_p c^p| / Σ_p w^p`
    Mean,
    /// `sqrt(Σ_p |c^p|²) / Σ_p w^p`
    Energy,
}

/// Merge the weighted coefficients `(c^p, w^p)` found at one display cell.
pub fn merge_display(cells: &[(Complex64, f64)], mode: DisplayMode) -> f64 {
    let wsum: f64 = cells.iter().map(|c| c.1).sum();
    if wsum.is_nan() || wsum <= 0.0 {
        return 0.0;
    }
    match mode {
        DisplayMode::Mean => cells.iter().map(|c| c.0).sum::<Complex64>().norm() / wsum,
        DisplayMode::Energy => cells.iter().map(|c| c.0.norm_sqr()).sum::<f64>().sqrt() / wsum,
    }
}

/// Common display lattice: `frames` columns every `hop` samples, `bins` frequency rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DisplayLattice {
    pub hop: usize,
    pub frames: usize,
    pub bins: usize,
}

/// One band's weighted grid as seen by the display merger.
pub struct DisplayBand<'a> {
    pub coeffs: &'a CoefficientGrid,
    pub plan: &'a NsgfPlan,
    pub weight: &'a FrequencyWeight,
}

/// Resample every band onto the lattice (nearest frame centre, nearest bin)
/// and merge; result is indexed `[frame][bin]`.
pub fn display_coefficients(
    bands: &[DisplayBand<'_>],
    lattice: DisplayLattice,
    mode: DisplayMode,
) -> Vec<Vec<f64>> {
    (0..lattice.frames)
        .map(|j| {
            let t = (j * lattice.hop) as f64;
            let frames: Vec<usize> = bands.iter().map(|b| nearest_frame(b.plan, t)).collect();
            (0..lattice.bins)
                .map(|i| {
                    let cells: Vec<(Complex64, f64)> = bands
                        .iter()
                        .zip(&frames)
                        .map(|(b, &k)| {
                            let e = &b.plan.elements()[k];
                            let m = e.channels();
                            let l =
                                ((i as f64 * m as f64 / lattice.bins as f64).round() as usize) % m;
                            let nu = e.bin_frequency(l, b.plan.sample_rate());
                            (b.coeffs.rows()[k][l], b.weight.eval(nu))
                        })
                        .collect();
                    merge_display(&cells, mode)
                })
                .collect()
        })
        .collect()
}

fn nearest_frame(plan: &NsgfPlan, t: f64) -> usize {
    let n = plan.signal_length() as f64;
    let dist = |c: f64| {
        let d = (c - t).rem_euclid(n);
        d.min(n - d)
    };
    plan.elements()
        .iter()
        .enumerate()
        .min_by(|a, b| dist(a.1.center()).total_cmp(&dist(b.1.center())))
        .map(|(k, _)| k)
        .expect("plans are nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::{make_band_weights, Side, WeightKind, DEFAULT_EPSILON};
    use crate::gabor::{analyze, dual_plan, synthesize};
    use crate::signal::{make_test_signal, TestSignal};
    use crate::window::{make_window, WindowFamily};

    const SR: f64 = 8000.0;

    fn noise(n: usize, seed: u64) -> Signal {
        make_test_signal(
            &TestSignal::Noise {
                amplitude: 1.0,
                seed,
            },
            n,
            SR,
        )
        .unwrap()
    }

    fn uniform(len: usize, n: usize) -> NsgfPlan {
        NsgfPlan::uniform(
            make_window(WindowFamily::Hann, len).unwrap(),
            len / 2,
            n,
            SR,
        )
        .unwrap()
    }

    fn band(f: &Signal, plan: &NsgfPlan, w: &FrequencyWeight) -> WeightedBand {
        let c = analyze(f, plan).unwrap();
        WeightedBand {
            coeffs: weight_coefficients(&c, plan, w),
            dual: dual_plan(plan).unwrap(),
        }
    }

    #[test]
    fn weighting_examples() {
        let plan = uniform(64, 512);
        let f = noise(512, 1);
        let c = analyze(&f, &plan).unwrap();
        assert_eq!(weight_coefficients(&c, &plan, &FrequencyWeight::unit()), c);
        assert_eq!(
            weight_coefficients(&c, &plan, &FrequencyWeight::Constant(0.0)).energy(),
            0.0
        );
        let low = FrequencyWeight::Binary {
            cut: 300.0,
            side: Side::Low,
        };
        let masked = weight_coefficients(&c, &plan, &low);
        for (row, e) in masked.rows().iter().zip(plan.elements()) {
            for (l, v) in row.iter().enumerate() {
                if e.bin_frequency(l, SR) > 300.0 {
                    assert_eq!(*v, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn single_unit_band_is_plain_synthesis() {
        let plan = uniform(128, 1024);
        let f = noise(1024, 2);
        let set = BandWeightSet::new(vec![FrequencyWeight::unit()], DEFAULT_EPSILON).unwrap();
        let out = reconstruct_weighted(&[band(&f, &plan, &FrequencyWeight::unit())], &set).unwrap();
        let plain = synthesize(&analyze(&f, &plan).unwrap(), &dual_plan(&plan).unwrap()).unwrap();
        let e = error_metrics(&f, &out.signal).unwrap();
        assert!(e.max_abs <= 1e-10 * f.max_abs());
        assert!(error_metrics(&plain, &out.signal).unwrap().max_abs <= 1e-10);
        assert!(out.warning.is_none());
    }

    #[test]
    fn complementary_binary_on_shared_plan_is_exact() {
        let plan = uniform(128, 2048);
        let f = noise(2048, 3);
        let set = make_band_weights(WeightKind::Binary, 300.0, 0.0, DEFAULT_EPSILON, SR).unwrap();
        let bands: Vec<_> = set.weights().iter().map(|w| band(&f, &plan, w)).collect();
        let out = reconstruct_weighted(&bands, &set).unwrap();
        assert!(error_metrics(&f, &out.signal).unwrap().max_abs <= 1e-10 * f.max_abs());
    }

    #[test]
    fn semi_normalized_weights_on_shared_plan_are_exact() {
        let plan = uniform(64, 1024);
        let f = noise(1024, 4);
        let w1 = FrequencyWeight::Table {
            step_hz: 100.0,
            values: vec![0.5, 2.0, 1.0, 0.7, 1.9],
        };
        let w2 = FrequencyWeight::Table {
            step_hz: 250.0,
            values: vec![1.5, 0.6, 1.2],
        };
        let set = BandWeightSet::new(vec![w1, w2], DEFAULT_EPSILON).unwrap();
        let bands: Vec<_> = set.weights().iter().map(|w| band(&f, &plan, w)).collect();
        let out = reconstruct_weighted(&bands, &set).unwrap();
        assert!(error_metrics(&f, &out.signal).unwrap().max_abs <= 1e-10 * f.max_abs());
    }

    #[test]
    fn dead_bins_are_zeroed_and_reported() {
        let plan = uniform(64, 1024);
        let f = noise(1024, 5);
        let low = FrequencyWeight::Binary {
            cut: 1000.0,
            side: Side::Low,
        };
        let set = BandWeightSet::new(vec![low.clone()], DEFAULT_EPSILON).unwrap();
        let out = reconstruct_weighted(&[band(&f, &plan, &low)], &set).unwrap();
        assert!(out.warning.is_some());
        assert!(energy_fraction_near(&out.signal, 3000.0, 1990.0) < 1e-20);
    }

    #[test]
    fn mismatched_bands_are_rejected() {
        let f = noise(1024, 6);
        let g = noise(2048, 6);
        let set = make_band_weights(WeightKind::Binary, 300.0, 0.0, DEFAULT_EPSILON, SR).unwrap();
        let b1 = band(&f, &uniform(64, 1024), set.weight(0));
        let b2 = band(&g, &uniform(64, 2048), set.weight(1));
        assert!(matches!(
            reconstruct_weighted(&[b1.clone(), b2], &set),
            Err(WeightedReconError::LengthMismatch { .. })
        ));
        assert!(matches!(
            reconstruct_weighted(&[b1], &set),
            Err(WeightedReconError::BandCount { .. })
        ));
    }

    #[test]
    fn metric_examples() {
        let f = noise(100, 7);
        let e = error_metrics(&f, &f).unwrap();
        assert_eq!((e.max_abs, e.rms), (0.0, 0.0));
        let shifted = Signal::new(f.samples().iter().map(|x| x + 0.1).collect(), SR).unwrap();
        let e = error_metrics(&f, &shifted).unwrap();
        assert!((e.max_abs - 0.1).abs() < 1e-12 && (e.rms - 0.1).abs() < 1e-12);
        assert!(error_metrics(&f, &noise(99, 7)).is_err());
    }

    #[test]
    fn display_merging() {
        let c = Complex64::new(3.0, -4.0);
        assert_eq!(merge_display(&[(c, 1.0)], DisplayMode::Mean), 5.0);
        assert_eq!(merge_display(&[(c, 1.0), (c, 1.0)], DisplayMode::Mean), 5.0);
        assert_eq!(
            merge_display(&[(c, 1.0), (-c, 1.0)], DisplayMode::Mean),
            0.0
        );
        let energy = merge_display(&[(c, 1.0), (-c, 1.0)], DisplayMode::Energy);
        assert!((energy - 5.0 * 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(merge_display(&[(c, 0.0)], DisplayMode::Energy), 0.0);
    }

    #[test]
    fn display_of_single_unit_band_is_magnitude() {
        let plan = uniform(64, 512);
        let f = noise(512, 8);
        let c = analyze(&f, &plan).unwrap();
        let unit = FrequencyWeight::unit();
        let lattice = DisplayLattice {
            hop: 32,
            frames: 16,
            bins: 64,
        };
        let d = display_coefficients(
            &[DisplayBand {
                coeffs: &c,
                plan: &plan,
                weight: &unit,
            }],
            lattice,
            DisplayMode::Mean,
        );
        // frame centres sit at 32k + 31.5, so display frame j maps to plan frame j - 1 (wrapping)
        for (j, row) in d.iter().enumerate() {
            let k = nearest_frame(&plan, (j * 32) as f64);
            for (v, coeff) in row.iter().zip(&c.rows()[k]) {
                assert!((v - coeff.norm()).abs() < 1e-12);
            }
        }
    }
}
