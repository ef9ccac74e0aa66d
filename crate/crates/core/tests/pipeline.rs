use std::sync::Arc;

use proptest::prelude::*;
use tfadapt::bands::{
    make_band_weights, BandWeightSet, FrequencyWeight, WeightKind, DEFAULT_EPSILON,
};
use tfadapt::coeff_io::{read_grid, write_grid};
use tfadapt::gabor::{analyze, build_plan_with, dual_plan, synthesize, HopRule, NsgfPlan};
use tfadapt::recon::{
    display_coefficients, error_metrics, reconstruct_weighted, weight_coefficients, DisplayBand,
    DisplayLattice, DisplayMode, WeightedBand,
};
use tfadapt::signal::{make_test_signal, read_wav, write_wav, Signal, TestSignal, WavFormat};
use tfadapt::window::{make_window, WindowFamily};

const SR: f64 = 16000.0;

fn plan_from_pattern(n: usize, lens: &[usize], pattern: &[usize]) -> NsgfPlan {
    let windows: Vec<_> = lens
        .iter()
        .map(|&l| Arc::new(make_window(WindowFamily::Hann, l).unwrap()))
        .collect();
    let mut i = 0;
    build_plan_with(
        |_| {
            let w = windows[pattern[i % pattern.len()] % windows.len()].clone();
            i += 1;
            w
        },
        HopRule::HalfMinOverlap,
        n,
        SR,
    )
    .unwrap()
}

fn weighted_bands(f: &Signal, plans: &[NsgfPlan], set: &BandWeightSet) -> Vec<WeightedBand> {
    plans
        .iter()
        .zip(set.weights())
        .map(|(p, w)| WeightedBand {
            coeffs: weight_coefficients(&analyze(f, p).unwrap(), p, w),
            dual: dual_plan(p).unwrap(),
        })
        .collect()
}

#[test]
fn wav_analysis_file_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let f = make_test_signal(
        &TestSignal::Chirp {
            f0_hz: 100.0,
            f1_hz: 6000.0,
            amplitude: 0.7,
        },
        12000,
        SR,
    )
    .unwrap();
    let wav = dir.path().join("chirp.wav");
    write_wav(&f, &wav, WavFormat::Float32).unwrap();
    let g = read_wav(&wav).unwrap();

    let plan = plan_from_pattern(g.len(), &[128, 512, 1024], &[0, 0, 2, 1, 2, 0, 1]);
    let mut bytes = Vec::new();
    write_grid(&mut bytes, &plan, &analyze(&g, &plan).unwrap()).unwrap();
    let (plan2, grid2) = read_grid(bytes.as_slice()).unwrap();
    let h = synthesize(&grid2, &dual_plan(&plan2).unwrap()).unwrap();
    assert!(error_metrics(&g, &h).unwrap().max_abs <= 1e-10 * g.max_abs());
}

#[test]
fn shared_plan_display_matches_plain_magnitudes() {
    let f = make_test_signal(
        &TestSignal::Noise {
            amplitude: 1.0,
            seed: 2,
        },
        4096,
        SR,
    )
    .unwrap();
    let plan =
        NsgfPlan::uniform(make_window(WindowFamily::Hann, 256).unwrap(), 128, 4096, SR).unwrap();
    let c = analyze(&f, &plan).unwrap();
    let set = make_band_weights(WeightKind::Binary, 1000.0, 0.0, DEFAULT_EPSILON, SR).unwrap();
    let weighted: Vec<_> = set
        .weights()
        .iter()
        .map(|w| weight_coefficients(&c, &plan, w))
        .collect();
    let bands: Vec<DisplayBand> = weighted
        .iter()
        .zip(set.weights())
        .map(|(g, w)| DisplayBand {
            coeffs: g,
            plan: &plan,
            weight: w,
        })
        .collect();
    let lattice = DisplayLattice {
        hop: 128,
        frames: 32,
        bins: 256,
    };
    let plain = display_coefficients(
        &[DisplayBand {
            coeffs: &c,
            plan: &plan,
            weight: &FrequencyWeight::unit(),
        }],
        lattice,
        DisplayMode::Mean,
    );
    for mode in [DisplayMode::Mean, DisplayMode::Energy] {
        let d = display_coefficients(&bands, lattice, mode);
        for (a, b) in d.iter().flatten().zip(plain.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pcm16_wav_roundtrip_then_perfect_reconstruction(
        seed in any::<u64>(),
        len in 2048usize..6000,
        pattern in proptest::collection::vec(0usize..3, 1..8),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let f = make_test_signal(&TestSignal::Noise { amplitude: 0.9, seed }, len, SR).unwrap();
        let wav = dir.path().join("x.wav");
        write_wav(&f, &wav, WavFormat::Pcm16).unwrap();
        let g = read_wav(&wav).unwrap();
        prop_assert!(error_metrics(&f, &g).unwrap().max_abs <= 1.0 / 32768.0);

        let plan = plan_from_pattern(len, &[64, 256, 1024], &pattern);
        let h = synthesize(&analyze(&g, &plan).unwrap(), &dual_plan(&plan).unwrap()).unwrap();
        prop_assert!(error_metrics(&g, &h).unwrap().max_abs <= 1e-10 * g.max_abs());
    }

    #[test]
    fn weighted_reconstruction_is_linear(
        seeds in (any::<u64>(), any::<u64>()),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        pattern in proptest::collection::vec(0usize..2, 1..6),
    ) {
        let n = 4096;
        let f = make_test_signal(&TestSignal::Noise { amplitude: 1.0, seed: seeds.0 }, n, SR).unwrap();
        let g = make_test_signal(&TestSignal::Noise { amplitude: 1.0, seed: seeds.1 }, n, SR).unwrap();
        let mix = Signal::new(f.samples().iter().zip(g.samples()).map(|(x, y)| a * x + b * y).collect(), SR).unwrap();
        let plans = [
            NsgfPlan::uniform(make_window(WindowFamily::Hann, 1024).unwrap(), 512, n, SR).unwrap(),
            plan_from_pattern(n, &[128, 256], &pattern),
        ];
        let set = make_band_weights(WeightKind::RaisedCosine, 2000.0, 800.0, DEFAULT_EPSILON, SR).unwrap();
        let r = |s: &Signal| reconstruct_weighted(&weighted_bands(s, &plans, &set), &set).unwrap().signal;
        let (rf, rg, rm) = (r(&f), r(&g), r(&mix));
        for i in 0..n {
            let expected = a * rf.samples()[i] + b * rg.samples()[i];
            prop_assert!((rm.samples()[i] - expected).abs() <= 1e-10);
        }
    }
}
