//! Sampled real signals, WAV I/O and deterministic test-signal generators.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Divisor used for 16-bit PCM scaling (asymmetric range `[-1, 1)`).
pub const PCM16_SCALE: f64 = 32768.0;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("cannot read audio file: {0}")]
    Unreadable(String),
    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),
    #[error("audio file contains no samples")]
    ZeroLength,
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("invalid signal: {0}")]
    Invalid(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

/// A finite, nonempty, real-valued sampled waveform.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Invalid(
                "signal must have at least one sample".into(),
            ));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::Invalid(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(SignalError::Invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Multiply every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, SignalError> {
        Self::new(
            self.samples.iter().map(|x| x * gain).collect(),
            self.sample_rate,
        )
    }

    /// Concatenate two signals sharing a sample rate.
    pub fn concat(&self, other: &Signal) -> Result<Self, SignalError> {
        if self.sample_rate != other.sample_rate {
            return Err(SignalError::Invalid("sample rates differ".into()));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Self::new(samples, self.sample_rate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

/// Outcome of a WAV write.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WriteReport {
    /// Number of samples clamped into the PCM16 range.
    pub clipped: usize,
}

/// Read a PCM16 or float32 WAV file, averaging channels down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal, SignalError> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => SignalError::Unreadable(format!("{}: {io}", path.display())),
        hound::Error::Unsupported => {
            SignalError::UnsupportedCodec("unsupported WAV variant".into())
        }
        other => SignalError::Unreadable(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(SignalError::Unreadable(
            "WAV header declares zero channels".into(),
        ));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<Result<_, _>>()
            .map_err(|e| SignalError::Unreadable(e.to_string()))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| SignalError::Unreadable(e.to_string()))?,
        (fmt, bits) => {
            return Err(SignalError::UnsupportedCodec(format!("{fmt:?} {bits}-bit")));
        }
    };
    if interleaved.len() < channels {
        return Err(SignalError::ZeroLength);
    }
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Signal::new(mono, spec.sample_rate as f64)
}

/// Quantize a sample to PCM16, returning the code and whether it clipped.
pub fn quantize_pcm16(x: f64) -> (i16, bool) {
    let v = (x * PCM16_SCALE).round();
    if v > i16::MAX as f64 {
        (i16::MAX, true)
    } else if v < i16::MIN as f64 {
        (i16::MIN, true)
    } else {
        (v as i16, false)
    }
}

/// Write a mono WAV file.
pub fn write_wav(
    signal: &Signal,
    path: impl AsRef<Path>,
    format: WavFormat,
) -> Result<WriteReport, SignalError> {
    let rate = signal.sample_rate().round();
    if rate < 1.0 || rate > u32::MAX as f64 {
        return Err(SignalError::Invalid(format!(
            "sample rate {} not storable",
            signal.sample_rate()
        )));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => hound::SampleFormat::Int,
            WavFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let io = |e: hound::Error| SignalError::Io(e.to_string());
    let mut writer = hound::WavWriter::create(path.as_ref(), spec).map_err(io)?;
    let mut report = WriteReport::default();
    for &x in signal.samples() {
        match format {
            WavFormat::Pcm16 => {
                let (code, clipped) = quantize_pcm16(x);
                report.clipped += clipped as usize;
                writer.write_sample(code).map_err(io)?;
            }
            WavFormat::Float32 => writer.write_sample(x as f32).map_err(io)?,
        }
    }
    writer.finalize().map_err(io)?;
    Ok(report)
}

/// Parameters for the synthetic generators.
#[derive(Clone, Debug, PartialEq)]
pub enum TestSignal {
    /// Unit-peak sine (or cosine-phase) tone.
    Sine {
        freq_hz: f64,
        amplitude: f64,
        phase: f64,
    },
    /// Unit impulses every `period` samples, starting at `offset`.
    ImpulseTrain {
        period: usize,
        offset: usize,
        amplitude: f64,
    },
    /// Linear chirp from `f0_hz` to `f1_hz` over the signal length.
    Chirp {
        f0_hz: f64,
        f1_hz: f64,
        amplitude: f64,
    },
    /// Half-amplitude tone plus half-amplitude click train.
    TwoBandMix { tone_hz: f64, click_period: usize },
    /// Uniform white noise in `[-amplitude, amplitude)`.
    Noise { amplitude: f64, seed: u64 },
}

impl TestSignal {
    pub fn sine(freq_hz: f64) -> Self {
        Self::Sine {
            freq_hz,
            amplitude: 1.0,
            phase: 0.0,
        }
    }

    pub fn impulse_train(period: usize) -> Self {
        Self::ImpulseTrain {
            period,
            offset: 0,
            amplitude: 1.0,
        }
    }

    /// The 80 Hz + 2 kHz-click mix used throughout the two-band tests.
    pub fn default_two_band_mix() -> Self {
        Self::TwoBandMix {
            tone_hz: 80.0,
            click_period: 2205,
        }
    }
}

/// Generate a deterministic synthetic signal.
pub fn make_test_signal(
    kind: &TestSignal,
    length: usize,
    sample_rate: f64,
) -> Result<Signal, SignalError> {
    if length == 0 {
        return Err(SignalError::InvalidParams("length must be positive".into()));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(SignalError::InvalidParams(
            "sample rate must be positive".into(),
        ));
    }
    let nyquist = sample_rate / 2.0;
    let check_freq = |f: f64| {
        if f.is_finite() && (0.0..nyquist).contains(&f) {
            Ok(())
        } else {
            Err(SignalError::InvalidParams(format!(
                "frequency {f} Hz outside [0, {nyquist})"
            )))
        }
    };
    let samples: Vec<f64> = match *kind {
        TestSignal::Sine {
            freq_hz,
            amplitude,
            phase,
        } => {
            check_freq(freq_hz)?;
            (0..length)
                .map(|n| amplitude * (2.0 * PI * freq_hz * n as f64 / sample_rate + phase).sin())
                .collect()
        }
        TestSignal::ImpulseTrain {
            period,
            offset,
            amplitude,
        } => {
            if period == 0 {
                return Err(SignalError::InvalidParams(
                    "impulse period must be positive".into(),
                ));
            }
            (0..length)
                .map(|n| {
                    if n >= offset && (n - offset) % period == 0 {
                        amplitude
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        TestSignal::Chirp {
            f0_hz,
            f1_hz,
            amplitude,
        } => {
            check_freq(f0_hz)?;
            check_freq(f1_hz)?;
            let duration = length as f64 / sample_rate;
            let rate = (f1_hz - f0_hz) / duration;
            (0..length)
                .map(|n| {
                    let t = n as f64 / sample_rate;
                    amplitude * (2.0 * PI * (f0_hz * t + 0.5 * rate * t * t)).sin()
                })
                .collect()
        }
        TestSignal::TwoBandMix {
            tone_hz,
            click_period,
        } => {
            let tone = make_test_signal(&TestSignal::sine(tone_hz), length, sample_rate)?;
            let clicks = make_test_signal(
                &TestSignal::impulse_train(click_period),
                length,
                sample_rate,
            )?;
            tone.samples()
                .iter()
                .zip(clicks.samples())
                .map(|(a, b)| 0.5 * a + 0.5 * b)
                .collect()
        }
        TestSignal::Noise { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..length)
                .map(|_| amplitude * rng.random_range(-1.0..1.0))
                .collect()
        }
    };
    Signal::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_i16(path: &Path, channels: u16, data: &[i16]) {
        let spec = hound::WavSpec {
            channels,
            sample_rate: 44100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &d in data {
            w.write_sample(d).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_i16(&p, 1, &[0, 16384, -32768]);
        let s = read_wav(&p).unwrap();
        assert_eq!(s.samples(), &[0.0, 0.5, -1.0]);
        assert_eq!(s.sample_rate(), 44100.0);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for _ in 0..3 {
            w.write_sample(1.0f32).unwrap();
            w.write_sample(0.0f32).unwrap();
        }
        w.finalize().unwrap();
        let s = read_wav(&p).unwrap();
        assert_eq!(s.samples(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn read_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_wav(dir.path().join("missing.wav")),
            Err(SignalError::Unreadable(_))
        ));

        let empty = dir.path().join("empty.wav");
        write_i16(&empty, 1, &[]);
        assert!(matches!(read_wav(&empty), Err(SignalError::ZeroLength)));

        let p24 = dir.path().join("p24.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p24, spec).unwrap();
        w.write_sample(5i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&p24),
            Err(SignalError::UnsupportedCodec(_))
        ));
    }

    #[test]
    fn clipping_is_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.wav");
        let s = Signal::new(vec![0.0, 1.5, -0.25], 44100.0).unwrap();
        let report = write_wav(&s, &p, WavFormat::Pcm16).unwrap();
        assert_eq!(report.clipped, 1);
        let back = read_wav(&p).unwrap();
        assert_eq!(back.samples()[1], 32767.0 / 32768.0);
    }

    #[test]
    fn signal_invariants() {
        assert!(Signal::new(vec![], 1.0).is_err());
        assert!(Signal::new(vec![0.0], 0.0).is_err());
        assert!(Signal::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn generators() {
        let s = make_test_signal(&TestSignal::sine(440.0), 44100, 44100.0).unwrap();
        assert!((s.max_abs() - 1.0).abs() < 1e-6);

        let imp = make_test_signal(&TestSignal::impulse_train(4096), 20000, 44100.0).unwrap();
        for (n, &x) in imp.samples().iter().enumerate() {
            assert_eq!(x != 0.0, n % 4096 == 0);
        }

        let mix = make_test_signal(
            &TestSignal::TwoBandMix {
                tone_hz: 80.0,
                click_period: 2000,
            },
            5000,
            44100.0,
        )
        .unwrap();
        let tone = make_test_signal(&TestSignal::sine(80.0), 5000, 44100.0).unwrap();
        for n in 0..5000 {
            let click = if n % 2000 == 0 { 1.0 } else { 0.0 };
            assert_eq!(mix.samples()[n], 0.5 * tone.samples()[n] + 0.5 * click);
        }

        assert!(make_test_signal(&TestSignal::sine(30000.0), 10, 44100.0).is_err());
        assert!(make_test_signal(&TestSignal::impulse_train(0), 10, 44100.0).is_err());

        let a = make_test_signal(
            &TestSignal::Noise {
                amplitude: 1.0,
                seed: 3,
            },
            64,
            8000.0,
        )
        .unwrap();
        let b = make_test_signal(
            &TestSignal::Noise {
                amplitude: 1.0,
                seed: 3,
            },
            64,
            8000.0,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
