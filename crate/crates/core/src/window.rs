//! Symmetric analysis windows and their discrete rescaling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("unknown window family `{0}`")]
    UnknownFamily(String),
    #[error("window length must be at least 1")]
    ZeroLength,
    #[error("scale factor {0} must be positive and finite")]
    BadScale(f64),
    #[error("{0} window of length {1} is identically zero")]
    Degenerate(WindowFamily, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WindowFamily {
    Hann,
    Hamming,
    Blackman,
    Rect,
}

impl WindowFamily {
    pub const ALL: [WindowFamily; 4] = [Self::Hann, Self::Hamming, Self::Blackman, Self::Rect];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hann => "hann",
            Self::Hamming => "hamming",
            Self::Blackman => "blackman",
            Self::Rect => "rect",
        }
    }

    /// Stable one-byte code used by the coefficient file format.
    pub fn code(self) -> u8 {
        match self {
            Self::Hann => 0,
            Self::Hamming => 1,
            Self::Blackman => 2,
            Self::Rect => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.code() == code)
    }

    /// Closed form of the symmetric window at sample `n` of a length-`len` window.
    pub fn value(self, n: usize, len: usize) -> f64 {
        if len == 1 {
            return 1.0;
        }
        let x = 2.0 * PI * n as f64 / (len - 1) as f64;
        let v = match self {
            Self::Hann => 0.5 - 0.5 * x.cos(),
            Self::Hamming => 0.54 - 0.46 * x.cos(),
            Self::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
            Self::Rect => 1.0,
        };
        v.max(0.0)
    }
}

impl fmt::Display for WindowFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowFamily {
    type Err = WindowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| WindowError::UnknownFamily(s.to_string()))
    }
}

/// A finite, symmetric, not-identically-zero window.
///
/// `gain` records the amplitude factor applied on top of the family's
/// closed form (1 for freshly made windows, `1/sqrt(s)` after scaling).
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    values: Vec<f64>,
    family: WindowFamily,
    gain: f64,
}

impl Window {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn family(&self) -> WindowFamily {
        self.family
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Build a window from its closed form at `len` samples, times `gain`.
    pub fn with_gain(family: WindowFamily, len: usize, gain: f64) -> Result<Self, WindowError> {
        if len == 0 {
            return Err(WindowError::ZeroLength);
        }
        if !(gain.is_finite() && gain > 0.0) {
            return Err(WindowError::BadScale(gain));
        }
        // mirror the first half so symmetry is exact
        let mut values = vec![0.0; len];
        for n in 0..len.div_ceil(2) {
            let v = gain * family.value(n, len);
            values[n] = v;
            values[len - 1 - n] = v;
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(WindowError::Degenerate(family, len));
        }
        Ok(Self {
            values,
            family,
            gain,
        })
    }
}

/// Standard symmetric window of the given family.
pub fn make_window(family: WindowFamily, len: usize) -> Result<Window, WindowError> {
    Window::with_gain(family, len, 1.0)
}

/// Parse-and-build convenience for user-facing family names.
pub fn make_window_named(family: &str, len: usize) -> Result<Window, WindowError> {
    make_window(family.parse()?, len)
}

/// Dilate a window by `s`: regenerate the family at `round(s * L)` samples
/// and multiply by `1/sqrt(s)` so the discrete energy is roughly preserved.
pub fn scale_window(g: &Window, s: f64) -> Result<Window, WindowError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(WindowError::BadScale(s));
    }
    let len = (s * g.len() as f64).round() as usize;
    if len == 0 {
        return Err(WindowError::ZeroLength);
    }
    if s == 1.0 {
        return Ok(g.clone());
    }
    Window::with_gain(g.family, len, g.gain / s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rect_one() {
        assert_eq!(make_window(WindowFamily::Rect, 1).unwrap().values(), &[1.0]);
    }

    #[test]
    fn hann_eight_matches_closed_form() {
        let w = make_window(WindowFamily::Hann, 8).unwrap();
        for n in 0..8 {
            let expected = 0.5 * (1.0 - (2.0 * PI * n as f64 / 7.0).cos());
            assert!((w.values()[n] - expected).abs() < 1e-15, "n={n}");
        }
    }

    #[test]
    fn hamming_4096_symmetric_peak_centred() {
        let w = make_window(WindowFamily::Hamming, 4096).unwrap();
        assert_eq!(w.len(), 4096);
        for i in 0..4096 {
            assert!((w.values()[i] - w.values()[4095 - i]).abs() <= 1e-12);
        }
        let max = w.values().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(w.values()[2047], max);
        assert_eq!(w.values()[2048], max);
    }

    #[test]
    fn errors() {
        assert_eq!(
            make_window(WindowFamily::Hann, 0),
            Err(WindowError::ZeroLength)
        );
        assert!(matches!(
            make_window_named("kaiser", 8),
            Err(WindowError::UnknownFamily(_))
        ));
        let w = make_window(WindowFamily::Rect, 1).unwrap();
        assert_eq!(scale_window(&w, 0.25), Err(WindowError::ZeroLength));
        assert!(scale_window(&w, -1.0).is_err());
        assert!(matches!(
            make_window(WindowFamily::Hann, 2),
            Err(WindowError::Degenerate(..))
        ));
    }

    #[test]
    fn scaling_examples() {
        let h = make_window(WindowFamily::Hann, 1024).unwrap();
        assert_eq!(scale_window(&h, 1.0).unwrap(), h);

        let h2 = scale_window(&h, 2.0).unwrap();
        assert_eq!(h2.len(), 2048);
        assert!((h2.gain() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let ratio = h2.energy() / h.energy();
        assert!((0.99..=1.01).contains(&ratio), "ratio {ratio}");

        let r = make_window(WindowFamily::Rect, 4).unwrap();
        let r2 = scale_window(&r, 0.5).unwrap();
        assert_eq!(r2.len(), 2);
        assert!((r2.energy() - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn scaled_energy_is_preserved(
            fam in prop::sample::select(vec![WindowFamily::Hann, WindowFamily::Hamming, WindowFamily::Blackman]),
            len in 512usize..4096,
            s in 0.25f64..4.0,
        ) {
            let g = make_window(fam, len).unwrap();
            let gs = scale_window(&g, s).unwrap();
            let ratio = gs.energy() / g.energy();
            prop_assert!((0.99..=1.01).contains(&ratio), "ratio {}", ratio);
        }

        #[test]
        fn windows_are_symmetric(fam in prop::sample::select(WindowFamily::ALL.to_vec()), len in 3usize..600) {
            let w = make_window(fam, len).unwrap();
            prop_assert!(w.values().iter().all(|v| v.is_finite()));
            prop_assert!(w.values().iter().any(|&v| v != 0.0));
            for i in 0..len {
                prop_assert!((w.values()[i] - w.values()[len - 1 - i]).abs() <= 1e-12);
            }
        }
    }
}
