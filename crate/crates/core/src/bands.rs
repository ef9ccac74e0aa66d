//! Frequency weight functions `w^p(ν)` and the active-band count `p(ν)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default activity threshold ε.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Default cut frequency in Hz.
pub const DEFAULT_CUT_HZ: f64 = 300.0;

#[derive(Debug, Error, PartialEq)]
pub enum BandError {
    #[error("cut frequency {cut} Hz must lie in (0, {nyquist}) Hz")]
    BadCut { cut: f64, nyquist: f64 },
    #[error("transition band [{lo}, {hi}] Hz must lie inside (0, {nyquist}) Hz")]
    BadTransition { lo: f64, hi: f64, nyquist: f64 },
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("weight function is invalid: {0}")]
    BadWeight(String),
    #[error("unknown weight kind `{0}`")]
    UnknownKind(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

/// A nonnegative, finite weight depending on frequency only.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyWeight {
    Constant(f64),
    /// 1 for `ν <= cut` on the low side, the complement on the high side.
    Binary {
        cut: f64,
        side: Side,
    },
    /// Raised-cosine crossover of width `transition` centred on `cut`.
    RaisedCosine {
        cut: f64,
        transition: f64,
        side: Side,
    },
    /// Piecewise-linear lookup sampled every `step_hz`, held constant past the ends.
    Table {
        step_hz: f64,
        values: Vec<f64>,
    },
}

impl FrequencyWeight {
    pub fn unit() -> Self {
        Self::Constant(1.0)
    }

    pub fn eval(&self, nu: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Binary { cut, side } => {
                let low = if nu <= cut { 1.0 } else { 0.0 };
                match side {
                    Side::Low => low,
                    Side::High => 1.0 - low,
                }
            }
            Self::RaisedCosine {
                cut,
                transition,
                side,
            } => {
                let start = cut - transition / 2.0;
                let low = if nu <= start {
                    1.0
                } else if nu >= cut + transition / 2.0 {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (nu - start) / transition).cos())
                };
                match side {
                    Side::Low => low,
                    Side::High => 1.0 - low,
                }
            }
            Self::Table {
                step_hz,
                ref values,
            } => {
                let x = (nu / step_hz).max(0.0);
                let i = x.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap_or(&0.0);
                }
                let frac = x - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    pub fn validate(&self) -> Result<(), BandError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match self {
            Self::Constant(c) if !ok(*c) => Err(BandError::BadWeight(format!("constant {c}"))),
            Self::Binary { cut, .. } if !cut.is_finite() => Err(BandError::BadWeight("cut".into())),
            Self::RaisedCosine { transition, .. }
                if !(transition.is_finite() && *transition > 0.0) =>
            {
                Err(BandError::BadWeight(format!("transition {transition}")))
            }
            Self::Table { step_hz, values } => {
                if !(step_hz.is_finite() && *step_hz > 0.0) || values.is_empty() {
                    Err(BandError::BadWeight(
                        "table needs a positive step and values".into(),
                    ))
                } else if values.iter().any(|v| !ok(*v)) {
                    Err(BandError::BadWeight(
                        "table values must be finite and >= 0".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Named adaptation masks accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskPreset {
    Low300,
    High300,
    None,
}

impl MaskPreset {
    pub fn weight(self) -> FrequencyWeight {
        match self {
            Self::Low300 => FrequencyWeight::Binary {
                cut: DEFAULT_CUT_HZ,
                side: Side::Low,
            },
            Self::High300 => FrequencyWeight::Binary {
                cut: DEFAULT_CUT_HZ,
                side: Side::High,
            },
            Self::None => FrequencyWeight::unit(),
        }
    }
}

impl FromStr for MaskPreset {
    type Err = BandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low300" => Ok(Self::Low300),
            "high300" => Ok(Self::High300),
            "none" => Ok(Self::None),
            other => Err(BandError::UnknownKind(other.into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Binary,
    RaisedCosine,
}

impl FromStr for WeightKind {
    type Err = BandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Self::Binary),
            "raised-cosine" => Ok(Self::RaisedCosine),
            other => Err(BandError::UnknownKind(other.into())),
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Binary => "binary",
            Self::RaisedCosine => "raised-cosine",
        })
    }
}

/// The `P` band weights with their activity threshold ε.
#[derive(Clone, Debug, PartialEq)]
pub struct BandWeightSet {
    weights: Vec<FrequencyWeight>,
    epsilon: f64,
}

impl BandWeightSet {
    pub fn new(weights: Vec<FrequencyWeight>, epsilon: f64) -> Result<Self, BandError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(BandError::BadEpsilon(epsilon));
        }
        if weights.is_empty() {
            return Err(BandError::BadWeight("at least one band is required".into()));
        }
        for w in &weights {
            w.validate()?;
        }
        Ok(Self { weights, epsilon })
    }

    pub fn weights(&self) -> &[FrequencyWeight] {
        &self.weights
    }

    pub fn weight(&self, p: usize) -> &FrequencyWeight {
        &self.weights[p]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `p(ν) = #{p : w^p(ν) >= ε}`.
    pub fn count_active(&self, nu: f64) -> usize {
        self.weights
            .iter()
            .filter(|w| w.eval(nu) >= self.epsilon)
            .count()
    }
}

/// Complementary two-band split at `cut`: band 0 low, band 1 high.
pub fn make_band_weights(
    kind: WeightKind,
    cut: f64,
    transition: f64,
    epsilon: f64,
    sample_rate: f64,
) -> Result<BandWeightSet, BandError> {
    let nyquist = sample_rate / 2.0;
    if !(cut > 0.0 && cut < nyquist) {
        return Err(BandError::BadCut { cut, nyquist });
    }
    let weights = match kind {
        WeightKind::Binary => vec![
            FrequencyWeight::Binary {
                cut,
                side: Side::Low,
            },
            FrequencyWeight::Binary {
                cut,
                side: Side::High,
            },
        ],
        WeightKind::RaisedCosine => {
            let (lo, hi) = (cut - transition / 2.0, cut + transition / 2.0);
            if !(transition > 0.0 && lo > 0.0 && hi < nyquist) {
                return Err(BandError::BadTransition { lo, hi, nyquist });
            }
            vec![
                FrequencyWeight::RaisedCosine {
                    cut,
                    transition,
                    side: Side::Low,
                },
                FrequencyWeight::RaisedCosine {
                    cut,
                    transition,
                    side: Side::High,
                },
            ]
        }
    };
    BandWeightSet::new(weights, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SR: f64 = 44100.0;

    #[test]
    fn binary_pair() {
        let set = make_band_weights(WeightKind::Binary, 300.0, 0.0, DEFAULT_EPSILON, SR).unwrap();
        assert_eq!(set.weight(0).eval(100.0), 1.0);
        assert_eq!(set.weight(1).eval(100.0), 0.0);
        assert_eq!(set.weight(0).eval(300.0), 1.0);
        assert_eq!(set.weight(0).eval(300.0 + 1e-9), 0.0);
        for nu in [0.0, 10.0, 299.9, 300.0, 300.1, 5000.0, 22049.0] {
            assert_eq!(set.weight(1).eval(nu), 1.0 - set.weight(0).eval(nu));
            assert_eq!(set.count_active(nu), 1);
        }
    }

    #[test]
    fn raised_cosine_pair() {
        let set = make_band_weights(WeightKind::RaisedCosine, 300.0, 100.0, 0.01, SR).unwrap();
        assert!((set.weight(0).eval(300.0) - 0.5).abs() < 1e-15);
        assert!((set.weight(1).eval(300.0) - 0.5).abs() < 1e-15);
        for i in 0..=100 {
            let nu = 250.0 + i as f64;
            assert!((set.weight(0).eval(nu) + set.weight(1).eval(nu) - 1.0).abs() < 1e-15);
        }
        assert_eq!(set.count_active(290.0), 2);
        assert_eq!(set.count_active(100.0), 1);
    }

    #[test]
    fn inactive_frequencies_count_zero() {
        let set = BandWeightSet::new(
            vec![FrequencyWeight::Binary {
                cut: 300.0,
                side: Side::Low,
            }],
            1e-3,
        )
        .unwrap();
        assert_eq!(set.count_active(1000.0), 0);
    }

    #[test]
    fn invalid_cuts() {
        assert!(matches!(
            make_band_weights(WeightKind::Binary, 0.0, 0.0, 1e-3, SR),
            Err(BandError::BadCut { .. })
        ));
        assert!(matches!(
            make_band_weights(WeightKind::Binary, 30000.0, 0.0, 1e-3, SR),
            Err(BandError::BadCut { .. })
        ));
        assert!(matches!(
            make_band_weights(WeightKind::RaisedCosine, 300.0, 700.0, 1e-3, SR),
            Err(BandError::BadTransition { .. })
        ));
        assert!(matches!(
            make_band_weights(WeightKind::Binary, 300.0, 0.0, 0.0, SR),
            Err(BandError::BadEpsilon(_))
        ));
    }

    #[test]
    fn table_interpolates() {
        let w = FrequencyWeight::Table {
            step_hz: 10.0,
            values: vec![1.0, 2.0, 0.5],
        };
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(5.0), 1.5);
        assert_eq!(w.eval(15.0), 1.25);
        assert_eq!(w.eval(1000.0), 0.5);
        assert!(FrequencyWeight::Table {
            step_hz: 10.0,
            values: vec![-1.0]
        }
        .validate()
        .is_err());
    }
}
