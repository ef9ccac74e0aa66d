//! Synthetic density studies: how the Rényi entropy of a density reacts to
//! the order α as the density is made sparser or noisier.
//!
//! Both models start from one base vector `D` per seed: `|N(0,1)|` samples
//! from a ChaCha8 generator, rescaled so the largest entry is 1.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::entropy::{density_entropy, EntropyError};

pub const DEFAULT_N: usize = 100;
pub const DEFAULT_N_PART: usize = 5;
pub const DEFAULT_R_PART: f64 = 2.0;
/// Attenuation applied past index `M` in the sparse model.
pub const DM_ATTENUATION: f64 = 20.0;

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("invalid model parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityModel {
    /// Entries past `m` divided by 20.
    Dm { n: usize, m: usize, seed: u64 },
    /// One main peak, `n_part - 1` partials at `1/r_part`, noise at `l/r_part`.
    Dl {
        n: usize,
        n_part: usize,
        r_part: f64,
        l: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDensity {
    pub values: Vec<f64>,
    pub model: DensityModel,
}

/// The shared base vector: `n` entries in (0, 1] with maximum exactly 1.
pub fn base_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            x.abs().max(f64::MIN_POSITIVE)
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    raw.into_iter().map(|x| x / max).collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    v.into_iter().map(|x| x / sum).collect()
}

pub fn make_dm(n: usize, m: usize, seed: u64) -> Result<SyntheticDensity, ExperimentError> {
    if n == 0 || m == 0 || m > n {
        return Err(ExperimentError::Params(format!(
            "need 1 <= M <= N, got M = {m}, N = {n}"
        )));
    }
    let values = base_vector(n, seed)
        .into_iter()
        .enumerate()
        .map(|(i, d)| if i < m { d } else { d / DM_ATTENUATION })
        .collect();
    Ok(SyntheticDensity {
        values: normalized(values),
        model: DensityModel::Dm { n, m, seed },
    })
}

/// Values before normalization; index 0 is the main peak.
fn dl_raw(n: usize, n_part: usize, r_part: f64, l: f64, seed: u64) -> Vec<f64> {
    let r_noise = r_part / l;
    base_vector(n, seed)
        .into_iter()
        .enumerate()
        .map(|(i, d)| match i {
            0 => 1.0,
            i if i < n_part => d / r_part,
            _ => d / r_noise,
        })
        .collect()
}

pub fn make_dl(
    n: usize,
    n_part: usize,
    r_part: f64,
    l: f64,
    seed: u64,
) -> Result<SyntheticDensity, ExperimentError> {
    if n == 0 || n_part == 0 || n_part > n {
        return Err(ExperimentError::Params(format!(
            "need 1 <= N_part <= N, got N_part = {n_part}, N = {n}"
        )));
    }
    if !(r_part >= 1.0 && r_part.is_finite()) {
        return Err(ExperimentError::Params(format!(
            "R_part must be >= 1, got {r_part}"
        )));
    }
    if !(1.0 / 16.0..=1.0).contains(&l) {
        return Err(ExperimentError::Params(format!(
            "L must lie in [1/16, 1], got {l}"
        )));
    }
    let values = normalized(dl_raw(n, n_part, r_part, l, seed));
    Ok(SyntheticDensity {
        values,
        model: DensityModel::Dl {
            n,
            n_part,
            r_part,
            l,
            seed,
        },
    })
}

/// Which model a surface sweeps, with its fixed parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceFamily {
    /// Sweep values are `M`.
    Dm { n: usize },
    /// Sweep values are `L`.
    Dl {
        n: usize,
        n_part: usize,
        r_part: f64,
    },
}

impl SurfaceFamily {
    fn density(self, sweep: f64, seed: u64) -> Result<SyntheticDensity, ExperimentError> {
        match self {
            Self::Dm { n } => {
                if sweep.fract() != 0.0 || sweep < 1.0 {
                    return Err(ExperimentError::Params(format!(
                        "M must be a positive integer, got {sweep}"
                    )));
                }
                make_dm(n, sweep as usize, seed)
            }
            Self::Dl { n, n_part, r_part } => make_dl(n, n_part, r_part, sweep, seed),
        }
    }
}

/// `α = 0, 0.1, ..., 3`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=30).map(|i| i as f64 / 10.0).collect()
}

/// `M = 1, ..., n`.
pub fn default_m_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|m| m as f64).collect()
}

/// `L = 1/16, 2/16, ..., 1`.
pub fn default_l_grid() -> Vec<f64> {
    (1..=16).map(|k| k as f64 / 16.0).collect()
}

/// Entropy in bits over an (α, sweep) grid, unit cell area.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropySurface {
    pub alphas: Vec<f64>,
    pub sweep: Vec<f64>,
    /// `values[i][j]` is `H_{alphas[i]}` of the density at `sweep[j]`.
    pub values: Vec<Vec<f64>>,
}

impl EntropySurface {
    pub fn at(&self, alpha: f64, sweep: f64) -> Option<f64> {
        let i = self
            .alphas
            .iter()
            .position(|&a| (a - alpha).abs() < 1e-12)?;
        let j = self.sweep.iter().position(|&s| (s - sweep).abs() < 1e-12)?;
        Some(self.values[i][j])
    }

    /// Header row of sweep values, then one row per α.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha");
        for s in &self.sweep {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for (a, row) in self.alphas.iter().zip(&self.values) {
            let _ = write!(out, "{a}");
            for h in row {
                let _ = write!(out, ",{h}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn entropy_surface(
    family: SurfaceFamily,
    alphas: &[f64],
    sweep: &[f64],
    seed: u64,
) -> Result<EntropySurface, ExperimentError> {
    if alphas.is_empty() || sweep.is_empty() {
        return Err(ExperimentError::Params("empty α or sweep grid".into()));
    }
    let densities = sweep
        .iter()
        .map(|&s| family.density(s, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let values = alphas
        .par_iter()
        .map(|&a| {
            densities
                .iter()
                .map(|d| density_entropy(&d.values, a))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EntropySurface {
        alphas: alphas.to_vec(),
        sweep: sweep.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn base_vector_range() {
        let d = base_vector(100, 1);
        assert!(d.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert_eq!(d.iter().copied().fold(0.0, f64::max), 1.0);
        assert_eq!(d, base_vector(100, 1));
        assert_ne!(d, base_vector(100, 2));
    }

    #[test]
    fn dm_full_is_normalized_base() {
        let d = make_dm(100, 100, 7).unwrap();
        let base = base_vector(100, 7);
        let sum: f64 = base.iter().sum();
        for (a, b) in d.values.iter().zip(&base) {
            assert!((a - b / sum).abs() < 1e-15);
        }
    }

    #[test]
    fn dm_rejects_bad_m() {
        assert!(make_dm(100, 0, 1).is_err());
        assert!(make_dm(100, 101, 1).is_err());
    }

    #[test]
    fn dm_sparse_end_has_lower_high_order_entropy() {
        let sparse = density_entropy(&make_dm(100, 1, 3).unwrap().values, 3.0).unwrap();
        let full = density_entropy(&make_dm(100, 100, 3).unwrap().values, 3.0).unwrap();
        assert!(sparse < full - 1.0, "{sparse} vs {full}");
    }

    #[test]
    fn dl_structure() {
        let raw = dl_raw(100, 5, 2.0, 0.25, 9);
        let base = base_vector(100, 9);
        assert_eq!(raw[0], 1.0);
        assert!(raw.iter().skip(1).all(|&x| x < 1.0));
        assert_eq!(raw[3], base[3] / 2.0);
        assert_eq!(raw[50], base[50] * 0.25 / 2.0);
        // L = 1 puts the noise at the partial level
        let flat = dl_raw(100, 5, 2.0, 1.0, 9);
        assert_eq!(flat[50], base[50] / 2.0);
        assert!(make_dl(100, 5, 2.0, 0.01, 9).is_err());
        assert!(make_dl(100, 5, 0.5, 0.5, 9).is_err());
        assert!(make_dl(100, 0, 2.0, 0.5, 9).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = entropy_surface(SurfaceFamily::Dm { n: 10 }, &[0.0, 2.0], &[1.0, 10.0], 1).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,1,10");
        assert!(lines[1].starts_with("0,"));
        let h0: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((h0 - 10f64.log2()).abs() < 1e-12);
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn surfaces_are_deterministic() {
        let f = SurfaceFamily::Dl {
            n: 100,
            n_part: 5,
            r_part: 2.0,
        };
        let a = entropy_surface(f, &default_alpha_grid(), &default_l_grid(), 5).unwrap();
        let b = entropy_surface(f, &default_alpha_grid(), &default_l_grid(), 5).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn densities_are_unit_sum(seed in any::<u64>(), m in 1usize..=100, k in 1usize..=16) {
            for d in [make_dm(100, m, seed).unwrap(), make_dl(100, 5, 2.0, k as f64 / 16.0, seed).unwrap()] {
                prop_assert!((d.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(d.values.iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn dm_zero_order_is_constant(seed in any::<u64>(), m in 1usize..=100) {
            let h = density_entropy(&make_dm(100, m, seed).unwrap().values, 0.0).unwrap();
            prop_assert!((h - 100f64.log2()).abs() < 1e-12);
        }
    }
}
