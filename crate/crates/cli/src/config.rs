//! Run configuration: defaults, `key = value` files, command-line overrides.
//!
//! ```text
//! # comment
//! alpha = 0.7
//! cut = 300
//! scales = 512,1024,2048,4096
//! mask = low300,high300      # one per band, or `custom` to use the band weights
//! weights = binary           # or raised-cosine
//! transition = 100
//! epsilon = 0.001
//! window = hann              # hann | hamming | blackman | rect
//! segment_frames = 4
//! overlap_frames = 3
//! seed = 0
//! out = results
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use tfadapt::adaptation::{AdaptationConfig, DEFAULT_ALPHA, DEFAULT_SCALES};
use tfadapt::bands::{
    make_band_weights, BandWeightSet, FrequencyWeight, MaskPreset, WeightKind, DEFAULT_CUT_HZ,
    DEFAULT_EPSILON,
};
use tfadapt::window::WindowFamily;

#[derive(Clone, Debug, PartialEq)]
pub enum MaskChoice {
    Presets(Vec<MaskPreset>),
    /// Adapt each band under its own reconstruction weight.
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub cut: f64,
    pub scales: Vec<usize>,
    pub mask: MaskChoice,
    pub weights: WeightKind,
    pub transition: f64,
    pub epsilon: f64,
    pub window: WindowFamily,
    pub segment_frames: usize,
    pub overlap_frames: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            cut: DEFAULT_CUT_HZ,
            scales: DEFAULT_SCALES.to_vec(),
            mask: MaskChoice::Presets(vec![MaskPreset::Low300, MaskPreset::High300]),
            weights: WeightKind::Binary,
            transition: 100.0,
            epsilon: DEFAULT_EPSILON,
            window: WindowFamily::Hann,
            segment_frames: 4,
            overlap_frames: 3,
            seed: 0,
            out: PathBuf::from("."),
        }
    }
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub cut: Option<f64>,
    pub scales: Option<String>,
    pub mask: Option<String>,
    pub weights: Option<String>,
    pub transition: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_scales(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("bad scale `{v}`"))
        })
        .collect()
}

fn parse_mask(s: &str) -> Result<MaskChoice> {
    if s.trim() == "custom" {
        return Ok(MaskChoice::Custom);
    }
    let presets = s
        .split(',')
        .map(|v| v.trim().parse::<MaskPreset>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(MaskChoice::Presets(presets))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| anyhow!("`{key}`: cannot parse `{v}`: {e}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_num(key, value)?,
            "cut" => self.cut = parse_num(key, value)?,
            "scales" => self.scales = parse_scales(value)?,
            "mask" => self.mask = parse_mask(value)?,
            "weights" => self.weights = value.parse().map_err(|e| anyhow!("{e}"))?,
            "transition" => self.transition = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "window" => self.window = value.parse().map_err(|e| anyhow!("{e}"))?,
            "segment_frames" => self.segment_frames = parse_num(key, value)?,
            "overlap_frames" => self.overlap_frames = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Self::parse(&text).with_context(|| format!("in {}", p.display()))?
            }
            None => Self::default(),
        };
        if let Some(v) = overrides.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = overrides.cut {
            cfg.cut = v;
        }
        if let Some(v) = &overrides.scales {
            cfg.scales = parse_scales(v)?;
        }
        if let Some(v) = &overrides.mask {
            cfg.mask = parse_mask(v)?;
        }
        if let Some(v) = &overrides.weights {
            cfg.weights = v.parse().map_err(|e| anyhow!("{e}"))?;
        }
        if let Some(v) = overrides.transition {
            cfg.transition = v;
        }
        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = &overrides.out {
            cfg.out = v.clone();
        }
        Ok(cfg)
    }

    pub fn band_weights(&self, sample_rate: f64) -> Result<BandWeightSet> {
        Ok(make_band_weights(
            self.weights,
            self.cut,
            self.transition,
            self.epsilon,
            sample_rate,
        )?)
    }

    pub fn adaptation(&self, sample_rate: f64) -> Result<AdaptationConfig> {
        let band_masks: Vec<FrequencyWeight> = match &self.mask {
            MaskChoice::Presets(p) => p.iter().map(|m| m.weight()).collect(),
            MaskChoice::Custom => self.band_weights(sample_rate)?.weights().to_vec(),
        };
        let cfg = AdaptationConfig {
            scales: self.scales.clone(),
            alpha: self.alpha,
            segment_frames: self.segment_frames,
            overlap_frames: self.overlap_frames,
            band_masks,
            window_family: self.window,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_rejects_unknown_keys() {
        let cfg = RunConfig::parse(
            "# run\nalpha = 2\nscales = 256, 1024\nmask = none\n\nweights = raised-cosine # soft\n",
        )
        .unwrap();
        assert_eq!(cfg.alpha, 2.0);
        assert_eq!(cfg.scales, vec![256, 1024]);
        assert_eq!(cfg.mask, MaskChoice::Presets(vec![MaskPreset::None]));
        assert_eq!(cfg.weights, WeightKind::RaisedCosine);
        assert!(RunConfig::parse("alpah = 1").is_err());
        assert!(RunConfig::parse("alpha 1").is_err());
        assert!(RunConfig::parse("alpha = x").is_err());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            alpha: Some(3.0),
            mask: Some("custom".into()),
            ..Overrides::default()
        };
        let cfg = RunConfig::load(None, &o).unwrap();
        assert_eq!(cfg.alpha, 3.0);
        assert_eq!(cfg.mask, MaskChoice::Custom);
        assert_eq!(cfg.cut, 300.0);
        assert_eq!(cfg.adaptation(44100.0).unwrap().band_masks.len(), 2);
    }
}
