//! Every tunable of the pipeline in one flat structure, settable from
//! `key = value` lines or from command-line flags with the same names.

use serde::{Deserialize, Serialize};

use crate::depth::{validate_band_levels, BoxplotConfig, MsbdConfig, BAND_LEVELS, DEFAULT_TRIPLE_CAP};
use crate::detect::{DetectConfig, MsbdRuleConfig, RmdRuleConfig, WoRuleConfig, DEFAULT_STARTS, RMD_QUANTILE};
use crate::ensemble::RandomSeed;
use crate::error::{Error, Result};
use crate::outlyingness::WoConfig;
use crate::pointwise::{PointwiseDepthMethod, DEFAULT_DIRECTIONS};
use crate::preprocess::{Align, Lambda, SmoothingConfig};
use crate::simgen::{BenchmarkConfig, Model, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    /// Projection depth, except Mahalanobis for Model 2 simulations.
    Auto,
    Projection,
    Mahalanobis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub method: MethodChoice,
    pub directions: usize,
    pub alpha: Vec<f64>,
    pub factor: f64,
    pub max_triples: Option<u64>,
    pub exclude_query: bool,
    pub seed: u64,
    pub msbd_seed: u64,
    pub mcd_seed: u64,
    pub mcd_starts: usize,
    pub rmd_quantile: f64,
    pub h_fraction: Option<f64>,
    pub band_levels: [u8; 3],
    pub target_k: usize,
    pub lambda: Lambda,
    pub align: Align,
    pub model: Model,
    pub k: Option<usize>,
    pub n: usize,
    pub contaminate: bool,
    pub replicates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let smoothing = SmoothingConfig::default();
        RunConfig {
            method: MethodChoice::Auto,
            directions: DEFAULT_DIRECTIONS,
            alpha: vec![WoRuleConfig::default().alpha],
            factor: MsbdRuleConfig::default().factor,
            max_triples: Some(DEFAULT_TRIPLE_CAP),
            exclude_query: true,
            seed: 0,
            msbd_seed: 0,
            mcd_seed: 0,
            mcd_starts: DEFAULT_STARTS,
            rmd_quantile: RMD_QUANTILE,
            h_fraction: None,
            band_levels: BAND_LEVELS,
            target_k: smoothing.target_k,
            lambda: smoothing.lambda,
            align: smoothing.align,
            model: Model::M1,
            k: None,
            n: 1000,
            contaminate: false,
            replicates: 100,
        }
    }
}

/// Keys accepted by [`RunConfig::set`], in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "method", "directions", "alpha", "factor", "max-triples", "exclude-query", "seed",
    "msbd-seed", "mcd-seed", "mcd-starts", "rmd-quantile", "h-fraction", "band-levels",
    "target-k", "lambda", "align", "model", "k", "n", "contaminate", "replicates",
];

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("invalid value '{value}' for '{key}'"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("none") || value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "method" => {
                self.method = match value.to_ascii_lowercase().as_str() {
                    "auto" => MethodChoice::Auto,
                    "projection" => MethodChoice::Projection,
                    "mahalanobis" => MethodChoice::Mahalanobis,
                    _ => return Err(bad(key, value)),
                }
            }
            "directions" => self.directions = num(key, value)?,
            "alpha" => {
                self.alpha = value
                    .split(',')
                    .map(|a| num(key, a.trim()))
                    .collect::<Result<Vec<f64>>>()?
            }
            "factor" => self.factor = num(key, value)?,
            "max-triples" => self.max_triples = optional(key, value)?,
            "exclude-query" => self.exclude_query = boolean(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "msbd-seed" => self.msbd_seed = num(key, value)?,
            "mcd-seed" => self.mcd_seed = num(key, value)?,
            "mcd-starts" => self.mcd_starts = num(key, value)?,
            "rmd-quantile" => self.rmd_quantile = num(key, value)?,
            "h-fraction" => self.h_fraction = optional(key, value)?,
            "band-levels" => {
                let levels: Vec<u8> = value
                    .split(',')
                    .map(|a| num(key, a.trim()))
                    .collect::<Result<_>>()?;
                self.band_levels = levels.try_into().map_err(|_| bad(key, value))?;
            }
            "target-k" => self.target_k = num(key, value)?,
            "lambda" => {
                self.lambda = if value.eq_ignore_ascii_case("gcv") {
                    Lambda::Gcv
                } else {
                    Lambda::Fixed(num(key, value)?)
                }
            }
            "align" => {
                self.align = match value.to_ascii_lowercase().replace('-', "_").as_str() {
                    "none" => Align::None,
                    "common_start" => Align::CommonStart,
                    _ => return Err(bad(key, value)),
                }
            }
            "model" => self.model = value.parse()?,
            "k" => self.k = optional(key, value)?,
            "n" => self.n = num(key, value)?,
            "contaminate" => self.contaminate = boolean(key, value)?,
            "replicates" => self.replicates = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("config line {}: expected 'key = value'", i + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() {
            return Err(Error::InvalidConfig("alpha list is empty".into()));
        }
        for &alpha in &self.alpha {
            WoRuleConfig { alpha }.validate()?;
        }
        self.method(None).validate()?;
        self.msbd().validate()?;
        self.detect(self.alpha[0]).msbd.validate()?;
        self.rmd().validate()?;
        validate_band_levels(self.band_levels)?;
        self.smoothing().validate()?;
        if self.n < 4 {
            return Err(Error::InvalidConfig(format!("n must be at least 4, got {}", self.n)));
        }
        Ok(())
    }

    /// Pointwise depth; `model` only matters for [`MethodChoice::Auto`].
    pub fn method(&self, model: Option<Model>) -> PointwiseDepthMethod {
        let projection = PointwiseDepthMethod::Projection { directions: self.directions };
        match self.method {
            MethodChoice::Projection => projection,
            MethodChoice::Mahalanobis => PointwiseDepthMethod::Mahalanobis,
            MethodChoice::Auto if model == Some(Model::M2) => PointwiseDepthMethod::Mahalanobis,
            MethodChoice::Auto => projection,
        }
    }

    pub fn msbd(&self) -> MsbdConfig {
        MsbdConfig {
            max_triples: self.max_triples,
            seed: RandomSeed(self.msbd_seed),
            exclude_query: self.exclude_query,
        }
    }

    pub fn rmd(&self) -> RmdRuleConfig {
        RmdRuleConfig {
            h_fraction: self.h_fraction,
            quantile: self.rmd_quantile,
            seed: RandomSeed(self.mcd_seed),
            n_starts: self.mcd_starts,
        }
    }

    pub fn detect(&self, alpha: f64) -> DetectConfig {
        DetectConfig {
            wo: WoRuleConfig { alpha },
            msbd: MsbdRuleConfig { factor: self.factor },
            rmd: self.rmd(),
        }
    }

    pub fn boxplot(&self, alpha: f64) -> BoxplotConfig {
        BoxplotConfig {
            method: self.method(None),
            wo: WoConfig::default(),
            rule: WoRuleConfig { alpha },
            msbd: self.msbd(),
            band_levels: self.band_levels,
        }
    }

    pub fn smoothing(&self) -> SmoothingConfig {
        SmoothingConfig { target_k: self.target_k, lambda: self.lambda, align: self.align }
    }

    pub fn model_spec(&self) -> ModelSpec {
        let mut spec = ModelSpec::new(self.model, RandomSeed(self.seed));
        if let Some(k) = self.k {
            spec.k = k;
        }
        spec.contaminate = self.contaminate;
        spec
    }

    pub fn benchmark(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            method: self.method(Some(self.model)),
            wo: WoConfig::default(),
            msbd: self.msbd(),
            detect: self.detect(self.alpha[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_is_settable() {
        let samples = [
            ("method", "mahalanobis"), ("directions", "64"), ("alpha", "0.9, 0.95,0.99"),
            ("factor", "2"), ("max-triples", "none"), ("exclude-query", "false"), ("seed", "7"),
            ("msbd-seed", "8"), ("mcd-seed", "9"), ("mcd-starts", "20"), ("rmd-quantile", "0.99"),
            ("h-fraction", "0.75"), ("band-levels", "20,50,80"), ("target-k", "120"),
            ("lambda", "0.5"), ("align", "common-start"), ("model", "m3"), ("k", "90"),
            ("n", "30"), ("contaminate", "yes"), ("replicates", "12"),
        ];
        assert_eq!(samples.len(), CONFIG_KEYS.len());
        let mut c = RunConfig::default();
        for (k, v) in samples {
            assert!(CONFIG_KEYS.contains(&k));
            c.set(k, v).unwrap();
        }
        c.validate().unwrap();
        assert_eq!(c.alpha, vec![0.9, 0.95, 0.99]);
        assert_eq!(c.max_triples, None);
        assert_eq!(c.lambda, Lambda::Fixed(0.5));
        assert_eq!(c.align, Align::CommonStart);
        assert_eq!(c.model_spec().k, 90);
        assert!(c.model_spec().contaminate);
    }

    #[test]
    fn text_parsing_and_errors() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nalpha = 0.99\n\n seed=3 # trailing\n").unwrap();
        assert_eq!((c.alpha.clone(), c.seed), (vec![0.99], 3));
        assert!(c.apply_text("alpha 0.9").is_err());
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.set("directions", "many").is_err());
        c.set("alpha", "1.5").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn auto_method_depends_on_model() {
        let c = RunConfig::default();
        assert_eq!(c.method(Some(Model::M2)), PointwiseDepthMethod::Mahalanobis);
        assert!(matches!(c.method(Some(Model::M1)), PointwiseDepthMethod::Projection { .. }));
        assert!(matches!(c.method(None), PointwiseDepthMethod::Projection { .. }));
    }
}
