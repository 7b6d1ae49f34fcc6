//! Simulation models with known contamination, the bivariate Matérn process,
//! and the detection-rate benchmark.

mod matern;

pub use matern::{bessel_k, gp_sample, matern_corr, MaternSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{rank, MsbdConfig};
use crate::detect::{detect_all, DetectConfig, Rule};
use crate::ensemble::{RandomSeed, TimeGrid, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::outlyingness::{profile_ensemble, WoConfig};
use crate::pointwise::PointwiseDepthMethod;
use crate::stats::{mean, sample_sd};

pub const MIN_MODEL_K: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::M1, Model::M2, Model::M3, Model::M4];

    /// Model 1 needs a fine grid: its WO signal sits in the first few points,
    /// where the shared abscissa is small.
    pub fn default_k(self) -> usize {
        match self {
            Model::M1 => 1000,
            Model::M2 => 100,
            Model::M3 | Model::M4 => 360,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::M1 => "model1",
            Model::M2 => "model2",
            Model::M3 => "model3",
            Model::M4 => "model4",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "m1" | "model1" => Ok(Model::M1),
            "2" | "m2" | "model2" => Ok(Model::M2),
            "3" | "m3" | "model3" => Ok(Model::M3),
            "4" | "m4" | "model4" => Ok(Model::M4),
            _ => Err(Error::InvalidConfig(format!("unknown model '{s}'"))),
        }
    }
}

/// Contamination and noise settings the model definitions leave open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Multiplies every noise standard deviation; 0 gives noise-free curves.
    pub noise_scale: f64,
    /// Models 3–4: one noise draw added to both coordinates of a point.
    pub shared_coordinate_noise: bool,
    pub m1_outlier_variance: f64,
    pub m2_outlier_variance: f64,
    pub m3_noisy_radius: f64,
    pub m3_noisy_sd: f64,
    pub m3_ellipse_radii: Vec<f64>,
    pub m3_ellipse_ratio: f64,
    pub m4_rose_amplitude: f64,
    pub m4_rose_petals: Vec<u32>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            noise_scale: 1.0,
            shared_coordinate_noise: false,
            m1_outlier_variance: 6.0,
            m2_outlier_variance: 2.0,
            m3_noisy_radius: 100.0,
            m3_noisy_sd: 4.0,
            m3_ellipse_radii: vec![60.0, 100.0, 140.0],
            m3_ellipse_ratio: 0.6,
            m4_rose_amplitude: 100.0,
            m4_rose_petals: vec![2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub k: usize,
    pub seed: RandomSeed,
    pub contaminate: bool,
    pub params: ModelParams,
}

impl ModelSpec {
    pub fn new(model: Model, seed: RandomSeed) -> Self {
        ModelSpec {
            model,
            k: model.default_k(),
            seed,
            contaminate: true,
            params: ModelParams::default(),
        }
    }
}

/// A generated ensemble with ground-truth outlier labels (ensemble order).
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub ensemble: TrajectoryEnsemble,
    pub outlying: Vec<bool>,
}

impl Simulated {
    pub fn outlier_ids(&self) -> Vec<&str> {
        self.ensemble
            .ids()
            .into_iter()
            .zip(&self.outlying)
            .filter(|(_, &o)| o)
            .map(|(id, _)| id)
            .collect()
    }
}

struct Builder {
    rng: ChaCha8Rng,
    noise_scale: f64,
    shared: bool,
    curves: Vec<(String, Vec<Vec<f64>>)>,
    outlying: Vec<bool>,
}

impl Builder {
    fn new(seed: RandomSeed, noise_scale: f64) -> Self {
        Builder {
            rng: ChaCha8Rng::seed_from_u64(seed.0),
            noise_scale,
            shared: false,
            curves: vec![],
            outlying: vec![],
        }
    }

    fn normal(&mut self, sd: f64) -> f64 {
        // Always draw, so noise_scale = 0 leaves later draws unchanged.
        let z: f64 = self.rng.sample(StandardNormal);
        z * sd * self.noise_scale
    }

    /// Planar point plus coordinate noise of standard deviation `sd`.
    fn noisy(&mut self, x: f64, y: f64, sd: f64) -> Vec<f64> {
        let ex = self.normal(sd);
        let ey = if self.shared { ex } else { self.normal(sd) };
        vec![x + ex, y + ey]
    }

    fn push(&mut self, rows: Vec<Vec<f64>>, outlying: bool) {
        let id = (self.curves.len() + 1).to_string();
        self.curves.push((id, rows));
        self.outlying.push(outlying);
    }

    fn finish(self, grid: TimeGrid) -> Result<Simulated> {
        Ok(Simulated {
            ensemble: TrajectoryEnsemble::from_raw(self.curves, grid)?,
            outlying: self.outlying,
        })
    }
}

fn model1(spec: &ModelSpec, b: &mut Builder) -> Result<TimeGrid> {
    let k = spec.k;
    let ts: Vec<f64> = (1..=k).map(|j| 100.0 * j as f64 / (k + 1) as f64).collect();
    for deg in 1..=70 {
        let slope = (deg as f64).to_radians().tan();
        let rows = ts.iter().map(|&t| vec![t, slope * t + b.normal(1.0)]).collect();
        b.push(rows, false);
    }
    if spec.contaminate {
        let sd = spec.params.m1_outlier_variance.sqrt();
        for slope in [1.0, 0.5, -1.0] {
            let rows = ts.iter().map(|&t| vec![t, slope * t + b.normal(sd)]).collect();
            b.push(rows, true);
        }
    }
    TimeGrid::new(ts)
}

/// Rotation of the stacked `(y, x)` pair, returned as `(x', y')`.
fn rotate_yx(y: f64, x: f64, deg: f64) -> Vec<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    vec![s * y + c * x, c * y - s * x]
}

fn model2(spec: &ModelSpec, b: &mut Builder) -> Result<TimeGrid> {
    let grid = TimeGrid::uniform(0.0, 2.0 * std::f64::consts::PI, spec.k)?;
    let xs = grid.points().to_vec();
    for i in 1..=40 {
        let deg = 2.0 * i as f64;
        b.push(xs.iter().map(|&x| rotate_yx(x.sin(), x, deg)).collect(), false);
    }
    if spec.contaminate {
        let sd = spec.params.m2_outlier_variance.sqrt();
        for deg in [30.0, 45.0, 60.0, 80.0] {
            let rows = xs
                .iter()
                .map(|&x| {
                    let y = 2.0 * (4.0 * x).sin() + b.normal(sd);
                    rotate_yx(y, x, deg)
                })
                .collect();
            b.push(rows, true);
        }
    }
    Ok(grid)
}

fn closed_body(spec: &ModelSpec, b: &mut Builder) -> Result<(TimeGrid, Vec<f64>)> {
    let k = spec.k;
    let thetas: Vec<f64> = (1..=k).map(|j| 2.0 * std::f64::consts::PI * j as f64 / k as f64).collect();
    for i in 1..=20 {
        let r = 20.0 + 8.0 * i as f64;
        let rows = thetas
            .iter()
            .map(|&th| b.noisy(r * th.cos(), r * th.sin(), 1.0))
            .collect();
        b.push(rows, false);
    }
    let grid = TimeGrid::new(thetas.iter().map(|th| th.to_degrees()).collect())?;
    Ok((grid, thetas))
}

fn model3(spec: &ModelSpec, b: &mut Builder) -> Result<TimeGrid> {
    let (grid, thetas) = closed_body(spec, b)?;
    if spec.contaminate {
        let p = &spec.params;
        let (r, sd) = (p.m3_noisy_radius, p.m3_noisy_sd);
        let rows = thetas
            .iter()
            .map(|&th| b.noisy(r * th.cos(), r * th.sin(), sd))
            .collect();
        b.push(rows, true);
        for &r in &p.m3_ellipse_radii {
            let minor = p.m3_ellipse_ratio * r;
            let rows = thetas
                .iter()
                .map(|&th| b.noisy(r * th.cos(), minor * th.sin(), 1.0))
                .collect();
            b.push(rows, true);
        }
    }
    Ok(grid)
}

fn model4(spec: &ModelSpec, b: &mut Builder) -> Result<TimeGrid> {
    let (grid, thetas) = closed_body(spec, b)?;
    if spec.contaminate {
        let p = &spec.params;
        for &m in &p.m4_rose_petals {
            let rows = thetas
                .iter()
                .map(|&th| {
                    let r = p.m4_rose_amplitude * (m as f64 * th).cos();
                    b.noisy(r * th.cos(), r * th.sin(), 1.0)
                })
                .collect();
            b.push(rows, true);
        }
    }
    Ok(grid)
}

/// Generate one ensemble of the given model.
pub fn generate(spec: &ModelSpec) -> Result<Simulated> {
    if spec.k < MIN_MODEL_K {
        return Err(Error::InvalidConfig(format!("k = {} below {MIN_MODEL_K}", spec.k)));
    }
    let mut b = Builder::new(spec.seed, spec.params.noise_scale);
    b.shared = spec.params.shared_coordinate_noise;
    let grid = match spec.model {
        Model::M1 => model1(spec, &mut b)?,
        Model::M2 => model2(spec, &mut b)?,
        Model::M3 => model3(spec, &mut b)?,
        Model::M4 => model4(spec, &mut b)?,
    };
    b.finish(grid)
}

pub fn gen_model1(k: usize, seed: RandomSeed, contaminate: bool) -> Result<Simulated> {
    generate(&ModelSpec { k, contaminate, ..ModelSpec::new(Model::M1, seed) })
}

pub fn gen_model2(k: usize, seed: RandomSeed, contaminate: bool) -> Result<Simulated> {
    generate(&ModelSpec { k, contaminate, ..ModelSpec::new(Model::M2, seed) })
}

pub fn gen_model3(k: usize, seed: RandomSeed, contaminate: bool) -> Result<Simulated> {
    generate(&ModelSpec { k, contaminate, ..ModelSpec::new(Model::M3, seed) })
}

pub fn gen_model4(k: usize, seed: RandomSeed, contaminate: bool) -> Result<Simulated> {
    generate(&ModelSpec { k, contaminate, ..ModelSpec::new(Model::M4, seed) })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub method: PointwiseDepthMethod,
    pub wo: WoConfig,
    pub msbd: MsbdConfig,
    pub detect: DetectConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub pc_mean: f64,
    pub pc_sd: f64,
    pub pf_mean: f64,
    pub pf_sd: f64,
}

impl Rates {
    fn from_samples(pc: &[f64], pf: &[f64]) -> Self {
        Rates {
            pc_mean: mean(pc),
            pc_sd: sample_sd(pc),
            pf_mean: mean(pf),
            pf_sd: sample_sd(pf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub model: Model,
    pub replicates: usize,
    pub wo: Rates,
    pub msbd: Rates,
    pub rmd: Rates,
}

impl BenchmarkResult {
    pub fn rates(&self, rule: Rule) -> Rates {
        match rule {
            Rule::Wo => self.wo,
            Rule::Msbd => self.msbd,
            Rule::Rmd => self.rmd,
        }
    }
}

/// `(pc, pf)` of one flag vector against the truth.
pub fn detection_rates(flags: &[bool], truth: &[bool]) -> (f64, f64) {
    let outliers = truth.iter().filter(|&&t| t).count();
    let clean = truth.len() - outliers;
    let hit = flags.iter().zip(truth).filter(|(&f, &t)| f && t).count();
    let false_hit = flags.iter().zip(truth).filter(|(&f, &t)| f && !t).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (ratio(hit, outliers), ratio(false_hit, clean))
}

/// Per-rule `(pc, pf)` for one replicate.
pub fn replicate_rates(sim: &Simulated, cfg: &BenchmarkConfig) -> Result<[(f64, f64); 3]> {
    let ens = &sim.ensemble;
    let profiles = profile_ensemble(ens, cfg.method, cfg.wo)?;
    let ranking = rank(ens, &cfg.msbd)?;
    let report = detect_all(ens, &profiles, &ranking, &cfg.detect)?;
    let flags = |rule: Rule| -> Vec<bool> {
        report
            .records
            .iter()
            .map(|r| match rule {
                Rule::Wo => r.wo_flag,
                Rule::Msbd => r.msbd_flag,
                Rule::Rmd => r.rmd_flag,
            })
            .collect()
    };
    Ok([Rule::Wo, Rule::Msbd, Rule::Rmd].map(|r| detection_rates(&flags(r), &sim.outlying)))
}

/// Monte Carlo pc/pf of the three rules over seeded replicates.
pub fn benchmark(model: &ModelSpec, replicates: usize, cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    if replicates < 2 {
        return Err(Error::InvalidConfig("benchmark needs at least 2 replicates".into()));
    }
    let per: Vec<[(f64, f64); 3]> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let spec = ModelSpec {
                seed: model.seed.derive(r as u64),
                contaminate: true,
                ..model.clone()
            };
            replicate_rates(&generate(&spec)?, cfg)
        })
        .collect::<Result<_>>()?;
    // Aggregated in replicate order, independent of scheduling.
    let rates = |i: usize| {
        let pc: Vec<f64> = per.iter().map(|r| r[i].0).collect();
        let pf: Vec<f64> = per.iter().map(|r| r[i].1).collect();
        Rates::from_samples(&pc, &pf)
    };
    Ok(BenchmarkResult {
        model: model.model,
        replicates,
        wo: rates(0),
        msbd: rates(1),
        rmd: rates(2),
    })
}
