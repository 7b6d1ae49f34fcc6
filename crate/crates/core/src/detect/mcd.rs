//! Minimum covariance determinant by random starts and concentration steps,
//! plus the Hardin–Rojas F approximation for robust distances.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ensemble::RandomSeed;
use crate::error::{Error, Result};

pub const DEFAULT_STARTS: usize = 500;
pub const RMD_QUANTILE: f64 = 0.993;
const MAX_CSTEPS: usize = 50;
const CSTEP_TOL: f64 = 1e-12;
const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmdRuleConfig {
    /// `h = floor(h_fraction · n)`; `None` gives `floor((n + q + 1) / 2)`.
    pub h_fraction: Option<f64>,
    pub quantile: f64,
    pub seed: RandomSeed,
    pub n_starts: usize,
}

impl Default for RmdRuleConfig {
    fn default() -> Self {
        RmdRuleConfig {
            h_fraction: None,
            quantile: RMD_QUANTILE,
            seed: RandomSeed::default(),
            n_starts: DEFAULT_STARTS,
        }
    }
}

impl RmdRuleConfig {
    /// Subset size for `n` points in dimension `q`.
    pub fn subset_size(&self, n: usize, q: usize) -> Result<usize> {
        let lower = (n + q + 1) / 2;
        let h = match self.h_fraction {
            None => lower,
            Some(f) if f > 0.5 && f <= 1.0 => (f * n as f64).floor() as usize,
            Some(f) => {
                return Err(Error::InvalidConfig(format!(
                    "h_fraction must lie in (0.5, 1], got {f}"
                )))
            }
        };
        if h < lower || h > n {
            return Err(Error::InvalidConfig(format!(
                "subset size {h} outside [{lower}, {n}]"
            )));
        }
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be positive".into()));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "quantile must lie in (0, 1), got {}",
                self.quantile
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdFit {
    pub center: DVector<f64>,
    /// Subset covariance with divisor `h`.
    pub cov: DMatrix<f64>,
    /// Sorted indices of the optimal subset.
    pub subset: Vec<usize>,
    pub det: f64,
}

/// Mean and `1/|J|` covariance of the rows in `subset`.
pub fn subset_moments(points: &DMatrix<f64>, subset: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let q = points.ncols();
    let h = subset.len() as f64;
    let mut center = DVector::zeros(q);
    for &i in subset {
        center += points.row(i).transpose();
    }
    center /= h;
    let mut cov = DMatrix::zeros(q, q);
    for &i in subset {
        let d = points.row(i).transpose() - &center;
        cov += &d * d.transpose();
    }
    (center, cov / h)
}

/// Cholesky factor, or `None` when a pivot falls below the singularity guard.
fn factor(cov: &DMatrix<f64>, scale: f64) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let chol = cov.clone().cholesky()?;
    let l = chol.l_dirty();
    if (0..cov.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= SINGULAR_PIVOT * scale) {
        return None;
    }
    Some(chol)
}

fn det_of(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).product()
}

/// Squared Mahalanobis distances of every row.
pub fn mahalanobis_sq(
    points: &DMatrix<f64>,
    center: &DVector<f64>,
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
) -> Vec<f64> {
    (0..points.nrows())
        .map(|i| {
            let d = points.row(i).transpose() - center;
            let z = chol.l().solve_lower_triangular(&d).expect("nonsingular factor");
            z.norm_squared()
        })
        .collect()
}

fn smallest(dist: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

enum StartOutcome {
    Regular { subset: Vec<usize>, det: f64 },
    ExactFit { subset: Vec<usize> },
}

/// One random start followed by concentration steps.
fn run_start(points: &DMatrix<f64>, h: usize, scale: f64, seed: u64) -> StartOutcome {
    let (n, q) = points.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = sample(&mut rng, n, n).into_vec();
    let mut size = (q + 1).min(h);
    // Grow a singular initial subset until it spans the space.
    let mut chol = loop {
        let (center, cov) = subset_moments(points, &order[..size]);
        if let Some(c) = factor(&cov, scale) {
            break (center, c);
        }
        if size >= h {
            let mut s = order[..size].to_vec();
            s.sort_unstable();
            return StartOutcome::ExactFit { subset: s };
        }
        size += 1;
    };
    let mut subset = smallest(&mahalanobis_sq(points, &chol.0, &chol.1), h);
    let mut det = f64::INFINITY;
    for _ in 0..MAX_CSTEPS {
        let (center, cov) = subset_moments(points, &subset);
        let Some(c) = factor(&cov, scale) else {
            return StartOutcome::ExactFit { subset };
        };
        let new_det = det_of(&c);
        debug_assert!(
            new_det <= det * (1.0 + 1e-9) || !det.is_finite(),
            "C-step increased the determinant: {det} -> {new_det}"
        );
        let converged = det.is_finite() && det - new_det <= CSTEP_TOL * det;
        det = new_det;
        chol = (center, c);
        if converged {
            break;
        }
        let next = smallest(&mahalanobis_sq(points, &chol.0, &chol.1), h);
        if next == subset {
            break;
        }
        subset = next;
    }
    StartOutcome::Regular { subset, det }
}

/// FastMCD-style search over `n_starts` seeded random `(q+1)`-subsets.
pub fn mcd(points: &DMatrix<f64>, cfg: &RmdRuleConfig) -> Result<McdFit> {
    cfg.validate()?;
    let (n, q) = points.shape();
    if n < q + 2 {
        return Err(Error::TooFewCurves { n, p: q });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite point passed to mcd".into()));
    }
    let h = cfg.subset_size(n, q)?;
    let all: Vec<usize> = (0..n).collect();
    let (_, full_cov) = subset_moments(points, &all);
    let scale = full_cov.trace() / q as f64;
    let outcomes: Vec<StartOutcome> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| run_start(points, h, scale, cfg.seed.0 ^ s as u64))
        .collect();
    // Lowest start index wins ties; an exact fit beats any regular subset.
    let mut best: Option<(Vec<usize>, f64)> = None;
    for outcome in outcomes {
        match outcome {
            StartOutcome::ExactFit { subset } => {
                let (center, _) = subset_moments(points, &subset);
                return Err(Error::SingularSubsetCov {
                    center: center.iter().copied().collect(),
                });
            }
            StartOutcome::Regular { subset, det } => {
                if best.as_ref().is_none_or(|(_, d)| det < *d) {
                    best = Some((subset, det));
                }
            }
        }
    }
    let (subset, det) = best.expect("at least one start");
    let (center, cov) = subset_moments(points, &subset);
    Ok(McdFit {
        center,
        cov,
        subset,
        det,
    })
}

/// Consistency factor and Wishart degrees of freedom for robust distances of
/// `n` points in dimension `q` computed from an `h`-subset MCD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardinRojas {
    pub c: f64,
    pub m: f64,
}

impl HardinRojas {
    pub fn new(n: usize, q: usize, h: usize) -> Self {
        let alpha = h as f64 / n as f64;
        let qf = q as f64;
        let chi = |df: f64| ChiSquared::new(df).expect("positive degrees of freedom");
        let q_alpha = chi(qf).inverse_cdf(alpha);
        let p2 = chi(qf + 2.0).cdf(q_alpha);
        let p4 = chi(qf + 4.0).cdf(q_alpha);
        let c_alpha = alpha / p2;
        let c2 = -0.5 * p2;
        let c3 = -0.5 * p4;
        let c4 = 3.0 * c3;
        let b1 = c_alpha * (c3 - c4) / alpha;
        let b2 = 0.5 + c_alpha / alpha * (c3 - q_alpha / qf * (c2 + 0.5 * (1.0 - alpha)));
        let v1 = (1.0 - alpha) * b1 * b1 * (alpha * (c_alpha * q_alpha / qf - 1.0).powi(2) - 1.0)
            - 2.0
                * c3
                * c_alpha
                * c_alpha
                * (3.0 * (b1 - qf * b2).powi(2) + (qf + 2.0) * b2 * (2.0 * b1 - qf * b2));
        let v2 = n as f64 * (b1 * (b1 - qf * b2) * (1.0 - alpha)).powi(2) * c_alpha * c_alpha;
        let m = 2.0 / (c_alpha * c_alpha * v1 / v2);
        HardinRojas { c: c_alpha, m }
    }
}
