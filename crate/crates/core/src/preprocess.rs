//! Conditioning of raw tracks: natural cubic smoothing splines per
//! coordinate, resampling onto a shared uniform grid, and start alignment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{TimeGrid, Trajectory, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::stats::median;

pub const MIN_TRACK_SAMPLES: usize = 8;
pub const MIN_TARGET_K: usize = 50;
pub const GCV_GRID_POINTS: usize = 81;
/// GCV searches `λ = h̄³ · 10^e` for `e` in this range, `h̄` the mean sample
/// spacing. The equivalent kernel then spans roughly `h̄ · 10^(e/4)`, from a
/// hundredth of a spacing up to a thousand spacings.
pub const GCV_LOG10_RANGE: (f64, f64) = (-8.0, 12.0);
const PIVOT_FLOOR: f64 = 1e-14;

/// An irregularly sampled track as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrack {
    pub id: String,
    pub times: Vec<f64>,
    /// One row of `p` coordinates per time.
    pub coords: Vec<Vec<f64>>,
}

impl RawTrack {
    pub fn new(id: impl Into<String>, times: Vec<f64>, coords: Vec<Vec<f64>>) -> Self {
        RawTrack { id: id.into(), times, coords }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coords.len() != self.times.len() {
            return Err(Error::GridMismatch(self.id.clone()));
        }
        if self.times.len() < MIN_TRACK_SAMPLES {
            return Err(Error::TooShort(self.times.len()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneTime(self.id.clone()));
        }
        let p = self.dim();
        for (row, c) in self.coords.iter().enumerate() {
            if c.len() != p || p == 0 {
                return Err(Error::GridMismatch(self.id.clone()));
            }
            if let Some(col) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { id: self.id.clone(), row, col });
            }
        }
        if let Some(row) = self.times.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFiniteValue { id: self.id.clone(), row, col: 0 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Lambda {
    Gcv,
    /// Penalty weight in the track's own time units.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Align {
    #[default]
    None,
    CommonStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub target_k: usize,
    pub lambda: Lambda,
    pub align: Align,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { target_k: 200, lambda: Lambda::Gcv, align: Align::None }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_k < MIN_TARGET_K {
            return Err(Error::InvalidConfig(format!(
                "target_k must be at least {MIN_TARGET_K}, got {}",
                self.target_k
            )));
        }
        if let Lambda::Fixed(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("lambda must be finite and ≥ 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// Reinsch-form system for one set of abscissae: `R` tridiagonal, `Q` the
/// second-divided-difference matrix, both stored by diagonals.
#[derive(Debug, Clone)]
struct Penalty {
    /// Nonzeros of column `j` of `Q`, at rows `j, j+1, j+2`.
    qa: Vec<f64>,
    qb: Vec<f64>,
    qc: Vec<f64>,
    r0: Vec<f64>,
    r1: Vec<f64>,
    qq0: Vec<f64>,
    qq1: Vec<f64>,
    qq2: Vec<f64>,
}

impl Penalty {
    fn new(x: &[f64]) -> Self {
        let n = x.len();
        let m = n - 2;
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let qa: Vec<f64> = (0..m).map(|j| 1.0 / h[j]).collect();
        let qc: Vec<f64> = (0..m).map(|j| 1.0 / h[j + 1]).collect();
        let qb: Vec<f64> = (0..m).map(|j| -qa[j] - qc[j]).collect();
        let r0 = (0..m).map(|j| (h[j] + h[j + 1]) / 3.0).collect();
        let r1 = (0..m).map(|j| if j + 1 < m { h[j + 1] / 6.0 } else { 0.0 }).collect();
        let qq0 = (0..m).map(|j| qa[j] * qa[j] + qb[j] * qb[j] + qc[j] * qc[j]).collect();
        let qq1 = (0..m)
            .map(|j| if j + 1 < m { qb[j] * qa[j + 1] + qc[j] * qb[j + 1] } else { 0.0 })
            .collect();
        let qq2 = (0..m).map(|j| if j + 2 < m { qc[j] * qa[j + 2] } else { 0.0 }).collect();
        Penalty { qa, qb, qc, r0, r1, qq0, qq1, qq2 }
    }

    fn m(&self) -> usize {
        self.r0.len()
    }

    fn qt(&self, y: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|j| self.qa[j] * y[j] + self.qb[j] * y[j + 1] + self.qc[j] * y[j + 2])
            .collect()
    }

    fn q(&self, g: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m + 2];
        for j in 0..m {
            out[j] += self.qa[j] * g[j];
            out[j + 1] += self.qb[j] * g[j];
            out[j + 2] += self.qc[j] * g[j];
        }
        out
    }

    /// Banded `LDLᵀ` of `R + λ QᵀQ`.
    fn factor(&self, lambda: f64) -> Option<BandLdl> {
        let m = self.m();
        let b0: Vec<f64> = (0..m).map(|i| self.r0[i] + lambda * self.qq0[i]).collect();
        let b1: Vec<f64> = (0..m).map(|i| self.r1[i] + lambda * self.qq1[i]).collect();
        let b2: Vec<f64> = (0..m).map(|i| lambda * self.qq2[i]).collect();
        let floor = PIVOT_FLOOR * b0.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        for i in 0..m {
            let mut di = b0[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            if !(di > floor) || !di.is_finite() {
                return None;
            }
            d[i] = di;
            let mut off = b1[i];
            if i >= 1 {
                off -= l1[i - 1] * d[i - 1] * l2[i - 1];
            }
            l1[i] = off / di;
            l2[i] = b2[i] / di;
        }
        Some(BandLdl { d, l1, l2 })
    }
}

#[derive(Debug, Clone)]
struct BandLdl {
    d: Vec<f64>,
    /// `L[i+1][i]` and `L[i+2][i]`.
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandLdl {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.d.len();
        let mut z = rhs.to_vec();
        for i in 0..m {
            if i >= 1 {
                z[i] -= self.l1[i - 1] * z[i - 1];
            }
            if i >= 2 {
                z[i] -= self.l2[i - 2] * z[i - 2];
            }
        }
        for i in 0..m {
            z[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                z[i] -= self.l1[i] * z[i + 1];
            }
            if i + 2 < m {
                z[i] -= self.l2[i] * z[i + 2];
            }
        }
        z
    }

    /// Central five diagonals of the inverse (Hutchinson–de Hoog recursion).
    fn inverse_band(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.d.len();
        let mut s0 = vec![0.0; m];
        let mut s1 = vec![0.0; m];
        let mut s2 = vec![0.0; m];
        let at = |v: &Vec<f64>, i: usize| if i < m { v[i] } else { 0.0 };
        for i in (0..m).rev() {
            let (a, b) = (self.l1[i], self.l2[i]);
            let a = if i + 1 < m { a } else { 0.0 };
            let b = if i + 2 < m { b } else { 0.0 };
            s2[i] = if i + 2 < m { -a * at(&s1, i + 1) - b * at(&s0, i + 2) } else { 0.0 };
            s1[i] = if i + 1 < m { -a * at(&s0, i + 1) - b * at(&s1, i + 1) } else { 0.0 };
            s0[i] = 1.0 / self.d[i] - a * s1[i] - b * s2[i];
        }
        (s0, s1, s2)
    }
}

/// A fitted natural cubic spline: values and second derivatives at the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSpline {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    /// Second derivatives, zero at both ends.
    pub second: Vec<f64>,
    pub lambda: f64,
}

impl SmoothingSpline {
    /// Evaluates the spline; points outside the knot range use the end pieces.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            j if j >= n => n - 2,
            j => j - 1,
        };
        let (xl, xr) = (self.knots[i], self.knots[i + 1]);
        let h = xr - xl;
        let (dl, dr) = (x - xl, xr - x);
        (dl * self.values[i + 1] + dr * self.values[i]) / h
            - dl * dr / 6.0 * ((1.0 + dl / h) * self.second[i + 1] + (1.0 + dr / h) * self.second[i])
    }

    pub fn residual_ss(&self, y: &[f64]) -> f64 {
        self.values.iter().zip(y).map(|(g, y)| (y - g) * (y - g)).sum()
    }
}

fn fit_with(p: &Penalty, ldl: &BandLdl, x: &[f64], y: &[f64], lambda: f64) -> SmoothingSpline {
    let gamma = ldl.solve(&p.qt(y));
    let qg = p.q(&gamma);
    let values = y.iter().zip(&qg).map(|(y, q)| y - lambda * q).collect();
    let mut second = Vec::with_capacity(x.len());
    second.push(0.0);
    second.extend_from_slice(&gamma);
    second.push(0.0);
    SmoothingSpline { knots: x.to_vec(), values, second, lambda }
}

/// Penalized fit minimizing `Σ(yⱼ − f(xⱼ))² + λ∫f″²`. `None` when the banded
/// system loses positive definiteness.
pub fn smoothing_spline(x: &[f64], y: &[f64], lambda: f64) -> Option<SmoothingSpline> {
    assert!(x.len() >= 3 && x.len() == y.len());
    let p = Penalty::new(x);
    let ldl = p.factor(lambda)?;
    Some(fit_with(&p, &ldl, x, y, lambda))
}

/// Generalized cross-validation score `n·RSS / tr(I − A)²`.
fn gcv_score(p: &Penalty, ldl: &BandLdl, fit: &SmoothingSpline, y: &[f64]) -> f64 {
    let (s0, s1, s2) = ldl.inverse_band();
    let tr: f64 = (0..p.m())
        .map(|j| s0[j] * p.qq0[j] + 2.0 * s1[j] * p.qq1[j] + 2.0 * s2[j] * p.qq2[j])
        .sum::<f64>()
        * fit.lambda;
    y.len() as f64 * fit.residual_ss(y) / (tr * tr)
}

/// The log-spaced λ candidates searched by GCV for abscissae `x`.
pub fn gcv_grid(x: &[f64]) -> Vec<f64> {
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let s = h * h * h;
    let (lo, hi) = GCV_LOG10_RANGE;
    (0..GCV_GRID_POINTS)
        .map(|j| s * 10f64.powf(lo + (hi - lo) * j as f64 / (GCV_GRID_POINTS - 1) as f64))
        .collect()
}

/// Fit with λ minimizing GCV over [`gcv_grid`]; the smallest λ wins ties.
pub fn smoothing_spline_gcv(x: &[f64], y: &[f64]) -> Option<SmoothingSpline> {
    let p = Penalty::new(x);
    let mut best: Option<(f64, SmoothingSpline)> = None;
    for lambda in gcv_grid(x) {
        let Some(ldl) = p.factor(lambda) else { continue };
        let fit = fit_with(&p, &ldl, x, y, lambda);
        let score = gcv_score(&p, &ldl, &fit, y);
        if score.is_finite() && best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, fit));
        }
    }
    best.map(|(_, f)| f)
}

/// `[max start, min end]` over all tracks.
pub fn common_interval(tracks: &[RawTrack]) -> Result<(f64, f64)> {
    let lo = tracks.iter().map(|t| t.times[0]).fold(f64::NEG_INFINITY, f64::max);
    let hi = tracks.iter().map(|t| t.times[t.len() - 1]).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::NoCommonInterval);
    }
    Ok((lo, hi))
}

/// Smooths every coordinate of every track and evaluates the fits on
/// `target_k` uniform points of the common interval. The output grid is that
/// interval rescaled to `[0, 1]`.
pub fn smooth_resample(tracks: &[RawTrack], cfg: &SmoothingConfig) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    if tracks.is_empty() {
        return Err(Error::EmptyInput);
    }
    for t in tracks {
        t.validate()?;
    }
    let p = tracks[0].dim();
    if let Some(t) = tracks.iter().find(|t| t.dim() != p) {
        return Err(Error::GridMismatch(t.id.clone()));
    }
    let (lo, hi) = common_interval(tracks)?;
    let k = cfg.target_k;
    let step = (hi - lo) / (k - 1) as f64;
    let eval_at: Vec<f64> = (0..k).map(|i| if i + 1 == k { hi } else { lo + step * i as f64 }).collect();
    let trajectories = tracks
        .par_iter()
        .map(|track| {
            let mut values = vec![0.0; k * p];
            for c in 0..p {
                let y: Vec<f64> = track.coords.iter().map(|r| r[c]).collect();
                let fit = match cfg.lambda {
                    Lambda::Gcv => smoothing_spline_gcv(&track.times, &y),
                    Lambda::Fixed(l) => smoothing_spline(&track.times, &y, l),
                }
                .ok_or_else(|| Error::IllConditionedFit(track.id.clone()))?;
                for (i, &t) in eval_at.iter().enumerate() {
                    let v = fit.eval(t);
                    if !v.is_finite() {
                        return Err(Error::IllConditionedFit(track.id.clone()));
                    }
                    values[i * p + c] = v;
                }
            }
            Ok(Trajectory::new(track.id.clone(), p, values))
        })
        .collect::<Result<Vec<_>>>()?;
    let ens = TrajectoryEnsemble::new(trajectories, TimeGrid::uniform(0.0, 1.0, k)?)?;
    match cfg.align {
        Align::None => Ok(ens),
        Align::CommonStart => align_common_start(&ens),
    }
}

/// Translates every curve so that it starts at the componentwise median of
/// all start points.
pub fn align_common_start(ensemble: &TrajectoryEnsemble) -> Result<TrajectoryEnsemble> {
    let p = ensemble.p();
    let target: Vec<f64> = (0..p)
        .map(|c| {
            let starts: Vec<f64> = ensemble.trajectories().iter().map(|t| t.row(0)[c]).collect();
            median(&starts)
        })
        .collect();
    let trajectories = ensemble
        .trajectories()
        .iter()
        .map(|tr| {
            let shift: Vec<f64> = tr.row(0).iter().zip(&target).map(|(x, s)| s - x).collect();
            // x + (s - x) can miss s by an ulp; the start row is pinned exactly.
            tr.map_rows(|i, r| if i == 0 { target.clone() } else { r.iter().zip(&shift).map(|(x, d)| x + d).collect() })
        })
        .collect();
    TrajectoryEnsemble::new(trajectories, ensemble.grid().clone())
}
