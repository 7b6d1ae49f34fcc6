//! Outlier rules: the WO cutoff on standardized log wiggliness, the inflated
//! central-hull MSBD rule, and robust Mahalanobis distances of `(MO, VO)`.

mod mcd;

pub use mcd::{mahalanobis_sq, mcd, subset_moments, HardinRojas, McdFit, RmdRuleConfig, DEFAULT_STARTS, RMD_QUANTILE};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::depth::DepthRanking;
use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::outlyingness::OutlyingnessProfile;
use crate::stats::median_mad;

pub const DEFAULT_ALPHA: f64 = 0.975;
pub const DEFAULT_FACTOR: f64 = 1.5;
const HULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WoRuleConfig {
    pub alpha: f64,
}

impl Default for WoRuleConfig {
    fn default() -> Self {
        WoRuleConfig {
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl WoRuleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.5 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "alpha must lie in (0.5, 1), got {}",
                self.alpha
            )))
        }
    }

    pub fn threshold(&self) -> f64 {
        Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoFlags {
    pub flags: Vec<bool>,
    /// `(log wo − med) / MAD`; `−∞` for `wo = 0`.
    pub standardized: Vec<f64>,
    pub threshold: f64,
    pub median: f64,
    pub mad: f64,
    /// MAD was zero and the median-exceedance rule was applied.
    pub degenerate: bool,
}

/// Flag curves whose standardized log WO exceeds `Φ⁻¹(α)`.
pub fn wo_outliers(profiles: &[OutlyingnessProfile], cfg: &WoRuleConfig) -> Result<WoFlags> {
    cfg.validate()?;
    let logs: Vec<f64> = profiles.iter().map(|p| p.wo.ln()).collect();
    let (median, mad) = median_mad(&logs);
    let positive = profiles.iter().filter(|p| p.wo > 0.0).count();
    if !median.is_finite() || !mad.is_finite() {
        return Err(Error::AllZeroWo {
            positive,
            total: profiles.len(),
        });
    }
    let threshold = cfg.threshold();
    let degenerate = mad == 0.0;
    let standardized: Vec<f64> = logs
        .iter()
        .map(|&l| {
            if l == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else if degenerate {
                match l.total_cmp(&median) {
                    std::cmp::Ordering::Greater => f64::INFINITY,
                    std::cmp::Ordering::Less => f64::NEG_INFINITY,
                    std::cmp::Ordering::Equal => 0.0,
                }
            } else {
                (l - median) / mad
            }
        })
        .collect();
    let flags = standardized.iter().map(|&z| z > threshold).collect();
    Ok(WoFlags {
        flags,
        standardized,
        threshold,
        median,
        mad,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsbdRuleConfig {
    pub factor: f64,
}

impl Default for MsbdRuleConfig {
    fn default() -> Self {
        MsbdRuleConfig {
            factor: DEFAULT_FACTOR,
        }
    }
}

impl MsbdRuleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factor >= 1.0 && self.factor.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "factor must be at least 1, got {}",
                self.factor
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsbdFlags {
    pub flags: Vec<bool>,
    /// Grid points at which some central hull was collinear or a single point.
    pub degenerate_times: Vec<usize>,
}

/// Central region at one time point, already inflated.
#[derive(Debug, Clone, PartialEq)]
pub enum InflatedHull {
    Polygon(Vec<[f64; 2]>),
    Segment([f64; 2], [f64; 2]),
    Point([f64; 2]),
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull without collinear vertices (monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn polygon_centroid(poly: &[[f64; 2]]) -> Option<[f64; 2]> {
    let o = poly[0];
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let a = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let j = (i + 1) % poly.len();
        let b = [poly[j][0] - o[0], poly[j][1] - o[1]];
        let w = a[0] * b[1] - b[0] * a[1];
        area += w;
        cx += (a[0] + b[0]) * w;
        cy += (a[1] + b[1]) * w;
    }
    if area.abs() <= 0.0 {
        return None;
    }
    Some([o[0] + cx / (3.0 * area), o[1] + cy / (3.0 * area)])
}

impl InflatedHull {
    /// Hull of `points` scaled by `factor` about its centroid.
    pub fn new(points: &[[f64; 2]], factor: f64) -> Self {
        let hull = convex_hull(points);
        let scale = |c: [f64; 2], v: [f64; 2]| [c[0] + factor * (v[0] - c[0]), c[1] + factor * (v[1] - c[1])];
        if hull.len() >= 3 {
            if let Some(c) = polygon_centroid(&hull) {
                return InflatedHull::Polygon(hull.iter().map(|&v| scale(c, v)).collect());
            }
        }
        match hull.len() {
            0 => unreachable!("hull of a non-empty set"),
            1 => InflatedHull::Point(hull[0]),
            _ => {
                // Farthest pair spans the collinear set.
                let (mut a, mut b, mut best) = (hull[0], hull[0], -1.0);
                for &u in &hull {
                    for &v in &hull {
                        let d = (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2);
                        if d > best {
                            (a, b, best) = (u, v, d);
                        }
                    }
                }
                let c = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                InflatedHull::Segment(scale(c, a), scale(c, b))
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !matches!(self, InflatedHull::Polygon(_))
    }

    /// Strictly outside, beyond a tolerance relative to `scale`.
    pub fn excludes(&self, x: [f64; 2], scale: f64) -> bool {
        let tol = HULL_TOL * scale;
        match self {
            InflatedHull::Point(p) => (x[0] - p[0]).hypot(x[1] - p[1]) > tol,
            InflatedHull::Segment(a, b) => {
                let d = [b[0] - a[0], b[1] - a[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let s = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
                (x[0] - a[0] - s * d[0]).hypot(x[1] - a[1] - s * d[1]) > tol
            }
            InflatedHull::Polygon(poly) => (0..poly.len()).any(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                let edge = (b[0] - a[0]).hypot(b[1] - a[1]);
                cross(a, b, x) < -tol * edge
            }),
        }
    }
}

/// Flag curves leaving the `factor`-inflated hull of the deepest half at any time point.
pub fn msbd_outliers(
    ensemble: &TrajectoryEnsemble,
    ranking: &DepthRanking,
    cfg: &MsbdRuleConfig,
) -> Result<MsbdFlags> {
    cfg.validate()?;
    let p = ensemble.p();
    if p > 2 {
        return Err(Error::UnsupportedDimension(p));
    }
    let central: Vec<usize> = ranking.order[..ranking.order.len().div_ceil(2)]
        .iter()
        .map(|id| ensemble.index_of(id))
        .collect::<Result<_>>()?;
    let curves = ensemble.trajectories();
    let point = |c: usize, t: usize| -> [f64; 2] {
        let r = curves[c].row(t);
        if p == 1 {
            [r[0], 0.0]
        } else {
            [r[0], r[1]]
        }
    };
    let mut flags = vec![false; ensemble.n()];
    let mut degenerate_times = vec![];
    for t in 0..ensemble.k() {
        let pts: Vec<[f64; 2]> = central.iter().map(|&c| point(c, t)).collect();
        let hull = InflatedHull::new(&pts, cfg.factor);
        if hull.is_degenerate() && p == 2 {
            degenerate_times.push(t);
        }
        let all: Vec<[f64; 2]> = (0..ensemble.n()).map(|c| point(c, t)).collect();
        let scale = all
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for (c, &x) in all.iter().enumerate() {
            if !flags[c] && hull.excludes(x, scale) {
                flags[c] = true;
            }
        }
    }
    Ok(MsbdFlags {
        flags,
        degenerate_times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmdFlags {
    pub flags: Vec<bool>,
    pub rmd2: Vec<f64>,
    /// Cutoff on the raw squared distance.
    pub threshold: f64,
    pub c: f64,
    pub m: f64,
    pub h: usize,
    /// `m ≤ q − 1`: the chi-square cutoff replaced the F cutoff.
    pub chi_square_fallback: bool,
    /// Constant feature columns left out of the fit.
    pub dropped_features: Vec<usize>,
}

/// `(MO, VO)` feature rows, one per profile.
pub fn mo_vo_features(profiles: &[OutlyingnessProfile]) -> DMatrix<f64> {
    let q = profiles[0].mo.len() + 1;
    DMatrix::from_fn(profiles.len(), q, |i, j| {
        if j + 1 < q {
            profiles[i].mo[j]
        } else {
            profiles[i].vo
        }
    })
}

/// Cutoff on `RMD²` for `q`-dimensional features: `F_{q, m−q+1}` scaled, or
/// the chi-square fallback when the F degrees of freedom are not positive.
pub fn rmd_threshold(hr: HardinRojas, q: usize, quantile: f64) -> (f64, bool) {
    let qf = q as f64;
    let df2 = hr.m - qf + 1.0;
    if df2 > 0.0 {
        let f = FisherSnedecor::new(qf, df2).expect("positive degrees of freedom");
        (hr.m * qf / (hr.c * df2) * f.inverse_cdf(quantile), false)
    } else {
        let chi = ChiSquared::new(qf).expect("positive degrees of freedom");
        (chi.inverse_cdf(quantile) / hr.c, true)
    }
}

/// Columns that vary across rows; constant features carry no information and
/// would make every subset covariance singular.
fn informative_columns(features: &DMatrix<f64>) -> Vec<usize> {
    features
        .column_iter()
        .enumerate()
        .filter(|(_, c)| {
            let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let (lo, hi) = (c.min(), c.max());
            hi - lo > 1e-12 * scale
        })
        .map(|(j, _)| j)
        .collect()
}

/// Robust distances of `(MO, VO)` from the MCD fit, cut at the scaled F quantile.
/// Constant feature columns are dropped first.
pub fn rmd_outliers_from_features(features: &DMatrix<f64>, cfg: &RmdRuleConfig) -> Result<RmdFlags> {
    let n = features.nrows();
    let kept = informative_columns(features);
    if kept.is_empty() {
        return Ok(RmdFlags {
            flags: vec![false; n],
            rmd2: vec![0.0; n],
            threshold: f64::INFINITY,
            c: f64::NAN,
            m: f64::NAN,
            h: n,
            chi_square_fallback: false,
            dropped_features: (0..features.ncols()).collect(),
        });
    }
    let dropped_features = (0..features.ncols()).filter(|j| !kept.contains(j)).collect();
    let features = features.select_columns(&kept);
    let q = features.ncols();
    let fit = mcd(&features, cfg)?;
    let scale = features.column_iter().map(|c| c.variance()).sum::<f64>().max(f64::MIN_POSITIVE);
    let chol = fit
        .cov
        .clone()
        .cholesky()
        .filter(|c| (0..q).all(|i| c.l_dirty()[(i, i)].powi(2) > 1e-12 * scale))
        .ok_or_else(|| Error::SingularSubsetCov {
            center: fit.center.iter().copied().collect(),
        })?;
    let rmd2 = mahalanobis_sq(&features, &fit.center, &chol);
    let h = fit.subset.len();
    let hr = HardinRojas::new(n, q, h);
    let (threshold, chi_square_fallback) = rmd_threshold(hr, q, cfg.quantile);
    Ok(RmdFlags {
        flags: rmd2.iter().map(|&d| d > threshold).collect(),
        rmd2,
        threshold,
        c: hr.c,
        m: hr.m,
        h,
        chi_square_fallback,
        dropped_features,
    })
}

pub fn rmd_outliers(profiles: &[OutlyingnessProfile], cfg: &RmdRuleConfig) -> Result<RmdFlags> {
    rmd_outliers_from_features(&mo_vo_features(profiles), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectConfig {
    pub wo: WoRuleConfig,
    pub msbd: MsbdRuleConfig,
    pub rmd: RmdRuleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub curve_id: String,
    pub wo: f64,
    pub standardized_log_wo: f64,
    pub wo_flag: bool,
    pub msbd: f64,
    pub msbd_flag: bool,
    pub rmd2: f64,
    pub rmd_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub wo_threshold: f64,
    pub rmd_threshold: f64,
    pub mcd_c: f64,
    pub mcd_m: f64,
    pub wo_degenerate: bool,
    pub rmd_chi_square_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub records: Vec<DetectionRecord>,
    pub thresholds: Thresholds,
}

impl DetectionReport {
    pub fn flagged(&self, rule: Rule) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| match rule {
                Rule::Wo => r.wo_flag,
                Rule::Msbd => r.msbd_flag,
                Rule::Rmd => r.rmd_flag,
            })
            .map(|r| r.curve_id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Wo,
    Msbd,
    Rmd,
}

/// Apply all three rules; `profiles` and `ranking` must cover the ensemble.
pub fn detect_all(
    ensemble: &TrajectoryEnsemble,
    profiles: &[OutlyingnessProfile],
    ranking: &DepthRanking,
    cfg: &DetectConfig,
) -> Result<DetectionReport> {
    let ids = ensemble.ids();
    if profiles.len() != ids.len() || profiles.iter().zip(&ids).any(|(p, id)| p.curve_id != *id) {
        return Err(Error::InvalidConfig("profiles do not match the ensemble".into()));
    }
    let wo = wo_outliers(profiles, &cfg.wo)?;
    let ms = msbd_outliers(ensemble, ranking, &cfg.msbd)?;
    let rmd = rmd_outliers(profiles, &cfg.rmd)?;
    let records = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            Ok(DetectionRecord {
                curve_id: id.to_string(),
                wo: profiles[i].wo,
                standardized_log_wo: wo.standardized[i],
                wo_flag: wo.flags[i],
                msbd: ranking.msbd_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))?,
                msbd_flag: ms.flags[i],
                rmd2: rmd.rmd2[i],
                rmd_flag: rmd.flags[i],
            })
        })
        .collect::<Result<_>>()?;
    Ok(DetectionReport {
        records,
        thresholds: Thresholds {
            wo_threshold: wo.threshold,
            rmd_threshold: rmd.threshold,
            mcd_c: rmd.c,
            mcd_m: rmd.m,
            wo_degenerate: wo.degenerate,
            rmd_chi_square_fallback: rmd.chi_square_fallback,
        },
    })
}
