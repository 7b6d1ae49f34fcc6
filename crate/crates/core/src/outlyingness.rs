//! Directional outlyingness `O(t)`, its mean/variation summaries (MO, VO),
//! and the wiggliness statistic WO: the mean squared norm of the discrete
//! second time-derivative of `O(t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{TimeGrid, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::pointwise::{median_index, section_outlyingness, CrossSection, PointwiseDepthMethod, PointwiseModel};

/// Minimum grid length for the WO stencil.
pub const MIN_WO_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WoWeight {
    /// `ω(t) = 1` on the whole interval.
    #[default]
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointRule {
    /// Average over the `k − 2` points where the centered stencil exists.
    #[default]
    InteriorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WoConfig {
    pub weight: WoWeight,
    pub endpoint_rule: EndpointRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlyingnessProfile {
    pub curve_id: String,
    /// `k` rows of `p` components.
    pub o_series: Vec<Vec<f64>>,
    pub mo: Vec<f64>,
    pub vo: f64,
    pub wo: f64,
}

/// Directional outlyingness rows for every curve at grid index `i`.
fn rows_at(
    ensemble: &TrajectoryEnsemble,
    i: usize,
    method: PointwiseDepthMethod,
) -> Result<Vec<Vec<f64>>> {
    let section = CrossSection::at(ensemble, i)?;
    let model = PointwiseModel::fit(&section, method)?;
    let o = section_outlyingness(&model, &section)?;
    let z = section.point(median_index(&o)).to_vec();
    let guard = model.guard();
    Ok((0..section.n())
        .map(|c| {
            let x = section.point(c);
            let diff: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
            let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm <= guard {
                vec![0.0; diff.len()]
            } else {
                diff.into_iter().map(|d| o[c] * d / norm).collect()
            }
        })
        .collect())
}

/// `O(t)` for all curves: result is indexed `[curve][time][component]`.
///
/// Cross-sections are evaluated in parallel and gathered in index order.
pub fn outlyingness_matrix(
    ensemble: &TrajectoryEnsemble,
    method: PointwiseDepthMethod,
) -> Result<Vec<Vec<Vec<f64>>>> {
    method.validate()?;
    let by_time = (0..ensemble.k())
        .into_par_iter()
        .map(|i| rows_at(ensemble, i, method))
        .collect::<Result<Vec<_>>>()?;
    let mut by_curve = vec![Vec::with_capacity(ensemble.k()); ensemble.n()];
    for rows in by_time {
        for (c, row) in rows.into_iter().enumerate() {
            by_curve[c].push(row);
        }
    }
    Ok(by_curve)
}

/// `k × p` directional outlyingness of one curve. The median at each time is
/// taken over the full cross-section, the query curve included.
pub fn directional_outlyingness(
    ensemble: &TrajectoryEnsemble,
    curve_id: &str,
    method: PointwiseDepthMethod,
) -> Result<Vec<Vec<f64>>> {
    let idx = ensemble.index_of(curve_id)?;
    method.validate()?;
    (0..ensemble.k())
        .into_par_iter()
        .map(|i| rows_at(ensemble, i, method).map(|mut rows| rows.swap_remove(idx)))
        .collect()
}

/// Time-mean `MO` and mean squared deviation from it, `VO`.
pub fn mo_vo(o_series: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let k = o_series.len();
    let p = o_series.first().map_or(0, Vec::len);
    let mut mo = vec![0.0; p];
    for row in o_series {
        for (m, v) in mo.iter_mut().zip(row) {
            *m += v;
        }
    }
    mo.iter_mut().for_each(|m| *m /= k as f64);
    let vo = o_series
        .iter()
        .map(|row| row.iter().zip(&mo).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
        .sum::<f64>()
        / k as f64;
    (mo, vo)
}

/// Sample WO on a uniform grid.
///
/// `O''` at interior index `i` is `(O[i+1] − 2 O[i] + O[i−1]) / Δt²`; WO is the
/// mean of `‖O''‖²` over the `k − 2` interior points.
pub fn wo(o_series: &[Vec<f64>], grid: &TimeGrid, config: WoConfig) -> Result<f64> {
    let k = o_series.len();
    if k < MIN_WO_POINTS {
        return Err(Error::TooShort(k));
    }
    if grid.len() != k {
        return Err(Error::InvalidConfig(format!(
            "series has {k} rows but the grid has {} points",
            grid.len()
        )));
    }
    let dt = grid.uniform_step().ok_or(Error::NonUniformGrid)?;
    let WoConfig {
        weight: WoWeight::Constant,
        endpoint_rule: EndpointRule::InteriorOnly,
    } = config;
    let dt2 = dt * dt;
    let total: f64 = o_series
        .windows(3)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .zip(&w[2])
                .map(|((a, b), c)| {
                    let d2 = (c - 2.0 * b + a) / dt2;
                    d2 * d2
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / (k - 2) as f64)
}

/// One [`OutlyingnessProfile`] per curve, in ensemble order.
pub fn profile_ensemble(
    ensemble: &TrajectoryEnsemble,
    method: PointwiseDepthMethod,
    config: WoConfig,
) -> Result<Vec<OutlyingnessProfile>> {
    if ensemble.grid().uniform_step().is_none() {
        return Err(Error::NonUniformGrid);
    }
    if ensemble.k() < MIN_WO_POINTS {
        return Err(Error::TooShort(ensemble.k()));
    }
    let matrix = outlyingness_matrix(ensemble, method)?;
    ensemble
        .trajectories()
        .iter()
        .zip(matrix)
        .map(|(tr, o_series)| {
            let (mo, vo) = mo_vo(&o_series);
            let w = wo(&o_series, ensemble.grid(), config)?;
            Ok(OutlyingnessProfile {
                curve_id: tr.id().to_string(),
                o_series,
                mo,
                vo,
                wo: w,
            })
        })
        .collect()
}
