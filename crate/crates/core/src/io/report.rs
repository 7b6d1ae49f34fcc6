//! The JSON report written by `rank` and `detect`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::depth::{BandAssignment, DepthRanking};
use crate::detect::DetectionReport;
use crate::error::Result;

use super::config::RunConfig;
use super::json::to_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCurve {
    /// 1 for the deepest curve.
    pub rank: usize,
    pub curve_id: String,
    pub msbd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsReport {
    pub median_id: String,
    /// Cumulative band membership by level.
    pub levels: BTreeMap<u8, Vec<String>>,
    pub outer_ids: Vec<String>,
    pub outlier_ids: Vec<String>,
}

impl BandsReport {
    pub fn new(bands: &BandAssignment, outlier_ids: Vec<String>) -> Self {
        BandsReport {
            median_id: bands.median_id.clone(),
            levels: bands.bands.clone(),
            outer_ids: bands.outer_ids.clone(),
            outlier_ids,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub ranking: Vec<RankedCurve>,
    pub detection: Option<DetectionReport>,
    pub bands: Option<BandsReport>,
}

/// Center-outward list of a ranking.
pub fn ranked_curves(ranking: &DepthRanking) -> Vec<RankedCurve> {
    ranking
        .order
        .iter()
        .enumerate()
        .map(|(i, id)| RankedCurve {
            rank: i + 1,
            curve_id: id.clone(),
            msbd: ranking.msbd_of(id).unwrap_or(f64::NAN),
        })
        .collect()
}

pub fn emit_report(report: &Report) -> Result<String> {
    to_json(report)
}
