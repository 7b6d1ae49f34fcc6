//! Modified simplicial band depth (MSBD), its strict all-time variant (SBD),
//! center-outward ranking, central-band assignment and the trajectory
//! functional boxplot procedure.
//!
//! For `p = 2` the number of closed triangles containing a query point is
//! counted exactly in `O(m log m)` per time point with an angular sweep around
//! the query: a triangle misses the query iff its three vertices fit in an
//! open half-plane through it. Configurations where that identity needs
//! general position (a vertex on the query, two vertices collinear with it)
//! are detected and recounted by brute force over all triples.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{wo_outliers, WoFlags, WoRuleConfig};
use crate::ensemble::{RandomSeed, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::outlyingness::{profile_ensemble, OutlyingnessProfile, WoConfig};
use crate::pointwise::{interval_contains, triangle_contains, PointwiseDepthMethod, DEFAULT_CONTAINMENT_TOL};

/// Smallest accepted subsampling cap.
pub const MIN_TRIPLE_CAP: u64 = 100;
pub const DEFAULT_TRIPLE_CAP: u64 = 200_000;
/// Central band levels, in percent.
pub const BAND_LEVELS: [u8; 3] = [25, 50, 75];

// Below these the angular counter defers to brute force.
const ANGLE_DEGENERACY: f64 = 1e-8;
const NEAR_QUERY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsbdConfig {
    /// Above this many vertex subsets, a seeded uniform subsample is used.
    /// `None` always counts exactly.
    pub max_triples: Option<u64>,
    pub seed: RandomSeed,
    /// Keep the query curve out of its own vertex sets.
    pub exclude_query: bool,
}

impl Default for MsbdConfig {
    fn default() -> Self {
        MsbdConfig {
            max_triples: Some(DEFAULT_TRIPLE_CAP),
            seed: RandomSeed::default(),
            exclude_query: true,
        }
    }
}

impl MsbdConfig {
    pub fn validate(&self) -> Result<()> {
        match self.max_triples {
            Some(cap) if cap < MIN_TRIPLE_CAP => Err(Error::InvalidConfig(format!(
                "max_triples must be at least {MIN_TRIPLE_CAP}, got {cap}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub curve_id: String,
    pub msbd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRanking {
    /// In ensemble order.
    pub entries: Vec<RankEntry>,
    /// Ids by decreasing depth, ties by ascending id.
    pub order: Vec<String>,
}

impl DepthRanking {
    pub fn from_entries(entries: Vec<RankEntry>) -> Self {
        let mut sorted: Vec<&RankEntry> = entries.iter().collect();
        sorted.sort_by(|a, b| b.msbd.total_cmp(&a.msbd).then_with(|| a.curve_id.cmp(&b.curve_id)));
        let order = sorted.into_iter().map(|e| e.curve_id.clone()).collect();
        DepthRanking { entries, order }
    }

    pub fn msbd_of(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.curve_id == id).map(|e| e.msbd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandAssignment {
    pub median_id: String,
    /// Cumulative: `bands[50]` contains `bands[25]`.
    pub bands: BTreeMap<u8, Vec<String>>,
    /// Ranked curves beyond the 75% band.
    pub outer_ids: Vec<String>,
}

impl BandAssignment {
    /// Innermost band holding `id`, if any.
    pub fn level_of(&self, id: &str) -> Option<u8> {
        self.bands
            .iter()
            .find(|(_, ids)| ids.iter().any(|b| b == id))
            .map(|(&l, _)| l)
    }
}

fn binom3(m: usize) -> u64 {
    if m < 3 {
        0
    } else {
        let m = m as u64;
        m * (m - 1) * (m - 2) / 6
    }
}

fn binom2(m: usize) -> u64 {
    if m < 2 {
        0
    } else {
        (m as u64) * (m as u64 - 1) / 2
    }
}

/// Number of vertex subsets of size `p + 1` drawn from `m` curves.
fn subset_count(m: usize, dim: usize) -> u64 {
    if dim == 1 {
        binom2(m)
    } else {
        binom3(m)
    }
}

fn check_dimension(ensemble: &TrajectoryEnsemble) -> Result<()> {
    match ensemble.p() {
        1 | 2 => Ok(()),
        p => Err(Error::UnsupportedDimension(p)),
    }
}

/// Exact count of closed triangles over `pool` containing `q`.
fn count_triangles(pool: &[[f64; 2]], q: [f64; 2]) -> u64 {
    let m = pool.len();
    if m < 3 {
        return 0;
    }
    let scale = pool.iter().fold(0.0f64, |s, p| {
        s.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs())
    });
    if let Some(count) = count_collinear(pool, q, scale) {
        return count;
    }
    let near = NEAR_QUERY * scale;
    let mut angles = Vec::with_capacity(m);
    for p in pool {
        let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
        if dx.abs() <= near && dy.abs() <= near {
            return brute_count_triangles(pool, q);
        }
        angles.push(dy.atan2(dx));
    }
    angles.sort_by(f64::total_cmp);
    // Two vertices collinear with q (same or opposite direction).
    let mut folded: Vec<f64> = angles
        .iter()
        .map(|a| a.rem_euclid(std::f64::consts::PI))
        .collect();
    folded.sort_by(f64::total_cmp);
    let pi = std::f64::consts::PI;
    if folded.windows(2).any(|w| w[1] - w[0] < ANGLE_DEGENERACY)
        || folded[0] + pi - folded[m - 1] < ANGLE_DEGENERACY
    {
        return brute_count_triangles(pool, q);
    }
    let mut outside = 0u64;
    let mut j = 0usize;
    for i in 0..m {
        // j indexes the doubled sequence angles ++ (angles + 2π).
        if j < i + 1 {
            j = i + 1;
        }
        loop {
            let a = if j < m { angles[j] } else { angles[j - m] + 2.0 * pi };
            if j < i + m && a - angles[i] < pi {
                j += 1;
            } else {
                break;
            }
        }
        outside += binom2(j - i - 1);
    }
    binom3(m) - outside
}

/// Exact count when the whole pool lies on one line: every triangle is a
/// segment, so only a query on that line can be covered. `None` otherwise.
fn count_collinear(pool: &[[f64; 2]], q: [f64; 2], scale: f64) -> Option<u64> {
    let a = pool[0];
    let b = *pool.iter().max_by(|u, v| {
        let du = (u[0] - a[0]).hypot(u[1] - a[1]);
        let dv = (v[0] - a[0]).hypot(v[1] - a[1]);
        du.total_cmp(&dv)
    })?;
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    if len == 0.0 {
        return None;
    }
    let d = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    let off = |p: [f64; 2]| ((p[0] - a[0]) * d[1] - (p[1] - a[1]) * d[0]).abs();
    let tol = DEFAULT_CONTAINMENT_TOL * scale;
    if pool.iter().any(|&p| off(p) > tol) {
        return None;
    }
    if off(q) > tol {
        // Clearly off the line; near-boundary cases go to brute force.
        return if off(q) > 1e3 * tol { Some(0) } else { None };
    }
    let along = |p: [f64; 2]| (p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1];
    let sq = along(q);
    let mut below = 0;
    let mut above = 0;
    for &p in pool {
        let s = along(p);
        if (s - sq).abs() <= NEAR_QUERY * scale {
            return None;
        }
        if s < sq {
            below += 1;
        } else {
            above += 1;
        }
    }
    Some(binom3(pool.len()) - binom3(below) - binom3(above))
}

fn brute_count_triangles(pool: &[[f64; 2]], q: [f64; 2]) -> u64 {
    let m = pool.len();
    let mut count = 0;
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                if triangle_contains(pool[a], pool[b], pool[c], q, DEFAULT_CONTAINMENT_TOL) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Exact count of closed intervals over `pool` containing `q`.
fn count_intervals(pool: &[f64], q: f64) -> u64 {
    let scale = pool.iter().fold(0.0f64, |s, v| s.max((v - q).abs()));
    if pool.iter().any(|v| (v - q).abs() <= NEAR_QUERY * scale) {
        let mut count = 0;
        for a in 0..pool.len() {
            for b in a + 1..pool.len() {
                if interval_contains(pool[a], pool[b], q, DEFAULT_CONTAINMENT_TOL) {
                    count += 1;
                }
            }
        }
        return count;
    }
    let below = pool.iter().filter(|&&v| v < q).count();
    let above = pool.len() - below;
    binom2(pool.len()) - binom2(below) - binom2(above)
}

/// Colex unranking of a `size`-subset of `0..m` (size 2 or 3).
fn unrank(mut r: u64, size: usize, m: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut upper = m;
    for slot in (0..size).rev() {
        let choose = |c: usize| -> u64 {
            match slot + 1 {
                3 => binom3(c),
                2 => binom2(c),
                _ => c as u64,
            }
        };
        // Largest c < upper with C(c, slot+1) <= r.
        let (mut lo, mut hi) = (slot, upper - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if choose(mid) <= r {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        out[slot] = lo;
        r -= choose(lo);
        upper = lo;
    }
    out
}

/// Vertex pool of a query: the reference curves, minus the query itself when excluded.
struct PoolPlan {
    members: Vec<usize>,
    /// Query is a vertex in every subset through it (included and referenced).
    query_in_pool: bool,
}

fn pool_for(query: usize, reference: &[usize], exclude_query: bool) -> PoolPlan {
    let members: Vec<usize> = reference.iter().copied().filter(|&r| r != query).collect();
    let query_in_pool = !exclude_query && members.len() < reference.len();
    PoolPlan {
        members,
        query_in_pool,
    }
}

/// Sampled subsets for a pool of size `m`, or `None` for exact counting.
fn sampled_subsets(m: usize, dim: usize, cfg: &MsbdConfig) -> Option<Vec<[usize; 3]>> {
    let total = subset_count(m, dim);
    let cap = cfg.max_triples?;
    if total <= cap {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.derive(m as u64).0);
    let picks = rand::seq::index::sample(&mut rng, total as usize, cap as usize);
    let mut subsets: Vec<[usize; 3]> = picks
        .into_iter()
        .map(|r| unrank(r as u64, dim + 1, m))
        .collect();
    subsets.sort_unstable();
    Some(subsets)
}

fn contains_subset(points: &[&[f64]], subset: &[usize; 3], dim: usize, q: &[f64]) -> bool {
    if dim == 1 {
        interval_contains(points[subset[0]][0], points[subset[1]][0], q[0], DEFAULT_CONTAINMENT_TOL)
    } else {
        let p = |i: usize| [points[subset[i]][0], points[subset[i]][1]];
        triangle_contains(p(0), p(1), p(2), [q[0], q[1]], DEFAULT_CONTAINMENT_TOL)
    }
}

/// Containing-subset count and total subset count for one query at one time.
fn count_at(
    ensemble: &TrajectoryEnsemble,
    t: usize,
    query: usize,
    plan: &PoolPlan,
    sample: Option<&[[usize; 3]]>,
) -> (u64, u64) {
    let dim = ensemble.p();
    let curves = ensemble.trajectories();
    let q = curves[query].row(t);
    let m = plan.members.len();
    let (mut hits, mut total) = match sample {
        Some(subsets) => {
            let pts: Vec<&[f64]> = plan.members.iter().map(|&c| curves[c].row(t)).collect();
            let hits = subsets
                .iter()
                .filter(|s| contains_subset(&pts, s, dim, q))
                .count() as u64;
            (hits, subsets.len() as u64)
        }
        None if dim == 1 => {
            let pool: Vec<f64> = plan.members.iter().map(|&c| curves[c].row(t)[0]).collect();
            (count_intervals(&pool, q[0]), binom2(m))
        }
        None => {
            let pool: Vec<[f64; 2]> = plan
                .members
                .iter()
                .map(|&c| {
                    let r = curves[c].row(t);
                    [r[0], r[1]]
                })
                .collect();
            (count_triangles(&pool, [q[0], q[1]]), binom3(m))
        }
    };
    if plan.query_in_pool && sample.is_none() {
        // Subsets with the query as a vertex always contain it.
        let through = if dim == 1 { m as u64 } else { binom2(m) };
        hits += through;
        total += through;
    }
    (hits, total)
}

/// MSBD of every curve relative to the vertex pool `reference` (indices into
/// the ensemble). Queries outside the reference use the full reference pool.
pub fn msbd_against(
    ensemble: &TrajectoryEnsemble,
    reference: &[usize],
    cfg: &MsbdConfig,
) -> Result<Vec<f64>> {
    check_dimension(ensemble)?;
    cfg.validate()?;
    let dim = ensemble.p();
    if reference.len() < dim + 2 {
        return Err(Error::TooFewCurves {
            n: reference.len(),
            p: dim,
        });
    }
    let n = ensemble.n();
    let plans: Vec<PoolPlan> = (0..n).map(|q| pool_for(q, reference, cfg.exclude_query)).collect();
    let mut samples: BTreeMap<usize, Option<Vec<[usize; 3]>>> = BTreeMap::new();
    for plan in &plans {
        let m = plan.members.len();
        samples.entry(m).or_insert_with(|| sampled_subsets(m, dim, cfg));
    }
    let k = ensemble.k();
    let per_time: Vec<Vec<(u64, u64)>> = (0..k)
        .into_par_iter()
        .map(|t| {
            plans
                .iter()
                .enumerate()
                .map(|(q, plan)| {
                    let sample = samples[&plan.members.len()].as_deref();
                    count_at(ensemble, t, q, plan, sample)
                })
                .collect()
        })
        .collect();
    // Integer sums: identical regardless of how the time points were split.
    Ok((0..n)
        .map(|q| {
            let (hits, total) = per_time
                .iter()
                .fold((0u64, 0u64), |(h, tot), row| (h + row[q].0, tot + row[q].1));
            if total == 0 {
                0.0
            } else {
                hits as f64 / total as f64
            }
        })
        .collect())
}

/// MSBD of every curve against the rest of the ensemble.
pub fn msbd_all(ensemble: &TrajectoryEnsemble, cfg: &MsbdConfig) -> Result<Vec<f64>> {
    let reference: Vec<usize> = (0..ensemble.n()).collect();
    msbd_against(ensemble, &reference, cfg)
}

/// Time fraction a curve spends inside random sample simplices, averaged over
/// all vertex subsets of size `p + 1`.
pub fn msbd(ensemble: &TrajectoryEnsemble, curve_id: &str, cfg: &MsbdConfig) -> Result<f64> {
    let idx = ensemble.index_of(curve_id)?;
    Ok(msbd_all(ensemble, cfg)?[idx])
}

/// Fraction of vertex subsets whose simplex contains the curve at every grid point.
pub fn sbd(ensemble: &TrajectoryEnsemble, curve_id: &str, cfg: &MsbdConfig) -> Result<f64> {
    check_dimension(ensemble)?;
    cfg.validate()?;
    let query = ensemble.index_of(curve_id)?;
    let dim = ensemble.p();
    let n = ensemble.n();
    if n < dim + 2 {
        return Err(Error::TooFewCurves { n, p: dim });
    }
    let reference: Vec<usize> = (0..n).collect();
    let plan = pool_for(query, &reference, cfg.exclude_query);
    let mut members = plan.members.clone();
    if plan.query_in_pool {
        members.push(query);
    }
    let m = members.len();
    let subsets: Vec<[usize; 3]> = match sampled_subsets(m, dim, cfg) {
        Some(s) => s,
        None => (0..subset_count(m, dim)).map(|r| unrank(r, dim + 1, m)).collect(),
    };
    let curves = ensemble.trajectories();
    let all_time = subsets
        .par_iter()
        .filter(|s| {
            (0..ensemble.k()).all(|t| {
                let pts: Vec<&[f64]> = s[..=dim].iter().map(|&i| curves[members[i]].row(t)).collect();
                let local: [usize; 3] = [0, 1, 2];
                contains_subset(&pts, &local, dim, curves[query].row(t))
            })
        })
        .count();
    Ok(all_time as f64 / subsets.len() as f64)
}

/// MSBD for every curve plus the induced center-outward order.
pub fn rank(ensemble: &TrajectoryEnsemble, cfg: &MsbdConfig) -> Result<DepthRanking> {
    let depths = msbd_all(ensemble, cfg)?;
    let entries = ensemble
        .ids()
        .into_iter()
        .zip(depths)
        .map(|(id, msbd)| RankEntry {
            curve_id: id.to_string(),
            msbd,
        })
        .collect();
    Ok(DepthRanking::from_entries(entries))
}

/// Nested 25/50/75% central bands over the ranked curves (sizes by ceiling).
pub fn assign_bands(ranking: &DepthRanking) -> Result<BandAssignment> {
    assign_bands_at(ranking, BAND_LEVELS)
}

pub fn validate_band_levels(levels: [u8; 3]) -> Result<()> {
    if levels[0] == 0 || levels[2] > 100 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "band levels must be strictly increasing percentages in 1..=100, got {levels:?}"
        )));
    }
    Ok(())
}

/// Nested central bands at the given percentage levels.
pub fn assign_bands_at(ranking: &DepthRanking, levels: [u8; 3]) -> Result<BandAssignment> {
    validate_band_levels(levels)?;
    let m = ranking.order.len();
    if m < 4 {
        return Err(Error::TooFewCurves { n: m, p: 2 });
    }
    let size = |level: u8| (level as usize * m).div_ceil(100);
    let bands = levels
        .iter()
        .map(|&l| (l, ranking.order[..size(l)].to_vec()))
        .collect();
    Ok(BandAssignment {
        median_id: ranking.order[0].clone(),
        bands,
        outer_ids: ranking.order[size(levels[2])..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotConfig {
    pub method: PointwiseDepthMethod,
    pub wo: WoConfig,
    pub rule: WoRuleConfig,
    pub msbd: MsbdConfig,
    pub band_levels: [u8; 3],
}

impl Default for BoxplotConfig {
    fn default() -> Self {
        BoxplotConfig {
            method: PointwiseDepthMethod::default(),
            wo: WoConfig::default(),
            rule: WoRuleConfig::default(),
            msbd: MsbdConfig::default(),
            band_levels: BAND_LEVELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boxplot {
    pub bands: BandAssignment,
    pub outlier_ids: Vec<String>,
    /// Ranking of the curves that survived outlier removal.
    pub ranking: DepthRanking,
    /// Every curve's MSBD; outliers are measured against the surviving curves.
    pub msbd: Vec<RankEntry>,
    pub profiles: Vec<OutlyingnessProfile>,
    pub wo_flags: WoFlags,
}

/// Trajectory functional boxplot: set WO outliers aside, rank the rest by
/// MSBD, then form central bands on the non-outliers.
pub fn build_boxplot(ensemble: &TrajectoryEnsemble, cfg: &BoxplotConfig) -> Result<Boxplot> {
    let profiles = profile_ensemble(ensemble, cfg.method, cfg.wo)?;
    let wo_flags = wo_outliers(&profiles, &cfg.rule)?;
    boxplot_from_flags(ensemble, profiles, wo_flags, &cfg.msbd, cfg.band_levels)
}

/// Steps 2–3 of [`build_boxplot`] for precomputed WO profiles and flags.
pub fn boxplot_from_flags(
    ensemble: &TrajectoryEnsemble,
    profiles: Vec<OutlyingnessProfile>,
    wo_flags: WoFlags,
    msbd_cfg: &MsbdConfig,
    band_levels: [u8; 3],
) -> Result<Boxplot> {
    validate_band_levels(band_levels)?;
    let survivors: Vec<usize> = (0..ensemble.n()).filter(|&i| !wo_flags.flags[i]).collect();
    let needed = ensemble.p() + 2;
    if survivors.len() < needed.max(4) {
        return Err(Error::AllCurvesFlagged {
            survivors: survivors.len(),
            needed: needed.max(4),
        });
    }
    let depths = msbd_against(ensemble, &survivors, msbd_cfg)?;
    let ids = ensemble.ids();
    let msbd: Vec<RankEntry> = ids
        .iter()
        .zip(&depths)
        .map(|(id, &d)| RankEntry {
            curve_id: id.to_string(),
            msbd: d,
        })
        .collect();
    let ranking = DepthRanking::from_entries(survivors.iter().map(|&i| msbd[i].clone()).collect());
    let bands = assign_bands_at(&ranking, band_levels)?;
    let outlier_ids = (0..ensemble.n())
        .filter(|&i| wo_flags.flags[i])
        .map(|i| ids[i].to_string())
        .collect();
    Ok(Boxplot {
        bands,
        outlier_ids,
        ranking,
        msbd,
        profiles,
        wo_flags,
    })
}
