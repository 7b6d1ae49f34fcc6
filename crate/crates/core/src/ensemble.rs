//! Shared domain types: time grids, trajectories and validated ensembles.
//!
//! Every analysis in this crate consumes a [`TrajectoryEnsemble`]: `n` curves
//! observed on one shared grid of `k` time points in `p` dimensions. Raw data
//! on differing grids goes through [`crate::preprocess`] first.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on successive differences for a grid to count as uniform.
pub const UNIFORM_GRID_TOL: f64 = 1e-9;

/// Seed for every stochastic routine. Equal seeds give bit-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    /// Deterministically derives an independent child seed (splitmix64 finalizer).
    pub fn derive(self, stream: u64) -> RandomSeed {
        let mut z = self
            .0
            .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RandomSeed(z ^ (z >> 31))
    }
}

/// Ordered sampling times shared by all curves of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    uniform_step: Option<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite time value".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("times must be strictly increasing".into()));
        }
        let k = points.len();
        let step = (points[k - 1] - points[0]) / (k - 1) as f64;
        let uniform = points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= UNIFORM_GRID_TOL * step);
        Ok(TimeGrid {
            points,
            uniform_step: uniform.then_some(step),
        })
    }

    /// `k` equally spaced points from `start` to `end` inclusive.
    pub fn uniform(start: f64, end: f64, k: usize) -> Result<Self> {
        if k < 3 || end <= start || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "cannot build a uniform grid on [{start}, {end}] with {k} points"
            )));
        }
        let step = (end - start) / (k - 1) as f64;
        let points = (0..k)
            .map(|i| if i + 1 == k { end } else { start + step * i as f64 })
            .collect();
        Ok(TimeGrid {
            points,
            uniform_step: Some(step),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_step
    }
}

/// One curve: `k` rows of `p` coordinates, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    id: String,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from row-major values. Shape and finiteness are
    /// checked by [`TrajectoryEnsemble::new`].
    pub fn new(id: impl Into<String>, dim: usize, values: Vec<f64>) -> Self {
        Trajectory {
            id: id.into(),
            dim,
            values,
        }
    }

    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let values = rows.iter().flatten().copied().collect();
        Trajectory::new(id, dim, values)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.values.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim.max(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f(time_index, point)` to every row, producing a new trajectory.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Trajectory {
        let values = self.rows().enumerate().flat_map(|(i, r)| f(i, r)).collect();
        Trajectory::new(self.id.clone(), self.dim, values)
    }
}

/// A validated sample of trajectories on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    grid: TimeGrid,
    dim: usize,
    trajectories: Vec<Trajectory>,
}

impl TrajectoryEnsemble {
    /// Validates raw curves against `grid`; never drops a curve silently.
    pub fn new(trajectories: Vec<Trajectory>, grid: TimeGrid) -> Result<Self> {
        let k = grid.len();
        let dim = trajectories.first().map_or(0, Trajectory::dim);
        let mut seen = HashSet::with_capacity(trajectories.len());
        for tr in &trajectories {
            if tr.dim == 0 || tr.dim != dim || tr.values.len() != k * dim {
                return Err(Error::GridMismatch(tr.id.clone()));
            }
            if let Some(pos) = tr.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    id: tr.id.clone(),
                    row: pos / dim,
                    col: pos % dim,
                });
            }
            if !seen.insert(tr.id.as_str()) {
                return Err(Error::DuplicateId(tr.id.clone()));
            }
        }
        if trajectories.len() < dim + 2 {
            return Err(Error::TooFewCurves {
                n: trajectories.len(),
                p: dim,
            });
        }
        Ok(TrajectoryEnsemble {
            grid,
            dim,
            trajectories,
        })
    }

    /// Convenience wrapper over [`TrajectoryEnsemble::new`] for `(id, rows)` pairs.
    pub fn from_raw<S: Into<String>>(raw: Vec<(S, Vec<Vec<f64>>)>, grid: TimeGrid) -> Result<Self> {
        let trajectories = raw
            .into_iter()
            .map(|(id, rows)| Trajectory::from_rows(id, &rows))
            .collect();
        TrajectoryEnsemble::new(trajectories, grid)
    }

    /// Sub-ensemble with the given ids, in the given order.
    pub fn restrict<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let trajectories = ids
            .iter()
            .map(|id| {
                self.get(id.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::UnknownId(id.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        TrajectoryEnsemble::new(trajectories, self.grid.clone())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.trajectories.len()
    }

    /// Number of grid points.
    pub fn k(&self) -> usize {
        self.grid.len()
    }

    /// Spatial dimension.
    pub fn p(&self) -> usize {
        self.dim
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn ids(&self) -> Vec<&str> {
        self.trajectories.iter().map(Trajectory::id).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.id == id)
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.trajectories
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    /// Row-major `n × p` matrix of all curves at grid index `i`.
    pub fn section(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.dim);
        for tr in &self.trajectories {
            out.extend_from_slice(tr.row(i));
        }
        out
    }

    /// Same curves, new values produced row by row; ids, grid and order kept.
    pub fn map_curves(
        &self,
        mut f: impl FnMut(usize, &[f64]) -> Vec<f64>,
    ) -> Result<TrajectoryEnsemble> {
        let trajectories = self
            .trajectories
            .iter()
            .map(|tr| tr.map_rows(&mut f))
            .collect();
        TrajectoryEnsemble::new(trajectories, self.grid.clone())
    }

    /// Replaces the grid (same length), e.g. after rescaling time.
    pub fn with_grid(&self, grid: TimeGrid) -> Result<TrajectoryEnsemble> {
        TrajectoryEnsemble::new(self.trajectories.clone(), grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves(n: usize, k: usize, p: usize) -> Vec<(String, Vec<Vec<f64>>)> {
        (0..n)
            .map(|c| {
                let rows = (0..k)
                    .map(|i| (0..p).map(|j| (c * 100 + i * 10 + j) as f64).collect())
                    .collect();
                (format!("c{c}"), rows)
            })
            .collect()
    }

    #[test]
    fn validates_well_formed_input() {
        let grid = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
        let ens = TrajectoryEnsemble::from_raw(curves(5, 10, 2), grid).unwrap();
        assert_eq!((ens.n(), ens.p(), ens.k()), (5, 2, 10));
    }

    #[test]
    fn nan_is_reported_with_its_cell() {
        let grid = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
        let mut raw = curves(5, 10, 2);
        raw[3].1[4][1] = f64::NAN;
        let err = TrajectoryEnsemble::from_raw(raw, grid).unwrap_err();
        assert_eq!(
            err,
            Error::NonFiniteValue {
                id: "c3".into(),
                row: 4,
                col: 1
            }
        );
    }

    #[test]
    fn too_few_curves_for_a_simplex() {
        let grid = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
        let err = TrajectoryEnsemble::from_raw(curves(3, 10, 2), grid).unwrap_err();
        assert_eq!(err, Error::TooFewCurves { n: 3, p: 2 });
    }

    #[test]
    fn duplicate_and_mismatched_curves_rejected() {
        let grid = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
        let mut raw = curves(5, 10, 2);
        raw[2].0 = "c0".into();
        assert_eq!(
            TrajectoryEnsemble::from_raw(raw, grid.clone()).unwrap_err(),
            Error::DuplicateId("c0".into())
        );
        let mut raw = curves(5, 10, 2);
        raw[1].1.pop();
        assert_eq!(
            TrajectoryEnsemble::from_raw(raw, grid).unwrap_err(),
            Error::GridMismatch("c1".into())
        );
    }

    #[test]
    fn restrict_identity_subset_and_unknown() {
        let grid = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
        let raw: Vec<_> = (0..10)
            .flat_map(|_| curves(1, 10, 2))
            .enumerate()
            .map(|(i, (_, rows))| (format!("c{i}"), rows))
            .collect();
        let ens = TrajectoryEnsemble::from_raw(raw, grid).unwrap();
        let all: Vec<String> = ens.ids().iter().map(|s| s.to_string()).collect();
        assert_eq!(ens.restrict(&all).unwrap(), ens);
        let six = ens.restrict(&all[..6]).unwrap();
        assert_eq!(six.n(), 6);
        assert_eq!(six.grid(), ens.grid());
        assert_eq!(
            ens.restrict(&["c1", "nope"]).unwrap_err(),
            Error::UnknownId("nope".into())
        );
    }

    #[test]
    fn grid_uniformity_detection() {
        assert!(TimeGrid::new(vec![0.0, 0.5, 1.0, 1.5]).unwrap().uniform_step().is_some());
        assert!(TimeGrid::new(vec![0.0, 0.5, 1.1, 1.5]).unwrap().uniform_step().is_none());
        assert!(TimeGrid::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s = RandomSeed(7);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(3), RandomSeed(7).derive(3));
    }
}
