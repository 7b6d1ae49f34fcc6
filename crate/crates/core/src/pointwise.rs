//! Cross-sectional depth: outlyingness of a point relative to the ensemble at
//! one fixed time, the matching sample median, and closed simplex containment.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::stats::{median_in_place, MAD_SCALE};

/// Default number of projection directions.
pub const DEFAULT_DIRECTIONS: usize = 180;
/// Minimum number of projection directions accepted.
pub const MIN_DIRECTIONS: usize = 8;
/// Relative MAD guard, multiplied by the section's coordinate range.
pub const MAD_GUARD: f64 = 1e-12;
/// Outlyingness assigned along a direction whose MAD collapsed to zero.
pub const CAPPED_OUTLYINGNESS: f64 = 1e12;
/// Ridge factor applied to `trace(S)/p` before inverting the covariance.
pub const MAHALANOBIS_RIDGE: f64 = 1e-10;
/// Default relative tolerance of [`simplex_contains`].
pub const DEFAULT_CONTAINMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PointwiseDepthMethod {
    /// Stahel–Donoho outlyingness over a fixed set of directions.
    Projection { directions: usize },
    /// `1/d − 1` for the Mahalanobis depth with the classical covariance.
    Mahalanobis,
}

impl Default for PointwiseDepthMethod {
    fn default() -> Self {
        PointwiseDepthMethod::Projection {
            directions: DEFAULT_DIRECTIONS,
        }
    }
}

impl PointwiseDepthMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PointwiseDepthMethod::Projection { directions } if directions < MIN_DIRECTIONS => {
                Err(Error::InvalidConfig(format!(
                    "projection needs at least {MIN_DIRECTIONS} directions, got {directions}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// The ensemble evaluated at one grid point: `n × p`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    points: Vec<f64>,
    dim: usize,
}

impl CrossSection {
    pub fn new(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::InvalidConfig("cross-section shape mismatch".into()));
        }
        let n = points.len() / dim;
        if n < dim + 2 {
            return Err(Error::TooFewCurves { n, p: dim });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateSection("non-finite coordinate".into()));
        }
        Ok(CrossSection { points, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        CrossSection::new(rows.iter().flatten().copied().collect(), dim)
    }

    pub fn at(ensemble: &TrajectoryEnsemble, i: usize) -> Result<Self> {
        CrossSection::new(ensemble.section(i), ensemble.p())
    }

    pub fn n(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Largest coordinate range; sets the absolute size of the MAD guard.
    fn scale(&self) -> f64 {
        (0..self.dim)
            .map(|j| {
                let (lo, hi) = self.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[j]), hi.max(r[j]))
                });
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Largest absolute coordinate.
    fn magnitude(&self) -> f64 {
        self.rows().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Deterministic projection directions: equally spaced on the half-circle for
/// `p = 2`; the coordinate axes followed by fixed pseudo-random unit vectors
/// for `p ≥ 3`.
pub fn projection_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|d| {
                let theta = std::f64::consts::PI * d as f64 / count as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
            let mut dirs: Vec<Vec<f64>> = (0..dim)
                .map(|j| (0..dim).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            while dirs.len() < count.max(dim) {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    dirs.push(v.into_iter().map(|x| x / norm).collect());
                }
            }
            dirs
        }
    }
}

/// Outlyingness of arbitrary query points relative to one fitted section.
///
/// Fitting is the expensive part (medians per direction, or a covariance
/// factorization); evaluation is cheap, so one model is built per time point
/// and reused for all curves.
#[derive(Debug, Clone)]
pub struct PointwiseModel {
    dim: usize,
    guard: f64,
    kind: ModelKind,
}

#[derive(Debug, Clone)]
enum ModelKind {
    /// Every section point coincides with `at`.
    Collapsed { at: Vec<f64> },
    Projection {
        dirs: Vec<Vec<f64>>,
        med: Vec<f64>,
        mad: Vec<f64>,
    },
    Mahalanobis {
        mean: DVector<f64>,
        inv: DMatrix<f64>,
    },
}

impl PointwiseModel {
    pub fn fit(section: &CrossSection, method: PointwiseDepthMethod) -> Result<Self> {
        method.validate()?;
        let dim = section.dim();
        let scale = section.scale();
        // Spread at rounding level relative to the coordinates counts as collapsed.
        let collapse_tol = MAD_GUARD * section.magnitude();
        if scale <= collapse_tol {
            return Ok(PointwiseModel {
                dim,
                guard: collapse_tol,
                kind: ModelKind::Collapsed {
                    at: section.point(0).to_vec(),
                },
            });
        }
        let guard = MAD_GUARD * scale;
        let kind = match method {
            PointwiseDepthMethod::Projection { directions } => {
                let dirs = projection_directions(dim, directions);
                let mut buf = vec![0.0; section.n()];
                let mut med = Vec::with_capacity(dirs.len());
                let mut mad = Vec::with_capacity(dirs.len());
                for u in &dirs {
                    for (b, r) in buf.iter_mut().zip(section.rows()) {
                        *b = dot(u, r);
                    }
                    let proj = buf.clone();
                    let m = median_in_place(&mut buf);
                    for (b, x) in buf.iter_mut().zip(&proj) {
                        *b = (x - m).abs();
                    }
                    med.push(m);
                    mad.push(MAD_SCALE * median_in_place(&mut buf));
                }
                ModelKind::Projection { dirs, med, mad }
            }
            PointwiseDepthMethod::Mahalanobis => {
                let (mean, cov) = classical_covariance(section);
                let ridge = MAHALANOBIS_RIDGE * cov.trace() / dim as f64;
                let reg = cov + DMatrix::identity(dim, dim) * ridge;
                let inv = reg
                    .cholesky()
                    .ok_or_else(|| {
                        Error::DegenerateSection("covariance singular beyond ridge".into())
                    })?
                    .inverse();
                ModelKind::Mahalanobis { mean, inv }
            }
        };
        Ok(PointwiseModel { dim, guard, kind })
    }

    /// Absolute tolerance below which deviations count as zero.
    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn outlyingness(&self, query: &[f64]) -> Result<f64> {
        debug_assert_eq!(query.len(), self.dim);
        match &self.kind {
            ModelKind::Collapsed { at } => {
                if at.iter().zip(query).all(|(a, q)| (a - q).abs() <= self.guard) {
                    Ok(0.0)
                } else {
                    Err(Error::DegenerateSection(
                        "all section points coincide but the query differs".into(),
                    ))
                }
            }
            ModelKind::Projection { dirs, med, mad } => {
                let mut best = 0.0f64;
                let mut usable = false;
                let mut off_axis = false;
                for ((u, &m), &s) in dirs.iter().zip(med).zip(mad) {
                    let dev = (dot(u, query) - m).abs();
                    let o = if s < self.guard {
                        if dev < self.guard {
                            0.0
                        } else {
                            off_axis = true;
                            CAPPED_OUTLYINGNESS
                        }
                    } else {
                        usable = true;
                        dev / s
                    };
                    best = best.max(o);
                }
                if !usable && off_axis {
                    return Err(Error::DegenerateSection(
                        "every projection has zero MAD".into(),
                    ));
                }
                Ok(best)
            }
            ModelKind::Mahalanobis { mean, inv } => {
                let d = DVector::from_column_slice(query) - mean;
                Ok((d.transpose() * inv * &d)[(0, 0)].max(0.0))
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn classical_covariance(section: &CrossSection) -> (DVector<f64>, DMatrix<f64>) {
    let (n, p) = (section.n(), section.dim());
    let mut mean = DVector::zeros(p);
    for r in section.rows() {
        for j in 0..p {
            mean[j] += r[j];
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(p, p);
    for r in section.rows() {
        for a in 0..p {
            for b in 0..p {
                cov[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    cov /= (n - 1) as f64;
    (mean, cov)
}

/// Outlyingness of `query` with respect to `section`.
pub fn pointwise_outlyingness(
    section: &CrossSection,
    query: &[f64],
    method: PointwiseDepthMethod,
) -> Result<f64> {
    PointwiseModel::fit(section, method)?.outlyingness(query)
}

/// Outlyingness of every section point under one fitted model.
pub fn section_outlyingness(model: &PointwiseModel, section: &CrossSection) -> Result<Vec<f64>> {
    (0..section.n())
        .map(|i| model.outlyingness(section.point(i)))
        .collect()
}

/// Row index of the least outlying section point; ties go to the lowest index.
pub fn median_index(outlyingness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &o) in outlyingness.iter().enumerate() {
        if o < outlyingness[best] {
            best = i;
        }
    }
    best
}

/// Sample point of minimal outlyingness.
pub fn pointwise_median(section: &CrossSection, method: PointwiseDepthMethod) -> Result<Vec<f64>> {
    let model = PointwiseModel::fit(section, method)?;
    let o = section_outlyingness(&model, section)?;
    Ok(section.point(median_index(&o)).to_vec())
}

/// Closed containment of `query` in the simplex spanned by `vertices`
/// (`(p + 1) × p`, row-major) for `p ∈ {1, 2}`.
///
/// `tol` is relative: barycentric coordinates may dip to `−tol`, and
/// degenerate simplices (collinear triangles, zero-length intervals) accept
/// points within `tol × scale` of the covering segment, where scale is the
/// largest vertex distance.
///
/// # Panics
/// On `p ∉ {1, 2}` or a vertex slice of the wrong length.
pub fn simplex_contains(vertices: &[f64], query: &[f64], tol: f64) -> bool {
    match query.len() {
        1 => {
            assert_eq!(vertices.len(), 2, "interval needs two vertices");
            interval_contains(vertices[0], vertices[1], query[0], tol)
        }
        2 => {
            assert_eq!(vertices.len(), 6, "triangle needs three vertices");
            triangle_contains(
                [vertices[0], vertices[1]],
                [vertices[2], vertices[3]],
                [vertices[4], vertices[5]],
                [query[0], query[1]],
                tol,
            )
        }
        p => panic!("simplex containment is implemented for p = 1, 2 only (got {p})"),
    }
}

pub(crate) fn interval_contains(a: f64, b: f64, q: f64, tol: f64) -> bool {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let slack = tol * (hi - lo);
    q >= lo - slack && q <= hi + slack
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn segment_distance(a: [f64; 2], b: [f64; 2], q: [f64; 2]) -> f64 {
    let len2 = dist2(a, b);
    if len2 == 0.0 {
        return dist2(a, q).sqrt();
    }
    let t = (((q[0] - a[0]) * (b[0] - a[0]) + (q[1] - a[1]) * (b[1] - a[1])) / len2).clamp(0.0, 1.0);
    dist2([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], q).sqrt()
}

pub(crate) fn triangle_contains(a: [f64; 2], b: [f64; 2], c: [f64; 2], q: [f64; 2], tol: f64) -> bool {
    let (dab, dbc, dca) = (dist2(a, b), dist2(b, c), dist2(c, a));
    let scale2 = dab.max(dbc).max(dca);
    let det = cross(a, b, c);
    if det.abs() <= tol * scale2 || scale2 == 0.0 {
        // Collinear: the covering segment joins the farthest pair.
        let (s, e) = if dab >= dbc && dab >= dca {
            (a, b)
        } else if dbc >= dca {
            (b, c)
        } else {
            (c, a)
        };
        return segment_distance(s, e, q) <= tol * scale2.sqrt();
    }
    let la = cross(q, b, c) / det;
    let lb = cross(q, c, a) / det;
    let lc = cross(q, a, b) / det;
    la >= -tol && lb >= -tol && lc >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    const MAHA: PointwiseDepthMethod = PointwiseDepthMethod::Mahalanobis;

    fn circle(n: usize) -> CrossSection {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        CrossSection::from_rows(&rows).unwrap()
    }

    #[test]
    fn symmetric_center_has_zero_outlyingness() {
        let mut rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 8.0;
                vec![2.0 + a.cos(), -1.0 + 3.0 * a.sin()]
            })
            .collect();
        rows.push(vec![2.0, -1.0]);
        let s = CrossSection::from_rows(&rows).unwrap();
        let o = pointwise_outlyingness(&s, &[2.0, -1.0], MAHA).unwrap();
        assert!(o.abs() < 1e-24, "{o}");
        let proj = pointwise_outlyingness(&s, &[2.0, -1.0], PointwiseDepthMethod::default()).unwrap();
        assert!(proj.abs() < 1e-12, "{proj}");
    }

    #[test]
    fn mahalanobis_matches_hand_coded_covariance() {
        let s = circle(8);
        let q = [3.0, 0.0];
        // Oracle: explicit loops, 2x2 inverse by cofactors.
        let n = 8.0;
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..8 {
            mx += s.point(i)[0];
            my += s.point(i)[1];
        }
        mx /= n;
        my /= n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..8 {
            let (dx, dy) = (s.point(i)[0] - mx, s.point(i)[1] - my);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let (sxx, sxy, syy) = (sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0));
        let ridge = MAHALANOBIS_RIDGE * (sxx + syy) / 2.0;
        let (a, b, d) = (sxx + ridge, sxy, syy + ridge);
        let det = a * d - b * b;
        let (dx, dy) = (q[0] - mx, q[1] - my);
        let md2 = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        let depth = 1.0 / (1.0 + md2);
        let expected = 1.0 / depth - 1.0;
        let got = pointwise_outlyingness(&s, &q, MAHA).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
        // 9 / (4/7) without the ridge.
        assert!((got - 15.75).abs() < 1e-6);
    }

    #[test]
    fn more_directions_never_lower_outlyingness() {
        let rows: Vec<Vec<f64>> = [[0.3, 1.0], [2.0, -0.5], [1.1, 0.2], [-1.0, -1.3], [0.7, 2.2], [1.9, 1.4]]
            .iter()
            .map(|r| r.to_vec())
            .collect();
        let s = CrossSection::from_rows(&rows).unwrap();
        for q in [[4.0, 1.0], [0.5, 0.5], [-2.0, 3.0]] {
            let few = pointwise_outlyingness(&s, &q, PointwiseDepthMethod::Projection { directions: 8 }).unwrap();
            let many = pointwise_outlyingness(&s, &q, PointwiseDepthMethod::Projection { directions: 360 }).unwrap();
            assert!(few <= many, "{few} > {many}");
        }
        assert!(PointwiseDepthMethod::Projection { directions: 4 }.validate().is_err());
    }

    #[test]
    fn median_is_symmetric_center() {
        let mut rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 3.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        rows.insert(2, vec![0.0, 0.0]);
        let s = CrossSection::from_rows(&rows).unwrap();
        for m in [MAHA, PointwiseDepthMethod::default()] {
            assert_eq!(pointwise_median(&s, m).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn median_is_brute_force_argmin() {
        let rows = vec![
            vec![0.1, 0.9],
            vec![1.7, -0.4],
            vec![0.6, 0.3],
            vec![-1.2, 0.8],
            vec![2.5, 2.0],
        ];
        let s = CrossSection::from_rows(&rows).unwrap();
        let scores: Vec<f64> = rows
            .iter()
            .map(|r| pointwise_outlyingness(&s, r, MAHA).unwrap())
            .collect();
        let mut best = 0;
        for i in 1..5 {
            if scores[i] < scores[best] {
                best = i;
            }
        }
        assert_eq!(pointwise_median(&s, MAHA).unwrap(), rows[best]);
    }

    #[test]
    fn median_ties_go_to_lowest_index() {
        assert_eq!(median_index(&[3.0, 1.0, 2.0, 1.0]), 1);
        // Two mirror-image points tie exactly under Mahalanobis.
        let rows = vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 5.0], vec![0.0, -5.0]];
        let s = CrossSection::from_rows(&rows).unwrap();
        assert_eq!(pointwise_median(&s, MAHA).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn collapsed_section() {
        let rows = vec![vec![1.0, 2.0]; 5];
        let s = CrossSection::from_rows(&rows).unwrap();
        assert_eq!(pointwise_outlyingness(&s, &[1.0, 2.0], MAHA).unwrap(), 0.0);
        assert!(matches!(
            pointwise_outlyingness(&s, &[1.0, 3.0], PointwiseDepthMethod::default()),
            Err(Error::DegenerateSection(_))
        ));
        // Spread at rounding level of large coordinates is still a single point.
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![123.25 + i as f64 * 1e-14, -40.5]).collect();
        let s = CrossSection::from_rows(&rows).unwrap();
        for m in [MAHA, PointwiseDepthMethod::default()] {
            assert_eq!(pointwise_outlyingness(&s, &[123.25, -40.5], m).unwrap(), 0.0);
        }
    }

    #[test]
    fn projection_caps_off_axis_deviation() {
        // All x equal: the x-axis direction has zero MAD.
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let s = CrossSection::from_rows(&rows).unwrap();
        let m = PointwiseDepthMethod::Projection { directions: 8 };
        let on_axis = pointwise_outlyingness(&s, &[1.0, 4.0], m).unwrap();
        assert!(on_axis < 10.0);
        let off = pointwise_outlyingness(&s, &[2.0, 2.5], m).unwrap();
        assert_eq!(off, CAPPED_OUTLYINGNESS);
    }

    #[test]
    fn simplex_examples() {
        let tri = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        assert!(simplex_contains(&tri, &[0.25, 0.25], 0.0));
        assert!(!simplex_contains(&tri, &[1.0, 1.0], 0.0));
        // Closed: vertices and edges count.
        assert!(simplex_contains(&tri, &[0.5, 0.5], 0.0));
        assert!(simplex_contains(&tri, &[0.0, 0.0], 0.0));
        let flat = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        assert!(simplex_contains(&flat, &[1.5, 1.5], DEFAULT_CONTAINMENT_TOL));
        assert!(!simplex_contains(&flat, &[1.0, 0.0], DEFAULT_CONTAINMENT_TOL));
        assert!(!simplex_contains(&flat, &[3.0, 3.0], DEFAULT_CONTAINMENT_TOL));
        assert!(simplex_contains(&[2.0, -1.0], &[0.0], 0.0));
        assert!(!simplex_contains(&[2.0, -1.0], &[2.5], 0.0));
    }

    fn orientation_oracle(v: &[f64; 6], q: [f64; 2]) -> bool {
        let o = |a: usize, b: usize| {
            let (ax, ay, bx, by) = (v[2 * a], v[2 * a + 1], v[2 * b], v[2 * b + 1]);
            ((bx - ax) * (q[1] - ay) - (by - ay) * (q[0] - ax)).signum()
        };
        let s = [o(0, 1), o(1, 2), o(2, 0)];
        !(s.contains(&1.0) && s.contains(&-1.0))
    }

    #[test]
    fn simplex_agrees_with_orientation_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut disagreements = 0;
        for _ in 0..10_000 {
            let v: [f64; 6] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
            let q = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            if simplex_contains(&v, &q, 0.0) != orientation_oracle(&v, q) {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    fn transform(rows: &[Vec<f64>], c: f64, angle: f64, b: [f64; 2], reflect: bool) -> Vec<Vec<f64>> {
        let (s, co) = angle.sin_cos();
        rows.iter()
            .map(|r| {
                let y = if reflect { -r[1] } else { r[1] };
                vec![c * (co * r[0] - s * y) + b[0], c * (s * r[0] + co * y) + b[1]]
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn mahalanobis_similarity_invariant(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 6..12),
            q in (-8.0f64..8.0, -8.0f64..8.0),
            c in 0.1f64..10.0,
            angle in 0.0f64..6.3,
            b in (-100.0f64..100.0, -100.0f64..100.0),
            reflect in any::<bool>(),
        ) {
            let rows: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let s = CrossSection::from_rows(&rows).unwrap();
            let o = pointwise_outlyingness(&s, &[q.0, q.1], MAHA).unwrap();
            let t_rows = transform(&rows, c, angle, [b.0, b.1], reflect);
            let tq = transform(&[vec![q.0, q.1]], c, angle, [b.0, b.1], reflect).remove(0);
            let ts = CrossSection::from_rows(&t_rows).unwrap();
            let to = pointwise_outlyingness(&ts, &tq, MAHA).unwrap();
            prop_assert!((o - to).abs() <= 1e-10 * (1.0 + o), "{} vs {}", o, to);
        }

        #[test]
        fn projection_translation_and_scale_invariant(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 6..12),
            q in (-8.0f64..8.0, -8.0f64..8.0),
            c in 0.1f64..10.0,
            b in (-100.0f64..100.0, -100.0f64..100.0),
        ) {
            let rows: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x, y]).collect();
            let m = PointwiseDepthMethod::default();
            let s = CrossSection::from_rows(&rows).unwrap();
            let o = pointwise_outlyingness(&s, &[q.0, q.1], m).unwrap();
            let t_rows = transform(&rows, c, 0.0, [b.0, b.1], false);
            let tq = transform(&[vec![q.0, q.1]], c, 0.0, [b.0, b.1], false).remove(0);
            let to = pointwise_outlyingness(&CrossSection::from_rows(&t_rows).unwrap(), &tq, m).unwrap();
            prop_assert!((o - to).abs() <= 1e-8 * (1.0 + o), "{} vs {}", o, to);
            prop_assert!(o >= 0.0);
        }
    }
}
