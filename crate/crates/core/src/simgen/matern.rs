//! Modified Bessel function of the second kind, Matérn correlation and the
//! bivariate Matérn Gaussian process sampler.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::ensemble::{RandomSeed, TimeGrid, TrajectoryEnsemble};
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

// Abramowitz & Stegun 6.1.34: 1/Γ(z) = Σ c_k z^k, k = 1..26.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Temme's `(Γ₁, Γ₂)` for `|μ| ≤ 1/2`, free of the `1/μ` cancellation:
/// `Γ₂ = Σ_{j even} c_j μ^j`, `Γ₁ = −Σ_{j odd} c_j μ^{j−1}` (0-based `j`).
fn temme_gammas(mu: f64) -> (f64, f64) {
    let (mut gam1, mut gam2) = (0.0, 0.0);
    let mut pow = 1.0;
    for pair in RECIP_GAMMA.chunks(2) {
        gam2 += pair[0] * pow;
        gam1 -= pair[1] * pow;
        pow *= mu * mu;
    }
    (gam1, gam2)
}

/// `(K_μ(x), K_{μ+1}(x))` for `|μ| ≤ 1/2`, `0 < x < 2`, by Temme's series.
fn k_temme(mu: f64, x: f64) -> (f64, f64) {
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2) = temme_gammas(mu);
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// `(K_μ(x), K_{μ+1}(x))` for `|μ| ≤ 1/2`, `x ≥ 2`, by Steed's continued fraction.
fn k_steed(mu: f64, x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let kmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    (kmu, kmu * (mu + x + 0.5 - h) / x)
}

/// Modified Bessel function of the second kind `K_ν(x)`, `ν ≥ 0`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x > 0.0, "bessel_k needs nu >= 0 and x > 0");
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut kmu, mut k1) = if x < 2.0 { k_temme(mu, x) } else { k_steed(mu, x) };
    for i in 1..=(nl as usize) {
        let next = 2.0 * (mu + i as f64) / x * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    kmu
}

/// Matérn correlation `2^{1−ν}/Γ(ν) (h/α)^ν K_ν(h/α)`, with `M(0) = 1`.
pub fn matern_corr(h: f64, nu: f64, alpha: f64) -> f64 {
    assert!(h >= 0.0 && nu > 0.0 && alpha > 0.0, "matern_corr needs h >= 0, nu > 0, alpha > 0");
    let x = h / alpha;
    if x == 0.0 {
        return 1.0;
    }
    let k = bessel_k(nu, x);
    if k == 0.0 {
        return 0.0;
    }
    let log = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * x.ln() + k.ln();
    log.exp().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternSpec {
    pub sigma: [f64; 2],
    /// Ranges `(α₁₁, α₂₂, α₁₂)`.
    pub alpha: [f64; 3],
    /// Smoothness `(ν₁₁, ν₂₂, ν₁₂)`.
    pub nu: [f64; 3],
    pub rho12: f64,
    pub k: usize,
    pub domain: (f64, f64),
}

impl Default for MaternSpec {
    fn default() -> Self {
        MaternSpec {
            sigma: [1.0, 1.0],
            alpha: [0.02, 0.01, 0.016],
            nu: [1.2, 0.6, 1.0],
            rho12: 0.6,
            k: 200,
            domain: (0.0, 1.0),
        }
    }
}

impl MaternSpec {
    /// Largest admissible `|ρ₁₂|` for the given ranges and smoothness
    /// (full bivariate Matérn sufficient condition in one dimension).
    pub fn rho_bound(&self) -> f64 {
        let d = 1.0;
        let [n11, n22, n12] = self.nu;
        let [a11, a22, a12] = self.alpha.map(|a| 1.0 / a);
        let log_const = ln_gamma(n11 + d / 2.0) + ln_gamma(n22 + d / 2.0) - ln_gamma(n11) - ln_gamma(n22)
            + 2.0 * ln_gamma(n12)
            - 2.0 * ln_gamma(n12 + d / 2.0)
            + 2.0 * n11 * a11.ln()
            + 2.0 * n22 * a22.ln()
            - 4.0 * n12 * a12.ln();
        let log_ratio = |t: f64| {
            let t2 = t * t;
            (2.0 * n12 + d) * (a12 * a12 + t2).ln()
                - (n11 + d / 2.0) * (a11 * a11 + t2).ln()
                - (n22 + d / 2.0) * (a22 * a22 + t2).ln()
        };
        // Coarse log-spaced scan, then golden-section refinement.
        let scale = a11.min(a22).min(a12);
        let grid: Vec<f64> = std::iter::once(0.0)
            .chain((0..=4000).map(|i| scale * 10f64.powf(-4.0 + 10.0 * i as f64 / 4000.0)))
            .collect();
        let (mut best_i, mut best) = (0, f64::INFINITY);
        for (i, &t) in grid.iter().enumerate() {
            let v = log_ratio(t);
            if v < best {
                (best_i, best) = (i, v);
            }
        }
        let (mut lo, mut hi) = (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(grid.len() - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if log_ratio(m1) < log_ratio(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(log_ratio(0.5 * (lo + hi)));
        // The ratio tends to a finite limit or grows as t → ∞ when ν₁₂ ≥ (ν₁₁+ν₂₂)/2.
        (0.5 * (log_const + best)).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCrossParams(m));
        if self.k < 3 {
            return Err(Error::InvalidGrid(format!("k = {} below 3", self.k)));
        }
        if !(self.domain.1 > self.domain.0) {
            return Err(Error::InvalidGrid("empty domain".into()));
        }
        if self.sigma.iter().chain(&self.alpha).chain(&self.nu).any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("sigma, alpha and nu must be positive".into());
        }
        if !(self.rho12.abs() < 1.0) {
            return bad(format!("rho12 = {} outside (-1, 1)", self.rho12));
        }
        let [n11, n22, n12] = self.nu;
        if n12 < 0.5 * (n11 + n22) {
            return bad(format!("nu12 = {n12} below (nu11 + nu22) / 2 = {}", 0.5 * (n11 + n22)));
        }
        let bound = self.rho_bound();
        if self.rho12.abs() > bound {
            return bad(format!("|rho12| = {} exceeds admissible bound {bound}", self.rho12.abs()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.domain.0, self.domain.1, self.k)
    }

    /// The `2k × 2k` cross-covariance over the uniform grid, first coordinate first.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let grid = self.grid()?;
        let t = grid.points();
        let k = self.k;
        let [s1, s2] = self.sigma;
        Ok(DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let (bi, bj) = (i / k, j / k);
            let h = (t[i % k] - t[j % k]).abs();
            match (bi, bj) {
                (0, 0) => s1 * s1 * matern_corr(h, self.nu[0], self.alpha[0]),
                (1, 1) => s2 * s2 * matern_corr(h, self.nu[1], self.alpha[1]),
                _ => self.rho12 * s1 * s2 * matern_corr(h, self.nu[2], self.alpha[2]),
            }
        }))
    }
}

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-8;

/// Lower Cholesky factor with diagonal jitter escalating by decades.
fn jittered_cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mean_diag = cov.trace() / cov.nrows() as f64;
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut m = cov.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter * mean_diag;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.l());
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}

/// `n` iid draws of the bivariate Matérn process on the spec's grid.
pub fn gp_sample(spec: &MaternSpec, n: usize, seed: RandomSeed) -> Result<TrajectoryEnsemble> {
    spec.validate()?;
    let l = jittered_cholesky(&spec.covariance()?)?;
    let k = spec.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let z = DMatrix::from_fn(2 * k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let draws = l * z;
    let raw = (0..n)
        .map(|c| {
            let col = draws.column(c);
            let rows = (0..k).map(|i| vec![col[i], col[k + i]]).collect();
            ((c + 1).to_string(), rows)
        })
        .collect();
    TrajectoryEnsemble::from_raw(raw, spec.grid()?)
}
