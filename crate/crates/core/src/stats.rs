//! Small robust-statistics helpers shared across modules.

/// Consistency constant turning the raw MAD into a normal-scale estimate.
pub const MAD_SCALE: f64 = 1.4826;

/// Median of a slice, reordering it in place. Even lengths average the two
/// middle values. Returns NaN for an empty slice.
pub fn median_in_place(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    let mid = n / 2;
    let (lower, upper, _) = xs.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        midpoint(lower_max, upper)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    median_in_place(&mut xs.to_vec())
}

/// Median and normalized MAD (`1.4826 · med|x − med x|`).
pub fn median_mad(xs: &[f64]) -> (f64, f64) {
    let mut buf = xs.to_vec();
    let med = median_in_place(&mut buf);
    for (b, x) in buf.iter_mut().zip(xs) {
        *b = (x - med).abs();
    }
    (med, MAD_SCALE * median_in_place(&mut buf))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

// Infinite endpoints must not produce NaN via inf - inf.
fn midpoint(a: f64, b: f64) -> f64 {
    if a == b {
        a
    } else {
        0.5 * a + 0.5 * b
    }
}
