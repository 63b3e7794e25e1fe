//! Small numeric helpers shared across modules.

/// Pairwise (tree) summation. The result depends only on the order of
/// `values`, never on how the values were produced, which keeps parallel
/// evaluations bit-reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Ordinary least-squares slope of `ys` against `0, 1, 2, ...`.
pub fn linear_fit_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Trailing moving average; entry `i` averages `ys[i + 1 - window ..= i]`
/// (fewer points at the start).
pub fn moving_average(ys: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(ys.len());
    let mut acc = 0.0;
    for i in 0..ys.len() {
        acc += ys[i];
        if i >= window {
            acc -= ys[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
