//! Structural descriptors of sampled time series.

/// Indices of interior local maxima whose prominence (height above the
/// higher of the neighbouring minima) is at least `min_prominence`.
pub fn local_maxima(values: &[f64], min_prominence: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let v = values[i];
        if !(v > values[i - 1] && v >= values[i + 1]) {
            continue;
        }
        let left = values[..i].iter().rev().take_while(|&&x| x <= v).fold(v, |m, &x| m.min(x));
        let right = values[i + 1..].iter().take_while(|&&x| x <= v).fold(v, |m, &x| m.min(x));
        if v - left.max(right) >= min_prominence {
            out.push(i);
        }
    }
    out
}

pub fn local_minima(values: &[f64], min_prominence: f64) -> Vec<usize> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    local_maxima(&neg, min_prominence)
}

/// Coefficient of variation of consecutive spacings.
pub fn spacing_cv(times: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64;
    Some(var.sqrt() / mean)
}

/// Non-increasing after the global maximum (up to `tol`).
pub fn monotone_after_peak(values: &[f64], tol: f64) -> bool {
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    values[peak..].windows(2).all(|w| w[1] <= w[0] + tol)
}
