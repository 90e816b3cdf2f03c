//! Change-over-time features of a weekly feature series.

use serde::Serialize;

use crate::numerics::linear_fit;

/// Parameters of a two-segment fit: two slopes, two intercepts, noise variance.
const BIC_PARAMS: f64 = 5.0;
/// Relative BIC difference below which two candidates are tied.
const BIC_TIE: f64 = 1e-9;

pub const FIELDS: [&str; 6] = [
    "slope",
    "slope_first_half",
    "slope_second_half",
    "breakpoint",
    "slope_before",
    "slope_after",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ChangeFeatures {
    pub slope: Option<f64>,
    pub slope_first_half: Option<f64>,
    pub slope_second_half: Option<f64>,
    /// Last week of the first segment.
    pub breakpoint: Option<usize>,
    pub slope_before: Option<f64>,
    pub slope_after: Option<f64>,
}

impl ChangeFeatures {
    /// Values in `FIELDS` order.
    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.slope,
            self.slope_first_half,
            self.slope_second_half,
            self.breakpoint.map(|b| b as f64),
            self.slope_before,
            self.slope_after,
        ]
    }
}

/// Present (week, value) pairs for weeks `from..=to`, 1-based.
fn points(values: &[Option<f64>], from: usize, to: usize) -> (Vec<f64>, Vec<f64>) {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1, v))
        .filter(|(w, _)| (from..=to).contains(w))
        .filter_map(|(w, v)| v.map(|v| (w as f64, v)))
        .unzip()
}

fn slope_over(values: &[Option<f64>], from: usize, to: usize) -> Option<f64> {
    let (xs, ys) = points(values, from, to);
    linear_fit(&xs, &ys).ok().map(|f| f.slope)
}

/// Best two-segment split: weeks 1..=b and b+1..=n, b in 2..=n-2, each
/// segment with at least two observed weeks. Returns (b, slope before, slope after).
pub fn breakpoint(values: &[Option<f64>]) -> Option<(usize, f64, f64)> {
    let n = values.len();
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    if observed.len() < 4 || n < 4 {
        return None;
    }
    let count = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / count;
    let tss: f64 = observed.iter().map(|v| (v - mean).powi(2)).sum();
    let floor = (1e-18 * tss).max(f64::MIN_POSITIVE);

    let mut candidates = Vec::new();
    for b in 2..=n - 2 {
        let (x1, y1) = points(values, 1, b);
        let (x2, y2) = points(values, b + 1, n);
        let (Ok(f1), Ok(f2)) = (linear_fit(&x1, &y1), linear_fit(&x2, &y2)) else {
            continue;
        };
        let rss = (f1.rss + f2.rss).max(floor);
        let bic = count * (rss / count).ln() + BIC_PARAMS * count.ln();
        candidates.push((b, bic, f1.slope, f2.slope));
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tol = BIC_TIE * best.abs().max(1.0);
    candidates
        .into_iter()
        .rfind(|c| c.1 <= best + tol)
        .map(|(b, _, before, after)| (b, before, after))
}

/// `values[i]` is week i+1; missing weeks are left out of every fit.
pub fn change_features(values: &[Option<f64>], midpoint: usize) -> ChangeFeatures {
    let n = values.len();
    let split = breakpoint(values);
    ChangeFeatures {
        slope: slope_over(values, 1, n),
        slope_first_half: slope_over(values, 1, midpoint),
        slope_second_half: slope_over(values, midpoint, n),
        breakpoint: split.map(|s| s.0),
        slope_before: split.map(|s| s.1),
        slope_after: split.map(|s| s.2),
    }
}
