use super::NumericsError;

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Population variance (divides by n).
pub fn pop_variance(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    Some(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

pub fn pop_std(values: &[f64]) -> Option<f64> {
    pop_variance(values).map(f64::sqrt)
}

/// Z-normalize with the population standard deviation. A zero-variance input
/// maps to all zeros.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let m = mean(values).ok_or(NumericsError::EmptyInput)?;
    if values.iter().all(|v| *v == values[0]) {
        return Ok(vec![0.0; values.len()]);
    }
    let sd = pop_std(values).unwrap_or(0.0);
    if sd == 0.0 || !sd.is_finite() {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// min / max / mean / population std of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub sum: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mean = mean(values)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            min,
            max,
            mean,
            std: pop_std(values)?,
            sum: values.iter().sum(),
            count: values.len(),
        })
    }
}
