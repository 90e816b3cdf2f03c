use std::f64::consts::PI;

use super::NumericsError;

/// Classical normalized Lomb-Scargle periodogram.
///
/// `times` are seconds (any origin), `frequencies` cycles per second and
/// strictly positive. Samples must be in non-decreasing time order; repeated
/// timestamps keep their first value. The values are mean-centered and the
/// power at each frequency is divided by twice the sample variance, so the
/// result is unitless. A constant signal yields all zeros.
pub fn lomb_scargle_psd(times: &[f64], values: &[f64], frequencies: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if times.len() != values.len() {
        return Err(NumericsError::InvalidArgument(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if let Some(f) = frequencies.iter().find(|f| !f.is_finite() || **f <= 0.0) {
        return Err(NumericsError::InvalidArgument(format!("frequency {f} is not positive")));
    }
    let mut t = Vec::with_capacity(times.len());
    let mut y = Vec::with_capacity(values.len());
    for (&ti, &vi) in times.iter().zip(values) {
        match t.last() {
            Some(&prev) if ti < prev => {
                return Err(NumericsError::InvalidArgument(
                    "times are not in ascending order".into(),
                ))
            }
            Some(&prev) if ti == prev => continue,
            _ => {
                t.push(ti);
                y.push(vi);
            }
        }
    }
    let n = t.len();
    if n < 3 {
        return Err(NumericsError::InsufficientData { needed: 3, got: n });
    }

    let t0 = t[0];
    for ti in &mut t {
        *ti -= t0;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    for yi in &mut y {
        *yi -= mean;
    }
    let variance = y.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;
    let scale = mean * mean + variance;
    if variance <= 1e-24 * scale || variance == 0.0 {
        return Ok(vec![0.0; frequencies.len()]);
    }

    Ok(frequencies
        .iter()
        .map(|&f| {
            let omega = 2.0 * PI * f;
            let (s2, c2) = t.iter().fold((0.0, 0.0), |(s, c), &ti| {
                let a = 2.0 * omega * ti;
                (s + a.sin(), c + a.cos())
            });
            let tau = s2.atan2(c2) / (2.0 * omega);
            let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for (&ti, &yi) in t.iter().zip(&y) {
                let a = omega * (ti - tau);
                let (sin, cos) = a.sin_cos();
                yc += yi * cos;
                ys += yi * sin;
                cc += cos * cos;
                ss += sin * sin;
            }
            let mut power = 0.0;
            if cc > 1e-12 * n as f64 {
                power += yc * yc / cc;
            }
            if ss > 1e-12 * n as f64 {
                power += ys * ys / ss;
            }
            (power / (2.0 * variance)).max(0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOUR: f64 = 3600.0;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn peak_at_daily_frequency() {
        // hourly samples of a 24 h sinusoid over 14 days
        let times: Vec<f64> = (0..14 * 24).map(|i| i as f64 * HOUR).collect();
        let values: Vec<f64> = times.iter().map(|t| (2.0 * PI * t / (24.0 * HOUR)).sin()).collect();
        let freqs = grid(1.0 / (48.0 * HOUR), 1.0 / (6.0 * HOUR), 400);
        let psd = lomb_scargle_psd(&times, &values, &freqs).unwrap();
        let argmax = psd.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let target = 1.0 / (24.0 * HOUR);
        let nearest = freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .unwrap()
            .0;
        assert_eq!(argmax, nearest);
        // noiseless sinusoid: peak power is close to N / 2
        assert!(psd[argmax] > 0.45 * times.len() as f64);
    }

    #[test]
    fn constant_signal_has_no_power() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 600.0).collect();
        let values = vec![40.4433; 50];
        let psd = lomb_scargle_psd(&times, &values, &grid(1e-5, 1e-3, 20)).unwrap();
        assert!(psd.iter().all(|p| p.abs() <= 1e-9));
    }

    #[test]
    fn offset_invariance() {
        let times: Vec<f64> = (0..80).map(|i| (i * i) as f64 * 37.0).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| (t / 5000.0).sin() + 0.1 * (t / 77.0).cos())
            .collect();
        let shifted: Vec<f64> = values.iter().map(|v| v + 3.5).collect();
        let freqs = grid(1e-6, 1e-3, 50);
        let a = lomb_scargle_psd(&times, &values, &freqs).unwrap();
        let b = lomb_scargle_psd(&times, &shifted, &freqs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn needs_three_distinct_times() {
        let err = lomb_scargle_psd(&[0.0, 1.0, 1.0], &[1.0, 2.0, 3.0], &[0.1]).unwrap_err();
        assert_eq!(err, NumericsError::InsufficientData { needed: 3, got: 2 });
        assert!(lomb_scargle_psd(&[2.0, 1.0, 0.0], &[1.0, 2.0, 3.0], &[0.1]).is_err());
        assert!(lomb_scargle_psd(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], &[0.0]).is_err());
    }
}
