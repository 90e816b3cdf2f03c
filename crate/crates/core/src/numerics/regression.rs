use super::NumericsError;

/// Ordinary least squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, NumericsError> {
    if xs.len() != ys.len() {
        return Err(NumericsError::InvalidArgument(format!(
            "{} xs but {} ys",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(NumericsError::InsufficientData { needed: 2, got: n });
    }
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if xs.iter().all(|x| *x == xs[0]) || sxx == 0.0 {
        return Err(NumericsError::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    Ok(LinearFit { slope, intercept, rss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert_eq!((f.slope, f.intercept, f.rss), (2.0, 1.0, 0.0));
    }

    #[test]
    fn closed_form_three_points() {
        // slope = Sxy/Sxx = 1/2, intercept = 2/3 - 1/2, residuals (-1/6, 1/3, -1/6)
        let f = linear_fit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 1.0 / 6.0).abs() < 1e-12);
        assert!((f.rss - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(linear_fit(&[1.0, 1.0], &[0.0, 5.0]), Err(NumericsError::DegenerateFit));
        assert!(matches!(
            linear_fit(&[1.0], &[0.0]),
            Err(NumericsError::InsufficientData { .. })
        ));
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_to_x(pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..30)) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(f) = linear_fit(&xs, &ys) {
                let xm = xs.iter().sum::<f64>() / xs.len() as f64;
                let dot: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - f.predict(*x)) * (x - xm)).sum();
                let scale: f64 = xs.iter().zip(&ys).map(|(x, y)| (x.abs() + 1.0) * (y.abs() + 1.0)).sum();
                prop_assert!(dot.abs() <= 1e-8 * scale);

                let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
                let g = linear_fit(&xs, &neg).unwrap();
                prop_assert!((g.slope + f.slope).abs() <= 1e-9 * (1.0 + f.slope.abs()));
            }
        }
    }
}
