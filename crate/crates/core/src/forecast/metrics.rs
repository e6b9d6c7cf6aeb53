use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Point-forecast error summary. The CV variants divide by the mean actual
/// load and are `None` when that mean is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub cvmae: Option<f64>,
    pub cvrmse: Option<f64>,
    pub n: usize,
    pub mean_actual: f64,
}

pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<Metrics, ForecastError> {
    if actual.len() != predicted.len() {
        return Err(ForecastError::Input(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(ForecastError::Input("no values to score".into()));
    }
    let n = actual.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (a, p) in actual.iter().zip(predicted) {
        let e = a - p;
        abs += e.abs();
        sq += e * e;
    }
    let mae = abs / n;
    let rmse = (sq / n).sqrt();
    let mean_actual = actual.iter().sum::<f64>() / n;
    let cv = |x: f64| (mean_actual != 0.0).then(|| x / mean_actual);
    Ok(Metrics {
        mae,
        rmse,
        cvmae: cv(mae),
        cvrmse: cv(rmse),
        n: actual.len(),
        mean_actual,
    })
}

/// Field-wise mean of per-fold metrics. `n` is the total count and
/// `mean_actual` the pooled mean; CV variants are averaged when every fold
/// defines them.
pub fn average_metrics(folds: &[Metrics]) -> Result<Metrics, ForecastError> {
    if folds.is_empty() {
        return Err(ForecastError::Input("no folds to average".into()));
    }
    let k = folds.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| folds.iter().map(f).sum::<f64>() / k;
    let mean_opt = |f: fn(&Metrics) -> Option<f64>| {
        folds
            .iter()
            .map(f)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / k)
    };
    let n: usize = folds.iter().map(|m| m.n).sum();
    Ok(Metrics {
        mae: mean(|m| m.mae),
        rmse: mean(|m| m.rmse),
        cvmae: mean_opt(|m| m.cvmae),
        cvrmse: mean_opt(|m| m.cvrmse),
        n,
        mean_actual: folds.iter().map(|m| m.mean_actual * m.n as f64).sum::<f64>() / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_fixture() {
        let m = compute_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((m.cvmae.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.cvrmse.unwrap() - (2.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(m.n, 3);
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = compute_metrics(&[5.0, 6.0], &[5.0, 6.0]).unwrap();
        assert_eq!((m.mae, m.rmse, m.cvmae, m.cvrmse), (0.0, 0.0, Some(0.0), Some(0.0)));
        let z = compute_metrics(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(z.cvmae, None);
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(pairs in prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 1..64)) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = compute_metrics(&a, &p).unwrap();
            prop_assert!(m.mae <= m.rmse + 1e-9 * m.rmse.max(1.0));
        }
    }
}
