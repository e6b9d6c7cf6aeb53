//! Gradient-boosted regression trees with L1/L2 leaf regularization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::tree::{GrowParams, Tree};
use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "reg:squarederror")]
    SquaredError,
    /// Tweedie deviance with a log link.
    #[serde(rename = "reg:tweedie")]
    Tweedie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub objective: Objective,
    pub tweedie_variance_power: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            reg_alpha: 0.0,
            reg_lambda: 1.0,
            objective: Objective::SquaredError,
            tweedie_variance_power: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbt {
    base: f64,
    learning_rate: f64,
    objective: Objective,
    trees: Vec<Tree>,
}

impl Gbt {
    pub fn fit(data: &Dataset, params: &GbtParams) -> Result<Gbt, ForecastError> {
        let y = &data.targets;
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let rho = params.tweedie_variance_power;
        let (base, max_delta_step) = match params.objective {
            Objective::SquaredError => (mean, 0.0),
            Objective::Tweedie => {
                if y.iter().any(|v| *v < 0.0) {
                    return Err(ForecastError::Input(
                        "tweedie objective needs non-negative targets".into(),
                    ));
                }
                if !(1.0 < rho && rho < 2.0) {
                    return Err(ForecastError::Config(format!(
                        "tweedie variance power {rho} outside (1, 2)"
                    )));
                }
                (mean.max(1e-6).ln(), 0.7)
            }
        };
        let grow = GrowParams {
            max_depth: params.max_depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            min_child_weight: params.min_child_weight,
            alpha: params.reg_alpha,
            lambda: params.reg_lambda,
            max_features: usize::MAX,
            max_delta_step,
        };
        // no sampling, so the stream is never drawn from
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut raw = vec![base; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.n_estimators);
        for _ in 0..params.n_estimators {
            for i in 0..n {
                match params.objective {
                    Objective::SquaredError => {
                        grad[i] = raw[i] - y[i];
                        hess[i] = 1.0;
                    }
                    Objective::Tweedie => {
                        let a = ((1.0 - rho) * raw[i]).exp();
                        let b = ((2.0 - rho) * raw[i]).exp();
                        grad[i] = -y[i] * a + b;
                        hess[i] = -(1.0 - rho) * y[i] * a + (2.0 - rho) * b;
                    }
                }
            }
            let tree = Tree::grow(&data.columns, &grad, &hess, (0..n).collect(), grow, &mut rng);
            for (i, r) in raw.iter_mut().enumerate() {
                *r += params.learning_rate * tree.predict_column_row(&data.columns, i);
            }
            trees.push(tree);
        }
        Ok(Gbt {
            base,
            learning_rate: params.learning_rate,
            objective: params.objective,
            trees,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let raw = self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        match self.objective {
            Objective::SquaredError => raw,
            Objective::Tweedie => raw.exp(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<Vec<f64>>, Dataset) {
        let rows: Vec<Vec<f64>> = (0..120).map(|i| vec![(i % 24) as f64, (i / 24) as f64]).collect();
        let y = rows
            .iter()
            .map(|r| 100.0 + 20.0 * r[0] + if r[1] > 2.0 { 50.0 } else { 0.0 })
            .collect();
        let data = Dataset::from_rows(&rows, y);
        (rows, data)
    }

    fn mae(model: &Gbt, rows: &[Vec<f64>], y: &[f64]) -> f64 {
        rows.iter()
            .zip(y)
            .map(|(r, t)| (model.predict(r) - t).abs())
            .sum::<f64>()
            / y.len() as f64
    }

    #[test]
    fn fits_training_data() {
        let (rows, data) = fixture();
        let m = Gbt::fit(&data, &GbtParams::default()).unwrap();
        assert!(mae(&m, &rows, &data.targets) < 1.0);
        let tw = GbtParams {
            objective: Objective::Tweedie,
            ..GbtParams::default()
        };
        let m = Gbt::fit(&data, &tw).unwrap();
        assert!(mae(&m, &rows, &data.targets) < 5.0, "{}", mae(&m, &rows, &data.targets));
    }

    #[test]
    fn heavy_regularization_shrinks_towards_base() {
        let (rows, data) = fixture();
        let p = GbtParams {
            n_estimators: 1,
            reg_lambda: 1e9,
            ..GbtParams::default()
        };
        let m = Gbt::fit(&data, &p).unwrap();
        let mean = data.targets.iter().sum::<f64>() / data.len() as f64;
        assert!((m.predict(&rows[0]) - mean).abs() < 1e-3);
    }

    #[test]
    fn tweedie_rejects_negative_targets() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![-1.0, 2.0]);
        let p = GbtParams {
            objective: Objective::Tweedie,
            ..GbtParams::default()
        };
        assert!(Gbt::fit(&data, &p).is_err());
    }
}
