use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::features::{Dataset, FeatureMask, FeatureVector, SampleSet};
use super::forest::{Forest, RfParams};
use super::gbt::{Gbt, GbtParams};
use super::mlp::{Mlp, MlpParams};
use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rf,
    Xgb,
    Mlp,
    Svr,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Rf => "rf",
            Algorithm::Xgb => "xgb",
            Algorithm::Mlp => "mlp",
            Algorithm::Svr => "svr",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rf" => Ok(Algorithm::Rf),
            "xgb" | "gbt" => Ok(Algorithm::Xgb),
            "mlp" => Ok(Algorithm::Mlp),
            "svr" => Ok(Algorithm::Svr),
            other => Err(ForecastError::Config(format!("unknown algorithm id {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Poly,
    Rbf,
    Sigmoid,
}

/// Grid slot for support vector regression. There is no trainer behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::Rbf,
            c: 1.0,
            epsilon: 0.1,
        }
    }
}

/// Algorithm plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ModelParams {
    Rf(RfParams),
    Xgb(GbtParams),
    Mlp(MlpParams),
    Svr(SvrParams),
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::Rf(RfParams::default())
    }
}

impl ModelParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelParams::Rf(_) => Algorithm::Rf,
            ModelParams::Xgb(_) => Algorithm::Xgb,
            ModelParams::Mlp(_) => Algorithm::Mlp,
            ModelParams::Svr(_) => Algorithm::Svr,
        }
    }

    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Rf => ModelParams::Rf(RfParams::default()),
            Algorithm::Xgb => ModelParams::Xgb(GbtParams::default()),
            Algorithm::Mlp => ModelParams::Mlp(MlpParams::default()),
            Algorithm::Svr => ModelParams::Svr(SvrParams::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |m: &str| Err(ForecastError::Config(format!("{}: {m}", self.algorithm())));
        match self {
            ModelParams::Rf(p) => {
                if p.n_estimators == 0 {
                    return bad("n_estimators must be > 0");
                }
                if p.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be > 0");
                }
            }
            ModelParams::Xgb(p) => {
                if p.n_estimators == 0 || !(p.learning_rate > 0.0) {
                    return bad("n_estimators and learning_rate must be > 0");
                }
                if p.min_child_weight < 0.0 || p.reg_alpha < 0.0 || p.reg_lambda < 0.0 {
                    return bad("regularizers must be >= 0");
                }
            }
            ModelParams::Mlp(p) => {
                if p.n_neuron == 0 || p.batch_size == 0 || !(p.learning_rate > 0.0) {
                    return bad("n_neuron, batch_size and learning_rate must be > 0");
                }
            }
            ModelParams::Svr(p) => {
                if !(p.c > 0.0) || p.epsilon < 0.0 {
                    return bad("C must be > 0 and epsilon >= 0");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Fitted {
    Forest(Forest),
    Gbt(Gbt),
    Mlp(Mlp),
}

fn fit(params: &ModelParams, data: &Dataset, seed: u64) -> Result<Fitted, ForecastError> {
    params.validate()?;
    if data.len() < 2 {
        return Err(ForecastError::Input(format!(
            "need at least 2 samples, got {}",
            data.len()
        )));
    }
    match params {
        ModelParams::Rf(p) => Ok(Fitted::Forest(Forest::fit(data, p, seed))),
        ModelParams::Xgb(p) => Ok(Fitted::Gbt(Gbt::fit(data, p)?)),
        ModelParams::Mlp(p) => Ok(Fitted::Mlp(Mlp::fit(data, p, seed))),
        ModelParams::Svr(_) => Err(ForecastError::Unsupported(
            "svr has a hyperparameter grid but no trainer".into(),
        )),
    }
}

fn raw_predict(fitted: &Fitted, row: &[f64]) -> f64 {
    match fitted {
        Fitted::Forest(m) => m.predict(row),
        Fitted::Gbt(m) => m.predict(row),
        Fitted::Mlp(m) => m.predict(row),
    }
}

/// Negative outputs are not physical loads.
pub fn clamp_prediction(raw: f64) -> f64 {
    if raw.is_nan() {
        0.0
    } else {
        raw.max(0.0)
    }
}

/// Time span of the rows a model was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingWindow {
    pub first: NaiveDateTime,
    pub last: NaiveDateTime,
}

/// A fitted predictor with the inputs it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub params: ModelParams,
    pub mask: FeatureMask,
    /// Takes the anchor input A after the mask features.
    pub anchored: bool,
    pub window: Option<TrainingWindow>,
    pub n_samples: usize,
    pub seed: u64,
    fitted: Fitted,
}

impl ForecastModel {
    pub fn algorithm(&self) -> Algorithm {
        self.params.algorithm()
    }

    /// Unclamped output for an input row already in model order.
    pub fn predict_raw(&self, row: &[f64]) -> Result<f64, ForecastError> {
        let expected = self.mask.len() + usize::from(self.anchored);
        if row.len() != expected {
            return Err(ForecastError::MaskMismatch(format!(
                "model takes {expected} inputs, got {}",
                row.len()
            )));
        }
        Ok(raw_predict(&self.fitted, row))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64, ForecastError> {
        self.predict_raw(row).map(clamp_prediction)
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64, ForecastError> {
        self.predict_row(&features.row(self.mask, self.anchored)?)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>, ForecastError> {
        (0..data.len()).map(|i| self.predict_row(&data.row(i))).collect()
    }
}

/// Fits `params` on `samples` projected to `mask` (plus A for anchored sets).
pub fn train_regressor(
    params: &ModelParams,
    samples: &SampleSet,
    mask: FeatureMask,
    seed: u64,
) -> Result<ForecastModel, ForecastError> {
    if samples.is_empty() {
        return Err(ForecastError::Input("empty sample set".into()));
    }
    let data = samples.project(mask);
    let fitted = fit(params, &data, seed)?;
    Ok(ForecastModel {
        params: params.clone(),
        mask,
        anchored: samples.is_anchored(),
        window: samples.span().map(|(first, last)| TrainingWindow { first, last }),
        n_samples: samples.len(),
        seed,
        fitted,
    })
}

/// Fits on a bare dataset; used by cross-validation.
pub(crate) fn train_dataset(
    params: &ModelParams,
    data: &Dataset,
    seed: u64,
) -> Result<impl Fn(&[f64]) -> f64, ForecastError> {
    let fitted = fit(params, data, seed)?;
    Ok(move |row: &[f64]| clamp_prediction(raw_predict(&fitted, row)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::Feature;
    use chrono::{Duration, NaiveDate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample_set(n: usize, f: impl Fn(&[f64; 7], &mut ChaCha8Rng) -> f64) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t0 = NaiveDate::from_ymd_opt(2021, 7, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        let mut set = SampleSet::default();
        for i in 0..n {
            let mut v = FeatureVector::default();
            let row = [
                rng.random_range(15.0..35.0),
                rng.random_range(30.0..90.0),
                rng.random_range(0.0..800.0),
                rng.random_range(0.0..6.0),
                rng.random_range(1..=8) as f64,
                (i % 24) as f64,
                rng.random_range(1000.0..6000.0),
            ];
            for feat in Feature::ALL {
                v.values[feat.index()] = Some(row[feat.index()]);
            }
            let y = f(&row, &mut rng);
            set.push(t0 + Duration::hours(i as i64), &v, y);
        }
        set
    }

    #[test]
    fn algorithm_ids() {
        assert_eq!("RF".parse::<Algorithm>().unwrap(), Algorithm::Rf);
        assert_eq!("xgb".parse::<Algorithm>().unwrap(), Algorithm::Xgb);
        assert!("lstm".parse::<Algorithm>().is_err());
        let p: ModelParams = serde_json::from_str(r#"{"algorithm": "rf", "n_estimators": 10}"#).unwrap();
        assert_eq!(p.algorithm(), Algorithm::Rf);
        assert!(serde_json::from_str::<ModelParams>(r#"{"algorithm": "knn"}"#).is_err());
    }

    #[test]
    fn constant_target() {
        let set = sample_set(60, |_, _| 777.0);
        let m = train_regressor(&ModelParams::default(), &set, FeatureMask::FULL, 1).unwrap();
        let ds = set.project(FeatureMask::FULL);
        assert!(m.predict_dataset(&ds).unwrap().iter().all(|p| *p == 777.0));
    }

    #[test]
    fn negative_output_is_clamped() {
        let set = sample_set(20, |_, _| -12.0);
        let m = train_regressor(&ModelParams::default(), &set, "T".parse().unwrap(), 1).unwrap();
        assert_eq!(m.predict_raw(&[20.0]).unwrap(), -12.0);
        assert_eq!(m.predict_row(&[20.0]).unwrap(), 0.0);
    }

    #[test]
    fn linear_in_temperature_against_least_squares() {
        let noise = Normal::new(0.0, 1.0).unwrap();
        let set = sample_set(300, |r, rng| 10.0 * r[0] + noise.sample(rng));
        let train = set.subset(&(0..200).collect::<Vec<_>>());
        let test = set.subset(&(200..300).collect::<Vec<_>>());
        let mask: FeatureMask = "T".parse().unwrap();
        let m = train_regressor(&ModelParams::default(), &train, mask, 4).unwrap();
        let ds = test.project(mask);
        let pred = m.predict_dataset(&ds).unwrap();
        let mae = pred.iter().zip(&ds.targets).map(|(p, y)| (p - y).abs()).sum::<f64>() / 100.0;
        // least-squares line through the training rows bounds what is achievable
        let tr = train.project(mask);
        let (xm, ym) = (
            tr.columns[0].iter().sum::<f64>() / 200.0,
            tr.targets.iter().sum::<f64>() / 200.0,
        );
        let sxy: f64 = tr.columns[0]
            .iter()
            .zip(&tr.targets)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum();
        let sxx: f64 = tr.columns[0].iter().map(|x| (x - xm) * (x - xm)).sum();
        let slope = sxy / sxx;
        let ls_mae = ds.columns[0]
            .iter()
            .zip(&ds.targets)
            .map(|(x, y)| (ym + slope * (x - xm) - y).abs())
            .sum::<f64>()
            / 100.0;
        assert!(mae < 3.0, "rf mae {mae}, least squares {ls_mae}");
        assert!(ls_mae < mae);
        let at25 = m.predict_row(&[25.0]).unwrap();
        assert!((at25 - 250.0).abs() <= 10.0, "{at25}");
    }

    #[test]
    fn determinism_and_errors() {
        let set = sample_set(50, |r, _| r[0] * r[5]);
        let p = ModelParams::default();
        let a = train_regressor(&p, &set, FeatureMask::FULL, 7).unwrap();
        let b = train_regressor(&p, &set, FeatureMask::FULL, 7).unwrap();
        assert_eq!(a, b);
        assert!(train_regressor(&p, &SampleSet::default(), FeatureMask::FULL, 7).is_err());
        let one = set.subset(&[0]);
        assert!(train_regressor(&p, &one, FeatureMask::FULL, 7).is_err());
        let svr = ModelParams::Svr(SvrParams::default());
        assert!(matches!(
            train_regressor(&svr, &set, FeatureMask::FULL, 7),
            Err(ForecastError::Unsupported(_))
        ));
        assert!(matches!(a.predict_row(&[1.0]), Err(ForecastError::MaskMismatch(_))));
        let w = a.window.unwrap();
        assert_eq!(w.last - w.first, Duration::hours(49));
    }
}
