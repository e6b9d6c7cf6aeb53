//! K-fold cross-validation, hyperparameter grids and the exhaustive
//! feature-combination search.

use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMask, SampleSet};
use super::forest::RfParams;
use super::gbt::{GbtParams, Objective};
use super::metrics::{average_metrics, compute_metrics, Metrics};
use super::mlp::MlpParams;
use super::model::{train_dataset, train_regressor, Algorithm, Kernel, ModelParams, SvrParams};
use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Contiguous blocks of the chronologically sorted samples.
    #[default]
    Chronological,
    /// Blocks of a seeded permutation of the sorted samples.
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub folds: FoldMode,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 20210701,
            folds: FoldMode::Chronological,
        }
    }
}

/// Sample indices in an order that depends only on the sample contents.
fn canonical_order(samples: &SampleSet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| {
        samples.timestamps[a]
            .cmp(&samples.timestamps[b])
            .then_with(|| samples.targets[a].total_cmp(&samples.targets[b]))
            .then_with(|| {
                let (x, y) = (&samples.features[a], &samples.features[b]);
                x.iter()
                    .zip(y)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    });
    idx
}

/// Partitions the samples into `k` folds whose sizes differ by at most one.
pub fn fold_indices(samples: &SampleSet, cv: &CvOptions) -> Result<Vec<Vec<usize>>, ForecastError> {
    let n = samples.len();
    if cv.k < 2 {
        return Err(ForecastError::Config(format!("k-fold needs k >= 2, got {}", cv.k)));
    }
    if cv.k > n {
        return Err(ForecastError::Input(format!("k = {} exceeds the {n} samples", cv.k)));
    }
    let mut order = canonical_order(samples);
    if cv.folds == FoldMode::Shuffled {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cv.seed));
    }
    let (base, extra) = (n / cv.k, n % cv.k);
    let mut folds = Vec::with_capacity(cv.k);
    let mut start = 0;
    for f in 0..cv.k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Mean of the per-fold metrics.
pub fn kfold_cv(
    params: &ModelParams,
    mask: FeatureMask,
    samples: &SampleSet,
    cv: &CvOptions,
) -> Result<Metrics, ForecastError> {
    let folds = fold_indices(samples, cv)?;
    let per_fold: Vec<Result<Metrics, ForecastError>> = (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let train = samples.subset(&train_idx).project(mask);
            let test = samples.subset(&folds[f]).project(mask);
            let model = train_dataset(params, &train, cv.seed)?;
            let pred: Vec<f64> = (0..test.len()).map(|i| model(&test.row(i))).collect();
            compute_metrics(&test.targets, &pred)
        })
        .collect();
    let per_fold: Vec<Metrics> = per_fold.into_iter().collect::<Result<_, _>>()?;
    average_metrics(&per_fold)
}

/// Candidate values per hyperparameter. Points are enumerated with the last
/// listed parameter varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase", deny_unknown_fields)]
pub enum HyperParamGrid {
    Rf {
        n_estimators: Vec<usize>,
        max_depth: Vec<usize>,
        min_samples_split: Vec<usize>,
        min_samples_leaf: Vec<usize>,
    },
    Xgb {
        max_depth: Vec<usize>,
        min_child_weight: Vec<f64>,
        reg_alpha: Vec<f64>,
        reg_lambda: Vec<f64>,
        objective: Vec<Objective>,
    },
    Mlp {
        n_layer: Vec<usize>,
        n_neuron: Vec<usize>,
    },
    Svr {
        kernel: Vec<Kernel>,
        c: Vec<f64>,
        epsilon: Vec<f64>,
    },
}

fn product<A: Clone, B: Clone>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

impl HyperParamGrid {
    /// The shipped candidate lists.
    pub fn defaults(algorithm: Algorithm) -> HyperParamGrid {
        match algorithm {
            Algorithm::Rf => HyperParamGrid::Rf {
                n_estimators: vec![50, 80, 100, 150, 200],
                max_depth: vec![6, 8, 10, 12, 15],
                min_samples_split: vec![5, 10, 20, 49],
                min_samples_leaf: vec![2, 5, 10],
            },
            Algorithm::Xgb => HyperParamGrid::Xgb {
                max_depth: vec![3, 4, 5, 6, 7],
                min_child_weight: vec![0.01, 0.1, 1.0, 10.0],
                reg_alpha: vec![0.0, 0.01, 1.0, 10.0],
                reg_lambda: vec![0.0, 0.01, 1.0, 10.0],
                objective: vec![Objective::SquaredError, Objective::Tweedie],
            },
            Algorithm::Mlp => HyperParamGrid::Mlp {
                n_layer: vec![1, 2, 3],
                n_neuron: vec![10, 100, 500],
            },
            Algorithm::Svr => HyperParamGrid::Svr {
                kernel: vec![Kernel::Poly, Kernel::Rbf, Kernel::Sigmoid],
                c: vec![0.1, 1.0, 10.0, 100.0],
                epsilon: vec![0.01, 0.1, 1.0, 10.0],
            },
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            HyperParamGrid::Rf { .. } => Algorithm::Rf,
            HyperParamGrid::Xgb { .. } => Algorithm::Xgb,
            HyperParamGrid::Mlp { .. } => Algorithm::Mlp,
            HyperParamGrid::Svr { .. } => Algorithm::Svr,
        }
    }

    fn list_lengths(&self) -> Vec<usize> {
        match self {
            HyperParamGrid::Rf {
                n_estimators,
                max_depth,
                min_samples_split,
                min_samples_leaf,
            } => vec![
                n_estimators.len(),
                max_depth.len(),
                min_samples_split.len(),
                min_samples_leaf.len(),
            ],
            HyperParamGrid::Xgb {
                max_depth,
                min_child_weight,
                reg_alpha,
                reg_lambda,
                objective,
            } => vec![
                max_depth.len(),
                min_child_weight.len(),
                reg_alpha.len(),
                reg_lambda.len(),
                objective.len(),
            ],
            HyperParamGrid::Mlp { n_layer, n_neuron } => vec![n_layer.len(), n_neuron.len()],
            HyperParamGrid::Svr { kernel, c, epsilon } => vec![kernel.len(), c.len(), epsilon.len()],
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.list_lengths().contains(&0) {
            return Err(ForecastError::Config(format!(
                "{} grid has an empty candidate list",
                self.algorithm()
            )));
        }
        Ok(())
    }

    /// Number of points in the Cartesian product.
    pub fn len(&self) -> usize {
        self.list_lengths().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point; parameters outside the grid keep their defaults.
    pub fn points(&self) -> Vec<ModelParams> {
        match self {
            HyperParamGrid::Rf {
                n_estimators,
                max_depth,
                min_samples_split,
                min_samples_leaf,
            } => {
                let mut out = Vec::new();
                for (ne, md) in product(n_estimators, max_depth) {
                    for (ss, sl) in product(min_samples_split, min_samples_leaf) {
                        out.push(ModelParams::Rf(RfParams {
                            n_estimators: ne,
                            max_depth: md,
                            min_samples_split: ss,
                            min_samples_leaf: sl,
                            ..RfParams::default()
                        }));
                    }
                }
                out
            }
            HyperParamGrid::Xgb {
                max_depth,
                min_child_weight,
                reg_alpha,
                reg_lambda,
                objective,
            } => {
                let mut out = Vec::new();
                for (md, mcw) in product(max_depth, min_child_weight) {
                    for (a, l) in product(reg_alpha, reg_lambda) {
                        for obj in objective {
                            out.push(ModelParams::Xgb(GbtParams {
                                max_depth: md,
                                min_child_weight: mcw,
                                reg_alpha: a,
                                reg_lambda: l,
                                objective: *obj,
                                ..GbtParams::default()
                            }));
                        }
                    }
                }
                out
            }
            HyperParamGrid::Mlp { n_layer, n_neuron } => product(n_layer, n_neuron)
                .into_iter()
                .map(|(l, n)| {
                    ModelParams::Mlp(MlpParams {
                        n_layer: l,
                        n_neuron: n,
                        ..MlpParams::default()
                    })
                })
                .collect(),
            HyperParamGrid::Svr { kernel, c, epsilon } => {
                let mut out = Vec::new();
                for (k, cc) in product(kernel, c) {
                    for e in epsilon {
                        out.push(ModelParams::Svr(SvrParams {
                            kernel: k,
                            c: cc,
                            epsilon: *e,
                        }));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: ModelParams,
    pub metrics: Metrics,
    /// Every point with its CV metrics, in enumeration order.
    pub evaluated: Vec<(ModelParams, Metrics)>,
}

/// Cross-validates every grid point and keeps the lowest MAE; on ties the
/// earlier point wins.
pub fn grid_search(
    grid: &HyperParamGrid,
    mask: FeatureMask,
    samples: &SampleSet,
    cv: &CvOptions,
) -> Result<GridResult, ForecastError> {
    grid.validate()?;
    let points = grid.points();
    let scored: Vec<Result<Metrics, ForecastError>> =
        points.par_iter().map(|p| kfold_cv(p, mask, samples, cv)).collect();
    let mut evaluated = Vec::with_capacity(points.len());
    for (p, m) in points.into_iter().zip(scored) {
        evaluated.push((p, m?));
    }
    let mut best = 0;
    for (i, (_, m)) in evaluated.iter().enumerate() {
        if m.mae < evaluated[best].1.mae {
            best = i;
        }
    }
    Ok(GridResult {
        best: evaluated[best].0.clone(),
        metrics: evaluated[best].1,
        evaluated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaskScore {
    pub mask: FeatureMask,
    pub metrics: Metrics,
}

/// Cross-validates all 127 feature masks and ranks them by MAE, then by
/// fewer features, then by canonical feature order.
pub fn feature_search(
    params: &ModelParams,
    samples: &SampleSet,
    cv: &CvOptions,
) -> Result<Vec<MaskScore>, ForecastError> {
    let masks: Vec<FeatureMask> = FeatureMask::all().collect();
    let scored: Vec<Result<MaskScore, ForecastError>> = masks
        .par_iter()
        .map(|&mask| kfold_cv(params, mask, samples, cv).map(|metrics| MaskScore { mask, metrics }))
        .collect();
    let mut ranked: Vec<MaskScore> = scored.into_iter().collect::<Result<_, _>>()?;
    ranked.sort_by(|a, b| {
        a.metrics
            .mae
            .total_cmp(&b.metrics.mae)
            .then_with(|| a.mask.tie_break_cmp(b.mask))
    });
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmScore {
    pub algorithm: Algorithm,
    pub params: ModelParams,
    pub metrics: Metrics,
    /// Wall time to fit the selected parameters on all samples.
    pub train_seconds: f64,
}

/// Tunes each algorithm on its grid and ranks them by CV MAE (ties keep the
/// order given).
pub fn compare_algorithms(
    samples: &SampleSet,
    grids: &[HyperParamGrid],
    mask: FeatureMask,
    cv: &CvOptions,
) -> Result<Vec<AlgorithmScore>, ForecastError> {
    if grids.is_empty() {
        return Err(ForecastError::Config("no algorithms to compare".into()));
    }
    let mut rows = Vec::with_capacity(grids.len());
    for grid in grids {
        let tuned = grid_search(grid, mask, samples, cv)?;
        let start = Instant::now();
        train_regressor(&tuned.best, samples, mask, cv.seed)?;
        rows.push(AlgorithmScore {
            algorithm: grid.algorithm(),
            params: tuned.best,
            metrics: tuned.metrics,
            train_seconds: start.elapsed().as_secs_f64(),
        });
    }
    rows.sort_by(|a, b| a.metrics.mae.total_cmp(&b.metrics.mae));
    Ok(rows)
}
