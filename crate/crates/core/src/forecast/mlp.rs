//! Fully connected ReLU network trained with Adam on standardized data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub n_layer: usize,
    pub n_neuron: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L2 penalty on weights.
    pub alpha: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            n_layer: 1,
            n_neuron: 100,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            alpha: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out x n_in`.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            out.push(self.b[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    layers: Vec<Layer>,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

fn mean_scale(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

impl Mlp {
    pub fn fit(data: &Dataset, params: &MlpParams, seed: u64) -> Mlp {
        let p = data.n_features();
        let n = data.len();
        let (x_mean, x_scale): (Vec<f64>, Vec<f64>) =
            data.columns.iter().map(|c| mean_scale(c.iter().copied())).unzip();
        let (y_mean, y_scale) = mean_scale(data.targets.iter().copied());
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..p).map(|j| (data.columns[j][i] - x_mean[j]) / x_scale[j]).collect())
            .collect();
        let ys: Vec<f64> = data.targets.iter().map(|y| (y - y_mean) / y_scale).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![p];
        sizes.extend(std::iter::repeat_n(params.n_neuron.max(1), params.n_layer));
        sizes.push(1);
        let mut layers: Vec<Layer> = sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt();
                Layer {
                    n_in: w[0],
                    n_out: w[1],
                    w: (0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)).collect(),
                    b: vec![0.0; w[1]],
                }
            })
            .collect();
        let mut adam = Adam {
            m: layers
                .iter()
                .flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]])
                .collect(),
            v: layers
                .iter()
                .flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]])
                .collect(),
            t: 0,
        };
        let mut order: Vec<usize> = (0..n).collect();
        let batch = params.batch_size.clamp(1, n.max(1));
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let grads = batch_gradients(&layers, &xs, &ys, chunk, params.alpha, n);
                adam_step(&mut layers, &mut adam, &grads, params.learning_rate);
            }
        }
        Mlp {
            x_mean,
            x_scale,
            y_mean,
            y_scale,
            layers,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut a: Vec<f64> = row
            .iter()
            .zip(self.x_mean.iter().zip(&self.x_scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward(&a, &mut z);
            if k < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut a, &mut z);
        }
        self.y_mean + self.y_scale * a[0]
    }
}

/// Gradients of mean squared error over `batch` (plus the L2 term scaled to
/// the batch share), ordered as `[w0, b0, w1, b1, ...]`.
fn batch_gradients(
    layers: &[Layer],
    xs: &[Vec<f64>],
    ys: &[f64],
    batch: &[usize],
    alpha: f64,
    n_total: usize,
) -> Vec<Vec<f64>> {
    let mut grads: Vec<Vec<f64>> = layers
        .iter()
        .flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]])
        .collect();
    let last = layers.len() - 1;
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
    for &i in batch {
        acts.clear();
        acts.push(xs[i].clone());
        for (k, layer) in layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&acts[k], &mut z);
            if k < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        let mut delta = vec![acts[last + 1][0] - ys[i]];
        for k in (0..layers.len()).rev() {
            let layer = &layers[k];
            let input = &acts[k];
            let (gw, gb) = {
                let (a, b) = grads.split_at_mut(2 * k + 1);
                (&mut a[2 * k], &mut b[0])
            };
            for o in 0..layer.n_out {
                gb[o] += delta[o];
                let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += delta[o] * x;
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.n_in];
                for (row, d) in layer.w.chunks_exact(layer.n_in).zip(&delta) {
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    let m = batch.len() as f64;
    let l2 = alpha / n_total as f64;
    for (k, layer) in layers.iter().enumerate() {
        for (g, w) in grads[2 * k].iter_mut().zip(&layer.w) {
            *g = *g / m + l2 * w;
        }
        grads[2 * k + 1].iter_mut().for_each(|g| *g /= m);
    }
    grads
}

fn adam_step(layers: &mut [Layer], adam: &mut Adam, grads: &[Vec<f64>], lr: f64) {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    adam.t += 1;
    let c1 = 1.0 - B1.powi(adam.t);
    let c2 = 1.0 - B2.powi(adam.t);
    for (k, layer) in layers.iter_mut().enumerate() {
        for (slot, params) in [(2 * k, &mut layer.w), (2 * k + 1, &mut layer.b)] {
            let (m, v, g) = (&mut adam.m[slot], &mut adam.v[slot], &grads[slot]);
            for j in 0..params.len() {
                m[j] = B1 * m[j] + (1.0 - B1) * g[j];
                v[j] = B2 * v[j] + (1.0 - B2) * g[j] * g[j];
                params[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + EPS);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_a_smooth_function() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 20.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 50.0 + 10.0 * r[0] + 3.0 * (r[0]).sin()).collect();
        let data = Dataset::from_rows(&rows, y.clone());
        let p = MlpParams {
            n_neuron: 32,
            epochs: 300,
            learning_rate: 5e-3,
            ..MlpParams::default()
        };
        let m = Mlp::fit(&data, &p, 3);
        let mae = rows.iter().zip(&y).map(|(r, t)| (m.predict(r) - t).abs()).sum::<f64>() / 200.0;
        assert!(mae < 2.0, "mae {mae}");
    }

    #[test]
    fn deterministic_for_seed() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let data = Dataset::from_rows(&rows, rows.iter().map(|r| r[0] + r[1]).collect());
        let p = MlpParams {
            n_layer: 2,
            n_neuron: 8,
            epochs: 20,
            ..MlpParams::default()
        };
        assert_eq!(Mlp::fit(&data, &p, 5), Mlp::fit(&data, &p, 5));
    }
}
