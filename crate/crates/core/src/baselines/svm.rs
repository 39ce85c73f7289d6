//! RBF-kernel support vector classifier trained with SMO.
//!
//! Solves the standard dual
//! `min ½ αᵀQα − Σα  s.t. 0 ≤ α ≤ C, yᵀα = 0`, `Q_ij = y_i y_j k(x_i, x_j)`,
//! using maximal-violating-pair working sets with second-order selection of
//! the partner index. Inputs are standardized with stored statistics.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::StateActionFeatures;
use crate::qlearn::check_header;
use crate::rng::stream;
use crate::world::Direction;

pub const SVM_SCHEMA: &str = "svm";
pub const SVM_VERSION: u32 = 1;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    /// Kernel width; `None` picks the median pairwise distance.
    pub sigma: Option<f64>,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Larger training sets are subsampled (stratified, seeded) to this size.
    pub max_samples: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            sigma: None,
            tol: 1e-3,
            max_iterations: 200_000,
            max_samples: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// Standardized features.
    pub x: Vec<f64>,
    /// +1 or −1.
    pub label: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelClassifier {
    pub support: Vec<SupportVector>,
    pub bias: f64,
    pub sigma: f64,
    pub c: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl KernelClassifier {
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Signed distance-like score `Σ αᵢ yᵢ k(xᵢ, x) + b` on raw inputs.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.decision_standardized(&self.standardize(x))
    }

    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        let g = 1.0 / (2.0 * self.sigma * self.sigma);
        self.support
            .iter()
            .map(|sv| sv.alpha * sv.label * (-g * sq_dist(&sv.x, z)).exp())
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) >= 0.0
    }

    /// Largest KKT residual over the support vectors, measured on the
    /// functional margin `y·f(x)`.
    pub fn max_kkt_residual(&self) -> f64 {
        let bound = 1e-9 * self.c.max(1.0);
        self.support
            .iter()
            .map(|sv| {
                let m = sv.label * self.decision_standardized(&sv.x);
                if sv.alpha >= self.c - bound {
                    (m - 1.0).max(0.0)
                } else {
                    (m - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("struct serializes to object");
        obj.insert("version".into(), SVM_VERSION.into());
        obj.insert("schema".into(), SVM_SCHEMA.into());
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        check_header(&v, SVM_SCHEMA, SVM_VERSION)?;
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Raw feature vector used by the classifier: direction (0 forward,
/// 1 backward), heading change in degrees, co-visible count.
pub fn feature_vector(f: &StateActionFeatures) -> [f64; 3] {
    let eta = match f.eta {
        Direction::Forward => 0.0,
        Direction::Backward => 1.0,
    };
    [eta, f.dtheta_deg, f.overlap as f64]
}

/// Trains on logged steps. Non-breaking steps are the positive (safe) class.
pub fn svm_train(samples: &[(StateActionFeatures, bool)], cfg: &SvmConfig) -> Result<KernelClassifier> {
    let xs: Vec<Vec<f64>> = samples.iter().map(|(f, _)| feature_vector(f).to_vec()).collect();
    let safe: Vec<bool> = samples.iter().map(|(_, phi)| !phi).collect();
    svm_train_points(&xs, &safe, cfg)
}

fn median_pairwise_distance(xs: &[Vec<f64>]) -> f64 {
    let n = xs.len().min(400);
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_dist(&xs[i], &xs[j]).sqrt());
        }
    }
    d.retain(|v| *v > 0.0);
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Stratified, seeded subsample keeping class proportions.
fn subsample(labels: &[bool], max: usize, seed: u64) -> Vec<usize> {
    if labels.len() <= max {
        return (0..labels.len()).collect();
    }
    let mut rng = stream(seed, &["svm-subsample".into()]);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let keep_pos = ((pos.len() as f64 / labels.len() as f64) * max as f64).round() as usize;
    let keep_pos = keep_pos.clamp(1, max - 1).min(pos.len());
    let keep_neg = (max - keep_pos).min(neg.len());
    let mut idx: Vec<usize> = pos[..keep_pos].iter().chain(&neg[..keep_neg]).copied().collect();
    idx.sort_unstable();
    idx
}

/// Trains on arbitrary points; `positive[i]` selects label +1.
pub fn svm_train_points(xs: &[Vec<f64>], positive: &[bool], cfg: &SvmConfig) -> Result<KernelClassifier> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if xs.is_empty() || n_pos == 0 || n_pos == positive.len() {
        return Err(Error::Degenerate("classifier training needs both classes".into()));
    }
    let idx = subsample(positive, cfg.max_samples.max(2), cfg.seed);
    let dim = xs[0].len();
    let n = idx.len();

    let mut mean = vec![0.0; dim];
    for &i in &idx {
        for (m, v) in mean.iter_mut().zip(&xs[i]) {
            *m += v / n as f64;
        }
    }
    let mut std = vec![0.0; dim];
    for &i in &idx {
        for (k, v) in xs[i].iter().enumerate() {
            std[k] += (v - mean[k]).powi(2) / n as f64;
        }
    }
    for s in std.iter_mut() {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let z: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| xs[i].iter().enumerate().map(|(k, v)| (v - mean[k]) / std[k]).collect())
        .collect();
    let y: Vec<f64> = idx.iter().map(|&i| if positive[i] { 1.0 } else { -1.0 }).collect();
    let sigma = cfg.sigma.unwrap_or_else(|| median_pairwise_distance(&z));
    let g = 1.0 / (2.0 * sigma * sigma);

    // full kernel matrix, row-major
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in i + 1..n {
            let v = (-g * sq_dist(&z[i], &z[j])).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let c = cfg.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    for _ in 0..cfg.max_iterations {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX {
                let b = gmax - v;
                if b > 0.0 {
                    let a = (k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t]).max(TAU);
                    let obj = -(b * b) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tol {
            break;
        }

        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k[i * n + j];
        if y[i] != y[j] {
            let quad = (k[i * n + i] + k[j * n + j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[i * n + i] + k[j * n + j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[i * n + t] * di + y[j] * k[j * n + t] * dj);
        }
    }

    // offset from free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };

    let support = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| SupportVector {
            x: z[t].clone(),
            label: y[t],
            alpha: alpha[t],
        })
        .collect();
    Ok(KernelClassifier {
        support,
        bias: -rho,
        sigma,
        c,
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let pos = i % 2 == 0;
            let c = if pos { 2.0 } else { -2.0 };
            xs.push(vec![c + rng.gen_range(-1.0..1.0), c + rng.gen_range(-1.0..1.0)]);
            ys.push(pos);
        }
        (xs, ys)
    }

    fn xor_set() -> (Vec<Vec<f64>>, Vec<bool>) {
        // four clusters on a grid; label = sign(x)·sign(y) > 0
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (cx, cy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            for a in 0..5 {
                for b in 0..5 {
                    let x = cx + (a as f64 - 2.0) * 0.1;
                    let y = cy + (b as f64 - 2.0) * 0.1;
                    xs.push(vec![x, y]);
                    ys.push(cx * cy > 0.0);
                }
            }
        }
        (xs, ys)
    }

    fn accuracy(clf: &KernelClassifier, xs: &[Vec<f64>], ys: &[bool]) -> f64 {
        xs.iter().zip(ys).filter(|(x, &y)| clf.predict(x) == y).count() as f64 / xs.len() as f64
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (xs, ys) = blobs(200, 4);
        let clf = svm_train_points(&xs, &ys, &SvmConfig::default()).unwrap();
        assert_eq!(accuracy(&clf, &xs, &ys), 1.0);
        assert!(clf.max_kkt_residual() <= 1e-3);
        assert!(clf.support.iter().all(|sv| sv.alpha > 0.0 && sv.alpha <= clf.c));
    }

    #[test]
    fn xor_needs_the_kernel() {
        let (xs, ys) = xor_set();
        let clf = svm_train_points(&xs, &ys, &SvmConfig::default()).unwrap();
        assert!(accuracy(&clf, &xs, &ys) > 0.95);
        assert!(clf.max_kkt_residual() <= 1e-3);
        // best axis-aligned or diagonal linear rule on the same points
        let best_linear = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)]
            .iter()
            .flat_map(|&(a, b)| [1.0f64, -1.0].map(move |s| (a * s, b * s)))
            .map(|(a, b)| {
                xs.iter().zip(&ys).filter(|(x, &y)| (a * x[0] + b * x[1] >= 0.0) == y).count() as f64 / xs.len() as f64
            })
            .fold(0.0, f64::max);
        assert!(best_linear <= 0.75);
    }

    #[test]
    fn single_class_is_degenerate() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            svm_train_points(&xs, &[true, true], &SvmConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn json_round_trip_preserves_decisions() {
        let (xs, ys) = blobs(60, 8);
        let clf = svm_train_points(&xs, &ys, &SvmConfig::default()).unwrap();
        let back = KernelClassifier::from_json(&clf.to_json().unwrap()).unwrap();
        for x in &xs {
            assert_eq!(clf.decision(x), back.decision(x));
        }
        let mut v: serde_json::Value = serde_json::from_str(&clf.to_json().unwrap()).unwrap();
        v["schema"] = "qtable".into();
        assert!(matches!(KernelClassifier::from_json(&v.to_string()), Err(Error::Format(_))));
    }
}
