//! Small statistics helpers for the experiment summaries.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    /// Standard error of the mean (sample std / √n); 0 for n < 2.
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    MeanSe { mean, se, n }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// Two-sided p-value for rho = 0.
    pub p_value: f64,
    pub n: usize,
}

/// Spearman rank correlation. The p-value is exact (all permutations) for
/// n ≤ 8 and uses the t approximation with n − 2 degrees of freedom above.
pub fn spearman(x: &[f64], y: &[f64]) -> Spearman {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let n = x.len();
    if n < 3 {
        return Spearman {
            rho: f64::NAN,
            p_value: 1.0,
            n,
        };
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let rho = pearson(&rx, &ry);
    let p_value = if n <= 8 {
        exact_p(&rx, &ry, rho)
    } else if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * ((n as f64 - 2.0) / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n as f64 - 2.0).expect("n > 2");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Spearman { rho, p_value, n }
}

fn exact_p(rx: &[f64], ry: &[f64], rho: f64) -> f64 {
    let mut perm = ry.to_vec();
    let (mut hits, mut total) = (0u64, 0u64);
    permute(&mut perm, 0, &mut |p| {
        total += 1;
        if pearson(rx, p).abs() >= rho.abs() - 1e-12 {
            hits += 1;
        }
    });
    hits as f64 / total as f64
}

fn permute(v: &mut [f64], k: usize, f: &mut impl FnMut(&[f64])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((m.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn perfect_monotone_relations() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let up: Vec<f64> = x.iter().map(|v| v * v).collect();
        let down: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
        assert_eq!(spearman(&x, &up).rho, 1.0);
        assert_eq!(spearman(&x, &down).rho, -1.0);
        assert!(spearman(&x, &up).p_value < 1e-10);
    }

    #[test]
    fn exact_small_sample() {
        // perfect ordering of 5 items: 2 of 120 permutations are as extreme
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let s = spearman(&x, &x);
        assert!((s.p_value - 2.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn t_approximation_matches_reference() {
        // rho = 0.5 with n = 20: t = 0.5·sqrt(18/0.75) = 2.4495, p ≈ 0.0247
        let t = 0.5 * (18.0f64 / 0.75).sqrt();
        let dist = StudentsT::new(0.0, 1.0, 18.0).unwrap();
        let p = 2.0 * (1.0 - dist.cdf(t));
        assert!((p - 0.0247).abs() < 5e-4, "{p}");
    }
}
