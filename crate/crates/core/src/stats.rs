//! Correlation, paired signed-rank testing, PCA and distance summaries.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("zero variance")]
    DegenerateVariance,
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("all points coincide")]
    DegenerateInput,
    #[error("only one class present")]
    SingleClass,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided, from Student's t with n-2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    let r = pearson(x, y)?;
    let n = x.len();
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Correlation { r, p_value, n })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SignedRank {
    /// min(W+, W-)
    pub statistic: f64,
    pub p_value: f64,
    /// Nonzero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Above this many nonzero differences the normal approximation is used.
pub const WILCOXON_EXACT_MAX: usize = 12;

/// Average ranks (1-based) of `v`, ties sharing their mean rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero
/// differences are dropped first.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<SignedRank, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let n = diffs.len();
    if n < 5 {
        return Err(StatsError::TooFewObservations { needed: 5, got: n });
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);
    let center = total / 2.0;

    if n <= WILCOXON_EXACT_MAX {
        // Ranks are multiples of 1/2, so doubled ranks are integers and the
        // null distribution of 2W+ is a subset-sum count.
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut ways = vec![0u64; max + 1];
        ways[0] = 1;
        for &r in &doubled {
            for s in (r..=max).rev() {
                ways[s] += ways[s - r];
            }
        }
        let observed = (2.0 * (w_plus - center)).abs();
        let hits: u64 = ways
            .iter()
            .enumerate()
            .filter(|(s, _)| (*s as f64 - 2.0 * center).abs() >= observed - 1e-9)
            .map(|(_, w)| w)
            .sum();
        let p_value = (hits as f64 / (1u64 << n) as f64).min(1.0);
        return Ok(SignedRank { statistic, p_value, n, exact: true });
    }

    let mut abs_sorted: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    abs_sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in abs_sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let nf = n as f64;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - center) / var.sqrt();
    let p_value = (2.0 * Normal::standard().sf(z.abs())).min(1.0);
    Ok(SignedRank { statistic, p_value, n, exact: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-length, mutually orthogonal principal axes.
    pub components: Vec<Vec<f64>>,
    /// Variance captured along each component.
    pub variances: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Mean-centered projection onto the top `dims` eigenvectors of the
/// sample covariance, found by power iteration with deflation.
pub fn pca_project(data: &[Vec<f64>], dims: usize) -> Result<Pca, StatsError> {
    if data.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: data.len() });
    }
    let d = data[0].len();
    if let Some(bad) = data.iter().find(|r| r.len() != d) {
        return Err(StatsError::LengthMismatch(d, bad.len()));
    }
    if d < dims {
        return Err(StatsError::TooFewObservations { needed: dims, got: d });
    }
    let n = data.len() as f64;
    let center: Vec<f64> = (0..d).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let centered: Vec<Vec<f64>> = data.iter().map(|r| r.iter().zip(&center).map(|(x, m)| x - m).collect()).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in &centered {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += r[i] * r[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    if trace == 0.0 {
        return Err(StatsError::DegenerateInput);
    }

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(dims);
    let mut variances = Vec::with_capacity(dims);
    for k in 0..dims {
        // Fixed, non-symmetric start so runs are reproducible.
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + k * 3) % 11) as f64 / 10.0).collect();
        let orthogonalize = |v: &mut Vec<f64>, found: &[Vec<f64>]| {
            for c in found {
                let p = dot(v, c);
                v.iter_mut().zip(c).for_each(|(x, ci)| *x -= p * ci);
            }
        };
        orthogonalize(&mut v, &components);
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            let mut w: Vec<f64> = cov.iter().map(|row| dot(row, &v)).collect();
            orthogonalize(&mut w, &components);
            let norm = normalize(&mut w);
            if norm <= trace * 1e-15 {
                // Remaining variance is nil; keep the orthogonal start.
                lambda = 0.0;
                break;
            }
            let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = w;
            lambda = norm;
            if delta < 1e-13 {
                break;
            }
        }
        // Re-orthogonalize once more against numerical drift.
        orthogonalize(&mut v, &components);
        normalize(&mut v);
        let pivot = v.iter().cloned().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        variances.push(lambda);
        components.push(v);
    }
    let points = centered.iter().map(|r| components.iter().map(|c| dot(r, c)).collect()).collect();
    Ok(Pca { mean: center, components, variances, points })
}

/// Mean Euclidean distance over all pairs of points with different classes.
pub fn interclass_distance(points: &[(Vec<f64>, usize)]) -> Result<f64, StatsError> {
    let (mut sum, mut pairs) = (0.0, 0u64);
    for (i, (p, cp)) in points.iter().enumerate() {
        for (q, cq) in &points[i + 1..] {
            if cp != cq {
                sum += p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(StatsError::SingleClass);
    }
    Ok(sum / pairs as f64)
}

/// Population mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests;
