//! Estimators and distances used by the experiments: empirical CDFs, counting
//! distributions, pair counts, histograms and a few goodness-of-fit helpers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::geometry::{Region, Vec2};

/// Two-sample Kolmogorov–Smirnov statistic: the sup-distance between the
/// empirical CDFs of `a` and `b`.
pub fn ecdf_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::pre("ecdf_ks needs two nonempty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical distribution of a discrete outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf<K: Ord> {
    freq: BTreeMap<K, u64>,
    n_samples: u64,
}

/// Distribution of `#(process ∩ A)` over Monte Carlo replicas.
pub type CountingPmf = Pmf<u64>;

/// Joint distribution of counts in two regions.
pub type JointPmf = Pmf<(u64, u64)>;

impl<K: Ord + Clone> Pmf<K> {
    pub fn from_outcomes<I: IntoIterator<Item = K>>(it: I) -> Result<Self> {
        let mut freq = BTreeMap::new();
        let mut n = 0u64;
        for k in it {
            *freq.entry(k).or_insert(0) += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::pre("empty sample"));
        }
        Ok(Pmf { freq, n_samples: n })
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn prob(&self, k: &K) -> f64 {
        self.freq.get(k).copied().unwrap_or(0) as f64 / self.n_samples as f64
    }

    /// Outcomes with their relative frequencies.
    pub fn probs(&self) -> impl Iterator<Item = (&K, f64)> + '_ {
        let n = self.n_samples as f64;
        self.freq.iter().map(move |(k, c)| (k, *c as f64 / n))
    }

    /// Rough size of the total-variation distance expected between two
    /// independent samples of sizes `self.n_samples()` and `other.n_samples()`
    /// drawn from a common law (estimated from the pooled frequencies).
    pub fn tv_noise(&self, other: &Pmf<K>) -> f64 {
        let (n1, n2) = (self.n_samples as f64, other.n_samples as f64);
        let mut keys: Vec<&K> = self.freq.keys().chain(other.freq.keys()).collect();
        keys.sort();
        keys.dedup();
        let scale = (2.0 / std::f64::consts::PI).sqrt() * (1.0 / n1 + 1.0 / n2).sqrt();
        keys.into_iter()
            .map(|k| {
                let c = self.freq.get(k).copied().unwrap_or(0) + other.freq.get(k).copied().unwrap_or(0);
                let p = c as f64 / (n1 + n2);
                0.5 * scale * (p * (1.0 - p)).sqrt()
            })
            .sum()
    }
}

impl Pmf<u64> {
    pub fn mean(&self) -> f64 {
        let s: u64 = self.freq.iter().map(|(k, c)| k * c).sum();
        s as f64 / self.n_samples as f64
    }
}

/// Normalized frequency table of nonnegative counts.
pub fn counting_pmf(counts: &[i64]) -> Result<CountingPmf> {
    if let Some(c) = counts.iter().find(|c| **c < 0) {
        return Err(Error::pre(format!("negative count {c}")));
    }
    Pmf::from_outcomes(counts.iter().map(|c| *c as u64))
}

/// `½ Σ_r |p(r) − q(r)|` over the union of supports.
pub fn tv_distance<K: Ord + Clone>(p: &Pmf<K>, q: &Pmf<K>) -> f64 {
    let mut keys: Vec<&K> = p.freq.keys().chain(q.freq.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (p.prob(k) - q.prob(k)).abs())
        .sum::<f64>()
}

/// Number of ordered pairs `(y₁, y₂)` of distinct list entries with
/// `y₁ ∈ A` and `y₂ ∈ B`.
pub fn pair_count(points: &[Vec2], a: &Region, b: &Region) -> u64 {
    let in_a: Vec<bool> = points.iter().map(|p| a.contains(*p)).collect();
    let in_b: Vec<bool> = points.iter().map(|p| b.contains(*p)).collect();
    let na = in_a.iter().filter(|v| **v).count() as u64;
    let nb = in_b.iter().filter(|v| **v).count() as u64;
    let both = in_a.iter().zip(&in_b).filter(|(x, y)| **x && **y).count() as u64;
    na * nb - both
}

/// Equal-width histogram over `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values below `lo`.
    pub underflow: u64,
    /// Values at or above `hi` (and NaNs).
    pub overflow: u64,
    pub total: u64,
}

impl Histogram {
    /// Counts normalized to a probability density over the binned range,
    /// relative to the total number of values.
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(c, w)| *c as f64 / (self.total as f64 * (w[1] - w[0])))
            .collect()
    }
}

pub fn make_histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 || !(lo < hi) {
        return Err(Error::pre("histogram needs bins ≥ 1 and lo < hi"));
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for &v in values {
        if v < lo {
            underflow += 1;
        } else if v >= hi || v.is_nan() {
            overflow += 1;
        } else {
            let i = (((v - lo) * bins as f64 / (hi - lo)) as usize).min(bins - 1);
            counts[i] += 1;
        }
    }
    Ok(Histogram {
        bin_edges,
        counts,
        underflow,
        overflow,
        total: values.len() as u64,
    })
}

/// Sample mean with its normal-approximation standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::pre("need at least two samples for a standard error"));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(MeanEstimate {
            mean,
            se: (var / n).sqrt(),
            n: xs.len() as u64,
        })
    }

    /// `|mean − target|` in units of the standard error.
    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.se
    }

    /// Separation from another estimate in combined standard errors.
    pub fn separation(&self, other: &MeanEstimate) -> f64 {
        (self.mean - other.mean).abs() / self.se.hypot(other.se)
    }
}

/// Plug-in variance of `xs` with a delta-method standard error.
pub fn variance_estimate(xs: &[f64]) -> Result<MeanEstimate> {
    if xs.len() < 4 {
        return Err(Error::pre("need at least four samples"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let est = MeanEstimate::from_samples(&sq)?;
    Ok(MeanEstimate {
        mean: est.mean * n / (n - 1.0),
        ..est
    })
}

/// Plug-in covariance of paired samples with a delta-method standard error.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> Result<MeanEstimate> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::pre("need at least four paired samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let est = MeanEstimate::from_samples(&prods)?;
    Ok(MeanEstimate {
        mean: est.mean * n / (n - 1.0),
        ..est
    })
}

/// Result of a two-sample χ² homogeneity test over binned counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample χ² test on matching bins. Bins whose pooled count is below
/// `min_pooled` are merged into a single remainder bin.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_pooled: u64) -> Result<ChiSquareTest> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::pre("chi-square needs equally sized nonempty bin lists"));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::pre("chi-square needs nonempty samples"));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y >= min_pooled {
            cells.push((x as f64, y as f64));
        } else {
            rest.0 += x as f64;
            rest.1 += y as f64;
        }
    }
    if rest.0 + rest.1 > 0.0 {
        cells.push(rest);
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = cells
        .iter()
        .filter(|(x, y)| x + y > 0.0)
        .map(|(x, y)| (ka * x - kb * y).powi(2) / (x + y))
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

/// One-sample χ² goodness-of-fit of binned counts against cell
/// probabilities `probs` (which must sum to one).
pub fn chi_square_goodness(counts: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::pre("chi-square needs at least two matching cells"));
    }
    if probs.iter().any(|p| !(*p > 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::pre("cell probabilities must be positive and sum to one"));
    }
    let n = counts.iter().sum::<u64>() as f64;
    if n == 0.0 {
        return Err(Error::pre("chi-square needs a nonempty sample"));
    }
    let statistic: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64 - n * p).powi(2) / (n * p))
        .sum();
    let dof = counts.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}
