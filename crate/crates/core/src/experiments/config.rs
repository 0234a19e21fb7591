use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Region;

/// Law of the random rotation (for `Θ_T`) or shear (for lattice runs),
/// expressed on the unit interval: `θ = 2πu` and `ξ = u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lambda {
    UniformCircle,
    /// Uniform on `[lo, hi) ⊂ [0, 1]`.
    UniformInterval { lo: f64, hi: f64 },
    /// Piecewise-constant density on equal bins of `[0, 1)`; `weights` are the
    /// bin masses.
    CustomDensityTable { weights: Vec<f64> },
}

impl Default for Lambda {
    fn default() -> Self {
        Lambda::UniformCircle
    }
}

impl Lambda {
    /// The density `2u` on `[0, 1)`, tabulated on `bins` bins.
    pub fn triangular(bins: usize) -> Lambda {
        let k = bins as f64;
        Lambda::CustomDensityTable {
            weights: (0..bins).map(|i| (2 * i + 1) as f64 / (k * k)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Lambda::UniformCircle => Ok(()),
            Lambda::UniformInterval { lo, hi } => {
                if 0.0 <= *lo && lo < hi && *hi <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::pre(format!(
                        "uniform_interval needs 0 ≤ lo < hi ≤ 1, got [{lo}, {hi})"
                    )))
                }
            }
            Lambda::CustomDensityTable { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::pre("density table needs nonnegative weights"));
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::pre(format!("density table sums to {s}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// One draw in `[0, 1)`.
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = match self {
            Lambda::UniformCircle => rng.random::<f64>(),
            Lambda::UniformInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Lambda::CustomDensityTable { weights } => {
                let target = rng.random::<f64>() * weights.iter().sum::<f64>();
                let mut acc = 0.0;
                let mut bin = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if target < acc {
                        bin = i;
                        break;
                    }
                }
                (bin as f64 + rng.random::<f64>()) / weights.len() as f64
            }
        };
        if u >= 1.0 {
            0.0
        } else {
            u
        }
    }
}

/// Where a run writes its artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicas: usize,
    #[serde(rename = "T_list")]
    pub t_list: Vec<f64>,
    pub regions: Vec<Region>,
    pub lambda: Lambda,
    pub outputs: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            replicas: 10_000,
            t_list: vec![1e2, 1e3, 1e4],
            regions: vec![Region::rect(-1.0, 1.0, -1.0, 1.0).expect("valid rectangle")],
            lambda: Lambda::UniformCircle,
            outputs: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::pre("replicas must be at least 1"));
        }
        if self.t_list.is_empty() {
            return Err(Error::pre("T_list is empty"));
        }
        if let Some(t) = self.t_list.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::pre(format!("T must be positive and finite, got {t}")));
        }
        if self.t_list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::pre("T_list must be strictly increasing"));
        }
        for r in &self.regions {
            if !(r.area() > 0.0) {
                return Err(Error::InvalidRegion(format!("{r} has zero area")));
            }
        }
        self.lambda.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let mut c = ExperimentConfig::default();
        c.replicas = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.t_list = vec![10.0, 10.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.lambda = Lambda::CustomDensityTable {
            weights: vec![0.5, 0.4],
        };
        assert!(c.validate().is_err());
        assert!(Lambda::triangular(100).validate().is_ok());
        assert!(Lambda::UniformInterval { lo: 0.5, hi: 0.2 }.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = ExperimentConfig {
            lambda: Lambda::UniformInterval { lo: 0.1, hi: 0.6 },
            ..Default::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"T_list\""));
        assert!(s.contains("\"kind\":\"uniform_interval\""));
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn triangular_law_has_mean_two_thirds() {
        let l = Lambda::triangular(100);
        let mut rng = stream(1, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| l.sample_unit(&mut rng)).collect();
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        let m = crate::stats::MeanEstimate::from_samples(&xs).unwrap();
        assert!(m.z(2.0 / 3.0) < 3.0, "{m:?}");
    }
}
