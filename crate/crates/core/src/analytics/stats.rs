use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CiMethod {
    /// mean ± z·s/√n
    Normal { z: f64 },
    /// Student t quantile with n−1 degrees of freedom, for small groups.
    StudentT { level: f64 },
}

/// Which standard deviation enters the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spread {
    /// Divides by n − 1.
    Sample,
    /// Divides by n; unchanged when every value is duplicated.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiConfig {
    pub method: CiMethod,
    pub spread: Spread,
}

impl Default for CiConfig {
    fn default() -> Self {
        Self {
            method: CiMethod::Normal { z: 1.96 },
            spread: Spread::Sample,
        }
    }
}

impl CiConfig {
    pub fn population() -> Self {
        Self {
            spread: Spread::Population,
            ..Self::default()
        }
    }

    pub fn student_t(level: f64) -> Self {
        Self {
            method: CiMethod::StudentT { level },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Summary {
    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Mean and confidence interval. A single value gives a degenerate
/// interval; no values give `None`.
pub fn summarize(values: &[f64], config: &CiConfig) -> Option<Summary> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some(Summary {
            n,
            mean,
            sd: 0.0,
            ci_low: mean,
            ci_high: mean,
        });
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = match config.spread {
        Spread::Sample => (ss / (n - 1) as f64).sqrt(),
        Spread::Population => (ss / n as f64).sqrt(),
    };
    let crit = match config.method {
        CiMethod::Normal { z } => z,
        CiMethod::StudentT { level } => StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.5 + level / 2.0),
    };
    let half = crit * sd / (n as f64).sqrt();
    Some(Summary {
        n,
        mean,
        sd,
        ci_low: mean - half,
        ci_high: mean + half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_two_three() {
        let s = summarize(&[1.0, 2.0, 3.0], &CiConfig::default()).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.ci_high - (2.0 + 1.96 / 3f64.sqrt())).abs() < 1e-12);
        assert!((s.ci_low - (2.0 - 1.96 / 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn single_value_collapses() {
        let s = summarize(&[4.0], &CiConfig::default()).unwrap();
        assert_eq!((s.ci_low, s.mean, s.ci_high), (4.0, 4.0, 4.0));
        assert!(summarize(&[], &CiConfig::default()).is_none());
    }

    #[test]
    fn duplicating_shrinks_population_interval_by_root_two() {
        let values = [0.3, 1.7, 2.2, 5.0, 4.1];
        let doubled: Vec<f64> = values.iter().chain(values.iter()).copied().collect();
        let a = summarize(&values, &CiConfig::population()).unwrap();
        let b = summarize(&doubled, &CiConfig::population()).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-12);
        assert!((a.half_width() / b.half_width() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn student_t_is_wider_for_small_n() {
        let v = [1.0, 2.0, 3.0];
        let z = summarize(&v, &CiConfig::default()).unwrap();
        let t = summarize(&v, &CiConfig::student_t(0.95)).unwrap();
        // t quantile with 2 degrees of freedom is 4.302653
        assert!((t.half_width() - 4.302652729749464 / 3f64.sqrt()).abs() < 1e-6);
        assert!(t.half_width() > z.half_width());
    }
}
