use serde::{Deserialize, Serialize};
use std::fmt;

use super::special::{beta_inc, beta_inc_complement, erfc, gamma_p, gamma_q};
use super::NumericsError;

/// Reference distribution for a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution {
    StudentT { df: f64 },
    ChiSquare { df: f64 },
    F { df1: f64, df2: f64 },
    StandardNormal,
}

/// Which tail(s) a p-value covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    /// Upper tail `P(S > s)`.
    One,
    /// `2 P(S > |s|)` for symmetric families, `2 min(cdf, sf)` otherwise.
    Two,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::StudentT { df } => write!(f, "t({df})"),
            Distribution::ChiSquare { df } => write!(f, "chi2({df})"),
            Distribution::F { df1, df2 } => write!(f, "F({df1}, {df2})"),
            Distribution::StandardNormal => write!(f, "N(0, 1)"),
        }
    }
}

impl Distribution {
    fn validate(&self) -> Result<(), NumericsError> {
        let ok = |df: f64| df.is_finite() && df > 0.0;
        let valid = match *self {
            Distribution::StudentT { df } | Distribution::ChiSquare { df } => ok(df),
            Distribution::F { df1, df2 } => ok(df1) && ok(df2),
            Distribution::StandardNormal => true,
        };
        if valid {
            Ok(())
        } else {
            Err(NumericsError::InvalidDegreesOfFreedom(self.to_string()))
        }
    }

    fn is_symmetric(&self) -> bool {
        matches!(self, Distribution::StudentT { .. } | Distribution::StandardNormal)
    }

    /// Upper tail probability `P(S > s)`.
    pub fn sf(&self, s: f64) -> f64 {
        match *self {
            Distribution::StandardNormal => 0.5 * erfc(s / std::f64::consts::SQRT_2),
            Distribution::StudentT { df } => {
                let tail = 0.5 * beta_inc(0.5 * df, 0.5, df / (df + s * s));
                if s >= 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Distribution::ChiSquare { df } => {
                if s <= 0.0 {
                    1.0
                } else {
                    gamma_q(0.5 * df, 0.5 * s)
                }
            }
            Distribution::F { df1, df2 } => {
                if s <= 0.0 {
                    1.0
                } else {
                    beta_inc(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * s))
                }
            }
        }
    }

    /// Lower tail probability `P(S <= s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            Distribution::StandardNormal | Distribution::StudentT { .. } => self.sf(-s),
            Distribution::ChiSquare { df } => {
                if s <= 0.0 {
                    0.0
                } else {
                    gamma_p(0.5 * df, 0.5 * s)
                }
            }
            Distribution::F { df1, df2 } => {
                if s <= 0.0 {
                    0.0
                } else {
                    beta_inc_complement(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * s))
                }
            }
        }
    }
}

/// p-value of `statistic` under `dist`.
pub fn tail_probability(statistic: f64, dist: Distribution, sides: Sides) -> Result<f64, NumericsError> {
    dist.validate()?;
    if statistic.is_nan() {
        return Err(NumericsError::NonFinite("test statistic"));
    }
    let p = match sides {
        Sides::One => dist.sf(statistic),
        Sides::Two if dist.is_symmetric() => 2.0 * dist.sf(statistic.abs()),
        Sides::Two => 2.0 * dist.cdf(statistic).min(dist.sf(statistic)),
    };
    Ok(p.clamp(0.0, 1.0))
}
