//! Variance distributions for the per-asset return variances `s_i`:
//! declarative specs, their inverse moments `<s^-1>` and `<s^-2>`, and
//! seeded sampling.
//!
//! Only the two inverse moments enter the closed-form predictions, so the
//! spec carries them analytically wherever a closed form exists.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{mix, stream_rng, DOMAIN_VARIANCES};

/// Distribution of the per-asset variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSpec {
    /// Every asset has the same variance `s`.
    Identical { s: f64 },
    /// `s_i = 1` with probability `r`, otherwise `s_tilde` (risk-free vs
    /// risky split on the variance scale).
    TwoPoint { r: f64, s_tilde: f64 },
    /// Continuous uniform on `[lower, upper]`.
    Uniform { lower: f64, upper: f64 },
    /// Explicit per-asset values, used verbatim.
    Explicit { values: Vec<f64> },
}

/// The six named settings used by the ensemble experiments: `1A`/`1B`/`1C`
/// are two-point mixes sharing `<s^-2> = 30`, `2A'`/`2B'`/`2C'` are uniform
/// on `[1,2]`, `[1,3]`, `[1,4]`.
pub const PRESET_NAMES: [&str; 6] = ["1A", "1B", "1C", "2A'", "2B'", "2C'"];

impl VarianceSpec {
    /// Looks up a named preset; the trailing apostrophe of the uniform
    /// presets may be omitted (`2A` == `2A'`).
    pub fn preset(name: &str) -> Result<Self> {
        let key = name.trim().trim_end_matches('\'').to_ascii_uppercase();
        let spec = match key.as_str() {
            "1A" => VarianceSpec::TwoPoint {
                r: 21.0 / 25.0,
                s_tilde: 2.0 / 27.0,
            },
            "1B" => VarianceSpec::TwoPoint {
                r: 14.0 / 23.0,
                s_tilde: 3.0 / 26.0,
            },
            "1C" => VarianceSpec::TwoPoint {
                r: 5.0 / 21.0,
                s_tilde: 4.0 / 25.0,
            },
            "2A" => VarianceSpec::Uniform {
                lower: 1.0,
                upper: 2.0,
            },
            "2B" => VarianceSpec::Uniform {
                lower: 1.0,
                upper: 3.0,
            },
            "2C" => VarianceSpec::Uniform {
                lower: 1.0,
                upper: 4.0,
            },
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown preset {name:?}; expected one of {PRESET_NAMES:?}"
                )))
            }
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            VarianceSpec::Identical { s } => {
                if !(s.is_finite() && *s > 0.0) {
                    return bad(format!("identical variance must be positive, got {s}"));
                }
            }
            VarianceSpec::TwoPoint { r, s_tilde } => {
                if !(r.is_finite() && (0.0..=1.0).contains(r)) {
                    return bad(format!(
                        "two-point probability r must lie in [0,1], got {r}"
                    ));
                }
                if !(s_tilde.is_finite() && *s_tilde > 0.0) {
                    return bad(format!("two-point s_tilde must be positive, got {s_tilde}"));
                }
            }
            VarianceSpec::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && *lower > 0.0 && upper > lower) {
                    return bad(format!(
                        "uniform variance range requires 0 < lower < upper, got [{lower}, {upper}]"
                    ));
                }
            }
            VarianceSpec::Explicit { values } => {
                if values.is_empty() {
                    return bad("explicit variance list must be non-empty".into());
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                    return bad(format!("explicit variances must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }
}

impl FromStr for VarianceSpec {
    type Err = Error;

    /// Parses the flag syntax, e.g. `identical:s=1`, `two-point:r=0.84,s=0.0741`,
    /// `uniform:l=1,u=2`, `explicit:0.5,1.5,2.0`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let usage = || {
            Error::InvalidParameter(format!(
                "cannot parse variance spec {text:?}; expected identical:s=<v>, \
                 two-point:r=<v>,s=<v>, uniform:l=<v>,u=<v> or explicit:v1,v2,..."
            ))
        };
        let fields = |args: &str| -> Result<Vec<(String, f64)>> {
            args.split(',')
                .filter(|part| !part.is_empty())
                .map(|part| {
                    let (key, value) = part.split_once('=').ok_or_else(usage)?;
                    let value: f64 = value.trim().parse().map_err(|_| usage())?;
                    Ok((key.trim().to_ascii_lowercase(), value))
                })
                .collect()
        };
        let lookup = |fields: &[(String, f64)], key: &str| -> Result<f64> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(usage)
        };
        let spec = match kind.trim().to_ascii_lowercase().as_str() {
            "identical" => VarianceSpec::Identical {
                s: lookup(&fields(args)?, "s")?,
            },
            "two-point" | "twopoint" => {
                let f = fields(args)?;
                VarianceSpec::TwoPoint {
                    r: lookup(&f, "r")?,
                    s_tilde: lookup(&f, "s")?,
                }
            }
            "uniform" => {
                let f = fields(args)?;
                VarianceSpec::Uniform {
                    lower: lookup(&f, "l")?,
                    upper: lookup(&f, "u")?,
                }
            }
            "explicit" => {
                let values: Vec<f64> = args
                    .split(',')
                    .filter(|part| !part.trim().is_empty())
                    .map(|part| part.trim().parse().map_err(|_| usage()))
                    .collect::<Result<_>>()?;
                VarianceSpec::Explicit { values }
            }
            _ => return Err(usage()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Inverse moments `m1 = <s^-1>` and `m2 = <s^-2>` of a variance spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseMoments {
    pub m1: f64,
    pub m2: f64,
}

impl InverseMoments {
    /// Jensen gap `m2 - m1^2 >= 0`; zero only for identical variances.
    pub fn jensen_gap(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }
}

/// Inverse moments of `spec`: closed forms for the parametric variants,
/// empirical means for `Explicit`.
pub fn analytic_moments(spec: &VarianceSpec) -> Result<InverseMoments> {
    spec.validate()?;
    let m = match spec {
        VarianceSpec::Identical { s } => InverseMoments {
            m1: 1.0 / s,
            m2: 1.0 / (s * s),
        },
        // <s^-t> = r + (1 - r) s_tilde^-t
        VarianceSpec::TwoPoint { r, s_tilde } => InverseMoments {
            m1: r + (1.0 - r) / s_tilde,
            m2: r + (1.0 - r) / (s_tilde * s_tilde),
        },
        // <s^-1> = log(u/l)/(u-l), <s^-2> = 1/(u l)
        VarianceSpec::Uniform { lower, upper } => InverseMoments {
            m1: (upper / lower).ln() / (upper - lower),
            m2: 1.0 / (upper * lower),
        },
        VarianceSpec::Explicit { values } => {
            let n = values.len() as f64;
            InverseMoments {
                m1: values.iter().map(|s| 1.0 / s).sum::<f64>() / n,
                m2: values.iter().map(|s| 1.0 / (s * s)).sum::<f64>() / n,
            }
        }
    };
    debug_assert!(m.jensen_gap() >= -1e-12 * m.m2.abs());
    Ok(m)
}

/// Draws `n` i.i.d. variances per `spec`, one ChaCha stream per asset index
/// so the draw for asset `i` does not depend on `n` or evaluation order.
/// `Explicit` returns its values verbatim and requires `n` to match.
pub fn sample_variances(spec: &VarianceSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot sample zero variances".into(),
        ));
    }
    let base = mix(seed, DOMAIN_VARIANCES);
    let values = match spec {
        VarianceSpec::Identical { s } => vec![*s; n],
        VarianceSpec::TwoPoint { r, s_tilde } => (0..n)
            .map(|i| {
                let u: f64 = stream_rng(base, i as u64).gen();
                if u < *r {
                    1.0
                } else {
                    *s_tilde
                }
            })
            .collect(),
        VarianceSpec::Uniform { lower, upper } => (0..n)
            .map(|i| {
                let u: f64 = stream_rng(base, i as u64).gen();
                lower + (upper - lower) * u
            })
            .collect(),
        VarianceSpec::Explicit { values } => {
            if values.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "explicit variances vs requested length",
                    expected: n,
                    actual: values.len(),
                });
            }
            values.clone()
        }
    };
    Ok(values)
}
