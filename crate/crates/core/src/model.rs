//! Problem instances and service-time distributions.
//!
//! A [`ModelParams`] fixes the economic queueing instance: Poisson arrivals at
//! rate `lambda`, service at mean rate `mu` with second moment `K / mu^2`, and a
//! premium fee `cost` measured in units of expected waiting time.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unstable load: rho = {rho} must lie strictly inside (0, 1)")]
    UnstableLoad { rho: f64 },
    #[error("infeasible variance parameter: K = {k} (second moment requires K >= 1)")]
    InfeasibleVariance { k: f64 },
    #[error("non-positive rate: {name} = {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("negative premium fee: C = {cost}")]
    NegativeCost { cost: f64 },
    #[error("fraction phi = {phi} outside [0, 1]")]
    InvalidFraction { phi: f64 },
    #[error("family {family} cannot realize K = {k}")]
    UnsupportedFamily { family: &'static str, k: f64 },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

/// An economic queueing instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu: f64,
    /// Variance parameter: `E[S^2] = k_var / mu^2`.
    pub k_var: f64,
    pub cost: f64,
}

impl ModelParams {
    /// Builds and validates an instance.
    pub fn new(lambda: f64, mu: f64, k_var: f64, cost: f64) -> Result<Self, ModelError> {
        validate(Self {
            lambda,
            mu,
            k_var,
            cost,
        })
    }

    /// Builds an instance from a load rather than an arrival rate.
    pub fn from_load(rho: f64, mu: f64, k_var: f64, cost: f64) -> Result<Self, ModelError> {
        Self::new(rho * mu, mu, k_var, cost)
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    pub fn with_cost(self, cost: f64) -> Result<Self, ModelError> {
        Self::new(self.lambda, self.mu, self.k_var, cost)
    }

    /// Mean delay of a single-class M|G|1 queue with the same load,
    /// `K rho / (2 mu (1 - rho))`.
    pub fn single_class_wait(&self) -> f64 {
        let rho = self.rho();
        self.k_var * rho / (2.0 * self.mu * (1.0 - rho))
    }
}

/// Checks every [`ModelParams`] invariant, returning the params unchanged on
/// success.
pub fn validate(params: ModelParams) -> Result<ModelParams, ModelError> {
    if !(params.lambda > 0.0) {
        return Err(ModelError::NonPositiveRate {
            name: "lambda",
            value: params.lambda,
        });
    }
    if !(params.mu > 0.0) {
        return Err(ModelError::NonPositiveRate {
            name: "mu",
            value: params.mu,
        });
    }
    let rho = params.rho();
    if !(rho > 0.0 && rho < 1.0) {
        return Err(ModelError::UnstableLoad { rho });
    }
    if !(params.k_var >= 1.0) || !params.k_var.is_finite() {
        return Err(ModelError::InfeasibleVariance { k: params.k_var });
    }
    if !(params.cost >= 0.0) || !params.cost.is_finite() {
        return Err(ModelError::NegativeCost { cost: params.cost });
    }
    Ok(params)
}

/// Fraction of customers joining the premium class.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PhiFraction(f64);

impl PhiFraction {
    pub const ZERO: PhiFraction = PhiFraction(0.0);
    pub const ONE: PhiFraction = PhiFraction(1.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&value) {
            Ok(PhiFraction(value))
        } else {
            Err(ModelError::InvalidFraction { phi: value })
        }
    }

    /// Clamps into `[0, 1]`. NaN maps to zero.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            PhiFraction(0.0)
        } else {
            PhiFraction(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PhiFraction {
    type Error = ModelError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        PhiFraction::new(value)
    }
}

impl From<PhiFraction> for f64 {
    fn from(phi: PhiFraction) -> f64 {
        phi.0
    }
}

impl fmt::Display for PhiFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A parameterized service-time family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ServiceFamily {
    Deterministic {
        value: f64,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// Two exponential branches: rate1 with probability `p`, rate2 otherwise.
    Hyperexponential {
        p: f64,
        rate1: f64,
        rate2: f64,
    },
}

impl ServiceFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ServiceFamily::Deterministic { .. } => "deterministic",
            ServiceFamily::Exponential { .. } => "exponential",
            ServiceFamily::Gamma { .. } => "gamma",
            ServiceFamily::Hyperexponential { .. } => "hyperexponential",
        }
    }
}

/// Which family [`service_spec_for_k`] should synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FamilyChoice {
    /// Deterministic at K=1, exponential at K=2, gamma otherwise.
    #[default]
    Auto,
    Gamma,
    Hyperexponential,
    Deterministic,
    Exponential,
}

impl FromStr for FamilyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(FamilyChoice::Auto),
            "gamma" => Ok(FamilyChoice::Gamma),
            "hyperexp" | "hyperexponential" | "h2" => Ok(FamilyChoice::Hyperexponential),
            "det" | "deterministic" => Ok(FamilyChoice::Deterministic),
            "exp" | "exponential" => Ok(FamilyChoice::Exponential),
            other => Err(format!("unknown service family `{other}`")),
        }
    }
}

/// A concrete service distribution realizing a target `(mean, K)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub family: ServiceFamily,
    pub mean: f64,
    pub second_moment: f64,
}

impl ServiceSpec {
    /// The variance parameter `E[S^2] / E[S]^2` this spec was built for.
    pub fn k_var(&self) -> f64 {
        self.second_moment / (self.mean * self.mean)
    }
}

/// Builds the default service distribution (`FamilyChoice::Auto`) with mean
/// `1/mu` and second moment `k_var/mu^2`.
pub fn service_spec_for_k(mu: f64, k_var: f64) -> Result<ServiceSpec, ModelError> {
    service_spec_with_family(mu, k_var, FamilyChoice::Auto)
}

pub fn service_spec_with_family(
    mu: f64,
    k_var: f64,
    choice: FamilyChoice,
) -> Result<ServiceSpec, ModelError> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(ModelError::NonPositiveRate {
            name: "mu",
            value: mu,
        });
    }
    if !(k_var >= 1.0) || !k_var.is_finite() {
        return Err(ModelError::InfeasibleVariance { k: k_var });
    }
    let mean = 1.0 / mu;
    let scv = k_var - 1.0;

    let family = match choice {
        FamilyChoice::Auto if k_var == 1.0 => ServiceFamily::Deterministic { value: mean },
        FamilyChoice::Auto if k_var == 2.0 => ServiceFamily::Exponential { rate: mu },
        FamilyChoice::Auto | FamilyChoice::Gamma => {
            if scv <= 0.0 {
                return Err(ModelError::UnsupportedFamily {
                    family: "gamma",
                    k: k_var,
                });
            }
            // K = 1 + 1/shape, mean = shape * scale.
            ServiceFamily::Gamma {
                shape: 1.0 / scv,
                scale: mean * scv,
            }
        }
        FamilyChoice::Deterministic => {
            if k_var != 1.0 {
                return Err(ModelError::UnsupportedFamily {
                    family: "deterministic",
                    k: k_var,
                });
            }
            ServiceFamily::Deterministic { value: mean }
        }
        FamilyChoice::Exponential => {
            if k_var != 2.0 {
                return Err(ModelError::UnsupportedFamily {
                    family: "exponential",
                    k: k_var,
                });
            }
            ServiceFamily::Exponential { rate: mu }
        }
        FamilyChoice::Hyperexponential => {
            if scv < 1.0 {
                return Err(ModelError::UnsupportedFamily {
                    family: "hyperexponential",
                    k: k_var,
                });
            }
            // Balanced means: p / rate1 = (1 - p) / rate2 = mean / 2.
            let p = 0.5 * (1.0 + ((scv - 1.0) / (scv + 1.0)).sqrt());
            ServiceFamily::Hyperexponential {
                p,
                rate1: 2.0 * p / mean,
                rate2: 2.0 * (1.0 - p) / mean,
            }
        }
    };

    Ok(ServiceSpec {
        family,
        mean,
        second_moment: k_var * mean * mean,
    })
}

/// Closed-form `(E[S], E[S^2])` of the spec's family parameters.
pub fn moments(spec: &ServiceSpec) -> (f64, f64) {
    family_moments(&spec.family)
}

pub fn family_moments(family: &ServiceFamily) -> (f64, f64) {
    match *family {
        ServiceFamily::Deterministic { value } => (value, value * value),
        ServiceFamily::Exponential { rate } => (1.0 / rate, 2.0 / (rate * rate)),
        ServiceFamily::Gamma { shape, scale } => {
            (shape * scale, shape * (shape + 1.0) * scale * scale)
        }
        ServiceFamily::Hyperexponential { p, rate1, rate2 } => (
            p / rate1 + (1.0 - p) / rate2,
            2.0 * p / (rate1 * rate1) + 2.0 * (1.0 - p) / (rate2 * rate2),
        ),
    }
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, ModelError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ModelError::Config {
            line: idx + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Partially specified parameters, as read from a config file or flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamOverrides {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub k_var: Option<f64>,
    pub cost: Option<f64>,
}

impl ParamOverrides {
    /// Reads `lambda`, `mu`, `k`, `cost` from a key-value config. Unknown keys
    /// are left for other consumers.
    pub fn from_config(text: &str) -> Result<Self, ModelError> {
        let map = parse_key_values(text)?;
        let get = |key: &str| -> Result<Option<f64>, ModelError> {
            map.get(key)
                .map(|v| {
                    v.parse::<f64>().map_err(|e| ModelError::Config {
                        line: 0,
                        message: format!("key `{key}`: {e}"),
                    })
                })
                .transpose()
        };
        Ok(ParamOverrides {
            lambda: get("lambda")?,
            mu: get("mu")?,
            k_var: get("k")?,
            cost: get("cost")?,
        })
    }

    /// Values in `other` win.
    pub fn merge(self, other: ParamOverrides) -> ParamOverrides {
        ParamOverrides {
            lambda: other.lambda.or(self.lambda),
            mu: other.mu.or(self.mu),
            k_var: other.k_var.or(self.k_var),
            cost: other.cost.or(self.cost),
        }
    }

    /// Resolves to validated params; `mu` defaults to 1 and `cost` to 0.
    pub fn resolve(self) -> Result<ModelParams, ModelError> {
        let lambda = self.lambda.ok_or(ModelError::NonPositiveRate {
            name: "lambda",
            value: f64::NAN,
        })?;
        let k_var = self
            .k_var
            .ok_or(ModelError::InfeasibleVariance { k: f64::NAN })?;
        ModelParams::new(
            lambda,
            self.mu.unwrap_or(1.0),
            k_var,
            self.cost.unwrap_or(0.0),
        )
    }
}

/// Renders params in the key-value config format.
pub fn to_config(params: &ModelParams) -> String {
    format!(
        "lambda = {}\nmu = {}\nk = {}\ncost = {}\n",
        params.lambda, params.mu, params.k_var, params.cost
    )
}
