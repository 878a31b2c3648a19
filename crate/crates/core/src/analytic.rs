//! Closed-form mean waits for the two-class M|G|1 queue.
//!
//! Waiting time is sojourn time minus the customer's own service requirement,
//! so delays caused by preemption count as waiting. Under preemptive-resume
//! the premium class never sees ordinary work; under non-preemptive service
//! both classes wait behind the residual of whatever is in service.
//!
//! Every function assumes validated [`ModelParams`]; `phi * rho < 1` always
//! holds because `rho < 1`.

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, PhiFraction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Discipline {
    /// Preemptive-resume priority.
    #[serde(rename = "pr")]
    PreemptiveResume,
    /// Non-preemptive priority.
    #[serde(rename = "np")]
    NonPreemptive,
}

impl Discipline {
    pub fn label(self) -> &'static str {
        match self {
            Discipline::PreemptiveResume => "pr",
            Discipline::NonPreemptive => "np",
        }
    }
}

impl std::str::FromStr for Discipline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pr" | "preemptive" | "preemptive-resume" => Ok(Discipline::PreemptiveResume),
            "np" | "non-preemptive" | "nonpreemptive" => Ok(Discipline::NonPreemptive),
            other => Err(format!("unknown discipline `{other}` (expected pr or np)")),
        }
    }
}

impl std::fmt::Display for Discipline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean waits at a given premium fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitTimes {
    pub premium: f64,
    pub ordinary: f64,
    pub average: f64,
}

impl WaitTimes {
    pub fn gap(&self) -> f64 {
        self.ordinary - self.premium
    }
}

/// `K phi rho / (2 mu (1 - phi rho))`: the M|G|1 delay of the premium-only
/// subsystem.
pub fn wait_premium_pr(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    let phi = phi.value();
    params.k_var * phi * rho / (2.0 * params.mu * (1.0 - phi * rho))
}

/// `rho (K + 2 phi (1 - rho)) / (2 mu (1 - rho)(1 - phi rho))`. At `phi = 1`
/// this is the wait a tagged ordinary customer would see.
pub fn wait_ordinary_pr(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    let phi = phi.value();
    rho * (params.k_var + 2.0 * phi * (1.0 - rho))
        / (2.0 * params.mu * (1.0 - rho) * (1.0 - phi * rho))
}

/// `C(phi) = E[W_o] - E[W_p]` under preemptive-resume.
pub fn cost_gap_pr(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    let k = params.k_var;
    let phi = phi.value();
    (k * rho + (2.0 - k) * phi * rho * (1.0 - rho))
        / (2.0 * params.mu * (1.0 - rho) * (1.0 - phi * rho))
}

/// Population-average wait under preemptive-resume.
pub fn avg_wait_pr(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    let k = params.k_var;
    let phi = phi.value();
    rho * (k - 2.0 * phi * rho + (2.0 - k) * phi * (1.0 - phi * (1.0 - rho)))
        / (2.0 * params.mu * (1.0 - rho) * (1.0 - phi * rho))
}

pub fn wait_premium_np(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    params.k_var * rho / (2.0 * params.mu * (1.0 - phi.value() * rho))
}

pub fn wait_ordinary_np(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    params.k_var * rho / (2.0 * params.mu * (1.0 - phi.value() * rho) * (1.0 - rho))
}

/// `K rho^2 / (2 mu (1 - rho)(1 - phi rho))`.
pub fn cost_gap_np(params: &ModelParams, phi: PhiFraction) -> f64 {
    let rho = params.rho();
    params.k_var * rho * rho / (2.0 * params.mu * (1.0 - rho) * (1.0 - phi.value() * rho))
}

/// Independent of `phi`: non-preemptive priority is work conserving and
/// does not change the order-blind mean.
pub fn avg_wait_np(params: &ModelParams, _phi: PhiFraction) -> f64 {
    params.single_class_wait()
}

pub fn cost_gap(params: &ModelParams, phi: PhiFraction, discipline: Discipline) -> f64 {
    match discipline {
        Discipline::PreemptiveResume => cost_gap_pr(params, phi),
        Discipline::NonPreemptive => cost_gap_np(params, phi),
    }
}

pub fn avg_wait(params: &ModelParams, phi: PhiFraction, discipline: Discipline) -> f64 {
    match discipline {
        Discipline::PreemptiveResume => avg_wait_pr(params, phi),
        Discipline::NonPreemptive => avg_wait_np(params, phi),
    }
}

pub fn wait_times(params: &ModelParams, phi: PhiFraction, discipline: Discipline) -> WaitTimes {
    match discipline {
        Discipline::PreemptiveResume => WaitTimes {
            premium: wait_premium_pr(params, phi),
            ordinary: wait_ordinary_pr(params, phi),
            average: avg_wait_pr(params, phi),
        },
        Discipline::NonPreemptive => WaitTimes {
            premium: wait_premium_np(params, phi),
            ordinary: wait_ordinary_np(params, phi),
            average: avg_wait_np(params, phi),
        },
    }
}
