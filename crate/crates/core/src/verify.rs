//! Self-check of the closed forms: per-class identities, work conservation,
//! the slope sign law and the price-of-anarchy bound.

use serde::{Deserialize, Serialize};

use crate::analytic::{avg_wait_np, avg_wait_pr, cost_gap_pr, wait_ordinary_pr, wait_premium_pr};
use crate::equilibrium::{classify_cost_curve, slope_indicator, CostCurveShape};
use crate::model::{ModelParams, PhiFraction};
use crate::welfare::{poa_bound_sweep, POA_SUPREMUM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect();
    if n >= 2 {
        v[0] = lo;
        v[n - 1] = hi;
    }
    v
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn grid() -> impl Iterator<Item = (ModelParams, PhiFraction)> {
    let rhos = linspace(0.05, 0.95, 20);
    let ks = linspace(1.0, 10.0, 20);
    let phis = linspace(0.0, 1.0, 20);
    rhos.into_iter().flat_map(move |rho| {
        let phis = phis.clone();
        ks.clone().into_iter().flat_map(move |k| {
            let p = ModelParams::from_load(rho, 1.0, k, 0.0).expect("grid params are valid");
            phis.clone()
                .into_iter()
                .map(move |f| (p, PhiFraction::clamped(f)))
        })
    })
}

pub fn run_all() -> Vec<Check> {
    let mut checks = Vec::new();

    let worst_a = grid()
        .map(|(p, f)| {
            rel_err(
                wait_ordinary_pr(&p, f) - wait_premium_pr(&p, f),
                cost_gap_pr(&p, f),
            )
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "identity A: E[W_o] - E[W_p] = C(phi)".into(),
        passed: worst_a < 1e-12,
        detail: format!("max relative error {worst_a:e}"),
    });

    let worst_b = grid()
        .map(|(p, f)| {
            let v = f.value();
            rel_err(
                v * wait_premium_pr(&p, f) + (1.0 - v) * wait_ordinary_pr(&p, f),
                avg_wait_pr(&p, f),
            )
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "identity B: phi E[W_p] + (1 - phi) E[W_o] = E[W]".into(),
        passed: worst_b < 1e-12,
        detail: format!("max relative error {worst_b:e}"),
    });

    let worst_wc = grid()
        .map(|(p, f)| {
            let base = p.single_class_wait();
            rel_err(avg_wait_pr(&p, PhiFraction::ZERO), base)
                .max(rel_err(avg_wait_pr(&p, PhiFraction::ONE), base))
                .max(rel_err(avg_wait_np(&p, f), base))
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "work conservation at pure states".into(),
        passed: worst_wc < 1e-12,
        detail: format!("max relative error {worst_wc:e}"),
    });

    let mut sign_failures = 0;
    let mut sign_checked = 0;
    for (p, f) in grid() {
        let v = f.value();
        if ![0.1, 0.5, 0.9].iter().any(|x| (x - v).abs() < 0.03) {
            continue;
        }
        let law = slope_indicator(&p);
        if law.abs() < 1e-6 {
            continue;
        }
        let h = 1e-6;
        let d = cost_gap_pr(&p, PhiFraction::clamped(v + h))
            - cost_gap_pr(&p, PhiFraction::clamped(v - h));
        let shape_ok = match classify_cost_curve(&p) {
            CostCurveShape::Decreasing => law < 0.0,
            CostCurveShape::Increasing => law > 0.0,
            CostCurveShape::Constant => false,
        };
        sign_checked += 1;
        if d.signum() != law.signum() || !shape_ok {
            sign_failures += 1;
        }
    }
    checks.push(Check {
        name: "slope sign law matches curve shape".into(),
        passed: sign_failures == 0 && sign_checked > 0,
        detail: format!("{sign_failures} mismatches in {sign_checked} points"),
    });

    let sweep = poa_bound_sweep(&logspace(1e-4, 0.99, 200), &logspace(1.0, 1e4, 100));
    let top = sweep.max();
    checks.push(Check {
        name: "price of anarchy below 4/3".into(),
        passed: top.poa < POA_SUPREMUM && sweep.rows.iter().all(|r| r.poa >= 1.0 - 1e-12),
        detail: format!("max {} at rho = {}, K = {}", top.poa, top.rho, top.k),
    });

    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn spacing_endpoints() {
        let l = logspace(1e-4, 0.99, 200);
        assert_eq!(l.len(), 200);
        assert!((l[0] - 1e-4).abs() < 1e-15);
        assert!((l[199] - 0.99).abs() < 1e-12);
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
