//! Social optimum and price of anarchy.
//!
//! The fee is a transfer between customers and provider, so welfare depends
//! only on the average wait `E[W](phi)`. Its shape in `phi` is governed by the
//! sign of `K - 2`: the socially best premium fraction is interior exactly
//! when service is more variable than exponential.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{avg_wait_pr, cost_gap_pr};
use crate::equilibrium::{equilibria_pr, THRESHOLD_RTOL};
use crate::model::{ModelParams, PhiFraction};

/// Supremum of the price of anarchy over all loads, variance parameters and
/// fees.
pub const POA_SUPREMUM: f64 = 4.0 / 3.0;

/// Supremum over loads when service is deterministic.
pub const POA_DETERMINISTIC_SUPREMUM: f64 = 5.0 / 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarianceRegime {
    /// `K < 2`: less variable than exponential.
    Low,
    /// `K = 2`.
    Exponential,
    /// `K > 2`.
    High,
}

pub fn variance_regime(k_var: f64) -> VarianceRegime {
    if (k_var - 2.0).abs() <= THRESHOLD_RTOL * 2.0 {
        VarianceRegime::Exponential
    } else if k_var < 2.0 {
        VarianceRegime::Low
    } else {
        VarianceRegime::High
    }
}

/// Premium fraction minimizing the average wait when `K > 2`:
/// `(1 - sqrt(1 - rho)) / rho`, evaluated as `1 / (1 + sqrt(1 - rho))`.
pub fn phi_star(rho: f64) -> PhiFraction {
    PhiFraction::clamped(1.0 / (1.0 + (1.0 - rho).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimalSet {
    /// Both pure states `{0, 1}`.
    PurePair,
    /// Every `phi` in `[0, 1]`.
    All,
    Singleton(f64),
}

impl OptimalSet {
    /// A representative member (0 for the pure pair and the whole interval).
    pub fn representative(&self) -> f64 {
        match *self {
            OptimalSet::PurePair | OptimalSet::All => 0.0,
            OptimalSet::Singleton(phi) => phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocialOptimum {
    pub optimal_phis: OptimalSet,
    pub min_avg_wait: f64,
}

pub fn socially_optimal(params: &ModelParams) -> SocialOptimum {
    let optimal_phis = match variance_regime(params.k_var) {
        VarianceRegime::Low => OptimalSet::PurePair,
        VarianceRegime::Exponential => OptimalSet::All,
        VarianceRegime::High => OptimalSet::Singleton(phi_star(params.rho()).value()),
    };
    let min_avg_wait = avg_wait_pr(params, PhiFraction::clamped(optimal_phis.representative()));
    SocialOptimum {
        optimal_phis,
        min_avg_wait,
    }
}

/// The premium fraction maximizing the average wait. Pure states are
/// reported as 0; for `K = 2` every state ties and 0 is returned.
pub fn worst_state(params: &ModelParams) -> PhiFraction {
    match variance_regime(params.k_var) {
        VarianceRegime::Low => phi_star(params.rho()),
        VarianceRegime::Exponential | VarianceRegime::High => PhiFraction::ZERO,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoaReport {
    pub worst_equilibrium_phi: f64,
    pub worst_eq_wait: f64,
    pub optimal_wait: f64,
    pub poa: f64,
    /// The fee makes every `phi` an equilibrium; the worst case was taken
    /// over all of `[0, 1]`.
    pub indifferent: bool,
}

/// Price of anarchy at the params' fee: worst equilibrium wait over the
/// socially optimal wait.
pub fn poa_given_cost(params: &ModelParams) -> PoaReport {
    let set = equilibria_pr(params);
    let optimal_wait = socially_optimal(params).min_avg_wait;
    let (worst_equilibrium_phi, worst_eq_wait) = if set.all_phi_indifferent {
        let phi = worst_state(params);
        (phi.value(), avg_wait_pr(params, phi))
    } else {
        set.members()
            .iter()
            .map(|m| (m.phi, avg_wait_pr(params, PhiFraction::clamped(m.phi))))
            .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
    };
    PoaReport {
        worst_equilibrium_phi,
        worst_eq_wait,
        optimal_wait,
        poa: worst_eq_wait / optimal_wait,
        indifferent: set.all_phi_indifferent,
    }
}

/// `(2 - 2(1 - rho)^{3/2} - 3 rho) / rho^2`, free of cancellation.
///
/// With `s = sqrt(1 - rho)` the numerator factors as `-(1 - s)^2 (1 + 2s)` and
/// `1 - s = rho / (1 + s)`.
pub fn load_shape_term(rho: f64) -> f64 {
    let s = (1.0 - rho).sqrt();
    -(1.0 + 2.0 * s) / ((1.0 + s) * (1.0 + s))
}

/// Largest price of anarchy achievable at this load and variance parameter
/// by choosing the fee adversarially. Independent of `mu`.
///
/// For `K < 2` the worst equilibrium is the interior `phi*` (reachable with
/// fee `C(phi*)`) against pure-state optima; for `K > 2` it is a pure state
/// against the interior optimum `phi*`.
pub fn poa_worst_case(rho: f64, k_var: f64) -> f64 {
    let h = load_shape_term(rho);
    match variance_regime(k_var) {
        VarianceRegime::Exponential => 1.0,
        VarianceRegime::Low => (2.0 - k_var) * h / k_var + 2.0 / k_var,
        VarianceRegime::High => k_var / ((2.0 - k_var) * h + 2.0),
    }
}

/// Limit of [`poa_worst_case`] as `rho -> 0`.
pub fn poa_light_load_limit(k_var: f64) -> f64 {
    match variance_regime(k_var) {
        VarianceRegime::Exponential => 1.0,
        VarianceRegime::Low => (2.0 + 3.0 * k_var) / (4.0 * k_var),
        VarianceRegime::High => 4.0 * k_var / (2.0 + 3.0 * k_var),
    }
}

/// Limit of [`poa_light_load_limit`] as `K -> infinity`.
pub fn poa_heavy_tail_limit() -> f64 {
    POA_SUPREMUM
}

/// Limit of [`poa_worst_case`] as `rho -> 1`, for any `K`.
pub fn poa_heavy_load_limit(_k_var: f64) -> f64 {
    1.0
}

/// A fee at which the equilibrium set attains [`poa_worst_case`].
pub fn pessimal_fee(params: &ModelParams) -> f64 {
    match variance_regime(params.k_var) {
        // phi* becomes the interior crossing.
        VarianceRegime::Low => cost_gap_pr(params, phi_star(params.rho())),
        // Free priority: everyone joins, a pure state.
        VarianceRegime::Exponential | VarianceRegime::High => 0.0,
    }
}

/// One grid point of a worst-case sweep, normalized to `mu = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoaRow {
    pub rho: f64,
    pub k: f64,
    pub poa: f64,
    pub worst_phi: f64,
    pub opt_phi: f64,
    pub opt_wait: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoaSweep {
    pub rows: Vec<PoaRow>,
    /// Index into `rows` of the largest PoA (first on ties).
    pub argmax: usize,
}

impl PoaSweep {
    pub fn max(&self) -> &PoaRow {
        &self.rows[self.argmax]
    }
}

pub fn poa_row(rho: f64, k: f64) -> PoaRow {
    let (opt_phi, opt_wait, worst_phi) = match ModelParams::from_load(rho, 1.0, k, 0.0) {
        Ok(p) => {
            let opt = socially_optimal(&p);
            (
                opt.optimal_phis.representative(),
                opt.min_avg_wait,
                worst_state(&p).value(),
            )
        }
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    PoaRow {
        rho,
        k,
        poa: poa_worst_case(rho, k),
        worst_phi,
        opt_phi,
        opt_wait,
    }
}

/// Evaluates [`poa_worst_case`] on the product grid `rhos x ks` (rho-major).
/// Rows are in grid order regardless of thread scheduling.
pub fn poa_bound_sweep(rhos: &[f64], ks: &[f64]) -> PoaSweep {
    let rows: Vec<PoaRow> = rhos
        .par_iter()
        .flat_map_iter(|&rho| ks.iter().map(move |&k| poa_row(rho, k)))
        .collect();
    let argmax = rows.iter().enumerate().fold(
        0,
        |best, (i, r)| if r.poa > rows[best].poa { i } else { best },
    );
    PoaSweep { rows, argmax }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64, k: f64, cost: f64) -> ModelParams {
        ModelParams::from_load(rho, 1.0, k, cost).unwrap()
    }

    /// Direct transcription of the unsimplified ratio, accurate only away
    /// from rho = 0.
    fn naive_poa(rho: f64, k: f64) -> f64 {
        let g = 2.0 - 2.0 * (1.0 - rho).powf(1.5) - 3.0 * rho;
        if k < 2.0 {
            (2.0 - k) * g / (k * rho * rho) + 2.0 / k
        } else {
            k * rho * rho / ((2.0 - k) * g + 2.0 * rho * rho)
        }
    }

    #[test]
    fn phi_star_examples() {
        assert!((phi_star(0.75).value() - 2.0 / 3.0).abs() < 1e-15);
        assert!((phi_star(1e-8).value() - 0.5).abs() < 1e-8);
        let direct = (1.0 - (1.0f64 - 0.25).sqrt()) / 0.25;
        assert!((phi_star(0.25).value() - direct).abs() < 1e-15);
        assert!((phi_star(0.25).value() - 0.535898).abs() < 1e-6);
        let mut prev = 0.5;
        for i in 1..100 {
            let v = phi_star(i as f64 / 100.0).value();
            assert!(v > prev && v < 1.0);
            prev = v;
        }
    }

    #[test]
    fn social_optimum_examples() {
        let o = socially_optimal(&params(0.5, 1.0, 0.0));
        assert_eq!(o.optimal_phis, OptimalSet::PurePair);
        assert!((o.min_avg_wait - 0.5).abs() < 1e-15);

        let o = socially_optimal(&params(0.5, 2.0, 0.0));
        assert_eq!(o.optimal_phis, OptimalSet::All);
        assert!((o.min_avg_wait - 1.0).abs() < 1e-15);

        let o = socially_optimal(&params(0.25, 4.0, 0.0));
        match o.optimal_phis {
            OptimalSet::Singleton(phi) => assert!((phi - 0.535898).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        // mpmath evaluation at phi* = 2 sqrt(3) - 3: 0.594869896942175840776
        assert!((o.min_avg_wait - 0.594869896942176).abs() < 1e-13);
    }

    #[test]
    fn worst_state_examples() {
        let p = params(0.75, 1.0, 0.0);
        let w = worst_state(&p);
        assert!((w.value() - 2.0 / 3.0).abs() < 1e-15);
        assert!((avg_wait_pr(&p, w) - 5.0 / 3.0).abs() < 1e-14);
        assert!(avg_wait_pr(&p, w) > p.single_class_wait());

        let p = params(0.25, 4.0, 0.0);
        assert_eq!(worst_state(&p), PhiFraction::ZERO);
        assert!((avg_wait_pr(&p, worst_state(&p)) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn poa_given_cost_examples() {
        for &c in &[0.0, 0.5, 1.0, 1.5, 3.0] {
            let r = poa_given_cost(&params(0.5, 2.0, c));
            assert!((r.poa - 1.0).abs() < 1e-12, "C={c}: {r:?}");
        }
        let r = poa_given_cost(&params(0.75, 1.0, 3.5));
        assert!((r.poa - 10.0 / 9.0).abs() < 1e-12, "{r:?}");
        assert!((r.worst_equilibrium_phi - 2.0 / 3.0).abs() < 1e-12);

        let r = poa_given_cost(&params(0.25, 4.0, 0.6));
        assert!((r.worst_eq_wait - 0.6).abs() < 1e-12);
        // 0.6 / 0.594869896942175840776 = 1.008623907654757035777
        assert!((r.poa - 1.008623907654757).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn worst_case_examples() {
        for &rho in &[1e-6, 0.1, 0.5, 0.99] {
            assert_eq!(poa_worst_case(rho, 2.0), 1.0);
        }
        assert!((poa_worst_case(0.75, 1.0) - 10.0 / 9.0).abs() < 1e-12);
        assert!((poa_worst_case(1e-6, 1.0) - 1.25).abs() < 1e-6);
        assert!((poa_worst_case(1e-4, 4.0) - 8.0 / 7.0).abs() < 1e-3);
        assert!((poa_worst_case(1e-4, 1000.0) - 4000.0 / 3002.0).abs() < 1e-3);
    }

    #[test]
    fn reformulation_matches_naive_away_from_zero() {
        for i in 1..100 {
            let rho = i as f64 / 100.0;
            for &k in &[1.0, 1.5, 3.0, 10.0] {
                let a = poa_worst_case(rho, k);
                let b = naive_poa(rho, k);
                assert!((a - b).abs() < 1e-9, "rho={rho} K={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn light_load_is_monotone_toward_limit() {
        let mut prev = 0.0;
        for i in 0..60 {
            let rho = 10f64.powf(-0.1 * i as f64);
            if rho >= 1.0 {
                continue;
            }
            let v = poa_worst_case(rho, 1.0);
            assert!(v >= prev, "rho={rho}");
            assert!(v <= 1.25);
            prev = v;
        }
        assert!((prev - 1.25).abs() < 1e-6);
    }

    #[test]
    fn limits() {
        assert_eq!(poa_light_load_limit(1.0), 1.25);
        assert_eq!(poa_light_load_limit(4.0), 8.0 / 7.0);
        assert_eq!(poa_light_load_limit(2.0), 1.0);
        assert!(poa_light_load_limit(1e9) < poa_heavy_tail_limit());
        assert!((poa_light_load_limit(1e9) - 4.0 / 3.0).abs() < 1e-8);
        for &k in &[1.0, 1.5, 3.0, 100.0] {
            assert!((poa_worst_case(1.0 - 1e-12, k) - poa_heavy_load_limit(k)).abs() < 1e-5);
        }
    }

    #[test]
    fn pessimal_fee_attains_worst_case() {
        for &rho in &[0.05, 0.3, 0.5, 0.75, 0.95] {
            for &k in &[1.0, 1.3, 1.8, 2.5, 4.0, 50.0] {
                let base = params(rho, k, 0.0);
                let fee = pessimal_fee(&base);
                let r = poa_given_cost(&base.with_cost(fee).unwrap());
                let w = poa_worst_case(rho, k);
                assert!(
                    (r.poa - w).abs() <= 1e-9 * w,
                    "rho={rho} K={k}: {} vs {w}",
                    r.poa
                );
            }
        }
    }

    #[test]
    fn sweep_is_ordered_and_bounded() {
        let rhos: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let ks = [1.0, 2.0, 8.0];
        let sweep = poa_bound_sweep(&rhos, &ks);
        assert_eq!(sweep.rows.len(), 27);
        assert_eq!(sweep.rows[4].rho, 0.2);
        assert_eq!(sweep.rows[4].k, 2.0);
        assert!(sweep
            .rows
            .iter()
            .all(|r| r.poa <= POA_SUPREMUM && r.poa >= 1.0 - 1e-12));
        assert_eq!(sweep.max().rho, 0.1);
    }
}
