//! Equilibrium structure of the premium-purchase game.
//!
//! A customer buys priority when the wait it saves, `C(phi)`, exceeds the
//! fee. Because `C(phi)` is monotone (or flat) in the premium fraction, the
//! equilibria are read off its endpoint values and a single crossing point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{cost_gap, cost_gap_pr, Discipline};
use crate::model::{ModelParams, PhiFraction};

/// Relative tolerance for comparing a fee or load against a threshold.
pub const THRESHOLD_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("critical load is only defined for K > 2 (got K = {k})")]
    NotApplicable { k: f64 },
    #[error("cost curve is constant; no unique crossing")]
    DegenerateCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostCurveShape {
    Decreasing,
    Constant,
    Increasing,
}

impl CostCurveShape {
    pub fn label(self) -> &'static str {
        match self {
            CostCurveShape::Decreasing => "Decreasing",
            CostCurveShape::Constant => "Constant",
            CostCurveShape::Increasing => "Increasing",
        }
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= THRESHOLD_RTOL * a.abs().max(b.abs())
}

/// `(K - 2) / (2K - 2)`: the load below which `C(phi)` decreases.
pub fn critical_load(k_var: f64) -> Result<f64, EquilibriumError> {
    if k_var > 2.0 {
        Ok((k_var - 2.0) / (2.0 * k_var - 2.0))
    } else {
        Err(EquilibriumError::NotApplicable { k: k_var })
    }
}

/// Sign of `dC/dphi` up to a positive factor: `(2 - K) + 2 rho (K - 1)`.
pub fn slope_indicator(params: &ModelParams) -> f64 {
    let rho = params.rho();
    let k = params.k_var;
    (2.0 - k) + 2.0 * rho * (k - 1.0)
}

/// Shape of the preemptive-resume cost curve.
///
/// Loads within a relative `1e-12` of the critical load classify as
/// [`CostCurveShape::Constant`].
pub fn classify_cost_curve(params: &ModelParams) -> CostCurveShape {
    let k = params.k_var;
    if k <= 2.0 {
        return CostCurveShape::Increasing;
    }
    let rho = params.rho();
    let crit = (k - 2.0) / (2.0 * k - 2.0);
    if near(rho, crit) {
        CostCurveShape::Constant
    } else if rho < crit {
        CostCurveShape::Decreasing
    } else {
        CostCurveShape::Increasing
    }
}

pub fn classify(params: &ModelParams, discipline: Discipline) -> CostCurveShape {
    match discipline {
        Discipline::PreemptiveResume => classify_cost_curve(params),
        Discipline::NonPreemptive => CostCurveShape::Increasing,
    }
}

/// The crossing `C(phi_e) = C` under preemptive-resume, if it is interior.
pub fn mixed_equilibrium(params: &ModelParams) -> Result<Option<f64>, EquilibriumError> {
    if classify_cost_curve(params) == CostCurveShape::Constant {
        return Err(EquilibriumError::DegenerateCurve);
    }
    let phi = mixed_crossing_pr(params);
    Ok(interior(phi))
}

/// The crossing under non-preemptive priority, if it is interior.
pub fn mixed_equilibrium_np(params: &ModelParams) -> Option<f64> {
    interior(mixed_crossing_np(params))
}

fn interior(phi: f64) -> Option<f64> {
    (phi > 0.0 && phi < 1.0).then_some(phi)
}

fn mixed_crossing_pr(params: &ModelParams) -> f64 {
    let rho = params.rho();
    let k = params.k_var;
    let two_mu_c = 2.0 * params.mu * params.cost;
    (two_mu_c * (1.0 - rho) - k * rho) / (rho * (1.0 - rho) * (two_mu_c + 2.0 - k))
}

fn mixed_crossing_np(params: &ModelParams) -> f64 {
    let rho = params.rho();
    1.0 / rho - params.k_var * rho / (2.0 * params.mu * params.cost * (1.0 - rho))
}

/// One member of the equilibrium set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub phi: f64,
    pub ess: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub discipline: Discipline,
    pub shape: CostCurveShape,
    pub no_one_joins: Option<Member>,
    pub everyone_joins: Option<Member>,
    /// Interior crossing `phi_e`, strictly inside `(0, 1)`.
    pub some_join: Option<Member>,
    /// Flat cost curve with the fee equal to it: every `phi` is an
    /// equilibrium and none is reported with an ESS label.
    pub all_phi_indifferent: bool,
    /// The fee sits on `C(0)` or `C(1)` (within `1e-12` relative); the
    /// crossing has collapsed onto a pure state.
    pub boundary: bool,
}

impl EquilibriumSet {
    fn empty(discipline: Discipline, shape: CostCurveShape) -> Self {
        EquilibriumSet {
            discipline,
            shape,
            no_one_joins: None,
            everyone_joins: None,
            some_join: None,
            all_phi_indifferent: false,
            boundary: false,
        }
    }

    /// Listed members, ordered by `phi`.
    pub fn members(&self) -> Vec<Member> {
        [self.no_one_joins, self.some_join, self.everyone_joins]
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.members().len()
    }

    pub fn is_empty(&self) -> bool {
        self.members().is_empty() && !self.all_phi_indifferent
    }

    /// Whether `phi` is an equilibrium, to an absolute tolerance.
    pub fn contains(&self, phi: f64, tol: f64) -> bool {
        self.all_phi_indifferent || self.members().iter().any(|m| (m.phi - phi).abs() <= tol)
    }

    pub fn unique_mixed(&self) -> bool {
        self.some_join.is_some() && self.no_one_joins.is_none() && self.everyone_joins.is_none()
    }
}

/// Equilibria under preemptive-resume.
pub fn equilibria_pr(params: &ModelParams) -> EquilibriumSet {
    equilibria(params, Discipline::PreemptiveResume)
}

/// Equilibria under non-preemptive priority. The interior crossing is never
/// stable.
pub fn equilibria_np(params: &ModelParams) -> EquilibriumSet {
    equilibria(params, Discipline::NonPreemptive)
}

pub fn equilibria(params: &ModelParams, discipline: Discipline) -> EquilibriumSet {
    let shape = classify(params, discipline);
    let mut set = EquilibriumSet::empty(discipline, shape);
    let fee = params.cost;
    let gap0 = cost_gap(params, PhiFraction::ZERO, discipline);
    let gap1 = cost_gap(params, PhiFraction::ONE, discipline);
    let pure = |phi: f64, ess: bool| Some(Member { phi, ess });

    if shape == CostCurveShape::Constant {
        let level = cost_gap_pr(params, PhiFraction::ZERO);
        if near(fee, level) {
            set.all_phi_indifferent = true;
        } else if fee < level {
            set.everyone_joins = pure(1.0, true);
        } else {
            set.no_one_joins = pure(0.0, true);
        }
        return set;
    }

    let (lo, hi) = (gap0.min(gap1), gap0.max(gap1));
    let on_lo = near(fee, lo);
    let on_hi = near(fee, hi);

    if on_lo || on_hi {
        set.boundary = true;
        // The crossing sits on an endpoint. Decreasing curve: that endpoint
        // attracts and is the unique equilibrium. Increasing curve: the
        // opposite pure state is a strict equilibrium and the endpoint is the
        // collapsed, unstable crossing.
        match shape {
            CostCurveShape::Decreasing if on_hi => set.no_one_joins = pure(0.0, true),
            CostCurveShape::Decreasing => set.everyone_joins = pure(1.0, true),
            _ if on_lo => {
                set.everyone_joins = pure(1.0, true);
                set.no_one_joins = pure(0.0, false);
            }
            _ => {
                set.no_one_joins = pure(0.0, true);
                set.everyone_joins = pure(1.0, false);
            }
        }
        return set;
    }

    if fee < lo {
        set.everyone_joins = pure(1.0, true);
    } else if fee > hi {
        set.no_one_joins = pure(0.0, true);
    } else {
        let crossing = match discipline {
            Discipline::PreemptiveResume => mixed_crossing_pr(params),
            Discipline::NonPreemptive => mixed_crossing_np(params),
        };
        let crossing = crossing.clamp(0.0, 1.0);
        match shape {
            CostCurveShape::Decreasing => {
                set.some_join = pure(crossing, true);
            }
            _ => {
                set.no_one_joins = pure(0.0, true);
                set.everyone_joins = pure(1.0, true);
                set.some_join = pure(crossing, false);
            }
        }
    }
    set
}

/// Flat form of an [`EquilibriumSet`] for CSV/JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub discipline: Discipline,
    pub shape: CostCurveShape,
    pub no_one_joins: bool,
    pub no_one_joins_ess: Option<bool>,
    pub everyone_joins: bool,
    pub everyone_joins_ess: Option<bool>,
    pub phi_e: Option<f64>,
    pub phi_e_ess: Option<bool>,
    pub all_phi_indifferent: bool,
    pub boundary: bool,
}

impl From<&EquilibriumSet> for EquilibriumRecord {
    fn from(set: &EquilibriumSet) -> Self {
        EquilibriumRecord {
            discipline: set.discipline,
            shape: set.shape,
            no_one_joins: set.no_one_joins.is_some(),
            no_one_joins_ess: set.no_one_joins.map(|m| m.ess),
            everyone_joins: set.everyone_joins.is_some(),
            everyone_joins_ess: set.everyone_joins.map(|m| m.ess),
            phi_e: set.some_join.map(|m| m.phi),
            phi_e_ess: set.some_join.map(|m| m.ess),
            all_phi_indifferent: set.all_phi_indifferent,
            boundary: set.boundary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rho: f64, k: f64, cost: f64) -> ModelParams {
        ModelParams::from_load(rho, 1.0, k, cost).unwrap()
    }

    #[test]
    fn critical_load_examples() {
        assert_eq!(critical_load(4.0).unwrap(), 1.0 / 3.0);
        assert_eq!(critical_load(3.0).unwrap(), 0.25);
        assert!((critical_load(1e6).unwrap() - 0.5).abs() < 1e-5);
        assert!(critical_load(2.0).is_err());
        assert!(critical_load(1.5).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_cost_curve(&params(0.25, 4.0, 0.0)),
            CostCurveShape::Decreasing
        );
        assert_eq!(
            classify_cost_curve(&params(1.0 / 3.0, 4.0, 0.0)),
            CostCurveShape::Constant
        );
        assert_eq!(
            classify_cost_curve(&params(0.5, 2.0, 0.0)),
            CostCurveShape::Increasing
        );
        assert_eq!(
            classify_cost_curve(&params(0.01, 1.0, 0.0)),
            CostCurveShape::Increasing
        );
        assert_eq!(
            classify_cost_curve(&params(0.4, 4.0, 0.0)),
            CostCurveShape::Increasing
        );
    }

    #[test]
    fn shape_agrees_with_slope_sign() {
        for i in 1..40 {
            let rho = i as f64 / 40.0;
            for &k in &[1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 20.0] {
                let p = params(rho, k, 0.0);
                let s = slope_indicator(&p);
                match classify_cost_curve(&p) {
                    CostCurveShape::Decreasing => assert!(s < 0.0),
                    CostCurveShape::Increasing => assert!(s > 0.0),
                    CostCurveShape::Constant => assert!(s.abs() < 1e-12),
                }
            }
        }
    }

    #[test]
    fn mixed_equilibrium_examples() {
        let a = mixed_equilibrium(&params(0.25, 4.0, 0.6)).unwrap().unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-12);
        let b = mixed_equilibrium(&params(0.5, 2.0, 1.5)).unwrap().unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(mixed_equilibrium(&params(0.5, 2.0, 0.5)).unwrap(), None);
        assert_eq!(
            mixed_equilibrium(&params(1.0 / 3.0, 4.0, 0.5)),
            Err(EquilibriumError::DegenerateCurve)
        );
    }

    #[test]
    fn equilibrium_set_cases() {
        let s = equilibria_pr(&params(0.5, 2.0, 0.5));
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 1.0,
                ess: true
            }]
        );

        let s = equilibria_pr(&params(0.5, 2.0, 1.5));
        assert_eq!(s.len(), 3);
        assert_eq!(
            s.no_one_joins,
            Some(Member {
                phi: 0.0,
                ess: true
            })
        );
        assert_eq!(
            s.everyone_joins,
            Some(Member {
                phi: 1.0,
                ess: true
            })
        );
        let m = s.some_join.unwrap();
        assert!((m.phi - 2.0 / 3.0).abs() < 1e-12 && !m.ess);

        let s = equilibria_pr(&params(0.25, 4.0, 0.6));
        assert!(s.unique_mixed());
        let m = s.some_join.unwrap();
        assert!((m.phi - 2.0 / 3.0).abs() < 1e-12 && m.ess);
        assert_eq!(s.shape, CostCurveShape::Decreasing);

        let s = equilibria_pr(&params(0.5, 2.0, 3.0));
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 0.0,
                ess: true
            }]
        );
    }

    #[test]
    fn np_cases() {
        let s = equilibria_np(&params(0.5, 2.0, 0.4));
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 1.0,
                ess: true
            }]
        );

        let s = equilibria_np(&params(0.5, 2.0, 0.8));
        assert_eq!(s.len(), 3);
        let m = s.some_join.unwrap();
        assert!((m.phi - 0.75).abs() < 1e-12 && !m.ess);
        let gap = cost_gap(
            &params(0.5, 2.0, 0.8),
            PhiFraction::new(m.phi).unwrap(),
            Discipline::NonPreemptive,
        );
        assert!((gap - 0.8).abs() < 1e-12);

        let s = equilibria_np(&params(0.5, 2.0, 1.2));
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 0.0,
                ess: true
            }]
        );
        assert_eq!(mixed_equilibrium_np(&params(0.5, 2.0, 1.2)), None);
    }

    #[test]
    fn constant_curve_cases() {
        let rho = 1.0 / 3.0;
        let level = cost_gap_pr(&params(rho, 4.0, 0.0), PhiFraction::ZERO);
        let s = equilibria_pr(&params(rho, 4.0, level));
        assert!(s.all_phi_indifferent);
        assert!(s.members().is_empty());
        assert!(!s.is_empty());
        assert!(s.contains(0.42, 0.0));

        let s = equilibria_pr(&params(rho, 4.0, level * 0.9));
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 1.0,
                ess: true
            }]
        );
        let s = equilibria_pr(&params(rho, 4.0, level * 1.1));
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 0.0,
                ess: true
            }]
        );
    }

    #[test]
    fn boundary_fees() {
        // Increasing: C(0) = 1, C(1) = 2.
        let s = equilibria_pr(&params(0.5, 2.0, 1.0));
        assert!(s.boundary);
        assert_eq!(
            s.everyone_joins,
            Some(Member {
                phi: 1.0,
                ess: true
            })
        );
        assert_eq!(
            s.no_one_joins,
            Some(Member {
                phi: 0.0,
                ess: false
            })
        );
        assert!(s.some_join.is_none());

        let s = equilibria_pr(&params(0.5, 2.0, 2.0));
        assert!(s.boundary);
        assert_eq!(
            s.no_one_joins,
            Some(Member {
                phi: 0.0,
                ess: true
            })
        );
        assert_eq!(
            s.everyone_joins,
            Some(Member {
                phi: 1.0,
                ess: false
            })
        );

        // Decreasing: C(0) = 2/3 is the maximum, C(1) = 5/9 the minimum.
        let s = equilibria_pr(&params(0.25, 4.0, 2.0 / 3.0));
        assert!(s.boundary);
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 0.0,
                ess: true
            }]
        );
        let s = equilibria_pr(&params(0.25, 4.0, 5.0 / 9.0));
        assert!(s.boundary);
        assert_eq!(
            s.members(),
            vec![Member {
                phi: 1.0,
                ess: true
            }]
        );
    }

    #[test]
    fn fixed_point_property_on_sweep() {
        for i in 1..20 {
            let rho = i as f64 / 20.0;
            for &k in &[1.0, 1.5, 2.0, 3.0, 6.0, 12.0] {
                for j in 0..=40 {
                    let cost = j as f64 * 0.25;
                    let p = params(rho, k, cost);
                    for d in [Discipline::PreemptiveResume, Discipline::NonPreemptive] {
                        let s = equilibria(&p, d);
                        assert!(!s.is_empty());
                        if let Some(m) = s.some_join {
                            assert!(m.phi > 0.0 && m.phi < 1.0);
                            let gap = cost_gap(&p, PhiFraction::new(m.phi).unwrap(), d);
                            assert!(
                                (gap - cost).abs() <= 1e-10 * cost,
                                "{d} rho={rho} K={k} C={cost}"
                            );
                            assert_eq!(m.ess, s.len() == 1);
                            if d == Discipline::NonPreemptive {
                                assert!(!m.ess);
                            }
                        }
                    }
                }
            }
        }
    }
}
