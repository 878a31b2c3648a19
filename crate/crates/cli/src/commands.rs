use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use premq::analytic::{cost_gap, wait_times};
use premq::dynamics::{ess_probe, iterate, DynamicsError, IterateOptions, Stability};
use premq::equilibrium::{equilibria, EquilibriumRecord, EquilibriumSet, Member};
use premq::model::{service_spec_with_family, FamilyChoice};
use premq::simulator::{run_replications, SimError, SimRow};
use premq::welfare::{
    phi_star, poa_bound_sweep, poa_given_cost, poa_light_load_limit, poa_row, variance_regime,
    PoaRow,
};
use premq::{Discipline, ModelParams, PhiFraction, SimConfig, SimEstimate};

use crate::output::{emit, sig9, Format};
use crate::sweep::{Axis, SweepParam, SweepSpec};
use crate::{
    invalid, AnalyticArgs, CliResult, ConfigFile, DynArgs, EqArgs, Failure, PoaArgs, PoaCommand,
    PoaSweepArgs, SimArgs, SweepArgs,
};

fn phi_arg(value: Option<f64>, flag: &str) -> CliResult<PhiFraction> {
    let v = value.ok_or_else(|| invalid(format!("{flag} is required")))?;
    Ok(PhiFraction::new(v)?)
}

fn print(text: &str) {
    print!("{text}");
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub discipline: Discipline,
    pub lambda: f64,
    pub mu: f64,
    pub k: f64,
    pub phi: f64,
    pub wp: f64,
    pub wo: f64,
    pub w: f64,
    pub gap: f64,
}

pub fn analytic(args: AnalyticArgs) -> CliResult {
    let config = ConfigFile::load(args.params.config.as_deref())?;
    let params = config.params(&args.params)?;
    let phi = phi_arg(config.pick(args.phi, "phi")?, "--phi")?;
    let discipline = config.discipline(args.discipline)?;
    let waits = wait_times(&params, phi, discipline);
    let row = AnalyticRow {
        discipline,
        lambda: params.lambda,
        mu: params.mu,
        k: params.k_var,
        phi: phi.value(),
        wp: waits.premium,
        wo: waits.ordinary,
        w: waits.average,
        gap: cost_gap(&params, phi, discipline),
    };
    if args.format != Format::Human {
        return Ok(emit(&[row], args.format, None)?);
    }
    let mut s = String::new();
    writeln!(
        s,
        "discipline {discipline}  rho {}  K {}  phi {}",
        sig9(params.rho()),
        sig9(params.k_var),
        sig9(row.phi)
    )
    .unwrap();
    writeln!(s, "premium wait    E[W_p] = {}", sig9(row.wp)).unwrap();
    writeln!(s, "ordinary wait   E[W_o] = {}", sig9(row.wo)).unwrap();
    writeln!(s, "average wait    E[W]   = {}", sig9(row.w)).unwrap();
    writeln!(s, "gap             C(phi) = {}", sig9(row.gap)).unwrap();
    print(&s);
    Ok(())
}

fn member_label(m: &Member) -> String {
    let ess = if m.ess { "ESS" } else { "not ESS" };
    if m.phi == 0.0 {
        format!("no one joins ({ess})")
    } else if m.phi == 1.0 {
        format!("everyone joins ({ess})")
    } else {
        format!("mixed φe={} ({ess})", sig9(m.phi))
    }
}

/// One-line description of an equilibrium set.
pub fn summarize_equilibria(set: &EquilibriumSet) -> String {
    let shape = set.shape.label();
    if set.all_phi_indifferent {
        return format!("{shape}; every φ in [0, 1] is an equilibrium (indifferent)");
    }
    let members = set.members();
    let mut line = match members.as_slice() {
        [] => format!("{shape}; no equilibrium"),
        [m] if m.phi > 0.0 && m.phi < 1.0 => format!("{shape}; unique {}", member_label(m)),
        [m] => format!("{shape}; {}", member_label(m)),
        many => {
            let count = match many.len() {
                2 => "two".to_string(),
                3 => "three".to_string(),
                n => n.to_string(),
            };
            let parts: Vec<String> = many.iter().map(member_label).collect();
            format!("{shape}; {count} equilibria: {}", parts.join(", "))
        }
    };
    if set.boundary {
        line.push_str(" [fee on a boundary]");
    }
    line
}

pub fn equilibrium(args: EqArgs) -> CliResult {
    let config = ConfigFile::load(args.params.config.as_deref())?;
    let params = config.params(&args.params)?;
    let discipline = config.discipline(args.discipline)?;
    let set = equilibria(&params, discipline);
    if args.format != Format::Human {
        return Ok(emit(&[EquilibriumRecord::from(&set)], args.format, None)?);
    }
    let mut s = String::new();
    writeln!(
        s,
        "discipline {discipline}  rho {}  K {}  fee {}",
        sig9(params.rho()),
        sig9(params.k_var),
        sig9(params.cost)
    )
    .unwrap();
    writeln!(
        s,
        "curve {}  C(0) = {}  C(1) = {}",
        set.shape.label(),
        sig9(cost_gap(&params, PhiFraction::ZERO, discipline)),
        sig9(cost_gap(&params, PhiFraction::ONE, discipline))
    )
    .unwrap();
    for m in set.members() {
        writeln!(
            s,
            "  phi = {:<12} {}",
            sig9(m.phi),
            if m.ess { "ESS" } else { "not ESS" }
        )
        .unwrap();
    }
    writeln!(
        s,
        "boundary {}  indifferent {}",
        set.boundary, set.all_phi_indifferent
    )
    .unwrap();
    writeln!(s, "{}", summarize_equilibria(&set)).unwrap();
    print(&s);
    Ok(())
}

pub fn poa(args: PoaArgs) -> CliResult {
    if let Some(PoaCommand::Sweep(sweep)) = args.sweep {
        return poa_sweep(sweep);
    }
    let rho = args.rho.ok_or_else(|| invalid("--rho is required"))?;
    let k = args.k.ok_or_else(|| invalid("--k is required"))?;
    let mu = args.mu.unwrap_or(1.0);
    let params = ModelParams::from_load(rho, mu, k, args.cost.unwrap_or(0.0))?;
    let row = poa_row(rho, k);
    let at_cost = args.cost.map(|_| poa_given_cost(&params));
    if args.format != Format::Human {
        return Ok(emit(&[row], args.format, None)?);
    }
    let mut s = String::new();
    writeln!(
        s,
        "rho {}  K {}  regime {:?}",
        sig9(rho),
        sig9(k),
        variance_regime(k)
    )
    .unwrap();
    writeln!(s, "worst-case PoA          {}", sig9(row.poa)).unwrap();
    writeln!(s, "worst equilibrium phi   {}", sig9(row.worst_phi)).unwrap();
    writeln!(s, "optimal phi             {}", sig9(row.opt_phi)).unwrap();
    writeln!(s, "optimal E[W] (mu = 1)   {}", sig9(row.opt_wait)).unwrap();
    writeln!(s, "phi*                    {}", sig9(phi_star(rho).value())).unwrap();
    writeln!(
        s,
        "light-load limit        {}",
        sig9(poa_light_load_limit(k))
    )
    .unwrap();
    if let Some(r) = at_cost {
        writeln!(
            s,
            "at fee {}: PoA {}  worst eq phi {}  E[W] {} vs optimum {}{}",
            sig9(params.cost),
            sig9(r.poa),
            sig9(r.worst_equilibrium_phi),
            sig9(r.worst_eq_wait),
            sig9(r.optimal_wait),
            if r.indifferent {
                "  (all phi indifferent)"
            } else {
                ""
            }
        )
        .unwrap();
    }
    print(&s);
    Ok(())
}

fn poa_sweep(args: PoaSweepArgs) -> CliResult {
    let spec = SweepSpec::new(vec![
        Axis {
            param: SweepParam::Rho,
            range: args.rho,
        },
        Axis {
            param: SweepParam::K,
            range: args.k,
        },
    ])
    .map_err(invalid)?;
    let rhos = spec.values_of(SweepParam::Rho).unwrap_or_default();
    let ks = spec.values_of(SweepParam::K).unwrap_or_default();
    let sweep = poa_bound_sweep(&rhos, &ks);
    emit(&sweep.rows, args.format, args.out.as_deref())?;
    let best: &PoaRow = sweep.max();
    let line = format!(
        "max {} at rho {}, K {} over {} points",
        sig9(best.poa),
        sig9(best.rho),
        sig9(best.k),
        sweep.rows.len()
    );
    if args.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::InvalidConfig(m) => invalid(format!("InvalidConfig: {m}")),
        other => Failure::Runtime(other.into()),
    }
}

fn estimate_line(name: &str, est: Option<SimEstimate>, target: f64) -> String {
    match est {
        None => format!("{name:<9} (no customers)\n"),
        Some(e) => format!(
            "{name:<9} {:<13} [{}, {}]  target {:<13} {}\n",
            sig9(e.mean),
            sig9(e.lower()),
            sig9(e.upper()),
            sig9(target),
            if e.covers(target) {
                "covered"
            } else {
                "NOT covered"
            }
        ),
    }
}

pub fn simulate(args: SimArgs) -> CliResult {
    let config = ConfigFile::load(args.params.config.as_deref())?;
    let params = config.params(&args.params)?;
    let phi = phi_arg(config.pick(args.phi, "phi")?, "--phi")?;
    let discipline = config.discipline(args.discipline)?;
    let seed: u64 = config
        .pick(args.seed, "seed")?
        .ok_or_else(|| invalid("--seed is required"))?;
    let n_arrivals = config.pick(args.arrivals, "arrivals")?.unwrap_or(1_000_000);
    let warmup_arrivals = config
        .pick(args.warmup, "warmup")?
        .unwrap_or(n_arrivals / 10);
    let n_batches = config.pick(args.batches, "batches")?.unwrap_or(20);
    let family: FamilyChoice = config
        .pick::<String>(args.family, "family")?
        .map(|f| f.parse())
        .transpose()
        .map_err(invalid)?
        .unwrap_or_default();
    let replications = config.pick(args.replications, "replications")?.unwrap_or(1);
    if replications == 0 {
        return Err(invalid("--replications must be at least 1"));
    }
    let service = service_spec_with_family(params.mu, params.k_var, family)?;
    let base = SimConfig {
        params,
        phi,
        discipline,
        service,
        n_arrivals,
        warmup_arrivals,
        n_batches,
        seed,
    };
    base.validate().map_err(sim_failure)?;
    let configs: Vec<SimConfig> = (0..replications)
        .map(|i| SimConfig {
            seed: seed.wrapping_add(i),
            ..base
        })
        .collect();
    let results = run_replications(&configs)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(sim_failure)?;
    let rows: Vec<SimRow> = configs
        .iter()
        .zip(&results)
        .map(|(c, r)| SimRow::new(c, r))
        .collect();
    if let Some(path) = &args.out {
        let format = if args.format == Format::Json {
            Format::Json
        } else {
            Format::Csv
        };
        emit(&rows, format, Some(path))?;
    }
    if args.format != Format::Human {
        return Ok(emit(&rows, args.format, None)?);
    }

    let target = wait_times(&params, phi, discipline);
    let mut s = String::new();
    writeln!(
        s,
        "discipline {discipline}  phi {}  rho {}  K {}  service {}",
        sig9(phi.value()),
        sig9(params.rho()),
        sig9(params.k_var),
        service.family.name()
    )
    .unwrap();
    writeln!(
        s,
        "arrivals {n_arrivals} (warmup {warmup_arrivals})  batches {n_batches}  seed {seed}"
    )
    .unwrap();
    for (config, r) in configs.iter().zip(&results) {
        if replications > 1 {
            writeln!(s, "-- seed {}", config.seed).unwrap();
        }
        writeln!(s, "class     estimate      95% CI, analytic target, marker").unwrap();
        s.push_str(&estimate_line("premium", r.wait_premium, target.premium));
        s.push_str(&estimate_line("ordinary", r.wait_ordinary, target.ordinary));
        s.push_str(&estimate_line(
            "average",
            Some(r.wait_average),
            target.average,
        ));
        if r.wait_gap.is_some() {
            s.push_str(&estimate_line("gap", r.wait_gap, target.gap()));
        }
        writeln!(
            s,
            "customers {} premium / {} ordinary  preemptions {}  max work discrepancy {}",
            r.n_premium,
            r.n_ordinary,
            r.audit.preemptions,
            sig9(r.audit.max_work_discrepancy)
        )
        .unwrap();
    }
    if replications > 1 {
        let covered = |pick: fn(&premq::SimResult) -> Option<SimEstimate>, t: f64| {
            results
                .iter()
                .filter(|r| pick(r).is_some_and(|e| e.covers(t)))
                .count()
        };
        writeln!(
            s,
            "coverage over {replications} replications: premium {}  ordinary {}  average {}",
            covered(|r| r.wait_premium, target.premium),
            covered(|r| r.wait_ordinary, target.ordinary),
            covered(|r| Some(r.wait_average), target.average)
        )
        .unwrap();
    }
    print(&s);
    Ok(())
}

fn dynamics_failure(e: DynamicsError) -> Failure {
    invalid(e.to_string())
}

pub fn dynamics(args: DynArgs) -> CliResult {
    let config = ConfigFile::load(args.params.config.as_deref())?;
    let params = config.params(&args.params)?;
    let phi0 = phi_arg(config.pick(args.phi0, "phi0")?, "--phi0")?;
    let discipline = config.discipline(args.discipline)?;
    let defaults = IterateOptions::default();
    let options = IterateOptions {
        step_size: config
            .pick(args.step, "step")?
            .unwrap_or(defaults.step_size),
        tolerance: config.pick(args.tol, "tol")?.unwrap_or(defaults.tolerance),
        max_iters: config
            .pick(args.iters, "iters")?
            .unwrap_or(defaults.max_iters),
    };
    let traj = iterate(&params, discipline, phi0, &options).map_err(dynamics_failure)?;
    let rows = traj.rows();
    if let Some(path) = &args.out {
        let format = if args.format == Format::Json {
            Format::Json
        } else {
            Format::Csv
        };
        emit(&rows, format, Some(path))?;
    }
    if args.format != Format::Human {
        return Ok(emit(&rows, args.format, None)?);
    }
    let mut s = String::new();
    writeln!(
        s,
        "discipline {discipline}  phi0 {}  step {}  tol {}",
        sig9(phi0.value()),
        sig9(options.step_size),
        sig9(options.tolerance)
    )
    .unwrap();
    writeln!(s, "terminal phi {}", sig9(traj.terminal)).unwrap();
    writeln!(
        s,
        "converged {}  iterations {}",
        traj.converged, traj.iterations_used
    )
    .unwrap();
    if let Some(eps) = args.probe {
        let set = equilibria(&params, discipline);
        for m in set.members() {
            let verdict =
                ess_probe(&params, discipline, m.phi, eps, &options).map_err(dynamics_failure)?;
            let word = match verdict {
                Stability::Stable => "stable",
                Stability::Unstable => "unstable",
            };
            writeln!(s, "probe phi {} (eps {}): {word}", sig9(m.phi), sig9(eps)).unwrap();
        }
    }
    print(&s);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rho: f64,
    pub k: f64,
    pub cost: f64,
    pub phi: f64,
    pub mu: f64,
    pub discipline: Discipline,
    pub wp: f64,
    pub wo: f64,
    pub w: f64,
    pub gap: f64,
    pub shape: String,
    pub n_equilibria: usize,
    pub phi_e: Option<f64>,
    pub phi_e_ess: Option<bool>,
    pub poa: f64,
}

fn sweep_row(
    rho: f64,
    k: f64,
    cost: f64,
    phi: f64,
    mu: f64,
    discipline: Discipline,
) -> CliResult<SweepRow> {
    let params = ModelParams::from_load(rho, mu, k, cost)?;
    let phi_f = PhiFraction::new(phi)?;
    let waits = wait_times(&params, phi_f, discipline);
    let set = equilibria(&params, discipline);
    let poa = match discipline {
        Discipline::PreemptiveResume => poa_given_cost(&params).poa,
        Discipline::NonPreemptive => 1.0,
    };
    Ok(SweepRow {
        rho,
        k,
        cost,
        phi,
        mu,
        discipline,
        wp: waits.premium,
        wo: waits.ordinary,
        w: waits.average,
        gap: cost_gap(&params, phi_f, discipline),
        shape: set.shape.label().to_string(),
        n_equilibria: set.len(),
        phi_e: set.some_join.map(|m| m.phi),
        phi_e_ess: set.some_join.map(|m| m.ess),
        poa,
    })
}

pub fn sweep(args: SweepArgs) -> CliResult {
    let spec = SweepSpec::new(args.axes).map_err(invalid)?;
    let axis = |param: SweepParam, fixed: Option<f64>, default: Option<f64>, flag: &str| match spec
        .values_of(param)
    {
        Some(v) => Ok(v),
        None => fixed
            .or(default)
            .map(|x| vec![x])
            .ok_or_else(|| invalid(format!("{flag} is required unless swept"))),
    };
    let rhos = axis(SweepParam::Rho, args.rho, None, "--rho")?;
    let ks = axis(SweepParam::K, args.k, None, "--k")?;
    let costs = axis(SweepParam::Cost, args.cost, Some(0.0), "--cost")?;
    let phis = axis(SweepParam::Phi, args.phi, Some(0.0), "--phi")?;
    let mu = args.mu.unwrap_or(1.0);
    let discipline: Discipline = match args.discipline {
        Some(d) => d.parse().map_err(invalid)?,
        None => Discipline::PreemptiveResume,
    };
    let mut grid = Vec::with_capacity(rhos.len() * ks.len() * costs.len() * phis.len());
    for &rho in &rhos {
        for &k in &ks {
            for &cost in &costs {
                for &phi in &phis {
                    grid.push((rho, k, cost, phi));
                }
            }
        }
    }
    let rows = grid
        .par_iter()
        .map(|&(rho, k, cost, phi)| sweep_row(rho, k, cost, phi, mu, discipline))
        .collect::<CliResult<Vec<_>>>()?;
    emit(&rows, args.format, args.out.as_deref())?;
    Ok(())
}

pub fn verify() -> CliResult {
    let checks = premq::verify::run_all();
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {}", c.name, c.detail);
        if !c.passed {
            failed += 1;
        }
    }
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "{failed} check(s) failed"
        )));
    }
    Ok(())
}
