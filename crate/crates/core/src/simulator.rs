//! Discrete-event simulation of the two-class priority queue.
//!
//! Customers arrive in a Poisson stream and independently join the premium
//! class with probability `phi`. Within a class service is first-come
//! first-served. Under preemptive-resume an arriving premium customer
//! interrupts an ordinary customer in service; the interrupted customer keeps
//! its remaining work and goes back to the head of the ordinary line. Premium
//! customers never preempt each other.
//!
//! A customer's wait is `departure - arrival - service requirement`, the same
//! convention as [`crate::analytic`].

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::analytic::Discipline;
use crate::model::{ModelParams, PhiFraction, ServiceFamily, ServiceSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {observations} observations for {batches} batches")]
    InsufficientData { observations: usize, batches: usize },
}

/// Minimum number of batches for a batch-means interval.
pub const MIN_BATCHES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub phi: PhiFraction,
    pub discipline: Discipline,
    pub service: ServiceSpec,
    pub n_arrivals: u64,
    pub warmup_arrivals: u64,
    pub n_batches: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_batches < MIN_BATCHES {
            return Err(SimError::InvalidConfig(format!(
                "n_batches = {} (need at least {MIN_BATCHES})",
                self.n_batches
            )));
        }
        if self.n_arrivals <= self.warmup_arrivals {
            return Err(SimError::InvalidConfig(format!(
                "n_arrivals = {} must exceed warmup_arrivals = {}",
                self.n_arrivals, self.warmup_arrivals
            )));
        }
        let kept = self.n_arrivals - self.warmup_arrivals;
        if kept < self.n_batches as u64 {
            return Err(SimError::InvalidConfig(format!(
                "{kept} post-warmup arrivals cannot fill {} batches",
                self.n_batches
            )));
        }
        if !(self.params.rho() < 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "rho = {} is not stable",
                self.params.rho()
            )));
        }
        Ok(())
    }
}

/// A point estimate with a 95% batch-means half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub n_observations: usize,
}

impl SimEstimate {
    pub fn covers(&self, target: f64) -> bool {
        (self.mean - target).abs() <= self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Bookkeeping checks gathered during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimAudit {
    pub customers_completed: u64,
    pub preemptions: u64,
    /// Largest `|total time in service - service requirement|` over all
    /// customers.
    pub max_work_discrepancy: f64,
    /// Clock value at the last departure.
    pub end_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// `None` when too few premium customers were observed.
    pub wait_premium: Option<SimEstimate>,
    pub wait_ordinary: Option<SimEstimate>,
    pub wait_average: SimEstimate,
    /// Ordinary minus premium, from paired per-batch class means.
    pub wait_gap: Option<SimEstimate>,
    pub n_premium: usize,
    pub n_ordinary: usize,
    pub audit: SimAudit,
}

/// One completed customer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomerRecord {
    pub id: u64,
    pub premium: bool,
    pub arrival: f64,
    pub departure: f64,
    pub requirement: f64,
    /// Sum of the lengths of this customer's service segments.
    pub served: f64,
    pub preempted: u32,
}

impl CustomerRecord {
    pub fn wait(&self) -> f64 {
        self.departure - self.arrival - self.requirement
    }
}

/// Pre-built sampler for a [`ServiceSpec`].
#[derive(Debug, Clone, Copy)]
pub enum ServiceSampler {
    Deterministic(f64),
    Exponential(Exp<f64>),
    Gamma(Gamma<f64>),
    Hyperexponential {
        p: f64,
        fast: Exp<f64>,
        slow: Exp<f64>,
    },
}

impl ServiceSampler {
    pub fn new(spec: &ServiceSpec) -> Self {
        match spec.family {
            ServiceFamily::Deterministic { value } => ServiceSampler::Deterministic(value),
            ServiceFamily::Exponential { rate } => {
                ServiceSampler::Exponential(Exp::new(rate).expect("validated rate"))
            }
            ServiceFamily::Gamma { shape, scale } => {
                ServiceSampler::Gamma(Gamma::new(shape, scale).expect("validated gamma"))
            }
            ServiceFamily::Hyperexponential { p, rate1, rate2 } => {
                ServiceSampler::Hyperexponential {
                    p,
                    fast: Exp::new(rate1).expect("validated rate"),
                    slow: Exp::new(rate2).expect("validated rate"),
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceSampler::Deterministic(v) => *v,
            ServiceSampler::Exponential(d) => d.sample(rng),
            ServiceSampler::Gamma(d) => d.sample(rng),
            ServiceSampler::Hyperexponential { p, fast, slow } => {
                if rng.random::<f64>() < *p {
                    fast.sample(rng)
                } else {
                    slow.sample(rng)
                }
            }
        }
    }
}

/// Draws one service duration.
pub fn sample_service<R: Rng + ?Sized>(spec: &ServiceSpec, rng: &mut R) -> f64 {
    ServiceSampler::new(spec).sample(rng)
}

/// Batch-means estimate over `observations` split into `n_batches`
/// contiguous, near-equal batches.
///
/// The reported mean is the grand mean (the size-weighted mean of batch
/// means); the half-width uses Student's t with `n_batches - 1` degrees of
/// freedom at 95%.
pub fn batch_means(observations: &[f64], n_batches: usize) -> Result<SimEstimate, SimError> {
    if n_batches < MIN_BATCHES || observations.len() < n_batches {
        return Err(SimError::InsufficientData {
            observations: observations.len(),
            batches: n_batches,
        });
    }
    let len = observations.len();
    // Shift by the first value so a constant series gives identical batch means.
    let shift = observations[0];
    let mut total = 0.0;
    let mut means = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let batch = &observations[b * len / n_batches..(b + 1) * len / n_batches];
        let sum: f64 = batch.iter().map(|x| x - shift).sum();
        total += sum;
        means.push(sum / batch.len() as f64);
    }
    let mean = shift + total / len as f64;
    Ok(SimEstimate {
        mean,
        half_width: t_half_width(&means),
        n_observations: len,
    })
}

/// 95% Student-t half-width of the mean of `values`.
fn t_half_width(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    t_quantile_975(values.len() - 1) * (var / n).sqrt()
}

fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival,
    Departure { token: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl Event {
    /// Arrivals before departures at equal times.
    fn rank(&self) -> u8 {
        match self.kind {
            EventKind::Arrival => 0,
            EventKind::Departure { .. } => 1,
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.rank().cmp(&other.rank()))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    id: u64,
    premium: bool,
    arrival: f64,
    requirement: f64,
    remaining: f64,
    served: f64,
    preempted: u32,
}

#[derive(Debug, Clone, Copy)]
struct InService {
    job: Job,
    segment_start: f64,
    token: u64,
}

struct Calendar {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl Calendar {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            time,
            seq: self.seq,
            kind,
        }));
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

/// Independent deterministic substreams derived from the master seed.
struct Streams {
    interarrival: ChaCha8Rng,
    class: ChaCha8Rng,
    service: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Streams {
            interarrival: stream(1),
            class: stream(2),
            service: stream(3),
        }
    }
}

/// Runs the simulation, handing every completed customer to `observe` in
/// departure order.
pub fn simulate<F: FnMut(&CustomerRecord)>(
    config: &SimConfig,
    mut observe: F,
) -> Result<SimAudit, SimError> {
    config.validate()?;
    let preemptive = config.discipline == Discipline::PreemptiveResume;
    let phi = config.phi.value();
    let interarrival =
        Exp::new(config.params.lambda).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let service = ServiceSampler::new(&config.service);
    let mut streams = Streams::new(config.seed);

    let mut calendar = Calendar {
        heap: BinaryHeap::new(),
        seq: 0,
    };
    let mut premium_line: VecDeque<Job> = VecDeque::new();
    let mut ordinary_line: VecDeque<Job> = VecDeque::new();
    let mut server: Option<InService> = None;
    let mut next_token = 0u64;
    let mut arrivals = 0u64;
    let mut audit = SimAudit {
        customers_completed: 0,
        preemptions: 0,
        max_work_discrepancy: 0.0,
        end_time: 0.0,
    };

    let mut start = |job: Job, now: f64, calendar: &mut Calendar| -> InService {
        next_token += 1;
        calendar.schedule(
            now + job.remaining,
            EventKind::Departure { token: next_token },
        );
        InService {
            job,
            segment_start: now,
            token: next_token,
        }
    };

    calendar.schedule(
        interarrival.sample(&mut streams.interarrival),
        EventKind::Arrival,
    );

    while let Some(event) = calendar.pop() {
        let now = event.time;
        match event.kind {
            EventKind::Arrival => {
                let premium = streams.class.random::<f64>() < phi;
                let requirement = service.sample(&mut streams.service);
                let job = Job {
                    id: arrivals,
                    premium,
                    arrival: now,
                    requirement,
                    remaining: requirement,
                    served: 0.0,
                    preempted: 0,
                };
                arrivals += 1;
                if arrivals < config.n_arrivals {
                    calendar.schedule(
                        now + interarrival.sample(&mut streams.interarrival),
                        EventKind::Arrival,
                    );
                }

                match server {
                    None => server = Some(start(job, now, &mut calendar)),
                    Some(current) if preemptive && premium && !current.job.premium => {
                        let elapsed = now - current.segment_start;
                        let mut bumped = current.job;
                        bumped.remaining -= elapsed;
                        bumped.served += elapsed;
                        bumped.preempted += 1;
                        // The interrupted customer was the oldest ordinary.
                        ordinary_line.push_front(bumped);
                        audit.preemptions += 1;
                        // The old departure event is now stale; its token no
                        // longer matches.
                        server = Some(start(job, now, &mut calendar));
                    }
                    Some(_) => {
                        if premium {
                            premium_line.push_back(job);
                        } else {
                            ordinary_line.push_back(job);
                        }
                    }
                }
            }
            EventKind::Departure { token } => {
                let current = match server {
                    Some(s) if s.token == token => s,
                    _ => continue,
                };
                let mut job = current.job;
                job.served += now - current.segment_start;
                let record = CustomerRecord {
                    id: job.id,
                    premium: job.premium,
                    arrival: job.arrival,
                    departure: now,
                    requirement: job.requirement,
                    served: job.served,
                    preempted: job.preempted,
                };
                let discrepancy = (record.served - record.requirement).abs();
                audit.max_work_discrepancy = audit.max_work_discrepancy.max(discrepancy);
                audit.customers_completed += 1;
                audit.end_time = now;
                observe(&record);

                server = premium_line
                    .pop_front()
                    .or_else(|| ordinary_line.pop_front())
                    .map(|next| start(next, now, &mut calendar));
            }
        }
    }
    Ok(audit)
}

/// Runs the simulation and reduces post-warmup waits to batch-means
/// estimates.
pub fn run_sim(config: &SimConfig) -> Result<SimResult, SimError> {
    let kept = (config.n_arrivals - config.warmup_arrivals.min(config.n_arrivals)) as usize;
    // Waits indexed by arrival order after warmup.
    let mut waits = vec![f64::NAN; kept];
    let mut premium_flags = vec![false; kept];
    let audit = simulate(config, |rec| {
        if rec.id >= config.warmup_arrivals {
            let i = (rec.id - config.warmup_arrivals) as usize;
            waits[i] = rec.wait();
            premium_flags[i] = rec.premium;
        }
    })?;
    summarize(&waits, &premium_flags, config.n_batches, audit)
}

fn summarize(
    waits: &[f64],
    premium: &[bool],
    n_batches: usize,
    audit: SimAudit,
) -> Result<SimResult, SimError> {
    type Tagged = Vec<(f64, bool)>;
    let (p_obs, o_obs): (Tagged, Tagged) = waits
        .iter()
        .copied()
        .zip(premium.iter().copied())
        .partition(|&(_, p)| p);
    let p_obs: Vec<f64> = p_obs.into_iter().map(|(w, _)| w).collect();
    let o_obs: Vec<f64> = o_obs.into_iter().map(|(w, _)| w).collect();

    let class_estimate = |obs: &[f64]| batch_means(obs, n_batches).ok();
    Ok(SimResult {
        wait_premium: class_estimate(&p_obs),
        wait_ordinary: class_estimate(&o_obs),
        wait_average: batch_means(waits, n_batches)?,
        wait_gap: paired_gap(waits, premium, n_batches),
        n_premium: p_obs.len(),
        n_ordinary: o_obs.len(),
        audit,
    })
}

/// Per-batch `ordinary mean - premium mean` over arrival-order batches.
fn paired_gap(waits: &[f64], premium: &[bool], n_batches: usize) -> Option<SimEstimate> {
    let len = waits.len();
    let mut diffs = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let range = b * len / n_batches..(b + 1) * len / n_batches;
        let (mut sp, mut np, mut so, mut no) = (0.0, 0usize, 0.0, 0usize);
        for i in range {
            if premium[i] {
                sp += waits[i];
                np += 1;
            } else {
                so += waits[i];
                no += 1;
            }
        }
        if np == 0 || no == 0 {
            return None;
        }
        diffs.push(so / no as f64 - sp / np as f64);
    }
    Some(SimEstimate {
        mean: diffs.iter().sum::<f64>() / n_batches as f64,
        half_width: t_half_width(&diffs),
        n_observations: len,
    })
}

/// Runs the simulation and also returns every customer record, ordered by
/// arrival. Intended for small runs.
pub fn run_sim_trace(config: &SimConfig) -> Result<(SimResult, Vec<CustomerRecord>), SimError> {
    let mut records = Vec::with_capacity(config.n_arrivals as usize);
    let audit = simulate(config, |rec| records.push(*rec))?;
    records.sort_by_key(|r| r.id);
    let kept: Vec<&CustomerRecord> = records
        .iter()
        .filter(|r| r.id >= config.warmup_arrivals)
        .collect();
    let waits: Vec<f64> = kept.iter().map(|r| r.wait()).collect();
    let flags: Vec<bool> = kept.iter().map(|r| r.premium).collect();
    let result = summarize(&waits, &flags, config.n_batches, audit)?;
    Ok((result, records))
}

/// Runs independent configurations in parallel; results keep input order.
pub fn run_replications(configs: &[SimConfig]) -> Vec<Result<SimResult, SimError>> {
    configs.par_iter().map(run_sim).collect()
}

/// Flat CSV record for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub discipline: Discipline,
    pub phi: f64,
    pub rho: f64,
    pub k: f64,
    pub wp_mean: Option<f64>,
    pub wp_hw: Option<f64>,
    pub wo_mean: Option<f64>,
    pub wo_hw: Option<f64>,
    pub w_mean: f64,
    pub w_hw: f64,
    pub n: usize,
    pub seed: u64,
}

impl SimRow {
    pub fn new(config: &SimConfig, result: &SimResult) -> Self {
        SimRow {
            discipline: config.discipline,
            phi: config.phi.value(),
            rho: config.params.rho(),
            k: config.service.k_var(),
            wp_mean: result.wait_premium.map(|e| e.mean),
            wp_hw: result.wait_premium.map(|e| e.half_width),
            wo_mean: result.wait_ordinary.map(|e| e.mean),
            wo_hw: result.wait_ordinary.map(|e| e.half_width),
            w_mean: result.wait_average.mean,
            w_hw: result.wait_average.half_width,
            n: result.wait_average.n_observations,
            seed: config.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{service_spec_for_k, service_spec_with_family, FamilyChoice};

    fn config(rho: f64, k: f64, phi: f64, discipline: Discipline, n: u64, seed: u64) -> SimConfig {
        SimConfig {
            params: ModelParams::from_load(rho, 1.0, k, 0.0).unwrap(),
            phi: PhiFraction::new(phi).unwrap(),
            discipline,
            service: service_spec_for_k(1.0, k).unwrap(),
            n_arrivals: n,
            warmup_arrivals: n / 10,
            n_batches: 20,
            seed,
        }
    }

    #[test]
    fn batch_means_constant_series() {
        let est = batch_means(&vec![0.1; 1003], 10).unwrap();
        assert_eq!(est.mean, 0.1);
        assert_eq!(est.half_width, 0.0);
        assert_eq!(est.n_observations, 1003);
    }

    #[test]
    fn batch_means_alternating() {
        let obs: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 0.0 } else { 2.0 })
            .collect();
        let est = batch_means(&obs, 10).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn batch_means_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let obs: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>()).collect();
        let est = batch_means(&obs, 20).unwrap();
        assert!((est.mean - 0.5).abs() < 0.002);
        // Standard error of the mean is about 2.9e-4.
        assert!(est.half_width > 1e-4 && est.half_width < 2e-3, "{est:?}");
    }

    #[test]
    fn batch_means_rejects_short_input() {
        assert!(matches!(
            batch_means(&[1.0; 5], 10),
            Err(SimError::InsufficientData { .. })
        ));
        assert!(matches!(
            batch_means(&[1.0; 500], 5),
            Err(SimError::InsufficientData { .. })
        ));
    }

    #[test]
    fn t_quantiles() {
        assert!((t_quantile_975(19) - 2.093024).abs() < 1e-5);
        assert!((t_quantile_975(9) - 2.262157).abs() < 1e-5);
    }

    #[test]
    fn invalid_configs() {
        let mut c = config(0.5, 2.0, 0.5, Discipline::PreemptiveResume, 100, 1);
        c.warmup_arrivals = 200;
        assert!(matches!(run_sim(&c), Err(SimError::InvalidConfig(_))));
        c.warmup_arrivals = 95;
        assert!(matches!(run_sim(&c), Err(SimError::InvalidConfig(_))));
        c.warmup_arrivals = 0;
        c.n_batches = 5;
        assert!(matches!(run_sim(&c), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn sample_service_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let det = service_spec_for_k(1.0, 1.0).unwrap();
        for _ in 0..10 {
            assert_eq!(sample_service(&det, &mut rng), 1.0);
        }
        let exp = service_spec_for_k(1.0, 2.0).unwrap();
        let sampler = ServiceSampler::new(&exp);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sampler.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        for d in [Discipline::PreemptiveResume, Discipline::NonPreemptive] {
            let c = config(0.6, 4.0, 0.4, d, 20_000, 99);
            let a = run_sim(&c).unwrap();
            let b = run_sim(&c).unwrap();
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
            let c2 = SimConfig { seed: 100, ..c };
            assert_ne!(run_sim(&c2).unwrap().wait_average.mean, a.wait_average.mean);
        }
    }

    #[test]
    fn preempted_work_is_conserved_per_customer() {
        let c = config(0.8, 10.0, 0.5, Discipline::PreemptiveResume, 50_000, 5);
        let (result, records) = run_sim_trace(&c).unwrap();
        assert!(result.audit.preemptions > 1000);
        assert_eq!(records.len(), 50_000);
        let scale = result.audit.end_time.max(1.0);
        for r in &records {
            assert!((r.served - r.requirement).abs() <= 1e-11 * scale, "{r:?}");
            assert!(r.wait() >= -1e-9 * scale);
            if r.premium {
                assert_eq!(r.preempted, 0);
            }
        }
        assert!(records.iter().any(|r| r.preempted > 0));
    }

    #[test]
    fn np_never_preempts_and_fifo_within_class() {
        let c = config(0.7, 3.0, 0.5, Discipline::NonPreemptive, 20_000, 8);
        let (result, records) = run_sim_trace(&c).unwrap();
        assert_eq!(result.audit.preemptions, 0);
        for class in [true, false] {
            let mut deps: Vec<(u64, f64)> = records
                .iter()
                .filter(|r| r.premium == class)
                .map(|r| (r.id, r.departure))
                .collect();
            deps.sort_by_key(|d| d.0);
            assert!(deps.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }

    #[test]
    fn pr_fifo_within_class() {
        let c = config(0.7, 3.0, 0.5, Discipline::PreemptiveResume, 20_000, 8);
        let (_, records) = run_sim_trace(&c).unwrap();
        for class in [true, false] {
            let deps: Vec<f64> = records
                .iter()
                .filter(|r| r.premium == class)
                .map(|r| r.departure)
                .collect();
            assert!(deps.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn empty_premium_class_is_flagged() {
        let c = config(0.5, 2.0, 0.0, Discipline::PreemptiveResume, 20_000, 1);
        let r = run_sim(&c).unwrap();
        assert!(r.wait_premium.is_none());
        assert_eq!(r.n_premium, 0);
        assert!(r.wait_gap.is_none());
        assert_eq!(r.audit.preemptions, 0);
        let row = SimRow::new(&c, &r);
        assert_eq!(row.wp_mean, None);
    }

    #[test]
    fn average_is_weighted_class_mean() {
        let c = config(0.5, 2.0, 0.3, Discipline::PreemptiveResume, 50_000, 17);
        let r = run_sim(&c).unwrap();
        let (p, o) = (r.wait_premium.unwrap(), r.wait_ordinary.unwrap());
        let n = (r.n_premium + r.n_ordinary) as f64;
        let combined = (r.n_premium as f64 * p.mean + r.n_ordinary as f64 * o.mean) / n;
        assert!((combined - r.wait_average.mean).abs() <= 1e-9 * r.wait_average.mean);
    }

    #[test]
    fn deterministic_service_single_class_matches_mg1() {
        let c = config(0.5, 1.0, 0.0, Discipline::NonPreemptive, 400_000, 4);
        let r = run_sim(&c).unwrap();
        let target = c.params.single_class_wait();
        let est = r.wait_ordinary.unwrap();
        assert!(
            (est.mean - target).abs() <= 3.0 * est.half_width,
            "{est:?} vs {target}"
        );
    }

    #[test]
    fn hyperexponential_sampler_moments() {
        let spec = service_spec_with_family(2.0, 5.0, FamilyChoice::Hyperexponential).unwrap();
        let s = ServiceSampler::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 2_000_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let x = s.sample(&mut rng);
            m1 += x;
            m2 += x * x;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!((m1 - 0.5).abs() < 0.005, "{m1}");
        assert!((m2 - 5.0 / 4.0).abs() < 0.05, "{m2}");
    }
}
