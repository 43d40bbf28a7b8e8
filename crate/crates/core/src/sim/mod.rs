//! Discrete-event Monte Carlo simulation of a dispatch mechanism.
//!
//! The continuum of drivers is discretized at `scale` drivers per unit of
//! mass: arrival rates are multiplied by `scale` and a driver with `r`
//! drivers ahead sits at position `r / scale`. Metrics are reported back in
//! mass units so they compare directly with the closed-form analyzers.

pub mod dispatch;
pub mod queue;
pub mod strategy;

pub use dispatch::{dispatch_target, DispatchDecision, Dispatcher};
pub use queue::{DriverQueue, QueuedDriver};
pub use strategy::{equilibrium_strategy, AcceptRule, DriverStrategy, JoinRule, StrategyError, Target};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analyzers::{EquilibriumOutcome, Mechanism};
use crate::economy::Economy;
use crate::partition::BinLayout;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("randomized FIFO needs a bin layout")]
    MissingLayout,
    #[error("first best dispatches on arrival and has nothing to simulate")]
    NoQueue,
    #[error("dispatch attempt {attempt} exceeds patience {patience}")]
    AttemptOutOfRange { attempt: u32, patience: u32 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalModel {
    Poisson,
    /// Evenly spaced arrivals with a random phase.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLevel {
    /// Running statistics only.
    Summary,
    /// Also every rider, driver and event.
    Full,
}

/// A small share of drivers who accept destinations `1..=cutoff` instead of
/// playing the equilibrium strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub fraction: f64,
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Drivers per unit of mass.
    pub scale: u32,
    pub horizon: f64,
    pub warmup: f64,
    /// Time each dispatch attempt takes; 0 resolves a rider at once.
    pub offer_latency: f64,
    pub seed: u64,
    pub arrival_model: ArrivalModel,
    pub trace_level: TraceLevel,
    /// Spacing of queue-length samples; `None` picks 1/1000 of the horizon.
    pub sample_interval: Option<f64>,
    pub deviation: Option<Deviation>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scale: 50,
            horizon: 20_000.0,
            warmup: 5_000.0,
            offer_latency: 0.0,
            seed: 0,
            arrival_model: ArrivalModel::Poisson,
            trace_level: TraceLevel::Summary,
            sample_interval: None,
            deviation: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.scale < 1 {
            return bad("scale must be at least 1");
        }
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return bad("warmup must be finite and nonnegative");
        }
        if !(self.horizon.is_finite() && self.horizon > self.warmup) {
            return bad("horizon must be finite and exceed warmup");
        }
        if !(self.offer_latency.is_finite() && self.offer_latency >= 0.0) {
            return bad("offer latency must be finite and nonnegative");
        }
        if let Some(s) = self.sample_interval {
            if !(s.is_finite() && s > 0.0) {
                return bad("sample interval must be positive");
            }
        }
        if let Some(d) = self.deviation {
            if !(0.0..=1.0).contains(&d.fraction) || d.cutoff == 0 {
                return bad("deviation needs a fraction in [0, 1] and a cutoff of at least 1");
            }
        }
        Ok(())
    }
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Running statistics of a run. "Cohort" drivers arrived within
/// `[warmup, horizon]`; rates and the queue average use the same window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub window: f64,
    pub cohort_arrived: u64,
    pub cohort_joined: u64,
    pub cohort_balked: u64,
    /// Cohort drivers still queued when the run stopped.
    pub cohort_censored: u64,
    /// Payoff of every (untagged) cohort driver, balkers included.
    pub payoff: Welford,
    /// Payoff of tagged cohort drivers.
    pub tagged_payoff: Welford,
    pub wait_min: f64,
    pub wait_max: f64,
    pub wait_sum: f64,
    pub wait_count: u64,
    pub completions: Vec<u64>,
    pub window_earnings: f64,
    pub riders_arrived: u64,
    pub riders_cancelled: u64,
    pub riders_not_dispatched: u64,
    pub max_attempts: u32,
    /// Integral of the driver count over the window.
    pub queue_integral: f64,
    pub queue_samples: Vec<(f64, usize)>,
    pub total_joined: u64,
    pub total_rejoined: u64,
    pub total_departed_with_trip: u64,
    pub total_departed_empty: u64,
    pub final_queue: u64,
    pub end_time: f64,
}

impl TraceSummary {
    fn new(destinations: usize, window: f64) -> Self {
        Self {
            window,
            cohort_arrived: 0,
            cohort_joined: 0,
            cohort_balked: 0,
            cohort_censored: 0,
            payoff: Welford::default(),
            tagged_payoff: Welford::default(),
            wait_min: f64::INFINITY,
            wait_max: 0.0,
            wait_sum: 0.0,
            wait_count: 0,
            completions: vec![0; destinations],
            window_earnings: 0.0,
            riders_arrived: 0,
            riders_cancelled: 0,
            riders_not_dispatched: 0,
            max_attempts: 0,
            queue_integral: 0.0,
            queue_samples: Vec::new(),
            total_joined: 0,
            total_rejoined: 0,
            total_departed_with_trip: 0,
            total_departed_empty: 0,
            final_queue: 0,
            end_time: 0.0,
        }
    }

    /// Joined drivers are all accounted for.
    pub fn conserves_drivers(&self) -> bool {
        self.total_joined == self.total_departed_with_trip + self.total_departed_empty + self.final_queue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OfferRecord {
    pub time: f64,
    pub attempt: u32,
    /// Driver position in mass units; `None` for an attempt without an offer.
    pub position: Option<f64>,
    pub driver: Option<u64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiderOutcome {
    Served,
    Cancelled,
    NotDispatched,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiderRecord {
    pub id: u64,
    pub destination: usize,
    pub arrived_at: f64,
    pub attempts: Vec<OfferRecord>,
    pub outcome: RiderOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverRecord {
    pub id: u64,
    pub arrived_at: f64,
    pub joined: bool,
    pub tagged: bool,
    /// `(time, position)` at every offer received.
    pub positions: Vec<(f64, f64)>,
    pub departed_at: Option<f64>,
    pub destination: Option<usize>,
    pub payoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceEvent {
    RiderArrival { time: f64, rider: u64, destination: usize },
    Offer { time: f64, rider: u64, attempt: u32, driver: u64, position: f64, accepted: bool },
    EmptyAttempt { time: f64, rider: u64, attempt: u32 },
    RiderLeft { time: f64, rider: u64, outcome: RiderOutcome },
    DriverArrival { time: f64, driver: u64, joined: bool },
    DriverRejoin { time: f64, driver: u64 },
    DriverDeparture { time: f64, driver: u64, destination: Option<usize>, payoff: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub mechanism: String,
    pub seed: u64,
    pub scale: u32,
    pub horizon: f64,
    pub warmup: f64,
    pub patience: u32,
    pub summary: TraceSummary,
    pub riders: Vec<RiderRecord>,
    pub drivers: Vec<DriverRecord>,
    pub events: Vec<TraceEvent>,
}

impl SimulationTrace {
    /// One JSON object per event.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for ev in &self.events {
            serde_json::to_writer(&mut out, ev)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Rider = 0,
    Driver = 1,
    Attempt = 2,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Rider(usize),
    Driver,
    Attempt { slot: usize, attempt: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    class: Class,
    seq: u64,
    kind: Kind,
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
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingRider {
    id: u64,
    dest: usize,
}

enum Step {
    Done,
    Next,
}

struct Engine<'a> {
    e: &'a Economy<f64>,
    cfg: &'a SimConfig,
    strategy: DriverStrategy,
    deviant: Option<DriverStrategy>,
    dispatcher: Dispatcher,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    k: f64,
    queue: DriverQueue,
    next_driver: u64,
    next_rider: u64,
    pending: Vec<Option<PendingRider>>,
    free_slots: Vec<usize>,
    cohort_in_queue: u64,
    next_sample: f64,
    sample_every: f64,
    full: bool,
    s: TraceSummary,
    riders: Vec<RiderRecord>,
    drivers: Vec<DriverRecord>,
    events: Vec<TraceEvent>,
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, time: f64, class: Class, kind: Kind) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            class,
            seq: self.seq,
            kind,
        });
    }

    fn gap(&mut self, rate: f64) -> f64 {
        match self.cfg.arrival_model {
            ArrivalModel::Poisson => Exp::new(rate).expect("positive rate").sample(&mut self.rng),
            ArrivalModel::Deterministic => 1.0 / rate,
        }
    }

    fn first_gap(&mut self, rate: f64) -> f64 {
        match self.cfg.arrival_model {
            ArrivalModel::Poisson => self.gap(rate),
            ArrivalModel::Deterministic => self.rng.random::<f64>() / rate,
        }
    }

    fn in_window(&self, t: f64) -> bool {
        t >= self.cfg.warmup && t <= self.cfg.horizon
    }

    fn advance(&mut self, t: f64) {
        let len = self.queue.len();
        let lo = self.now.max(self.cfg.warmup);
        let hi = t.min(self.cfg.horizon);
        if hi > lo {
            self.s.queue_integral += len as f64 * (hi - lo);
        }
        while self.next_sample <= t && self.next_sample <= self.cfg.horizon {
            self.s.queue_samples.push((self.next_sample, len));
            self.next_sample += self.sample_every;
        }
        self.now = t;
    }

    fn chance(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            self.rng.random::<f64>() < p
        }
    }

    fn record_payoff(&mut self, d: &QueuedDriver, payoff: f64, wait: Option<f64>) {
        if !d.in_cohort {
            return;
        }
        self.cohort_in_queue -= 1;
        if d.tagged {
            self.s.tagged_payoff.push(payoff);
            return;
        }
        self.s.payoff.push(payoff);
        if let Some(w) = wait {
            self.s.wait_min = self.s.wait_min.min(w);
            self.s.wait_max = self.s.wait_max.max(w);
            self.s.wait_sum += w;
            self.s.wait_count += 1;
        }
    }

    fn driver_arrives(&mut self) {
        let id = self.next_driver;
        self.next_driver += 1;
        let in_cohort = self.in_window(self.now);
        let tagged = match self.cfg.deviation {
            Some(d) => self.chance(d.fraction),
            None => false,
        };
        let q = self.queue.len() as f64 / self.k;
        let leave = self.strategy.gamma(q, q);
        let joined = !self.chance(leave);
        if in_cohort {
            if tagged {
                if !joined {
                    self.s.tagged_payoff.push(0.0);
                }
            } else {
                self.s.cohort_arrived += 1;
                if joined {
                    self.s.cohort_joined += 1;
                } else {
                    self.s.cohort_balked += 1;
                    self.s.payoff.push(0.0);
                }
            }
        }
        if joined {
            self.s.total_joined += 1;
            if in_cohort {
                self.cohort_in_queue += 1;
            }
            self.queue.push_back(QueuedDriver {
                id,
                joined_at: self.now,
                arrived_at: self.now,
                in_cohort,
                tagged,
            });
        }
        if self.full {
            self.drivers.push(DriverRecord {
                id,
                arrived_at: self.now,
                joined,
                tagged,
                positions: Vec::new(),
                departed_at: None,
                destination: None,
                payoff: (!joined).then_some(0.0),
            });
            self.events.push(TraceEvent::DriverArrival {
                time: self.now,
                driver: id,
                joined,
            });
        }
    }

    fn rider_arrives(&mut self, dest: usize) -> Result<(), SimError> {
        let id = self.next_rider;
        self.next_rider += 1;
        if self.in_window(self.now) {
            self.s.riders_arrived += 1;
        }
        if self.full {
            self.riders.push(RiderRecord {
                id,
                destination: dest,
                arrived_at: self.now,
                attempts: Vec::new(),
                outcome: RiderOutcome::Pending,
            });
            self.events.push(TraceEvent::RiderArrival {
                time: self.now,
                rider: id,
                destination: dest,
            });
        }
        let rider = PendingRider { id, dest };
        if self.cfg.offer_latency == 0.0 {
            for attempt in 1..=self.e.patience() {
                if let Step::Done = self.attempt(rider, attempt)? {
                    return Ok(());
                }
            }
            return Ok(());
        }
        if let Step::Next = self.attempt(rider, 1)? {
            let slot = match self.free_slots.pop() {
                Some(s) => {
                    self.pending[s] = Some(rider);
                    s
                }
                None => {
                    self.pending.push(Some(rider));
                    self.pending.len() - 1
                }
            };
            self.schedule(self.now + self.cfg.offer_latency, Class::Attempt, Kind::Attempt { slot, attempt: 2 });
        }
        Ok(())
    }

    fn rider_left(&mut self, rider: PendingRider, outcome: RiderOutcome) {
        match outcome {
            RiderOutcome::Cancelled => self.s.riders_cancelled += 1,
            RiderOutcome::NotDispatched => self.s.riders_not_dispatched += 1,
            _ => {}
        }
        if self.full {
            self.riders[rider.id as usize].outcome = outcome;
            self.events.push(TraceEvent::RiderLeft {
                time: self.now,
                rider: rider.id,
                outcome,
            });
        }
    }

    /// Runs dispatch attempt `attempt`; `Next` means the rider still waits.
    fn attempt(&mut self, rider: PendingRider, attempt: u32) -> Result<Step, SimError> {
        self.s.max_attempts = self.s.max_attempts.max(attempt);
        let len = self.queue.len();
        let decision = self.dispatcher.target(rider.dest, attempt, len, &mut self.rng)?;
        let last = attempt == self.e.patience();
        let give_up = |eng: &mut Self| {
            if last {
                eng.rider_left(rider, RiderOutcome::Cancelled);
                Step::Done
            } else {
                Step::Next
            }
        };
        match decision {
            DispatchDecision::Withhold => {
                self.rider_left(rider, RiderOutcome::NotDispatched);
                Ok(Step::Done)
            }
            DispatchDecision::Skip => {
                if self.full {
                    self.riders[rider.id as usize].attempts.push(OfferRecord {
                        time: self.now,
                        attempt,
                        position: None,
                        driver: None,
                        accepted: false,
                    });
                    self.events.push(TraceEvent::EmptyAttempt {
                        time: self.now,
                        rider: rider.id,
                        attempt,
                    });
                }
                Ok(give_up(self))
            }
            DispatchDecision::Offer(rank) => {
                let d = *self.queue.get(rank).expect("dispatch within queue");
                let q = rank as f64 / self.k;
                let total = len as f64 / self.k;
                let rule = if d.tagged { self.deviant.as_ref() } else { None }.unwrap_or(&self.strategy);
                let (p, leave, rejoin) = (rule.alpha(q, total, rider.dest), rule.gamma(q, total), rule.beta(q, total));
                let accepted = self.chance(p);
                if self.full {
                    self.riders[rider.id as usize].attempts.push(OfferRecord {
                        time: self.now,
                        attempt,
                        position: Some(q),
                        driver: Some(d.id),
                        accepted,
                    });
                    self.drivers[d.id as usize].positions.push((self.now, q));
                    self.events.push(TraceEvent::Offer {
                        time: self.now,
                        rider: rider.id,
                        attempt,
                        driver: d.id,
                        position: q,
                        accepted,
                    });
                }
                if accepted {
                    self.queue.remove(rank);
                    let wait = self.now - d.arrived_at;
                    let earned = self.e.w(rider.dest);
                    let payoff = earned - self.e.driver_cost() * wait;
                    self.s.total_departed_with_trip += 1;
                    if self.in_window(self.now) {
                        self.s.completions[rider.dest - 1] += 1;
                        self.s.window_earnings += earned;
                    }
                    self.record_payoff(&d, payoff, Some(wait));
                    self.driver_left(d.id, Some(rider.dest), payoff);
                    self.rider_left(rider, RiderOutcome::Served);
                    return Ok(Step::Done);
                }
                if leave + rejoin > 0.0 {
                    let r: f64 = self.rng.random();
                    if r < leave {
                        self.queue.remove(rank);
                        let wait = self.now - d.arrived_at;
                        let payoff = -self.e.driver_cost() * wait;
                        self.s.total_departed_empty += 1;
                        self.record_payoff(&d, payoff, None);
                        self.driver_left(d.id, None, payoff);
                    } else if r < leave + rejoin {
                        let mut moved = self.queue.remove(rank).expect("driver present");
                        moved.joined_at = self.now;
                        self.queue.push_back(moved);
                        self.s.total_rejoined += 1;
                        if self.full {
                            self.events.push(TraceEvent::DriverRejoin {
                                time: self.now,
                                driver: d.id,
                            });
                        }
                    }
                }
                Ok(give_up(self))
            }
        }
    }

    fn driver_left(&mut self, id: u64, destination: Option<usize>, payoff: f64) {
        if self.full {
            let rec = &mut self.drivers[id as usize];
            rec.departed_at = Some(self.now);
            rec.destination = destination;
            rec.payoff = Some(payoff);
            self.events.push(TraceEvent::DriverDeparture {
                time: self.now,
                driver: id,
                destination,
                payoff,
            });
        }
    }

    fn run(mut self) -> Result<SimulationTrace, SimError> {
        let lambda = self.e.driver_rate() * self.k;
        let t0 = self.first_gap(lambda);
        self.schedule(t0, Class::Driver, Kind::Driver);
        for i in 1..=self.e.len() {
            let rate = self.e.mu(i) * self.k;
            let t = self.first_gap(rate);
            self.schedule(t, Class::Rider, Kind::Rider(i));
        }
        // after the horizon keep running until the cohort has left, within limits
        let hard_stop = 2.0 * self.cfg.horizon;
        while let Some(ev) = self.heap.pop() {
            if ev.time > self.cfg.horizon && (self.cohort_in_queue == 0 || ev.time > hard_stop) {
                self.advance(ev.time.min(hard_stop));
                break;
            }
            self.advance(ev.time);
            match ev.kind {
                Kind::Driver => {
                    self.driver_arrives();
                    let t = self.now + self.gap(lambda);
                    self.schedule(t, Class::Driver, Kind::Driver);
                }
                Kind::Rider(i) => {
                    self.rider_arrives(i)?;
                    let rate = self.e.mu(i) * self.k;
                    let t = self.now + self.gap(rate);
                    self.schedule(t, Class::Rider, Kind::Rider(i));
                }
                Kind::Attempt { slot, attempt } => {
                    let rider = self.pending[slot].expect("pending rider");
                    if let Step::Next = self.attempt(rider, attempt)? {
                        self.schedule(
                            self.now + self.cfg.offer_latency,
                            Class::Attempt,
                            Kind::Attempt {
                                slot,
                                attempt: attempt + 1,
                            },
                        );
                    } else {
                        self.pending[slot] = None;
                        self.free_slots.push(slot);
                    }
                }
            }
        }
        self.s.end_time = self.now;
        self.s.final_queue = self.queue.len() as u64;
        self.s.cohort_censored = self.queue.iter().filter(|d| d.in_cohort && !d.tagged).count() as u64;
        Ok(SimulationTrace {
            mechanism: self.dispatcher.mechanism().name().to_string(),
            seed: self.cfg.seed,
            scale: self.cfg.scale,
            horizon: self.cfg.horizon,
            warmup: self.cfg.warmup,
            patience: self.e.patience(),
            summary: self.s,
            riders: self.riders,
            drivers: self.drivers,
            events: self.events,
        })
    }
}

/// Runs one replication. Deterministic given the config's seed.
pub fn simulate(
    e: &Economy<f64>,
    mechanism: Mechanism,
    layout: Option<&BinLayout<f64>>,
    strategy: &DriverStrategy,
    cfg: &SimConfig,
) -> Result<SimulationTrace, SimError> {
    cfg.validate()?;
    let k = f64::from(cfg.scale);
    let dispatcher = Dispatcher::new(mechanism, e, layout, k)?;
    let band = 0.5 / k;
    let full = cfg.trace_level == TraceLevel::Full;
    let engine = Engine {
        e,
        cfg,
        strategy: strategy.clone().with_band(band),
        deviant: cfg.deviation.map(|d| DriverStrategy::cutoff(d.cutoff).with_band(band)),
        dispatcher,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        heap: BinaryHeap::new(),
        seq: 0,
        now: 0.0,
        k,
        queue: DriverQueue::default(),
        next_driver: 0,
        next_rider: 0,
        pending: Vec::new(),
        free_slots: Vec::new(),
        cohort_in_queue: 0,
        next_sample: 0.0,
        sample_every: cfg.sample_interval.unwrap_or(cfg.horizon / 1000.0),
        full,
        s: TraceSummary::new(e.len(), cfg.horizon - cfg.warmup),
        riders: Vec::new(),
        drivers: Vec::new(),
        events: Vec::new(),
    };
    engine.run()
}

/// Runs the equilibrium strategy of `mechanism` for every seed, in parallel.
pub fn run_replications(
    e: &Economy<f64>,
    mechanism: Mechanism,
    layout: Option<&BinLayout<f64>>,
    cfg: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<SimulationTrace>, SimError> {
    let strategy = equilibrium_strategy(mechanism, e, layout)?;
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SimConfig { seed, ..cfg.clone() };
            simulate(e, mechanism, layout, &strategy, &cfg)
        })
        .collect()
}

/// Empirical outcome plus the caveats of its estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalOutcome {
    pub outcome: EquilibriumOutcome<f64>,
    /// No trip was completed inside the window.
    pub zero_throughput: bool,
    /// Cohort drivers excluded because they never left the queue.
    pub censored: u64,
}

/// Reduces a trace to the analyzers' outcome in mass units.
pub fn empirical_outcome(trace: &SimulationTrace, e: &Economy<f64>, cfg: &SimConfig) -> EmpiricalOutcome {
    let s = &trace.summary;
    let k = f64::from(cfg.scale);
    let per_time = s.window * k;
    let rates: Vec<f64> = s.completions.iter().map(|&n| n as f64 / per_time).collect();
    let throughput: f64 = rates.iter().sum();
    let queue_length = s.queue_integral / per_time;
    let net_revenue = s.window_earnings / per_time - e.platform_cost() * queue_length;
    let nan_if_empty = |n: u64, v: f64| if n == 0 { f64::NAN } else { v };
    let mechanism = trace.mechanism.parse().unwrap_or(Mechanism::DirectFifo);
    EmpiricalOutcome {
        outcome: EquilibriumOutcome {
            mechanism,
            throughput,
            net_revenue,
            queue_length,
            wait_min: nan_if_empty(s.wait_count, s.wait_min),
            wait_max: nan_if_empty(s.wait_count, s.wait_max),
            wait_avg_arrived: nan_if_empty(s.payoff.count, s.wait_sum / s.payoff.count as f64),
            wait_avg_joined: nan_if_empty(s.wait_count, s.wait_sum / s.wait_count as f64),
            payoff_mean: nan_if_empty(s.payoff.count, s.payoff.mean),
            payoff_variance: nan_if_empty(s.payoff.count, s.payoff.variance()),
            completed_rates: rates,
        },
        zero_throughput: s.completions.iter().all(|&n| n == 0),
        censored: s.cohort_censored,
    }
}
