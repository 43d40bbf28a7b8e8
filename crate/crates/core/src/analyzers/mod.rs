//! Closed-form steady-state equilibrium outcomes of the five dispatch
//! mechanisms.

mod curve;
pub mod truncexp;

pub use curve::{direct_fifo_continuation, randomized_fifo_continuation, ContinuationPayoffCurve};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::economy::{fulfilled_rate_at_j, max_completed_index, Economy};
use crate::partition::{validate_layout, BinLayout, PartitionError};
use crate::scalar::{approx_eq, Scalar};

use truncexp::{crossing_time, truncated_cost_variance, truncated_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    FirstBest,
    StrictFifo,
    DirectFifo,
    RandomDispatch,
    RandomizedFifo,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::FirstBest,
        Mechanism::StrictFifo,
        Mechanism::DirectFifo,
        Mechanism::RandomDispatch,
        Mechanism::RandomizedFifo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::FirstBest => "first-best",
            Mechanism::StrictFifo => "strict",
            Mechanism::DirectFifo => "direct",
            Mechanism::RandomDispatch => "random",
            Mechanism::RandomizedFifo => "randomized",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown mechanism `{0}`; expected one of first-best, strict, direct, random, randomized")]
pub struct UnknownMechanism(pub String);

impl FromStr for Mechanism {
    type Err = UnknownMechanism;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMechanism(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("layout rejected: {0}")]
    Layout(String),
}

/// Steady-state metrics of a mechanism in equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumOutcome<S> {
    pub mechanism: Mechanism,
    /// Completed trips per unit time.
    pub throughput: S,
    /// Trip earnings per unit time minus the platform's queue cost.
    pub net_revenue: S,
    /// Steady-state queue mass.
    pub queue_length: S,
    pub wait_min: S,
    /// `+inf` when waiting is unbounded.
    pub wait_max: S,
    /// Mean queue time over every arriving driver.
    pub wait_avg_arrived: S,
    /// Mean queue time over drivers who joined.
    pub wait_avg_joined: S,
    /// Mean payoff of an arriving driver.
    pub payoff_mean: S,
    pub payoff_variance: S,
    /// Completion rate per destination.
    pub completed_rates: Vec<S>,
}

impl<S: Scalar> EquilibriumOutcome<S> {
    pub fn payoff_sd(&self) -> S {
        self.payoff_variance.max(S::zero()).sqrt()
    }
}

fn le_tol<S: Scalar>(a: S, b: S) -> bool {
    a <= b || approx_eq(a, b)
}

/// Queue positions `n_i` from which a driver accepts destination `i`:
/// `n_i = sum_{j<i} (w_j - w_i) mu_j / c`.
pub fn thresholds<S: Scalar>(e: &Economy<S>) -> Vec<S> {
    let c = e.driver_cost();
    (1..=e.len())
        .map(|i| {
            let wi = e.w(i);
            (1..i).map(|j| (e.w(j) - wi) * e.mu(j)).sum::<S>() / c
        })
        .collect()
}

/// Longest queue a driver is willing to join: `sum_i w_i mu_i / c`.
pub fn qbar<S: Scalar>(e: &Economy<S>) -> S {
    e.destinations()
        .iter()
        .map(|d| d.net_earnings * d.demand_rate)
        .sum::<S>()
        / e.driver_cost()
}

/// Completion rates of the first best: destinations `1..J`, the last one
/// partially.
fn first_best_rates<S: Scalar>(e: &Economy<S>) -> Vec<S> {
    let j = max_completed_index(e);
    let mut rates = vec![S::zero(); e.len()];
    for i in 1..j {
        rates[i - 1] = e.mu(i);
    }
    rates[j - 1] = fulfilled_rate_at_j(e);
    rates
}

fn gross<S: Scalar>(e: &Economy<S>, rates: &[S]) -> S {
    rates.iter().zip(e.destinations()).map(|(r, d)| *r * d.net_earnings).sum()
}

pub fn first_best<S: Scalar>(e: &Economy<S>) -> EquilibriumOutcome<S> {
    let lambda = e.driver_rate();
    let rates = first_best_rates(e);
    let throughput: S = rates.iter().copied().sum();
    let revenue = gross(e, &rates);
    let u = revenue / lambda;
    // drivers sent away empty earn zero
    let idle = (lambda - throughput).max(S::zero());
    let spread: S = rates
        .iter()
        .zip(e.destinations())
        .map(|(r, d)| *r * (d.net_earnings - u).powi(2))
        .sum::<S>()
        + idle * u * u;
    EquilibriumOutcome {
        mechanism: Mechanism::FirstBest,
        throughput,
        net_revenue: revenue,
        queue_length: S::zero(),
        wait_min: S::zero(),
        wait_max: S::zero(),
        wait_avg_arrived: S::zero(),
        wait_avg_joined: S::zero(),
        payoff_mean: u,
        payoff_variance: spread / lambda,
        completed_rates: rates,
    }
}

pub fn direct_fifo<S: Scalar>(e: &Economy<S>) -> EquilibriumOutcome<S> {
    let lambda = e.driver_rate();
    let c = e.driver_cost();
    let rates = first_best_rates(e);
    let throughput: S = rates.iter().copied().sum();
    let j = max_completed_index(e);
    let over = e.is_over_supplied();
    let q = if over { qbar(e) } else { thresholds(e)[j - 1] };
    let (u, wait_min, wait_max, joined) = if over {
        (S::zero(), e.w(e.len()) / c, e.w(1) / c, e.total_demand())
    } else {
        (e.w(j), S::zero(), (e.w(1) - e.w(j)) / c, lambda)
    };
    EquilibriumOutcome {
        mechanism: Mechanism::DirectFifo,
        throughput,
        net_revenue: gross(e, &rates) - e.platform_cost() * q,
        queue_length: q,
        wait_min,
        wait_max,
        wait_avg_arrived: q / lambda,
        wait_avg_joined: q / joined,
        payoff_mean: u,
        payoff_variance: S::zero(),
        completed_rates: rates,
    }
}

/// Lowest destination whose threshold lies within patience `P`.
pub fn patience_index<S: Scalar>(e: &Economy<S>) -> usize {
    let p = S::lit(f64::from(e.patience()));
    let n = thresholds(e);
    n.iter().rposition(|&ni| le_tol(ni, p)).map_or(1, |k| k + 1)
}

/// Strict FIFO reaches every destination the first best serves exactly when
/// `P >= n_J`.
pub fn strict_reaches_first_best<S: Scalar>(e: &Economy<S>) -> bool {
    let j = max_completed_index(e);
    le_tol(thresholds(e)[j - 1], S::lit(f64::from(e.patience())))
}

pub fn strict_fifo<S: Scalar>(e: &Economy<S>) -> EquilibriumOutcome<S> {
    if strict_reaches_first_best(e) {
        return EquilibriumOutcome {
            mechanism: Mechanism::StrictFifo,
            ..direct_fifo(e)
        };
    }
    let lambda = e.driver_rate();
    let c = e.driver_cost();
    let jp = patience_index(e);
    let mut rates = vec![S::zero(); e.len()];
    for i in 1..=jp {
        rates[i - 1] = e.mu(i);
    }
    let throughput = e.demand_through(jp);
    let revenue = gross(e, &rates);
    let q = revenue / c;
    EquilibriumOutcome {
        mechanism: Mechanism::StrictFifo,
        throughput,
        net_revenue: revenue - e.platform_cost() * q,
        queue_length: q,
        wait_min: e.w(jp) / c,
        wait_max: e.w(1) / c,
        wait_avg_arrived: q / lambda,
        wait_avg_joined: q / throughput,
        payoff_mean: S::zero(),
        payoff_variance: S::zero(),
        completed_rates: rates,
    }
}

/// Mean and variance of completed-trip earnings, all trips weighted by `mu`.
fn trip_moments<S: Scalar>(e: &Economy<S>) -> (S, S) {
    let total = e.total_demand();
    let mean = qbar(e) * e.driver_cost() / total;
    let var = e
        .destinations()
        .iter()
        .map(|d| (d.net_earnings - mean).powi(2) * d.demand_rate)
        .sum::<S>()
        / total;
    (mean, var)
}

/// Payoff variance of uniform random dispatch when under-supplied, as the
/// closed form prints it: `(wbar - w_J)^2 + sum_{i<J} (w_i - wbar)^2 mu_i / lambda`
/// with `wbar` the mean earnings per arriving driver.
fn random_under_supplied_variance<S: Scalar>(e: &Economy<S>) -> S {
    let lambda = e.driver_rate();
    let j = max_completed_index(e);
    let wj = e.w(j);
    let wbar = gross(e, &first_best_rates(e)) / lambda;
    let spread: S = (1..j).map(|i| (e.w(i) - wbar).powi(2) * e.mu(i)).sum();
    (wbar - wj).powi(2) + spread / lambda
}

pub fn random_dispatch<S: Scalar>(e: &Economy<S>) -> EquilibriumOutcome<S> {
    let base = direct_fifo(e);
    let variance = if e.is_over_supplied() {
        let (wbar, var_trip) = trip_moments(e);
        (wbar * wbar + var_trip) * e.total_demand() / e.driver_rate()
    } else {
        random_under_supplied_variance(e)
    };
    EquilibriumOutcome {
        mechanism: Mechanism::RandomDispatch,
        wait_min: S::zero(),
        wait_max: S::infinity(),
        payoff_variance: variance,
        ..base
    }
}

/// Per-bin payoff statistics of randomized FIFO, from the tail bin forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinPayoff<S> {
    /// Share of arriving drivers dispatched from this bin.
    pub weight: S,
    pub mean: S,
    pub variance: S,
}

/// Breakdown behind [`randomized_fifo`] for `m > 1`: one entry per bin plus
/// the share of drivers who never join.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBreakdown<S> {
    pub balk_weight: S,
    pub bins: Vec<BinPayoff<S>>,
    /// Longest possible wait, `+inf` unless the first group is a singleton.
    pub wait_max: S,
}

fn check_layout<S: Scalar>(e: &Economy<S>, layout: &BinLayout<S>) -> Result<(), AnalysisError> {
    let report = validate_layout(e, layout);
    if report.passed() {
        return Ok(());
    }
    let msg: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    Err(AnalysisError::Layout(msg.join("; ")))
}

/// Payoff mixture over bins for a layout with at least two bins.
pub fn randomized_fifo_mixture<S: Scalar>(
    e: &Economy<S>,
    layout: &BinLayout<S>,
) -> Result<MixtureBreakdown<S>, AnalysisError> {
    check_layout(e, layout)?;
    let m = layout.len();
    if m < 2 {
        return Err(AnalysisError::Layout("mixture needs at least two bins".into()));
    }
    let lambda = e.driver_rate();
    let c = e.driver_cost();
    let groups = layout.partition().groups();
    let j = max_completed_index(e);
    let mu_j = fulfilled_rate_at_j(e);
    let base = direct_fifo(e);
    let (t, q, u) = (base.throughput, base.queue_length, base.payoff_mean);

    let share = |g: &[usize]| -> S { g.iter().map(|&i| e.mu(i)).sum() };
    let mean_of = |g: &[usize]| -> S { g.iter().map(|&i| e.w(i) * e.mu(i)).sum::<S>() / share(g) };
    let spread_of = |g: &[usize], mean: S| -> S {
        g.iter().map(|&i| (e.w(i) - mean).powi(2) * e.mu(i)).sum::<S>() / share(g)
    };
    // cumulative demand of groups 1..=k
    let mut cum = Vec::with_capacity(m);
    let mut acc = S::zero();
    for g in groups {
        acc += share(g);
        cum.push(acc);
    }

    let mut means = vec![S::zero(); m];
    let mut vars = vec![S::zero(); m];

    // last bin: destination J is only partly served
    let last = &groups[m - 1];
    let (lb, ub) = layout.bin(m);
    let tail = (q - ub) / t;
    let mut nu;
    if last.len() == 1 {
        means[m - 1] = u;
        nu = tail;
    } else {
        let served: Vec<(usize, S)> = last.iter().map(|&i| (i, if i == j { mu_j } else { e.mu(i) })).collect();
        let s = served.iter().map(|&(_, r)| r).sum::<S>();
        let wbar = served.iter().map(|&(i, r)| e.w(i) * r).sum::<S>() / s;
        let trip_var = served.iter().map(|&(i, r)| (e.w(i) - wbar).powi(2) * r).sum::<S>() / s;
        let eta = s / (ub - lb);
        let zeta = s / t;
        means[m - 1] = wbar - c * (tail + truncated_mean(eta, zeta));
        vars[m - 1] = trip_var + truncated_cost_variance(c, eta, zeta);
        nu = tail + crossing_time(eta, zeta);
    }

    // middle bins, back to front
    for k in (1..m - 1).rev() {
        let g = &groups[k];
        let (lb, ub) = layout.bin(k + 1);
        let gap = (layout.bin(k + 2).0 - ub) / cum[k];
        if g.len() == 1 {
            means[k] = e.w(g[0]) - c * (nu + gap);
            nu += gap;
        } else {
            let s = share(g);
            let wbar = mean_of(g);
            let eta = s / (ub - lb);
            let zeta = s / cum[k];
            means[k] = wbar - c * (nu + gap + truncated_mean(eta, zeta));
            vars[k] = spread_of(g, wbar) + truncated_cost_variance(c, eta, zeta);
            nu += gap + crossing_time(eta, zeta);
        }
    }

    // first bin: nobody leaves it undispatched
    let g = &groups[0];
    let (lb, ub) = layout.bin(1);
    let gap = (layout.bin(2).0 - ub) / cum[0];
    let wait_max = if g.len() == 1 {
        means[0] = e.w(1) - c * (nu + gap);
        nu + gap
    } else {
        let eta = cum[0] / (ub - lb);
        let wbar = mean_of(g);
        means[0] = wbar - c * (S::one() / eta + nu + gap);
        vars[0] = spread_of(g, wbar) + (c / eta).powi(2);
        S::infinity()
    };

    let balk_weight = (lambda - e.total_demand()).max(S::zero()) / lambda;
    let bins = (0..m)
        .map(|k| {
            let weight = if k + 1 < m {
                share(&groups[k]) / lambda
            } else {
                (lambda - cum[m - 2]).min(share(&groups[m - 1])) / lambda
            };
            BinPayoff {
                weight,
                mean: means[k],
                variance: vars[k],
            }
        })
        .collect();
    Ok(MixtureBreakdown {
        balk_weight,
        bins,
        wait_max,
    })
}

pub fn randomized_fifo<S: Scalar>(e: &Economy<S>, layout: &BinLayout<S>) -> Result<EquilibriumOutcome<S>, AnalysisError> {
    check_layout(e, layout)?;
    let base = direct_fifo(e);
    let p = layout.partition();
    if p.is_all_singletons() {
        return Ok(EquilibriumOutcome {
            mechanism: Mechanism::RandomizedFifo,
            ..base
        });
    }
    let c = e.driver_cost();
    let u = base.payoff_mean;
    let (wait_min, wait_max, variance) = if p.len() == 1 {
        if e.is_over_supplied() {
            // every trip goes uniformly to positions [0, n_L]
            let (wbar, var_trip) = trip_moments(e);
            let wl = e.w(e.len());
            let v = ((wbar - wl).powi(2) + var_trip) * e.total_demand() / e.driver_rate();
            (wl / c, S::infinity(), v)
        } else {
            (S::zero(), S::infinity(), random_under_supplied_variance(e))
        }
    } else {
        let mix = randomized_fifo_mixture(e, layout)?;
        let v = mix
            .bins
            .iter()
            .map(|b| b.weight * (b.variance + (b.mean - u).powi(2)))
            .sum::<S>()
            + mix.balk_weight * u * u;
        let n_j = thresholds(e)[max_completed_index(e) - 1];
        ((base.queue_length - n_j) / base.throughput, mix.wait_max, v)
    };
    Ok(EquilibriumOutcome {
        mechanism: Mechanism::RandomizedFifo,
        wait_min,
        wait_max,
        payoff_variance: variance,
        ..base
    })
}

/// Runs one mechanism. Randomized FIFO needs a layout; the others ignore it.
pub fn analyze<S: Scalar>(
    e: &Economy<S>,
    mechanism: Mechanism,
    layout: Option<&BinLayout<S>>,
) -> Result<EquilibriumOutcome<S>, AnalysisError> {
    Ok(match mechanism {
        Mechanism::FirstBest => first_best(e),
        Mechanism::StrictFifo => strict_fifo(e),
        Mechanism::DirectFifo => direct_fifo(e),
        Mechanism::RandomDispatch => random_dispatch(e),
        Mechanism::RandomizedFifo => {
            let layout = layout.ok_or_else(|| AnalysisError::Layout("randomized FIFO needs a bin layout".into()))?;
            randomized_fifo(e, layout)?
        }
    })
}
