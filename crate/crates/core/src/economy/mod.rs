//! Market primitives: destinations, the driver arrival process, waiting costs
//! and rider patience.
//!
//! An [`Economy`] can only be obtained through [`validate_economy`], which
//! sorts destinations by strictly decreasing net earnings, merges destinations
//! with equal earnings and drops trips nobody would accept (negative net
//! earnings). Every analyzer relies on that ordering.

mod text;

pub use text::{parse_economy_text, write_economy_text, FormatError};

use thiserror::Error;

use crate::scalar::{approx_eq, definitely_gt, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconomyError {
    #[error("economy has no destinations")]
    Empty,
    #[error("no destination has nonnegative net earnings")]
    NoAcceptableTrips,
    #[error("destination {index}: demand rate must be positive and finite, got {value}")]
    BadDemandRate { index: usize, value: f64 },
    #[error("destination {index}: net earnings must be finite, got {value}")]
    BadEarnings { index: usize, value: f64 },
    #[error("driver arrival rate must be positive and finite, got {0}")]
    BadDriverRate(f64),
    #[error("driver waiting cost must be positive and finite, got {0}")]
    BadDriverCost(f64),
    #[error("platform waiting cost {c0} must lie in [0, {c}]")]
    BadPlatformCost { c0: f64, c: f64 },
    #[error("rider patience must be at least 1")]
    ZeroPatience,
}

/// One trip type, identified by its 1-based rank in decreasing earnings order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Destination<S> {
    pub index: usize,
    /// Rider arrival rate `mu_i`.
    pub demand_rate: S,
    /// Net earnings `w_i` of a completed trip.
    pub net_earnings: S,
}

/// Unvalidated destination row, in any order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestinationRecord<S> {
    pub demand_rate: S,
    pub net_earnings: S,
}

/// Unvalidated economy as read from a file or assembled by the ingest pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomyRecord<S> {
    pub destinations: Vec<DestinationRecord<S>>,
    pub driver_rate: S,
    pub driver_cost: S,
    pub platform_cost: S,
    pub patience: u32,
}

/// A validated economy.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy<S> {
    destinations: Vec<Destination<S>>,
    driver_rate: S,
    driver_cost: S,
    platform_cost: S,
    patience: u32,
    degenerate: bool,
}

/// Raw statistics of a trip type, used to derive its net earnings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripStats<S> {
    /// Trip duration including pickup, in time units.
    pub duration: S,
    /// Driver pay per unit of trip time.
    pub earnings_rate: S,
    /// Minimum time an empty driver needs to reach a location paying `c`.
    pub min_relocation: S,
}

impl<S: Scalar> TripStats<S> {
    pub fn is_valid(&self) -> bool {
        self.duration.is_finite()
            && self.earnings_rate.is_finite()
            && self.min_relocation.is_finite()
            && self.duration > S::zero()
            && self.earnings_rate >= S::zero()
            && self.min_relocation >= S::zero()
    }
}

/// Net earnings of a trip relative to relocating without a rider:
/// `t (p - c) + t0 c`. Can be negative; validation drops such trips.
pub fn net_earnings<S: Scalar>(stats: &TripStats<S>, cost: S) -> S {
    debug_assert!(stats.is_valid(), "invalid trip stats {stats:?}");
    stats.duration * (stats.earnings_rate - cost) + stats.min_relocation * cost
}

fn as_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn validate_economy<S: Scalar>(raw: &EconomyRecord<S>) -> Result<Economy<S>, EconomyError> {
    if raw.destinations.is_empty() {
        return Err(EconomyError::Empty);
    }
    let lambda = raw.driver_rate;
    if !(lambda.is_finite() && lambda > S::zero()) {
        return Err(EconomyError::BadDriverRate(as_f64(lambda)));
    }
    let c = raw.driver_cost;
    if !(c.is_finite() && c > S::zero()) {
        return Err(EconomyError::BadDriverCost(as_f64(c)));
    }
    let c0 = raw.platform_cost;
    if !(c0.is_finite() && c0 >= S::zero() && c0 <= c) {
        return Err(EconomyError::BadPlatformCost {
            c0: as_f64(c0),
            c: as_f64(c),
        });
    }
    if raw.patience < 1 {
        return Err(EconomyError::ZeroPatience);
    }
    for (i, d) in raw.destinations.iter().enumerate() {
        if !(d.demand_rate.is_finite() && d.demand_rate > S::zero()) {
            return Err(EconomyError::BadDemandRate {
                index: i + 1,
                value: as_f64(d.demand_rate),
            });
        }
        if !d.net_earnings.is_finite() {
            return Err(EconomyError::BadEarnings {
                index: i + 1,
                value: as_f64(d.net_earnings),
            });
        }
    }

    let mut kept: Vec<DestinationRecord<S>> = raw
        .destinations
        .iter()
        .copied()
        .filter(|d| d.net_earnings >= S::zero())
        .collect();
    if kept.is_empty() {
        return Err(EconomyError::NoAcceptableTrips);
    }
    // NaN was rejected above, so the order is total.
    kept.sort_by(|a, b| b.net_earnings.partial_cmp(&a.net_earnings).expect("finite earnings"));

    let mut merged: Vec<DestinationRecord<S>> = Vec::with_capacity(kept.len());
    for d in kept {
        match merged.last_mut() {
            Some(last) if approx_eq(last.net_earnings, d.net_earnings) => {
                last.demand_rate += d.demand_rate;
            }
            _ => merged.push(d),
        }
    }

    let destinations: Vec<Destination<S>> = merged
        .into_iter()
        .enumerate()
        .map(|(i, d)| Destination {
            index: i + 1,
            demand_rate: d.demand_rate,
            net_earnings: d.net_earnings,
        })
        .collect();

    let mut prefix = S::zero();
    let mut degenerate = false;
    for d in &destinations {
        prefix += d.demand_rate;
        if approx_eq(lambda, prefix) {
            degenerate = true;
        }
    }

    Ok(Economy {
        destinations,
        driver_rate: lambda,
        driver_cost: c,
        platform_cost: c0,
        patience: raw.patience,
        degenerate,
    })
}

impl<S: Scalar> Economy<S> {
    pub fn destinations(&self) -> &[Destination<S>] {
        &self.destinations
    }

    /// Number of destinations `L`.
    pub fn len(&self) -> usize {
        self.destinations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.destinations.is_empty()
    }

    /// Demand rate of destination `i` (1-based).
    pub fn mu(&self, i: usize) -> S {
        self.destinations[i - 1].demand_rate
    }

    /// Net earnings of destination `i` (1-based).
    pub fn w(&self, i: usize) -> S {
        self.destinations[i - 1].net_earnings
    }

    pub fn demand_rates(&self) -> Vec<S> {
        self.destinations.iter().map(|d| d.demand_rate).collect()
    }

    pub fn earnings(&self) -> Vec<S> {
        self.destinations.iter().map(|d| d.net_earnings).collect()
    }

    pub fn driver_rate(&self) -> S {
        self.driver_rate
    }

    pub fn driver_cost(&self) -> S {
        self.driver_cost
    }

    pub fn platform_cost(&self) -> S {
        self.platform_cost
    }

    pub fn patience(&self) -> u32 {
        self.patience
    }

    /// `lambda` equals a prefix sum of demand rates (within tolerance). The
    /// analyzers then pick the shorter of the two candidate queue lengths.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `sum_{i <= j} mu_i`, with `j` clamped to `L`.
    pub fn demand_through(&self, j: usize) -> S {
        self.destinations
            .iter()
            .take(j)
            .map(|d| d.demand_rate)
            .sum()
    }

    pub fn total_demand(&self) -> S {
        self.demand_through(self.len())
    }

    /// More drivers arrive than there are riders to serve.
    pub fn is_over_supplied(&self) -> bool {
        definitely_gt(self.driver_rate, self.total_demand())
    }

    /// Returns the record this economy was validated from, in canonical order.
    pub fn to_record(&self) -> EconomyRecord<S> {
        EconomyRecord {
            destinations: self
                .destinations
                .iter()
                .map(|d| DestinationRecord {
                    demand_rate: d.demand_rate,
                    net_earnings: d.net_earnings,
                })
                .collect(),
            driver_rate: self.driver_rate,
            driver_cost: self.driver_cost,
            platform_cost: self.platform_cost,
            patience: self.patience,
        }
    }

    /// Same economy with a different driver arrival rate.
    pub fn with_driver_rate(&self, lambda: S) -> Result<Self, EconomyError> {
        let mut rec = self.to_record();
        rec.driver_rate = lambda;
        validate_economy(&rec)
    }

    /// Same economy with a different rider patience.
    pub fn with_patience(&self, patience: u32) -> Result<Self, EconomyError> {
        let mut rec = self.to_record();
        rec.patience = patience;
        validate_economy(&rec)
    }
}

/// Lowest-earning destination that is (partially) served in the first best:
/// `J = max { i : lambda > sum_{j < i} mu_j }`.
pub fn max_completed_index<S: Scalar>(e: &Economy<S>) -> usize {
    let lambda = e.driver_rate();
    let mut prefix = S::zero();
    let mut j = 1;
    for (i, d) in e.destinations().iter().enumerate() {
        if i + 1 == e.len() {
            break;
        }
        prefix += d.demand_rate;
        if definitely_gt(lambda, prefix) {
            j = i + 2;
        } else {
            break;
        }
    }
    j
}

/// Rate at which destination-`J` trips are served: `min { mu_J, lambda - sum_{j<J} mu_j }`.
pub fn fulfilled_rate_at_j<S: Scalar>(e: &Economy<S>) -> S {
    let j = max_completed_index(e);
    let residual = e.driver_rate() - e.demand_through(j - 1);
    e.mu(j).min(residual)
}
