//! Executable driver strategies `(alpha, beta, gamma)`.
//!
//! Positions `q` and queue lengths `Q` are in mass units. The equilibrium
//! strategies hold the queue at its equilibrium length with a bang-bang rule:
//! the marginal action is taken with certainty above the target, never below
//! it, and with the equilibrium mixing probability at the target itself.

use thiserror::Error;

use crate::analyzers::{direct_fifo, patience_index, qbar, strict_reaches_first_best, thresholds, Mechanism};
use crate::economy::{fulfilled_rate_at_j, max_completed_index, Economy};
use crate::partition::BinLayout;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("randomized FIFO needs a bin layout")]
    MissingLayout,
    #[error("first best has no queue to play in")]
    NoQueue,
}

/// `q >= x` up to rounding in the mass/count conversion.
pub(crate) fn mass_ge(q: f64, x: f64) -> bool {
    q >= x - 1e-9 * x.abs().max(1.0)
}

/// Randomization pinned to a target queue length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub queue_length: f64,
    /// Probability of the marginal action when the queue is at the target.
    pub at_target: f64,
}

impl Target {
    /// Probability of the marginal action at queue length `q`.
    fn prob(&self, q: f64, band: f64) -> f64 {
        if q > self.queue_length + band {
            1.0
        } else if q < self.queue_length - band {
            0.0
        } else {
            self.at_target
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AcceptRule {
    /// Accept every offer.
    All,
    /// Accept destination `i` from position `n_i` on.
    Thresholds(Vec<f64>),
    /// Accept destinations `1..=cutoff`; the last one only with the target rule
    /// when `marginal` is set.
    Cutoff { cutoff: usize, marginal: Option<Target> },
    /// Inside bin `k` accept the top `k` groups; `group_end[k]` is the last
    /// destination of group `k`. The marginal destination in the last bin
    /// follows the target rule.
    Bins {
        lower: Vec<f64>,
        group_end: Vec<usize>,
        marginal: Option<(usize, Target)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum JoinRule {
    Always,
    /// Join below the target length; at the target join with `at_target`.
    Target(Target),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverStrategy {
    pub accept: AcceptRule,
    pub join: JoinRule,
    /// Probability of moving to the tail after a decline, everywhere.
    pub rejoin: f64,
    /// Probability of leaving after a decline, everywhere.
    pub leave_after_decline: f64,
    /// Half-width of the "at target" band, in mass units. The simulator sets
    /// it to half a driver.
    pub band: f64,
}

impl DriverStrategy {
    fn new(accept: AcceptRule, join: JoinRule) -> Self {
        Self {
            accept,
            join,
            rejoin: 0.0,
            leave_after_decline: 0.0,
            band: 0.0,
        }
    }

    /// Accept destinations `1..=cutoff` anywhere and always join.
    pub fn cutoff(cutoff: usize) -> Self {
        Self::new(AcceptRule::Cutoff { cutoff, marginal: None }, JoinRule::Always)
    }

    pub fn with_band(mut self, band: f64) -> Self {
        self.band = band;
        self
    }

    /// `alpha(q, Q, i)`: probability of accepting a trip to `i` at position `q`.
    pub fn alpha(&self, q: f64, queue: f64, i: usize) -> f64 {
        match &self.accept {
            AcceptRule::All => 1.0,
            AcceptRule::Thresholds(n) => f64::from(u8::from(mass_ge(q, n[i - 1]))),
            AcceptRule::Cutoff { cutoff, marginal } => {
                if i < *cutoff {
                    1.0
                } else if i == *cutoff {
                    marginal.map_or(1.0, |t| t.prob(queue, self.band))
                } else {
                    0.0
                }
            }
            AcceptRule::Bins {
                lower,
                group_end,
                marginal,
            } => {
                let Some(k) = lower.iter().rposition(|&lb| mass_ge(q, lb)) else {
                    return 0.0;
                };
                if i > group_end[k] {
                    return 0.0;
                }
                match marginal {
                    Some((j, t)) if i == *j => t.prob(queue, self.band),
                    _ => 1.0,
                }
            }
        }
    }

    /// `beta(q, Q)`: probability of rejoining the tail after declining.
    pub fn beta(&self, _q: f64, _queue: f64) -> f64 {
        self.rejoin
    }

    /// `gamma(q, Q)`: probability of leaving. At the tail (`q == Q`) this is
    /// the decision not to join.
    pub fn gamma(&self, q: f64, queue: f64) -> f64 {
        if q < queue {
            return self.leave_after_decline;
        }
        match &self.join {
            JoinRule::Always => 0.0,
            JoinRule::Target(t) => t.prob(queue, self.band),
        }
    }
}

/// Equilibrium strategy of a mechanism.
pub fn equilibrium_strategy(
    mechanism: Mechanism,
    e: &Economy<f64>,
    layout: Option<&BinLayout<f64>>,
) -> Result<DriverStrategy, StrategyError> {
    let over = e.is_over_supplied();
    let lambda = e.driver_rate();
    let j = max_completed_index(e);
    let mu_j = fulfilled_rate_at_j(e);
    let q_star = direct_fifo(e).queue_length;
    // balk when the queue is long: above Q-bar always, at Q-bar keep sum(mu) of lambda
    let balk_at = |q: f64, served: f64| {
        JoinRule::Target(Target {
            queue_length: q,
            at_target: 1.0 - (served / lambda).min(1.0),
        })
    };
    let marginal = Target {
        queue_length: q_star,
        at_target: mu_j / e.mu(j),
    };
    Ok(match mechanism {
        Mechanism::FirstBest => return Err(StrategyError::NoQueue),
        Mechanism::DirectFifo => DriverStrategy::new(AcceptRule::All, balk_at(qbar(e), e.total_demand())),
        Mechanism::StrictFifo => {
            let top = if strict_reaches_first_best(e) { e.len() } else { patience_index(e) };
            let gross: f64 = (1..=top).map(|i| e.mu(i) * e.w(i)).sum();
            let served = e.demand_through(top);
            DriverStrategy::new(
                AcceptRule::Thresholds(thresholds(e)),
                balk_at(gross / e.driver_cost(), served),
            )
        }
        Mechanism::RandomDispatch => {
            if over {
                DriverStrategy::new(
                    AcceptRule::Cutoff {
                        cutoff: e.len(),
                        marginal: None,
                    },
                    balk_at(qbar(e), e.total_demand()),
                )
            } else {
                // each of the P offers accepted independently, so per offer
                // 1 - (1 - share)^(1/P) gives the aggregate share
                let p = f64::from(e.patience());
                let per_offer = 1.0 - (1.0 - mu_j / e.mu(j)).powf(1.0 / p);
                DriverStrategy::new(
                    AcceptRule::Cutoff {
                        cutoff: j,
                        marginal: Some(Target {
                            at_target: per_offer,
                            ..marginal
                        }),
                    },
                    JoinRule::Always,
                )
            }
        }
        Mechanism::RandomizedFifo => {
            let layout = layout.ok_or(StrategyError::MissingLayout)?;
            let group_end = layout
                .partition()
                .groups()
                .iter()
                .map(|g| *g.last().expect("nonempty group"))
                .collect();
            let accept = AcceptRule::Bins {
                lower: layout.lower().to_vec(),
                group_end,
                marginal: (!over).then_some((j, marginal)),
            };
            let join = if over {
                balk_at(qbar(e), e.total_demand())
            } else {
                JoinRule::Always
            };
            DriverStrategy::new(accept, join)
        }
    })
}
