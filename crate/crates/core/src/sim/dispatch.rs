//! Dispatch rules: which driver receives a rider's `t`-th offer.

use rand::Rng;

use crate::analyzers::{thresholds, Mechanism};
use crate::economy::Economy;
use crate::partition::BinLayout;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchDecision {
    /// Offer to the driver with this many drivers ahead.
    Offer(usize),
    /// The attempt is used up without an offer (no driver at the target).
    Skip,
    /// The mechanism does not dispatch this trip any further.
    Withhold,
}

/// First driver index at or past mass position `x` with `scale` drivers per unit.
pub(crate) fn index_at_or_after(x: f64, scale: f64) -> usize {
    let v = x * scale;
    (v - 1e-9 * v.abs().max(1.0)).ceil().max(0.0) as usize
}

/// Last driver index at or before mass position `x`.
pub(crate) fn index_at_or_before(x: f64, scale: f64) -> usize {
    let v = x * scale;
    (v + 1e-9 * v.abs().max(1.0)).floor().max(0.0) as usize
}

/// Dispatch rule of a mechanism at a fixed scale.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    mechanism: Mechanism,
    patience: u32,
    /// Direct FIFO start index per destination.
    starts: Vec<usize>,
    /// Randomized FIFO index ranges per bin.
    bins: Vec<(usize, usize)>,
}

impl Dispatcher {
    pub fn new(
        mechanism: Mechanism,
        e: &Economy<f64>,
        layout: Option<&BinLayout<f64>>,
        scale: f64,
    ) -> Result<Self, SimError> {
        let starts = thresholds(e).iter().map(|&n| index_at_or_after(n, scale)).collect();
        let bins = match (mechanism, layout) {
            (Mechanism::RandomizedFifo, Some(l)) => l
                .lower()
                .iter()
                .zip(l.upper())
                .map(|(&lb, &ub)| {
                    let lo = index_at_or_after(lb, scale);
                    (lo, index_at_or_before(ub, scale).max(lo))
                })
                .collect(),
            (Mechanism::RandomizedFifo, None) => return Err(SimError::MissingLayout),
            (Mechanism::FirstBest, _) => return Err(SimError::NoQueue),
            _ => Vec::new(),
        };
        Ok(Self {
            mechanism,
            patience: e.patience(),
            starts,
            bins,
        })
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    /// Target of attempt `attempt` (1-based) for a trip to `dest` when the
    /// queue holds `len` drivers.
    pub fn target<R: Rng>(&self, dest: usize, attempt: u32, len: usize, rng: &mut R) -> Result<DispatchDecision, SimError> {
        if attempt == 0 || attempt > self.patience {
            return Err(SimError::AttemptOutOfRange {
                attempt,
                patience: self.patience,
            });
        }
        let t = attempt as usize;
        Ok(match self.mechanism {
            Mechanism::StrictFifo => {
                if t <= len {
                    DispatchDecision::Offer(t - 1)
                } else {
                    DispatchDecision::Skip
                }
            }
            Mechanism::DirectFifo => {
                let idx = self.starts[dest - 1] + (t - 1);
                if idx < len {
                    DispatchDecision::Offer(idx)
                } else {
                    DispatchDecision::Withhold
                }
            }
            Mechanism::RandomDispatch => {
                if len == 0 {
                    DispatchDecision::Skip
                } else {
                    DispatchDecision::Offer(rng.random_range(0..len))
                }
            }
            Mechanism::RandomizedFifo => match self.bins.get(t - 1) {
                None => DispatchDecision::Withhold,
                Some(&(lo, hi)) => {
                    let hi = hi.min(len.saturating_sub(1));
                    if len == 0 || lo > hi {
                        DispatchDecision::Skip
                    } else {
                        DispatchDecision::Offer(rng.random_range(lo..=hi))
                    }
                }
            },
            Mechanism::FirstBest => unreachable!("rejected in Dispatcher::new"),
        })
    }
}

/// Free-function form of [`Dispatcher::target`].
#[allow(clippy::too_many_arguments)]
pub fn dispatch_target<R: Rng>(
    mechanism: Mechanism,
    e: &Economy<f64>,
    layout: Option<&BinLayout<f64>>,
    scale: f64,
    dest: usize,
    attempt: u32,
    queue_len: usize,
    rng: &mut R,
) -> Result<DispatchDecision, SimError> {
    Dispatcher::new(mechanism, e, layout, scale)?.target(dest, attempt, queue_len, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{validate_economy, DestinationRecord, EconomyRecord};
    use crate::partition::bins;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example(lambda: f64, p: u32) -> Economy<f64> {
        validate_economy(&EconomyRecord {
            destinations: [(1.0, 75.0), (6.0, 25.0), (3.0, 15.0)]
                .iter()
                .map(|&(m, w)| DestinationRecord {
                    demand_rate: m,
                    net_earnings: w,
                })
                .collect(),
            driver_rate: lambda,
            driver_cost: 1.0 / 3.0,
            platform_cost: 1.0 / 3.0,
            patience: p,
        })
        .unwrap()
    }

    #[test]
    fn strict_goes_down_the_line() {
        let d = Dispatcher::new(Mechanism::StrictFifo, &example(5.0, 12), None, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(d.target(2, 5, 100, &mut rng).unwrap(), DispatchDecision::Offer(4));
        assert_eq!(d.target(2, 5, 4, &mut rng).unwrap(), DispatchDecision::Skip);
        assert!(matches!(d.target(2, 13, 100, &mut rng), Err(SimError::AttemptOutOfRange { .. })));
    }

    #[test]
    fn direct_starts_at_threshold() {
        let d = Dispatcher::new(Mechanism::DirectFifo, &example(5.0, 12), None, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(d.target(1, 1, 10, &mut rng).unwrap(), DispatchDecision::Offer(0));
        assert_eq!(d.target(2, 1, 301, &mut rng).unwrap(), DispatchDecision::Offer(300));
        assert_eq!(d.target(2, 2, 302, &mut rng).unwrap(), DispatchDecision::Offer(301));
        // queue shorter than n_3 = 360
        assert_eq!(d.target(3, 1, 700, &mut rng).unwrap(), DispatchDecision::Withhold);
    }

    #[test]
    fn randomized_uses_bins() {
        let e = example(8.0, 2);
        let layout = bins(&e, &"{1},{2,3}".parse().unwrap()).unwrap();
        let d = Dispatcher::new(Mechanism::RandomizedFifo, &e, Some(&layout), 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(d.target(3, 1, 1200, &mut rng).unwrap(), DispatchDecision::Offer(0));
        for _ in 0..1000 {
            match d.target(3, 2, 3000, &mut rng).unwrap() {
                DispatchDecision::Offer(i) => assert!((1800..=2999).contains(&i)),
                other => panic!("{other:?}"),
            }
        }
        assert_eq!(d.target(3, 2, 1000, &mut rng).unwrap(), DispatchDecision::Skip);
        assert_eq!(d.target(3, 1, 0, &mut rng).unwrap(), DispatchDecision::Skip);
        assert!(Dispatcher::new(Mechanism::RandomizedFifo, &e, None, 1.0).is_err());
    }

    #[test]
    fn random_is_uniform_over_queue() {
        let d = Dispatcher::new(Mechanism::RandomDispatch, &example(8.0, 2), None, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hits = [0u32; 4];
        for _ in 0..40_000 {
            if let DispatchDecision::Offer(i) = d.target(1, 1, 4, &mut rng).unwrap() {
                hits[i] += 1;
            }
        }
        assert!(hits.iter().all(|&h| (9_000..11_000).contains(&h)), "{hits:?}");
        assert_eq!(d.target(1, 1, 0, &mut rng).unwrap(), DispatchDecision::Skip);
    }
}
