//! Piecewise-linear equilibrium continuation payoffs.

use crate::economy::{max_completed_index, Economy};
use crate::partition::{validate_partition, BinLayout, PartitionError};
use crate::scalar::Scalar;

use super::{qbar, thresholds};

/// `q -> pi*(q)` on `[0, Q*]`, linear between breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPayoffCurve<S> {
    points: Vec<(S, S)>,
}

impl<S: Scalar> ContinuationPayoffCurve<S> {
    /// Breakpoints must have nondecreasing positions; duplicates are dropped.
    pub fn new(points: Vec<(S, S)>) -> Self {
        assert!(!points.is_empty(), "curve needs at least one breakpoint");
        let mut out: Vec<(S, S)> = Vec::with_capacity(points.len());
        for p in points {
            if let Some(last) = out.last() {
                assert!(p.0 >= last.0, "breakpoints out of order");
                if p.0 == last.0 && p.1 == last.1 {
                    continue;
                }
            }
            out.push(p);
        }
        Self { points: out }
    }

    pub fn breakpoints(&self) -> &[(S, S)] {
        &self.points
    }

    /// Right end of the domain.
    pub fn end(&self) -> S {
        self.points.last().expect("nonempty").0
    }

    /// Value at `q`, clamped to the domain. At a jump the left value wins.
    pub fn eval(&self, q: S) -> S {
        let pts = &self.points;
        if q <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if q <= x1 {
                if x1 == x0 {
                    return y0;
                }
                return y0 + (y1 - y0) * (q - x0) / (x1 - x0);
            }
        }
        pts[pts.len() - 1].1
    }

    /// Positions worth probing: every breakpoint and every segment midpoint.
    pub fn probe_points(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(2 * self.points.len());
        for (k, p) in self.points.iter().enumerate() {
            if k > 0 {
                out.push((self.points[k - 1].0 + p.0) / S::lit(2.0));
            }
            out.push(p.0);
        }
        out
    }
}

/// Continuation payoff under direct FIFO: `w_1` at the head, `w_i` at each
/// threshold `n_i`, falling to zero at `Q-bar` when over-supplied; truncated
/// at the equilibrium queue length.
pub fn direct_fifo_continuation<S: Scalar>(e: &Economy<S>) -> ContinuationPayoffCurve<S> {
    let n = thresholds(e);
    let j = max_completed_index(e);
    let mut pts: Vec<(S, S)> = (1..=j).map(|i| (n[i - 1], e.w(i))).collect();
    if e.is_over_supplied() {
        pts.push((qbar(e), S::zero()));
    }
    ContinuationPayoffCurve::new(pts)
}

/// Continuation payoff under randomized FIFO: constant at the group's lowest
/// earnings across each bin, linear between bins, falling to zero at `Q-bar`
/// when over-supplied.
pub fn randomized_fifo_continuation<S: Scalar>(
    e: &Economy<S>,
    layout: &BinLayout<S>,
) -> Result<ContinuationPayoffCurve<S>, PartitionError> {
    validate_partition(e, layout.partition())?;
    let mut pts = Vec::with_capacity(2 * layout.len() + 1);
    for (k, g) in layout.partition().groups().iter().enumerate() {
        let floor = e.w(*g.last().expect("nonempty group"));
        let (lb, ub) = layout.bin(k + 1);
        pts.push((lb, floor));
        pts.push((ub, floor));
    }
    if e.is_over_supplied() {
        pts.push((qbar(e), S::zero()));
    }
    Ok(ContinuationPayoffCurve::new(pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{validate_economy, DestinationRecord, EconomyRecord};
    use crate::partition::{bins, OrderedPartition};

    fn economy(lambda: f64, p: u32) -> Economy<f64> {
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
    fn direct_curve_example_one() {
        let curve = direct_fifo_continuation(&economy(5.0, 12));
        assert_eq!(curve.eval(0.0), 75.0);
        assert!((curve.eval(150.0) - 25.0).abs() < 1e-12);
        assert!((curve.end() - 150.0).abs() < 1e-9);
        assert!((curve.eval(75.0) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn direct_curve_over_supplied() {
        let curve = direct_fifo_continuation(&economy(12.0, 12));
        assert!((curve.end() - 810.0).abs() < 1e-9);
        assert!(curve.eval(810.0).abs() < 1e-12);
        assert!((curve.eval(360.0) - 15.0).abs() < 1e-9);
        // slope past n_3 is -c / sum(mu)
        let slope = (curve.eval(500.0) - curve.eval(400.0)) / 100.0;
        assert!((slope + 1.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn randomized_curve_example_two() {
        let e = economy(8.0, 2);
        let layout = bins(&e, &"{1},{2,3}".parse().unwrap()).unwrap();
        let curve = randomized_fifo_continuation(&e, &layout).unwrap();
        assert_eq!(curve.eval(0.0), 75.0);
        for q in [180.0, 250.0, 360.0] {
            assert!((curve.eval(q) - 15.0).abs() < 1e-9);
        }
        assert!((curve.eval(90.0) - 45.0).abs() < 1e-9);
    }

    #[test]
    fn singleton_layout_matches_direct() {
        let e = economy(8.0, 3);
        let layout = bins(&e, &OrderedPartition::singletons(3)).unwrap();
        let a = randomized_fifo_continuation(&e, &layout).unwrap();
        let b = direct_fifo_continuation(&e);
        for q in b.probe_points().into_iter().chain(a.probe_points()) {
            assert!((a.eval(q) - b.eval(q)).abs() < 1e-9, "{q}");
        }
    }
}
