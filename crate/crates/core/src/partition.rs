//! Ordered partitions of the served destinations and the queue bins they
//! induce for randomized FIFO.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::analyzers::{direct_fifo, thresholds};
use crate::economy::{max_completed_index, Economy};
use crate::scalar::{approx_eq, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("partition has no groups")]
    Empty,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("groups must list destinations 1, 2, ... in increasing order; expected {expected}, found {found}")]
    NotOrdered { expected: usize, found: usize },
    #[error("partition covers destinations 1..={covered} but the economy has only {available}")]
    TooManyDestinations { covered: usize, available: usize },
    #[error("partition must cover exactly destinations 1..={expected}, covers 1..={covered}")]
    WrongCoverage { expected: usize, covered: usize },
    #[error("{groups} groups exceed min(J, P) = {limit}")]
    TooManyGroups { groups: usize, limit: usize },
    #[error("cannot parse partition `{0}`; expected e.g. {{1}},{{2,3}}")]
    Parse(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
}

/// Consecutive groups of destination indices `{1..k1}, {k1+1..k2}, ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedPartition {
    groups: Vec<Vec<usize>>,
}

impl OrderedPartition {
    /// Checks only the structure; see [`validate_partition`] for the checks
    /// against an economy.
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        if groups.is_empty() {
            return Err(PartitionError::Empty);
        }
        let mut expected = 1;
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(PartitionError::EmptyGroup(k + 1));
            }
            for &i in g {
                if i != expected {
                    return Err(PartitionError::NotOrdered { expected, found: i });
                }
                expected += 1;
            }
        }
        Ok(Self { groups })
    }

    /// Groups with the given sizes, in order.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self, PartitionError> {
        let mut next = 1;
        let groups = sizes
            .iter()
            .map(|&s| {
                let g: Vec<usize> = (next..next + s).collect();
                next += s;
                g
            })
            .collect();
        Self::new(groups)
    }

    /// Every destination in its own group.
    pub fn singletons(j: usize) -> Self {
        Self {
            groups: (1..=j).map(|i| vec![i]).collect(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Number of groups `m`.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Highest destination index covered.
    pub fn covered(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_all_singletons(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }
}

impl fmt::Display for OrderedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, g) in self.groups.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (n, i) in g.iter().enumerate() {
                if n > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{i}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

impl FromStr for OrderedPartition {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PartitionError::Parse(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(err)?;
        let mut groups = Vec::new();
        for g in body.split("},{") {
            if g.contains(['{', '}']) {
                return Err(err());
            }
            let group = g
                .split(',')
                .map(|t| t.parse::<usize>().map_err(|_| err()))
                .collect::<Result<Vec<_>, _>>()?;
            groups.push(group);
        }
        Self::new(groups)
    }
}

/// Checks a partition against an economy: it must cover exactly the served
/// destinations `1..=J` with at most `min(J, P)` groups.
pub fn validate_partition<S: Scalar>(e: &Economy<S>, p: &OrderedPartition) -> Result<(), PartitionError> {
    let j = max_completed_index(e);
    if p.covered() != j {
        return Err(PartitionError::WrongCoverage {
            expected: j,
            covered: p.covered(),
        });
    }
    let limit = j.min(e.patience() as usize);
    if p.len() > limit {
        return Err(PartitionError::TooManyGroups {
            groups: p.len(),
            limit,
        });
    }
    Ok(())
}

/// `m = min(J, P)` groups of near-equal size, larger groups first.
pub fn default_partition<S: Scalar>(e: &Economy<S>) -> OrderedPartition {
    let j = max_completed_index(e);
    let m = j.min(e.patience() as usize);
    let (base, extra) = (j / m, j % m);
    let sizes: Vec<usize> = (0..m).map(|k| base + usize::from(k < extra)).collect();
    OrderedPartition::from_sizes(&sizes).expect("sizes are positive and sum to J")
}

/// Queue-position intervals `[lb_k, ub_k]`, one per group.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout<S> {
    partition: OrderedPartition,
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> BinLayout<S> {
    /// Assembles a layout without checking it; use [`validate_layout`].
    pub fn from_parts(partition: OrderedPartition, lower: Vec<S>, upper: Vec<S>) -> Result<Self, PartitionError> {
        if lower.len() != partition.len() || upper.len() != partition.len() {
            return Err(PartitionError::InvalidLayout(format!(
                "{} groups but {} lower and {} upper bounds",
                partition.len(),
                lower.len(),
                upper.len()
            )));
        }
        Ok(Self {
            partition,
            lower,
            upper,
        })
    }

    pub fn partition(&self) -> &OrderedPartition {
        &self.partition
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Bin `k` (1-based) as `(lb, ub)`.
    pub fn bin(&self, k: usize) -> (S, S) {
        (self.lower[k - 1], self.upper[k - 1])
    }
}

/// Bins for a structurally valid partition. The partition may reach past `J`
/// (such layouts are flagged by [`validate_layout`]) but not past `L`.
pub fn bins<S: Scalar>(e: &Economy<S>, p: &OrderedPartition) -> Result<BinLayout<S>, PartitionError> {
    if p.covered() > e.len() {
        return Err(PartitionError::TooManyDestinations {
            covered: p.covered(),
            available: e.len(),
        });
    }
    let c = e.driver_cost();
    let mut lower = Vec::with_capacity(p.len());
    let mut upper = Vec::with_capacity(p.len());
    for (k, g) in p.groups().iter().enumerate() {
        let floor = e.w(*g.last().expect("nonempty group"));
        let ahead: S = p.groups()[..k]
            .iter()
            .flatten()
            .map(|&i| (e.w(i) - floor) * e.mu(i))
            .sum();
        let own: S = g.iter().map(|&i| (e.w(i) - floor) * e.mu(i)).sum();
        lower.push(ahead / c);
        upper.push((ahead + own) / c);
    }
    Ok(BinLayout {
        partition: p.clone(),
        lower,
        upper,
    })
}

/// Bins for a partition that must also be valid for the economy.
pub fn checked_bins<S: Scalar>(e: &Economy<S>, p: &OrderedPartition) -> Result<BinLayout<S>, PartitionError> {
    validate_partition(e, p)?;
    bins(e, p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`validate_layout`], one entry per check.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutReport {
    pub checks: Vec<LayoutCheck>,
}

impl LayoutReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LayoutCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&LayoutCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_COVERAGE: &str = "covers served destinations";
pub const CHECK_GROUP_COUNT: &str = "group count within patience";
pub const CHECK_HEAD: &str = "first bin starts at head";
pub const CHECK_ORDERED: &str = "lower bound at most upper bound";
pub const CHECK_OVERLAP: &str = "bins do not overlap";
pub const CHECK_POINT_BINS: &str = "point bins exactly for singleton groups";
pub const CHECK_MATCHES: &str = "bounds match partition";
pub const CHECK_HAZARD: &str = "last-bin lower bound within equilibrium queue length";

/// Reports every bin invariant plus the hazard where the last bin starts
/// behind the equilibrium queue. Never fails; inspect the report.
pub fn validate_layout<S: Scalar>(e: &Economy<S>, layout: &BinLayout<S>) -> LayoutReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(LayoutCheck { name, passed, detail });
    let p = layout.partition();
    let j = max_completed_index(e);
    let m = layout.len();

    push(
        CHECK_COVERAGE,
        p.covered() == j,
        format!("partition covers 1..={}, served destinations are 1..={j}", p.covered()),
    );
    let limit = j.min(e.patience() as usize);
    push(CHECK_GROUP_COUNT, m <= limit, format!("{m} groups, limit min(J, P) = {limit}"));

    let lb = layout.lower();
    let ub = layout.upper();
    push(CHECK_HEAD, m > 0 && lb[0] == S::zero(), format!("lb(1) = {}", lb.first().copied().unwrap_or(S::nan())));
    let bad_order: Vec<usize> = (0..m).filter(|&k| lb[k] > ub[k]).map(|k| k + 1).collect();
    push(CHECK_ORDERED, bad_order.is_empty(), format!("violations at bins {bad_order:?}"));
    let overlaps: Vec<usize> = (1..m).filter(|&k| ub[k - 1] >= lb[k]).map(|k| k + 1).collect();
    push(CHECK_OVERLAP, overlaps.is_empty(), format!("bin starts not past previous bin at {overlaps:?}"));
    let bad_points: Vec<usize> = (0..m)
        .filter(|&k| (lb[k] == ub[k]) != (p.groups()[k].len() == 1))
        .map(|k| k + 1)
        .collect();
    push(CHECK_POINT_BINS, bad_points.is_empty(), format!("violations at bins {bad_points:?}"));

    match bins(e, p) {
        Ok(expected) => {
            let same = expected
                .lower()
                .iter()
                .zip(lb)
                .chain(expected.upper().iter().zip(ub))
                .all(|(a, b)| approx_eq(*a, *b));
            push(CHECK_MATCHES, same, "bounds recomputed from the partition".to_string());
        }
        Err(err) => push(CHECK_MATCHES, false, err.to_string()),
    }

    let q = direct_fifo(e).queue_length;
    let last_lb = lb.last().copied().unwrap_or(S::zero());
    let hazard = last_lb > q && !approx_eq(last_lb, q);
    push(
        CHECK_HAZARD,
        !hazard,
        if hazard {
            format!("last-bin lower bound {last_lb} exceeds equilibrium queue length {q}")
        } else {
            format!("last-bin lower bound {last_lb}, equilibrium queue length {q}")
        },
    );
    LayoutReport { checks }
}

/// Thresholds for singleton groups, for comparing against [`bins`].
pub fn singleton_bins<S: Scalar>(e: &Economy<S>) -> Vec<S> {
    let j = max_completed_index(e);
    thresholds(e).into_iter().take(j).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{validate_economy, DestinationRecord, EconomyRecord};

    fn economy(mu: &[f64], w: &[f64], lambda: f64, c: f64, p: u32) -> Economy<f64> {
        validate_economy(&EconomyRecord {
            destinations: mu
                .iter()
                .zip(w)
                .map(|(&m, &w)| DestinationRecord {
                    demand_rate: m,
                    net_earnings: w,
                })
                .collect(),
            driver_rate: lambda,
            driver_cost: c,
            platform_cost: c,
            patience: p,
        })
        .unwrap()
    }

    fn example_two() -> Economy<f64> {
        economy(&[1.0, 6.0, 3.0], &[75.0, 25.0, 15.0], 8.0, 1.0 / 3.0, 2)
    }

    #[test]
    fn parse_and_display() {
        let p: OrderedPartition = "{1},{2,3}".parse().unwrap();
        assert_eq!(p.groups(), &[vec![1], vec![2, 3]]);
        assert_eq!(p.to_string(), "{1},{2,3}");
        let spaced: OrderedPartition = " {1, 2} , {3} ".parse().unwrap();
        assert_eq!(spaced.groups(), &[vec![1, 2], vec![3]]);
        for bad in ["", "{}", "{1},{3}", "{2},{1}", "{1,2", "1,2", "{1}{2}", "{1},{x}"] {
            assert!(bad.parse::<OrderedPartition>().is_err(), "{bad}");
        }
    }

    #[test]
    fn example_two_bins() {
        let e = example_two();
        let layout = bins(&e, &"{1},{2,3}".parse().unwrap()).unwrap();
        assert_eq!(layout.bin(1), (0.0, 0.0));
        let (lb, ub) = layout.bin(2);
        assert!((lb - 180.0).abs() < 1e-9 && (ub - 360.0).abs() < 1e-9);
        assert!(validate_layout(&e, &layout).passed());
    }

    #[test]
    fn default_partition_sizes() {
        let e = example_two();
        assert_eq!(default_partition(&e).groups(), &[vec![1, 2], vec![3]]);
        let e3 = e.with_patience(3).unwrap();
        assert_eq!(default_partition(&e3), OrderedPartition::singletons(3));
        let e1 = e.with_driver_rate(0.5).unwrap();
        assert_eq!(default_partition(&e1).groups(), &[vec![1]]);
        let wide = economy(&[1.0; 7], &[7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0], 100.0, 1.0, 3);
        assert_eq!(
            default_partition(&wide).groups(),
            &[vec![1, 2, 3], vec![4, 5], vec![6, 7]]
        );
    }

    #[test]
    fn singletons_reproduce_thresholds() {
        let e = example_two();
        let layout = bins(&e, &OrderedPartition::singletons(3)).unwrap();
        assert_eq!(layout.lower(), layout.upper());
        for (b, n) in layout.lower().iter().zip(singleton_bins(&e)) {
            assert!((b - n).abs() <= 1e-12 * n.abs().max(1.0));
        }
    }

    #[test]
    fn misaligned_partition_hazard() {
        let e = economy(&[1.0, 2.0, 5.0], &[100.0, 40.0, 10.0], 2.0, 1.0, 5);
        let layout = bins(&e, &"{1},{2,3}".parse().unwrap()).unwrap();
        assert!((layout.bin(2).0 - 90.0).abs() < 1e-9);
        let report = validate_layout(&e, &layout);
        assert!(!report.passed());
        let hazard = report.check(CHECK_HAZARD).unwrap();
        assert!(!hazard.passed);
        assert!(hazard.detail.contains("exceeds equilibrium queue length 60"), "{}", hazard.detail);
        assert!(!report.check(CHECK_COVERAGE).unwrap().passed);
    }

    #[test]
    fn overlapping_hand_built_bins() {
        let e = example_two();
        let layout = BinLayout::from_parts("{1},{2,3}".parse().unwrap(), vec![0.0, 100.0], vec![120.0, 360.0]).unwrap();
        let report = validate_layout(&e, &layout);
        assert!(!report.check(CHECK_OVERLAP).unwrap().passed);
        assert!(!report.check(CHECK_MATCHES).unwrap().passed);
        assert!(!report.check(CHECK_POINT_BINS).unwrap().passed);
    }

    #[test]
    fn partition_checks_against_economy() {
        let e = example_two();
        assert!(validate_partition(&e, &"{1},{2,3}".parse().unwrap()).is_ok());
        assert!(matches!(
            validate_partition(&e, &"{1},{2}".parse().unwrap()),
            Err(PartitionError::WrongCoverage { .. })
        ));
        assert!(matches!(
            validate_partition(&e, &OrderedPartition::singletons(3)),
            Err(PartitionError::TooManyGroups { groups: 3, limit: 2 })
        ));
        assert!(matches!(
            bins(&e, &OrderedPartition::singletons(4)),
            Err(PartitionError::TooManyDestinations { .. })
        ));
    }
}
