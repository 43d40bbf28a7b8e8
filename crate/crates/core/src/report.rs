//! CSV encodings of outcomes.
//!
//! Infinite values are written as `inf`, missing values as an empty cell.

use std::io::Write;

use crate::analyzers::EquilibriumOutcome;
use crate::scalar::Scalar;

pub const OUTCOME_HEADER: [&str; 12] = [
    "mechanism",
    "lambda",
    "P",
    "T",
    "R",
    "Q",
    "wait_min",
    "wait_max",
    "wait_avg_arrived",
    "wait_avg_joined",
    "payoff_mean",
    "payoff_sd",
];

/// Extra columns appended to a simulated outcome row.
pub const SIMULATION_COLUMNS: [&str; 3] = ["seed", "scale", "horizon"];

/// Metric names used by the long format, in row order.
pub const METRICS: [&str; 9] = [
    "T",
    "R",
    "Q",
    "wait_min",
    "wait_max",
    "wait_avg_arrived",
    "wait_avg_joined",
    "payoff_mean",
    "payoff_sd",
];

pub fn format_value<S: Scalar>(x: S) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > S::zero() { "inf" } else { "-inf" }.to_string()
    } else if x == S::zero() {
        // no "-0"
        "0".to_string()
    } else {
        x.to_string()
    }
}

pub fn metric_values<S: Scalar>(o: &EquilibriumOutcome<S>) -> [S; 9] {
    [
        o.throughput,
        o.net_revenue,
        o.queue_length,
        o.wait_min,
        o.wait_max,
        o.wait_avg_arrived,
        o.wait_avg_joined,
        o.payoff_mean,
        o.payoff_sd(),
    ]
}

/// Cells of one outcome row, in [`OUTCOME_HEADER`] order.
pub fn outcome_record<S: Scalar>(o: &EquilibriumOutcome<S>, lambda: S, patience: u32) -> Vec<String> {
    let mut row = vec![o.mechanism.name().to_string(), format_value(lambda), patience.to_string()];
    row.extend(metric_values(o).into_iter().map(format_value));
    row
}

/// Writes outcome rows under the standard header.
pub fn write_outcomes<'a, S: Scalar, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (&'a EquilibriumOutcome<S>, S, u32)>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OUTCOME_HEADER)?;
    for (o, lambda, p) in rows {
        w.write_record(outcome_record(o, lambda, p))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::{random_dispatch, strict_fifo};
    use crate::economy::{validate_economy, DestinationRecord, EconomyRecord};

    #[test]
    fn value_tokens() {
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!(format_value(f64::NAN), "");
        assert_eq!(format_value(-0.0_f64), "0");
        assert_eq!(format_value(1.0_f64 / 3.0), "0.3333333333333333");
        assert_eq!(format_value(125.0_f64), "125");
    }

    #[test]
    fn outcome_rows() {
        let e = validate_economy(&EconomyRecord {
            destinations: [(1.0, 75.0), (6.0, 25.0), (3.0, 15.0)]
                .iter()
                .map(|&(m, w)| DestinationRecord {
                    demand_rate: m,
                    net_earnings: w,
                })
                .collect(),
            driver_rate: 8.0,
            driver_cost: 1.0 / 3.0,
            platform_cost: 1.0 / 3.0,
            patience: 2,
        })
        .unwrap();
        let r = random_dispatch(&e);
        let s = strict_fifo(&e);
        let mut buf = Vec::new();
        write_outcomes(&mut buf, [(&r, 8.0, 2), (&s, 8.0, 2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], OUTCOME_HEADER.join(","));
        assert!(lines[1].starts_with("random,8,2,8,"), "{}", lines[1]);
        assert_eq!(lines[1].split(',').nth(7), Some("inf"));
        assert_eq!(lines.len(), 3);
    }
}
