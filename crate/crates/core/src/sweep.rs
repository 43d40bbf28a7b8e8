//! Parameter sweeps over driver arrival rate or rider patience.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analyzers::{analyze, AnalysisError, EquilibriumOutcome, Mechanism};
use crate::economy::{Economy, EconomyError};
use crate::partition::{bins, default_partition, OrderedPartition};
use crate::report::{format_value, metric_values, outcome_record, METRICS, OUTCOME_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Lambda,
    Patience,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::Patience => "patience",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lambda" => Ok(SweepParameter::Lambda),
            "patience" | "P" => Ok(SweepParameter::Patience),
            other => Err(SweepError::UnknownParameter(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("unknown sweep parameter `{0}`; expected lambda or patience")]
    UnknownParameter(String),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep grid must be strictly increasing")]
    NotIncreasing,
    #[error("bad grid value {0}")]
    BadValue(f64),
    #[error("no mechanisms to evaluate")]
    NoMechanisms,
    #[error(transparent)]
    Economy(#[from] EconomyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub template: Economy<f64>,
    pub mechanisms: Vec<Mechanism>,
    /// Fixed randomized-FIFO partition; the default one is rebuilt at each
    /// point otherwise.
    pub partition: Option<OrderedPartition>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.grid.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        if self.mechanisms.is_empty() {
            return Err(SweepError::NoMechanisms);
        }
        for &x in &self.grid {
            let ok = match self.parameter {
                SweepParameter::Lambda => x.is_finite() && x > 0.0,
                SweepParameter::Patience => x >= 1.0 && x.fract() == 0.0 && x <= f64::from(u32::MAX),
            };
            if !ok {
                return Err(SweepError::BadValue(x));
            }
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SweepError::NotIncreasing);
        }
        Ok(())
    }

    /// Economy at grid value `x`.
    pub fn economy_at(&self, x: f64) -> Result<Economy<f64>, SweepError> {
        Ok(match self.parameter {
            SweepParameter::Lambda => self.template.with_driver_rate(x)?,
            SweepParameter::Patience => self.template.with_patience(x as u32)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub lambda: f64,
    pub patience: u32,
    pub mechanism: Mechanism,
    /// Partition used by randomized FIFO.
    pub partition: Option<OrderedPartition>,
    /// `Err` when the mechanism is undefined at this point (e.g. a fixed
    /// partition that no longer fits).
    pub outcome: Result<EquilibriumOutcome<f64>, AnalysisError>,
}

fn evaluate(spec: &SweepSpec, e: &Economy<f64>, x: f64, mechanism: Mechanism) -> SweepRow {
    let mut partition = None;
    let outcome = if mechanism == Mechanism::RandomizedFifo {
        let p = spec.partition.clone().unwrap_or_else(|| default_partition(e));
        let result = bins(e, &p)
            .map_err(AnalysisError::from)
            .and_then(|layout| analyze(e, mechanism, Some(&layout)));
        partition = Some(p);
        result
    } else {
        analyze(e, mechanism, None)
    };
    SweepRow {
        x,
        lambda: e.driver_rate(),
        patience: e.patience(),
        mechanism,
        partition,
        outcome,
    }
}

/// Evaluates every mechanism at every grid point. First best is always
/// included as the benchmark. Rows are in grid order, then mechanism order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let mut mechanisms = spec.mechanisms.clone();
    if !mechanisms.contains(&Mechanism::FirstBest) {
        mechanisms.push(Mechanism::FirstBest);
    }
    mechanisms.sort();
    mechanisms.dedup();
    let points: Vec<Vec<SweepRow>> = spec
        .grid
        .par_iter()
        .map(|&x| {
            let e = spec.economy_at(x)?;
            Ok(mechanisms.iter().map(|&m| evaluate(spec, &e, x, m)).collect())
        })
        .collect::<Result<_, SweepError>>()?;
    Ok(points.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepFormat {
    /// One row per (point, mechanism).
    #[default]
    Wide,
    /// One row per (point, mechanism, metric).
    Long,
}

impl FromStr for SweepFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wide" => Ok(SweepFormat::Wide),
            "long" => Ok(SweepFormat::Long),
            other => Err(format!("unknown format `{other}`; expected wide or long")),
        }
    }
}

pub fn write_sweep<W: Write>(out: W, parameter: SweepParameter, rows: &[SweepRow], format: SweepFormat) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let part = |r: &SweepRow| r.partition.as_ref().map(ToString::to_string).unwrap_or_default();
    match format {
        SweepFormat::Wide => {
            let mut header: Vec<&str> = OUTCOME_HEADER.to_vec();
            header.push("partition");
            w.write_record(&header)?;
            for r in rows {
                let mut rec = match &r.outcome {
                    Ok(o) => outcome_record(o, r.lambda, r.patience),
                    Err(_) => {
                        let mut rec = vec![r.mechanism.name().to_string(), format_value(r.lambda), r.patience.to_string()];
                        rec.resize(OUTCOME_HEADER.len(), String::new());
                        rec
                    }
                };
                rec.push(part(r));
                w.write_record(&rec)?;
            }
        }
        SweepFormat::Long => {
            w.write_record(["parameter", "x", "mechanism", "metric", "value", "partition"])?;
            for r in rows {
                let values = match &r.outcome {
                    Ok(o) => metric_values(o),
                    Err(_) => [f64::NAN; 9],
                };
                for (metric, v) in METRICS.iter().zip(values) {
                    w.write_record([
                        parameter.name(),
                        &format_value(r.x),
                        r.mechanism.name(),
                        metric,
                        &format_value(v),
                        &part(r),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
