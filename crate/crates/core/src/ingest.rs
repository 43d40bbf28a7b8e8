//! Trip-record ingestion: Chicago TNP-style CSV to an [`Economy`].
//!
//! Time is measured in minutes throughout, so rates are per minute and the
//! waiting cost `c` is currency per minute.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::economy::{net_earnings, validate_economy, DestinationRecord, Economy, EconomyError, EconomyRecord, TripStats};

pub const COL_START: &str = "Trip Start Timestamp";
pub const COL_END: &str = "Trip End Timestamp";
pub const COL_SECONDS: &str = "Trip Seconds";
pub const COL_FARE: &str = "Fare";
pub const COL_PICKUP: &str = "Pickup Census Tract";
pub const COL_DROPOFF: &str = "Dropoff Census Tract";

/// Every column of the public schema; anything else is rejected.
const KNOWN_COLUMNS: [&str; 21] = [
    "Trip ID",
    COL_START,
    COL_END,
    COL_SECONDS,
    "Trip Miles",
    COL_PICKUP,
    COL_DROPOFF,
    "Pickup Community Area",
    "Dropoff Community Area",
    COL_FARE,
    "Tip",
    "Additional Charges",
    "Trip Total",
    "Shared Trip Authorized",
    "Trips Pooled",
    "Pickup Centroid Latitude",
    "Pickup Centroid Longitude",
    "Pickup Centroid Location",
    "Dropoff Centroid Latitude",
    "Dropoff Centroid Longitude",
    "Dropoff Centroid Location",
];

const TIME_FORMATS: [&str; 4] = [
    "%m/%d/%Y %I:%M:%S %p",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%m/%d/%Y %H:%M:%S",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("no trip records")]
    NoRecords,
    #[error("all tracts filtered: none has at least {min_trip_count} trips with positive net earnings")]
    AllFiltered { min_trip_count: u64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Economy(#[from] EconomyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub fare: f64,
    pub pickup_area: String,
    pub dropoff_area: Option<String>,
    /// Recorded duration, when the file has it.
    pub seconds: Option<f64>,
}

impl TripRecord {
    /// Trip length in minutes: the recorded seconds if present, otherwise
    /// the (coarse) timestamp difference.
    pub fn duration_minutes(&self) -> f64 {
        match self.seconds {
            Some(s) => s / 60.0,
            None => (self.end_time - self.start_time).num_seconds() as f64 / 60.0,
        }
    }
}

/// Keeps trips from one pickup tract starting in `[from, until)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripFilter {
    pub origin: Option<String>,
    pub from: Option<NaiveDateTime>,
    pub until: Option<NaiveDateTime>,
}

impl TripFilter {
    fn keeps(&self, pickup: &str, start: NaiveDateTime) -> bool {
        self.origin.as_deref().is_none_or(|o| o == pickup)
            && self.from.is_none_or(|t| start >= t)
            && self.until.is_none_or(|t| start < t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalformedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrips {
    pub records: Vec<TripRecord>,
    /// Rows passing the filter but without a dropoff tract.
    pub missing_destination: u64,
    /// Well-formed rows outside the filter.
    pub filtered_out: u64,
    pub malformed: Vec<MalformedRow>,
}

impl ParsedTrips {
    pub fn skipped(&self) -> usize {
        self.malformed.len()
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIME_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn parse_amount(s: &str) -> Option<f64> {
    let cleaned: String = s.trim().chars().filter(|&c| c != '$' && c != ',').collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Columns {
    start: usize,
    end: usize,
    seconds: Option<usize>,
    fare: usize,
    pickup: usize,
    dropoff: usize,
}

fn columns(header: &csv::StringRecord) -> Result<Columns, IngestError> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if let Some(bad) = names
        .iter()
        .find(|n| !KNOWN_COLUMNS.iter().any(|k| k.eq_ignore_ascii_case(n)))
    {
        return Err(IngestError::UnknownColumn(bad.to_string()));
    }
    let find = |col: &str| names.iter().position(|n| n.eq_ignore_ascii_case(col));
    let need = |col: &'static str| find(col).ok_or(IngestError::MissingColumn(col));
    Ok(Columns {
        start: need(COL_START)?,
        end: need(COL_END)?,
        seconds: find(COL_SECONDS),
        fare: need(COL_FARE)?,
        pickup: need(COL_PICKUP)?,
        dropoff: need(COL_DROPOFF)?,
    })
}

fn parse_row(row: &csv::StringRecord, cols: &Columns) -> Result<TripRecord, String> {
    let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("");
    let start = parse_timestamp(cell(cols.start)).ok_or_else(|| format!("bad start time `{}`", cell(cols.start)))?;
    let end = parse_timestamp(cell(cols.end)).ok_or_else(|| format!("bad end time `{}`", cell(cols.end)))?;
    if end < start {
        return Err("trip ends before it starts".into());
    }
    let fare = parse_amount(cell(cols.fare)).ok_or_else(|| format!("bad fare `{}`", cell(cols.fare)))?;
    if fare < 0.0 {
        return Err("negative fare".into());
    }
    let seconds = match cols.seconds.map(cell) {
        None | Some("") => None,
        Some(s) => Some(parse_amount(s).ok_or_else(|| format!("bad trip seconds `{s}`"))?),
    };
    let pickup = cell(cols.pickup);
    if pickup.is_empty() {
        return Err("missing pickup tract".into());
    }
    let dropoff = cell(cols.dropoff);
    let record = TripRecord {
        start_time: start,
        end_time: end,
        fare,
        pickup_area: pickup.to_string(),
        dropoff_area: (!dropoff.is_empty()).then(|| dropoff.to_string()),
        seconds,
    };
    if record.duration_minutes() <= 0.0 {
        return Err("trip has no duration".into());
    }
    Ok(record)
}

/// Reads trip rows, keeping those that pass `filter` and have a dropoff
/// tract. Malformed rows are skipped and reported by line number.
pub fn parse_trips<R: Read>(input: R, filter: &TripFilter) -> Result<ParsedTrips, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let cols = columns(reader.headers()?)?;
    let mut out = ParsedTrips::default();
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => {
                // a broken row is skipped like any other malformed row
                let line = err.position().map_or(0, |p| p.line());
                if matches!(err.kind(), csv::ErrorKind::Io(_)) {
                    return Err(err.into());
                }
                out.malformed.push(MalformedRow {
                    line,
                    reason: err.to_string(),
                });
                continue;
            }
        }
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, &cols) {
            Err(reason) => out.malformed.push(MalformedRow { line, reason }),
            Ok(r) if !filter.keeps(&r.pickup_area, r.start_time) => out.filtered_out += 1,
            Ok(r) if r.dropoff_area.is_none() => out.missing_destination += 1,
            Ok(r) => out.records.push(r),
        }
    }
    if out.records.is_empty() && out.missing_destination == 0 && out.filtered_out == 0 && out.malformed.is_empty() {
        return Err(IngestError::NoRecords);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FareRate {
    /// Average of per-trip fare per minute.
    #[default]
    MeanOfRatios,
    /// Total fare over total minutes.
    RatioOfMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DestinationStats {
    pub tract: String,
    pub trip_count: u64,
    pub mean_fare: f64,
    /// Minutes.
    pub mean_duration: f64,
    pub mean_fare_per_minute: f64,
}

/// Per-dropoff-tract means, ordered by tract label. Records without a
/// dropoff tract are ignored.
pub fn aggregate(records: &[TripRecord], rate: FareRate) -> Vec<DestinationStats> {
    #[derive(Default)]
    struct Acc {
        n: u64,
        fare: f64,
        minutes: f64,
        per_minute: f64,
    }
    let mut by_tract: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in records {
        let Some(tract) = r.dropoff_area.as_deref() else { continue };
        let minutes = r.duration_minutes();
        let a = by_tract.entry(tract).or_default();
        a.n += 1;
        a.fare += r.fare;
        a.minutes += minutes;
        a.per_minute += r.fare / minutes;
    }
    by_tract
        .into_iter()
        .map(|(tract, a)| {
            let n = a.n as f64;
            DestinationStats {
                tract: tract.to_string(),
                trip_count: a.n,
                mean_fare: a.fare / n,
                mean_duration: a.minutes / n,
                mean_fare_per_minute: match rate {
                    FareRate::MeanOfRatios => a.per_minute / n,
                    FareRate::RatioOfMeans => a.fare / a.minutes,
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyParams {
    /// Driver waiting cost per minute.
    pub driver_cost: f64,
    pub platform_cost: f64,
    /// Minimum relocation time in minutes.
    pub min_relocation: f64,
    /// Driver arrivals per minute.
    pub driver_rate: f64,
    pub patience: u32,
    /// Total rider arrivals per minute; demand is split by trip count.
    pub total_demand_rate: f64,
    pub min_trip_count: u64,
}

impl Default for EconomyParams {
    fn default() -> Self {
        Self {
            driver_cost: 1.0 / 3.0,
            platform_cost: 1.0 / 3.0,
            min_relocation: 10.0,
            driver_rate: 10.0,
            patience: 12,
            total_demand_rate: 12.0,
            min_trip_count: 30,
        }
    }
}

/// Builds an economy with one destination per tract that has enough trips.
pub fn build_economy(stats: &[DestinationStats], params: &EconomyParams) -> Result<Economy<f64>, IngestError> {
    if stats.is_empty() {
        return Err(IngestError::AllFiltered {
            min_trip_count: params.min_trip_count,
        });
    }
    if !(params.total_demand_rate.is_finite() && params.total_demand_rate > 0.0) {
        return Err(IngestError::BadParameter("total demand rate must be positive".into()));
    }
    if !(params.min_relocation.is_finite() && params.min_relocation >= 0.0) {
        return Err(IngestError::BadParameter("minimum relocation time must be nonnegative".into()));
    }
    let kept: Vec<&DestinationStats> = stats
        .iter()
        .filter(|s| s.trip_count >= params.min_trip_count.max(1))
        .collect();
    let total: u64 = kept.iter().map(|s| s.trip_count).sum();
    let destinations: Vec<DestinationRecord<f64>> = kept
        .iter()
        .map(|s| {
            let trip = TripStats {
                duration: s.mean_duration,
                earnings_rate: s.mean_fare_per_minute,
                min_relocation: params.min_relocation,
            };
            DestinationRecord {
                demand_rate: params.total_demand_rate * s.trip_count as f64 / total as f64,
                net_earnings: net_earnings(&trip, params.driver_cost),
            }
        })
        .collect();
    let record = EconomyRecord {
        destinations,
        driver_rate: params.driver_rate,
        driver_cost: params.driver_cost,
        platform_cost: params.platform_cost,
        patience: params.patience,
    };
    match validate_economy(&record) {
        Err(EconomyError::Empty | EconomyError::NoAcceptableTrips) => Err(IngestError::AllFiltered {
            min_trip_count: params.min_trip_count,
        }),
        other => Ok(other?),
    }
}
