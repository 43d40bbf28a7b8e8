//! Equilibrium analysis and simulation of dispatch mechanisms for strategic
//! drivers waiting in a virtual queue.
//!
//! The analytic modules are generic over the scalar type; the aliases at the
//! crate root fix it to `f64`, with `*32` variants for `f32`.

pub mod analyzers;
pub mod bestresponse;
pub mod economy;
pub mod ingest;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod sweep;

pub use analyzers::Mechanism;
pub use scalar::Scalar;

pub type Economy = economy::Economy<f64>;
pub type Economy32 = economy::Economy<f32>;
pub type EconomyRecord = economy::EconomyRecord<f64>;
pub type EquilibriumOutcome = analyzers::EquilibriumOutcome<f64>;
pub type EquilibriumOutcome32 = analyzers::EquilibriumOutcome<f32>;
pub type ContinuationPayoffCurve = analyzers::ContinuationPayoffCurve<f64>;
pub type ContinuationPayoffCurve32 = analyzers::ContinuationPayoffCurve<f32>;
pub type BinLayout = partition::BinLayout<f64>;
pub type BinLayout32 = partition::BinLayout<f32>;
pub type OfferRates = bestresponse::OfferRates<f64>;
