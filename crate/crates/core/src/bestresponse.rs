//! Best response of a driver facing stationary offer rates.
//!
//! A driver who receives offers to destination `i` at rate `eta_i` and
//! accepts exactly the top `j` destinations earns, per accepted trip,
//! `rho_j = (sum_{i<=j} w_i eta_i - c) / sum_{i<=j} eta_i`. The optimal
//! cutoff maximizes `rho_j`; waiting is only worthwhile when the maximum is
//! nonnegative.

use thiserror::Error;

use crate::economy::Economy;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BestResponseError {
    #[error("expected {expected} offer rates, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("offer rate for destination {0} must be finite and nonnegative")]
    BadRate(usize),
    #[error("no offers to destinations 1..={0}")]
    ZeroRate(usize),
    #[error("cutoff {0} is outside 1..=L")]
    BadCutoff(usize),
}

/// Offer rates `eta_i`, aligned with an economy's destination indices.
#[derive(Debug, Clone, PartialEq)]
pub struct OfferRates<S> {
    rates: Vec<S>,
}

impl<S: Scalar> OfferRates<S> {
    pub fn new(rates: Vec<S>) -> Result<Self, BestResponseError> {
        if let Some(i) = rates.iter().position(|r| !(r.is_finite() && *r >= S::zero())) {
            return Err(BestResponseError::BadRate(i + 1));
        }
        Ok(Self { rates })
    }

    /// Rates `mu_i / q`: every trip offered uniformly over a queue of mass `q`.
    pub fn uniform(e: &Economy<S>, q: S) -> Result<Self, BestResponseError> {
        Self::new(e.demand_rates().into_iter().map(|m| m / q).collect())
    }

    pub fn as_slice(&self) -> &[S] {
        &self.rates
    }

    fn check(&self, e: &Economy<S>) -> Result<(), BestResponseError> {
        if self.rates.len() != e.len() {
            return Err(BestResponseError::LengthMismatch {
                expected: e.len(),
                got: self.rates.len(),
            });
        }
        Ok(())
    }
}

/// Result of [`best_cutoff`]: accept destinations `1..=cutoff`, or leave
/// immediately when `cutoff` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse<S> {
    pub cutoff: Option<usize>,
    pub payoff: S,
}

pub fn cutoff_payoff<S: Scalar>(rates: &OfferRates<S>, e: &Economy<S>, j: usize) -> Result<S, BestResponseError> {
    rates.check(e)?;
    if j == 0 || j > e.len() {
        return Err(BestResponseError::BadCutoff(j));
    }
    let mut num = S::zero();
    let mut den = S::zero();
    for (d, &eta) in e.destinations().iter().zip(rates.as_slice()).take(j) {
        num += d.net_earnings * eta;
        den += eta;
    }
    if den <= S::zero() {
        return Err(BestResponseError::ZeroRate(j));
    }
    Ok((num - e.driver_cost()) / den)
}

/// All cutoff payoffs `rho_1..rho_L`; `None` where the cumulative rate is zero.
pub fn cutoff_payoffs<S: Scalar>(rates: &OfferRates<S>, e: &Economy<S>) -> Result<Vec<Option<S>>, BestResponseError> {
    rates.check(e)?;
    Ok((1..=e.len()).map(|j| cutoff_payoff(rates, e, j).ok()).collect())
}

pub fn best_cutoff<S: Scalar>(rates: &OfferRates<S>, e: &Economy<S>) -> Result<BestResponse<S>, BestResponseError> {
    let rhos = cutoff_payoffs(rates, e)?;
    let mut best: Option<(usize, S)> = None;
    for (k, rho) in rhos.iter().enumerate() {
        if let Some(r) = *rho {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((k + 1, r));
            }
        }
    }
    let (j, rho) = best.ok_or(BestResponseError::ZeroRate(e.len()))?;
    // rho_L can land a hair below zero at an indifferent queue length
    let scale = e.w(1).max(e.driver_cost());
    if rho < -S::rel_tol() * scale * S::lit(16.0) {
        return Ok(BestResponse {
            cutoff: None,
            payoff: S::zero(),
        });
    }
    Ok(BestResponse {
        cutoff: Some(j),
        payoff: rho.max(S::zero()),
    })
}
