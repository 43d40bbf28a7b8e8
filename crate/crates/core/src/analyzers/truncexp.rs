//! Exponential waiting truncated at the end of a bin.
//!
//! A driver crossing a bin is offered a trip at rate `eta`; a fraction `zeta`
//! of the drivers entering the bin is dispatched before leaving it. Moments
//! below are conditional on being dispatched inside the bin.

use crate::scalar::Scalar;

/// Time to cross the bin when never dispatched: `-ln(1 - zeta) / eta`.
pub fn crossing_time<S: Scalar>(eta: S, zeta: S) -> S {
    -(-zeta).ln_1p() / eta
}

/// `E[t | t < crossing]` for `t ~ Exp(eta)`:
/// `(1/eta) (1 + (1/zeta - 1) ln(1 - zeta))`.
pub fn truncated_mean<S: Scalar>(eta: S, zeta: S) -> S {
    debug_assert!(zeta > S::zero() && zeta < S::one());
    if zeta < S::lit(0.05) {
        // sum_{n>=1} zeta^n / (n (n+1)), free of the cancellation near 0
        let mut term = S::one();
        let mut sum = S::zero();
        for n in 1..=40 {
            term *= zeta;
            let n = S::lit(n as f64);
            sum += term / (n * (n + S::one()));
        }
        return sum / eta;
    }
    let l = (-zeta).ln_1p();
    (S::one() + (S::one() / zeta - S::one()) * l) / eta
}

/// `Var[c t | t < crossing]`:
/// `(c / (eta zeta))^2 (zeta^2 + (zeta - 1) ln^2(1 - zeta))`.
pub fn truncated_cost_variance<S: Scalar>(c: S, eta: S, zeta: S) -> S {
    debug_assert!(zeta > S::zero() && zeta < S::one());
    let g = if zeta < S::lit(0.05) {
        // ln^2(1 - z) = sum_{n>=2} a_n z^n with a_n = 2 H_{n-1} / n, so
        // z^2 + (z - 1) ln^2(1 - z) = sum_{n>=3} (a_{n-1} - a_n) z^n
        let mut harmonic = S::one();
        let mut a_prev = S::one();
        let mut power = zeta * zeta;
        let mut sum = S::zero();
        for n in 3..=45 {
            let nf = S::lit(n as f64);
            harmonic += S::one() / (nf - S::one());
            let a = S::lit(2.0) * harmonic / nf;
            power *= zeta;
            sum += (a_prev - a) * power;
            a_prev = a;
        }
        sum
    } else {
        let l = (-zeta).ln_1p();
        zeta * zeta + (zeta - S::one()) * l * l
    };
    let k = c / (eta * zeta);
    k * k * g
}
