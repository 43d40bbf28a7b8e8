#![allow(dead_code)]

use qdispatch::economy::{validate_economy, DestinationRecord, Economy, EconomyRecord};
use qdispatch::partition::OrderedPartition;
use rand::Rng;

pub fn economy(mu: &[f64], w: &[f64], lambda: f64, c: f64, c0: f64, p: u32) -> Economy<f64> {
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
        platform_cost: c0,
        patience: p,
    })
    .expect("valid economy")
}

/// mu = (1, 6, 3), w = (75, 25, 15), c = c0 = 1/3.
pub fn three_destinations(lambda: f64, p: u32) -> Economy<f64> {
    economy(&[1.0, 6.0, 3.0], &[75.0, 25.0, 15.0], lambda, 1.0 / 3.0, 1.0 / 3.0, p)
}

pub const SYNTH_W: [f64; 10] = [60.0, 50.0, 42.0, 35.0, 29.0, 24.0, 20.0, 16.0, 13.0, 10.0];
pub const SYNTH_MU: [f64; 10] = [0.5, 0.8, 1.0, 1.5, 2.0, 1.7, 1.5, 1.2, 1.0, 0.8];

pub fn ten_destinations(lambda: f64, p: u32) -> Economy<f64> {
    economy(&SYNTH_MU, &SYNTH_W, lambda, 1.0 / 3.0, 1.0 / 3.0, p)
}

/// Random economy with up to `max_len` destinations. Earnings are spaced
/// apart so none merge; the supply regime is picked by a coin flip and
/// kept clear of the prefix sums of demand.
pub fn random_economy<R: Rng>(rng: &mut R, max_len: usize, zero_platform_cost: bool) -> Economy<f64> {
    let len = rng.random_range(1..=max_len);
    let mu: Vec<f64> = (0..len).map(|_| rng.random_range(0.2..4.0)).collect();
    let mut w = Vec::with_capacity(len);
    let mut level = rng.random_range(40.0..120.0);
    for _ in 0..len {
        w.push(level);
        level -= rng.random_range(0.5..15.0);
    }
    let c = rng.random_range(0.05..1.0);
    let c0 = if zero_platform_cost { 0.0 } else { rng.random_range(0.0..=c) };
    let p = rng.random_range(1..=30);
    let total: f64 = mu.iter().sum();
    let lambda = loop {
        let x = if rng.random_bool(0.5) {
            total * rng.random_range(0.05..0.97)
        } else {
            total * rng.random_range(1.03..2.0)
        };
        let mut acc = 0.0;
        let clear = mu.iter().all(|m| {
            acc += m;
            (x - acc).abs() > 1e-3 * total
        });
        if clear {
            break x;
        }
    };
    economy(&mu, &w, lambda, c, c0, p)
}

/// `m` contiguous groups over `1..=j`, larger groups first.
pub fn balanced_partition(j: usize, m: usize) -> OrderedPartition {
    let sizes: Vec<usize> = (0..m).map(|k| j / m + usize::from(k < j % m)).collect();
    OrderedPartition::from_sizes(&sizes).unwrap()
}

/// Uniformly random composition of `j` into contiguous groups, at most
/// `max_groups` of them.
pub fn random_partition<R: Rng>(rng: &mut R, j: usize, max_groups: usize) -> OrderedPartition {
    loop {
        let mut sizes = Vec::new();
        let mut run = 1;
        for _ in 1..j {
            if rng.random_bool(0.5) {
                sizes.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        sizes.push(run);
        if sizes.len() <= max_groups {
            return OrderedPartition::from_sizes(&sizes).unwrap();
        }
    }
}

/// Thresholds straight from their definition.
pub fn thresholds_oracle(mu: &[f64], w: &[f64], c: f64) -> Vec<f64> {
    (0..w.len())
        .map(|i| (0..i).map(|j| (w[j] - w[i]) * mu[j]).sum::<f64>() / c)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature to absolute tolerance `eps`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, eps, 60)
}

pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

/// One line per criterion, written past the test harness's output capture so
/// it always shows up in the log.
pub fn report(id: u32, name: &str, passed: bool, detail: &str) {
    use std::io::Write;
    let verdict = if passed { "PASS" } else { "FAIL" };
    let line = format!("acceptance {id} {verdict} {name}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}
