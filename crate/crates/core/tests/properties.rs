mod common;

use proptest::prelude::*;
use qdispatch::analyzers::{
    direct_fifo, first_best, random_dispatch, randomized_fifo, randomized_fifo_mixture, strict_fifo, thresholds,
};
use qdispatch::bestresponse::{best_cutoff, cutoff_payoff, OfferRates};
use qdispatch::economy::{
    max_completed_index, net_earnings, parse_economy_text, validate_economy, write_economy_text, DestinationRecord,
    Economy, EconomyRecord, TripStats,
};
use qdispatch::partition::{bins, default_partition, OrderedPartition};
use qdispatch::report::format_value;

use common::{balanced_partition, rel_close};

const REL: f64 = 1e-9;

prop_compose! {
    fn raw_economy()(
        rows in prop::collection::vec((0.2f64..4.0, 0.5f64..15.0), 1..=8),
        top in 40.0f64..120.0,
        c in 0.05f64..1.0,
        c0_share in 0.0f64..=1.0,
        p in 1u32..=30,
        over in any::<bool>(),
        factor in 0.0f64..1.0,
    ) -> EconomyRecord<f64> {
        let mut level = top;
        let destinations = rows
            .iter()
            .map(|&(mu, gap)| {
                let d = DestinationRecord { demand_rate: mu, net_earnings: level };
                level -= gap;
                d
            })
            .collect::<Vec<_>>();
        let total: f64 = rows.iter().map(|r| r.0).sum();
        let lambda = if over { total * (1.03 + factor) } else { total * (0.05 + 0.92 * factor) };
        EconomyRecord { destinations, driver_rate: lambda, driver_cost: c, platform_cost: c * c0_share, patience: p }
    }
}

fn clear_of_prefix_sums(e: &Economy<f64>) -> bool {
    let total = e.total_demand();
    (1..=e.len()).all(|j| (e.driver_rate() - e.demand_through(j)).abs() > 1e-3 * total)
}

prop_compose! {
    fn any_economy()(raw in raw_economy()) -> Economy<f64> {
        validate_economy(&raw).unwrap()
    }
}

fn generic_economy() -> impl Strategy<Value = Economy<f64>> {
    any_economy().prop_filter("non-degenerate", clear_of_prefix_sums)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn served_index_brackets_supply(e in any_economy()) {
        let j = max_completed_index(&e);
        prop_assert!(e.demand_through(j - 1) < e.driver_rate());
        prop_assert!(j == e.len() || e.driver_rate() <= e.demand_through(j) * (1.0 + 1e-9));
    }

    #[test]
    fn validation_is_idempotent(e in any_economy()) {
        prop_assert_eq!(validate_economy(&e.to_record()).unwrap(), e);
    }

    #[test]
    fn text_format_round_trips(e in any_economy()) {
        let text = write_economy_text(&e);
        let back = validate_economy(&parse_economy_text::<f64>(&text).unwrap()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn net_earnings_is_linear(t in 1.0f64..90.0, p in 0.0f64..3.0, t0 in 0.0f64..30.0, c in 0.01f64..2.0, d in 0.01f64..5.0) {
        let at = |t: f64, p: f64| net_earnings(&TripStats { duration: t, earnings_rate: p, min_relocation: t0 }, c);
        let base = at(t, p);
        prop_assert!(rel_close(at(t + d, p) - base, d * (p - c), 1e-9, base.abs().max(1.0)));
        prop_assert!(rel_close(at(t, p + d) - base, d * t, 1e-9, base.abs().max(1.0)));
        prop_assert!(rel_close(base, t * (p - c) + t0 * c, 1e-12, 1.0));
    }

    #[test]
    fn cutoff_payoff_is_a_running_weighted_average(
        e in any_economy(),
        etas in prop::collection::vec(0.01f64..3.0, 8),
    ) {
        let rates = OfferRates::new(etas[..e.len()].to_vec()).unwrap();
        for j in 2..=e.len() {
            let cum = |k: usize| etas[..k].iter().sum::<f64>();
            let lhs = cutoff_payoff(&rates, &e, j).unwrap() * cum(j);
            let rhs = cutoff_payoff(&rates, &e, j - 1).unwrap() * cum(j - 1) + e.w(j) * etas[j - 1];
            prop_assert!(rel_close(lhs, rhs, 1e-12, e.w(1)));
        }
    }

    #[test]
    fn cutoff_payoffs_are_unimodal_and_best_is_argmax(
        e in any_economy(),
        etas in prop::collection::vec(0.0f64..3.0, 8),
    ) {
        let mut etas = etas[..e.len()].to_vec();
        etas[0] = etas[0].max(1e-3);
        let rates = OfferRates::new(etas).unwrap();
        let rho: Vec<f64> = (1..=e.len()).map(|j| cutoff_payoff(&rates, &e, j).unwrap()).collect();
        let tol = 1e-12 * e.w(1);
        let peak = (0..rho.len()).find(|&k| k + 1 == rho.len() || rho[k] > e.w(k + 2)).unwrap();
        for k in 1..rho.len() {
            if k <= peak {
                prop_assert!(rho[k] >= rho[k - 1] - tol, "{rho:?} peak {peak}");
            } else {
                prop_assert!(rho[k] <= rho[k - 1] + tol, "{rho:?} peak {peak}");
            }
        }
        let mut arg = 0;
        for k in 1..rho.len() {
            if rho[k] > rho[arg] {
                arg = k;
            }
        }
        let best = best_cutoff(&rates, &e).unwrap();
        if rho[arg] >= 0.0 {
            prop_assert_eq!(best.cutoff, Some(arg + 1));
            prop_assert_eq!(best.payoff, rho[arg]);
        } else if rho[arg] < -1e-9 * e.w(1) {
            prop_assert_eq!(best.cutoff, None);
        }
    }

    #[test]
    fn mechanisms_order_throughput_and_revenue(e in generic_economy()) {
        let fb = first_best(&e);
        let s = strict_fifo(&e);
        let d = direct_fifo(&e);
        let r = random_dispatch(&e);
        let layout = bins(&e, &default_partition(&e)).unwrap();
        let rf = randomized_fifo(&e, &layout).unwrap();
        let scale = e.w(1);
        prop_assert!(s.throughput <= d.throughput * (1.0 + REL));
        for o in [&d, &r, &rf] {
            prop_assert!(rel_close(o.throughput, fb.throughput, REL, 1.0));
            prop_assert!(rel_close(o.net_revenue, d.net_revenue, REL, scale));
        }
        prop_assert!(s.net_revenue <= d.net_revenue + REL * scale);
        prop_assert!(d.net_revenue <= fb.net_revenue + REL * scale);
    }

    #[test]
    fn platform_cost_free_revenue_is_first_best(raw in raw_economy()) {
        let raw = EconomyRecord { platform_cost: 0.0, ..raw };
        let e = validate_economy(&raw).unwrap();
        prop_assume!(clear_of_prefix_sums(&e));
        prop_assert!(rel_close(direct_fifo(&e).net_revenue, first_best(&e).net_revenue, REL, e.w(1)));
    }

    #[test]
    fn littles_law_when_under_supplied(e in generic_economy()) {
        prop_assume!(!e.is_over_supplied());
        let layout = bins(&e, &default_partition(&e)).unwrap();
        for o in [direct_fifo(&e), random_dispatch(&e), randomized_fifo(&e, &layout).unwrap()] {
            prop_assert!(rel_close(o.wait_avg_joined * o.throughput, o.queue_length, REL, 1e-9), "{o:?}");
        }
    }

    #[test]
    fn randomized_variance_limits(e in generic_economy()) {
        let j = max_completed_index(&e);
        let patient = e.with_patience(e.patience().max(j as u32)).unwrap();
        let singles = bins(&patient, &OrderedPartition::singletons(j)).unwrap();
        prop_assert_eq!(randomized_fifo(&patient, &singles).unwrap().payoff_variance, 0.0);
        if !e.is_over_supplied() && j > 1 {
            let one = bins(&e, &OrderedPartition::from_sizes(&[j]).unwrap()).unwrap();
            let v = randomized_fifo(&e, &one).unwrap().payoff_variance;
            prop_assert!(rel_close(v, random_dispatch(&e).payoff_variance, REL, 1.0));
        }
    }

    #[test]
    fn mixture_weights_and_mean(e in generic_economy(), m_pick in 0usize..8) {
        let j = max_completed_index(&e);
        let limit = j.min(e.patience() as usize);
        prop_assume!(limit >= 2);
        let m = 2 + m_pick % (limit - 1);
        let layout = bins(&e, &balanced_partition(j, m)).unwrap();
        let mix = randomized_fifo_mixture(&e, &layout).unwrap();
        let total: f64 = mix.balk_weight + mix.bins.iter().map(|b| b.weight).sum::<f64>();
        prop_assert!((total - 1.0).abs() <= REL);
        let mean: f64 = mix.bins.iter().map(|b| b.weight * b.mean).sum();
        let u = direct_fifo(&e).payoff_mean;
        prop_assert!(rel_close(mean, u, REL, e.w(1)), "{mean} vs {u}");
        prop_assert!(mix.bins.iter().all(|b| b.variance >= 0.0));
    }

    #[test]
    fn strict_throughput_grows_with_patience(e in generic_economy()) {
        let n = thresholds(&e);
        let n_j = n[max_completed_index(&e) - 1];
        let fb = first_best(&e).throughput;
        let mut last = 0.0;
        for p in [1u32, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597] {
            let t = strict_fifo(&e.with_patience(p).unwrap()).throughput;
            prop_assert!(t >= last - REL * fb);
            if f64::from(p) >= n_j {
                prop_assert!(rel_close(t, fb, REL, 1.0));
            } else {
                prop_assert!(t < fb * (1.0 - REL));
            }
            last = t;
        }
    }

    #[test]
    fn default_partition_is_stable(e in any_economy()) {
        let a = default_partition(&e);
        let b = default_partition(&e);
        prop_assert_eq!(&a, &b);
        let sizes: Vec<usize> = a.groups().iter().map(Vec::len).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
        prop_assert_eq!(a.len(), max_completed_index(&e).min(e.patience() as usize));
    }

    #[test]
    fn partition_literal_round_trips(sizes in prop::collection::vec(1usize..5, 1..6)) {
        let p = OrderedPartition::from_sizes(&sizes).unwrap();
        prop_assert_eq!(p.to_string().parse::<OrderedPartition>().unwrap(), p);
    }

    #[test]
    fn single_precision_tracks_double(raw in raw_economy()) {
        let e64 = validate_economy(&raw).unwrap();
        prop_assume!(clear_of_prefix_sums(&e64));
        let raw32 = EconomyRecord {
            destinations: raw
                .destinations
                .iter()
                .map(|d| DestinationRecord { demand_rate: d.demand_rate as f32, net_earnings: d.net_earnings as f32 })
                .collect(),
            driver_rate: raw.driver_rate as f32,
            driver_cost: raw.driver_cost as f32,
            platform_cost: raw.platform_cost as f32,
            patience: raw.patience,
        };
        let e32 = validate_economy(&raw32).unwrap();
        prop_assume!(max_completed_index(&e32) == max_completed_index(&e64));
        let (a, b) = (direct_fifo(&e64), direct_fifo(&e32));
        prop_assert!(rel_close(f64::from(b.queue_length), a.queue_length, 1e-3, 1.0));
        prop_assert!(rel_close(f64::from(b.payoff_mean), a.payoff_mean, 1e-3, e64.w(1)));
    }

    #[test]
    fn csv_numbers_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = format_value(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!(back == x || (x == 0.0 && back == 0.0));
    }
}
