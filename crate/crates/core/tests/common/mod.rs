//! Instance builders and brute-force references shared by the test targets.
#![allow(dead_code)]

use mcalloc::auction::MinChannels;
use mcalloc::connectivity::{connectivity, utility};
use mcalloc::scenario::Point;
use mcalloc::{AssignmentMatrix, Bid, BidMatrix, ChannelSet, LinkModel, Scenario, Stream, Streams, UtilityBounds};
use rand::Rng;

/// Small scenario with random geometry, fading and utility bounds. The
/// bounds are spread around single- and few-channel capacities so that
/// utilities neither all vanish nor all saturate.
pub fn tiny_scenario(seed: u64, n_tenants: usize, channels_per_bs: Vec<usize>) -> Scenario {
    let mut rng = Streams::new(seed).rng(Stream::Placement, 77);
    let (w, h) = (60.0, 40.0);
    let tenants: Vec<Point> = (0..n_tenants).map(|_| Point::new(rng.random_range(1.0..w - 1.0), rng.random_range(1.0..h - 1.0))).collect();
    let bss: Vec<Point> = channels_per_bs.iter().map(|_| Point::new(rng.random_range(0.0..w), 0.0)).collect();
    let fading: Vec<Vec<f64>> = (0..n_tenants)
        .map(|_| channels_per_bs.iter().map(|_| if rng.random_bool(0.3) { 14.1 * rng.random_range(0.2..0.8) } else { 14.1 }).collect())
        .collect();
    let placeholder = vec![UtilityBounds::new(1.0, 2.0).unwrap(); n_tenants];
    let sc = Scenario::from_parts(w, h, tenants, bss, channels_per_bs, fading, placeholder, seed).unwrap();
    let link = LinkModel::default();
    let bounds = (0..n_tenants)
        .map(|k| {
            let best_single = (0..sc.n_channels()).map(|j| connectivity(&sc, &link, k, ChannelSet::single(j))).fold(0.0, f64::max);
            let c_min = best_single * rng.random_range(0.3..0.9);
            let c_max = best_single * rng.random_range(1.2..2.5);
            UtilityBounds::new(c_min, c_max).unwrap()
        })
        .collect();
    sc.with_utility_bounds(bounds).unwrap()
}

/// Best total utility over assignments giving each channel to at most one
/// tenant that has it preallocated.
pub fn restricted_optimum(scenario: &Scenario, link: &LinkModel, prealloc: &AssignmentMatrix) -> f64 {
    let n_t = scenario.n_tenants();
    let n_ch = scenario.n_channels();
    let options: Vec<Vec<usize>> = (0..n_ch).map(|j| (0..n_t).filter(|&k| prealloc.get(k, j)).collect()).collect();
    let mut rows = vec![ChannelSet::EMPTY; n_t];
    let mut best = f64::NEG_INFINITY;
    fn rec(j: usize, options: &[Vec<usize>], rows: &mut [ChannelSet], best: &mut f64, sc: &Scenario, link: &LinkModel) {
        if j == options.len() {
            let total: f64 = rows
                .iter()
                .enumerate()
                .map(|(k, &s)| utility(connectivity(sc, link, k, s), &sc.utility_bounds()[k]))
                .sum();
            *best = best.max(total);
            return;
        }
        rec(j + 1, options, rows, best, sc, link);
        for &k in &options[j] {
            rows[k].insert(j);
            rec(j + 1, options, rows, best, sc, link);
            rows[k].remove(j);
        }
    }
    rec(0, &options, &mut rows, &mut best, scenario, link);
    best
}

/// Random bids on `n_items` items from `n_bidders` bidders with distinct
/// (bundle, bidder) pairs and values in (0, 1).
pub fn random_bids<R: Rng>(rng: &mut R, n_items: usize, n_bidders: usize, n_rows: usize) -> BidMatrix {
    let max_rows = n_bidders * ((1usize << n_items) - 1);
    let n_rows = n_rows.min(max_rows);
    let mut rows: Vec<Bid> = Vec::with_capacity(n_rows);
    while rows.len() < n_rows {
        let bits = rng.random_range(1u64..1 << n_items);
        let bidder = rng.random_range(0..n_bidders);
        let mut bundle = ChannelSet::EMPTY;
        for i in 0..n_items {
            if bits >> i & 1 == 1 {
                bundle.insert(i);
            }
        }
        if rows.iter().any(|b| b.bundle == bundle && b.bidder == bidder) {
            continue;
        }
        rows.push(Bid { bundle, value: rng.random_range(0.001..1.0), bidder });
    }
    BidMatrix::new(n_items, n_bidders, rows).unwrap()
}

pub fn min_channels(capped: &[usize], min: usize) -> MinChannels<'_> {
    MinChannels { per_item: capped, min }
}
