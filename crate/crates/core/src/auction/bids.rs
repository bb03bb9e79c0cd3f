//! Channel-level bid generation for the standard CA.

use std::collections::HashMap;

use crate::assignment::ChannelSet;
use crate::connectivity::{utility, CapacityModel};
use crate::error::{Error, Result};
use crate::prealloc::{Preallocation, DEFAULT_MAX_CHANNELS};
use crate::scenario::Scenario;

use super::{Bid, BidMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BidOptions {
    /// Largest preallocated set a tenant may bid on.
    pub max_channels: usize,
    /// Drop bids beaten by a cheaper subset of the same tenant.
    pub prune_dominated: bool,
}

impl Default for BidOptions {
    fn default() -> Self {
        Self { max_channels: DEFAULT_MAX_CHANNELS, prune_dominated: false }
    }
}

/// One bid per non-empty subset of each tenant's preallocated channels,
/// valued by the tenant's utility of the subset's capacity.
pub fn generate_channel_bids<M: CapacityModel + ?Sized>(
    scenario: &Scenario,
    model: &M,
    prealloc: &Preallocation,
    opts: &BidOptions,
) -> Result<BidMatrix> {
    let (n_t, n_ch) = (scenario.n_tenants(), scenario.n_channels());
    if prealloc.assign.n_tenants() != n_t || prealloc.assign.n_channels() != n_ch {
        return Err(Error::DimensionMismatch(format!(
            "preallocation is {}x{}, scenario has {n_t} tenants and {n_ch} channels",
            prealloc.assign.n_tenants(),
            prealloc.assign.n_channels()
        )));
    }
    let mut rows = Vec::new();
    for k in 0..n_t {
        let chans: Vec<usize> = prealloc.channels(k).iter().collect();
        if chans.len() > opts.max_channels {
            return Err(Error::BidBudgetExceeded { tenant: k, channels: chans.len(), max: opts.max_channels });
        }
        // subsets with equal class counts have equal capacity
        let mut classes: Vec<usize> = Vec::new();
        let slot: Vec<usize> = chans
            .iter()
            .map(|&j| {
                let c = model.channel_class(j);
                classes.iter().position(|&x| x == c).unwrap_or_else(|| {
                    classes.push(c);
                    classes.len() - 1
                })
            })
            .collect();
        let bounds = &scenario.utility_bounds()[k];
        let mut by_signature: HashMap<u64, f64> = HashMap::new();
        for sub in 1u32..1 << chans.len() {
            let mut set = ChannelSet::EMPTY;
            let mut signature = 0u64;
            for (p, &j) in chans.iter().enumerate() {
                if sub >> p & 1 == 1 {
                    set.insert(j);
                    signature += 1 << (4 * slot[p]);
                }
            }
            let value = *by_signature.entry(signature).or_insert_with(|| utility(model.capacity(k, set), bounds));
            rows.push(Bid { bundle: set, value, bidder: k });
        }
    }
    let bids = BidMatrix::new(n_ch, n_t, rows)?;
    Ok(if opts.prune_dominated { prune_dominated(&bids) } else { bids })
}

/// Keeps, per bidder, only bids not weakly beaten by a bid on a strict
/// subset of their bundle. Row order is preserved.
pub fn prune_dominated(bids: &BidMatrix) -> BidMatrix {
    let rows = bids.rows();
    let mut by_bidder: Vec<Vec<usize>> = vec![Vec::new(); bids.n_bidders()];
    for (r, b) in rows.iter().enumerate() {
        by_bidder[b.bidder].push(r);
    }
    let kept = rows
        .iter()
        .filter(|s| {
            !by_bidder[s.bidder].iter().any(|&t| {
                let t = &rows[t];
                t.bundle != s.bundle && t.bundle.is_subset(s.bundle) && t.value >= s.value
            })
        })
        .copied()
        .collect();
    BidMatrix::new(bids.n_items(), bids.n_bidders(), kept).expect("subset of a valid matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::AssignmentMatrix;
    use crate::auction::{solve_ca, SolveOptions};
    use crate::connectivity::{LinkModel, RayleighSelection};
    use crate::prealloc::{random_prealloc, MethodTag};
    use crate::rng::Streams;
    use crate::scenario::{generate_scenario, SetupClass};

    fn prealloc_of(rows: Vec<ChannelSet>, n_ch: usize) -> Preallocation {
        Preallocation { assign: AssignmentMatrix::from_rows(n_ch, rows).unwrap(), method: MethodTag::R }
    }

    #[test]
    fn counts_per_tenant() {
        let sc = generate_scenario(SetupClass::SS, 4);
        let model = RayleighSelection::new(&sc, &LinkModel::default());
        let n_ch = sc.n_channels();
        let mut rows = vec![ChannelSet::EMPTY; sc.n_tenants()];
        rows[0] = (0..8).collect();
        rows[1] = (0..3).collect();
        let bids = generate_channel_bids(&sc, &model, &prealloc_of(rows, n_ch), &BidOptions::default()).unwrap();
        let per = bids.bids_per_bidder();
        assert_eq!(per[0], 255);
        assert_eq!(per[1], 7);
        assert!(per[2..].iter().all(|&c| c == 0));
    }

    #[test]
    fn budget_guard() {
        let sc = generate_scenario(SetupClass::SS, 4);
        let model = RayleighSelection::new(&sc, &LinkModel::default());
        let mut rows = vec![ChannelSet::EMPTY; sc.n_tenants()];
        rows[3] = (0..9).collect();
        let err = generate_channel_bids(&sc, &model, &prealloc_of(rows, sc.n_channels()), &BidOptions::default());
        assert!(matches!(err, Err(Error::BidBudgetExceeded { tenant: 3, channels: 9, max: 8 })));
    }

    #[test]
    fn values_are_subset_monotone_and_match_direct_evaluation() {
        let sc = generate_scenario(SetupClass::MS, 11);
        let model = RayleighSelection::new(&sc, &LinkModel::default());
        let pre = random_prealloc(&sc, 8, &Streams::new(11));
        let bids = generate_channel_bids(&sc, &model, &pre, &BidOptions::default()).unwrap();
        let rows = bids.rows();
        for a in rows {
            let direct = utility(model.capacity(a.bidder, a.bundle), &sc.utility_bounds()[a.bidder]);
            assert_eq!(a.value, direct);
            for b in rows.iter().filter(|b| b.bidder == a.bidder && a.bundle.is_subset(b.bundle)) {
                assert!(a.value <= b.value);
            }
        }
    }

    #[test]
    fn pruning_keeps_optimum() {
        for seed in 0..5 {
            let sc = generate_scenario(SetupClass::SS, seed);
            let model = RayleighSelection::new(&sc, &LinkModel::default());
            let pre = random_prealloc(&sc, 8, &Streams::new(seed));
            let full = generate_channel_bids(&sc, &model, &pre, &BidOptions::default()).unwrap();
            let pruned =
                generate_channel_bids(&sc, &model, &pre, &BidOptions { prune_dominated: true, ..BidOptions::default() })
                    .unwrap();
            assert!(pruned.len() <= full.len());
            let a = solve_ca(&full, &SolveOptions::default()).unwrap();
            let b = solve_ca(&pruned, &SolveOptions::default()).unwrap();
            assert!((a.objective - b.objective).abs() <= 1e-12 * a.objective.max(1.0), "{a:?} {b:?}");
        }
    }
}
