//! Exhaustive winner determination and an independent solution checker.

use crate::assignment::ChannelSet;
use crate::error::{Error, Result};

use super::{BidMatrix, WdpSolution};

pub const BRUTE_FORCE_MAX_ROWS: usize = 24;

/// Minimum number of channels a winning bundle must carry, counted with
/// per-item channel counts.
#[derive(Debug, Clone, Copy)]
pub struct MinChannels<'a> {
    pub per_item: &'a [usize],
    pub min: usize,
}

impl MinChannels<'_> {
    pub fn total(&self, bundle: ChannelSet) -> usize {
        bundle.iter().map(|i| self.per_item[i]).sum()
    }

    pub fn admits(&self, bundle: ChannelSet) -> bool {
        self.total(bundle) >= self.min
    }
}

struct Enum<'a> {
    bids: &'a BidMatrix,
    quota: usize,
    require_all: bool,
    min: Option<MinChannels<'a>>,
    counts: Vec<usize>,
    taken: Vec<bool>,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Enum<'_> {
    fn run(&mut self, row: usize, value: f64) {
        if row == self.bids.len() {
            if self.require_all && self.taken.iter().any(|t| !t) {
                return;
            }
            if self.best.as_ref().is_none_or(|(v, _)| value > *v) {
                self.best = Some((value, self.chosen.clone()));
            }
            return;
        }
        self.run(row + 1, value);
        let b = self.bids.rows()[row];
        if self.taken[b.bidder]
            || b.bundle.iter().any(|i| self.counts[i] >= self.quota)
            || self.min.as_ref().is_some_and(|m| !m.admits(b.bundle))
        {
            return;
        }
        self.taken[b.bidder] = true;
        b.bundle.iter().for_each(|i| self.counts[i] += 1);
        self.chosen.push(row);
        self.run(row + 1, value + b.value);
        self.chosen.pop();
        b.bundle.iter().for_each(|i| self.counts[i] -= 1);
        self.taken[b.bidder] = false;
    }
}

/// Enumerates every acceptance vector. Only for small instances.
pub fn brute_force_wdp(
    bids: &BidMatrix,
    item_quota: usize,
    require_all_bidders: bool,
    min_channels: Option<MinChannels<'_>>,
) -> Result<WdpSolution> {
    if bids.len() > BRUTE_FORCE_MAX_ROWS {
        return Err(Error::InstanceTooLarge { rows: bids.len(), max: BRUTE_FORCE_MAX_ROWS });
    }
    let mut e = Enum {
        bids,
        quota: item_quota,
        require_all: require_all_bidders,
        min: min_channels,
        counts: vec![0; bids.n_items()],
        taken: vec![false; bids.n_bidders()],
        chosen: Vec::new(),
        best: None,
    };
    e.run(0, 0.0);
    match e.best {
        Some((objective, accepted)) => Ok(WdpSolution { accepted, objective, proven_optimal: true }),
        None => {
            let tenant = (0..bids.n_bidders())
                .find(|&k| {
                    !bids.rows().iter().any(|b| b.bidder == k && min_channels.as_ref().is_none_or(|m| m.admits(b.bundle)))
                })
                .unwrap_or(0);
            Err(Error::Infeasible { tenant })
        }
    }
}

/// Re-checks a solution against the bid matrix from scratch.
pub fn verify_solution(
    bids: &BidMatrix,
    solution: &WdpSolution,
    item_quota: usize,
    require_all_bidders: bool,
    min_channels: Option<MinChannels<'_>>,
) -> std::result::Result<(), String> {
    let mut counts = vec![0usize; bids.n_items()];
    let mut winner = vec![None; bids.n_bidders()];
    let mut prev = None;
    let mut sum = 0.0;
    for &r in &solution.accepted {
        if prev.is_some_and(|p| p >= r) {
            return Err(format!("accepted rows not strictly ascending at {r}"));
        }
        prev = Some(r);
        let b = bids.rows().get(r).ok_or_else(|| format!("row {r} out of range"))?;
        if let Some(other) = winner[b.bidder].replace(r) {
            return Err(format!("bidder {} wins rows {other} and {r}", b.bidder));
        }
        for i in b.bundle.iter() {
            counts[i] += 1;
        }
        if let Some(m) = &min_channels {
            if !m.admits(b.bundle) {
                return Err(format!("row {r} carries {} channels, minimum is {}", m.total(b.bundle), m.min));
            }
        }
        sum += b.value;
    }
    if let Some(i) = counts.iter().position(|&c| c > item_quota) {
        return Err(format!("item {i} used {} times, quota {item_quota}", counts[i]));
    }
    if require_all_bidders {
        if let Some(k) = winner.iter().position(Option::is_none) {
            return Err(format!("bidder {k} wins nothing"));
        }
    }
    if sum != solution.objective {
        return Err(format!("objective {} differs from accepted total {sum}", solution.objective));
    }
    Ok(())
}
