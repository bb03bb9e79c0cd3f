//! Relaxed combinatorial auction over base stations: a BS may be won by up
//! to `q_BS` tenants, each winning tenant gets up to `n_chpBS` of its
//! channels, and every tenant must end up with at least `min_channels`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{AssignmentMatrix, ChannelSet};
use crate::connectivity::{CapacityModel, ScvTable};
use crate::error::{Error, Result};
use crate::prealloc::{MethodTag, Preallocation, DEFAULT_MAX_CHANNELS};
use crate::rng::{Stream, Streams};
use crate::scenario::Scenario;

use super::oracle::MinChannels;
use super::wdp::{solve_wdp, WdpProblem};
use super::{Bid, BidMatrix, SolveOptions, WdpSolution};

// offsets the per-tenant tie-break streams away from the other orderings
const RCA_TIE_STREAM: u64 = 2 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RcaConfig {
    pub q_bs: usize,
    pub n_chpbs: usize,
    #[serde(default = "default_min_channels")]
    pub min_channels: usize,
    #[serde(default = "default_max_channels")]
    pub max_channels: usize,
    #[serde(default = "default_max_channels")]
    pub max_bs_considered: usize,
}

fn default_min_channels() -> usize {
    2
}

fn default_max_channels() -> usize {
    DEFAULT_MAX_CHANNELS
}

impl RcaConfig {
    pub fn new(q_bs: usize, n_chpbs: usize) -> Self {
        Self {
            q_bs,
            n_chpbs,
            min_channels: default_min_channels(),
            max_channels: DEFAULT_MAX_CHANNELS,
            max_bs_considered: DEFAULT_MAX_CHANNELS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_bs < 2 {
            return Err(Error::InvalidParameter(format!("q_BS must be at least 2, got {}", self.q_bs)));
        }
        if self.n_chpbs == 0 {
            return Err(Error::InvalidParameter("n_chpBS must be at least 1".into()));
        }
        if self.min_channels > self.max_channels {
            return Err(Error::InvalidParameter(format!(
                "minimum channel count {} exceeds maximum {}",
                self.min_channels, self.max_channels
            )));
        }
        if self.max_bs_considered == 0 || self.max_bs_considered > 16 {
            return Err(Error::InvalidParameter(format!(
                "number of BSs considered must lie in [1, 16], got {}",
                self.max_bs_considered
            )));
        }
        Ok(())
    }
}

/// Per-BS channel counts with values above `n_chpbs` replaced by it.
pub fn capped_channel_counts(scenario: &Scenario, n_chpbs: usize) -> Vec<usize> {
    scenario.channels_per_bs().iter().map(|&c| c.min(n_chpbs)).collect()
}

/// BS-level bids: every subset of a tenant's best base stations whose
/// capped channel total fits the budget, valued by the capacity of one
/// representative channel per BS.
pub fn generate_bs_bids<M: CapacityModel + ?Sized>(
    scenario: &Scenario,
    model: &M,
    scv: &ScvTable,
    cfg: &RcaConfig,
    streams: &Streams,
) -> Result<BidMatrix> {
    cfg.validate()?;
    let n_bs = scenario.n_bs();
    let capped = capped_channel_counts(scenario, cfg.n_chpbs);
    let mut rows = Vec::new();
    for k in 0..scenario.n_tenants() {
        let mut tie = streams.rng(Stream::TieBreak, RCA_TIE_STREAM + k as u64);
        let keys: Vec<u64> = (0..n_bs).map(|_| tie.random()).collect();
        let mut ranked: Vec<usize> = (0..n_bs).collect();
        ranked.sort_by(|&a, &b| scv.bs(k, b).total_cmp(&scv.bs(k, a)).then(keys[a].cmp(&keys[b])));
        ranked.truncate(cfg.max_bs_considered);
        for sub in 1u32..1 << ranked.len() {
            let members = ranked.iter().enumerate().filter(|(p, _)| sub >> p & 1 == 1).map(|(_, &i)| i);
            let total: usize = members.clone().map(|i| capped[i]).sum();
            if total > cfg.max_channels {
                continue;
            }
            let bundle: ChannelSet = members.clone().collect();
            let reps: ChannelSet = members.map(|i| scenario.bs_channels(i)[0]).collect();
            rows.push(Bid { bundle, value: model.capacity(k, reps), bidder: k });
        }
    }
    BidMatrix::new(n_bs, scenario.n_tenants(), rows)
}

/// Exact RCA winner determination. Every tenant wins exactly one bundle of
/// at least `min_channels` capped channels; each BS appears in at most
/// `q_bs` winning bundles.
pub fn solve_rca(bids: &BidMatrix, cfg: &RcaConfig, capped: &[usize], opts: &SolveOptions) -> Result<WdpSolution> {
    cfg.validate()?;
    if capped.len() != bids.n_items() {
        return Err(Error::DimensionMismatch(format!("{} channel counts for {} BSs", capped.len(), bids.n_items())));
    }
    let min = MinChannels { per_item: capped, min: cfg.min_channels };
    let mut has_admissible = vec![false; bids.n_bidders()];
    for b in bids.rows() {
        has_admissible[b.bidder] |= min.admits(b.bundle);
    }
    if let Some(tenant) = has_admissible.iter().position(|ok| !ok) {
        return Err(Error::Infeasible { tenant });
    }
    let problem = WdpProblem { item_quota: cfg.q_bs, require_all_bidders: true, min_channels: Some(min) };
    solve_wdp(bids, &problem, opts)
}

/// Turns won BS bundles into channel rows: all channels of a BS with at
/// most `n_chpbs` of them, otherwise a uniform subset of that size.
pub fn rca_to_preallocation(
    scenario: &Scenario,
    bids: &BidMatrix,
    solution: &WdpSolution,
    cfg: &RcaConfig,
    streams: &Streams,
) -> Preallocation {
    let mut assign = AssignmentMatrix::zeros(scenario.n_tenants(), scenario.n_channels());
    for (k, row) in solution.per_bidder(bids).into_iter().enumerate() {
        let Some(r) = row else { continue };
        let mut rng = streams.rng(Stream::Method(MethodTag::RCA), k as u64);
        let mut set = ChannelSet::EMPTY;
        for bs in bids.rows()[r].bundle.iter() {
            let chans = scenario.bs_channels(bs);
            if chans.len() <= cfg.n_chpbs {
                set = set.union(chans.iter().copied().collect());
            } else {
                for i in index::sample(&mut rng, chans.len(), cfg.n_chpbs) {
                    set.insert(chans[i]);
                }
            }
        }
        assign.set_row(k, set);
    }
    Preallocation { assign, method: MethodTag::RCA }
}
