//! Simple preallocation heuristics: each tenant receives at most
//! `max_channels` channels, non-exclusively.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{AssignmentMatrix, ChannelSet};
use crate::connectivity::ScvTable;
use crate::error::{Error, Result};
use crate::rng::{Stream, StreamRng, Streams};
use crate::scenario::Scenario;

/// Per-tenant channel budget used throughout.
pub const DEFAULT_MAX_CHANNELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodTag {
    R,
    DB,
    SCVB,
    DBSR,
    SCVBSR,
    M2MGS,
    RCA,
}

impl MethodTag {
    pub const ALL: [MethodTag; 7] = [
        MethodTag::R,
        MethodTag::DB,
        MethodTag::SCVB,
        MethodTag::DBSR,
        MethodTag::SCVBSR,
        MethodTag::M2MGS,
        MethodTag::RCA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodTag::R => "R",
            MethodTag::DB => "DB",
            MethodTag::SCVB => "SCVB",
            MethodTag::DBSR => "DBSR",
            MethodTag::SCVBSR => "SCVBSR",
            MethodTag::M2MGS => "M2MGS",
            MethodTag::RCA => "RCA",
        }
    }

    /// The five parameter-free iterative heuristics.
    pub fn is_simple(self) -> bool {
        !matches!(self, MethodTag::M2MGS | MethodTag::RCA)
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodTag::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// A non-exclusive tenant -> channels assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preallocation {
    pub assign: AssignmentMatrix,
    pub method: MethodTag,
}

impl Preallocation {
    pub fn channels(&self, tenant: usize) -> ChannelSet {
        self.assign.row(tenant)
    }

    pub fn max_row_sum(&self) -> usize {
        (0..self.assign.n_tenants()).map(|k| self.assign.row_sum(k)).max().unwrap_or(0)
    }
}

fn all_channels(scenario: &Scenario) -> ChannelSet {
    (0..scenario.n_channels()).collect()
}

fn build(scenario: &Scenario, method: MethodTag, mut row: impl FnMut(usize) -> ChannelSet) -> Preallocation {
    let mut assign = AssignmentMatrix::zeros(scenario.n_tenants(), scenario.n_channels());
    for k in 0..scenario.n_tenants() {
        assign.set_row(k, row(k));
    }
    Preallocation { assign, method }
}

fn tenant_rng(streams: &Streams, method: MethodTag, tenant: usize) -> StreamRng {
    streams.rng(Stream::Method(method), tenant as u64)
}

/// Uniform choice of `max_channels` distinct channels per tenant.
pub fn random_prealloc(scenario: &Scenario, max_channels: usize, streams: &Streams) -> Preallocation {
    let n = scenario.n_channels();
    build(scenario, MethodTag::R, |k| {
        if n <= max_channels {
            return all_channels(scenario);
        }
        let mut rng = tenant_rng(streams, MethodTag::R, k);
        index::sample(&mut rng, n, max_channels).into_iter().collect()
    })
}

/// Walks base stations in the given order, taking whole BSs while they fit
/// and a uniform subset of the last one to fill the budget exactly.
fn fill_from_order(
    scenario: &Scenario,
    order: &[usize],
    max_channels: usize,
    rng: &mut StreamRng,
) -> ChannelSet {
    let mut set = ChannelSet::EMPTY;
    for &bs in order {
        let remaining = max_channels - set.len();
        if remaining == 0 {
            break;
        }
        let chans = scenario.bs_channels(bs);
        if chans.len() <= remaining {
            set = set.union(chans.iter().copied().collect());
        } else {
            for i in index::sample(rng, chans.len(), remaining) {
                set.insert(chans[i]);
            }
        }
    }
    set
}

/// BS order for one tenant sorted by `key` ascending, ties broken by a
/// random key drawn once per (tenant, BS).
fn bs_order(scenario: &Scenario, streams: &Streams, tenant: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut tie = streams.rng(Stream::TieBreak, tenant as u64);
    let ties: Vec<u64> = (0..scenario.n_bs()).map(|_| tie.random()).collect();
    let mut order: Vec<usize> = (0..scenario.n_bs()).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(ties[a].cmp(&ties[b])));
    order
}

/// Distance-based preallocation: nearest base stations first.
pub fn distance_based(scenario: &Scenario, max_channels: usize, streams: &Streams) -> Preallocation {
    build(scenario, MethodTag::DB, |k| {
        let order = db_order(scenario, streams, k);
        fill_from_order(scenario, &order, max_channels, &mut tenant_rng(streams, MethodTag::DB, k))
    })
}

/// The BS visiting order used by [`distance_based`] for one tenant.
pub fn db_order(scenario: &Scenario, streams: &Streams, tenant: usize) -> Vec<usize> {
    bs_order(scenario, streams, tenant, |i| scenario.distance(tenant, i).expect("valid indices"))
}

/// Like [`distance_based`] but base stations ranked by single-channel
/// capacity, best first.
pub fn scvb(scenario: &Scenario, scv: &ScvTable, max_channels: usize, streams: &Streams) -> Preallocation {
    build(scenario, MethodTag::SCVB, |k| {
        let order = scvb_order(scenario, scv, streams, k);
        fill_from_order(scenario, &order, max_channels, &mut tenant_rng(streams, MethodTag::SCVB, k))
    })
}

/// The BS visiting order used by [`scvb`] for one tenant.
pub fn scvb_order(scenario: &Scenario, scv: &ScvTable, streams: &Streams, tenant: usize) -> Vec<usize> {
    bs_order(scenario, streams, tenant, |i| -scv.bs(tenant, i))
}

/// Sequential weighted draws without replacement; weights renormalize over
/// the channels still available. Zero-weight channels are only reached once
/// every positive weight is used up, then uniformly.
fn weighted_draws(weights: &[f64], count: usize, rng: &mut StreamRng) -> ChannelSet {
    let mut available: Vec<usize> = (0..weights.len()).collect();
    let mut set = ChannelSet::EMPTY;
    for _ in 0..count.min(weights.len()) {
        let total: f64 = available.iter().map(|&j| weights[j]).sum();
        let pos = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (p, &j) in available.iter().enumerate() {
                acc += weights[j];
                if weights[j] > 0.0 && acc > r {
                    pick = Some(p);
                    break;
                }
            }
            // rounding can leave r just above the final partial sum
            pick.unwrap_or_else(|| available.iter().rposition(|&j| weights[j] > 0.0).unwrap())
        } else {
            rng.random_range(0..available.len())
        };
        set.insert(available.remove(pos));
    }
    set
}

/// Distance-based semi-random: channel weight proportional to
/// `1 / max(d, min_distance)` of its base station.
pub fn dbsr(scenario: &Scenario, max_channels: usize, min_distance_m: f64, streams: &Streams) -> Preallocation {
    build(scenario, MethodTag::DBSR, |k| {
        let weights = dbsr_weights(scenario, k, min_distance_m);
        weighted_draws(&weights, max_channels, &mut tenant_rng(streams, MethodTag::DBSR, k))
    })
}

pub fn dbsr_weights(scenario: &Scenario, tenant: usize, min_distance_m: f64) -> Vec<f64> {
    (0..scenario.n_channels())
        .map(|j| 1.0 / scenario.distance(tenant, scenario.owner(j)).expect("valid indices").max(min_distance_m))
        .collect()
}

/// SCV-based semi-random: channel weight proportional to its SCV.
pub fn scvbsr(scenario: &Scenario, scv: &ScvTable, max_channels: usize, streams: &Streams) -> Preallocation {
    build(scenario, MethodTag::SCVBSR, |k| {
        let weights: Vec<f64> = (0..scenario.n_channels()).map(|j| scv.channel(k, j)).collect();
        weighted_draws(&weights, max_channels, &mut tenant_rng(streams, MethodTag::SCVBSR, k))
    })
}
