//! Many-to-many deferred acceptance with channels proposing.
//!
//! Channels hold up to `q_ch` tentative matches and walk down their
//! preference lists; tenants keep their `q_T` best offers and reject the
//! rest. The output is the channel-optimal pairwise stable matching.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{AssignmentMatrix, ChannelSet};
use crate::connectivity::ScvTable;
use crate::error::{Error, Result};
use crate::prealloc::{MethodTag, Preallocation};
use crate::rng::{Stream, Streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quotas {
    pub q_t: usize,
    pub q_ch: usize,
}

impl Quotas {
    pub fn new(q_t: usize, q_ch: usize) -> Self {
        Self { q_t, q_ch }
    }

    /// `1 <= q_T <= max_channels`, `q_ch >= 1`.
    pub fn validate(&self, max_channels: usize) -> Result<()> {
        if self.q_t == 0 || self.q_t > max_channels {
            return Err(Error::InvalidParameter(format!(
                "q_T must lie in [1, {max_channels}], got {}",
                self.q_t
            )));
        }
        if self.q_ch == 0 {
            return Err(Error::InvalidParameter("q_ch must be at least 1".into()));
        }
        Ok(())
    }
}

/// Strict preference orders on both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    tenant_prefs: Vec<Vec<usize>>,
    channel_prefs: Vec<Vec<usize>>,
    // tenant_rank[k][j]: position of channel j in tenant k's list
    tenant_rank: Vec<Vec<usize>>,
    channel_rank: Vec<Vec<usize>>,
}

fn ranks(order: &[usize]) -> Vec<usize> {
    let mut r = vec![usize::MAX; order.len()];
    for (pos, &x) in order.iter().enumerate() {
        r[x] = pos;
    }
    r
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    order.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
}

impl PreferenceProfile {
    /// Builds a profile from explicit orders; each list must be a
    /// permutation of the other side.
    pub fn from_orders(tenant_prefs: Vec<Vec<usize>>, channel_prefs: Vec<Vec<usize>>) -> Result<Self> {
        let n_t = tenant_prefs.len();
        let n_ch = channel_prefs.len();
        for (k, o) in tenant_prefs.iter().enumerate() {
            if !is_permutation(o, n_ch) {
                return Err(Error::InvalidParameter(format!(
                    "tenant {k} preference list is not a permutation of {n_ch} channels"
                )));
            }
        }
        for (j, o) in channel_prefs.iter().enumerate() {
            if !is_permutation(o, n_t) {
                return Err(Error::InvalidParameter(format!(
                    "channel {j} preference list is not a permutation of {n_t} tenants"
                )));
            }
        }
        let tenant_rank = tenant_prefs.iter().map(|o| ranks(o)).collect();
        let channel_rank = channel_prefs.iter().map(|o| ranks(o)).collect();
        Ok(Self { tenant_prefs, channel_prefs, tenant_rank, channel_rank })
    }

    pub fn n_tenants(&self) -> usize {
        self.tenant_prefs.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_prefs.len()
    }

    pub fn tenant_prefs(&self, tenant: usize) -> &[usize] {
        &self.tenant_prefs[tenant]
    }

    pub fn channel_prefs(&self, channel: usize) -> &[usize] {
        &self.channel_prefs[channel]
    }

    /// Does tenant `k` prefer channel `a` to channel `b`?
    pub fn tenant_prefers(&self, k: usize, a: usize, b: usize) -> bool {
        self.tenant_rank[k][a] < self.tenant_rank[k][b]
    }

    /// Does channel `j` prefer tenant `a` to tenant `b`?
    pub fn channel_prefers(&self, j: usize, a: usize, b: usize) -> bool {
        self.channel_rank[j][a] < self.channel_rank[j][b]
    }
}

/// SCV-based preferences on both sides; equal SCVs are ordered by random
/// keys drawn independently per (tenant, channel) pair and side.
pub fn build_preferences(scv: &ScvTable, streams: &Streams) -> PreferenceProfile {
    let n_t = scv.n_tenants();
    let n_ch = scv.n_channels();
    let mut rng = streams.rng(Stream::TieBreak, 1 << 20);
    let tenant_keys: Vec<Vec<u64>> = (0..n_t).map(|_| (0..n_ch).map(|_| rng.random()).collect()).collect();
    let channel_keys: Vec<Vec<u64>> = (0..n_ch).map(|_| (0..n_t).map(|_| rng.random()).collect()).collect();

    let tenant_prefs = (0..n_t)
        .map(|k| {
            let mut o: Vec<usize> = (0..n_ch).collect();
            o.sort_by(|&a, &b| {
                scv.channel(k, b)
                    .total_cmp(&scv.channel(k, a))
                    .then(tenant_keys[k][a].cmp(&tenant_keys[k][b]))
            });
            o
        })
        .collect();
    let channel_prefs = (0..n_ch)
        .map(|j| {
            let mut o: Vec<usize> = (0..n_t).collect();
            o.sort_by(|&a, &b| {
                scv.channel(b, j)
                    .total_cmp(&scv.channel(a, j))
                    .then(channel_keys[j][a].cmp(&channel_keys[j][b]))
            });
            o
        })
        .collect();
    PreferenceProfile::from_orders(tenant_prefs, channel_prefs).expect("sorted orders are permutations")
}

/// Order in which free channels are taken up for proposing. The final
/// matching does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalOrder {
    Fifo,
    Lifo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingRun {
    pub assign: AssignmentMatrix,
    pub proposals: usize,
}

pub fn deferred_acceptance(profile: &PreferenceProfile, quotas: Quotas, order: ProposalOrder) -> MatchingRun {
    let n_t = profile.n_tenants();
    let n_ch = profile.n_channels();
    let mut next = vec![0usize; n_ch];
    let mut held_by_channel = vec![0usize; n_ch];
    let mut tenant_holds: Vec<Vec<usize>> = vec![Vec::with_capacity(quotas.q_t + 1); n_t];
    let mut queued = vec![true; n_ch];
    let mut queue: VecDeque<usize> = (0..n_ch).collect();
    let mut proposals = 0;

    while let Some(j) = match order {
        ProposalOrder::Fifo => queue.pop_front(),
        ProposalOrder::Lifo => queue.pop_back(),
    } {
        queued[j] = false;
        while held_by_channel[j] < quotas.q_ch && next[j] < n_t {
            let k = profile.channel_prefs[j][next[j]];
            next[j] += 1;
            proposals += 1;
            let holds = &mut tenant_holds[k];
            if holds.len() < quotas.q_t {
                holds.push(j);
                held_by_channel[j] += 1;
                continue;
            }
            let (wpos, &worst) = holds
                .iter()
                .enumerate()
                .max_by_key(|(_, &c)| profile.tenant_rank[k][c])
                .expect("tenant is full so holds something");
            if profile.tenant_prefers(k, j, worst) {
                holds[wpos] = j;
                held_by_channel[j] += 1;
                held_by_channel[worst] -= 1;
                if !queued[worst] && next[worst] < n_t {
                    queued[worst] = true;
                    queue.push_back(worst);
                }
            }
        }
    }

    let mut assign = AssignmentMatrix::zeros(n_t, n_ch);
    for (k, holds) in tenant_holds.iter().enumerate() {
        assign.set_row(k, holds.iter().copied().collect::<ChannelSet>());
    }
    MatchingRun { assign, proposals }
}

/// M2MGS preallocation (FIFO processing of free channels).
pub fn m2m_gale_shapley(profile: &PreferenceProfile, quotas: Quotas) -> Preallocation {
    Preallocation {
        assign: deferred_acceptance(profile, quotas, ProposalOrder::Fifo).assign,
        method: MethodTag::M2MGS,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Blocking `(tenant, channel)` pairs.
    pub violations: Vec<(usize, usize)>,
}

/// Checks a matching for blocking pairs under the given quotas.
pub fn verify_pairwise_stability(
    profile: &PreferenceProfile,
    quotas: Quotas,
    matching: &AssignmentMatrix,
) -> Result<StabilityReport> {
    let n_t = profile.n_tenants();
    let n_ch = profile.n_channels();
    if matching.n_tenants() != n_t || matching.n_channels() != n_ch {
        return Err(Error::DimensionMismatch(format!(
            "matching is {}x{}, profile is {n_t}x{n_ch}",
            matching.n_tenants(),
            matching.n_channels()
        )));
    }
    let tenant_open: Vec<bool> = (0..n_t).map(|k| matching.row_sum(k) < quotas.q_t).collect();
    let tenant_worst: Vec<Option<usize>> = (0..n_t)
        .map(|k| matching.row(k).iter().max_by_key(|&c| profile.tenant_rank[k][c]))
        .collect();
    let col = matching.col_sums();
    let channel_worst: Vec<Option<usize>> = (0..n_ch)
        .map(|j| (0..n_t).filter(|&k| matching.get(k, j)).max_by_key(|&k| profile.channel_rank[j][k]))
        .collect();

    let mut violations = Vec::new();
    for k in 0..n_t {
        for j in 0..n_ch {
            if matching.get(k, j) {
                continue;
            }
            let tenant_wants = tenant_open[k] || tenant_worst[k].is_some_and(|w| profile.tenant_prefers(k, j, w));
            let channel_wants =
                col[j] < quotas.q_ch || channel_worst[j].is_some_and(|w| profile.channel_prefers(j, k, w));
            if tenant_wants && channel_wants {
                violations.push((k, j));
            }
        }
    }
    Ok(StabilityReport { stable: violations.is_empty(), violations })
}
