//! The two-step allocation: preallocate, bid on preallocated subsets, run
//! the channel auction, and measure the outcome.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assignment::{AssignmentMatrix, ChannelSet};
use crate::auction::{
    capped_channel_counts, generate_bs_bids, generate_channel_bids, rca_to_preallocation, solve_ca, solve_rca,
    BidOptions, RcaConfig, SolveOptions,
};
use crate::connectivity::{utility, CapacityModel, LinkModel, RayleighSelection, ScvTable};
use crate::error::{Error, Result};
use crate::matching::{build_preferences, m2m_gale_shapley, Quotas};
use crate::prealloc::{
    distance_based, dbsr, random_prealloc, scvb, scvbsr, MethodTag, Preallocation, DEFAULT_MAX_CHANNELS,
};
use crate::rng::Streams;
use crate::scenario::Scenario;

/// A preallocation method together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum Method {
    R,
    DB,
    SCVB,
    DBSR,
    SCVBSR,
    M2MGS { q_t: usize, q_ch: usize },
    RCA(RcaConfig),
}

impl Method {
    pub fn m2mgs(q_t: usize, q_ch: usize) -> Self {
        Method::M2MGS { q_t, q_ch }
    }

    pub fn rca(q_bs: usize, n_chpbs: usize) -> Self {
        Method::RCA(RcaConfig::new(q_bs, n_chpbs))
    }

    pub fn tag(&self) -> MethodTag {
        match self {
            Method::R => MethodTag::R,
            Method::DB => MethodTag::DB,
            Method::SCVB => MethodTag::SCVB,
            Method::DBSR => MethodTag::DBSR,
            Method::SCVBSR => MethodTag::SCVBSR,
            Method::M2MGS { .. } => MethodTag::M2MGS,
            Method::RCA(_) => MethodTag::RCA,
        }
    }

    pub fn validate(&self, max_channels: usize) -> Result<()> {
        match self {
            Method::M2MGS { q_t, q_ch } => Quotas::new(*q_t, *q_ch).validate(max_channels),
            Method::RCA(cfg) => {
                cfg.validate()?;
                if cfg.max_channels != max_channels {
                    return Err(Error::InvalidParameter(format!(
                        "RCA channel budget {} differs from the bidding budget {max_channels}",
                        cfg.max_channels
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Per-tenant slot count used for the free-slot metric.
    pub fn slot_quota(&self, max_channels: usize) -> usize {
        match self {
            Method::M2MGS { q_t, .. } => *q_t,
            _ => max_channels,
        }
    }

    /// The simple methods, in table order.
    pub const SIMPLE: [Method; 5] = [Method::R, Method::DB, Method::SCVB, Method::DBSR, Method::SCVBSR];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::M2MGS { q_t, q_ch } => write!(f, "M2MGS(q_T={q_t};q_ch={q_ch})"),
            Method::RCA(c) => write!(f, "RCA(q_BS={};n_chpBS={})", c.q_bs, c.n_chpbs),
            m => f.write_str(m.tag().name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocateOptions {
    pub max_channels: usize,
    pub solve: SolveOptions,
    pub prune_dominated: bool,
}

impl Default for AllocateOptions {
    fn default() -> Self {
        Self { max_channels: DEFAULT_MAX_CHANNELS, solve: SolveOptions::default(), prune_dominated: false }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub prealloc_s: f64,
    pub bidgen_s: f64,
    pub solve_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Failure {
    /// The RCA could not give this tenant an admissible bundle.
    RcaInfeasible { tenant: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub method: Method,
    pub seed: u64,
    pub final_assign: AssignmentMatrix,
    pub capacities: Vec<f64>,
    pub utilities: Vec<f64>,
    pub prealloc: Preallocation,
    pub bids_per_tenant: Vec<usize>,
    pub timings: Timings,
    /// False if either auction stopped on its time budget.
    pub solver_optimal: bool,
    pub failure: Option<Failure>,
}

impl AllocationResult {
    pub fn total_utility(&self) -> f64 {
        self.utilities.iter().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn preallocate(
    scenario: &Scenario,
    model: &RayleighSelection,
    method: &Method,
    max_channels: usize,
    streams: &Streams,
    solve: &SolveOptions,
) -> Result<(Preallocation, bool, Option<Failure>)> {
    let scv = || ScvTable::new(scenario, model);
    let p = match method {
        Method::R => random_prealloc(scenario, max_channels, streams),
        Method::DB => distance_based(scenario, max_channels, streams),
        Method::SCVB => scvb(scenario, &scv(), max_channels, streams),
        Method::DBSR => dbsr(scenario, max_channels, model.link().min_distance_m, streams),
        Method::SCVBSR => scvbsr(scenario, &scv(), max_channels, streams),
        Method::M2MGS { q_t, q_ch } => {
            let profile = build_preferences(&scv(), streams);
            m2m_gale_shapley(&profile, Quotas::new(*q_t, *q_ch))
        }
        Method::RCA(cfg) => {
            let bids = generate_bs_bids(scenario, model, &scv(), cfg, streams)?;
            let capped = capped_channel_counts(scenario, cfg.n_chpbs);
            match solve_rca(&bids, cfg, &capped, solve) {
                Ok(sol) => {
                    let optimal = sol.proven_optimal;
                    return Ok((rca_to_preallocation(scenario, &bids, &sol, cfg, streams), optimal, None));
                }
                Err(Error::Infeasible { tenant }) => {
                    let empty = Preallocation {
                        assign: AssignmentMatrix::zeros(scenario.n_tenants(), scenario.n_channels()),
                        method: MethodTag::RCA,
                    };
                    return Ok((empty, true, Some(Failure::RcaInfeasible { tenant })));
                }
                Err(e) => return Err(e),
            }
        }
    };
    Ok((p, true, None))
}

/// Runs one allocation. Deterministic in `(scenario, link, method, seed)`
/// apart from the timings.
pub fn allocate(
    scenario: &Scenario,
    link: &LinkModel,
    method: &Method,
    seed: u64,
    opts: &AllocateOptions,
) -> Result<AllocationResult> {
    link.validate()?;
    method.validate(opts.max_channels)?;
    let model = RayleighSelection::new(scenario, link);
    let streams = Streams::new(seed);

    let t0 = Instant::now();
    let (prealloc, prealloc_optimal, failure) =
        preallocate(scenario, &model, method, opts.max_channels, &streams, &opts.solve)?;
    let t1 = Instant::now();
    let bid_opts = BidOptions { max_channels: opts.max_channels, prune_dominated: opts.prune_dominated };
    let bids = generate_channel_bids(scenario, &model, &prealloc, &bid_opts)?;
    let t2 = Instant::now();
    let solution = solve_ca(&bids, &opts.solve)?;
    let t3 = Instant::now();

    let n_t = scenario.n_tenants();
    let mut rows = vec![ChannelSet::EMPTY; n_t];
    for &r in &solution.accepted {
        let b = bids.rows()[r];
        rows[b.bidder] = b.bundle;
    }
    let final_assign = AssignmentMatrix::from_rows(scenario.n_channels(), rows)?;
    let capacities: Vec<f64> = (0..n_t).map(|k| model.capacity(k, final_assign.row(k))).collect();
    let utilities = capacities.iter().zip(scenario.utility_bounds()).map(|(&c, b)| utility(c, b)).collect();

    Ok(AllocationResult {
        method: *method,
        seed,
        final_assign,
        capacities,
        utilities,
        bids_per_tenant: bids.bids_per_bidder(),
        prealloc,
        timings: Timings {
            prealloc_s: (t1 - t0).as_secs_f64(),
            bidgen_s: (t2 - t1).as_secs_f64(),
            solve_s: (t3 - t2).as_secs_f64(),
        },
        solver_optimal: prealloc_optimal && solution.proven_optimal,
        failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total_utility: f64,
    pub n_unpreallocated_channels: usize,
    pub n_free_tenant_slots: usize,
    pub n_starved_tenants: usize,
    pub t_prealloc: f64,
    pub t_bidgen: f64,
    pub t_solve: f64,
}

/// Outcome measures of one allocation; `slot_quota` is the per-tenant
/// preallocation quota (see [`Method::slot_quota`]).
pub fn compute_metrics(result: &AllocationResult, slot_quota: usize) -> Result<Metrics> {
    let pre = &result.prealloc.assign;
    let n_t = pre.n_tenants();
    if result.utilities.len() != n_t || result.final_assign.n_tenants() != n_t || result.final_assign.n_channels() != pre.n_channels()
    {
        return Err(Error::DimensionMismatch(format!(
            "preallocation is {}x{}, final assignment {}x{}, {} utilities",
            n_t,
            pre.n_channels(),
            result.final_assign.n_tenants(),
            result.final_assign.n_channels(),
            result.utilities.len()
        )));
    }
    Ok(Metrics {
        total_utility: result.total_utility(),
        n_unpreallocated_channels: pre.col_sums().iter().filter(|&&c| c == 0).count(),
        n_free_tenant_slots: (0..n_t).map(|k| slot_quota.saturating_sub(pre.row_sum(k))).sum(),
        n_starved_tenants: (0..n_t).filter(|&k| pre.row_sum(k) == 0).count(),
        t_prealloc: result.timings.prealloc_s,
        t_bidgen: result.timings.bidgen_s,
        t_solve: result.timings.solve_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, SetupClass};

    #[test]
    fn method_json_and_labels() {
        let m = Method::m2mgs(8, 3);
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"{"method":"M2MGS","q_t":8,"q_ch":3}"#);
        assert_eq!(serde_json::from_str::<Method>(&j).unwrap(), m);
        let r = Method::rca(3, 3);
        assert_eq!(serde_json::from_str::<Method>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
        assert_eq!(serde_json::from_str::<Method>(r#"{"method":"R"}"#).unwrap(), Method::R);
        assert_eq!(m.to_string(), "M2MGS(q_T=8;q_ch=3)");
        assert_eq!(Method::SCVBSR.to_string(), "SCVBSR");
    }

    #[test]
    fn invalid_params_rejected() {
        let sc = generate_scenario(SetupClass::SS, 0);
        let o = AllocateOptions::default();
        assert!(allocate(&sc, &LinkModel::default(), &Method::m2mgs(9, 3), 0, &o).is_err());
        assert!(allocate(&sc, &LinkModel::default(), &Method::rca(1, 3), 0, &o).is_err());
    }

    #[test]
    fn every_method_runs_on_ss() {
        let sc = generate_scenario(SetupClass::SS, 21);
        let link = LinkModel::default();
        let mut methods = Method::SIMPLE.to_vec();
        methods.push(Method::m2mgs(8, 3));
        methods.push(Method::rca(3, 3));
        for m in methods {
            let r = allocate(&sc, &link, &m, 21, &AllocateOptions::default()).unwrap();
            assert!(r.final_assign.is_univalent(), "{m}");
            for k in 0..sc.n_tenants() {
                assert!(r.final_assign.row(k).is_subset(r.prealloc.channels(k)));
            }
            let mx = compute_metrics(&r, m.slot_quota(8)).unwrap();
            assert!(mx.total_utility >= 0.0 && mx.total_utility <= sc.n_tenants() as f64);
        }
    }

    #[test]
    fn free_slots_and_unpreallocated() {
        let sc = generate_scenario(SetupClass::SS, 3);
        let r = allocate(&sc, &LinkModel::default(), &Method::R, 3, &AllocateOptions::default()).unwrap();
        let m = compute_metrics(&r, 8).unwrap();
        assert_eq!(m.n_free_tenant_slots, 0);
        assert_eq!(m.n_starved_tenants, 0);
        let zero_cols = r.prealloc.assign.col_sums().iter().filter(|&&c| c == 0).count();
        assert_eq!(m.n_unpreallocated_channels, zero_cols);
        assert_eq!(compute_metrics(&r, 8).unwrap(), m);
    }
}
