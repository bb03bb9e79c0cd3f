//! Experiment specifications, replicated runs, sweeps and comparisons.

use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::SolveOptions;
use crate::connectivity::{connectivity, utility, LinkModel};
use crate::error::{Error, Result};
use crate::pipeline::{allocate, compute_metrics, AllocateOptions, AllocationResult, Failure, Method, Metrics};
use crate::prealloc::DEFAULT_MAX_CHANNELS;
use crate::scenario::{generate_scenario_with, Scenario, ScenarioConfig, SetupClass};

use super::stats::{paired_t_test, summarize, PairedTest, SummaryStats};

fn default_timeout() -> Option<f64> {
    Some(10.0)
}

fn default_max_channels() -> usize {
    DEFAULT_MAX_CHANNELS
}

/// Everything needed to replay an experiment. Run `r` uses scenario seed
/// and allocation seed `base_seed + r` for every method, so methods are
/// compared on identical scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub setup: SetupClass,
    /// Methods of a comparison. Sweeps derive their methods from the grid.
    #[serde(default)]
    pub methods: Vec<Method>,
    pub n_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub link: LinkModel,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    /// Solver budget per winner determination; `None` means unlimited.
    #[serde(default = "default_timeout")]
    pub timeout_s: Option<f64>,
    #[serde(default = "default_max_channels")]
    pub max_channels: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(setup: SetupClass, methods: Vec<Method>, n_runs: usize, base_seed: u64) -> Self {
        Self {
            setup,
            methods,
            n_runs,
            base_seed,
            link: LinkModel::default(),
            scenario: ScenarioConfig::default(),
            timeout_s: default_timeout(),
            max_channels: DEFAULT_MAX_CHANNELS,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidParameter("n_runs must be at least 1".into()));
        }
        if let Some(t) = self.timeout_s {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("timeout_s must be finite and >= 0, got {t}")));
            }
        }
        self.link.validate()?;
        self.scenario.validate()?;
        for m in &self.methods {
            m.validate(self.max_channels)?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn allocate_options(&self) -> AllocateOptions {
        AllocateOptions {
            max_channels: self.max_channels,
            solve: SolveOptions { timeout: self.timeout_s.map(Duration::from_secs_f64), ..SolveOptions::default() },
            prune_dominated: false,
        }
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn scenario(&self, run: usize) -> Result<Scenario> {
        generate_scenario_with(self.setup, self.seed(run), &self.scenario, &self.link)
    }
}

/// Reported measures. Timing measures vary between executions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    TotalUtility,
    UnpreallocatedChannels,
    FreeTenantSlots,
    StarvedTenants,
    PreallocTime,
    BidgenTime,
    SolveTime,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::TotalUtility,
        Metric::UnpreallocatedChannels,
        Metric::FreeTenantSlots,
        Metric::StarvedTenants,
        Metric::PreallocTime,
        Metric::BidgenTime,
        Metric::SolveTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TotalUtility => "total_utility",
            Metric::UnpreallocatedChannels => "unpreallocated_channels",
            Metric::FreeTenantSlots => "free_tenant_slots",
            Metric::StarvedTenants => "starved_tenants",
            Metric::PreallocTime => "timing_prealloc_s",
            Metric::BidgenTime => "timing_bidgen_s",
            Metric::SolveTime => "timing_solve_s",
        }
    }

    pub fn is_timing(self) -> bool {
        matches!(self, Metric::PreallocTime | Metric::BidgenTime | Metric::SolveTime)
    }

    /// Summaries of these skip runs whose solver did not prove optimality.
    pub fn optimality_sensitive(self) -> bool {
        self == Metric::TotalUtility
    }

    pub fn value(self, m: &Metrics) -> f64 {
        match self {
            Metric::TotalUtility => m.total_utility,
            Metric::UnpreallocatedChannels => m.n_unpreallocated_channels as f64,
            Metric::FreeTenantSlots => m.n_free_tenant_slots as f64,
            Metric::StarvedTenants => m.n_starved_tenants as f64,
            Metric::PreallocTime => m.t_prealloc,
            Metric::BidgenTime => m.t_bidgen,
            Metric::SolveTime => m.t_solve,
        }
    }
}

/// One allocation of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Index of the method (comparison) or grid cell (sweep).
    pub cell: usize,
    pub method: Method,
    pub run: usize,
    pub seed: u64,
    pub metrics: Metrics,
    pub solver_optimal: bool,
    pub failure: Option<Failure>,
    pub max_bids_per_tenant: usize,
    /// Findings of [`verify_allocation`]; empty when consistent.
    pub violations: Vec<String>,
}

/// Checks an allocation without trusting the pipeline: channels are
/// exclusive, every tenant stays inside its preallocation and bid budget,
/// and stored capacities and utilities match a fresh evaluation.
pub fn verify_allocation(
    scenario: &Scenario,
    link: &LinkModel,
    result: &AllocationResult,
    max_channels: usize,
) -> Vec<String> {
    let mut out = Vec::new();
    let fin = &result.final_assign;
    let pre = &result.prealloc.assign;
    let n_t = scenario.n_tenants();
    if fin.n_tenants() != n_t || fin.n_channels() != scenario.n_channels() {
        out.push(format!("final assignment is {}x{}", fin.n_tenants(), fin.n_channels()));
        return out;
    }
    for (j, &c) in fin.col_sums().iter().enumerate() {
        if c > 1 {
            out.push(format!("channel {j} assigned {c} times"));
        }
    }
    let budget = (1usize << max_channels.min(63)) - 1;
    for k in 0..n_t {
        if !fin.row(k).is_subset(pre.row(k)) {
            out.push(format!("tenant {k} holds channels outside its preallocation"));
        }
        let bids = result.bids_per_tenant.get(k).copied().unwrap_or(0);
        if bids > budget {
            out.push(format!("tenant {k} submitted {bids} bids (budget {budget})"));
        }
        let c = connectivity(scenario, link, k, fin.row(k));
        if result.capacities.get(k) != Some(&c) {
            out.push(format!("tenant {k} capacity differs from recomputation"));
        }
        let u = utility(c, &scenario.utility_bounds()[k]);
        if result.utilities.get(k) != Some(&u) {
            out.push(format!("tenant {k} utility differs from recomputation"));
        }
    }
    out
}

/// Runs every method on `spec.n_runs` shared scenarios. Records are
/// ordered by (method index, run) regardless of scheduling.
pub fn run_methods(spec: &ExperimentSpec, methods: &[Method]) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    for m in methods {
        m.validate(spec.max_channels)?;
    }
    let scenarios: Vec<Scenario> = (0..spec.n_runs).into_par_iter().map(|r| spec.scenario(r)).collect::<Result<_>>()?;
    let opts = spec.allocate_options();
    let n_runs = spec.n_runs;
    (0..methods.len() * n_runs)
        .into_par_iter()
        .map(|job| {
            let (cell, run) = (job / n_runs, job % n_runs);
            let method = methods[cell];
            let scenario = &scenarios[run];
            let seed = spec.seed(run);
            let result = allocate(scenario, &spec.link, &method, seed, &opts)?;
            let metrics = compute_metrics(&result, method.slot_quota(spec.max_channels))?;
            Ok(RunRecord {
                cell,
                method,
                run,
                seed,
                metrics,
                solver_optimal: result.solver_optimal,
                failure: result.failure,
                max_bids_per_tenant: result.bids_per_tenant.iter().copied().max().unwrap_or(0),
                violations: verify_allocation(scenario, &spec.link, &result, spec.max_channels),
            })
        })
        .collect()
}

/// Summary of `metric` over the records of one cell; `None` when no run
/// qualifies (every run non-optimal for a sensitive metric).
pub fn summarize_cell(records: &[RunRecord], cell: usize, metric: Metric) -> Result<Option<SummaryStats>> {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.cell == cell && (r.solver_optimal || !metric.optimality_sensitive()))
        .map(|r| metric.value(&r.metrics))
        .collect();
    if values.is_empty() {
        return Ok(None);
    }
    summarize(&values).map(Some)
}

/// Parameter grid of a sweep. Row and column values become table axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepGrid {
    /// Rows `q_ch`, columns `q_T`.
    M2mgs { q_t: Vec<usize>, q_ch: Vec<usize> },
    /// Rows `n_chpBS`, columns `q_BS`.
    Rca { q_bs: Vec<usize>, n_chpbs: Vec<usize> },
}

impl SweepGrid {
    /// `q_T, q_ch` in 2..=8.
    pub fn m2mgs_default() -> Self {
        SweepGrid::M2mgs { q_t: (2..=8).collect(), q_ch: (2..=8).collect() }
    }

    /// `q_BS` in 2..=8 and `n_chpBS` from 2 up to the setup's largest BS.
    pub fn rca_default(setup: SetupClass) -> Self {
        SweepGrid::Rca { q_bs: (2..=8).collect(), n_chpbs: (2..=setup.params().max_channels_per_bs).collect() }
    }

    pub fn family(&self) -> &'static str {
        match self {
            SweepGrid::M2mgs { .. } => "m2mgs",
            SweepGrid::Rca { .. } => "rca",
        }
    }

    /// (row axis, column axis) names.
    pub fn axes(&self) -> (&'static str, &'static str) {
        match self {
            SweepGrid::M2mgs { .. } => ("q_ch", "q_T"),
            SweepGrid::Rca { .. } => ("n_chpBS", "q_BS"),
        }
    }

    pub fn rows(&self) -> &[usize] {
        match self {
            SweepGrid::M2mgs { q_ch, .. } => q_ch,
            SweepGrid::Rca { n_chpbs, .. } => n_chpbs,
        }
    }

    pub fn cols(&self) -> &[usize] {
        match self {
            SweepGrid::M2mgs { q_t, .. } => q_t,
            SweepGrid::Rca { q_bs, .. } => q_bs,
        }
    }

    fn validate(&self, max_channels: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let (rows, cols) = (self.rows(), self.cols());
        if rows.is_empty() || cols.is_empty() {
            return bad("sweep grid axes must be non-empty".into());
        }
        for axis in [rows, cols] {
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("sweep grid axis {axis:?} must be strictly increasing"));
            }
        }
        match self {
            SweepGrid::M2mgs { q_t, q_ch } => {
                if q_t[0] < 1 || q_ch[0] < 1 || q_t[q_t.len() - 1] > max_channels {
                    return bad(format!("M2MGS grid needs q_T in [1, {max_channels}] and q_ch >= 1"));
                }
            }
            SweepGrid::Rca { q_bs, n_chpbs } => {
                if q_bs[0] < 1 || n_chpbs[0] < 1 || n_chpbs[n_chpbs.len() - 1] > max_channels {
                    return bad(format!("RCA grid needs q_BS >= 1 and n_chpBS in [1, {max_channels}]"));
                }
            }
        }
        Ok(())
    }

    /// Method of cell (row value, column value), or `None` for a cell that
    /// does not exist in this setup.
    pub fn method(&self, setup: SetupClass, max_channels: usize, row: usize, col: usize) -> Option<Method> {
        match self {
            SweepGrid::M2mgs { .. } => Some(Method::m2mgs(col, row)),
            SweepGrid::Rca { .. } => {
                let p = setup.params();
                // a BS cannot serve more tenants than exist, nor hand out more
                // channels than its largest instance owns
                if col > p.n_tenants || row > p.max_channels_per_bs {
                    return None;
                }
                let mut cfg = crate::auction::RcaConfig::new(col, row);
                cfg.max_channels = max_channels;
                Some(Method::RCA(cfg))
            }
        }
    }
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub row: usize,
    pub col: usize,
    pub method: Method,
    /// Per metric in [`Metric::ALL`] order.
    pub stats: Vec<Option<SummaryStats>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub setup: SetupClass,
    pub grid: SweepGrid,
    pub n_runs: usize,
    pub cells: Vec<SweepCell>,
    pub records: Vec<RunRecord>,
}

impl SweepResult {
    pub fn cell(&self, row: usize, col: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.row == row && c.col == col)
    }

    pub fn stat(&self, row: usize, col: usize, metric: Metric) -> Option<&SummaryStats> {
        let i = Metric::ALL.iter().position(|&m| m == metric)?;
        self.cell(row, col)?.stats[i].as_ref()
    }
}

/// Runs `spec.n_runs` allocations in every existing cell of `grid`.
/// `spec.methods` is ignored.
pub fn run_sweep(spec: &ExperimentSpec, grid: &SweepGrid) -> Result<SweepResult> {
    spec.validate()?;
    grid.validate(spec.max_channels)?;
    let mut coords = Vec::new();
    let mut methods = Vec::new();
    for &row in grid.rows() {
        for &col in grid.cols() {
            if let Some(m) = grid.method(spec.setup, spec.max_channels, row, col) {
                coords.push((row, col));
                methods.push(m);
            }
        }
    }
    let records = run_methods(spec, &methods)?;
    let cells = coords
        .iter()
        .zip(&methods)
        .enumerate()
        .map(|(i, (&(row, col), &method))| {
            let stats = Metric::ALL.iter().map(|&m| summarize_cell(&records, i, m)).collect::<Result<_>>()?;
            Ok(SweepCell { row, col, method, stats })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { setup: spec.setup, grid: grid.clone(), n_runs: spec.n_runs, cells, records })
}

/// Best M2MGS parameters per setup: (8,3), (6,2), (6,2).
pub fn optimal_m2mgs(setup: SetupClass) -> Method {
    match setup {
        SetupClass::SS => Method::m2mgs(8, 3),
        SetupClass::MS | SetupClass::LS => Method::m2mgs(6, 2),
    }
}

/// Best RCA parameters per setup: (3,3), (2,5), (2,6) as (q_BS, n_chpBS).
pub fn optimal_rca(setup: SetupClass) -> Method {
    match setup {
        SetupClass::SS => Method::rca(3, 3),
        SetupClass::MS => Method::rca(2, 5),
        SetupClass::LS => Method::rca(2, 6),
    }
}

/// The five simple methods followed by the tuned M2MGS and RCA.
pub fn comparison_methods(setup: SetupClass) -> Vec<Method> {
    let mut v = Method::SIMPLE.to_vec();
    v.push(optimal_m2mgs(setup));
    v.push(optimal_rca(setup));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub setup: SetupClass,
    pub n_runs: usize,
    pub methods: Vec<Method>,
    /// `stats[method][metric]`, metrics in [`Metric::ALL`] order.
    pub stats: Vec<Vec<Option<SummaryStats>>>,
    pub records: Vec<RunRecord>,
}

impl ComparisonResult {
    pub fn stat(&self, method: usize, metric: Metric) -> Option<&SummaryStats> {
        let i = Metric::ALL.iter().position(|&m| m == metric)?;
        self.stats.get(method)?[i].as_ref()
    }

    /// Per-run values of one method, in run order.
    pub fn values(&self, method: usize, metric: Metric) -> Vec<f64> {
        self.records.iter().filter(|r| r.cell == method).map(|r| metric.value(&r.metrics)).collect()
    }

    /// Paired t-test of method `a` against `b` over runs where both
    /// solvers proved optimality (all runs for insensitive metrics).
    pub fn paired(&self, a: usize, b: usize, metric: Metric) -> Result<PairedTest> {
        let rows = |m: usize| self.records.iter().filter(move |r| r.cell == m);
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        for (ra, rb) in rows(a).zip(rows(b)) {
            debug_assert_eq!(ra.run, rb.run);
            if metric.optimality_sensitive() && !(ra.solver_optimal && rb.solver_optimal) {
                continue;
            }
            xa.push(metric.value(&ra.metrics));
            xb.push(metric.value(&rb.metrics));
        }
        paired_t_test(&xa, &xb)
    }
}

/// Runs every method of `spec` on the same scenarios.
pub fn run_comparison(spec: &ExperimentSpec) -> Result<ComparisonResult> {
    if spec.methods.is_empty() {
        return Err(Error::InvalidParameter("comparison needs at least one method".into()));
    }
    let records = run_methods(spec, &spec.methods)?;
    let stats = (0..spec.methods.len())
        .map(|i| Metric::ALL.iter().map(|&m| summarize_cell(&records, i, m)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(ComparisonResult { setup: spec.setup, n_runs: spec.n_runs, methods: spec.methods.clone(), stats, records })
}
