//! Exact winner determination by depth-first branch-and-bound.
//!
//! Bidders are fixed one per level, in a greedy order that keeps few items
//! shared between decided and undecided bidders; each level tries the
//! bidder's bids and then (unless bidders are mandatory) leaving it empty.
//! Two admissible bounds are combined: the sum over remaining bidders of
//! their best bid avoiding every saturated item, and a Lagrangian bound on
//! the item constraints. Root prices come from the exact LP relaxation
//! when bidders are optional (an integral LP optimum is taken as the first
//! incumbent) and from subgradient steps otherwise; shallow nodes re-fit
//! the prices for their subtree. Subproblems are memoized on the occupancy
//! of the items that remaining bidders can still touch, storing either an
//! exact value or a tightened upper bound.
//!
//! With exclusive items, items that every bid treats alike (swapping them
//! maps each bidder's bids onto bids of equal value) are interchangeable.
//! Bids differing only by such swaps are tried once per node and memo keys
//! use a canonical occupancy, which removes most of the work on
//! preallocations that hand whole base stations to several tenants.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};

use super::lp::{solve_packing_lp, Column};
use super::oracle::MinChannels;
use super::{BidMatrix, SolveOptions, WdpSolution};

/// Constraint set of one winner determination instance.
#[derive(Debug, Clone, Copy)]
pub struct WdpProblem<'a> {
    /// Max number of accepted bundles containing any one item.
    pub item_quota: usize,
    /// Every bidder must win exactly one bundle.
    pub require_all_bidders: bool,
    /// Bids below the channel minimum are not admissible.
    pub min_channels: Option<MinChannels<'a>>,
}

impl WdpProblem<'_> {
    pub fn ca() -> Self {
        Self { item_quota: 1, require_all_bidders: false, min_channels: None }
    }
}

/// Standard CA: items are exclusive, bidders may lose.
pub fn solve_ca(bids: &BidMatrix, opts: &SolveOptions) -> Result<WdpSolution> {
    solve_wdp(bids, &WdpProblem::ca(), opts)
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    mask: u64,
    value: f64,
    row: usize,
    // canonical bundle under interchangeable items
    sig: u64,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    bound: f64,
    exact: bool,
    // signature of the best bundle; 0 = no bundle
    choice: u64,
}

const SKIP: u32 = u32::MAX;
const REFIT_STEPS: usize = 30;
const REFIT_DEPTH: usize = 4;

/// Subtrees whose bound exceeds the incumbent by no more than this are
/// pruned, so the result is optimal up to this absolute gap. It also
/// absorbs rounding in the Lagrangian bound.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;

struct Frame {
    prices: [f64; 64],
    // per level: (value - price of bundle, mask), best first
    reduced: Vec<Vec<(f64, u64)>>,
}

struct Search {
    levels: Vec<Vec<Cand>>,
    // per level: candidate indices in branching order
    branch: Vec<Vec<u32>>,
    // item prices in force; deeper frames cover their subtree only
    frames: Vec<Frame>,
    // nodes up to this depth may re-fit prices for their subtree
    refit_depth: usize,
    classes: Classes,
    bidder_of_level: Vec<usize>,
    // union of bundles of levels d.. (len n+1)
    reach: Vec<u64>,
    quota: u8,
    mandatory: bool,
    counts: [u8; 64],
    full: u64,
    memo: HashMap<(u32, u128), Entry>,
    memo_enabled: bool,
    memo_limit: usize,
    path: Vec<u32>,
    best_path: Vec<u32>,
    incumbent: f64,
    found: bool,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
    // (depth, bidder) of the deepest dead end
    deepest_failure: Option<(usize, usize)>,
}

impl Search {
    fn apply(&mut self, mask: u64) {
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            self.counts[i] += 1;
            if self.counts[i] == self.quota {
                self.full |= 1 << i;
            }
        }
    }

    fn undo(&mut self, mask: u64) {
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            self.counts[i] -= 1;
            self.full &= !(1 << i);
        }
    }

    fn key(&self, d: usize) -> u128 {
        let reach = self.reach[d];
        if self.quota == 1 {
            return (self.classes.canon(self.full) & reach) as u128;
        }
        let mut key = 0u128;
        let mut m = reach;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            key = key << 4 | self.counts[i] as u128;
        }
        key
    }

    /// Admissible bound on the value obtainable from level `d` on; `-inf`
    /// when some mandatory bidder has no bundle left.
    fn bound(&mut self, d: usize) -> f64 {
        let simple = self.simple_bound(d);
        if simple == f64::NEG_INFINITY {
            return simple;
        }
        simple.min(self.lagrangian_bound(d))
    }

    fn lagrangian_bound(&self, d: usize) -> f64 {
        let frame = self.frames.last().expect("root frame");
        let mut total = 0.0;
        let mut m = self.reach[d] & !self.full;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            total += frame.prices[i] * (self.quota - self.counts[i]) as f64;
        }
        for t in d..self.levels.len() {
            match frame.reduced[t].iter().find(|(_, mask)| mask & self.full == 0) {
                Some(&(r, _)) if self.mandatory => total += r,
                Some(&(r, _)) => total += r.max(0.0),
                None if self.mandatory => return f64::NEG_INFINITY,
                None => {}
            }
        }
        total
    }

    fn simple_bound(&mut self, d: usize) -> f64 {
        let mut total = 0.0;
        for t in d..self.levels.len() {
            match self.levels[t].iter().find(|c| c.mask & self.full == 0) {
                Some(c) => total += c.value,
                None if self.mandatory => {
                    if self.deepest_failure.is_none_or(|(depth, _)| d > depth) {
                        self.deepest_failure = Some((d, self.bidder_of_level[t]));
                    }
                    return f64::NEG_INFINITY;
                }
                None => {}
            }
        }
        total
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) {
            if let Some(dl) = self.deadline {
                if Instant::now() >= dl {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    /// Returns an upper bound on the best completion value below this node
    /// and whether it is exact (and reconstructible from the memo).
    fn dfs(&mut self, d: usize, g: f64) -> (f64, bool) {
        if d == self.levels.len() {
            if g > self.incumbent {
                self.incumbent = g;
                self.best_path.clone_from(&self.path);
                self.found = true;
            }
            return (0.0, true);
        }
        if self.out_of_time() {
            return (f64::INFINITY, false);
        }
        let key = (d as u32, if self.memo_enabled { self.key(d) } else { 0 });
        let mut bound = self.bound(d);
        if bound == f64::NEG_INFINITY {
            return (bound, true);
        }
        if self.memo_enabled {
            if let Some(e) = self.memo.get(&key).copied() {
                if e.exact {
                    if g + e.bound > self.incumbent {
                        self.adopt_from_memo(d, g + e.bound);
                    }
                    return (e.bound, true);
                }
                bound = bound.min(e.bound);
            }
        }
        if g + bound <= self.incumbent + OPTIMALITY_TOLERANCE {
            return (bound, false);
        }
        let refitted = d > 0 && d <= self.refit_depth && self.incumbent.is_finite() && self.refit(d, self.incumbent - g);
        if refitted {
            bound = bound.min(self.lagrangian_bound(d));
            if g + bound <= self.incumbent + OPTIMALITY_TOLERANCE {
                self.frames.pop();
                return (bound, false);
            }
        }
        let out = self.expand(d, g, bound, key);
        if refitted {
            self.frames.pop();
        }
        out
    }

    /// Dual function of the subproblem below depth `d` at prices `p`, with
    /// its subgradient in `grad`.
    fn dual_at(&self, d: usize, p: &[f64; 64], grad: &mut [f64; 64]) -> f64 {
        *grad = [0.0; 64];
        let mut total = 0.0;
        let mut m = self.reach[d] & !self.full;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            let room = (self.quota - self.counts[i]) as f64;
            total += p[i] * room;
            grad[i] = room;
        }
        for t in d..self.levels.len() {
            let best = self.levels[t]
                .iter()
                .filter(|c| c.mask & self.full == 0)
                .map(|c| (c.value - bundle_price(p, c.mask), c.mask))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((r, mask)) if self.mandatory || r > 0.0 => {
                    total += r;
                    let mut mm = mask;
                    while mm != 0 {
                        let i = mm.trailing_zeros() as usize;
                        mm &= mm - 1;
                        grad[i] -= 1.0;
                    }
                }
                Some(_) => {}
                None if self.mandatory => return f64::NEG_INFINITY,
                None => {}
            }
        }
        total
    }

    /// Subgradient steps on the subproblem prices, aiming at `target`.
    /// Pushes a frame and returns true when the bound improved.
    fn refit(&mut self, d: usize, target: f64) -> bool {
        let mut p = self.frames.last().expect("root frame").prices;
        let mut grad = [0.0; 64];
        let start = self.dual_at(d, &p, &mut grad);
        if !start.is_finite() {
            return false;
        }
        let (mut best, mut best_p) = (start, p);
        let mut current = start;
        let mut theta = 1.0;
        let mut stall = 0;
        for _ in 0..REFIT_STEPS {
            if best <= target {
                break;
            }
            let norm: f64 = (0..64).filter(|&i| !(p[i] == 0.0 && grad[i] > 0.0)).map(|i| grad[i] * grad[i]).sum();
            if norm == 0.0 {
                break;
            }
            let step = theta * (current - target).max(1e-9) / norm;
            for i in 0..64 {
                p[i] = (p[i] - step * grad[i]).max(0.0);
            }
            current = self.dual_at(d, &p, &mut grad);
            if current < best {
                best = current;
                best_p = p;
                stall = 0;
            } else {
                stall += 1;
                if stall >= 3 {
                    theta *= 0.5;
                    stall = 0;
                }
            }
        }
        if best >= start - 1e-9 {
            return false;
        }
        let mut reduced = vec![Vec::new(); self.levels.len()];
        for (t, slot) in reduced.iter_mut().enumerate().skip(d) {
            let mut r: Vec<(f64, u64)> = self.levels[t]
                .iter()
                .filter(|c| c.mask & self.full == 0)
                .map(|c| (c.value - bundle_price(&best_p, c.mask), c.mask))
                .collect();
            r.sort_by(|a, b| b.0.total_cmp(&a.0));
            *slot = r;
        }
        self.frames.push(Frame { prices: best_p, reduced });
        true
    }

    fn expand(&mut self, d: usize, g: f64, bound: f64, key: (u32, u128)) -> (f64, bool) {
        let mut best = f64::NEG_INFINITY;
        let mut best_choice = 0;
        let mut all_exact = true;
        let mut last_sig = 0;
        for bi in 0..self.branch[d].len() {
            let ci = self.branch[d][bi] as usize;
            let c = self.levels[d][ci];
            // equivalent bundles sit next to each other in the level order
            if c.mask & self.full != 0 || c.sig == last_sig {
                continue;
            }
            last_sig = c.sig;
            self.apply(c.mask);
            self.path[d] = ci as u32;
            let (u, exact) = self.dfs(d + 1, g + c.value);
            self.undo(c.mask);
            all_exact &= exact;
            if c.value + u > best {
                best = c.value + u;
                best_choice = c.sig;
            }
            if self.timed_out {
                return (f64::INFINITY, false);
            }
        }
        if !self.mandatory {
            self.path[d] = SKIP;
            let (u, exact) = self.dfs(d + 1, g);
            all_exact &= exact;
            if u > best {
                best = u;
                best_choice = 0;
            }
            if self.timed_out {
                return (f64::INFINITY, false);
            }
        }

        let mut exact = all_exact;
        if self.memo_enabled {
            let stored = if exact { best } else { best.min(bound) };
            if self.memo.len() < self.memo_limit || self.memo.contains_key(&key) {
                self.memo.insert(key, Entry { bound: stored, exact, choice: best_choice });
            } else {
                // not reconstructible without the entry
                exact = false;
            }
            (stored, exact)
        } else {
            (best.min(bound), false)
        }
    }

    /// Takes the current path up to `d` plus the memoized optimal
    /// continuation as the new incumbent.
    fn adopt_from_memo(&mut self, d: usize, value: f64) {
        let mut applied = Vec::new();
        let mut tail = Vec::new();
        for t in d..self.levels.len() {
            let e = self.memo[&(t as u32, self.key(t))];
            debug_assert!(e.exact);
            if e.choice == 0 {
                tail.push(SKIP);
                continue;
            }
            // the memo may come from an equivalent state; any free bundle of
            // the same class has the same continuation value
            let ci = self.levels[t]
                .iter()
                .position(|c| c.sig == e.choice && c.mask & self.full == 0)
                .expect("equivalent state admits an equivalent bundle");
            tail.push(ci as u32);
            let m = self.levels[t][ci].mask;
            self.apply(m);
            applied.push(m);
        }
        for m in applied.into_iter().rev() {
            self.undo(m);
        }
        self.best_path[..d].copy_from_slice(&self.path[..d]);
        self.best_path[d..].copy_from_slice(&tail);
        self.incumbent = value;
        self.found = true;
    }
}

/// Greedy bidder order keeping few items shared between placed and
/// unplaced bidders; ties keep the incoming order.
fn frontier_order(order: &[usize], per_bidder: &[Vec<Cand>]) -> Vec<usize> {
    let union = |k: usize| per_bidder[k].iter().fold(0u64, |a, c| a | c.mask);
    let mut rest: Vec<(usize, u64)> = order.iter().map(|&k| (k, union(k))).collect();
    let mut placed = 0u64;
    let mut out = Vec::with_capacity(order.len());
    while !rest.is_empty() {
        let frontier_after = |idx: usize| -> (u32, u32) {
            let p = placed | rest[idx].1;
            let later = rest.iter().enumerate().filter(|&(j, _)| j != idx).fold(0u64, |a, (_, &(_, m))| a | m);
            ((p & later).count_ones(), (rest[idx].1 & !placed).count_ones())
        };
        let pick = (0..rest.len()).min_by_key(|&i| frontier_after(i)).expect("non-empty");
        let (k, m) = rest.remove(pick);
        placed |= m;
        out.push(k);
    }
    out
}

/// Removes bids that another bid of the same bidder beats with a subset of
/// its items. Such bids never appear in a unique optimum.
fn drop_dominated(cands: &mut Vec<Cand>) {
    let snapshot = cands.clone();
    cands.retain(|s| {
        !snapshot.iter().any(|t| t.row != s.row && t.mask & !s.mask == 0 && t.mask != s.mask && t.value >= s.value)
    });
}

/// Groups of interchangeable items (only groups of two or more).
#[derive(Debug, Clone, Default)]
struct Classes {
    masks: Vec<u64>,
}

impl Classes {
    /// Replaces the items used from each class by the lowest-numbered
    /// members of that class.
    fn canon(&self, mask: u64) -> u64 {
        let mut out = mask;
        for &cm in &self.masks {
            let used = (mask & cm).count_ones();
            if used == 0 {
                continue;
            }
            out &= !cm;
            let mut rest = cm;
            for _ in 0..used {
                let low = rest & rest.wrapping_neg();
                out |= low;
                rest &= !low;
            }
        }
        out
    }

    /// Averages prices within each class; by convexity of the dual this
    /// never loosens the bound.
    fn symmetrize(&self, prices: &mut [f64; 64]) {
        for &cm in &self.masks {
            let avg = bundle_price(prices, cm) / cm.count_ones() as f64;
            let mut m = cm;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                prices[i] = avg;
            }
        }
    }

    fn detect(levels: &[Vec<Cand>], items: u64) -> Self {
        let lookup: HashMap<(usize, u64), u64> = levels
            .iter()
            .enumerate()
            .flat_map(|(l, cs)| cs.iter().map(move |c| ((l, c.mask), c.value.to_bits())))
            .collect();
        let swap = |mask: u64, a: usize, b: usize| -> u64 {
            let (ha, hb) = (mask >> a & 1, mask >> b & 1);
            if ha == hb {
                mask
            } else {
                mask ^ (1 << a) ^ (1 << b)
            }
        };
        let symmetric = |a: usize, b: usize| {
            levels.iter().enumerate().all(|(l, cs)| {
                cs.iter().all(|c| {
                    let m = swap(c.mask, a, b);
                    m == c.mask || lookup.get(&(l, m)) == Some(&c.value.to_bits())
                })
            })
        };
        // cheap necessary condition first: per-level count of bids holding the item
        let profile = |i: usize| -> Vec<usize> {
            levels.iter().map(|cs| cs.iter().filter(|c| c.mask >> i & 1 == 1).count()).collect()
        };
        // (item profile, members as (item, mask)) per interchangeability class
        #[allow(clippy::type_complexity)]
        let mut groups: Vec<(Vec<usize>, Vec<(usize, u64)>)> = Vec::new();
        let mut m = items;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            let p = profile(i);
            let gi = match groups.iter().position(|(q, _)| *q == p) {
                Some(gi) => gi,
                None => {
                    groups.push((p, Vec::new()));
                    groups.len() - 1
                }
            };
            let classes = &mut groups[gi].1;
            match classes.iter_mut().find(|(rep, _)| symmetric(*rep, i)) {
                Some((_, cm)) => *cm |= 1 << i,
                None => classes.push((i, 1 << i)),
            }
        }
        let masks = groups.into_iter().flat_map(|(_, cs)| cs).map(|(_, cm)| cm).filter(|cm| cm.count_ones() > 1).collect();
        Self { masks }
    }
}

/// Item prices for the Lagrangian bound, by projected subgradient descent
/// on the dual function from zero prices. Any non-negative prices give a
/// valid bound; this only makes it tighter.
fn fit_prices(levels: &[Vec<Cand>], reach: u64, quota: usize, mandatory: bool) -> [f64; 64] {
    let dual = |p: &[f64; 64], picks: &mut Vec<Option<u64>>| -> f64 {
        let mut total = 0.0;
        let mut m = reach;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            total += p[i] * quota as f64;
        }
        picks.clear();
        for level in levels {
            let best = level
                .iter()
                .map(|c| (c.value - bundle_price(p, c.mask), c.mask))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((r, mask)) if mandatory || r > 0.0 => {
                    total += r;
                    picks.push(Some(mask));
                }
                _ => picks.push(None),
            }
        }
        total
    };
    let mut p = [0.0; 64];
    let mut picks = Vec::new();
    let mut best_p = p;
    let mut best = dual(&p, &mut picks);
    let mut current = best;
    if !best.is_finite() {
        return p;
    }
    // the bound cannot drop below zero for optional bidders; aim a little
    // under the best value seen
    let mut theta = 1.0;
    let mut stall = 0;
    for _ in 0..120 {
        let mut g = [0.0f64; 64];
        let mut m = reach;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            g[i] = quota as f64;
        }
        for mask in picks.iter().flatten() {
            let mut mm = *mask;
            while mm != 0 {
                let i = mm.trailing_zeros() as usize;
                mm &= mm - 1;
                g[i] -= 1.0;
            }
        }
        // projected direction: ignore components pushing a zero price below 0
        let norm: f64 = (0..64).filter(|&i| !(p[i] == 0.0 && g[i] > 0.0)).map(|i| g[i] * g[i]).sum();
        if norm == 0.0 {
            break;
        }
        let target = 0.9 * best.min(current);
        let step = theta * (current - target).max(1e-6) / norm;
        for i in 0..64 {
            p[i] = (p[i] - step * g[i]).max(0.0);
        }
        current = dual(&p, &mut picks);
        if current < best - 1e-12 {
            best = current;
            best_p = p;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 8 {
                theta *= 0.5;
                stall = 0;
                if theta < 1e-3 {
                    break;
                }
            }
        }
    }
    best_p
}

fn bundle_price(p: &[f64; 64], mask: u64) -> f64 {
    let mut m = mask;
    let mut total = 0.0;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        total += p[i];
    }
    total
}

fn reduced_lists(levels: &[Vec<Cand>], prices: &[f64; 64]) -> Vec<Vec<(f64, u64)>> {
    levels
        .iter()
        .map(|level| {
            let mut r: Vec<(f64, u64)> = level.iter().map(|c| (c.value - bundle_price(prices, c.mask), c.mask)).collect();
            r.sort_by(|a, b| b.0.total_cmp(&a.0));
            r
        })
        .collect()
}

pub fn solve_wdp(bids: &BidMatrix, problem: &WdpProblem<'_>, opts: &SolveOptions) -> Result<WdpSolution> {
    let quota = problem.item_quota;
    if quota == 0 || quota > 15 {
        return Err(Error::InvalidParameter(format!("item quota must lie in [1, 15], got {quota}")));
    }
    if let Some(mc) = &problem.min_channels {
        if mc.per_item.len() != bids.n_items() {
            return Err(Error::DimensionMismatch(format!(
                "{} channel counts for {} items",
                mc.per_item.len(),
                bids.n_items()
            )));
        }
    }
    let n_bidders = bids.n_bidders();
    let mut per_bidder: Vec<Vec<Cand>> = vec![Vec::new(); n_bidders];
    for (row, b) in bids.rows().iter().enumerate() {
        if problem.min_channels.as_ref().is_some_and(|mc| !mc.admits(b.bundle)) {
            continue;
        }
        if b.value == 0.0 && !problem.require_all_bidders {
            continue;
        }
        per_bidder[b.bidder].push(Cand { mask: b.bundle.bits(), value: b.value, row, sig: 0 });
    }
    for cands in &mut per_bidder {
        drop_dominated(cands);
    }

    let mut order: Vec<usize> = if problem.require_all_bidders {
        (0..n_bidders).collect()
    } else {
        (0..n_bidders).filter(|&k| !per_bidder[k].is_empty()).collect()
    };
    if problem.require_all_bidders {
        // fewest options first
        order.sort_by_key(|&k| (per_bidder[k].len(), k));
    } else {
        order.sort_by(|&a, &b| per_bidder[b][0].value.total_cmp(&per_bidder[a][0].value).then(a.cmp(&b)));
    }
    let order = frontier_order(&order, &per_bidder);
    let mut levels: Vec<Vec<Cand>> = order.iter().map(|&k| std::mem::take(&mut per_bidder[k])).collect();
    let n = levels.len();
    let mut reach = vec![0u64; n + 1];
    for d in (0..n).rev() {
        reach[d] = reach[d + 1] | levels[d].iter().fold(0, |acc, c| acc | c.mask);
    }
    let classes = if quota == 1 { Classes::detect(&levels, reach[0]) } else { Classes::default() };
    for level in &mut levels {
        for c in level.iter_mut() {
            c.sig = classes.canon(c.mask);
        }
        level.sort_by(|a, b| {
            b.value
                .total_cmp(&a.value)
                .then(a.mask.count_ones().cmp(&b.mask.count_ones()))
                .then(a.sig.cmp(&b.sig))
                .then(a.row.cmp(&b.row))
        });
    }
    let memo_enabled = quota == 1 || reach[0].count_ones() * 4 <= 128;
    let lp = if problem.require_all_bidders {
        None
    } else {
        let cols: Vec<Column> = levels
            .iter()
            .enumerate()
            .flat_map(|(l, cs)| cs.iter().map(move |c| Column { mask: c.mask, level: l, value: c.value }))
            .collect();
        solve_packing_lp(&cols, n, reach[0], quota)
    };
    // an integral relaxation optimum is a feasible assignment
    let mut seed: Option<(Vec<u32>, f64)> = lp.as_ref().and_then(|lp| {
        let mut path = vec![SKIP; n];
        let mut total = 0.0;
        let mut j = 0;
        for (d, cs) in levels.iter().enumerate() {
            for (ci, c) in cs.iter().enumerate() {
                let x = lp.primal[j];
                j += 1;
                if x > 1.0 - 1e-9 {
                    path[d] = ci as u32;
                    total += c.value;
                } else if x > 1e-9 {
                    return None;
                }
            }
        }
        Some((path, total))
    });
    let mut prices = match &lp {
        Some(lp) => lp.duals,
        None => fit_prices(&levels, reach[0], quota, problem.require_all_bidders),
    };
    classes.symmetrize(&mut prices);
    // reduced value first, so the first descent follows the relaxation;
    // keyed on the canonical bundle to keep equivalent bids adjacent
    let branch: Vec<Vec<u32>> = levels
        .iter()
        .map(|cs| {
            let mut idx: Vec<u32> = (0..cs.len() as u32).collect();
            let key = |c: &Cand| c.value - bundle_price(&prices, c.sig);
            idx.sort_by(|&a, &b| {
                let (ca, cb) = (&cs[a as usize], &cs[b as usize]);
                key(cb)
                    .total_cmp(&key(ca))
                    .then(cb.value.total_cmp(&ca.value))
                    .then(ca.sig.cmp(&cb.sig))
                    .then(ca.row.cmp(&cb.row))
            });
            idx
        })
        .collect();

    let mut s = Search {
        frames: vec![Frame { reduced: reduced_lists(&levels, &prices), prices }],
        refit_depth: REFIT_DEPTH,
        branch,
        classes,
        levels,
        bidder_of_level: order,
        reach,
        quota: quota as u8,
        mandatory: problem.require_all_bidders,
        counts: [0; 64],
        full: 0,
        memo: HashMap::new(),
        memo_enabled: memo_enabled && opts.memo_limit > 0,
        memo_limit: opts.memo_limit,
        path: vec![SKIP; n],
        best_path: vec![SKIP; n],
        incumbent: f64::NEG_INFINITY,
        found: false,
        deadline: opts.timeout.map(|t| Instant::now() + t),
        nodes: 0,
        timed_out: false,
        deepest_failure: None,
    };
    if let Some((path, value)) = seed.take() {
        s.best_path = path;
        s.incumbent = value;
        s.found = true;
    }
    s.dfs(0, 0.0);

    if !s.found {
        if s.timed_out {
            return Ok(WdpSolution { accepted: Vec::new(), objective: 0.0, proven_optimal: false });
        }
        let tenant = s.deepest_failure.map(|(_, k)| k).unwrap_or(0);
        return Err(Error::Infeasible { tenant });
    }
    let mut accepted: Vec<usize> = s
        .best_path
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != SKIP)
        .map(|(d, &c)| s.levels[d][c as usize].row)
        .collect();
    accepted.sort_unstable();
    let objective = accepted.iter().map(|&r| bids.rows()[r].value).sum();
    Ok(WdpSolution { accepted, objective, proven_optimal: !s.timed_out })
}
