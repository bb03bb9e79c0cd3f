//! Combinatorial auctions over preallocated channels (CA) and over base
//! stations with relaxed item multiplicity (RCA).

mod bids;
mod lp;
mod oracle;
mod rca;
mod wdp;

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::assignment::ChannelSet;
use crate::scenario::MAX_CHANNELS as MAX_ITEMS;
use crate::error::{Error, Result};

pub use bids::{generate_channel_bids, prune_dominated, BidOptions};
pub use oracle::{brute_force_wdp, verify_solution, MinChannels, BRUTE_FORCE_MAX_ROWS};
pub use rca::{capped_channel_counts, generate_bs_bids, rca_to_preallocation, solve_rca, RcaConfig};
pub use wdp::{solve_ca, solve_wdp, WdpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub bundle: ChannelSet,
    pub value: f64,
    pub bidder: usize,
}

/// Rows of `(bundle, value, bidder)` over `n_items` items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidMatrix {
    n_items: usize,
    n_bidders: usize,
    rows: Vec<Bid>,
}

impl BidMatrix {
    pub fn new(n_items: usize, n_bidders: usize, rows: Vec<Bid>) -> Result<Self> {
        if n_items > MAX_ITEMS {
            return Err(Error::TooManyItems { items: n_items, max: MAX_ITEMS });
        }
        let m = Self { n_items, n_bidders, rows };
        m.validate()?;
        Ok(m)
    }

    pub fn empty(n_items: usize, n_bidders: usize) -> Self {
        Self { n_items, n_bidders, rows: Vec::new() }
    }

    fn validate(&self) -> Result<()> {
        let item_mask = if self.n_items == 64 { u64::MAX } else { (1u64 << self.n_items) - 1 };
        let mut seen = std::collections::HashSet::new();
        for (r, b) in self.rows.iter().enumerate() {
            if b.bundle.is_empty() {
                return Err(Error::InvalidBids(format!("row {r}: empty bundle")));
            }
            if b.bundle.bits() & !item_mask != 0 {
                return Err(Error::InvalidBids(format!("row {r}: bundle uses items beyond {}", self.n_items)));
            }
            if !(b.value.is_finite() && b.value >= 0.0) {
                return Err(Error::InvalidBids(format!("row {r}: value {} is not a non-negative number", b.value)));
            }
            if b.bidder >= self.n_bidders {
                return Err(Error::InvalidBids(format!("row {r}: bidder {} >= {}", b.bidder, self.n_bidders)));
            }
            if !seen.insert((b.bundle, b.bidder)) {
                return Err(Error::InvalidBids(format!("row {r}: duplicate bundle for bidder {}", b.bidder)));
            }
        }
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_bidders(&self) -> usize {
        self.n_bidders
    }

    pub fn rows(&self) -> &[Bid] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn bids_per_bidder(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_bidders];
        for b in &self.rows {
            c[b.bidder] += 1;
        }
        c
    }

    /// Comma-separated text, one row per bid: item 0/1 columns, value,
    /// bidder index.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for b in &self.rows {
            for i in 0..self.n_items {
                s.push(if b.bundle.contains(i) { '1' } else { '0' });
                s.push(',');
            }
            let _ = writeln!(s, "{:?},{}", b.value, b.bidder);
        }
        s
    }

    pub fn from_text(text: &str, n_items: usize, n_bidders: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: ln + 1, msg };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != n_items + 2 {
                return Err(parse_err(format!("expected {} columns, found {}", n_items + 2, cols.len())));
            }
            let mut bundle = ChannelSet::EMPTY;
            for (i, c) in cols[..n_items].iter().enumerate() {
                match *c {
                    "0" => {}
                    "1" => bundle.insert(i),
                    other => return Err(parse_err(format!("item column {i} is {other:?}, expected 0 or 1"))),
                }
            }
            let value = cols[n_items].parse::<f64>().map_err(|e| parse_err(format!("value: {e}")))?;
            let bidder = cols[n_items + 1].parse::<usize>().map_err(|e| parse_err(format!("bidder: {e}")))?;
            rows.push(Bid { bundle, value, bidder });
        }
        Self::new(n_items, n_bidders, rows)
    }
}

/// Accepted rows of a winner determination problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdpSolution {
    /// Row indices into the bid matrix, ascending.
    pub accepted: Vec<usize>,
    pub objective: f64,
    /// False when the time budget ran out; `accepted` is then the best
    /// incumbent found.
    pub proven_optimal: bool,
}

impl WdpSolution {
    /// Accepted row per bidder, if any.
    pub fn per_bidder(&self, bids: &BidMatrix) -> Vec<Option<usize>> {
        let mut out = vec![None; bids.n_bidders()];
        for &r in &self.accepted {
            out[bids.rows()[r].bidder] = Some(r);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub timeout: Option<Duration>,
    /// Upper limit on memo entries kept by the branch-and-bound.
    pub memo_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { timeout: Some(Duration::from_secs(10)), memo_limit: 1 << 22 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[usize]) -> ChannelSet {
        items.iter().copied().collect()
    }

    #[test]
    fn text_round_trip() {
        let m = BidMatrix::new(
            3,
            2,
            vec![
                Bid { bundle: set(&[0, 2]), value: 0.1 + 0.2, bidder: 1 },
                Bid { bundle: set(&[1]), value: 1.0, bidder: 0 },
            ],
        )
        .unwrap();
        let text = m.to_text();
        assert_eq!(text.lines().next().unwrap(), "1,0,1,0.30000000000000004,1");
        assert_eq!(BidMatrix::from_text(&text, 3, 2).unwrap(), m);
    }

    #[test]
    fn validation() {
        let b = |items: &[usize], value, bidder| Bid { bundle: set(items), value, bidder };
        assert!(BidMatrix::new(2, 1, vec![b(&[], 1.0, 0)]).is_err());
        assert!(BidMatrix::new(2, 1, vec![b(&[2], 1.0, 0)]).is_err());
        assert!(BidMatrix::new(2, 1, vec![b(&[0], -1.0, 0)]).is_err());
        assert!(BidMatrix::new(2, 1, vec![b(&[0], f64::NAN, 0)]).is_err());
        assert!(BidMatrix::new(2, 1, vec![b(&[0], 1.0, 1)]).is_err());
        assert!(BidMatrix::new(2, 1, vec![b(&[0], 1.0, 0), b(&[0], 2.0, 0)]).is_err());
        assert!(BidMatrix::new(2, 2, vec![b(&[0], 1.0, 0), b(&[0], 2.0, 1)]).is_ok());
        assert!(BidMatrix::new(65, 1, vec![]).is_err());
    }

    #[test]
    fn parse_errors_carry_line() {
        match BidMatrix::from_text("1,0,0.5,0\n1,x,0.5,0\n", 2, 1) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(BidMatrix::from_text("1,0,0.5\n", 2, 1).is_err());
    }
}
