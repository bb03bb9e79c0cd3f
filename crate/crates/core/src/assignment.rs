//! Channel sets and binary tenant x channel assignment matrices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scenario::MAX_CHANNELS;

/// A set of channel indices below 64, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelSet(pub u64);

impl ChannelSet {
    pub const EMPTY: ChannelSet = ChannelSet(0);

    pub fn single(channel: usize) -> Self {
        debug_assert!(channel < MAX_CHANNELS);
        ChannelSet(1 << channel)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, channel: usize) -> bool {
        channel < MAX_CHANNELS && self.0 >> channel & 1 == 1
    }

    pub fn insert(&mut self, channel: usize) {
        self.0 |= 1 << channel;
    }

    pub fn remove(&mut self, channel: usize) {
        self.0 &= !(1 << channel);
    }

    pub fn union(self, other: ChannelSet) -> ChannelSet {
        ChannelSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: ChannelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let c = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(c)
            }
        })
    }
}

impl FromIterator<usize> for ChannelSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ChannelSet::EMPTY;
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Binary `n_tenants x n_channels` matrix. Rows are channel sets; column
/// sums are unconstrained here (a preallocation is non-exclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    n_channels: usize,
    rows: Vec<ChannelSet>,
}

impl AssignmentMatrix {
    pub fn zeros(n_tenants: usize, n_channels: usize) -> Self {
        assert!(n_channels <= MAX_CHANNELS, "at most {MAX_CHANNELS} channels supported");
        Self { n_channels, rows: vec![ChannelSet::EMPTY; n_tenants] }
    }

    pub fn from_rows(n_channels: usize, rows: Vec<ChannelSet>) -> Result<Self> {
        if n_channels > MAX_CHANNELS {
            return Err(Error::TooManyItems { items: n_channels, max: MAX_CHANNELS });
        }
        let limit = if n_channels == 64 { u64::MAX } else { (1u64 << n_channels) - 1 };
        if let Some(k) = rows.iter().position(|r| r.0 & !limit != 0) {
            return Err(Error::DimensionMismatch(format!(
                "row {k} references a channel >= {n_channels}"
            )));
        }
        Ok(Self { n_channels, rows })
    }

    pub fn n_tenants(&self) -> usize {
        self.rows.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn get(&self, tenant: usize, channel: usize) -> bool {
        self.rows[tenant].contains(channel)
    }

    pub fn set(&mut self, tenant: usize, channel: usize, on: bool) {
        assert!(channel < self.n_channels, "channel {channel} out of range");
        if on {
            self.rows[tenant].insert(channel);
        } else {
            self.rows[tenant].remove(channel);
        }
    }

    pub fn row(&self, tenant: usize) -> ChannelSet {
        self.rows[tenant]
    }

    pub fn set_row(&mut self, tenant: usize, set: ChannelSet) {
        self.rows[tenant] = set;
    }

    pub fn rows(&self) -> &[ChannelSet] {
        &self.rows
    }

    pub fn row_sum(&self, tenant: usize) -> usize {
        self.rows[tenant].len()
    }

    pub fn col_sum(&self, channel: usize) -> usize {
        self.rows.iter().filter(|r| r.contains(channel)).count()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.n_channels).map(|j| self.col_sum(j)).collect()
    }

    /// True when every channel is held by at most one tenant.
    pub fn is_univalent(&self) -> bool {
        let mut seen = 0u64;
        for r in &self.rows {
            if seen & r.0 != 0 {
                return false;
            }
            seen |= r.0;
        }
        true
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n_channels: usize,
    rows: Vec<Vec<usize>>,
}

impl Serialize for AssignmentMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile {
            n_channels: self.n_channels,
            rows: self.rows.iter().map(|r| r.iter().collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AssignmentMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = MatrixFile::deserialize(d)?;
        if f.rows.iter().flatten().any(|&c| c >= MAX_CHANNELS) {
            return Err(serde::de::Error::custom("channel index exceeds 63"));
        }
        let rows = f.rows.into_iter().map(|r| r.into_iter().collect()).collect();
        AssignmentMatrix::from_rows(f.n_channels, rows).map_err(serde::de::Error::custom)
    }
}
