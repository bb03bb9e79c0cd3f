//! Tenant capacity as a function of its channel set, and the utility curve.
//!
//! The reference capacity model treats every channel as an independent
//! Rayleigh link. A tenant is in outage only when all of its channels are,
//! so for mean SNRs `g_j` the outage CDF of the best channel is
//! `F(x) = prod_j (1 - exp(-x / g_j))`. The capacity is
//! `B * log2(1 + x*)` where `F(x*)` equals the outage target.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::assignment::ChannelSet;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, UtilityBounds};

/// Propagation and reliability parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkModel {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub path_loss_exponent: f64,
    pub ref_distance_m: f64,
    pub bandwidth_hz: f64,
    pub outage_target: f64,
    pub min_distance_m: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            tx_power_dbm: 10.0,
            noise_dbm: -50.0,
            path_loss_exponent: 3.0,
            ref_distance_m: 1.0,
            bandwidth_hz: 1.0e6,
            outage_target: 1.0e-5,
            min_distance_m: 1.0,
        }
    }
}

impl LinkModel {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.outage_target > 0.0 && self.outage_target < 0.5) {
            return bad("outage_target must lie in (0, 0.5)");
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth_hz must be positive");
        }
        if !(self.path_loss_exponent >= 2.0) {
            return bad("path_loss_exponent must be >= 2");
        }
        if !(self.ref_distance_m > 0.0 && self.min_distance_m > 0.0) {
            return bad("ref_distance_m and min_distance_m must be positive");
        }
        if !(self.tx_power_dbm.is_finite() && self.noise_dbm.is_finite()) {
            return bad("power levels must be finite");
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: LinkModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    /// Mean SNR in dB at distance `d` with fading value `k_db`.
    pub fn mean_snr_db_at(&self, d: f64, k_db: f64) -> f64 {
        let d = d.max(self.min_distance_m);
        self.tx_power_dbm - self.noise_dbm
            - 10.0 * self.path_loss_exponent * (d / self.ref_distance_m).log10()
            + k_db
    }

    pub fn mean_snr_at(&self, d: f64, k_db: f64) -> f64 {
        10f64.powf(self.mean_snr_db_at(d, k_db) / 10.0)
    }

    pub fn capacity_from_snr(&self, x: f64) -> f64 {
        self.bandwidth_hz * x.ln_1p() / std::f64::consts::LN_2
    }
}

/// Linear mean SNR of one channel of `bs` at `tenant`.
///
/// Panics if an index is out of range.
pub fn mean_snr(scenario: &Scenario, link: &LinkModel, tenant: usize, bs: usize) -> f64 {
    let d = scenario.distance(tenant, bs).expect("valid tenant and bs indices");
    link.mean_snr_at(d, scenario.fading_db()[tenant][bs])
}

/// Per-tenant, per-BS mean SNR table.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityProfile {
    pub mean_snr_linear: Vec<Vec<f64>>,
}

impl CapacityProfile {
    pub fn new(scenario: &Scenario, link: &LinkModel) -> Self {
        let mean_snr_linear = (0..scenario.n_tenants())
            .map(|k| (0..scenario.n_bs()).map(|i| mean_snr(scenario, link, k, i)).collect())
            .collect();
        Self { mean_snr_linear }
    }
}

// Bisection runs on ln(x) over a fixed bracket with a fixed step count, so
// the result is the same dyadic cell for any two sets whose CDFs order the
// same way. That keeps the computed capacity exactly monotone under set
// inclusion, not just up to tolerance.
const LN_X_LO: f64 = -69.077_552_789_821_37; // ln(1e-30)
const LN_X_HI: f64 = 69.077_552_789_821_37;
const BISECTION_STEPS: u32 = 52;

/// `ln F(x)` for channels grouped as `(mean_snr, multiplicity)`.
pub fn log_outage_cdf(x: f64, groups: &[(f64, u32)]) -> f64 {
    let mut acc = 0.0;
    for &(g, m) in groups {
        if m == 0 {
            continue;
        }
        acc += m as f64 * (-(-x / g).exp_m1()).ln();
    }
    acc
}

/// Root of `F(x) = eps` by bisection in log space. Relative accuracy is
/// about 3e-14 inside the bracket `[1e-30, 1e30]`.
pub fn outage_quantile(groups: &[(f64, u32)], eps: f64) -> f64 {
    if groups.iter().all(|&(_, m)| m == 0) {
        return 0.0;
    }
    let target = eps.ln();
    let (mut lo, mut hi) = (LN_X_LO, LN_X_HI);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if log_outage_cdf(mid.exp(), groups) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Capacity of `m` i.i.d. channels with mean SNR `snr`, closed form.
pub fn iid_capacity(link: &LinkModel, snr: f64, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let p = link.outage_target.powf(1.0 / m as f64);
    link.capacity_from_snr(-snr * (-p).ln_1p())
}

/// Maps a tenant's channel set to its capacity (`rho_k`).
pub trait CapacityModel {
    fn n_tenants(&self) -> usize;
    fn n_channels(&self) -> usize;
    fn capacity(&self, tenant: usize, channels: ChannelSet) -> f64;

    /// Channels of one class are interchangeable: capacity depends only on
    /// how many channels of each class a set holds.
    fn channel_class(&self, channel: usize) -> usize {
        channel
    }
}

/// Rayleigh selection-combining reference model.
#[derive(Debug, Clone)]
pub struct RayleighSelection {
    link: LinkModel,
    profile: CapacityProfile,
    channel_owner: Vec<usize>,
    n_bs: usize,
}

impl RayleighSelection {
    pub fn new(scenario: &Scenario, link: &LinkModel) -> Self {
        Self {
            link: *link,
            profile: CapacityProfile::new(scenario, link),
            channel_owner: scenario.channel_owner().to_vec(),
            n_bs: scenario.n_bs(),
        }
    }

    pub fn link(&self) -> &LinkModel {
        &self.link
    }

    pub fn profile(&self) -> &CapacityProfile {
        &self.profile
    }

    fn groups(&self, tenant: usize, channels: ChannelSet) -> Vec<(f64, u32)> {
        let mut counts = vec![0u32; self.n_bs];
        for j in channels.iter() {
            counts[self.channel_owner[j]] += 1;
        }
        let snr = &self.profile.mean_snr_linear[tenant];
        counts.iter().enumerate().filter(|(_, &m)| m > 0).map(|(i, &m)| (snr[i], m)).collect()
    }

    /// The pre-log outage SNR `x*` for a channel set.
    pub fn outage_snr(&self, tenant: usize, channels: ChannelSet) -> f64 {
        outage_quantile(&self.groups(tenant, channels), self.link.outage_target)
    }
}

impl CapacityModel for RayleighSelection {
    fn n_tenants(&self) -> usize {
        self.profile.mean_snr_linear.len()
    }

    fn n_channels(&self) -> usize {
        self.channel_owner.len()
    }

    fn capacity(&self, tenant: usize, channels: ChannelSet) -> f64 {
        if channels.is_empty() {
            return 0.0;
        }
        self.link.capacity_from_snr(self.outage_snr(tenant, channels))
    }

    fn channel_class(&self, channel: usize) -> usize {
        self.channel_owner[channel]
    }
}

/// Memoizes capacities per `(tenant, channel set)`. Single-threaded: each
/// evaluation owns its own cache.
pub struct CachedCapacity<'a, M: CapacityModel + ?Sized> {
    inner: &'a M,
    cache: RefCell<HashMap<(usize, u64), f64>>,
}

impl<'a, M: CapacityModel + ?Sized> CachedCapacity<'a, M> {
    pub fn new(inner: &'a M) -> Self {
        Self { inner, cache: RefCell::new(HashMap::new()) }
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.borrow().len()
    }
}

impl<M: CapacityModel + ?Sized> CapacityModel for CachedCapacity<'_, M> {
    fn n_tenants(&self) -> usize {
        self.inner.n_tenants()
    }

    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }

    fn capacity(&self, tenant: usize, channels: ChannelSet) -> f64 {
        if let Some(&c) = self.cache.borrow().get(&(tenant, channels.0)) {
            return c;
        }
        let c = self.inner.capacity(tenant, channels);
        self.cache.borrow_mut().insert((tenant, channels.0), c);
        c
    }

    fn channel_class(&self, channel: usize) -> usize {
        self.inner.channel_class(channel)
    }
}

/// `rho_k(S)` under the reference model.
pub fn connectivity(scenario: &Scenario, link: &LinkModel, tenant: usize, channels: ChannelSet) -> f64 {
    RayleighSelection::new(scenario, link).capacity(tenant, channels)
}

/// Capacity of a single channel for a tenant (SCV).
pub fn single_connectivity_value<M: CapacityModel + ?Sized>(model: &M, tenant: usize, channel: usize) -> f64 {
    model.capacity(tenant, ChannelSet::single(channel))
}

/// SCV of every (tenant, BS) pair; all channels of one BS share it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScvTable {
    by_bs: Vec<Vec<f64>>,
    channel_owner: Vec<usize>,
}

impl ScvTable {
    pub fn new<M: CapacityModel + ?Sized>(scenario: &Scenario, model: &M) -> Self {
        let by_bs = (0..scenario.n_tenants())
            .map(|k| {
                (0..scenario.n_bs())
                    .map(|i| single_connectivity_value(model, k, scenario.bs_channels(i)[0]))
                    .collect()
            })
            .collect();
        Self { by_bs, channel_owner: scenario.channel_owner().to_vec() }
    }

    pub fn from_bs_values(by_bs: Vec<Vec<f64>>, channel_owner: Vec<usize>) -> Self {
        Self { by_bs, channel_owner }
    }

    pub fn n_tenants(&self) -> usize {
        self.by_bs.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_owner.len()
    }

    pub fn bs(&self, tenant: usize, bs: usize) -> f64 {
        self.by_bs[tenant][bs]
    }

    pub fn channel(&self, tenant: usize, channel: usize) -> f64 {
        self.by_bs[tenant][self.channel_owner[channel]]
    }
}

/// Tenant utility: zero up to `c_min`, log-linear up to `c_max`, then one.
pub fn utility(c: f64, bounds: &UtilityBounds) -> f64 {
    let UtilityBounds { c_min, c_max } = *bounds;
    if c <= c_min {
        0.0
    } else if c <= c_max {
        (c / c_min).ln() / (c_max / c_min).ln()
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Point, SetupClass, K_REF_DB};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn mean_snr_at_reference_distance() {
        let link = LinkModel::default();
        assert!(close(link.mean_snr_db_at(1.0, K_REF_DB), 74.1, 1e-12));
        let drop = link.mean_snr_db_at(10.0, K_REF_DB) - link.mean_snr_db_at(20.0, K_REF_DB);
        assert!(close(drop, 30.0 * 2f64.log10(), 1e-12));
        let alpha2 = LinkModel { path_loss_exponent: 2.0, ..link };
        let drop2 = alpha2.mean_snr_db_at(10.0, K_REF_DB) - alpha2.mean_snr_db_at(20.0, K_REF_DB);
        assert!((drop2 - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn faded_entry_ratio() {
        let link = LinkModel::default();
        let ratio = link.mean_snr_at(25.0, K_REF_DB) / link.mean_snr_at(25.0, 0.5 * K_REF_DB);
        assert!(close(ratio, 10f64.powf(7.05 / 10.0), 1e-12));
    }

    #[test]
    fn single_channel_quantile_matches_closed_form() {
        let x = outage_quantile(&[(100.0, 1)], 1e-5);
        let expected = -100.0 * (-1e-5f64).ln_1p();
        assert!(close(x, expected, 1e-10));
        assert!(close(x, 1.0000e-3, 1e-4));
    }

    #[test]
    fn two_channel_quantile_matches_closed_form() {
        let x = outage_quantile(&[(100.0, 2)], 1e-5);
        let expected = -100.0 * (-(1e-5f64).sqrt()).ln_1p();
        assert!(close(x, expected, 1e-10));
        assert!((x - 0.3168).abs() < 1e-3);
        let link = LinkModel::default();
        let ratio = link.capacity_from_snr(x) / link.capacity_from_snr(1.0000050000333e-3);
        assert!(ratio > 100.0);
    }

    #[test]
    fn quantile_residual_is_tiny() {
        for groups in [vec![(3.0, 1)], vec![(50.0, 2), (7.0, 1)], vec![(1e4, 3), (20.0, 5)]] {
            let x = outage_quantile(&groups, 1e-5);
            let f = log_outage_cdf(x, &groups).exp();
            assert!((f - 1e-5).abs() <= 1e-9 * 1e-5, "{groups:?}: F = {f}");
        }
    }

    #[test]
    fn empty_set_has_zero_capacity() {
        let s = generate_scenario(SetupClass::SS, 1);
        let m = RayleighSelection::new(&s, &LinkModel::default());
        assert_eq!(m.capacity(0, ChannelSet::EMPTY), 0.0);
    }

    #[test]
    fn scv_identical_within_bs() {
        let s = generate_scenario(SetupClass::MS, 2);
        let m = RayleighSelection::new(&s, &LinkModel::default());
        for k in 0..s.n_tenants() {
            for i in 0..s.n_bs() {
                let chans = s.bs_channels(i);
                let first = single_connectivity_value(&m, k, chans[0]);
                for &j in chans {
                    assert_eq!(single_connectivity_value(&m, k, j).to_bits(), first.to_bits());
                    assert_eq!(m.capacity(k, ChannelSet::single(j)).to_bits(), first.to_bits());
                }
            }
        }
    }

    #[test]
    fn closer_bs_gives_larger_scv() {
        let b = UtilityBounds::new(1.0, 2.0).unwrap();
        let s = Scenario::from_parts(
            100.0,
            50.0,
            vec![Point::new(20.0, 20.0)],
            vec![Point::new(0.0, 20.0), Point::new(100.0, 20.0)],
            vec![1, 1],
            vec![vec![K_REF_DB, K_REF_DB]],
            vec![b],
            0,
        )
        .unwrap();
        let m = RayleighSelection::new(&s, &LinkModel::default());
        assert!(single_connectivity_value(&m, 0, 0) > single_connectivity_value(&m, 0, 1));
    }

    #[test]
    fn utility_examples() {
        let b = UtilityBounds::new(2.0, 50.0).unwrap();
        assert_eq!(utility(2.0, &b), 0.0);
        assert_eq!(utility(1.0, &b), 0.0);
        assert!((utility(50.0, &b) - 1.0).abs() <= 1e-12);
        assert!((utility(10.0, &b) - 0.5).abs() <= 1e-12);
        assert_eq!(utility(1e9, &b), 1.0);
    }

    #[test]
    fn cache_returns_identical_values() {
        let s = generate_scenario(SetupClass::SS, 5);
        let m = RayleighSelection::new(&s, &LinkModel::default());
        let c = CachedCapacity::new(&m);
        let set: ChannelSet = [0, 1, 2].into_iter().collect();
        let a = c.capacity(1, set);
        let b = c.capacity(1, set);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), m.capacity(1, set).to_bits());
        assert_eq!(c.cached_entries(), 1);
    }

    #[test]
    fn link_validation() {
        assert!(LinkModel::default().validate().is_ok());
        assert!(LinkModel { outage_target: 0.5, ..Default::default() }.validate().is_err());
        assert!(LinkModel { path_loss_exponent: 1.5, ..Default::default() }.validate().is_err());
        assert!(LinkModel::from_json(r#"{"path_loss_exponent": 2.5}"#).is_ok());
    }
}
