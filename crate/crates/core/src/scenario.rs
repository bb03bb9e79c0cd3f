//! Randomized simulation instances: geometry, per-BS channel counts, the
//! obstacle fading matrix and per-tenant capacity requirements.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity::{self, LinkModel};
use crate::error::{Error, Result};
use crate::rng::{Stream, Streams};

/// Clear line-of-sight fading value, dB.
pub const K_REF_DB: f64 = 14.1;

/// Channel sets are handled as 64-bit masks throughout.
pub const MAX_CHANNELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetupClass {
    SS,
    MS,
    LS,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupParams {
    pub width_m: f64,
    pub height_m: f64,
    pub n_tenants: usize,
    pub n_bs: usize,
    pub min_channels_per_bs: usize,
    pub max_channels_per_bs: usize,
    pub max_total_channels: usize,
    /// Default `(min, max)` reference channel counts for utility bounds.
    pub reference_channels: (usize, usize),
}

impl SetupClass {
    pub const ALL: [SetupClass; 3] = [SetupClass::SS, SetupClass::MS, SetupClass::LS];

    pub fn params(self) -> SetupParams {
        match self {
            SetupClass::SS => SetupParams {
                width_m: 100.0,
                height_m: 50.0,
                n_tenants: 6,
                n_bs: 8,
                min_channels_per_bs: 1,
                max_channels_per_bs: 3,
                max_total_channels: 20,
                reference_channels: (2, 4),
            },
            SetupClass::MS => SetupParams {
                width_m: 120.0,
                height_m: 70.0,
                n_tenants: 12,
                n_bs: 12,
                min_channels_per_bs: 2,
                max_channels_per_bs: 5,
                max_total_channels: 45,
                reference_channels: (3, 5),
            },
            SetupClass::LS => SetupParams {
                width_m: 150.0,
                height_m: 100.0,
                n_tenants: 20,
                n_bs: 16,
                min_channels_per_bs: 3,
                max_channels_per_bs: 6,
                max_total_channels: 60,
                reference_channels: (3, 6),
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SetupClass::SS => "SS",
            SetupClass::MS => "MS",
            SetupClass::LS => "LS",
        }
    }
}

impl fmt::Display for SetupClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetupClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ss" => Ok(SetupClass::SS),
            "ms" => Ok(SetupClass::MS),
            "ls" => Ok(SetupClass::LS),
            other => Err(Error::InvalidParameter(format!("unknown setup class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Capacity requirements of one tenant (`C_min`, `C_max`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBounds {
    pub c_min: f64,
    pub c_max: f64,
}

impl UtilityBounds {
    pub fn new(c_min: f64, c_max: f64) -> Result<Self> {
        let b = Self { c_min, c_max };
        b.validate()?;
        Ok(b)
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.c_min.is_finite() && self.c_max.is_finite() && self.c_min > 0.0 && self.c_min < self.c_max)
        {
            return Err(Error::InvalidScenario(format!(
                "utility bounds need 0 < c_min < c_max, got ({}, {})",
                self.c_min, self.c_max
            )));
        }
        Ok(())
    }
}

/// How per-tenant capacity requirements are drawn.
///
/// Both bounds scale a reference capacity: the outage capacity of
/// `*_reference_channels` independent clear-LOS channels seen from
/// `reference_distance_fraction` of the area diagonal. Unset channel
/// counts fall back to the setup class defaults
/// ([`SetupParams::reference_channels`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtilityBoundsConfig {
    pub reference_distance_fraction: f64,
    pub min_reference_channels: Option<usize>,
    pub min_factor: (f64, f64),
    pub max_reference_channels: Option<usize>,
    pub max_factor: (f64, f64),
}

impl Default for UtilityBoundsConfig {
    fn default() -> Self {
        Self {
            reference_distance_fraction: 0.5,
            min_reference_channels: None,
            min_factor: (0.25, 0.5),
            max_reference_channels: None,
            max_factor: (1.5, 3.0),
        }
    }
}

/// Generation knobs that are not fixed by the setup class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Fraction of tenant/BS pairs whose path crosses an obstacle.
    pub obstacle_fraction: f64,
    /// A faded entry becomes `K_ref * u` with `u` uniform in this range.
    pub fading_factor: (f64, f64),
    pub utility: UtilityBoundsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            obstacle_fraction: 0.30,
            fading_factor: (0.20, 0.80),
            utility: UtilityBoundsConfig::default(),
        }
    }
}

impl ScenarioConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(0.0..=1.0).contains(&self.obstacle_fraction) {
            return bad("obstacle_fraction must lie in [0, 1]");
        }
        let (lo, hi) = self.fading_factor;
        if !(0.0 <= lo && lo <= hi && hi < 1.0) {
            return bad("fading_factor must satisfy 0 <= lo <= hi < 1");
        }
        let u = &self.utility;
        if !(u.reference_distance_fraction > 0.0) {
            return bad("reference_distance_fraction must be positive");
        }
        if u.min_reference_channels == Some(0) || u.max_reference_channels == Some(0) {
            return bad("reference channel counts must be positive");
        }
        let (a, b) = u.min_factor;
        let (c, d) = u.max_factor;
        if !(0.0 < a && a <= b && 0.0 < c && c <= d) {
            return bad("utility factors must be positive, ordered ranges");
        }
        Ok(())
    }
}

/// One simulation instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    setup: Option<SetupClass>,
    width_m: f64,
    height_m: f64,
    tenant_positions: Vec<Point>,
    bs_positions: Vec<Point>,
    channels_per_bs: Vec<usize>,
    channel_owner: Vec<usize>,
    fading_db: Vec<Vec<f64>>,
    utility_bounds: Vec<UtilityBounds>,
    seed: u64,
    // derived
    bs_channels: Vec<Vec<usize>>,
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    setup: Option<SetupClass>,
    width_m: f64,
    height_m: f64,
    tenant_positions: Vec<Point>,
    bs_positions: Vec<Point>,
    channels_per_bs: Vec<usize>,
    channel_owner: Vec<usize>,
    fading_db: Vec<Vec<f64>>,
    utility_bounds: Vec<UtilityBounds>,
    seed: u64,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        Scenario::build(
            f.setup,
            f.width_m,
            f.height_m,
            f.tenant_positions,
            f.bs_positions,
            f.channels_per_bs,
            Some(f.channel_owner),
            f.fading_db,
            f.utility_bounds,
            f.seed,
        )
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            setup: s.setup,
            width_m: s.width_m,
            height_m: s.height_m,
            tenant_positions: s.tenant_positions,
            bs_positions: s.bs_positions,
            channels_per_bs: s.channels_per_bs,
            channel_owner: s.channel_owner,
            fading_db: s.fading_db,
            utility_bounds: s.utility_bounds,
            seed: s.seed,
        }
    }
}

impl Scenario {
    /// Builds a scenario from explicit parts. Channels are numbered
    /// contiguously by base station.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        width_m: f64,
        height_m: f64,
        tenant_positions: Vec<Point>,
        bs_positions: Vec<Point>,
        channels_per_bs: Vec<usize>,
        fading_db: Vec<Vec<f64>>,
        utility_bounds: Vec<UtilityBounds>,
        seed: u64,
    ) -> Result<Self> {
        Self::build(
            None,
            width_m,
            height_m,
            tenant_positions,
            bs_positions,
            channels_per_bs,
            None,
            fading_db,
            utility_bounds,
            seed,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        setup: Option<SetupClass>,
        width_m: f64,
        height_m: f64,
        tenant_positions: Vec<Point>,
        bs_positions: Vec<Point>,
        channels_per_bs: Vec<usize>,
        channel_owner: Option<Vec<usize>>,
        fading_db: Vec<Vec<f64>>,
        utility_bounds: Vec<UtilityBounds>,
        seed: u64,
    ) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidScenario(m));
        let n_t = tenant_positions.len();
        let n_bs = bs_positions.len();
        if !(width_m > 0.0 && height_m > 0.0) {
            return invalid(format!("area must be positive, got {width_m} x {height_m}"));
        }
        if n_t == 0 || n_bs == 0 {
            return invalid("need at least one tenant and one base station".into());
        }
        if channels_per_bs.len() != n_bs {
            return invalid(format!(
                "channels_per_bs has {} entries for {n_bs} base stations",
                channels_per_bs.len()
            ));
        }
        if channels_per_bs.contains(&0) {
            return invalid("every base station must offer at least one channel".into());
        }
        let total: usize = channels_per_bs.iter().sum();
        if total > MAX_CHANNELS {
            return Err(Error::TooManyItems { items: total, max: MAX_CHANNELS });
        }
        let owner = match channel_owner {
            Some(o) => o,
            None => channels_per_bs
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
                .collect(),
        };
        if owner.len() != total {
            return invalid(format!("channel_owner has {} entries, expected {total}", owner.len()));
        }
        let mut bs_channels = vec![Vec::new(); n_bs];
        for (j, &i) in owner.iter().enumerate() {
            if i >= n_bs {
                return invalid(format!("channel {j} owned by unknown base station {i}"));
            }
            bs_channels[i].push(j);
        }
        for (i, chans) in bs_channels.iter().enumerate() {
            if chans.len() != channels_per_bs[i] {
                return invalid(format!(
                    "base station {i} owns {} channels but channels_per_bs says {}",
                    chans.len(),
                    channels_per_bs[i]
                ));
            }
        }
        if fading_db.len() != n_t || fading_db.iter().any(|row| row.len() != n_bs) {
            return invalid(format!("fading matrix must be {n_t} x {n_bs}"));
        }
        if fading_db.iter().flatten().any(|k| !k.is_finite()) {
            return invalid("fading entries must be finite".into());
        }
        if utility_bounds.len() != n_t {
            return invalid(format!("{} utility bounds for {n_t} tenants", utility_bounds.len()));
        }
        for b in &utility_bounds {
            b.validate()?;
        }
        Ok(Self {
            setup,
            width_m,
            height_m,
            tenant_positions,
            bs_positions,
            channels_per_bs,
            channel_owner: owner,
            fading_db,
            utility_bounds,
            seed,
            bs_channels,
        })
    }

    pub fn setup(&self) -> Option<SetupClass> {
        self.setup
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn n_tenants(&self) -> usize {
        self.tenant_positions.len()
    }

    pub fn n_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_owner.len()
    }

    pub fn tenant_positions(&self) -> &[Point] {
        &self.tenant_positions
    }

    pub fn bs_positions(&self) -> &[Point] {
        &self.bs_positions
    }

    pub fn channels_per_bs(&self) -> &[usize] {
        &self.channels_per_bs
    }

    pub fn channel_owner(&self) -> &[usize] {
        &self.channel_owner
    }

    pub fn owner(&self, channel: usize) -> usize {
        self.channel_owner[channel]
    }

    /// Channel indices offered by base station `bs`, ascending.
    pub fn bs_channels(&self, bs: usize) -> &[usize] {
        &self.bs_channels[bs]
    }

    pub fn fading_db(&self) -> &[Vec<f64>] {
        &self.fading_db
    }

    pub fn utility_bounds(&self) -> &[UtilityBounds] {
        &self.utility_bounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Euclidean tenant-to-BS distance in meters.
    pub fn distance(&self, tenant: usize, bs: usize) -> Result<f64> {
        let t = self.tenant_positions.get(tenant).ok_or(Error::IndexOutOfRange {
            what: "tenant",
            index: tenant,
            len: self.n_tenants(),
        })?;
        let b = self.bs_positions.get(bs).ok_or(Error::IndexOutOfRange {
            what: "base station",
            index: bs,
            len: self.n_bs(),
        })?;
        Ok(t.distance(b))
    }

    /// Copy of this scenario with replaced utility bounds.
    pub fn with_utility_bounds(&self, bounds: Vec<UtilityBounds>) -> Result<Self> {
        let mut file = ScenarioFile::from(self.clone());
        file.utility_bounds = bounds;
        Scenario::try_from(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Generates a scenario with the default generation config and link model.
pub fn generate_scenario(class: SetupClass, seed: u64) -> Scenario {
    generate_scenario_with(class, seed, &ScenarioConfig::default(), &LinkModel::default())
        .expect("default configuration is valid")
}

pub fn generate_scenario_with(
    class: SetupClass,
    seed: u64,
    cfg: &ScenarioConfig,
    link: &LinkModel,
) -> Result<Scenario> {
    cfg.validate()?;
    link.validate()?;
    let p = class.params();
    let streams = Streams::new(seed);

    let mut rng = streams.rng(Stream::Placement, 0);
    let tenants: Vec<Point> = (0..p.n_tenants)
        .map(|_| interior_point(&mut rng, p.width_m, p.height_m))
        .collect();
    let bss: Vec<Point> = (0..p.n_bs)
        .map(|_| boundary_point(&mut rng, p.width_m, p.height_m))
        .collect();

    let mut rng = streams.rng(Stream::ChannelCounts, 0);
    let mut counts: Vec<usize> = (0..p.n_bs)
        .map(|_| rng.random_range(p.min_channels_per_bs..=p.max_channels_per_bs))
        .collect();
    cap_channel_total(&mut counts, p.min_channels_per_bs, p.max_total_channels);

    let mut rng = streams.rng(Stream::Fading, 0);
    let fading = apply_obstacle_fading(&mut rng, p.n_tenants, p.n_bs, cfg);

    let diag = p.width_m.hypot(p.height_m);
    let ref_snr = link.mean_snr_at(diag * cfg.utility.reference_distance_fraction, K_REF_DB);
    let min_n = cfg.utility.min_reference_channels.unwrap_or(p.reference_channels.0);
    let max_n = cfg.utility.max_reference_channels.unwrap_or(p.reference_channels.1);
    let min_ref = connectivity::iid_capacity(link, ref_snr, min_n);
    let max_ref = connectivity::iid_capacity(link, ref_snr, max_n);
    let mut rng = streams.rng(Stream::UtilityBounds, 0);
    let bounds = (0..p.n_tenants)
        .map(|_| {
            let (a, b) = cfg.utility.min_factor;
            let (c, d) = cfg.utility.max_factor;
            let c_min = min_ref * uniform(&mut rng, a, b);
            let c_max = max_ref * uniform(&mut rng, c, d);
            UtilityBounds::new(c_min, c_max)
        })
        .collect::<Result<Vec<_>>>()?;

    Scenario::build(
        Some(class),
        p.width_m,
        p.height_m,
        tenants,
        bss,
        counts,
        None,
        fading,
        bounds,
        seed,
    )
}

/// Obstacle fading matrix: exactly `round(fraction * n_t * n_bs)` distinct
/// entries are reduced to `K_ref * u`, the rest stay at `K_ref`.
pub fn apply_obstacle_fading<R: Rng + ?Sized>(
    rng: &mut R,
    n_tenants: usize,
    n_bs: usize,
    cfg: &ScenarioConfig,
) -> Vec<Vec<f64>> {
    let n = n_tenants * n_bs;
    let n_faded = (cfg.obstacle_fraction * n as f64).round() as usize;
    let mut k = vec![vec![K_REF_DB; n_bs]; n_tenants];
    let (lo, hi) = cfg.fading_factor;
    for idx in index::sample(rng, n, n_faded.min(n)).into_vec() {
        k[idx / n_bs][idx % n_bs] = K_REF_DB * uniform(rng, lo, hi);
    }
    k
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn interior_point<R: Rng + ?Sized>(rng: &mut R, w: f64, h: f64) -> Point {
    loop {
        let x = rng.random_range(0.0..w);
        let y = rng.random_range(0.0..h);
        if x > 0.0 && y > 0.0 {
            return Point::new(x, y);
        }
    }
}

/// Uniform by arc length over the rectangle perimeter.
fn boundary_point<R: Rng + ?Sized>(rng: &mut R, w: f64, h: f64) -> Point {
    let t = rng.random_range(0.0..2.0 * (w + h));
    if t < w {
        Point::new(t, 0.0)
    } else if t < w + h {
        Point::new(w, t - w)
    } else if t < 2.0 * w + h {
        Point::new(2.0 * w + h - t, h)
    } else {
        Point::new(0.0, 2.0 * (w + h) - t)
    }
}

/// Decrements counts round-robin from the last BS (never below `min`) until
/// the total fits under `cap`.
fn cap_channel_total(counts: &mut [usize], min: usize, cap: usize) {
    let mut total: usize = counts.iter().sum();
    while total > cap {
        let mut progressed = false;
        for c in counts.iter_mut().rev() {
            if total <= cap {
                break;
            }
            if *c > min {
                *c -= 1;
                total -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(t: Point, b: Point) -> Scenario {
        Scenario::from_parts(
            100.0,
            100.0,
            vec![t],
            vec![b],
            vec![1],
            vec![vec![K_REF_DB]],
            vec![UtilityBounds::new(1.0, 2.0).unwrap()],
            0,
        )
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(tiny(Point::new(0.0, 0.0), Point::new(3.0, 4.0)).distance(0, 0).unwrap(), 5.0);
        assert_eq!(tiny(Point::new(10.0, 10.0), Point::new(10.0, 50.0)).distance(0, 0).unwrap(), 40.0);
        assert_eq!(tiny(Point::new(7.0, 7.0), Point::new(7.0, 7.0)).distance(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn distance_index_out_of_range() {
        let s = tiny(Point::new(1.0, 1.0), Point::new(0.0, 0.0));
        assert!(matches!(s.distance(1, 0), Err(Error::IndexOutOfRange { what: "tenant", .. })));
        assert!(matches!(s.distance(0, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn setup_sizes() {
        for seed in 0..50 {
            let ss = generate_scenario(SetupClass::SS, seed);
            assert_eq!((ss.n_tenants(), ss.n_bs()), (6, 8));
            assert!((8..=20).contains(&ss.n_channels()));
            let ms = generate_scenario(SetupClass::MS, seed);
            assert_eq!((ms.n_tenants(), ms.n_bs()), (12, 12));
            assert!((24..=45).contains(&ms.n_channels()));
            let ls = generate_scenario(SetupClass::LS, seed);
            assert_eq!((ls.n_tenants(), ls.n_bs()), (20, 16));
            assert!((48..=60).contains(&ls.n_channels()));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scenario(SetupClass::SS, 7);
        let b = generate_scenario(SetupClass::SS, 7);
        assert_eq!(a, b);
        assert_ne!(a, generate_scenario(SetupClass::SS, 8));
    }

    #[test]
    fn ss_fading_count_is_fourteen() {
        let s = generate_scenario(SetupClass::SS, 3);
        let reduced = s.fading_db().iter().flatten().filter(|&&k| k < K_REF_DB).count();
        assert_eq!(reduced, 14);
        for &k in s.fading_db().iter().flatten() {
            assert!(k <= K_REF_DB);
            if k < K_REF_DB {
                assert!((0.2 * K_REF_DB..=0.8 * K_REF_DB).contains(&k));
            }
        }
    }

    #[test]
    fn no_obstacles_leaves_reference() {
        let cfg = ScenarioConfig { obstacle_fraction: 0.0, ..Default::default() };
        let s = generate_scenario_with(SetupClass::MS, 1, &cfg, &LinkModel::default()).unwrap();
        assert!(s.fading_db().iter().flatten().all(|&k| k == K_REF_DB));
    }

    #[test]
    fn cap_keeps_lower_bounds() {
        let mut c = vec![6; 16];
        cap_channel_total(&mut c, 3, 60);
        assert_eq!(c.iter().sum::<usize>(), 60);
        assert!(c.iter().all(|&x| x >= 3));
        // last BSs are reduced first
        assert!(c[15] <= c[0]);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = generate_scenario(SetupClass::LS, 11);
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        v["utility_bounds"][0]["c_min"] = serde_json::json!(1e12);
        assert!(Scenario::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(UtilityBounds::new(2.0, 1.0).is_err());
        assert!(UtilityBounds::new(0.0, 1.0).is_err());
        assert!(UtilityBounds::new(-1.0, 1.0).is_err());
    }
}
