use mcalloc::connectivity::{iid_capacity, log_outage_cdf, outage_quantile, utility};
use mcalloc::scenario::generate_scenario;
use mcalloc::{CapacityModel, ChannelSet, LinkModel, RayleighSelection, SetupClass, Stream, Streams, UtilityBounds};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

fn random_set<R: Rng>(rng: &mut R, n: usize) -> ChannelSet {
    let mut s = ChannelSet::EMPTY;
    for j in 0..n {
        if rng.random_bool(0.25) {
            s.insert(j);
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Adding channels never lowers capacity.
    #[test]
    fn capacity_is_monotone_under_inclusion(seed in 0u64..10_000, setup in 0usize..3) {
        let sc = generate_scenario(SetupClass::ALL[setup], seed);
        let model = RayleighSelection::new(&sc, &LinkModel::default());
        let mut rng = Streams::new(seed).rng(Stream::TieBreak, 11);
        for _ in 0..200 {
            let k = rng.random_range(0..sc.n_tenants());
            let s = random_set(&mut rng, sc.n_channels());
            let bigger = s.union(random_set(&mut rng, sc.n_channels()));
            prop_assert!(model.capacity(k, s) <= model.capacity(k, bigger));
        }
    }

    /// The returned quantile solves F(x) = eps to near machine precision.
    #[test]
    fn quantile_solves_the_outage_equation(g1 in 0.1f64..1e4, g2 in 0.1f64..1e4, m1 in 1u32..5, m2 in 0u32..5, e in -7.0f64..-1.0) {
        let eps = 10f64.powf(e);
        let groups = [(g1, m1), (g2, m2)];
        let x = outage_quantile(&groups, eps);
        prop_assert!((log_outage_cdf(x, &groups) - eps.ln()).abs() < 1e-9);
    }
}

#[test]
fn quantile_agrees_with_sampled_outage() {
    // coarse target so 2e5 samples resolve it; the acceptance suite runs
    // the full-size check
    let eps = 0.01;
    let groups = [(3.0, 1u32), (10.0, 2)];
    let x = outage_quantile(&groups, eps);
    let mut rng = Streams::new(1).rng(Stream::TieBreak, 12);
    let n = 200_000;
    let hits = (0..n)
        .filter(|_| {
            groups.iter().all(|&(g, m)| {
                (0..m).all(|_| {
                    let s: f64 = Exp1.sample(&mut rng);
                    g * s < x
                })
            })
        })
        .count();
    let p = hits as f64 / n as f64;
    let se = (eps * (1.0 - eps) / n as f64).sqrt();
    assert!((p - eps).abs() < 3.0 * se, "sampled {p} vs {eps}");
}

fn iid_gains(snr_db: f64) -> Vec<f64> {
    let link = LinkModel::default();
    let snr = 10f64.powf(snr_db / 10.0);
    let c: Vec<f64> = (0..=32).map(|m| iid_capacity(&link, snr, m)).collect();
    c.windows(2).map(|w| w[1] - w[0]).collect()
}

#[test]
fn iid_gains_fall_from_the_third_channel_at_high_snr() {
    for snr_db in [20.0, 30.0, 40.0] {
        let gain = iid_gains(snr_db);
        // redundancy pays more than the first channel alone
        assert!(gain[1] > gain[0], "{snr_db} dB");
        for m in 3..gain.len() {
            assert!(gain[m] < gain[m - 1], "{snr_db} dB, m {m}");
        }
    }
}

#[test]
fn iid_gains_are_unimodal_at_any_snr() {
    for snr_db in [-10.0, 0.0, 10.0, 15.0] {
        let gain = iid_gains(snr_db);
        let peak = (0..gain.len()).max_by(|&a, &b| gain[a].total_cmp(&gain[b])).unwrap();
        assert!(peak >= 1 && peak < gain.len() - 1, "{snr_db} dB peak {peak}");
        assert!(gain[..=peak].windows(2).all(|w| w[0] < w[1]));
        assert!(gain[peak..].windows(2).all(|w| w[0] > w[1]));
    }
}

#[test]
fn utility_curve_is_log_shaped() {
    let b = UtilityBounds::new(2.0, 8.0).unwrap();
    assert_eq!(utility(2.0, &b), 0.0);
    assert_eq!(utility(1.0, &b), 0.0);
    assert_eq!(utility(8.0, &b), 1.0);
    assert_eq!(utility(100.0, &b), 1.0);
    assert!((utility(4.0, &b) - 0.5).abs() < 1e-12);
    let mut prev = 0.0;
    for i in 0..=100 {
        let u = utility(2.0 + 0.06 * i as f64, &b);
        assert!(u >= prev);
        prev = u;
    }
}
