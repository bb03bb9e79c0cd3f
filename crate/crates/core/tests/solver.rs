mod common;

use mcalloc::auction::{brute_force_wdp, solve_ca, solve_rca, verify_solution};
use mcalloc::{BidMatrix, Error, RcaConfig, SolveOptions, Stream, Streams};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn ca_matches_brute_force(seed in any::<u64>(), n_items in 1usize..=10, n_bidders in 1usize..=6, n_rows in 0usize..=20) {
        let mut rng = Streams::new(seed).rng(Stream::TieBreak, 5);
        let bids = common::random_bids(&mut rng, n_items, n_bidders, n_rows);
        let got = solve_ca(&bids, &SolveOptions::default()).unwrap();
        let want = brute_force_wdp(&bids, 1, false, None).unwrap();
        prop_assert!(got.proven_optimal);
        prop_assert_eq!(got.objective, want.objective);
        prop_assert!(verify_solution(&bids, &got, 1, false, None).is_ok());
    }

    #[test]
    fn rca_matches_brute_force(seed in any::<u64>(), n_bs in 1usize..=8, n_tenants in 1usize..=5, n_rows in 1usize..=18, q_bs in 2usize..=3) {
        let mut rng = Streams::new(seed).rng(Stream::TieBreak, 6);
        let bids = common::random_bids(&mut rng, n_bs, n_tenants, n_rows);
        let capped: Vec<usize> = (0..n_bs).map(|_| rng.random_range(1..=6)).collect();
        let cfg = RcaConfig::new(q_bs, 6);
        let got = solve_rca(&bids, &cfg, &capped, &SolveOptions::default());
        let want = brute_force_wdp(&bids, q_bs, true, Some(common::min_channels(&capped, 2)));
        match (got, want) {
            (Ok(g), Ok(w)) => {
                prop_assert_eq!(g.objective, w.objective);
                prop_assert!(verify_solution(&bids, &g, q_bs, true, Some(common::min_channels(&capped, 2))).is_ok());
            }
            (Err(Error::Infeasible { tenant }), Err(Error::Infeasible { .. })) => prop_assert!(tenant < n_tenants),
            (g, w) => prop_assert!(false, "solver {:?} vs oracle {:?}", g, w),
        }
    }

    #[test]
    fn bid_text_round_trip(seed in any::<u64>(), n_items in 1usize..=12, n_bidders in 1usize..=4, n_rows in 0usize..=30) {
        let mut rng = Streams::new(seed).rng(Stream::TieBreak, 7);
        let bids = common::random_bids(&mut rng, n_items, n_bidders, n_rows);
        let back = BidMatrix::from_text(&bids.to_text(), n_items, n_bidders).unwrap();
        prop_assert_eq!(back, bids);
    }
}

#[test]
fn larger_instances_agree_with_quota_one_oracle_on_small_cuts() {
    // 24 rows is the oracle's limit; use it fully
    for seed in 0..30 {
        let mut rng = Streams::new(seed).rng(Stream::TieBreak, 8);
        let bids = common::random_bids(&mut rng, 12, 8, 24);
        let got = solve_ca(&bids, &SolveOptions::default()).unwrap();
        let want = brute_force_wdp(&bids, 1, false, None).unwrap();
        assert_eq!(got.objective, want.objective, "seed {seed}");
    }
}
