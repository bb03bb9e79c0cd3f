//! Fixtures shared by the benchmarks.

use mcalloc::auction::{generate_channel_bids, BidOptions};
use mcalloc::matching::{build_preferences, m2m_gale_shapley};
use mcalloc::scenario::generate_scenario;
use mcalloc::{BidMatrix, LinkModel, Quotas, RayleighSelection, Scenario, ScvTable, SetupClass, Streams};

/// Scenario plus the channel bids an M2MGS preallocation produces on it.
pub struct Fixture {
    pub scenario: Scenario,
    pub link: LinkModel,
    pub bids: BidMatrix,
}

pub fn fixture(setup: SetupClass, seed: u64, quotas: Quotas) -> Fixture {
    let scenario = generate_scenario(setup, seed);
    let link = LinkModel::default();
    let model = RayleighSelection::new(&scenario, &link);
    let profile = build_preferences(&ScvTable::new(&scenario, &model), &Streams::new(seed));
    let pre = m2m_gale_shapley(&profile, quotas);
    let bids = generate_channel_bids(&scenario, &model, &pre, &BidOptions::default()).expect("bids fit the budget");
    Fixture { scenario, link, bids }
}
