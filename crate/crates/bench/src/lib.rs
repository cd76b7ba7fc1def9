//! Shared inputs for the criterion benchmarks.

use std::sync::Arc;

use mapp_core::experiment::simulated_training_sets;
use mapp_core::{draw_bids, BenchConfig, ExpFamilyModel, FamilyKind, FamilySampler, ValueDistribution};

/// Family member used as the truth in every benchmark.
pub fn truth() -> ValueDistribution {
    FamilySampler::new(FamilyKind::Gaussian).sample_seeded(1).expect("valid member")
}

pub fn bids(n: usize) -> Vec<f64> {
    draw_bids(&truth(), n, 2)
}

/// Whole-round training bid sets at the default 50 x 200 size.
pub fn training_sets() -> Vec<Vec<f64>> {
    simulated_training_sets(&BenchConfig::default(), &FamilySampler::new(FamilyKind::Gaussian)).expect("training sets")
}

pub fn model() -> Arc<ExpFamilyModel> {
    Arc::new(BenchConfig::default().train_model(&training_sets()).expect("model"))
}
