//! Exact counting formulas and probabilistic bounds for the collision games,
//! plus Monte Carlo estimators checked against them.
//!
//! Counts are `BigUint`, ratios `BigRational`. Bounds over bin distributions
//! are generic in [`crate::scalar::Scalar`]: evaluate them in `BigRational` to
//! check a bound and in `f64` for tables.

mod bins;
mod counting;

pub use bins::{
    birthday_collision_probability, collision_count_bound, expected_collisions, max_load_bound, mc_bins, norm_p,
    BinDistribution, BinsEstimate,
};
pub use counting::{
    completion_counts_2col, count_subspaces_brute, eligible_completion_count_g4, floor_pow2_ratio, gaussian_binomial,
    kcol_params_valid, pairwise_completion_count, ratio_r_2col, ratio_r_kcol, telescoping_closed_form,
    telescoping_product, CompletionCounts, EligibleCount, BRUTE_SPACE_LIMIT,
};
