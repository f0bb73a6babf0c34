use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::trial_rng;

/// A probability distribution over N bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> BinDistribution<T> {
    /// Entries must be nonnegative and sum to 1 (exactly, for exact scalars).
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::OutOfRange("distribution needs at least one bin".into()));
        }
        if probs.iter().any(|p| *p < T::zero()) {
            return Err(Error::OutOfRange("negative bin probability".into()));
        }
        let sum = probs.iter().fold(T::zero(), |a, p| a + p.clone());
        let dev = if sum > T::one() { sum - T::one() } else { T::one() - sum };
        if dev > T::sum_tolerance() {
            return Err(Error::OutOfRange(format!("probabilities sum to 1 − {dev:?}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(bins: usize) -> Result<Self> {
        let n = T::from_usize(bins).ok_or_else(|| Error::OutOfRange(format!("{bins} bins")))?;
        if bins == 0 {
            return Err(Error::OutOfRange("distribution needs at least one bin".into()));
        }
        Ok(Self { probs: vec![T::one() / n; bins] })
    }

    /// `z0` bins of mass 0, `z1` bins of mass `weight·p_e`, the rest `p_e`,
    /// normalized: p_e = 1 / (bins − z0 − z1 + weight·z1).
    pub fn three_valued(bins: usize, z0: usize, z1: usize, weight: u64) -> Result<Self> {
        if z0 + z1 > bins || z0 == bins {
            return Err(Error::OutOfRange(format!("z0 = {z0}, z1 = {z1} do not fit in {bins} bins")));
        }
        let rest = bins - z0 - z1;
        let w = T::from_u64(weight).expect("weight fits");
        let total = T::from_usize(rest).expect("count fits") + w.clone() * T::from_usize(z1).expect("count fits");
        if total.is_zero() {
            return Err(Error::OutOfRange("all remaining mass is zero".into()));
        }
        let pe = T::one() / total;
        let mut probs = vec![T::zero(); z0];
        probs.extend(std::iter::repeat_n(w * pe.clone(), z1));
        probs.extend(std::iter::repeat_n(pe, rest));
        Ok(Self { probs })
    }

    pub fn bins(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// ‖d‖ₖᵏ = Σ_j d_j^k.
    pub fn norm_pow(&self, k: u32) -> T {
        self.probs.iter().fold(T::zero(), |acc, p| acc + Scalar::powi(p, k))
    }

    pub fn to_f64(&self) -> BinDistribution<f64> {
        BinDistribution { probs: self.probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect() }
    }
}

fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    T::from_biguint(&acc)
}

/// Pr[B_ℓ ≥ k] ≤ C(ℓ, k)·‖d‖ₖᵏ for the maximum load B_ℓ of ℓ independent throws.
pub fn max_load_bound<T: Scalar>(ell: usize, k: u32, d: &BinDistribution<T>) -> T {
    binomial::<T>(ell, k as usize) * d.norm_pow(k)
}

/// Markov bound Pr[C_ℓ ≥ k] ≤ C(ℓ, 2)·‖d‖₂² / k on the colliding-pair count C_ℓ.
pub fn collision_count_bound<T: Scalar>(ell: usize, k: u64, d: &BinDistribution<T>) -> Result<T> {
    if k == 0 {
        return Err(Error::OutOfRange("collision threshold k must be at least 1".into()));
    }
    Ok(expected_collisions(ell, d) / T::from_u64(k).expect("k fits"))
}

/// E[C_ℓ] = C(ℓ, 2)·‖d‖₂².
pub fn expected_collisions<T: Scalar>(ell: usize, d: &BinDistribution<T>) -> T {
    binomial::<T>(ell, 2) * d.norm_pow(2)
}

/// ‖P‖ₖᵏ for the three-valued distribution with z0 empty bins, z1 bins of
/// weight 2^{k−1} and the rest uniform, supported on 2^m + 1 − ℓ bins:
/// (2^m + 1 − ℓ − z0 + (2^{k(k−1)} − 1) z1) / (2^m + 1 − ℓ − z0 + (2^{k−1} − 1) z1)^k.
pub fn norm_p<T: Scalar>(m: usize, ell: usize, z0: usize, z1: usize, k: u32) -> Result<T> {
    if k < 1 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    let buckets = (BigUint::one() << m) + 1u32;
    if BigUint::from(4 * ell) >= buckets {
        return Err(Error::OutOfRange(format!("ℓ = {ell} violates ℓ < (2^m + 1)/4 at m = {m}")));
    }
    if z0 + z1 > ell {
        return Err(Error::OutOfRange(format!("z0 + z1 = {} exceeds ℓ = {ell}", z0 + z1)));
    }
    let base = T::from_biguint(&(buckets - BigUint::from(ell + z0)));
    let z1 = T::from_usize(z1).expect("fits");
    let one = T::one();
    let num = base.clone() + (T::pow2((k * (k - 1)) as i32) - one.clone()) * z1.clone();
    let den = base + (T::pow2(k as i32 - 1) - one) * z1;
    Ok(num / Scalar::powi(&den, k))
}

/// Monte Carlo summary of ℓ throws into bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinsEstimate {
    pub ell: usize,
    pub trials: usize,
    /// `max_load_hist[b]` counts trials whose maximum load was b.
    pub max_load_hist: Vec<usize>,
    pub mean_collisions: f64,
    pub collisions_stderr: f64,
}

impl BinsEstimate {
    /// Empirical Pr[B_ℓ ≥ k] with its binomial standard error.
    pub fn prob_max_load_at_least(&self, k: usize) -> (f64, f64) {
        let hits: usize = self.max_load_hist.iter().skip(k).sum();
        let p = hits as f64 / self.trials as f64;
        (p, (p * (1.0 - p) / self.trials as f64).sqrt())
    }
}

/// Throws ℓ balls `trials` times. Trial i uses `trial_rng(seed, i)`.
pub fn mc_bins<T: Scalar>(ell: usize, d: &BinDistribution<T>, trials: usize, seed: u64) -> Result<BinsEstimate> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let weights: Vec<f64> = d.probs.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect();
    let sampler = WeightedIndex::new(&weights).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let outcomes: Vec<(usize, u64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut loads = vec![0u32; weights.len()];
            for _ in 0..ell {
                loads[sampler.sample(&mut rng)] += 1;
            }
            let max = loads.iter().copied().max().unwrap_or(0) as usize;
            let pairs: u64 = loads.iter().map(|&l| l as u64 * l.saturating_sub(1) as u64 / 2).sum();
            (max, pairs)
        })
        .collect();
    let mut max_load_hist = vec![0usize; ell + 1];
    for &(m, _) in &outcomes {
        max_load_hist[m] += 1;
    }
    let t = trials as f64;
    let mean = outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / t;
    let var = outcomes.iter().map(|o| (o.1 as f64 - mean).powi(2)).sum::<f64>() / (t - 1.0).max(1.0);
    Ok(BinsEstimate { ell, trials, max_load_hist, mean_collisions: mean, collisions_stderr: (var / t).sqrt() })
}

/// 1 − ∏_{i<ℓ} (1 − i/N): probability that ℓ uniform throws into N bins collide.
pub fn birthday_collision_probability(bins: u64, ell: u64) -> BigRational {
    let n = BigRational::from_integer(bins.into());
    let mut none = BigRational::one();
    for i in 0..ell {
        none *= BigRational::one() - BigRational::from_integer(i.into()) / &n;
    }
    BigRational::one() - none
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use itertools_free::permutations;
    use num_traits::{ToPrimitive, Zero};
    use proptest::prelude::*;

    type Exact = BinDistribution<BigRational>;

    mod itertools_free {
        /// All permutations of 0..n (Heap's algorithm).
        pub fn permutations(n: usize) -> Vec<Vec<usize>> {
            let mut a: Vec<usize> = (0..n).collect();
            let mut out = vec![a.clone()];
            let mut c = vec![0; n];
            let mut i = 0;
            while i < n {
                if c[i] < i {
                    if i % 2 == 0 {
                        a.swap(0, i);
                    } else {
                        a.swap(c[i], i);
                    }
                    out.push(a.clone());
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            out
        }
    }

    #[test]
    fn construction_checks() {
        assert!(Exact::new(vec![rational(1, 2), rational(1, 3)]).is_err());
        assert!(Exact::new(vec![rational(3, 2), rational(-1, 2)]).is_err());
        assert!(Exact::new(vec![rational(1, 2), rational(1, 2)]).is_ok());
        assert!(BinDistribution::<f64>::new(vec![0.1; 10]).is_ok());
        assert!(Exact::uniform(0).is_err());
        let d = Exact::three_valued(10, 2, 3, 2).unwrap();
        assert_eq!(d.probs().iter().fold(BigRational::zero(), |a, p| a + p), BigRational::one());
        assert_eq!(d.probs()[2], rational(2, 11));
    }

    #[test]
    fn max_load_examples() {
        let d = Exact::uniform(100).unwrap();
        assert_eq!(max_load_bound(10, 2, &d), rational(9, 20));
        assert_eq!(max_load_bound(3, 4, &d), BigRational::zero());
        for (n, l) in [(365usize, 23usize), (50, 7)] {
            let u = Exact::uniform(n).unwrap();
            assert_eq!(max_load_bound(l, 2, &u), rational((l * (l - 1) / 2) as i64, n as i64));
        }
    }

    #[test]
    fn collision_bound_examples() {
        let d = Exact::uniform(64).unwrap();
        assert_eq!(collision_count_bound(10, 1, &d).unwrap(), expected_collisions(10, &d));
        assert_eq!(collision_count_bound(10, 3, &d).unwrap(), rational(45, 3 * 64));
        let mut prev = collision_count_bound(10, 1, &d).unwrap();
        for k in 2..10 {
            let b = collision_count_bound(10, k, &d).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        assert!(collision_count_bound(10, 0, &d).is_err());
    }

    #[test]
    fn norm_p_uniform_case_and_guard() {
        for m in 2..=10 {
            let ell = ((1usize << m) + 1) / 4 - usize::from(((1usize << m) + 1).is_multiple_of(4));
            for z0 in 0..=ell.min(5) {
                assert_eq!(
                    norm_p::<BigRational>(m, ell, z0, 0, 2).unwrap(),
                    rational(1, ((1 << m) + 1 - ell - z0) as i64)
                );
            }
        }
        assert!(norm_p::<BigRational>(4, 5, 0, 0, 2).is_err());
        assert!(norm_p::<BigRational>(6, 4, 3, 2, 2).is_err());
    }

    #[test]
    fn norm_p_matches_direct_summation() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from_seed(21);
        for _ in 0..100 {
            let m = rng.random_range(2..=10);
            let cap = ((1usize << m) + 1).div_ceil(4) - 1;
            let ell = rng.random_range(0..=cap);
            let z0 = rng.random_range(0..=ell);
            let z1 = rng.random_range(0..=ell - z0);
            let k = rng.random_range(1..=3u32);
            let d = Exact::three_valued((1 << m) + 1 - ell, z0, z1, 1 << (k - 1)).unwrap();
            let direct =
                d.probs().iter().fold(BigRational::zero(), |acc, p| acc + num_traits::pow(p.clone(), k as usize));
            assert_eq!(
                norm_p::<BigRational>(m, ell, z0, z1, k).unwrap(),
                direct,
                "m={m} ℓ={ell} z0={z0} z1={z1} k={k}"
            );
            let f = norm_p::<f64>(m, ell, z0, z1, k).unwrap();
            assert!((f - direct.to_f64().unwrap()).abs() <= 1e-12 * f.max(1e-300));
        }
    }

    #[test]
    fn pairwise_norm_at_most_four_over_2m() {
        // The norm grows as ℓ, z0 grow (its denominator base shrinks), so
        // checking the largest admissible ℓ covers every smaller one.
        for m in 2..=16usize {
            let buckets = (1u64 << m) + 1;
            let ell = buckets.div_ceil(4) - 1;
            let hits: usize = (0..=ell)
                .into_par_iter()
                .map(|z0| {
                    (0..=ell - z0)
                        .filter(|&z1| {
                            let base = (buckets - ell - z0) as u128;
                            let num = base + 3 * z1 as u128;
                            let den = base + z1 as u128;
                            (num << m) > 4 * den * den
                        })
                        .count()
                })
                .sum();
            assert_eq!(hits, 0, "m = {m}");
        }
    }

    #[test]
    fn birthday_fixture() {
        let exact = birthday_collision_probability(365, 23).to_f64().unwrap();
        assert!((exact - 0.5073).abs() < 1e-4);
        let d = BinDistribution::<f64>::uniform(365).unwrap();
        let est = mc_bins(23, &d, 10_000, 1).unwrap();
        let (p, _) = est.prob_max_load_at_least(2);
        assert!((p - exact).abs() < 0.02, "{p}");
    }

    #[test]
    fn monte_carlo_respects_bounds() {
        let fixtures: Vec<(Exact, usize)> = vec![
            (Exact::uniform(50).unwrap(), 8),
            (Exact::uniform(200).unwrap(), 25),
            (Exact::three_valued(40, 5, 6, 2).unwrap(), 6),
            (Exact::three_valued(120, 20, 30, 4).unwrap(), 10),
        ];
        for (i, (d, ell)) in fixtures.iter().enumerate() {
            let est = mc_bins(*ell, d, 10_000, 100 + i as u64).unwrap();
            for k in 2..=3u32 {
                let (p, se) = est.prob_max_load_at_least(k as usize);
                let bound = max_load_bound(*ell, k, d).to_f64().unwrap();
                assert!(p <= bound + 3.0 * se, "fixture {i} k={k}: {p} > {bound}");
            }
            let mean = expected_collisions(*ell, d).to_f64().unwrap();
            assert!((est.mean_collisions - mean).abs() <= 3.0 * est.collisions_stderr, "fixture {i}");
        }
    }

    proptest! {
        #[test]
        fn rearrangement_two_sequences(mut xs in prop::collection::vec(-50i64..50, 1..8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut ys: Vec<i64> = xs.iter().map(|x| x.wrapping_mul(7) % 13).collect();
            xs.sort_unstable();
            ys.sort_unstable();
            let sorted: i64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
            let mut shuffled = ys.clone();
            shuffled.shuffle(&mut crate::seed::rng_from_seed(seed));
            let any: i64 = xs.iter().zip(&shuffled).map(|(a, b)| a * b).sum();
            prop_assert!(any <= sorted);
        }

        #[test]
        fn rearrangement_many_sequences(rows in prop::collection::vec(prop::collection::vec(0u32..20, 5), 2..4), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = crate::seed::rng_from_seed(seed);
            let mut sorted_rows = rows.clone();
            for r in &mut sorted_rows {
                r.sort_unstable();
            }
            let mut perm_rows = sorted_rows.clone();
            for r in &mut perm_rows {
                r.shuffle(&mut rng);
            }
            let sum = |rs: &Vec<Vec<u32>>| (0..5).map(|j| rs.iter().map(|r| r[j] as u64).product::<u64>()).sum::<u64>();
            prop_assert!(sum(&perm_rows) <= sum(&sorted_rows));
        }
    }

    /// Σ_j ∏_i P_{i,j} for distributions placed by the given permutations.
    fn product_sum(dists: &[Vec<BigRational>], perms: &[&Vec<usize>]) -> BigRational {
        let n = dists[0].len();
        (0..n)
            .map(|j| dists.iter().zip(perms).fold(BigRational::one(), |acc, (d, p)| acc * &d[p[j]]))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    #[test]
    fn aligned_three_valued_distributions_maximize_product_sum() {
        for bins in 3..=6usize {
            let perms = permutations(bins);
            let id = &perms[0];
            for z0 in 0..bins {
                for z1 in 0..bins - z0 {
                    let d = Exact::three_valued(bins, z0, z1, 2).unwrap();
                    let mut sorted = d.probs().to_vec();
                    sorted.sort_by(|a, b| b.cmp(a));
                    let dists = vec![sorted.clone(), sorted.clone(), sorted];
                    let aligned2 = product_sum(&dists[..2], &[id, id]);
                    let aligned3 = product_sum(&dists, &[id, id, id]);
                    for p in &perms {
                        assert!(product_sum(&dists[..2], &[id, p]) <= aligned2);
                        if bins <= 5 {
                            for q in &perms {
                                assert!(product_sum(&dists, &[id, p, q]) <= aligned3);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn equal_distributions_beat_mixed_counts() {
        // Three-valued shapes over 8 bins with the same support: the aligned
        // product of identical shapes dominates any pairing of unequal z1.
        let bins = 8;
        for z0 in 0..3 {
            for z1a in 0..4 {
                for z1b in 0..4 {
                    let a = Exact::three_valued(bins, z0, z1a, 2).unwrap();
                    let b = Exact::three_valued(bins, z0, z1b, 2).unwrap();
                    let mut sa = a.probs().to_vec();
                    let mut sb = b.probs().to_vec();
                    sa.sort_by(|x, y| y.cmp(x));
                    sb.sort_by(|x, y| y.cmp(x));
                    let mixed: BigRational =
                        sa.iter().zip(&sb).map(|(x, y)| x * y).fold(BigRational::zero(), |s, v| s + v);
                    let best = a.norm_pow(2).max(b.norm_pow(2));
                    assert!(mixed <= best, "z0={z0} z1=({z1a},{z1b})");
                }
            }
        }
    }
}
