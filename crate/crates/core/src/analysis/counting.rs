use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::gsp::{is_prime, FpBasis, FpVector};
use crate::scalar::Scalar;

fn pow(base: u64, e: usize) -> BigUint {
    num_traits::pow(BigUint::from(base), e)
}

fn p2(e: usize) -> BigUint {
    BigUint::one() << e
}

fn big(v: &BigUint) -> BigInt {
    BigInt::from(v.clone())
}

/// Number of k-dimensional subspaces of F_p^n:
/// ∏_{i<k} (p^n − p^i) / (p^k − p^i).
pub fn gaussian_binomial(n: usize, k: usize, p: u64) -> Result<BigUint> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if k > n {
        return Err(Error::OutOfRange(format!("k = {k} exceeds n = {n}")));
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= pow(p, n) - pow(p, i);
        den *= pow(p, k) - pow(p, i);
    }
    Ok(num / den)
}

/// Largest p^n accepted by [`count_subspaces_brute`].
pub const BRUTE_SPACE_LIMIT: u64 = 1 << 16;

/// Counts k-dimensional subspaces by growing every subspace one vector at a
/// time and deduplicating canonical bases.
pub fn count_subspaces_brute(n: usize, k: usize, p: u64) -> Result<BigUint> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if k > n {
        return Err(Error::OutOfRange(format!("k = {k} exceeds n = {n}")));
    }
    let size = (p as u128).checked_pow(n as u32).filter(|&s| s <= BRUTE_SPACE_LIMIT as u128);
    let Some(size) = size else {
        return Err(Error::OutOfRange(format!("p^n = {p}^{n} exceeds the brute-force guard 2^16")));
    };
    let points: Vec<FpVector> = (0..size as u64).map(|i| FpVector::from_index(p, n, i)).collect();
    let mut level: HashSet<FpBasis> = HashSet::from([FpBasis::trivial(p, n)]);
    for _ in 0..k {
        let mut next = HashSet::new();
        for w in &level {
            for x in &points {
                // One extension per line of the quotient: x reduced and monic.
                let lead = x.coords().iter().find(|&&c| c != 0);
                if lead != Some(&1) || w.pivots().iter().any(|&c| x.coords()[c] != 0) {
                    continue;
                }
                let mut grown = w.clone();
                if grown.insert(x) {
                    next.insert(grown);
                }
            }
        }
        level = next;
    }
    Ok(BigUint::from(level.len()))
}

/// The four counts entering the pairwise ratio R, for parameters (m, t).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionCounts {
    pub m: usize,
    pub t: usize,
    /// m-dimensional subspaces of F_2^{2m} through a fixed nonzero x: (2m−1 choose m−1)₂.
    pub through_x: BigUint,
    /// Those also orthogonal to a fixed vector orthogonal to x: (2m−2 choose m−1)₂.
    pub through_x_orthogonal: BigUint,
    /// m-dimensional subspaces meeting a fixed m-dimensional subspace trivially.
    pub avoiding_member: BigUint,
    /// m-dimensional subspaces of a (2m−1)-space avoiding t forbidden dimensions.
    pub avoiding_t_forbidden: BigUint,
}

/// ∏_{s<m} (2^top − 2^(t+s)) / ∏_{s<m} (2^m − 2^s): ordered choices of m
/// independent vectors in a 2^top space avoiding a t-dimensional subspace,
/// divided by the orderings of an m-dimensional basis.
fn avoiding_count(m: usize, top: usize, t: usize) -> Result<BigUint> {
    let mut num = BigInt::one();
    let mut den = BigUint::one();
    for s in 0..m {
        num *= big(&p2(top)) - big(&p2(t + s));
        den *= p2(m) - p2(s);
    }
    if !num.is_positive() {
        return Err(Error::OutOfRange(format!("nonpositive completion factor at m = {m}, t = {t}")));
    }
    let num = num.to_biguint().expect("positive");
    let (q, r) = num.div_rem(&den);
    debug_assert!(r.is_zero());
    Ok(q)
}

fn check_2col(m: usize, t: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::OutOfRange(format!("m = {m} must be at least 2")));
    }
    if t < 1 || t > m - 1 {
        return Err(Error::OutOfRange(format!("t = {t} outside 1..={}", m - 1)));
    }
    Ok(())
}

pub fn completion_counts_2col(m: usize, t: usize) -> Result<CompletionCounts> {
    check_2col(m, t)?;
    Ok(CompletionCounts {
        m,
        t,
        through_x: gaussian_binomial(2 * m - 1, m - 1, 2)?,
        through_x_orthogonal: gaussian_binomial(2 * m - 2, m - 1, 2)?,
        avoiding_member: avoiding_count(m, 2 * m, m)?,
        avoiding_t_forbidden: avoiding_count(m, 2 * m - 1, t)?,
    })
}

fn rat(v: &BigUint) -> BigRational {
    BigRational::from_integer(big(v))
}

/// R = (through_x · avoiding_t_forbidden) / (through_x_orthogonal · avoiding_member).
pub fn ratio_r_2col(m: usize, t: usize) -> Result<BigRational> {
    let c = completion_counts_2col(m, t)?;
    Ok(rat(&(&c.through_x * &c.avoiding_t_forbidden)) / rat(&(&c.through_x_orthogonal * &c.avoiding_member)))
}

/// Parameter check for the k-collision ratio: k ≥ 2, m > 2k² − 4k, 1 ≤ t ≤ m − k − 1.
pub fn kcol_params_valid(m: usize, k: usize, t: usize) -> bool {
    k >= 2 && m > 2 * k * k - 4 * k && t >= 1 && t + k < m
}

/// k-collision analogue of R: (2m−k choose m−1)₂ replaces the orthogonal
/// count and the forbidden-dimension count lives in a (2m−k+1)-space.
pub fn ratio_r_kcol(m: usize, k: usize, t: usize) -> Result<BigRational> {
    if !kcol_params_valid(m, k, t) {
        return Err(Error::OutOfRange(format!(
            "need k ≥ 2, m > 2k² − 4k and 1 ≤ t ≤ m − k − 1; got m = {m}, k = {k}, t = {t}"
        )));
    }
    let through_x = gaussian_binomial(2 * m - 1, m - 1, 2)?;
    let through_x_orthogonal = gaussian_binomial(2 * m - k, m - 1, 2)?;
    let avoiding_member = avoiding_count(m, 2 * m, m)?;
    let avoiding_t = avoiding_count(m, 2 * m - k + 1, t)?;
    Ok(rat(&(&through_x * &avoiding_t)) / rat(&(&through_x_orthogonal * &avoiding_member)))
}

/// ∏_{r=1..m} (1 − 2^{−(r+2)}) / (1 − 2^{−r}), evaluated term by term.
pub fn telescoping_product<T: Scalar>(m: usize) -> T {
    let one = T::one();
    (1..=m as i32).fold(T::one(), |acc, r| acc * (one.clone() - T::pow2(-(r + 2))) / (one.clone() - T::pow2(-r)))
}

/// (1 − 2^{−(m+1)})(1 − 2^{−(m+2)}) / ((1 − 2^{−1})(1 − 2^{−2})).
pub fn telescoping_closed_form<T: Scalar>(m: usize) -> T {
    let one = T::one();
    let m = m as i32;
    (one.clone() - T::pow2(-(m + 1))) * (one.clone() - T::pow2(-(m + 2)))
        / ((one.clone() - T::pow2(-1)) * (one - T::pow2(-2)))
}

/// Lower bound on the completions of the fullest f-bucket after ℓ queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EligibleCount {
    /// Number of vectors excluded from the completion.
    pub forbidden: BigUint,
    /// Numerator factors, largest first.
    pub factors: Vec<BigInt>,
    pub denominator: BigUint,
    /// ⌊∏ factors / denominator⌋, or `None` when some factor is ≤ 0.
    pub count: Option<BigUint>,
}

impl EligibleCount {
    pub fn smallest_factor(&self) -> &BigInt {
        self.factors.last().expect("at least one factor")
    }

    pub fn is_positive(&self) -> bool {
        self.count.is_some()
    }
}

fn eligible(
    top: usize,
    forbidden: BigUint,
    shifts: std::ops::Range<usize>,
    den_top: usize,
    den_len: usize,
) -> EligibleCount {
    let factors: Vec<BigInt> = shifts.map(|i| big(&p2(top)) - big(&(&forbidden << i))).collect();
    let denominator = (0..den_len).fold(BigUint::one(), |acc, i| acc * (p2(den_top) - p2(i)));
    let count = factors.iter().all(|f| f.is_positive()).then(|| {
        let num = factors.iter().fold(BigInt::one(), |acc, f| acc * f);
        num.to_biguint().expect("positive") / &denominator
    });
    EligibleCount { forbidden, factors, denominator, count }
}

/// Completion count for the k-collision game: m − k + 1 vectors chosen from a
/// (2m − k + 1)-space avoiding 2^i·F vectors for i = 0..=m−k, where
/// F = ⌈2^{2k−2}(ℓ − k + 1)/(k − 1)⌉.
pub fn eligible_completion_count_g4(m: usize, k: usize, ell: usize) -> Result<EligibleCount> {
    if k < 2 {
        return Err(Error::OutOfRange(format!("k = {k} must be at least 2")));
    }
    if m < k {
        return Err(Error::OutOfRange(format!("m = {m} must be at least k = {k}")));
    }
    if ell + 1 < k {
        return Err(Error::OutOfRange(format!("ℓ = {ell} must be at least k − 1 = {}", k - 1)));
    }
    let forbidden = (p2(2 * k - 2) * BigUint::from(ell + 1 - k)).div_ceil(&BigUint::from(k - 1));
    Ok(eligible(2 * m - k + 1, forbidden, 0..m - k + 1, m - k + 1, m - k + 1))
}

/// Completion count for the pairwise game: m − 1 vectors from a
/// (2m − 1)-space avoiding 2^i(ℓ − 1) vectors for i = 1..=m−1.
pub fn pairwise_completion_count(m: usize, ell: usize) -> Result<EligibleCount> {
    if m < 2 || ell < 1 {
        return Err(Error::OutOfRange(format!("need m ≥ 2 and ℓ ≥ 1, got m = {m}, ℓ = {ell}")));
    }
    Ok(eligible(2 * m - 1, BigUint::from(ell - 1), 1..m, m - 1, m - 1))
}

/// ⌊2^{a/b}⌋ exactly.
pub fn floor_pow2_ratio(a: usize, b: usize) -> BigUint {
    p2(a).nth_root(b as u32)
}
