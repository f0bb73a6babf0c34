//! Generalized Simon's problem over F_p^n: a hidden k-dimensional subgroup S,
//! an oracle constant exactly on the cosets x + S, and the adaptive
//! coset-representative recovery strategy.
//!
//! Coordinates are indexed from 0; a vector's integer index is
//! `Σ c_i p^i`. The canonical basis of a subgroup is its reduced row echelon
//! form with the pivot of each row at its first nonzero coordinate, pivots
//! increasing and normalized to 1. Reducing a vector against that basis
//! zeroes every pivot coordinate and yields the lexicographically least
//! element of its coset, which is the coset representative used throughout.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{splitmix64, trial_rng};

/// Largest supported p^n.
pub const GSP_SPACE_LIMIT: u64 = 1 << 32;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FpVector {
    p: u64,
    coords: Vec<u64>,
}

impl FpVector {
    pub fn new(p: u64, coords: Vec<u64>) -> Result<Self> {
        check_prime(p)?;
        if let Some(c) = coords.iter().find(|&&c| c >= p) {
            return Err(Error::OutOfRange(format!("coordinate {c} not reduced mod {p}")));
        }
        Ok(Self { p, coords })
    }

    pub fn zero(p: u64, n: usize) -> Self {
        Self { p, coords: vec![0; n] }
    }

    pub fn unit(p: u64, n: usize, i: usize) -> Self {
        let mut v = Self::zero(p, n);
        v.coords[i] = 1;
        v
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::OutOfRange(format!("field mismatch: p = {} vs {}", self.p, other.p)));
        }
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.axpy(1, other))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.axpy(self.p - 1, other))
    }

    pub fn scale(&self, c: u64) -> Self {
        let c = c % self.p;
        Self { p: self.p, coords: self.coords.iter().map(|&x| x * c % self.p).collect() }
    }

    /// self + c·other, no shape checks.
    fn axpy(&self, c: u64, other: &Self) -> Self {
        let p = self.p;
        Self { p, coords: self.coords.iter().zip(&other.coords).map(|(&a, &b)| (a + c * b) % p).collect() }
    }

    /// `Σ c_i p^i`.
    pub fn index(&self) -> u64 {
        self.coords.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn from_index(p: u64, n: usize, mut idx: u64) -> Self {
        let coords = (0..n)
            .map(|_| {
                let c = idx % p;
                idx /= p;
                c
            })
            .collect();
        Self { p, coords }
    }

    pub fn random<R: Rng + ?Sized>(p: u64, n: usize, rng: &mut R) -> Self {
        Self { p, coords: (0..n).map(|_| rng.random_range(0..p)).collect() }
    }
}

impl fmt::Debug for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpVector[p={}]{self}", self.p)
    }
}

impl fmt::Display for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Canonical reduced row echelon basis of a subgroup of F_p^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpBasis {
    p: u64,
    n: usize,
    rows: Vec<FpVector>,
    pivots: Vec<usize>,
}

impl FpBasis {
    pub fn trivial(p: u64, n: usize) -> Self {
        Self { p, n, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[FpVector] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Zeroes the pivot coordinates of `v`: the canonical coset representative.
    pub fn reduce(&self, v: &FpVector) -> FpVector {
        let mut out = v.clone();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let coef = out.coords[c];
            if coef != 0 {
                out = out.axpy(self.p - coef, row);
            }
        }
        out
    }

    pub fn contains(&self, v: &FpVector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v`, keeping the form canonical. Returns false if `v` is already spanned.
    pub fn insert(&mut self, v: &FpVector) -> bool {
        let r = self.reduce(v);
        let Some(c) = r.coords.iter().position(|&x| x != 0) else {
            return false;
        };
        let r = r.scale(inv_mod(r.coords[c], self.p));
        for row in &mut self.rows {
            let coef = row.coords[c];
            if coef != 0 {
                *row = row.axpy(self.p - coef, &r);
            }
        }
        let at = self.pivots.partition_point(|&q| q < c);
        self.pivots.insert(at, c);
        self.rows.insert(at, r);
        true
    }
}

/// Canonical RREF of the span of `vectors` over F_p.
pub fn fp_rref(p: u64, n: usize, vectors: &[FpVector]) -> Result<FpBasis> {
    check_prime(p)?;
    let mut basis = FpBasis::trivial(p, n);
    for v in vectors {
        if v.p != p {
            return Err(Error::OutOfRange(format!("field mismatch: p = {} vs {p}", v.p)));
        }
        if v.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.n() });
        }
        basis.insert(v);
    }
    Ok(basis)
}

fn check_gsp_params(p: u64, n: usize, k: usize) -> Result<()> {
    check_prime(p)?;
    if k == 0 || k >= n {
        return Err(Error::OutOfRange(format!("need 0 < k < n, got k = {k}, n = {n}")));
    }
    let fits = (p as u128).checked_pow(n as u32).is_some_and(|s| s <= GSP_SPACE_LIMIT as u128);
    if !fits {
        return Err(Error::OutOfRange(format!("p^n = {p}^{n} exceeds 2^32")));
    }
    Ok(())
}

/// A hidden subgroup and its coset labelling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GspInstance {
    pub p: u64,
    pub n: usize,
    pub k: usize,
    pub subgroup: FpBasis,
    /// Labels are `splitmix64(rep_index + key)`, a bijection of the
    /// representative's index, so distinct cosets never share a label.
    pub key: u64,
}

impl GspInstance {
    pub fn new(subgroup: FpBasis, key: u64) -> Result<Self> {
        let (p, n, k) = (subgroup.p, subgroup.n, subgroup.rank());
        check_gsp_params(p, n, k)?;
        Ok(Self { p, n, k, subgroup, key })
    }

    pub fn label(&self, x: &FpVector) -> u64 {
        splitmix64(self.subgroup.reduce(x).index().wrapping_add(self.key))
    }

    pub fn coset_count(&self) -> u64 {
        self.p.pow((self.n - self.k) as u32)
    }
}

/// Uniform dimension-k subgroup (rejection-sampled independent k-tuples)
/// with a fresh labelling key.
pub fn sample_gsp_instance<R: Rng + ?Sized>(p: u64, n: usize, k: usize, rng: &mut R) -> Result<GspInstance> {
    check_gsp_params(p, n, k)?;
    let basis = loop {
        let vs: Vec<FpVector> = (0..k).map(|_| FpVector::random(p, n, rng)).collect();
        let b = fp_rref(p, n, &vs)?;
        if b.rank() == k {
            break b;
        }
    };
    GspInstance::new(basis, rng.random())
}

pub fn gsp_query(inst: &GspInstance, x: &FpVector) -> u64 {
    inst.label(x)
}

/// Counts queries made through it.
#[derive(Debug)]
pub struct GspOracle<'a> {
    inst: &'a GspInstance,
    queries: usize,
}

impl<'a> GspOracle<'a> {
    pub fn new(inst: &'a GspInstance) -> Self {
        Self { inst, queries: 0 }
    }

    pub fn query(&mut self, x: &FpVector) -> u64 {
        self.queries += 1;
        self.inst.label(x)
    }

    pub fn queries(&self) -> usize {
        self.queries
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recovery {
    pub subgroup: FpBasis,
    pub queries: usize,
    /// Query count at which each generator was found.
    pub found_at: Vec<usize>,
}

/// Queries uniformly chosen unqueried coset representatives of the subgroup
/// discovered so far. Two queried points are never congruent modulo that
/// subgroup, so every label collision yields a new independent generator.
pub fn adaptive_recover(
    oracle: &mut dyn FnMut(&FpVector) -> u64,
    p: u64,
    n: usize,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<Recovery> {
    check_gsp_params(p, n, k)?;
    let mut found = FpBasis::trivial(p, n);
    let mut seen: HashMap<u64, FpVector> = HashMap::new();
    let mut queried_reps: HashSet<FpVector> = HashSet::new();
    let mut found_at = Vec::new();
    let mut queries = 0usize;

    while found.rank() < k {
        let free: Vec<usize> = (0..n).filter(|c| !found.pivots.contains(c)).collect();
        let reps_total = (p as u128).pow(free.len() as u32);
        if queried_reps.len() as u128 >= reps_total {
            return Err(Error::OracleInconsistency(format!(
                "all {reps_total} coset representatives queried without reaching rank {k}"
            )));
        }
        let x = loop {
            let mut v = FpVector::zero(p, n);
            for &c in &free {
                v.coords[c] = rng.random_range(0..p);
            }
            if !queried_reps.contains(&v) {
                break v;
            }
        };
        queries += 1;
        let label = oracle(&x);
        match seen.get(&label) {
            None => {
                seen.insert(label, x.clone());
                queried_reps.insert(x);
            }
            Some(y) => {
                let g = x.sub(y)?;
                if !found.insert(&g) {
                    return Err(Error::OracleInconsistency(format!("collision {x} ~ {y} yields no new generator")));
                }
                found_at.push(queries);
                queried_reps = seen.values().map(|v| found.reduce(v)).collect();
            }
        }
    }
    Ok(Recovery { subgroup: found, queries, found_at })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GspStats {
    pub p: u64,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_queries: f64,
    pub mean_queries: f64,
    pub q25: f64,
    pub q75: f64,
    pub min_queries: usize,
    pub max_queries: usize,
    pub queries: Vec<usize>,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[usize], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let w = pos - lo as f64;
    sorted[lo] as f64 * (1.0 - w) + sorted[hi] as f64 * w
}

/// Trial i samples an instance and runs recovery from `trial_rng(seed, i)`.
pub fn gsp_experiment(p: u64, n: usize, k: usize, trials: usize, seed: u64) -> Result<GspStats> {
    check_gsp_params(p, n, k)?;
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let inst = sample_gsp_instance(p, n, k, &mut rng)?;
            let mut oracle = |x: &FpVector| inst.label(x);
            let rec = adaptive_recover(&mut oracle, p, n, k, &mut rng)?;
            Ok((rec.queries, rec.subgroup == inst.subgroup))
        })
        .collect::<Result<Vec<_>>>()?;
    let queries: Vec<usize> = results.iter().map(|r| r.0).collect();
    let mut sorted = queries.clone();
    sorted.sort_unstable();
    Ok(GspStats {
        p,
        n,
        k,
        trials,
        successes: results.iter().filter(|r| r.1).count(),
        median_queries: quantile(&sorted, 0.5),
        mean_queries: queries.iter().sum::<usize>() as f64 / trials.max(1) as f64,
        q25: quantile(&sorted, 0.25),
        q75: quantile(&sorted, 0.75),
        min_queries: sorted.first().copied().unwrap_or(0),
        max_queries: sorted.last().copied().unwrap_or(0),
        queries,
    })
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let len = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / len;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
