//! Linear algebra over F₂ⁿ for n ≤ 64.
//!
//! Coordinate `i` of a vector is bit `i` of a `u64` word. Strings are written
//! coordinate 0 first, so `"1100"` has coordinates 0 and 1 set. The pivot of a
//! row is its lowest set coordinate; reduced row-echelon form keeps pivots
//! strictly increasing and clears every pivot column outside its own row,
//! which makes the basis a canonical name for the subspace.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

/// Largest subspace dimension [`SubspaceBasis::elements`] will enumerate.
pub const ENUMERATION_LIMIT: usize = 24;

#[inline]
pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
pub(crate) fn parity(w: u64) -> bool {
    w.count_ones() & 1 == 1
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(Error::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    n: u8,
    bits: u64,
}

impl BitVector {
    pub fn new(n: usize, bits: u64) -> Result<Self> {
        check_dim(n)?;
        if bits & !mask(n) != 0 {
            return Err(Error::OutOfRange(format!("bits {bits:#x} exceed dimension {n}")));
        }
        Ok(Self { n: n as u8, bits })
    }

    /// Caller guarantees `1 <= n <= 64` and no bits above `n`.
    #[inline]
    pub(crate) fn from_word(n: usize, bits: u64) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&n) && bits & !mask(n) == 0);
        Self { n: n as u8, bits }
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn unit(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::OutOfRange(format!("coordinate {i} in dimension {n}")));
        }
        Self::new(n, 1 << i)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// ⟨x, y⟩ over F₂.
    #[inline]
    pub fn dot(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        parity(self.bits & other.bits)
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_dim(n)?;
        Ok(Self::from_word(n, rng.random::<u64>() & mask(n)))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_dim(n)?;
        loop {
            let w = rng.random::<u64>() & mask(n);
            if w != 0 {
                return Ok(Self::from_word(n, w));
            }
        }
    }

    pub fn to_hex(&self) -> String {
        format!("{:#x}", self.bits)
    }

    pub fn from_hex(n: usize, s: &str) -> Result<Self> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        let bits = u64::from_str_radix(digits, 16).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        Self::new(n, bits)
    }
}

impl serde::Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl BitXor for BitVector {
    type Output = BitVector;

    fn bitxor(self, rhs: Self) -> Self {
        debug_assert_eq!(self.n, rhs.n);
        Self { n: self.n, bits: self.bits ^ rhs.bits }
    }
}

impl BitXorAssign for BitVector {
    fn bitxor_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.n, rhs.n);
        self.bits ^= rhs.bits;
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    /// Parses a `0`/`1` string, coordinate 0 first.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' if i < 64 => bits |= 1 << i,
                _ => return Err(Error::Parse(format!("bad bit string {s:?}"))),
            }
        }
        Self::new(s.len(), bits)
    }
}

/// Insert `v` into a reduced basis. Returns `false` if `v` was already in the span.
pub(crate) fn insert_reduced(rows: &mut Vec<u64>, mut v: u64) -> bool {
    for &r in rows.iter() {
        if (v >> r.trailing_zeros()) & 1 == 1 {
            v ^= r;
        }
    }
    if v == 0 {
        return false;
    }
    let p = v.trailing_zeros();
    for r in rows.iter_mut() {
        if (*r >> p) & 1 == 1 {
            *r ^= v;
        }
    }
    let at = rows.partition_point(|r| r.trailing_zeros() < p);
    rows.insert(at, v);
    true
}

/// Canonical (RREF) basis of a subspace of F₂ⁿ.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceBasis {
    n: u8,
    rows: Vec<u64>,
}

impl SubspaceBasis {
    pub fn zero_space(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n: n as u8, rows: Vec::new() })
    }

    pub fn full_space(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n: n as u8, rows: (0..n).map(|i| 1u64 << i).collect() })
    }

    /// Span of raw words; caller guarantees the words fit in `n` bits.
    pub(crate) fn span_words(n: usize, words: impl IntoIterator<Item = u64>) -> Self {
        let mut rows = Vec::new();
        for w in words {
            debug_assert_eq!(w & !mask(n), 0);
            insert_reduced(&mut rows, w);
            if rows.len() == n {
                break;
            }
        }
        Self { n: n as u8, rows }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn words(&self) -> &[u64] {
        &self.rows
    }

    pub fn rows(&self) -> impl Iterator<Item = BitVector> + '_ {
        self.rows.iter().map(move |&w| BitVector::from_word(self.n(), w))
    }

    pub fn pivots(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().map(|r| r.trailing_zeros())
    }

    /// Reduce a word against the basis: the result is the canonical
    /// representative of `w + span`, zero exactly when `w` is in the span.
    #[inline]
    pub fn reduce_word(&self, mut w: u64) -> u64 {
        for &r in &self.rows {
            if (w >> r.trailing_zeros()) & 1 == 1 {
                w ^= r;
            }
        }
        w
    }

    #[inline]
    pub(crate) fn contains_word(&self, w: u64) -> bool {
        self.reduce_word(w) == 0
    }

    pub fn contains(&self, x: &BitVector) -> Result<bool> {
        membership(self, x)
    }

    /// Smallest subspace containing both.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        Ok(Self::span_words(self.n(), self.rows.iter().chain(other.rows.iter()).copied()))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        let sum_perp = orthogonal_complement(self).join(&orthogonal_complement(other))?;
        Ok(orthogonal_complement(&sum_perp))
    }

    /// Calls `visit` on every element (Gray-code order, zero first).
    pub(crate) fn for_each_word(&self, mut visit: impl FnMut(u64)) {
        let d = self.rows.len();
        let mut cur = 0u64;
        visit(cur);
        for i in 1u64..(1u64 << d) {
            cur ^= self.rows[i.trailing_zeros() as usize];
            visit(cur);
        }
    }

    pub fn elements(&self) -> Result<Vec<BitVector>> {
        enumerate_subspace(self)
    }
}

impl fmt::Debug for SubspaceBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

fn common_dim(rows: &[BitVector], n: usize) -> Result<()> {
    check_dim(n)?;
    for r in rows {
        if r.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: r.n() });
        }
    }
    Ok(())
}

/// Canonical basis of the span of `rows` in F₂ⁿ.
pub fn rref(n: usize, rows: &[BitVector]) -> Result<SubspaceBasis> {
    common_dim(rows, n)?;
    Ok(SubspaceBasis::span_words(n, rows.iter().map(|r| r.bits)))
}

pub fn membership(basis: &SubspaceBasis, x: &BitVector) -> Result<bool> {
    if basis.n() != x.n() {
        return Err(Error::DimensionMismatch { expected: basis.n(), found: x.n() });
    }
    Ok(basis.contains_word(x.bits))
}

fn kernel_of_reduced(n: usize, reduced: &SubspaceBasis) -> SubspaceBasis {
    let mut pivot_mask = 0u64;
    for p in reduced.pivots() {
        pivot_mask |= 1 << p;
    }
    let mut out = Vec::with_capacity(n - reduced.dim());
    for free in 0..n {
        if (pivot_mask >> free) & 1 == 1 {
            continue;
        }
        // x_free = 1 and each pivot coordinate cancels its row.
        let mut v = 1u64 << free;
        for &r in reduced.words() {
            if (r >> free) & 1 == 1 {
                v |= 1 << r.trailing_zeros();
            }
        }
        out.push(v);
    }
    SubspaceBasis::span_words(n, out)
}

/// Canonical basis of {x : ⟨r, x⟩ = 0 for every row r}.
pub fn kernel(n: usize, rows: &[BitVector]) -> Result<SubspaceBasis> {
    let reduced = rref(n, rows)?;
    Ok(kernel_of_reduced(n, &reduced))
}

pub fn orthogonal_complement(basis: &SubspaceBasis) -> SubspaceBasis {
    kernel_of_reduced(basis.n(), basis)
}

pub fn enumerate_subspace(basis: &SubspaceBasis) -> Result<Vec<BitVector>> {
    if basis.dim() > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard { dim: basis.dim(), limit: ENUMERATION_LIMIT });
    }
    let mut out = Vec::with_capacity(1 << basis.dim());
    basis.for_each_word(|w| out.push(BitVector::from_word(basis.n(), w)));
    Ok(out)
}

/// An invertible linear map of F₂ⁿ; row `i` gives output coordinate `i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct InvertibleMap {
    n: u8,
    rows: Vec<u64>,
}

impl InvertibleMap {
    pub fn identity(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n: n as u8, rows: (0..n).map(|i| 1u64 << i).collect() })
    }

    pub fn from_rows(rows: &[BitVector]) -> Result<Self> {
        let n = rows.len();
        common_dim(rows, n)?;
        let rank = rref(n, rows)?.dim();
        if rank < n {
            return Err(Error::NotInvertible { rank, n });
        }
        Ok(Self { n: n as u8, rows: rows.iter().map(|r| r.bits).collect() })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn rows(&self) -> impl Iterator<Item = BitVector> + '_ {
        self.rows.iter().map(move |&w| BitVector::from_word(self.n(), w))
    }

    #[inline]
    pub(crate) fn apply_word(&self, x: u64) -> u64 {
        let mut y = 0u64;
        for (i, &r) in self.rows.iter().enumerate() {
            y |= (parity(r & x) as u64) << i;
        }
        y
    }

    pub fn apply(&self, x: &BitVector) -> Result<BitVector> {
        if x.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: x.n() });
        }
        Ok(BitVector::from_word(self.n(), self.apply_word(x.bits)))
    }

    /// Image of a subspace, re-canonicalized.
    pub fn image(&self, basis: &SubspaceBasis) -> Result<SubspaceBasis> {
        if basis.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: basis.n() });
        }
        Ok(SubspaceBasis::span_words(self.n(), basis.words().iter().map(|&w| self.apply_word(w))))
    }

    pub fn transpose(&self) -> Self {
        let n = self.n();
        let mut rows = vec![0u64; n];
        for (i, &r) in self.rows.iter().enumerate() {
            for (j, t) in rows.iter_mut().enumerate() {
                *t |= ((r >> j) & 1) << i;
            }
        }
        Self { n: self.n, rows }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        // Row i of the product is Σ_j self[i][j]·other[j].
        let rows = self
            .rows
            .iter()
            .map(|&r| {
                let mut acc = 0u64;
                for (j, &o) in other.rows.iter().enumerate() {
                    if (r >> j) & 1 == 1 {
                        acc ^= o;
                    }
                }
                acc
            })
            .collect();
        Ok(Self { n: self.n, rows })
    }

    /// Inverse by Gauss–Jordan elimination on `[A | I]`.
    pub fn inverse(&self) -> Self {
        let n = self.n();
        let mut a = self.rows.clone();
        let mut inv: Vec<u64> = (0..n).map(|i| 1u64 << i).collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| (a[r] >> col) & 1 == 1).expect("invertible by construction");
            a.swap(col, piv);
            inv.swap(col, piv);
            for r in 0..n {
                if r != col && (a[r] >> col) & 1 == 1 {
                    a[r] ^= a[col];
                    inv[r] ^= inv[col];
                }
            }
        }
        Self { n: self.n, rows: inv }
    }
}

impl fmt::Debug for InvertibleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Uniform invertible map by rejection sampling; also returns the number of
/// matrices drawn.
pub fn random_invertible_counted<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(InvertibleMap, u32)> {
    check_dim(n)?;
    let m = mask(n);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let rows: Vec<u64> = (0..n).map(|_| rng.random::<u64>() & m).collect();
        if SubspaceBasis::span_words(n, rows.iter().copied()).dim() == n {
            return Ok((InvertibleMap { n: n as u8, rows }, attempts));
        }
    }
}

pub fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<InvertibleMap> {
    Ok(random_invertible_counted(n, rng)?.0)
}

/// Uniformly random subspace of dimension `k`.
pub fn random_subspace<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SubspaceBasis> {
    check_dim(n)?;
    if k > n {
        return Err(Error::OutOfRange(format!("subspace dimension {k} > {n}")));
    }
    let m = mask(n);
    let mut rows = Vec::with_capacity(k);
    while rows.len() < k {
        insert_reduced(&mut rows, rng.random::<u64>() & m);
    }
    Ok(SubspaceBasis { n: n as u8, rows })
}
