//! The partial-spread bent function, exact Fourier transforms and sign tables.
//!
//! Fourier coefficients follow the normalized convention
//! f̂(y) = 2⁻ⁿ Σₓ f(x)(−1)^⟨x,y⟩ and are kept as integer numerators over 2ⁿ,
//! so bentness and Parseval are integer identities.

use std::fmt;
use std::io::{self, Read, Write};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{mask, parity, BitVector};
use crate::spreads::{dual_spread, PartialSpread, Spread, TABLE_LIMIT};

/// Largest n accepted by [`wht`].
pub const WHT_LIMIT: usize = 26;

/// Below this size the butterfly runs serially.
const PAR_THRESHOLD: usize = 1 << 14;

/// An exact dyadic rational `numerator / 2^log_den`, kept in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: i64,
    log_den: u32,
}

impl Dyadic {
    pub fn new(mut numerator: i64, mut log_den: u32) -> Self {
        if numerator == 0 {
            return Self { numerator: 0, log_den: 0 };
        }
        let shift = numerator.trailing_zeros().min(log_den);
        numerator >>= shift;
        log_den -= shift;
        Self { numerator, log_den }
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn log_den(&self) -> u32 {
        self.log_den
    }

    /// Numerator when written over `2^log_den`; `None` if not representable.
    pub fn numerator_over(&self, log_den: u32) -> Option<i64> {
        let shift = log_den.checked_sub(self.log_den)?;
        self.numerator.checked_mul(1i64.checked_shl(shift)?)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.numerator), BigInt::from(1) << self.log_den)
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / (self.log_den as f64).exp2()
    }
}

impl std::ops::Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic { numerator: -self.numerator, log_den: self.log_den }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.log_den)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log_den == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, 1u128 << self.log_den)
        }
    }
}

/// A ±1-valued function on F₂ⁿ as a truth table indexed by the vector word.
#[derive(Clone, PartialEq, Eq)]
pub struct SignTable {
    n: u8,
    values: Vec<i8>,
}

impl SignTable {
    pub fn new(n: usize, values: Vec<i8>) -> Result<Self> {
        if n == 0 || n > WHT_LIMIT {
            return Err(Error::TableGuard { n, limit: WHT_LIMIT });
        }
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: values.len() });
        }
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::OutOfRange(format!("entry {pos} is {}, not ±1", values[pos])));
        }
        Ok(Self { n: n as u8, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> i8 + Sync + Send) -> Result<Self> {
        if n == 0 || n > WHT_LIMIT {
            return Err(Error::TableGuard { n, limit: WHT_LIMIT });
        }
        let values: Vec<i8> = (0..1u64 << n).into_par_iter().map(f).collect();
        Self::new(n, values)
    }

    pub fn constant(n: usize, v: i8) -> Result<Self> {
        Self::from_fn(n, |_| v)
    }

    /// χ_s(x) = (−1)^⟨s,x⟩.
    pub fn character(s: &BitVector) -> Result<Self> {
        let (n, s) = (s.n(), s.bits() & mask(s.n()));
        Self::from_fn(n, |x| if parity(s & x) { -1 } else { 1 })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, x: &BitVector) -> i8 {
        self.values[x.bits() as usize]
    }

    pub fn negated(&self) -> Self {
        Self { n: self.n, values: self.values.iter().map(|v| -v).collect() }
    }

    /// Packs the table as hex, bit `x` set when the value at `x` is −1.
    pub fn to_packed_hex(&self) -> String {
        let mut out = String::with_capacity(self.values.len() / 4 + 1);
        for chunk in self.values.chunks(4) {
            let nib = chunk.iter().enumerate().fold(0u8, |acc, (i, &v)| acc | (((v < 0) as u8) << i));
            out.push(char::from_digit(nib as u32, 16).expect("nibble"));
        }
        out
    }

    pub fn from_packed_hex(n: usize, hex: &str) -> Result<Self> {
        if n == 0 || n > WHT_LIMIT {
            return Err(Error::TableGuard { n, limit: WHT_LIMIT });
        }
        let len = 1usize << n;
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Parse(format!("expected {} hex digits, found {}", len.div_ceil(4), hex.len())));
        }
        let mut values = Vec::with_capacity(len);
        for c in hex.chars() {
            let nib = c.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?;
            for i in 0..4 {
                if values.len() < len {
                    values.push(if (nib >> i) & 1 == 1 { -1 } else { 1 });
                }
            }
        }
        Self::new(n, values)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, self.n(), TableKind::Sign)?;
        let bytes: Vec<u8> = self.values.iter().map(|&v| v as u8).collect();
        w.write_all(&bytes).map_err(io_err)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let (n, kind) = read_header(r)?;
        if kind != TableKind::Sign {
            return Err(Error::Parse(format!("expected a sign table, found {kind:?}")));
        }
        let mut buf = vec![0u8; 1 << n];
        r.read_exact(&mut buf).map_err(io_err)?;
        Self::new(n, buf.into_iter().map(|b| b as i8).collect())
    }
}

impl fmt::Debug for SignTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignTable(n = {}, {})", self.n, self.to_packed_hex())
    }
}

/// Fourier coefficients of a sign table: `numerators[y] / 2ⁿ`.
#[derive(Clone, PartialEq, Eq)]
pub struct FourierTable {
    n: u8,
    numerators: Vec<i64>,
}

impl FourierTable {
    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn numerator(&self, y: &BitVector) -> i64 {
        self.numerators[y.bits() as usize]
    }

    pub fn value(&self, y: &BitVector) -> Dyadic {
        Dyadic::new(self.numerator(y), self.n as u32)
    }

    /// Σ_y f̂(y)² as an exact rational.
    pub fn parseval_sum(&self) -> BigRational {
        let sum: i128 = self.numerators.iter().map(|&v| (v as i128) * (v as i128)).sum();
        BigRational::new(BigInt::from(sum), BigInt::from(1) << (2 * self.n as u32))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, self.n(), TableKind::Fourier)?;
        let mut bytes = Vec::with_capacity(self.numerators.len() * 8);
        for v in &self.numerators {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes).map_err(io_err)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let (n, kind) = read_header(r)?;
        if kind != TableKind::Fourier {
            return Err(Error::Parse(format!("expected a Fourier table, found {kind:?}")));
        }
        let mut buf = vec![0u8; 8 << n];
        r.read_exact(&mut buf).map_err(io_err)?;
        let numerators = buf.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { n: n as u8, numerators })
    }
}

impl fmt::Debug for FourierTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FourierTable(n = {}, {:?} / 2^{})", self.n, self.numerators, self.n)
    }
}

pub const TABLE_FORMAT: &str = "forrelation-table";
pub const TABLE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Sign,
    Fourier,
}

#[derive(Serialize, Deserialize)]
struct TableHeader {
    format: String,
    version: u32,
    n: usize,
    kind: TableKind,
    dtype: String,
}

fn io_err(e: io::Error) -> Error {
    Error::Parse(format!("i/o: {e}"))
}

fn write_header<W: Write>(w: &mut W, n: usize, kind: TableKind) -> Result<()> {
    let header = TableHeader {
        format: TABLE_FORMAT.into(),
        version: TABLE_VERSION,
        n,
        kind,
        dtype: match kind {
            TableKind::Sign => "i8",
            TableKind::Fourier => "i64",
        }
        .into(),
    };
    let mut line = serde_json::to_vec(&header)?;
    line.push(b'\n');
    w.write_all(&line).map_err(io_err)
}

fn read_header<R: Read>(r: &mut R) -> Result<(usize, TableKind)> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte).map_err(io_err)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(Error::Parse("table header too long".into()));
        }
    }
    let header: TableHeader = serde_json::from_slice(&line)?;
    if header.format != TABLE_FORMAT || header.version != TABLE_VERSION {
        return Err(Error::Parse(format!("unsupported table format {} v{}", header.format, header.version)));
    }
    if header.n == 0 || header.n > WHT_LIMIT {
        return Err(Error::TableGuard { n: header.n, limit: WHT_LIMIT });
    }
    Ok((header.n, header.kind))
}

/// In-place unnormalized Walsh–Hadamard butterfly.
fn butterfly(data: &mut [i64]) {
    let len = data.len();
    let mut h = 1;
    while h < len {
        if len < PAR_THRESHOLD {
            for block in data.chunks_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, b) = (*u, *v);
                    *u = a + b;
                    *v = a - b;
                }
            }
        } else {
            data.par_chunks_mut(2 * h).for_each(|block| {
                let (lo, hi) = block.split_at_mut(h);
                lo.par_iter_mut().with_min_len(PAR_THRESHOLD).zip(hi.par_iter_mut()).for_each(|(u, v)| {
                    let (a, b) = (*u, *v);
                    *u = a + b;
                    *v = a - b;
                });
            });
        }
        h *= 2;
    }
}

/// Exact normalized Fourier transform by the fast butterfly, O(n·2ⁿ).
pub fn wht(t: &SignTable) -> Result<FourierTable> {
    if t.n() > WHT_LIMIT {
        return Err(Error::TableGuard { n: t.n(), limit: WHT_LIMIT });
    }
    let mut data: Vec<i64> = t.values.iter().map(|&v| v as i64).collect();
    butterfly(&mut data);
    Ok(FourierTable { n: t.n, numerators: data })
}

/// |f̂(y)| = 2^{−n/2} for every y, compared exactly.
pub fn is_bent(t: &FourierTable) -> bool {
    if t.n % 2 == 1 {
        return false;
    }
    let target = 1i64 << (t.n / 2);
    t.numerators.par_iter().all(|v| v.abs() == target)
}

/// g(x) = f(x ⊕ a).
pub fn translate_table(t: &SignTable, a: &BitVector) -> Result<SignTable> {
    if a.n() != t.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), found: a.n() });
    }
    let a = a.bits() as usize;
    Ok(SignTable { n: t.n, values: (0..t.values.len()).map(|x| t.values[x ^ a]).collect() })
}

/// Owner tables of the spread and its dual (see [`Spread::owner_table`]).
#[derive(Debug)]
struct BucketTables {
    primal: Vec<u16>,
    dual: Vec<u16>,
}

/// The function that is −1 on the nonzero points of ⋃_{i∈D} Eᵢ shifted by `a`,
/// and +1 elsewhere.
///
/// The dual spread and per-vector bucket tables (n ≤ 24) are shared between
/// clones and between functions that differ only in their selected set.
#[derive(Clone)]
pub struct PartialSpreadFunction {
    ps: PartialSpread,
    dual: Arc<Spread>,
    tables: Option<Arc<BucketTables>>,
}

impl PartialSpreadFunction {
    pub fn new(ps: PartialSpread) -> Result<Self> {
        let dual = Arc::new(dual_spread(ps.spread()));
        let tables = if ps.n() <= TABLE_LIMIT {
            Some(Arc::new(BucketTables { primal: ps.spread().owner_table()?, dual: dual.owner_table()? }))
        } else {
            None
        };
        Ok(Self { ps, dual, tables })
    }

    pub fn partial_spread(&self) -> &PartialSpread {
        &self.ps
    }

    pub fn spread(&self) -> &Arc<Spread> {
        self.ps.spread()
    }

    pub fn dual(&self) -> &Arc<Spread> {
        &self.dual
    }

    pub fn n(&self) -> usize {
        self.ps.n()
    }

    pub fn m(&self) -> usize {
        self.ps.m()
    }

    pub fn offset(&self) -> BitVector {
        self.ps.offset()
    }

    /// Same spread and offset, different selected set. Tables are shared.
    pub fn with_selected(&self, selected: Vec<usize>) -> Result<Self> {
        Ok(Self { ps: self.ps.with_selected(selected)?, dual: self.dual.clone(), tables: self.tables.clone() })
    }

    /// Replaces D and the offset; the spread must be the same one.
    pub fn with_partial_spread(&self, ps: PartialSpread) -> Result<Self> {
        if !Arc::ptr_eq(ps.spread(), self.spread()) && ps.spread() != self.spread() {
            return Err(Error::InvalidPartialSpread("partial spread is over a different spread".into()));
        }
        Ok(Self { ps, dual: self.dual.clone(), tables: self.tables.clone() })
    }

    /// Index of the spread member holding the nonzero word `w`.
    #[inline]
    pub(crate) fn owner_word(&self, w: u64) -> Option<usize> {
        if w == 0 {
            return None;
        }
        match &self.tables {
            Some(t) => Some(t.primal[w as usize] as usize - 1),
            None => self.spread().subspaces().iter().position(|s| s.contains_word(w)),
        }
    }

    /// Index of the dual member holding the nonzero word `w`.
    #[inline]
    pub(crate) fn dual_owner_word(&self, w: u64) -> Option<usize> {
        if w == 0 {
            return None;
        }
        match &self.tables {
            Some(t) => Some(t.dual[w as usize] as usize - 1),
            None => self.dual.subspaces().iter().position(|s| s.contains_word(w)),
        }
    }

    /// f-side bucket: the member containing x ⊕ a, or `None` at x = a.
    pub fn primal_bucket(&self, x: &BitVector) -> Option<usize> {
        self.owner_word(x.bits() ^ self.ps.offset().bits())
    }

    /// g-side bucket: the dual member containing y, or `None` at y = 0.
    pub fn dual_bucket(&self, y: &BitVector) -> Option<usize> {
        self.dual_owner_word(y.bits())
    }

    #[inline]
    pub(crate) fn eval_word(&self, x: u64) -> i8 {
        match self.owner_word(x ^ self.ps.offset().bits()) {
            Some(i) if self.ps.is_selected(i) => -1,
            _ => 1,
        }
    }

    /// 2^m·f̂(y), which is ±1.
    #[inline]
    pub(crate) fn dual_eval_word(&self, y: u64) -> i8 {
        let shift = if parity(self.ps.offset().bits() & y) { -1 } else { 1 };
        match self.dual_owner_word(y) {
            Some(j) if self.ps.is_selected(j) => -shift,
            _ => shift,
        }
    }

    pub fn eval(&self, x: &BitVector) -> i8 {
        self.eval_word(x.bits())
    }

    pub fn sign_table(&self) -> Result<SignTable> {
        SignTable::from_fn(self.n(), |x| self.eval_word(x))
    }

    /// Truth table of 2^m·f̂.
    pub fn dual_sign_table(&self) -> Result<SignTable> {
        SignTable::from_fn(self.n(), |y| self.dual_eval_word(y))
    }

    pub fn closed_form_fourier(&self, y: &BitVector) -> Dyadic {
        Dyadic::new(self.dual_eval_word(y.bits()) as i64, self.m() as u32)
    }
}

impl fmt::Debug for PartialSpreadFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialSpreadFunction").field("ps", &self.ps).finish()
    }
}

pub fn eval_psf(f: &PartialSpreadFunction, x: &BitVector) -> Result<i8> {
    check_n(f, x)?;
    Ok(f.eval(x))
}

/// (−1)^⟨a,y⟩ · (−2^{−m} if y ≠ 0 lies in a dual member indexed by D, else +2^{−m}).
pub fn closed_form_fourier(f: &PartialSpreadFunction, y: &BitVector) -> Result<Dyadic> {
    check_n(f, y)?;
    Ok(f.closed_form_fourier(y))
}

fn check_n(f: &PartialSpreadFunction, x: &BitVector) -> Result<()> {
    if f.n() != x.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), found: x.n() });
    }
    Ok(())
}
