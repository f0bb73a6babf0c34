//! Spreads of F₂ⁿ (n = 2m): 2^m + 1 subspaces of dimension m that meet pairwise
//! only in zero and together cover every nonzero vector exactly once.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BinaryField, MAX_DEGREE};
use crate::gf2::{self, orthogonal_complement, random_invertible, BitVector, InvertibleMap, SubspaceBasis};

/// Largest n for which per-vector lookup tables (2ⁿ entries) are built.
pub const TABLE_LIMIT: usize = 24;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Spread {
    n: u8,
    subspaces: Vec<SubspaceBasis>,
}

impl Spread {
    /// Wraps a list of subspaces without checking the spread axioms; see [`Spread::validate`].
    pub fn from_subspaces(n: usize, subspaces: Vec<SubspaceBasis>) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) || n > gf2::MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if let Some(s) = subspaces.iter().find(|s| s.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: s.n() });
        }
        Ok(Self { n: n as u8, subspaces })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn m(&self) -> usize {
        self.n() / 2
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn subspaces(&self) -> &[SubspaceBasis] {
        &self.subspaces
    }

    pub fn subspace(&self, i: usize) -> &SubspaceBasis {
        &self.subspaces[i]
    }

    /// Index of the subspace containing a nonzero vector, by linear scan.
    pub fn locate(&self, x: &BitVector) -> Option<usize> {
        if x.is_zero() || x.n() != self.n() {
            return None;
        }
        self.subspaces.iter().position(|s| s.contains_word(x.bits()))
    }

    /// Owner table over all 2ⁿ vectors: entry `x` is `1 + index` of the
    /// subspace containing `x`, and 0 for `x = 0`. Requires a valid spread.
    pub fn owner_table(&self) -> Result<Vec<u16>> {
        let n = self.n();
        if n > TABLE_LIMIT {
            return Err(Error::TableGuard { n, limit: TABLE_LIMIT });
        }
        let mut table = vec![0u16; 1 << n];
        for (i, s) in self.subspaces.iter().enumerate() {
            let tag = (i + 1) as u16;
            s.for_each_word(|w| {
                if w != 0 {
                    table[w as usize] = tag;
                }
            });
        }
        Ok(table)
    }

    /// Subspaces sorted by canonical basis, for order-insensitive comparison.
    pub fn canonical_key(&self) -> Vec<SubspaceBasis> {
        let mut key = self.subspaces.clone();
        key.sort();
        key
    }

    pub fn same_up_to_order(&self, other: &Self) -> bool {
        self.n == other.n && self.canonical_key() == other.canonical_key()
    }

    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::OutOfRange(format!("{order:?} is not a permutation of 0..{}", self.len())));
            }
        }
        if order.len() != self.len() {
            return Err(Error::OutOfRange(format!("{order:?} is not a permutation of 0..{}", self.len())));
        }
        Ok(Self { n: self.n, subspaces: order.iter().map(|&i| self.subspaces[i].clone()).collect() })
    }

    pub fn validate(&self) -> SpreadReport {
        validate_spread(self)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SpreadFile {
            schema: SPREAD_SCHEMA.into(),
            version: SPREAD_VERSION,
            n: self.n(),
            m: self.m(),
            subspaces: self.subspaces.iter().map(|s| s.words().iter().map(|w| format!("{w:#x}")).collect()).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parses the JSON form written by [`Spread::to_json`]. Rows are
    /// re-canonicalized; the spread axioms are not checked.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpreadFile = serde_json::from_str(text)?;
        if file.schema != SPREAD_SCHEMA || file.version != SPREAD_VERSION {
            return Err(Error::Parse(format!("unsupported schema {} v{}", file.schema, file.version)));
        }
        if file.n != 2 * file.m {
            return Err(Error::Parse(format!("n = {} but m = {}", file.n, file.m)));
        }
        let subspaces = file
            .subspaces
            .iter()
            .map(|rows| {
                let rows = rows.iter().map(|h| BitVector::from_hex(file.n, h)).collect::<Result<Vec<_>>>()?;
                gf2::rref(file.n, &rows)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_subspaces(file.n, subspaces)
    }
}

impl fmt::Debug for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spread").field("n", &self.n).field("subspaces", &self.subspaces).finish()
    }
}

pub const SPREAD_SCHEMA: &str = "spread";
pub const SPREAD_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SpreadFile {
    schema: String,
    version: u32,
    n: usize,
    m: usize,
    subspaces: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpreadViolation {
    /// A spread of F₂^{2m} has exactly 2^m + 1 members.
    Count { expected: usize, found: usize },
    /// Member `index` does not have dimension m.
    Dimension { index: usize, dim: usize },
    /// Members `first` and `second` share the nonzero vector `witness`.
    Intersection { first: usize, second: usize, witness: BitVector },
    /// A nonzero vector outside every member.
    Uncovered { witness: BitVector },
}

impl fmt::Display for SpreadViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Count { expected, found } => write!(f, "expected {expected} subspaces, found {found}"),
            Self::Dimension { index, dim } => write!(f, "subspace {index} has dimension {dim}"),
            Self::Intersection { first, second, witness } => {
                write!(f, "subspaces {first} and {second} both contain {witness}")
            }
            Self::Uncovered { witness } => write!(f, "{witness} lies in no subspace"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpreadReport {
    pub violations: Vec<SpreadViolation>,
}

impl SpreadReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidSpread(v.to_string())),
        }
    }
}

/// Report at most this many violations of each kind.
const WITNESS_CAP: usize = 16;

/// Checks the member count, member dimensions, pairwise trivial intersection
/// and exact cover of the nonzero vectors, with a witness for each failure.
pub fn validate_spread(s: &Spread) -> SpreadReport {
    let (n, m) = (s.n(), s.m());
    let mut report = SpreadReport::default();
    let expected = (1usize << m.min(63)) + 1;
    if s.len() != expected {
        report.violations.push(SpreadViolation::Count { expected, found: s.len() });
    }
    for (i, sub) in s.subspaces.iter().enumerate() {
        if sub.dim() != m {
            report.violations.push(SpreadViolation::Dimension { index: i, dim: sub.dim() });
        }
    }
    if n <= TABLE_LIMIT {
        cover_check(s, &mut report);
    } else {
        pairwise_check(s, &mut report);
    }
    report
}

fn cover_check(s: &Spread, report: &mut SpreadReport) {
    let n = s.n();
    let mut owner = vec![0u16; 1 << n];
    let mut clashing = BTreeSet::new();
    for (i, sub) in s.subspaces.iter().enumerate() {
        let tag = (i + 1) as u16;
        sub.for_each_word(|w| {
            let prev = owner[w as usize];
            if w == 0 {
                return;
            }
            if prev == 0 {
                owner[w as usize] = tag;
            } else if clashing.len() < WITNESS_CAP && clashing.insert((prev as usize - 1, i)) {
                report.violations.push(SpreadViolation::Intersection {
                    first: prev as usize - 1,
                    second: i,
                    witness: BitVector::from_word(n, w),
                });
            }
        });
    }
    let uncovered = owner.iter().enumerate().skip(1).filter(|(_, &o)| o == 0).take(WITNESS_CAP);
    for (w, _) in uncovered {
        report.violations.push(SpreadViolation::Uncovered { witness: BitVector::from_word(n, w as u64) });
    }
}

fn pairwise_check(s: &Spread, report: &mut SpreadReport) {
    let mut clashes = 0;
    'outer: for i in 0..s.len() {
        for j in i + 1..s.len() {
            let meet = s.subspaces[i].intersection(&s.subspaces[j]).expect("same ambient dimension");
            let witness = meet.rows().next();
            if let Some(w) = witness {
                report.violations.push(SpreadViolation::Intersection { first: i, second: j, witness: w });
                clashes += 1;
                if clashes == WITNESS_CAP {
                    break 'outer;
                }
            }
        }
    }
    // Pairwise disjoint members of the right size and count cover all 2ⁿ − 1
    // nonzero vectors, so any gap already shows up as a count or dimension violation.
}

/// The field spread of F₂^{2m} ≅ F_{2^m} × F_{2^m}. Member `s` for
/// `s < 2^m` is {(x, s·x)}; the last member is {(0, y)}. The first factor
/// occupies coordinates 0..m, the second m..2m.
pub fn desarguesian_spread(m: usize) -> Result<Spread> {
    let field = BinaryField::new(m).map_err(|_| Error::OutOfRange(format!("m = {m} not in 1..={MAX_DEGREE}")))?;
    let n = 2 * m;
    let mut subspaces = Vec::with_capacity(field.order() as usize + 1);
    for s in 0..field.order() {
        let rows = (0..m).map(|j| (1u64 << j) | ((field.mul(s, 1 << j) as u64) << m));
        subspaces.push(SubspaceBasis::span_words(n, rows));
    }
    subspaces.push(SubspaceBasis::span_words(n, (0..m).map(|j| 1u64 << (m + j))));
    Spread::from_subspaces(n, subspaces)
}

/// Image of every member under `map`, order preserved.
pub fn scramble_spread(s: &Spread, map: &InvertibleMap) -> Result<Spread> {
    if map.n() != s.n() {
        return Err(Error::DimensionMismatch { expected: s.n(), found: map.n() });
    }
    let subspaces = s.subspaces.iter().map(|b| map.image(b)).collect::<Result<Vec<_>>>()?;
    Spread::from_subspaces(s.n(), subspaces)
}

/// Member-wise orthogonal complements, index-aligned.
pub fn dual_spread(s: &Spread) -> Spread {
    Spread { n: s.n, subspaces: s.subspaces.iter().map(orthogonal_complement).collect() }
}

/// A random spread from the GL(n, 2)-orbit of the field spread.
pub fn sample_spread<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Spread> {
    let base = desarguesian_spread(m)?;
    let map = random_invertible(2 * m, rng)?;
    scramble_spread(&base, &map)
}

/// A spread split into `D` (2^{m−1} members) and its complement, plus a
/// nonzero offset.
#[derive(Clone, PartialEq, Eq)]
pub struct PartialSpread {
    spread: Arc<Spread>,
    selected: Vec<usize>,
    in_selected: Vec<bool>,
    offset: BitVector,
}

impl PartialSpread {
    pub fn new(spread: Arc<Spread>, mut selected: Vec<usize>, offset: BitVector) -> Result<Self> {
        let m = spread.m();
        if spread.len() != (1 << m) + 1 {
            return Err(Error::InvalidPartialSpread(format!("spread has {} members", spread.len())));
        }
        if selected.len() != 1 << (m - 1) {
            return Err(Error::InvalidPartialSpread(format!(
                "selected {} members, expected {}",
                selected.len(),
                1 << (m - 1)
            )));
        }
        selected.sort_unstable();
        selected.dedup();
        if selected.len() != 1 << (m - 1) || selected.last().is_some_and(|&i| i >= spread.len()) {
            return Err(Error::InvalidPartialSpread("selected indices repeat or exceed the spread".into()));
        }
        if offset.n() != spread.n() {
            return Err(Error::DimensionMismatch { expected: spread.n(), found: offset.n() });
        }
        if offset.is_zero() {
            return Err(Error::InvalidPartialSpread("offset must be nonzero".into()));
        }
        let mut in_selected = vec![false; spread.len()];
        for &i in &selected {
            in_selected[i] = true;
        }
        Ok(Self { spread, selected, in_selected, offset })
    }

    pub fn spread(&self) -> &Arc<Spread> {
        &self.spread
    }

    pub fn n(&self) -> usize {
        self.spread.n()
    }

    pub fn m(&self) -> usize {
        self.spread.m()
    }

    /// Indices of D, ascending.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Indices of D̄, ascending.
    pub fn unselected(&self) -> Vec<usize> {
        (0..self.spread.len()).filter(|&i| !self.in_selected[i]).collect()
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.in_selected[i]
    }

    pub fn offset(&self) -> BitVector {
        self.offset
    }

    pub fn with_selected(&self, selected: Vec<usize>) -> Result<Self> {
        Self::new(self.spread.clone(), selected, self.offset)
    }
}

impl fmt::Debug for PartialSpread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialSpread")
            .field("n", &self.n())
            .field("selected", &self.selected)
            .field("offset", &self.offset)
            .finish()
    }
}

/// Uniform D of size 2^{m−1} and uniform nonzero offset.
pub fn sample_partial_spread<R: Rng + ?Sized>(spread: Arc<Spread>, rng: &mut R) -> Result<PartialSpread> {
    let m = spread.m();
    if spread.len() != (1 << m) + 1 {
        return Err(Error::InvalidPartialSpread(format!("spread has {} members", spread.len())));
    }
    let selected = index::sample(rng, spread.len(), 1 << (m - 1)).into_vec();
    let offset = BitVector::random_nonzero(spread.n(), rng)?;
    PartialSpread::new(spread, selected, offset)
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            extend(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        extend(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Every spread of F₂⁴, each with members in canonical order, sorted.
pub fn enumerate_spreads(n: usize) -> Result<Vec<Spread>> {
    if n != 4 {
        return Err(Error::OutOfRange(format!("spread enumeration supports n = 4 only, got {n}")));
    }
    let planes = planes_of_f2_4();
    let mut found = Vec::new();
    let mut chosen = Vec::with_capacity(5);
    extend_cover(&planes, 0, &mut chosen, &mut found);
    let mut spreads: Vec<Spread> = found
        .into_iter()
        .map(|idx| {
            let mut subs: Vec<SubspaceBasis> = idx.iter().map(|&i| planes[i].1.clone()).collect();
            subs.sort();
            Spread { n: 4, subspaces: subs }
        })
        .collect();
    spreads.sort_by(|a, b| a.subspaces.cmp(&b.subspaces));
    spreads.dedup();
    Ok(spreads)
}

/// The 35 planes of F₂⁴ with their nonzero-element masks (bit x set for x ∈ plane).
fn planes_of_f2_4() -> Vec<(u16, SubspaceBasis)> {
    let mut planes: Vec<(u16, SubspaceBasis)> = Vec::new();
    for a in 1u64..16 {
        for b in a + 1..16 {
            let basis = SubspaceBasis::span_words(4, [a, b]);
            if basis.dim() != 2 || planes.iter().any(|(_, p)| *p == basis) {
                continue;
            }
            let mut mask = 0u16;
            basis.for_each_word(|w| mask |= 1 << w);
            planes.push((mask & !1, basis));
        }
    }
    planes
}

fn extend_cover(planes: &[(u16, SubspaceBasis)], covered: u16, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    const ALL: u16 = 0xfffe;
    if covered == ALL {
        out.push(chosen.clone());
        return;
    }
    // Branch on the least uncovered vector; every spread contains exactly one plane through it.
    let target = (!covered & ALL).trailing_zeros();
    for (i, (mask, _)) in planes.iter().enumerate() {
        if (mask >> target) & 1 == 1 && mask & covered == 0 {
            chosen.push(i);
            extend_cover(planes, covered | mask, chosen, out);
            chosen.pop();
        }
    }
}
