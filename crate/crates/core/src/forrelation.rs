//! Exact forrelation, extremal yes/no instances, query-counting oracles and
//! the exhaustive n = 4 indistinguishability oracle.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bent::{wht, PartialSpreadFunction, SignTable};
use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::spreads::{enumerate_spreads, index_subsets, sample_partial_spread, sample_spread, PartialSpread, Spread};

/// forr(f, g) = 2^{−n/2} Σₓ f̂(x)·g(x), exactly.
pub fn forr(f: &SignTable, g: &SignTable) -> Result<BigRational> {
    if f.n() != g.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), found: g.n() });
    }
    let n = f.n();
    if n % 2 == 1 {
        return Err(Error::OutOfRange(format!("forrelation needs even n, got {n}")));
    }
    let spectrum = wht(f)?;
    let sum: i64 = spectrum.numerators().par_iter().zip(g.values().par_iter()).map(|(&c, &s)| c * s as i64).sum();
    Ok(BigRational::new(BigInt::from(sum), BigInt::from(1) << (n + n / 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
}

impl Label {
    /// The sign σ multiplying f: +1 for yes, −1 for no.
    pub fn sign(self) -> i8 {
        match self {
            Label::Yes => 1,
            Label::No => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Label::Yes => Label::No,
            Label::No => Label::Yes,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "yes",
            Label::No => "no",
        })
    }
}

/// Which oracle a query addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    F,
    G,
}

/// The pair (σ·f, g) with g = 2^m·f̂ for a partial-spread function f.
#[derive(Clone, Debug)]
pub struct ForrelationInstance {
    label: Label,
    psf: PartialSpreadFunction,
}

impl ForrelationInstance {
    pub fn new(psf: PartialSpreadFunction, label: Label) -> Self {
        Self { label, psf }
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn psf(&self) -> &PartialSpreadFunction {
        &self.psf
    }

    pub fn n(&self) -> usize {
        self.psf.n()
    }

    pub fn m(&self) -> usize {
        self.psf.m()
    }

    /// Always 1: samplers only produce extremal instances.
    pub fn epsilon(&self) -> BigRational {
        BigRational::from_integer(1.into())
    }

    #[inline]
    pub(crate) fn f_word(&self, x: u64) -> i8 {
        self.label.sign() * self.psf.eval_word(x)
    }

    #[inline]
    pub(crate) fn g_word(&self, y: u64) -> i8 {
        self.psf.dual_eval_word(y)
    }

    pub fn f(&self, x: &BitVector) -> i8 {
        self.f_word(x.bits())
    }

    pub fn g(&self, y: &BitVector) -> i8 {
        self.g_word(y.bits())
    }

    pub fn eval(&self, x: &BitVector, side: Side) -> i8 {
        match side {
            Side::F => self.f(x),
            Side::G => self.g(x),
        }
    }

    pub fn f_table(&self) -> Result<SignTable> {
        SignTable::from_fn(self.n(), |x| self.f_word(x))
    }

    pub fn g_table(&self) -> Result<SignTable> {
        self.psf.dual_sign_table()
    }

    /// Same hidden structure, opposite label.
    pub fn relabeled(&self, label: Label) -> Self {
        Self { label, psf: self.psf.clone() }
    }

    /// Truth tables without the label. With `reveal`, the label, spread,
    /// selected set and offset are included.
    pub fn export(&self, reveal: bool) -> Result<InstanceExport> {
        let ps = self.psf.partial_spread();
        Ok(InstanceExport {
            schema: INSTANCE_SCHEMA.into(),
            version: INSTANCE_VERSION,
            n: self.n(),
            f: self.f_table()?.to_packed_hex(),
            g: self.g_table()?.to_packed_hex(),
            hidden: if reveal {
                Some(HiddenStructure {
                    label: self.label,
                    spread: serde_json::from_str(&ps.spread().to_json()?)?,
                    selected: ps.selected().to_vec(),
                    offset: ps.offset().to_hex(),
                })
            } else {
                None
            },
        })
    }
}

pub const INSTANCE_SCHEMA: &str = "forrelation-instance";
pub const INSTANCE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceExport {
    pub schema: String,
    pub version: u32,
    pub n: usize,
    /// Packed truth table of f, hex, bit x set when f(x) = −1.
    pub f: String,
    pub g: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hidden: Option<HiddenStructure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenStructure {
    pub label: Label,
    pub spread: serde_json::Value,
    pub selected: Vec<usize>,
    pub offset: String,
}

impl InstanceExport {
    pub fn tables(&self) -> Result<(SignTable, SignTable)> {
        if self.schema != INSTANCE_SCHEMA || self.version != INSTANCE_VERSION {
            return Err(Error::Parse(format!("unsupported schema {} v{}", self.schema, self.version)));
        }
        Ok((SignTable::from_packed_hex(self.n, &self.f)?, SignTable::from_packed_hex(self.n, &self.g)?))
    }

    /// Rebuilds the instance from the revealed structure.
    pub fn to_instance(&self) -> Result<ForrelationInstance> {
        let hidden = self.hidden.as_ref().ok_or_else(|| Error::Parse("export does not reveal the instance".into()))?;
        let spread = Spread::from_json(&hidden.spread.to_string())?;
        spread.validate().into_result()?;
        let offset = BitVector::from_hex(self.n, &hidden.offset)?;
        let ps = PartialSpread::new(Arc::new(spread), hidden.selected.clone(), offset)?;
        Ok(ForrelationInstance::new(PartialSpreadFunction::new(ps)?, hidden.label))
    }
}

/// g as an evaluation closure: g(y) = 2^m·f̂(y).
pub fn dual_oracle(f: &PartialSpreadFunction) -> impl Fn(&BitVector) -> i8 + Send + Sync + '_ {
    move |y| f.dual_eval_word(y.bits())
}

pub const MIN_INSTANCE_DIM: usize = 4;
/// The field construction goes up to m = 12.
pub const MAX_INSTANCE_DIM: usize = 24;

pub fn check_instance_dim(n: usize) -> Result<()> {
    if n % 2 == 1 || !(MIN_INSTANCE_DIM..=MAX_INSTANCE_DIM).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "instance dimension must be even and in {MIN_INSTANCE_DIM}..={MAX_INSTANCE_DIM}, got {n}"
        )));
    }
    Ok(())
}

pub fn sample_psf<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PartialSpreadFunction> {
    check_instance_dim(n)?;
    let spread = Arc::new(sample_spread(n / 2, rng)?);
    PartialSpreadFunction::new(sample_partial_spread(spread, rng)?)
}

/// Samples a spread, D and offset; yes gives (f, g), no gives (−f, g).
pub fn sample_instance<R: Rng + ?Sized>(n: usize, label: Label, rng: &mut R) -> Result<ForrelationInstance> {
    Ok(ForrelationInstance::new(sample_psf(n, rng)?, label))
}

/// Evaluates a hidden instance, counting each fresh (point, side) pair once.
#[derive(Debug)]
pub struct OracleHandle {
    instance: Arc<ForrelationInstance>,
    seen: Mutex<HashSet<(u64, Side)>>,
    queries: AtomicU64,
}

impl OracleHandle {
    pub fn new(instance: Arc<ForrelationInstance>) -> Self {
        Self { instance, seen: Mutex::new(HashSet::new()), queries: AtomicU64::new(0) }
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn query(&self, x: &BitVector, side: Side) -> Result<i8> {
        if x.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: x.n() });
        }
        if self.seen.lock().expect("oracle lock").insert((x.bits(), side)) {
            self.queries.fetch_add(1, Ordering::Relaxed);
        }
        Ok(self.instance.eval(x, side))
    }

    pub fn query_f(&self, x: &BitVector) -> Result<i8> {
        self.query(x, Side::F)
    }

    pub fn query_g(&self, y: &BitVector) -> Result<i8> {
        self.query(y, Side::G)
    }

    pub fn count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Query-set cap for [`tv_distance_oracle`]; 32 covers both full tables at n = 4.
pub const TV_QUERY_LIMIT: usize = 32;

/// Exact comparison of yes/no transcript distributions at n = 4.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TvReport {
    /// Unconditional total variation distance.
    pub tv: BigRational,
    /// Distance after conditioning on no collision and no offset hit.
    pub conditional_tv: BigRational,
    /// Probability of the conditioning event (the same under both labels).
    pub event_probability: BigRational,
    /// Whether the conditioned yes and no distributions have the same support.
    pub conditional_support_equal: bool,
    /// Instances enumerated per label.
    pub instances_per_label: u64,
}

/// Per-transcript counts under (yes, no).
type Histogram = BTreeMap<u64, (u64, u64)>;

/// Exhaustive total variation distance between the transcript distributions
/// of yes and no instances at n = 4, over all 56 spreads × 10 choices of D ×
/// 15 offsets per label, each weighted equally.
///
/// The conditioning event excludes instances where an f-query hits the offset,
/// two distinct f-queries shift into the same spread member, or two distinct
/// nonzero g-queries fall in the same dual member.
pub fn tv_distance_oracle(n: usize, queries: &[(BitVector, Side)]) -> Result<TvReport> {
    if n != 4 {
        return Err(Error::OutOfRange(format!("exhaustive oracle supports n = 4 only, got {n}")));
    }
    if queries.len() > TV_QUERY_LIMIT {
        return Err(Error::OutOfRange(format!("{} queries exceed the cap of {TV_QUERY_LIMIT}", queries.len())));
    }
    if let Some((q, _)) = queries.iter().find(|(q, _)| q.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: q.n() });
    }
    let spreads = enumerate_spreads(4)?;
    let per_spread: Vec<(Histogram, Histogram, u64)> =
        spreads.par_iter().map(|s| tally_spread(s, queries)).collect::<Result<Vec<_>>>()?;

    let (mut all, mut cond, mut total) = (Histogram::new(), Histogram::new(), 0u64);
    let mut event = 0u64;
    for (a, c, t) in per_spread {
        total += t;
        merge(&mut all, a);
        event += c.values().map(|v| v.0).sum::<u64>();
        merge(&mut cond, c);
    }
    let tv = distance(&all, total, total);
    let conditional_tv = if event == 0 { BigRational::zero() } else { distance(&cond, event, event) };
    let conditional_support_equal = cond.values().all(|&(y, n)| (y == 0) == (n == 0));
    Ok(TvReport {
        tv,
        conditional_tv,
        event_probability: BigRational::new(event.into(), total.into()),
        conditional_support_equal,
        instances_per_label: total,
    })
}

fn merge(into: &mut Histogram, from: Histogram) {
    for (k, (y, n)) in from {
        let e = into.entry(k).or_default();
        e.0 += y;
        e.1 += n;
    }
}

/// ½ Σ_r |yes(r)/ty − no(r)/tn|.
fn distance(h: &Histogram, ty: u64, tn: u64) -> BigRational {
    let mut sum = BigRational::zero();
    for &(y, n) in h.values() {
        let d = BigRational::new(y.into(), ty.into()) - BigRational::new(n.into(), tn.into());
        sum += d.abs();
    }
    sum / BigRational::from_integer(2.into())
}

fn tally_spread(spread: &Spread, queries: &[(BitVector, Side)]) -> Result<(Histogram, Histogram, u64)> {
    let spread = Arc::new(spread.clone());
    let offset0 = BitVector::new(4, 1)?;
    let base = PartialSpreadFunction::new(PartialSpread::new(spread.clone(), vec![0, 1], offset0)?)?;
    let (mut all, mut cond, mut total) = (Histogram::new(), Histogram::new(), 0u64);
    for d in index_subsets(spread.len(), 2) {
        for a in 1u64..16 {
            let psf =
                base.with_partial_spread(PartialSpread::new(spread.clone(), d.clone(), BitVector::new(4, a)?)?)?;
            let clean = no_collision_or_hit(&psf, queries);
            for label in [Label::Yes, Label::No] {
                let inst = ForrelationInstance::new(psf.clone(), label);
                let key = queries
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, (x, side))| acc | (((inst.eval(x, *side) < 0) as u64) << i));
                let bump = |h: &mut Histogram| {
                    let e = h.entry(key).or_default();
                    match label {
                        Label::Yes => e.0 += 1,
                        Label::No => e.1 += 1,
                    }
                };
                bump(&mut all);
                if clean {
                    bump(&mut cond);
                }
            }
            total += 1;
        }
    }
    Ok((all, cond, total))
}

/// True when no f-query hits the offset and no bucket on either side holds
/// two distinct nonzero (shifted, for f) query points.
pub fn no_collision_or_hit(psf: &PartialSpreadFunction, queries: &[(BitVector, Side)]) -> bool {
    let a = psf.offset().bits();
    let mut f_seen: Vec<(usize, u64)> = Vec::new();
    let mut g_seen: Vec<(usize, u64)> = Vec::new();
    for (x, side) in queries {
        let w = x.bits();
        let (bucket, point, seen) = match side {
            Side::F => {
                if w == a {
                    return false;
                }
                (psf.owner_word(w ^ a), w ^ a, &mut f_seen)
            }
            Side::G => (psf.dual_owner_word(w), w, &mut g_seen),
        };
        let Some(b) = bucket else { continue };
        if seen.iter().any(|&(ob, op)| ob == b && op != point) {
            return false;
        }
        seen.push((b, point));
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use num_traits::One;

    fn q(x: u64, side: Side) -> (BitVector, Side) {
        (BitVector::new(4, x).unwrap(), side)
    }

    #[test]
    fn forr_is_plus_minus_one_on_samples() {
        let mut rng = rng_from_seed(30);
        for n in [4, 6, 8] {
            for _ in 0..10 {
                let yes = sample_instance(n, Label::Yes, &mut rng).unwrap();
                assert_eq!(forr(&yes.f_table().unwrap(), &yes.g_table().unwrap()).unwrap(), BigRational::one());
                let no = yes.relabeled(Label::No);
                assert_eq!(forr(&no.f_table().unwrap(), &no.g_table().unwrap()).unwrap(), -BigRational::one());
                assert_eq!(yes.g_table().unwrap(), no.g_table().unwrap());
            }
        }
    }

    #[test]
    fn forr_bounds_and_antisymmetry_on_random_tables() {
        let mut rng = rng_from_seed(31);
        for _ in 0..100 {
            let n = 2 * rng.random_range(1..=4);
            let rand_table = |rng: &mut crate::seed::TrialRng| {
                SignTable::new(n, (0..1 << n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).unwrap()
            };
            let (f, g) = (rand_table(&mut rng), rand_table(&mut rng));
            let v = forr(&f, &g).unwrap();
            assert!(v.abs() <= BigRational::one());
            assert_eq!(forr(&f.negated(), &g).unwrap(), -v);
        }
        let odd = SignTable::constant(3, 1).unwrap();
        assert!(forr(&odd, &odd).is_err());
        assert!(forr(&SignTable::constant(2, 1).unwrap(), &SignTable::constant(4, 1).unwrap()).is_err());
    }

    #[test]
    fn dual_oracle_values() {
        let mut rng = rng_from_seed(32);
        for _ in 0..50 {
            let psf = sample_psf(6, &mut rng).unwrap();
            let g = dual_oracle(&psf);
            assert_eq!(g(&BitVector::zero(6).unwrap()), 1);
            let spectrum = wht(&psf.sign_table().unwrap()).unwrap();
            for y in 0..64u64 {
                let y = BitVector::new(6, y).unwrap();
                // 2^m·f̂(y) = numerator·2^m / 2^n = numerator / 2^m.
                assert_eq!(g(&y) as i64 * 8, spectrum.numerator(&y));
            }
            let a = psf.offset();
            for &j in psf.partial_spread().selected() {
                for y in psf.dual().subspace(j).elements().unwrap().into_iter().filter(|y| !y.is_zero()) {
                    assert_eq!(g(&y), if a.dot(&y) { 1 } else { -1 });
                }
            }
        }
    }

    #[test]
    fn g_flip_design_is_detected_by_one_query() {
        let mut rng = rng_from_seed(33);
        let inst = sample_instance(6, Label::Yes, &mut rng).unwrap();
        let zero = BitVector::zero(6).unwrap();
        assert_eq!(inst.g(&zero), 1);
        assert_eq!(inst.relabeled(Label::No).g(&zero), 1);
        // The rejected design negates g instead of f; g(0) then reads the label.
        let flipped = inst.g_table().unwrap().negated();
        assert_eq!(flipped.get(&zero), -1);
        assert_eq!(forr(&inst.f_table().unwrap(), &flipped).unwrap(), -BigRational::one());
    }

    #[test]
    fn sample_instance_dimension_guard() {
        let mut rng = rng_from_seed(34);
        assert!(sample_instance(5, Label::Yes, &mut rng).is_err());
        assert!(sample_instance(2, Label::Yes, &mut rng).is_err());
        assert!(sample_instance(26, Label::Yes, &mut rng).is_err());
    }

    #[test]
    fn oracle_handle_counts_fresh_pairs() {
        let mut rng = rng_from_seed(35);
        let inst = Arc::new(sample_instance(4, Label::No, &mut rng).unwrap());
        let h = OracleHandle::new(inst.clone());
        let x = BitVector::new(4, 3).unwrap();
        assert_eq!(h.query_f(&x).unwrap(), inst.f(&x));
        h.query_f(&x).unwrap();
        h.query_g(&x).unwrap();
        assert_eq!(h.count(), 2);
        assert!(h.query_f(&BitVector::zero(6).unwrap()).is_err());
    }

    #[test]
    fn export_round_trip() {
        let mut rng = rng_from_seed(36);
        let inst = sample_instance(6, Label::No, &mut rng).unwrap();
        let hidden = inst.export(false).unwrap();
        assert!(hidden.hidden.is_none());
        let (f, g) = hidden.tables().unwrap();
        assert_eq!(f, inst.f_table().unwrap());
        assert_eq!(g, inst.g_table().unwrap());
        let text = serde_json::to_string(&inst.export(true).unwrap()).unwrap();
        let back: InstanceExport = serde_json::from_str(&text).unwrap();
        let rebuilt = back.to_instance().unwrap();
        assert_eq!(rebuilt.label(), Label::No);
        assert_eq!(rebuilt.f_table().unwrap(), inst.f_table().unwrap());
        assert!(hidden.to_instance().is_err());
    }

    #[test]
    fn tv_oracle_trivial_cases() {
        let empty = tv_distance_oracle(4, &[]).unwrap();
        assert!(empty.tv.is_zero());
        assert_eq!(empty.instances_per_label, 56 * 10 * 15);
        let mut full: Vec<_> = (0..16).map(|x| q(x, Side::F)).collect();
        full.extend((0..16).map(|x| q(x, Side::G)));
        assert_eq!(tv_distance_oracle(4, &full).unwrap().tv, BigRational::one());
        assert!(tv_distance_oracle(6, &[]).is_err());
        assert!(tv_distance_oracle(4, &vec![q(0, Side::F); 33]).is_err());
    }

    #[test]
    fn tv_oracle_single_queries() {
        // g alone does not depend on the label.
        let g_only = tv_distance_oracle(4, &[q(5, Side::G)]).unwrap();
        assert!(g_only.tv.is_zero() && g_only.conditional_tv.is_zero());
        // One f-query off the offset lands in D with probability 2/5, so the
        // sign is −1 w.p. 2/5 under yes and 3/5 under no.
        let f_one = tv_distance_oracle(4, &[q(3, Side::F)]).unwrap();
        assert_eq!(f_one.conditional_tv, BigRational::new(1.into(), 5.into()));
        assert!(f_one.conditional_support_equal);
        assert_eq!(f_one.event_probability, BigRational::new(14.into(), 15.into()));
    }
}
