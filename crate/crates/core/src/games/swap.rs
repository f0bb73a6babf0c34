use std::collections::BTreeSet;

use super::{Query, Response, Transcript};
use crate::error::{Error, Result};
use crate::forrelation::{ForrelationInstance, Side};

/// Builds an instance of the opposite label that answers every query of `t`
/// with the same values, by exchanging D-members touched on the f side with
/// untouched D̄-members (and vice versa). Spread and offset are kept, so
/// bucket answers are unchanged as well.
///
/// Fails when an f-query hits the offset, when two distinct points share a
/// bucket on one side, when one member is touched from both sides (its
/// membership in D must then both flip and stay), or when too few untouched
/// members remain to restore |D| = 2^{m−1}.
pub fn swap_to_opposite_instance(inst: &ForrelationInstance, t: &Transcript) -> Result<ForrelationInstance> {
    let psf = inst.psf();
    let a = psf.offset();
    let members = psf.spread().len();
    let mut f_touched: Vec<(usize, u64)> = Vec::new();
    let mut g_touched: Vec<(usize, u64)> = Vec::new();
    for q in t.queries() {
        if q.point.n() != inst.n() {
            return Err(Error::DimensionMismatch { expected: inst.n(), found: q.point.n() });
        }
        if q.touches(Side::F) {
            if q.point == a {
                return Err(Error::SwapPrecondition(format!("offset {} was queried", q.point)));
            }
            let i = psf.primal_bucket(&q.point).expect("point differs from offset");
            note(&mut f_touched, i, q.point.bits() ^ a.bits(), "f")?;
        }
        if q.touches(Side::G) {
            if let Some(j) = psf.dual_bucket(&q.point) {
                note(&mut g_touched, j, q.point.bits(), "g")?;
            }
        }
    }
    let f_set: BTreeSet<usize> = f_touched.iter().map(|&(i, _)| i).collect();
    let g_set: BTreeSet<usize> = g_touched.iter().map(|&(j, _)| j).collect();
    if let Some(i) = f_set.intersection(&g_set).next() {
        return Err(Error::SwapPrecondition(format!("member {} is touched by both f- and g-queries", i + 1)));
    }
    let ps = psf.partial_spread();
    let target = ps.selected().len();
    // Touched f-members flip membership; touched g-members keep it.
    let mut next: BTreeSet<usize> = f_set.iter().copied().filter(|&i| !ps.is_selected(i)).collect();
    next.extend(g_set.iter().copied().filter(|&j| ps.is_selected(j)));
    if next.len() > target {
        return Err(Error::SwapPrecondition(format!("{} members are forced into D but |D| = {target}", next.len())));
    }
    let free: Vec<usize> = (0..members).filter(|i| !f_set.contains(i) && !g_set.contains(i)).collect();
    // Prefer untouched members already in D, then the lowest-indexed others.
    let (kept, rest): (Vec<usize>, Vec<usize>) = free.iter().partition(|&&i| ps.is_selected(i));
    for i in kept.into_iter().chain(rest) {
        if next.len() == target {
            break;
        }
        next.insert(i);
    }
    if next.len() < target {
        return Err(Error::SwapPrecondition(format!(
            "only {} untouched members available to fill |D| = {target}",
            free.len()
        )));
    }
    let swapped = psf.with_selected(next.into_iter().collect())?;
    Ok(ForrelationInstance::new(swapped, inst.label().opposite()))
}

/// Records that `bucket` received the image `point`; a second distinct image is a collision.
fn note(seen: &mut Vec<(usize, u64)>, bucket: usize, point: u64, side: &str) -> Result<()> {
    if seen.iter().any(|&(b, p)| b == bucket && p != point) {
        return Err(Error::SwapPrecondition(format!("{side}-side collision in member {}", bucket + 1)));
    }
    seen.push((bucket, point));
    Ok(())
}

/// Answers the queries of `t` against `inst` in value mode: sign values for
/// sided queries, both values for unsided ones.
pub fn replay(inst: &ForrelationInstance, t: &Transcript) -> Transcript {
    let mut out = Transcript::default();
    for q in t.queries() {
        let response = match q.side {
            Some(side) => Response::Value { side, value: inst.eval(&q.point, side) },
            None => Response::Values { f: inst.f(&q.point), g: inst.g(&q.point) },
        };
        out.push(Query { point: q.point, side: q.side }, response);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forrelation::{sample_instance, Label};
    use crate::gf2::BitVector;
    use crate::seed::rng_from_seed;

    #[test]
    fn empty_transcript_swaps_freely() {
        let inst = sample_instance(4, Label::Yes, &mut rng_from_seed(40)).unwrap();
        let t = Transcript::default();
        let s = swap_to_opposite_instance(&inst, &t).unwrap();
        assert_eq!(s.label(), Label::No);
        assert_eq!(replay(&s, &t), replay(&inst, &t));
    }

    #[test]
    fn single_query_swaps_with_identical_reply() {
        let mut rng = rng_from_seed(41);
        for _ in 0..50 {
            let inst = sample_instance(4, Label::No, &mut rng).unwrap();
            let a = inst.psf().offset();
            for x in 0..16u64 {
                let x = BitVector::new(4, x).unwrap();
                for side in [Side::F, Side::G] {
                    let mut t = Transcript::default();
                    t.push(Query::on(x, side), Response::Value { side, value: inst.eval(&x, side) });
                    let r = swap_to_opposite_instance(&inst, &t);
                    if side == Side::F && x == a {
                        assert!(matches!(r, Err(Error::SwapPrecondition(_))));
                        continue;
                    }
                    let s = r.unwrap();
                    assert_eq!(s.label(), Label::Yes);
                    assert_eq!(replay(&s, &t), replay(&inst, &t));
                }
            }
        }
    }

    #[test]
    fn cross_side_conflict_is_reported() {
        let mut rng = rng_from_seed(42);
        let inst = sample_instance(6, Label::Yes, &mut rng).unwrap();
        let psf = inst.psf();
        let a = psf.offset();
        // Pick an f-query and a g-query landing in the same member index.
        let x = (0..64u64).map(|w| BitVector::new(6, w).unwrap()).find(|x| *x != a).unwrap();
        let i = psf.primal_bucket(&x).unwrap();
        let y = psf.dual().subspace(i).rows().next().unwrap();
        let mut t = Transcript::default();
        t.push(Query::on(x, Side::F), Response::Value { side: Side::F, value: inst.f(&x) });
        t.push(Query::on(y, Side::G), Response::Value { side: Side::G, value: inst.g(&y) });
        let err = swap_to_opposite_instance(&inst, &t).unwrap_err();
        assert!(err.to_string().contains("both"), "{err}");
    }

    #[test]
    fn collision_is_reported() {
        let mut rng = rng_from_seed(43);
        let inst = sample_instance(6, Label::Yes, &mut rng).unwrap();
        let psf = inst.psf();
        let a = psf.offset();
        let member = psf.spread().subspace(0).elements().unwrap();
        let mut t = Transcript::default();
        for p in member.iter().filter(|p| !p.is_zero()).take(2) {
            let x = *p ^ a;
            t.push(Query::on(x, Side::F), Response::Value { side: Side::F, value: inst.f(&x) });
        }
        assert!(swap_to_opposite_instance(&inst, &t).unwrap_err().to_string().contains("collision"));
    }

    #[test]
    fn swapped_instance_is_bent_and_extremal() {
        let mut rng = rng_from_seed(44);
        let inst = sample_instance(8, Label::Yes, &mut rng).unwrap();
        let mut t = Transcript::default();
        let x = BitVector::new(8, 77).unwrap();
        if x != inst.psf().offset() {
            t.push(Query::point(x), Response::Values { f: inst.f(&x), g: inst.g(&x) });
        }
        if let Ok(s) = swap_to_opposite_instance(&inst, &t) {
            let v = crate::forrelation::forr(&s.f_table().unwrap(), &s.g_table().unwrap()).unwrap();
            assert_eq!(v, -num_rational::BigRational::from_integer(1.into()));
            assert_eq!(s.psf().partial_spread().selected().len(), 8);
        }
    }
}
