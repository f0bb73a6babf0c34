use std::collections::HashSet;

use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::{GameKind, GameView, Query, Response, Transcript};
use crate::bent::SignTable;
use crate::error::{Error, Result};
use crate::forrelation::{forr, Label, Side};
use crate::gf2::{mask, random_subspace, BitVector};

/// A query strategy. Nonadaptive games call [`Adversary::plan`] once;
/// adaptive games call [`Adversary::next_query`] with the transcript so far.
pub trait Adversary: Send {
    fn name(&self) -> &'static str;

    fn next_query(&mut self, view: &GameView, history: &Transcript, rng: &mut dyn RngCore) -> Option<Query>;

    /// The full query list, fixed before any answer is seen.
    fn plan(&mut self, view: &GameView, rng: &mut dyn RngCore) -> Result<Vec<Query>> {
        let empty = Transcript::default();
        let mut out = Vec::new();
        while out.len() < view.budget {
            match self.next_query(view, &empty, rng) {
                Some(q) => out.push(q),
                None => break,
            }
        }
        Ok(out)
    }

    /// Game 1 verdict; a fair coin unless overridden.
    fn guess(&mut self, _view: &GameView, _history: &Transcript, rng: &mut dyn RngCore) -> Label {
        if rng.random::<bool>() {
            Label::Yes
        } else {
            Label::No
        }
    }
}

/// Names accepted by [`adversary_by_name`].
pub fn builtin_adversaries() -> &'static [&'static str] {
    &["random-distinct", "pair-sum", "within-subspace", "full-table"]
}

pub fn adversary_by_name(name: &str) -> Result<Box<dyn Adversary>> {
    Ok(match name {
        "random-distinct" => Box::new(RandomDistinct::default()),
        "pair-sum" => Box::new(PairSum::default()),
        "within-subspace" => Box::new(WithinSubspace::default()),
        "full-table" => Box::new(FullTable::default()),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "unknown adversary {name:?}; expected one of {:?}",
                builtin_adversaries()
            )))
        }
    })
}

/// Side for the i-th query of a point strategy: Game 1 alternates f and g.
fn side_for(view: &GameView, i: usize) -> Option<Side> {
    (view.game == GameKind::One).then(|| if i.is_multiple_of(2) { Side::F } else { Side::G })
}

/// Uniform fresh queries, never repeating a (point, side) pair.
#[derive(Debug, Default)]
pub struct RandomDistinct {
    seen: HashSet<(u64, Option<Side>)>,
}

impl Adversary for RandomDistinct {
    fn name(&self) -> &'static str {
        "random-distinct"
    }

    fn next_query(&mut self, view: &GameView, _: &Transcript, rng: &mut dyn RngCore) -> Option<Query> {
        let points = 1u128 << view.n;
        let capacity = if view.game == GameKind::One { 2 * points } else { points };
        if self.seen.len() as u128 >= capacity {
            return None;
        }
        loop {
            let x = rng.random::<u64>() & mask(view.n);
            let side = match view.game {
                GameKind::One => Some(if rng.random::<bool>() { Side::F } else { Side::G }),
                _ => None,
            };
            if self.seen.insert((x, side)) {
                return Some(Query { point: BitVector::from_word(view.n, x), side });
            }
        }
    }
}

/// Triples x, y, x ⊕ y of fresh nonzero points, so every third query lies in
/// the span of the two before it.
#[derive(Debug, Default)]
pub struct PairSum {
    seen: HashSet<u64>,
    pending: Vec<u64>,
    issued: usize,
}

impl PairSum {
    fn fresh_triple(&mut self, n: usize, rng: &mut dyn RngCore) -> Option<[u64; 3]> {
        let space = 1u128 << n;
        for _ in 0..1000 {
            if self.seen.len() as u128 + 3 > space {
                return None;
            }
            let x = rng.random::<u64>() & mask(n);
            let y = rng.random::<u64>() & mask(n);
            let z = x ^ y;
            let distinct = x != 0 && y != 0 && x != y;
            if distinct && ![x, y, z].iter().any(|p| self.seen.contains(p)) {
                self.seen.extend([x, y, z]);
                return Some([x, y, z]);
            }
        }
        None
    }
}

impl Adversary for PairSum {
    fn name(&self) -> &'static str {
        "pair-sum"
    }

    fn next_query(&mut self, view: &GameView, _: &Transcript, rng: &mut dyn RngCore) -> Option<Query> {
        if self.pending.is_empty() {
            let [x, y, z] = self.fresh_triple(view.n, rng)?;
            self.pending = vec![z, y, x];
        }
        let w = self.pending.pop()?;
        let q = Query { point: BitVector::from_word(view.n, w), side: side_for(view, self.issued) };
        self.issued += 1;
        Some(q)
    }
}

/// The nonzero points of one random m-dimensional subspace in random order,
/// then uniform fresh points.
#[derive(Debug, Default)]
pub struct WithinSubspace {
    order: Option<Vec<u64>>,
    seen: HashSet<u64>,
    issued: usize,
}

impl Adversary for WithinSubspace {
    fn name(&self) -> &'static str {
        "within-subspace"
    }

    fn next_query(&mut self, view: &GameView, _: &Transcript, rng: &mut dyn RngCore) -> Option<Query> {
        let order = self.order.get_or_insert_with(|| {
            let v = random_subspace(view.n, view.m, rng).expect("valid dimensions");
            let mut pts = Vec::with_capacity(1 << view.m);
            v.for_each_word(|w| {
                if w != 0 {
                    pts.push(w);
                }
            });
            pts.shuffle(rng);
            pts.reverse();
            pts
        });
        let w = match order.pop() {
            Some(w) => w,
            None => {
                if self.seen.len() as u128 >= 1u128 << view.n {
                    return None;
                }
                loop {
                    let w = rng.random::<u64>() & mask(view.n);
                    if !self.seen.contains(&w) {
                        break w;
                    }
                }
            }
        };
        self.seen.insert(w);
        let q = Query { point: BitVector::from_word(view.n, w), side: side_for(view, self.issued) };
        self.issued += 1;
        Some(q)
    }
}

/// Every point, in order. In Game 1 it reads both full truth tables and
/// guesses from the sign of the forrelation.
#[derive(Debug, Default)]
pub struct FullTable {
    next: u128,
}

impl Adversary for FullTable {
    fn name(&self) -> &'static str {
        "full-table"
    }

    fn next_query(&mut self, view: &GameView, _: &Transcript, _: &mut dyn RngCore) -> Option<Query> {
        let points = 1u128 << view.n;
        let i = self.next;
        self.next += 1;
        match view.game {
            GameKind::One if i < 2 * points => {
                let side = if i < points { Side::F } else { Side::G };
                Some(Query::on(BitVector::from_word(view.n, (i % points) as u64), side))
            }
            GameKind::One => None,
            _ if i < points => Some(Query::point(BitVector::from_word(view.n, i as u64))),
            _ => None,
        }
    }

    fn guess(&mut self, view: &GameView, history: &Transcript, rng: &mut dyn RngCore) -> Label {
        let len = 1usize << view.n;
        let (mut f, mut g) = (vec![0i8; len], vec![0i8; len]);
        for e in &history.entries {
            let x = e.query.point.bits() as usize;
            match e.response {
                Response::Value { side: Side::F, value } => f[x] = value,
                Response::Value { side: Side::G, value } => g[x] = value,
                Response::Values { f: fv, g: gv } => {
                    f[x] = fv;
                    g[x] = gv;
                }
                _ => {}
            }
        }
        let tables = SignTable::new(view.n, f).and_then(|f| Ok((f, SignTable::new(view.n, g)?)));
        match tables.and_then(|(f, g)| forr(&f, &g)) {
            Ok(v) if v.is_positive() => Label::Yes,
            Ok(v) if v.is_negative() => Label::No,
            _ => {
                if rng.random::<bool>() {
                    Label::Yes
                } else {
                    Label::No
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::SubspaceBasis;
    use crate::seed::rng_from_seed;

    fn view(game: GameKind, n: usize, budget: usize) -> GameView {
        GameView { n, m: n / 2, game, k: 2, budget, adaptive: false }
    }

    #[test]
    fn random_distinct_never_repeats() {
        let mut rng = rng_from_seed(50);
        let v = view(GameKind::Two, 4, 16);
        let plan = RandomDistinct::default().plan(&v, &mut rng).unwrap();
        assert_eq!(plan.len(), 16);
        let uniq: HashSet<_> = plan.iter().map(|q| q.point).collect();
        assert_eq!(uniq.len(), 16);
        let v1 = view(GameKind::One, 4, 40);
        let plan = RandomDistinct::default().plan(&v1, &mut rng).unwrap();
        assert_eq!(plan.len(), 32);
    }

    #[test]
    fn pair_sum_third_query_in_span() {
        let mut rng = rng_from_seed(51);
        let v = view(GameKind::Two, 12, 30);
        let plan = PairSum::default().plan(&v, &mut rng).unwrap();
        assert_eq!(plan.len(), 30);
        for t in plan.chunks(3) {
            assert_eq!(t[0].point ^ t[1].point, t[2].point);
            let span = SubspaceBasis::span_words(12, [t[0].point.bits(), t[1].point.bits()]);
            assert_eq!(span.dim(), 2);
            assert!(span.contains(&t[2].point).unwrap());
        }
    }

    #[test]
    fn within_subspace_stays_in_one_subspace() {
        let mut rng = rng_from_seed(52);
        let v = view(GameKind::Two, 8, 15);
        let plan = WithinSubspace::default().plan(&v, &mut rng).unwrap();
        let span = SubspaceBasis::span_words(8, plan.iter().map(|q| q.point.bits()));
        assert_eq!(span.dim(), 4);
        assert!(plan.iter().all(|q| !q.point.is_zero()));
    }

    #[test]
    fn catalog_resolves() {
        for name in builtin_adversaries() {
            assert_eq!(adversary_by_name(name).unwrap().name(), *name);
        }
        assert!(adversary_by_name("oracle").is_err());
    }
}
