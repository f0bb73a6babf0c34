use rand::Rng;

use super::{GameConfig, GameKind, Query, Response};
use crate::error::{Error, Result};
use crate::forrelation::{sample_instance, ForrelationInstance, Label, Side};

/// Holds the hidden instance for one game and answers queries against it.
#[derive(Clone, Debug)]
pub struct Assigner {
    cfg: GameConfig,
    instance: ForrelationInstance,
    used: usize,
}

/// Samples the hidden instance up front: a uniform label, then a spread, D and offset.
pub fn new_assigner<R: Rng + ?Sized>(cfg: &GameConfig, rng: &mut R) -> Result<Assigner> {
    cfg.validate()?;
    let label = if rng.random::<bool>() { Label::Yes } else { Label::No };
    let instance = sample_instance(cfg.n, label, rng)?;
    Ok(Assigner { cfg: cfg.clone(), instance, used: 0 })
}

pub fn answer_query(a: &mut Assigner, q: &Query) -> Result<Response> {
    a.answer(q)
}

impl Assigner {
    /// Wraps a given instance, for replaying fixed scenarios.
    pub fn with_instance(cfg: &GameConfig, instance: ForrelationInstance) -> Result<Self> {
        cfg.validate()?;
        if instance.n() != cfg.n {
            return Err(Error::DimensionMismatch { expected: cfg.n, found: instance.n() });
        }
        Ok(Self { cfg: cfg.clone(), instance, used: 0 })
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn instance(&self) -> &ForrelationInstance {
        &self.instance
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.cfg.budget - self.used
    }

    /// Budget units a query consumes.
    pub fn cost(&self, q: &Query) -> usize {
        match (self.cfg.game, q.side) {
            (GameKind::One, None) => 2,
            _ => 1,
        }
    }

    pub fn answer(&mut self, q: &Query) -> Result<Response> {
        if q.point.n() != self.cfg.n {
            return Err(Error::DimensionMismatch { expected: self.cfg.n, found: q.point.n() });
        }
        let cost = self.cost(q);
        if cost > self.remaining() {
            return Err(Error::BudgetExhausted(self.cfg.budget));
        }
        self.used += cost;
        Ok(self.respond(q))
    }

    pub(crate) fn respond(&self, q: &Query) -> Response {
        let inst = &self.instance;
        if self.cfg.game == GameKind::One {
            return match q.side {
                Some(side) => Response::Value { side, value: inst.eval(&q.point, side) },
                None => Response::Values { f: inst.eval(&q.point, Side::F), g: inst.eval(&q.point, Side::G) },
            };
        }
        let psf = inst.psf();
        match psf.primal_bucket(&q.point) {
            None => Response::OffsetHit,
            Some(i) => {
                Response::Buckets { f: (i + 1) as u16, g: psf.dual_bucket(&q.point).map_or(0, |j| (j + 1) as u16) }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitVector;
    use crate::seed::{rng_from_seed, trial_rng};

    #[test]
    fn same_seed_same_instance() {
        let cfg = GameConfig::new(GameKind::Two, 8, 4, 9);
        let a = new_assigner(&cfg, &mut rng_from_seed(1)).unwrap();
        let b = new_assigner(&cfg, &mut rng_from_seed(1)).unwrap();
        assert_eq!(a.instance().f_table().unwrap(), b.instance().f_table().unwrap());
        assert_eq!(a.instance().psf().offset(), b.instance().psf().offset());
        assert_eq!(a.instance().label(), b.instance().label());
    }

    #[test]
    fn buckets_cover_each_nonzero_point_once() {
        let cfg = GameConfig::new(GameKind::Two, 8, 4, 0);
        let a = new_assigner(&cfg, &mut rng_from_seed(2)).unwrap();
        let psf = a.instance().psf();
        let (spread, dual) = (psf.spread(), psf.dual());
        for x in 1u64..256 {
            let v = BitVector::new(8, x).unwrap();
            let f_hits: Vec<_> = (0..spread.len()).filter(|&i| spread.subspace(i).contains(&v).unwrap()).collect();
            let g_hits: Vec<_> = (0..dual.len()).filter(|&i| dual.subspace(i).contains(&v).unwrap()).collect();
            assert_eq!(f_hits.len(), 1);
            assert_eq!(g_hits.len(), 1);
            let shifted = v ^ psf.offset();
            assert_eq!(psf.dual_bucket(&v), Some(g_hits[0]));
            if !shifted.is_zero() {
                assert_eq!(psf.primal_bucket(&v), spread.locate(&shifted));
            }
        }
        assert!(spread.validate().passed() && dual.validate().passed());
    }

    #[test]
    fn game1_label_is_balanced() {
        let cfg = GameConfig::new(GameKind::One, 4, 1, 0);
        let trials = 10_000;
        let yes = (0..trials)
            .filter(|&i| new_assigner(&cfg, &mut trial_rng(3, i)).unwrap().instance().label() == Label::Yes)
            .count();
        assert!((yes as f64 / trials as f64 - 0.5).abs() < 0.02, "{yes}");
    }

    #[test]
    fn responses() {
        let cfg = GameConfig::new(GameKind::Two, 12, 16, 0);
        let mut a = new_assigner(&cfg, &mut rng_from_seed(4)).unwrap();
        let off = a.instance().psf().offset();
        assert_eq!(a.answer(&Query::point(off)).unwrap(), Response::OffsetHit);
        let zero = BitVector::zero(12).unwrap();
        match a.answer(&Query::point(zero)).unwrap() {
            Response::Buckets { f, g } => {
                assert_eq!(g, 0);
                assert!((1..=65).contains(&f));
            }
            r => panic!("unexpected {r:?}"),
        }

        let cfg1 = GameConfig::new(GameKind::One, 6, 3, 0);
        let mut a1 = new_assigner(&cfg1, &mut rng_from_seed(5)).unwrap();
        let x = BitVector::new(6, 13).unwrap();
        let inst = a1.instance().clone();
        assert_eq!(a1.answer(&Query::on(x, Side::F)).unwrap(), Response::Value { side: Side::F, value: inst.f(&x) });
        assert_eq!(a1.answer(&Query::point(x)).unwrap(), Response::Values { f: inst.f(&x), g: inst.g(&x) });
        assert_eq!(a1.answer(&Query::on(x, Side::G)), Err(Error::BudgetExhausted(3)));
    }
}
