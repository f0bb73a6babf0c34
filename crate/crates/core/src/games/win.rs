use std::collections::HashMap;

use super::{Cause, Response, Transcript, Witness};
use crate::error::{Error, Result};
use crate::forrelation::{ForrelationInstance, Side};
use crate::gf2::{insert_reduced, BitVector, SubspaceBasis};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Win {
    pub cause: Cause,
    pub witness: Witness,
}

#[derive(Clone, Debug, Default)]
struct BucketSpan {
    basis: Vec<u64>,
    /// Query points that raised the rank, in arrival order.
    points: Vec<u64>,
}

/// Per-bucket span of the points seen so far; reports the first bucket whose
/// rank reaches `k`.
#[derive(Clone, Debug)]
pub struct CollisionTracker {
    n: usize,
    k: usize,
    f: HashMap<u16, BucketSpan>,
    g: HashMap<u16, BucketSpan>,
}

impl CollisionTracker {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, k, f: HashMap::new(), g: HashMap::new() }
    }

    /// Adds `image` to the span of `bucket`; `point` is kept for the witness.
    fn record(&mut self, side: Side, bucket: u16, point: u64, image: u64) -> Option<Win> {
        if bucket == 0 {
            return None;
        }
        let map = match side {
            Side::F => &mut self.f,
            Side::G => &mut self.g,
        };
        let span = map.entry(bucket).or_default();
        if !insert_reduced(&mut span.basis, image) {
            return None;
        }
        span.points.push(point);
        (span.basis.len() >= self.k).then(|| Win {
            cause: match side {
                Side::F => Cause::FCollision,
                Side::G => Cause::GCollision,
            },
            witness: Witness::Collision {
                side,
                bucket,
                points: span.points.iter().map(|&p| BitVector::from_word(self.n, p)).collect(),
            },
        })
    }

    /// Feeds one bucket-mode response. The f-side image is the shifted point.
    pub fn observe(&mut self, x: &BitVector, offset: &BitVector, response: &Response) -> Result<Option<Win>> {
        match *response {
            Response::OffsetHit => Ok(Some(Win { cause: Cause::OffsetHit, witness: Witness::Offset { point: *x } })),
            Response::Buckets { f, g } => {
                if x == offset {
                    return Ok(Some(Win { cause: Cause::OffsetHit, witness: Witness::Offset { point: *x } }));
                }
                if let Some(w) = self.record(Side::F, f, x.bits(), x.bits() ^ offset.bits()) {
                    return Ok(Some(w));
                }
                Ok(self.record(Side::G, g, x.bits(), x.bits()))
            }
            Response::Value { .. } | Response::Values { .. } => Err(Error::ValueModeTranscript),
        }
    }
}

/// Scans a bucket-mode transcript for the first win: an offset query, or `k`
/// points in one bucket whose images (x ⊕ a on the f side, x on the g side)
/// are linearly independent.
pub fn detect_win(t: &Transcript, k: usize, offset: &BitVector) -> Result<Option<Win>> {
    let mut tracker = CollisionTracker::new(offset.n(), k);
    for e in &t.entries {
        if let Some(w) = tracker.observe(&e.query.point, offset, &e.response)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Rechecks a witness against the hidden instance.
pub fn verify_witness(inst: &ForrelationInstance, witness: &Witness, k: usize) -> bool {
    let psf = inst.psf();
    let a = psf.offset();
    match witness {
        Witness::Offset { point } => *point == a,
        Witness::Collision { side, bucket, points } => {
            if points.len() < k || *bucket == 0 {
                return false;
            }
            let member = *bucket as usize - 1;
            let images: Vec<BitVector> = match side {
                Side::F => points.iter().map(|p| *p ^ a).collect(),
                Side::G => points.clone(),
            };
            let (spread, in_bucket) = match side {
                Side::F => (psf.spread(), images.iter().all(|x| psf.primal_bucket(&(*x ^ a)) == Some(member))),
                Side::G => (psf.dual(), images.iter().all(|y| psf.dual_bucket(y) == Some(member))),
            };
            let contained = images.iter().all(|x| spread.subspace(member).contains(x).unwrap_or(false));
            let rank = SubspaceBasis::span_words(inst.n(), images.iter().map(|x| x.bits())).dim();
            in_bucket && contained && rank >= k
        }
    }
}
