use std::collections::BTreeMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    new_assigner, verify_witness, Adversary, Cause, CollisionTracker, GameConfig, GameKind, GameOutcome, Query,
    Transcript,
};
use crate::error::{Error, Result};
use crate::forrelation::Label;
use crate::seed::{derive_seed, trial_rng};

/// Plays one game: samples the hidden instance from `rng`, then lets the
/// adversary query until it wins, stops, or runs out of budget.
pub fn run_game(cfg: &GameConfig, adversary: &mut dyn Adversary, rng: &mut dyn RngCore) -> Result<GameOutcome> {
    let mut assigner = new_assigner(cfg, rng)?;
    let view = cfg.view();
    let offset = assigner.instance().psf().offset();
    let label = assigner.instance().label();
    let mut tracker = CollisionTracker::new(cfg.n, cfg.k);
    let mut transcript = Transcript::default();

    let planned: Option<Vec<Query>> = if cfg.adaptive {
        None
    } else {
        let plan = adversary.plan(&view, rng)?;
        let cost: usize = plan.iter().map(|q| assigner.cost(q)).sum();
        if cost > cfg.budget {
            return Err(Error::Protocol(format!("plan costs {cost} queries, budget is {}", cfg.budget)));
        }
        Some(plan)
    };
    let mut planned = planned.map(|p| p.into_iter());

    loop {
        let next = match planned.as_mut() {
            Some(it) => it.next(),
            None => adversary.next_query(&view, &transcript, rng),
        };
        let Some(q) = next else { break };
        if assigner.cost(&q) > assigner.remaining() {
            if cfg.adaptive {
                break;
            }
            return Err(Error::BudgetExhausted(cfg.budget));
        }
        let response = assigner.answer(&q)?;
        transcript.push(q, response);
        if cfg.game.is_bucket_game() {
            if let Some(win) = tracker.observe(&q.point, &offset, &response)? {
                if !verify_witness(assigner.instance(), &win.witness, cfg.k) {
                    return Err(Error::OracleInconsistency("collision witness failed verification".into()));
                }
                return Ok(GameOutcome {
                    won: true,
                    cause: win.cause,
                    queries: assigner.used(),
                    witness: Some(win.witness),
                    guess: None,
                    label,
                    transcript,
                });
            }
        }
    }

    let queries = assigner.used();
    if cfg.game == GameKind::One {
        let guess = adversary.guess(&view, &transcript, rng);
        let won = guess == label;
        return Ok(GameOutcome {
            won,
            cause: if won { Cause::CorrectGuess } else { Cause::WrongGuess },
            queries,
            witness: None,
            guess: Some(guess),
            label,
            transcript,
        });
    }
    Ok(GameOutcome {
        won: false,
        cause: Cause::BudgetExhausted,
        queries,
        witness: None,
        guess: None,
        label,
        transcript,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    pub won: bool,
    pub cause: Cause,
    pub queries: usize,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub wins: usize,
    pub win_rate: f64,
    /// Binomial standard error of `win_rate`.
    pub stderr: f64,
    pub median_queries: f64,
    pub causes: BTreeMap<Cause, usize>,
}

impl TrialStats {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let trials = records.len();
        let wins = records.iter().filter(|r| r.won).count();
        let win_rate = if trials == 0 { 0.0 } else { wins as f64 / trials as f64 };
        let stderr = if trials == 0 { 0.0 } else { (win_rate * (1.0 - win_rate) / trials as f64).sqrt() };
        let mut q: Vec<usize> = records.iter().map(|r| r.queries).collect();
        q.sort_unstable();
        let median_queries = match q.len() {
            0 => 0.0,
            l if l % 2 == 1 => q[l / 2] as f64,
            l => (q[l / 2 - 1] + q[l / 2]) as f64 / 2.0,
        };
        let mut causes = BTreeMap::new();
        for r in records {
            *causes.entry(r.cause).or_insert(0) += 1;
        }
        Self { trials, wins, win_rate, stderr, median_queries, causes }
    }
}

/// Runs `trials` independent games in parallel. Trial `i` draws everything
/// from `trial_rng(cfg.seed, i)`, so results do not depend on thread count.
pub fn run_trials<F>(cfg: &GameConfig, make_adversary: F, trials: usize) -> Result<(TrialStats, Vec<TrialRecord>)>
where
    F: Fn() -> Box<dyn Adversary> + Sync,
{
    cfg.validate()?;
    let records = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, i);
            let mut adv = make_adversary();
            let out = run_game(cfg, adv.as_mut(), &mut rng)?;
            Ok(TrialRecord {
                index: i,
                seed: derive_seed(cfg.seed, i),
                won: out.won,
                cause: out.cause,
                queries: out.queries,
                label: out.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((TrialStats::from_records(&records), records))
}
