//! Games 1–4: a concrete hidden-instance assigner, pluggable adversaries,
//! transcripts, win detection and the yes/no swap.
//!
//! Game 1 answers sign queries on f or g. Games 2–4 answer each query point
//! with the pair of bucket indices (spread member holding x ⊕ a, dual member
//! holding x), 1-based, with 0 for the zero point on the dual side. The
//! adversary wins a bucket game by querying the offset or by placing k
//! linearly independent points in one bucket (shifted points on the f side).

mod adversary;
mod assigner;
mod engine;
mod swap;
mod win;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forrelation::{check_instance_dim, Label, Side};
use crate::gf2::BitVector;

pub use adversary::{
    adversary_by_name, builtin_adversaries, Adversary, FullTable, PairSum, RandomDistinct, WithinSubspace,
};
pub use assigner::{answer_query, new_assigner, Assigner};
pub use engine::{run_game, run_trials, TrialRecord, TrialStats};
pub use swap::{replay, swap_to_opposite_instance};
pub use win::{detect_win, verify_witness, CollisionTracker, Win};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum GameKind {
    /// Sign queries, then a yes/no guess.
    One,
    /// Nonadaptive pairwise collision game.
    Two,
    /// Adaptive pairwise collision game.
    Three,
    /// k-collision game.
    Four,
}

impl GameKind {
    pub fn number(self) -> u8 {
        match self {
            GameKind::One => 1,
            GameKind::Two => 2,
            GameKind::Three => 3,
            GameKind::Four => 4,
        }
    }

    pub fn is_bucket_game(self) -> bool {
        self != GameKind::One
    }
}

impl TryFrom<u8> for GameKind {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(GameKind::One),
            2 => Ok(GameKind::Two),
            3 => Ok(GameKind::Three),
            4 => Ok(GameKind::Four),
            _ => Err(Error::InvalidConfig(format!("game must be 1, 2, 3 or 4, got {v}"))),
        }
    }
}

impl From<GameKind> for u8 {
    fn from(g: GameKind) -> u8 {
        g.number()
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "game {}", self.number())
    }
}

pub const DEFAULT_C1: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n: usize,
    pub game: GameKind,
    /// Collision order; 2 for Games 2 and 3.
    pub k: usize,
    /// Query budget ℓ.
    pub budget: usize,
    pub adaptive: bool,
    pub seed: u64,
    /// Game 4 requires k < c1·√m.
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Lifts the ℓ < (2^m + 1)/4 cap, for scaling runs past the analyzed regime.
    #[serde(default)]
    pub allow_large_budget: bool,
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

impl GameConfig {
    pub fn new(game: GameKind, n: usize, budget: usize, seed: u64) -> Self {
        Self {
            n,
            game,
            k: 2,
            budget,
            adaptive: game == GameKind::Three,
            seed,
            c1: DEFAULT_C1,
            allow_large_budget: false,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    pub fn with_adaptive(mut self, adaptive: bool) -> Self {
        self.adaptive = adaptive;
        self
    }

    pub fn with_large_budget(mut self, allow: bool) -> Self {
        self.allow_large_budget = allow;
        self
    }

    pub fn m(&self) -> usize {
        self.n / 2
    }

    /// Whether ℓ < (2^m + 1)/4.
    pub fn budget_within_bound(&self) -> bool {
        (4 * self.budget as u128) < (1u128 << self.m()) + 1
    }

    pub fn validate(&self) -> Result<()> {
        check_instance_dim(self.n).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget ℓ must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("collision order k = {} must be at least 2", self.k)));
        }
        match self.game {
            GameKind::Two | GameKind::Three if self.k != 2 => {
                return Err(Error::InvalidConfig(format!("{} uses k = 2, got k = {}", self.game, self.k)))
            }
            GameKind::Two if self.adaptive => return Err(Error::InvalidConfig("game 2 is nonadaptive".into())),
            GameKind::Three if !self.adaptive => return Err(Error::InvalidConfig("game 3 is adaptive".into())),
            GameKind::Four if self.k as f64 >= self.c1 * (self.m() as f64).sqrt() => {
                return Err(Error::InvalidConfig(format!(
                    "game 4 needs k < c1·√m: k = {}, c1 = {}, m = {}",
                    self.k,
                    self.c1,
                    self.m()
                )))
            }
            _ => {}
        }
        if self.game.is_bucket_game() && !self.allow_large_budget && !self.budget_within_bound() {
            return Err(Error::InvalidConfig(format!(
                "budget ℓ = {} violates the bound ℓ < (2^m + 1)/4 = {}/4 for m = {}",
                self.budget,
                (1u64 << self.m()) + 1,
                self.m()
            )));
        }
        Ok(())
    }

    pub fn view(&self) -> GameView {
        GameView { n: self.n, m: self.m(), game: self.game, k: self.k, budget: self.budget, adaptive: self.adaptive }
    }
}

/// The public parameters an adversary sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameView {
    pub n: usize,
    pub m: usize,
    pub game: GameKind,
    pub k: usize,
    pub budget: usize,
    pub adaptive: bool,
}

/// A query point. In Game 1 `side` picks the oracle (`None` asks both and
/// costs two queries); bucket games ignore it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub point: BitVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

impl Query {
    pub fn point(point: BitVector) -> Self {
        Self { point, side: None }
    }

    pub fn on(point: BitVector, side: Side) -> Self {
        Self { point, side: Some(side) }
    }

    pub fn touches(&self, side: Side) -> bool {
        self.side.is_none_or(|s| s == side)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Value {
        side: Side,
        value: i8,
    },
    Values {
        f: i8,
        g: i8,
    },
    /// 1-based member indices; `g = 0` for the zero point.
    Buckets {
        f: u16,
        g: u16,
    },
    OffsetHit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(flatten)]
    pub query: Query,
    pub response: Response,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, query: Query, response: Response) {
        self.entries.push(TranscriptEntry { query, response });
    }

    pub fn queries(&self) -> impl Iterator<Item = &Query> {
        self.entries.iter().map(|e| &e.query)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    OffsetHit,
    FCollision,
    GCollision,
    BudgetExhausted,
    CorrectGuess,
    WrongGuess,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cause::OffsetHit => "offset-hit",
            Cause::FCollision => "f-side k-collision",
            Cause::GCollision => "g-side k-collision",
            Cause::BudgetExhausted => "budget-exhausted",
            Cause::CorrectGuess => "correct-guess",
            Cause::WrongGuess => "wrong-guess",
        })
    }
}

/// Evidence for a bucket-game win, checkable against the hidden instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Offset {
        point: BitVector,
    },
    /// Query points (unshifted) whose images in `bucket` are independent.
    Collision {
        side: Side,
        bucket: u16,
        points: Vec<BitVector>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub won: bool,
    pub cause: Cause,
    pub queries: usize,
    pub witness: Option<Witness>,
    pub guess: Option<Label>,
    pub label: Label,
    pub transcript: Transcript,
}
