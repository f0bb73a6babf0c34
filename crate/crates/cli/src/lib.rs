//! Experiment runner behind the `forr` binary.
//!
//! Every subcommand produces a [`Report`]: the parsed configuration, the tool
//! version, the master seed with the derivation used for per-trial seeds, the
//! results and the wall-clock time. Results depend only on the configuration,
//! so two runs with the same seed agree byte for byte outside `wall_clock_seconds`.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use forrelation_core::analysis::{
    birthday_collision_probability, completion_counts_2col, count_subspaces_brute, eligible_completion_count_g4,
    gaussian_binomial, norm_p, pairwise_completion_count, ratio_r_2col, ratio_r_kcol, telescoping_closed_form,
    telescoping_product, EligibleCount,
};
use forrelation_core::bent::{is_bent, wht};
use forrelation_core::forrelation::{forr, sample_instance, sample_psf, Label};
use forrelation_core::games::{adversary_by_name, run_trials, GameConfig, GameKind, TrialStats};
use forrelation_core::gsp::{gsp_experiment, log_log_slope};
use forrelation_core::seed::{derive_seed, trial_rng};
use forrelation_core::ExactRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const REPORT_SCHEMA: &str = "forr-report";
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Default output directory when `--output` is not given.
pub const OUTPUT_DIR_ENV: &str = "FORR_OUTPUT_DIR";
/// Trial seeds echoed in the seed chain.
const ECHOED_SEEDS: u64 = 4;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "forr", version, about = "Extremal Forrelation instances, collision games and GSP recovery")]
pub struct Cli {
    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,

    /// Master seed; trial i uses derive_seed(seed, i).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Report path. Defaults to $FORR_OUTPUT_DIR/<subcommand>-<seed>.<ext>, else stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Sample one Forrelation instance and export its truth tables.
    GenInstance(GenInstanceArgs),
    /// Check bentness of sampled partial-spread functions by exact WHT.
    VerifyBent(InstancesArgs),
    /// Compute forr(f, g) exactly for sampled yes and no instances.
    Forrelation(InstancesArgs),
    /// Play repeated collision games against a built-in adversary.
    PlayGame(PlayGameArgs),
    /// Sweep a collision game over several budgets.
    CollisionExperiment(SweepArgs),
    /// Evaluate a counting formula or bound exactly.
    Count(CountArgs),
    /// Recover hidden subgroups and summarize query counts.
    GspExperiment(GspArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenInstance(_) => "gen-instance",
            Command::VerifyBent(_) => "verify-bent",
            Command::Forrelation(_) => "forrelation",
            Command::PlayGame(_) => "play-game",
            Command::CollisionExperiment(_) => "collision-experiment",
            Command::Count(_) => "count",
            Command::GspExperiment(_) => "gsp-experiment",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelArg {
    Yes,
    No,
}

impl From<LabelArg> for Label {
    fn from(l: LabelArg) -> Label {
        match l {
            LabelArg::Yes => Label::Yes,
            LabelArg::No => Label::No,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenInstanceArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = LabelArg::Yes)]
    pub label: LabelArg,
    /// Include the spread, D and offset in the export.
    #[arg(long)]
    pub reveal: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InstancesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub instances: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GameArgs {
    /// Game number: 1, 2, 3 or 4.
    #[arg(long, default_value_t = 2)]
    pub game: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "random-distinct")]
    pub adversary: String,
    /// Collision order (Game 4).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Game 4 constant in k < c1·√m.
    #[arg(long, default_value_t = forrelation_core::games::DEFAULT_C1)]
    pub c1: f64,
    /// Let the adversary adapt (Game 4; Game 3 is always adaptive).
    #[arg(long)]
    pub adaptive: bool,
    /// Permit budgets at or above (2^m + 1)/4.
    #[arg(long)]
    pub allow_large_budget: bool,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PlayGameArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub game: GameArgs,
    /// Query budget ℓ.
    #[arg(long = "ell")]
    pub ell: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub game: GameArgs,
    /// Comma-separated budgets.
    #[arg(long = "ells", value_delimiter = ',', required = true)]
    pub ells: Vec<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// (n choose k)_p, needs n, k, p.
    Gaussian,
    /// Brute-force subspace count, needs n, k, p.
    Brute,
    /// Completion counts, needs m, t.
    Completion,
    /// Pairwise ratio R, needs m, t.
    RatioR,
    /// k-collision ratio R, needs m, k, t.
    RatioRk,
    /// Telescoping product and closed form, needs m.
    Telescoping,
    /// ‖P‖ₖᵏ, needs m, ell, z0, z1, k.
    NormP,
    /// Game 4 eligible completions, needs m, k, ell.
    Eligible,
    /// Pairwise eligible completions, needs m, ell.
    Pairwise,
    /// Birthday collision probability, needs bins, ell.
    Birthday,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CountArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z1: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GspArgs {
    #[arg(long, default_value_t = 2)]
    pub p: u64,
    /// Comma-separated dimensions; two or more add a log-log slope fit.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedChain {
    pub master: u64,
    pub derivation: String,
    /// The first few per-trial seeds, for spot checks.
    pub trial_seeds: Vec<u64>,
}

impl SeedChain {
    fn new(master: u64, trials: u64) -> Self {
        Self {
            master,
            derivation: "derive_seed(master, i) = splitmix64(master ^ splitmix64(i + 0x9E3779B97F4A7C15)); \
                         trial i uses ChaCha8 seeded with it"
                .into(),
            trial_seeds: (0..trials.min(ECHOED_SEEDS)).map(|i| derive_seed(master, i)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub seed_chain: SeedChain,
    pub results: Value,
    pub wall_clock_seconds: f64,
}

impl Report {
    /// Everything except the wall-clock time, serialized.
    pub fn reproducible_fields(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v.as_object_mut().expect("report is an object").remove("wall_clock_seconds");
        Ok(serde_json::to_string(&v)?)
    }
}

/// One row of a game sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GamePoint {
    pub n: usize,
    pub ell: usize,
    pub win_rate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub median_queries: f64,
}

/// One row of a GSP sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GspPoint {
    pub p: u64,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_queries: f64,
    pub mean_queries: f64,
    pub q25: f64,
    pub q75: f64,
}

pub fn run(cli: &Cli) -> Result<Report> {
    let started = Instant::now();
    let seed = cli.seed;
    let (results, trials) = match &cli.command {
        Command::GenInstance(a) => (gen_instance(a, seed)?, 1),
        Command::VerifyBent(a) => (verify_bent(a, seed)?, a.instances as u64),
        Command::Forrelation(a) => (forrelation(a, seed)?, a.instances as u64),
        Command::PlayGame(a) => (play_game(a, seed)?, a.game.trials as u64),
        Command::CollisionExperiment(a) => (collision_experiment(a, seed)?, a.game.trials as u64),
        Command::Count(a) => (count(a)?, 0),
        Command::GspExperiment(a) => (gsp(a, seed)?, a.trials as u64),
    };
    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        schema_version: REPORT_SCHEMA_VERSION,
        tool: "forr".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        config: serde_json::to_value(cli)?,
        seed_chain: SeedChain::new(seed, trials),
        results,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs the command and writes the report where `--output` or the
/// environment points; returns the path written, or `None` for stdout.
pub fn execute(cli: &Cli) -> Result<Option<PathBuf>> {
    let report = run(cli)?;
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let kind = TableKind::for_command(&report.command)
                .with_context(|| format!("csv output is not available for {}", report.command))?;
            emit_scaling_table(kind, std::slice::from_ref(&report))?
        }
    };
    let path = match (&cli.output, std::env::var_os(OUTPUT_DIR_ENV)) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            let ext = match cli.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            Some(Path::new(&dir).join(format!("{}-{}.{ext}", report.command, cli.seed)))
        }
        (None, None) => None,
    };
    match &path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write report to {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    /// Columns n, ell, win_rate, stderr, trials.
    GameSweep,
    /// Columns p, n, k, median_queries, q25, q75.
    GspSweep,
}

impl TableKind {
    pub fn for_command(command: &str) -> Option<Self> {
        match command {
            "play-game" | "collision-experiment" => Some(TableKind::GameSweep),
            "gsp-experiment" => Some(TableKind::GspSweep),
            _ => None,
        }
    }

    fn header(self) -> &'static [&'static str] {
        match self {
            TableKind::GameSweep => &["n", "ell", "win_rate", "stderr", "trials"],
            TableKind::GspSweep => &["p", "n", "k", "median_queries", "q25", "q75"],
        }
    }
}

/// Long-format CSV of the sweep points in `reports`, one row per point.
/// Every report must be of `kind`; an empty list yields the header alone.
pub fn emit_scaling_table(kind: TableKind, reports: &[Report]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(kind.header())?;
    for r in reports {
        if TableKind::for_command(&r.command) != Some(kind) {
            bail!("heterogeneous reports: {} does not belong in a {kind:?} table", r.command);
        }
        let points = r.results.get("points").cloned().context("report has no sweep points")?;
        match kind {
            TableKind::GameSweep => {
                for p in serde_json::from_value::<Vec<GamePoint>>(points)? {
                    w.serialize((p.n, p.ell, p.win_rate, p.stderr, p.trials))?;
                }
            }
            TableKind::GspSweep => {
                for p in serde_json::from_value::<Vec<GspPoint>>(points)? {
                    w.serialize((p.p, p.n, p.k, p.median_queries, p.q25, p.q75))?;
                }
            }
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn gen_instance(a: &GenInstanceArgs, seed: u64) -> Result<Value> {
    let inst = sample_instance(a.n, a.label.into(), &mut trial_rng(seed, 0))?;
    Ok(serde_json::to_value(inst.export(a.reveal)?)?)
}

fn verify_bent(a: &InstancesArgs, seed: u64) -> Result<Value> {
    let mut items = Vec::with_capacity(a.instances);
    for i in 0..a.instances as u64 {
        let psf = sample_psf(a.n, &mut trial_rng(seed, i))?;
        let spectrum = wht(&psf.sign_table()?)?;
        let max_abs = spectrum.numerators().iter().map(|v| v.abs()).max().unwrap_or(0);
        items.push(json!({ "index": i, "bent": is_bent(&spectrum), "max_abs_numerator": max_abs }));
    }
    let passed = items.iter().filter(|v| v["bent"] == true).count();
    Ok(json!({ "n": a.n, "instances": a.instances, "passed": passed, "items": items }))
}

/// Instance i is a yes instance for even i, a no instance for odd i.
fn forrelation(a: &InstancesArgs, seed: u64) -> Result<Value> {
    let mut items = Vec::with_capacity(a.instances);
    for i in 0..a.instances as u64 {
        let label = if i % 2 == 0 { Label::Yes } else { Label::No };
        let inst = sample_instance(a.n, label, &mut trial_rng(seed, i))?;
        let v = forr(&inst.f_table()?, &inst.g_table()?)?;
        items.push(json!({ "index": i, "label": label, "forr": v.to_string() }));
    }
    Ok(json!({ "n": a.n, "instances": a.instances, "items": items }))
}

fn game_config(a: &GameArgs, ell: usize, seed: u64) -> Result<GameConfig> {
    let game = GameKind::try_from(a.game)?;
    let mut cfg =
        GameConfig::new(game, a.n, ell, seed).with_k(a.k).with_c1(a.c1).with_large_budget(a.allow_large_budget);
    if a.adaptive {
        cfg = cfg.with_adaptive(true);
    }
    cfg.validate()?;
    adversary_by_name(&a.adversary)?;
    Ok(cfg)
}

fn play(a: &GameArgs, cfg: &GameConfig) -> Result<TrialStats> {
    let name = a.adversary.clone();
    let (stats, _) = run_trials(cfg, || adversary_by_name(&name).expect("name checked"), a.trials)?;
    Ok(stats)
}

fn point(cfg: &GameConfig, stats: &TrialStats) -> GamePoint {
    GamePoint {
        n: cfg.n,
        ell: cfg.budget,
        win_rate: stats.win_rate,
        stderr: stats.stderr,
        trials: stats.trials,
        median_queries: stats.median_queries,
    }
}

fn play_game(a: &PlayGameArgs, seed: u64) -> Result<Value> {
    let cfg = game_config(&a.game, a.ell, seed)?;
    let stats = play(&a.game, &cfg)?;
    Ok(json!({ "game": cfg, "stats": stats, "points": [point(&cfg, &stats)] }))
}

/// Budget j of the sweep draws its trials from master seed derive_seed(seed, j).
fn collision_experiment(a: &SweepArgs, seed: u64) -> Result<Value> {
    let mut points = Vec::with_capacity(a.ells.len());
    for (j, &ell) in a.ells.iter().enumerate() {
        let cfg = game_config(&a.game, ell, derive_seed(seed, j as u64))?;
        let stats = play(&a.game, &cfg)?;
        points.push(point(&cfg, &stats));
    }
    Ok(json!({ "game": a.game.game, "adversary": a.game.adversary, "points": points }))
}

/// Dimension j of the sweep uses master seed derive_seed(seed, j).
fn gsp(a: &GspArgs, seed: u64) -> Result<Value> {
    let mut points = Vec::with_capacity(a.n.len());
    for (j, &n) in a.n.iter().enumerate() {
        let s = gsp_experiment(a.p, n, a.k, a.trials, derive_seed(seed, j as u64))?;
        points.push(GspPoint {
            p: s.p,
            n: s.n,
            k: s.k,
            trials: s.trials,
            successes: s.successes,
            median_queries: s.median_queries,
            mean_queries: s.mean_queries,
            q25: s.q25,
            q75: s.q75,
        });
    }
    let slope = (points.len() >= 2).then(|| {
        let xy: Vec<(f64, f64)> =
            points.iter().map(|p| ((p.p as f64).powi((p.n - p.k) as i32), p.median_queries)).collect();
        log_log_slope(&xy)
    });
    Ok(json!({ "points": points, "log_log_slope": slope }))
}

fn need<T: Copy>(v: Option<T>, name: &str, formula: Formula) -> Result<T> {
    v.with_context(|| format!("formula {formula:?} needs --{name}"))
}

fn exact(v: &ExactRational) -> Value {
    json!({ "value": v.to_string(), "approx": v.to_f64() })
}

fn integer(v: impl Display) -> Value {
    json!({ "value": v.to_string() })
}

fn eligible(c: &EligibleCount) -> Value {
    json!({
        "forbidden": c.forbidden.to_string(),
        "smallest_factor": c.smallest_factor().to_string(),
        "positive": c.is_positive(),
        "value": c.count.as_ref().map(|v| v.to_string()),
    })
}

fn count(a: &CountArgs) -> Result<Value> {
    let f = a.formula;
    let value = match f {
        Formula::Gaussian => integer(gaussian_binomial(need(a.n, "n", f)?, need(a.k, "k", f)?, need(a.p, "p", f)?)?),
        Formula::Brute => integer(count_subspaces_brute(need(a.n, "n", f)?, need(a.k, "k", f)?, need(a.p, "p", f)?)?),
        Formula::Completion => {
            let c = completion_counts_2col(need(a.m, "m", f)?, need(a.t, "t", f)?)?;
            json!({
                "through_x": c.through_x.to_string(),
                "through_x_orthogonal": c.through_x_orthogonal.to_string(),
                "avoiding_member": c.avoiding_member.to_string(),
                "avoiding_t_forbidden": c.avoiding_t_forbidden.to_string(),
            })
        }
        Formula::RatioR => exact(&ratio_r_2col(need(a.m, "m", f)?, need(a.t, "t", f)?)?),
        Formula::RatioRk => exact(&ratio_r_kcol(need(a.m, "m", f)?, need(a.k, "k", f)?, need(a.t, "t", f)?)?),
        Formula::Telescoping => {
            let m = need(a.m, "m", f)?;
            json!({
                "product": exact(&telescoping_product::<ExactRational>(m)),
                "closed_form": exact(&telescoping_closed_form::<ExactRational>(m)),
            })
        }
        Formula::NormP => {
            let k = need(a.k, "k", f)? as u32;
            exact(&norm_p::<ExactRational>(
                need(a.m, "m", f)?,
                need(a.ell, "ell", f)?,
                need(a.z0, "z0", f)?,
                need(a.z1, "z1", f)?,
                k,
            )?)
        }
        Formula::Eligible => {
            eligible(&eligible_completion_count_g4(need(a.m, "m", f)?, need(a.k, "k", f)?, need(a.ell, "ell", f)?)?)
        }
        Formula::Pairwise => eligible(&pairwise_completion_count(need(a.m, "m", f)?, need(a.ell, "ell", f)?)?),
        Formula::Birthday => {
            exact(&birthday_collision_probability(need(a.bins, "bins", f)?, need(a.ell, "ell", f)? as u64))
        }
    };
    Ok(json!({ "formula": f, "result": value }))
}
