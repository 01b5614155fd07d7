//! File-driven scenario runs.
//!
//! A scenario is a JSON document with a `kind`, a `seed`, an `output` file
//! prefix and kind-specific `parameters`. Running one produces a set of named
//! output files in memory; nothing is written until the whole run succeeded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::games::{
    build_commons_payoff, dominant_action, equilibria, Action, GameSpec, PayoffMatrix2x2, Player,
};
use crate::ledger::{Ledger, UserId};
use crate::lifecycle::content_hash;
use crate::market::{open_market, MarketId, Outcome, DEFAULT_LIQUIDITY};
use crate::netchain::{
    parse_chain_export, state_hash, verify_chain, Chain, ChainError, PeerSet, Transaction, TxKind,
    TxPool, VerifyReport,
};
use crate::protocol::{ProtocolConfig, ProtocolState};
use crate::rational::Rational;
use crate::strategies::population::sign_test_p_value;
use crate::strategies::{
    closed_form_payoffs, cooperation_check, cooperation_threshold_population,
    discounted_average_payoff, play_match, run_population, DiscountFactor, PopulationConfig,
    PopulationReport, StrategyAutomaton,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario kind `{actual}` cannot run under `{verb}` (expects {expected})")]
    WrongKind {
        verb: String,
        actual: String,
        expected: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn invalid(msg: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid(msg.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    GameAnalysis,
    RepeatedGameSweep,
    PopulationRun,
    ProtocolRun,
    MarketDemo,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::GameAnalysis => "game-analysis",
            ScenarioKind::RepeatedGameSweep => "repeated-game-sweep",
            ScenarioKind::PopulationRun => "population-run",
            ScenarioKind::ProtocolRun => "protocol-run",
            ScenarioKind::MarketDemo => "market-demo",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub output: String,
    pub parameters: Value,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if s.output.is_empty() || s.output.contains(['/', '\\']) {
            return Err(invalid(
                "field `output` must be a plain, non-empty file prefix",
            ));
        }
        Ok(s)
    }

    /// Rejects scenarios whose kind is not in `allowed`; an empty list allows all.
    pub fn expect_kind(&self, verb: &str, allowed: &[ScenarioKind]) -> Result<(), ScenarioError> {
        if allowed.is_empty() || allowed.contains(&self.kind) {
            return Ok(());
        }
        let expected: Vec<_> = allowed.iter().map(|k| k.name()).collect();
        Err(ScenarioError::WrongKind {
            verb: verb.to_string(),
            actual: self.kind.name().to_string(),
            expected: expected.join(" or "),
        })
    }

    fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ScenarioError> {
        serde_json::from_value(self.parameters.clone())
            .map_err(|e| ScenarioError::Invalid(format!("field `parameters`: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    pub parallel: bool,
}

/// Named output files of a run, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScenarioOutput {
    pub files: Vec<(String, String)>,
}

impl ScenarioOutput {
    fn add(&mut self, name: String, contents: String) {
        self.files.push((name, contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), ScenarioError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| ScenarioError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(io(&path))?;
        }
        Ok(())
    }
}

pub fn run_scenario(
    scenario: &Scenario,
    opts: RunOptions,
) -> Result<ScenarioOutput, ScenarioError> {
    let seed = opts.seed_override.unwrap_or(scenario.seed);
    match scenario.kind {
        ScenarioKind::GameAnalysis => run_game_analysis(scenario),
        ScenarioKind::RepeatedGameSweep => run_sweep(scenario),
        ScenarioKind::PopulationRun => run_population_scenario(scenario, seed, opts.parallel),
        ScenarioKind::ProtocolRun => run_protocol_demo(scenario).map(|(out, _)| out),
        ScenarioKind::MarketDemo => run_market_demo(scenario),
    }
}

fn two_player(game: &GameSpec) -> Result<PayoffMatrix2x2, ScenarioError> {
    game.matrix()
        .map_err(invalid)?
        .ok_or_else(|| invalid("this scenario needs a two-player game, not `commons`"))
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("scenario outputs serialize");
    s.push('\n');
    s
}

// ---- game analysis -------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameAnalysisParams {
    game: GameSpec,
}

fn run_game_analysis(scenario: &Scenario) -> Result<ScenarioOutput, ScenarioError> {
    let params: GameAnalysisParams = scenario.params()?;
    let mut out = ScenarioOutput::default();
    let prefix = &scenario.output;

    if let GameSpec::Commons(p) = &params.game {
        p.validate().map_err(invalid)?;
        let mut csv = String::from("coop_count,payoff_C,payoff_D\n");
        for k in 0..=p.population {
            let c = build_commons_payoff(p, k, Action::C).map_err(invalid)?;
            let d = build_commons_payoff(p, k, Action::D).map_err(invalid)?;
            let _ = writeln!(csv, "{k},{c},{d}");
        }
        out.add(format!("{prefix}_commons.csv"), csv);
        return Ok(out);
    }

    let game = two_player(&params.game)?;
    let mut matrix = String::from("row_action,col_action,row_payoff,col_payoff\n");
    for (r, c) in PayoffMatrix2x2::profiles() {
        let (a, b) = game.cell(r, c);
        let _ = writeln!(matrix, "{r},{c},{a},{b}");
    }
    out.add(format!("{prefix}_matrix.csv"), matrix);

    let eq = equilibria(&game);
    let mut csv = String::from("kind,row,col\n");
    for (r, c) in &eq.pure {
        let _ = writeln!(csv, "pure,{r},{c}");
    }
    if let Some((p, q)) = &eq.mixed {
        let _ = writeln!(csv, "mixed_p_defect,{p},{q}");
    }
    let dom = |p: Player| dominant_action(&game, p).map_or("none".to_string(), |a| a.to_string());
    let _ = writeln!(csv, "dominant,{},{}", dom(Player::Row), dom(Player::Col));
    out.add(format!("{prefix}_equilibria.csv"), csv);
    Ok(out)
}

// ---- repeated-game sweep -------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaRange {
    start: Rational,
    stop: Rational,
    step: Rational,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepParams {
    game: GameSpec,
    deltas: DeltaRange,
    #[serde(default = "default_horizon")]
    horizon: usize,
    /// Adds population thresholds for a population of `N + 1` players.
    #[serde(default)]
    population_n: Option<u64>,
}

fn default_horizon() -> usize {
    500
}

/// Grid points of the range that lie strictly inside (0, 1).
fn delta_grid(range: &DeltaRange) -> Result<Vec<DiscountFactor>, ScenarioError> {
    if !range.step.is_positive() {
        return Err(invalid("field `deltas.step` must be positive"));
    }
    let mut grid = Vec::new();
    let mut d = range.start.clone();
    while d <= range.stop {
        if let Ok(df) = DiscountFactor::from_rational(d.clone()) {
            grid.push(df);
        }
        d = &d + &range.step;
        if grid.len() > 100_000 {
            return Err(invalid("delta range has too many points"));
        }
    }
    if grid.is_empty() {
        return Err(invalid(
            "delta range contains no value strictly between 0 and 1",
        ));
    }
    Ok(grid)
}

fn run_sweep(scenario: &Scenario) -> Result<ScenarioOutput, ScenarioError> {
    let params: SweepParams = scenario.params()?;
    let game = two_player(&params.game)?;
    if params.horizon == 0 {
        return Err(invalid("field `horizon` must be >= 1"));
    }
    let grid = delta_grid(&params.deltas)?;
    let grim = StrategyAutomaton::grim();
    let alld = StrategyAutomaton::all_d();
    let mut csv = String::from(
        "delta,cooperate_payoff,deviate_payoff,sustained,truncated_cooperate,truncated_deviate,truncation_bound",
    );
    let thresholds = match params.population_n {
        Some(n) => Some((
            cooperation_threshold_population(n, false).map_err(invalid)?,
            cooperation_threshold_population(n, true).map_err(invalid)?,
        )),
        None => None,
    };
    if thresholds.is_some() {
        csv.push_str(",population_sustained_private,population_sustained_shared");
    }
    csv.push('\n');

    for delta in &grid {
        let check = cooperation_check(&game, delta).map_err(invalid)?;
        let coop_t =
            discounted_average_payoff(&play_match(&grim, &grim, &game, params.horizon), delta)
                .map_err(invalid)?;
        let dev_t =
            discounted_average_payoff(&play_match(&alld, &grim, &game, params.horizon), delta)
                .map_err(invalid)?;
        let _ = write!(
            csv,
            "{},{},{},{},{},{},{:e}",
            delta.value(),
            check.cooperate.to_f64(),
            check.deviate.to_f64(),
            check.sustained,
            coop_t.value,
            dev_t.value,
            coop_t.truncation_bound.max(dev_t.truncation_bound)
        );
        if let Some((private, shared)) = thresholds {
            let _ = write!(
                csv,
                ",{},{}",
                delta.value() >= private,
                delta.value() >= shared
            );
        }
        csv.push('\n');
    }
    let mut out = ScenarioOutput::default();
    out.add(format!("{}_sweep.csv", scenario.output), csv);
    Ok(out)
}

// ---- population runs -----------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerGroup {
    strategy: String,
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopulationParams {
    game: GameSpec,
    players: Vec<PlayerGroup>,
    delta: DiscountFactor,
    #[serde(default)]
    reputation_visible: bool,
    horizon: usize,
    #[serde(default = "one")]
    runs: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Serialize)]
struct RunSummary {
    seed: u64,
    discounted: Vec<f64>,
    strategy_means: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct SignTest {
    first: String,
    second: String,
    first_higher: u64,
    second_higher: u64,
    ties: u64,
    p_value: f64,
}

/// Runs `config` once per seed; seeds are independent and may run on threads.
pub fn run_population_seeds(
    config: &PopulationConfig,
    game: &PayoffMatrix2x2,
    seeds: &[u64],
    parallel: bool,
) -> Result<Vec<PopulationReport>, ScenarioError> {
    let run = |seed: u64| {
        let cfg = PopulationConfig {
            seed,
            ..config.clone()
        };
        run_population(&cfg, game).map_err(invalid)
    };
    if !parallel || seeds.len() < 2 {
        return seeds.iter().map(|&s| run(s)).collect();
    }
    let workers = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(seeds.len());
    let chunk = seeds.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| run(s)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("population worker panicked"))
            .collect()
    })
}

fn run_population_scenario(
    scenario: &Scenario,
    seed: u64,
    parallel: bool,
) -> Result<ScenarioOutput, ScenarioError> {
    let params: PopulationParams = scenario.params()?;
    let game = two_player(&params.game)?;
    if params.runs == 0 {
        return Err(invalid("field `runs` must be >= 1"));
    }
    let mut strategies = Vec::new();
    for g in &params.players {
        let s = StrategyAutomaton::by_name(&g.strategy).map_err(invalid)?;
        strategies.extend(std::iter::repeat_n(s, g.count));
    }
    let config = PopulationConfig {
        strategies,
        delta: params.delta.clone(),
        reputation_visible: params.reputation_visible,
        seed,
        horizon: params.horizon,
    };
    config.validate().map_err(invalid)?;
    let seeds: Vec<u64> = (0..params.runs).map(|i| seed.wrapping_add(i)).collect();
    let reports = run_population_seeds(&config, &game, &seeds, parallel)?;

    let names: BTreeSet<String> = config.strategies.iter().map(|s| s.name.clone()).collect();
    let runs: Vec<RunSummary> = reports
        .iter()
        .map(|r| RunSummary {
            seed: r.seed,
            discounted: r.discounted.clone(),
            strategy_means: names
                .iter()
                .filter_map(|n| r.mean_discounted(n).map(|m| (n.clone(), m)))
                .collect(),
        })
        .collect();
    let overall: BTreeMap<&String, f64> = names
        .iter()
        .map(|n| {
            (
                n,
                runs.iter().map(|r| r.strategy_means[n]).sum::<f64>() / runs.len() as f64,
            )
        })
        .collect();
    let mut sign_tests = Vec::new();
    let names: Vec<&String> = names.iter().collect();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (mut hi_a, mut hi_b, mut ties) = (0, 0, 0);
            for r in &runs {
                let (x, y) = (r.strategy_means[*a], r.strategy_means[*b]);
                match x.partial_cmp(&y) {
                    Some(std::cmp::Ordering::Greater) => hi_a += 1,
                    Some(std::cmp::Ordering::Less) => hi_b += 1,
                    _ => ties += 1,
                }
            }
            sign_tests.push(SignTest {
                first: (*a).clone(),
                second: (*b).clone(),
                first_higher: hi_a,
                second_higher: hi_b,
                ties,
                p_value: sign_test_p_value(hi_a, hi_b),
            });
        }
    }

    let summary = json!({
        "seed": seed,
        "delta": config.delta.value(),
        "reputation_visible": config.reputation_visible,
        "horizon": config.horizon,
        "strategies": reports[0].strategies,
        "runs": runs,
        "mean_discounted_by_strategy": overall,
        "sign_tests": sign_tests,
    });
    let mut out = ScenarioOutput::default();
    out.add(
        format!("{}_rounds.csv", scenario.output),
        reports[0].to_csv(),
    );
    out.add(
        format!("{}_summary.json", scenario.output),
        to_json(&summary),
    );
    Ok(out)
}

// ---- protocol runs -------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenesisSpec {
    balances: BTreeMap<UserId, u64>,
    #[serde(default)]
    reserve: u64,
    peers: Vec<UserId>,
    #[serde(default)]
    faulty_peers: Vec<UserId>,
    #[serde(default)]
    config: ProtocolConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolParams {
    genesis: GenesisSpec,
    /// Each inner list becomes one block proposal.
    blocks: Vec<Vec<Value>>,
}

/// What happened in a protocol run, beyond the exported files.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolSummary {
    pub blocks_committed: u64,
    pub quorum_failures: Vec<String>,
    pub rejections: Vec<Rejection>,
    pub articles: BTreeMap<String, String>,
    pub aliases: BTreeMap<String, String>,
    pub final_state_hash: String,
    pub ledger_conserved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rejection {
    pub height: u64,
    pub tx_id: u64,
    pub reason: String,
}

/// Turns one step object into a transaction kind, resolving `@alias`
/// article references and recording aliases declared on submissions.
fn step_to_tx(
    step: &Value,
    aliases: &mut BTreeMap<String, String>,
    where_: &str,
) -> Result<(UserId, TxKind), ScenarioError> {
    let mut obj = step
        .as_object()
        .cloned()
        .ok_or_else(|| invalid(format!("{where_}: step must be an object")))?;
    let submitter = obj
        .remove("submitter")
        .and_then(|v| v.as_str().map(UserId::from))
        .ok_or_else(|| invalid(format!("{where_}: missing string field `submitter`")))?;
    let alias = obj.remove("alias");
    for key in ["article", "article_hash"] {
        if let Some(Value::String(s)) = obj.get(key) {
            if let Some(name) = s.strip_prefix('@') {
                let hash = aliases
                    .get(name)
                    .ok_or_else(|| invalid(format!("{where_}: unknown article alias `@{name}`")))?;
                obj.insert(key.to_string(), Value::String(hash.clone()));
            }
        }
    }
    let kind: TxKind = serde_json::from_value(Value::Object(obj))
        .map_err(|e| invalid(format!("{where_}: {e}")))?;
    match (alias, &kind) {
        (Some(Value::String(name)), TxKind::SubmitArticle { meta }) => {
            let hash = content_hash(meta).map_err(|e| invalid(format!("{where_}: {e}")))?;
            aliases.insert(name, hash.0);
        }
        (Some(_), _) => {
            return Err(invalid(format!(
                "{where_}: `alias` only applies to submit_article"
            )))
        }
        (None, _) => {}
    }
    Ok((submitter, kind))
}

/// Runs the configured transactions block by block through the chain.
pub fn run_protocol_demo(
    scenario: &Scenario,
) -> Result<(ScenarioOutput, ProtocolSummary), ScenarioError> {
    let params: ProtocolParams = scenario.params()?;
    let g = params.genesis;
    let ledger = Ledger::genesis(g.balances, g.reserve).map_err(invalid)?;
    let peers = PeerSet::new(g.peers.clone())
        .map_err(invalid)?
        .with_faulty(g.faulty_peers);
    if let Some(unknown) = peers.faulty.iter().find(|f| !peers.peers.contains(f)) {
        return Err(invalid(format!("faulty peer `{unknown}` is not a peer")));
    }
    let genesis = ProtocolState::new(g.config, ledger, g.peers);
    let mut chain = Chain::new(genesis.clone());
    let mut pool = TxPool::new();
    let mut aliases = BTreeMap::new();
    let mut quorum_failures = Vec::new();

    for (b, steps) in params.blocks.iter().enumerate() {
        for (i, step) in steps.iter().enumerate() {
            let where_ = format!("parameters.blocks[{b}][{i}]");
            let (submitter, kind) = step_to_tx(step, &mut aliases, &where_)?;
            let tx = Transaction::new(pool.next_tx_id(), submitter, kind);
            pool.submit(tx)
                .map_err(|e| invalid(format!("{where_}: {e}")))?;
        }
        match chain.produce_block(&mut pool, &peers) {
            Ok(_) | Err(ChainError::EmptyPool) => {}
            Err(e @ ChainError::QuorumFailure { .. }) => quorum_failures.push(e.to_string()),
            Err(e) => return Err(invalid(e)),
        }
    }

    let tip = chain.tip();
    let rejections = chain
        .blocks()
        .iter()
        .flat_map(|b| {
            b.txs.iter().filter_map(move |t| {
                t.rejected.as_ref().map(|r| Rejection {
                    height: b.height,
                    tx_id: t.tx.tx_id,
                    reason: r.clone(),
                })
            })
        })
        .collect();
    let summary = ProtocolSummary {
        blocks_committed: chain.height(),
        quorum_failures,
        rejections,
        articles: tip
            .articles
            .iter()
            .map(|(h, a)| (h.0.clone(), a.state.to_string()))
            .collect(),
        aliases,
        final_state_hash: state_hash(tip),
        ledger_conserved: tip.ledger.is_conserved(),
    };

    let prefix = &scenario.output;
    let mut out = ScenarioOutput::default();
    out.add(format!("{prefix}_chain.jsonl"), chain.export());
    out.add(format!("{prefix}_genesis.json"), to_json(&genesis));
    out.add(format!("{prefix}_ledger.json"), to_json(&tip.ledger));
    out.add(format!("{prefix}_registry.json"), to_json(&tip.registry()));
    let mut events = String::new();
    for e in &tip.market_events {
        let line = json!({
            "tx": e.tx, "user": e.user, "outcome": e.outcome, "shares": e.shares, "cost": e.cost, "market": e.market,
        });
        let _ = writeln!(events, "{line}");
    }
    out.add(format!("{prefix}_market_events.jsonl"), events);
    let mut payouts = String::from("market,user,tokens\n");
    for (id, m) in &tip.markets {
        for (user, tokens) in m.payouts() {
            let _ = writeln!(payouts, "{id},{user},{tokens}");
        }
    }
    out.add(format!("{prefix}_payouts.csv"), payouts);
    out.add(format!("{prefix}_summary.json"), to_json(&summary));
    Ok((out, summary))
}

/// Verifies a chain export against the genesis state it was built from.
pub fn verify_export(chain_jsonl: &str, genesis_json: &str) -> Result<VerifyReport, ScenarioError> {
    let genesis: ProtocolState = serde_json::from_str(genesis_json)
        .map_err(|e| ScenarioError::Parse(format!("genesis: {e}")))?;
    Ok(match parse_chain_export(chain_jsonl) {
        Ok(blocks) => verify_chain(&blocks, &genesis),
        Err(e) => {
            let line = match &e {
                ChainError::Parse { line, .. } => *line as u64,
                _ => 0,
            };
            VerifyReport {
                valid: false,
                divergent_height: Some(line.saturating_sub(1)),
                reason: Some(e.to_string()),
                final_state_hash: String::new(),
            }
        }
    })
}

// ---- market demo ---------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketTradeSpec {
    user: UserId,
    outcome: Outcome,
    shares: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketParams {
    #[serde(default = "default_liquidity")]
    liquidity: Rational,
    balances: BTreeMap<UserId, u64>,
    #[serde(default)]
    reserve: u64,
    trades: Vec<MarketTradeSpec>,
    #[serde(default)]
    resolve: Option<Outcome>,
}

fn default_liquidity() -> Rational {
    Rational::integer(DEFAULT_LIQUIDITY)
}

fn run_market_demo(scenario: &Scenario) -> Result<ScenarioOutput, ScenarioError> {
    let params: MarketParams = scenario.params()?;
    let mut ledger = Ledger::genesis(params.balances, params.reserve).map_err(invalid)?;
    let mut market = open_market(MarketId(0), params.liquidity).map_err(invalid)?;
    let mut events = String::new();
    let mut prices = String::from("tx,price_publish,price_revise,real_cost\n");
    let mut rejected = Vec::new();
    for (tx, t) in params.trades.iter().enumerate() {
        match market.trade(&mut ledger, &t.user, t.outcome, t.shares) {
            Ok(trade) => {
                let line = json!({
                    "tx": tx, "user": trade.user, "outcome": trade.outcome,
                    "shares": trade.shares, "cost": trade.cost,
                });
                let _ = writeln!(events, "{line}");
                let p = market.price(Outcome::Publish).map_err(invalid)?;
                let r = market.price(Outcome::Revise).map_err(invalid)?;
                let _ = writeln!(prices, "{tx},{p},{r},{}", trade.real_cost);
            }
            Err(e) => rejected.push(json!({ "tx": tx, "reason": e.to_string() })),
        }
    }
    let mut payouts = String::from("user,tokens\n");
    if let Some(outcome) = params.resolve {
        for (user, tokens) in market.resolve(&mut ledger, outcome).map_err(invalid)? {
            let _ = writeln!(payouts, "{user},{tokens}");
        }
    }
    let q = market.outstanding();
    let summary = json!({
        "seed": scenario.seed,
        "liquidity": market.liquidity(),
        "outstanding": { "PUBLISH": q[0], "REVISE": q[1] },
        "token_income": market.token_income(),
        "real_income": market.real_income(),
        "max_maker_loss": market.liquidity() * std::f64::consts::LN_2,
        "rejected": rejected,
        "ledger": ledger,
        "ledger_conserved": ledger.is_conserved(),
    });
    let prefix = &scenario.output;
    let mut out = ScenarioOutput::default();
    out.add(format!("{prefix}_events.jsonl"), events);
    out.add(format!("{prefix}_prices.csv"), prices);
    out.add(format!("{prefix}_payouts.csv"), payouts);
    out.add(format!("{prefix}_summary.json"), to_json(&summary));
    Ok(out)
}

/// Closed-form payoffs of the classic automata against each other, as CSV.
pub fn strategy_payoff_table(game: &PayoffMatrix2x2, delta: &DiscountFactor) -> String {
    let all = [
        StrategyAutomaton::all_c(),
        StrategyAutomaton::all_d(),
        StrategyAutomaton::grim(),
    ];
    let mut csv = String::from("strategy_a,strategy_b,payoff_a,payoff_b\n");
    for a in &all {
        for b in &all {
            let (pa, pb) = closed_form_payoffs(a, b, game, delta);
            let _ = writeln!(csv, "{},{},{pa},{pb}", a.name, b.name);
        }
    }
    csv
}
