//! Acceptance criteria AC1-AC8. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scholarchain::games::{
    build_publication_game, mixed_equilibrium, prisoners_dilemma, pure_equilibria,
    PublicationParams, PublicationProbabilities,
};
use scholarchain::ledger::{CreditSource, EscrowOutcome};
use scholarchain::lifecycle::{content_hash, AuthorRef, ClaimResult, DisputeId, DisputeVote};
use scholarchain::market::{lmsr_price, open_market, MarketId};
use scholarchain::netchain::{parse_chain_export, verify_chain};
use scholarchain::scenario::{run_population_seeds, run_protocol_demo, Scenario};
use scholarchain::strategies::{
    closed_form_payoff, cooperation_sustained, cooperation_threshold_population,
    discounted_average_payoff, play_match, PopulationConfig,
};
use scholarchain::{
    Action, ArticleHash, ArticleState, ContentMetadata, DiscountFactor, Ledger, Market, Outcome,
    PayoffMatrix2x2, ProtocolConfig, ProtocolError, ProtocolState, Rational, StrategyAutomaton,
    UserId,
};

// Tolerances and budgets.
const AC1_BUDGET: Duration = Duration::from_secs(1);
const AC2_TOL: f64 = 1e-10;
const AC2_HORIZON: usize = 500;
const AC4_RUNS: u64 = 1000;
const AC4_ALPHA: f64 = 0.01;
const AC4_BUDGET: Duration = Duration::from_secs(60);
const AC5_SEQUENCES: usize = 10_000;
const AC5_BUDGET: Duration = Duration::from_secs(30);
const AC6_SEQUENCES: usize = 10_000;
const AC7_PRICE_TOL: f64 = 1e-12;
const AC7_PATH_TOL: f64 = 1e-9;
const AC7_SEQUENCES: usize = 1000;
const AC7_ORACLE_COST: f64 = 5.124947951362558;
const AC8_BUDGET: Duration = Duration::from_secs(10);

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn u(s: &str) -> UserId {
    UserId::from(s)
}

fn table2() -> PayoffMatrix2x2 {
    prisoners_dilemma(Rational::integer(2), Rational::integer(1)).unwrap()
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || {
        format!("took {elapsed:?}, budget {budget:?}")
    })
}

// ---- AC1 -------------------------------------------------------------------

fn ac1() -> Check {
    let start = Instant::now();
    let params = |p| PublicationParams {
        reward: Rational::integer(4),
        effort: Rational::integer(1),
        pub_prob: p,
    };
    let t3 = build_publication_game(&params(PublicationProbabilities::biased()))
        .map_err(|e| e.to_string())?;
    let t4 = build_publication_game(&params(PublicationProbabilities::debiased()))
        .map_err(|e| e.to_string())?;
    let expect3 = PayoffMatrix2x2::from_integers([(2, 2), (0, 3), (3, 0), (1, 1)]);
    let expect4 = PayoffMatrix2x2::from_integers([(2, 2), (0, 1), (1, 0), (1, 1)]);
    ensure(t3 == expect3, || format!("table 3 mismatch:\n{t3}"))?;
    ensure(t4 == expect4, || format!("table 4 mismatch:\n{t4}"))?;
    ensure(pure_equilibria(&t3) == [(Action::D, Action::D)], || {
        "table 3 equilibria".into()
    })?;
    ensure(
        pure_equilibria(&t4) == [(Action::C, Action::C), (Action::D, Action::D)],
        || "table 4 equilibria".into(),
    )?;
    let mixed = mixed_equilibrium(&t4);
    ensure(mixed == Some((r(1, 2), r(1, 2))), || {
        format!("table 4 mixed {mixed:?}")
    })?;
    within_budget(start.elapsed(), AC1_BUDGET)?;
    Ok(format!(
        "tables exact, mixed (1/2, 1/2), {:?}",
        start.elapsed()
    ))
}

// ---- AC2 -------------------------------------------------------------------

fn ac2() -> Check {
    let game = table2();
    let grim = StrategyAutomaton::grim();
    let alld = StrategyAutomaton::all_d();
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let delta = DiscountFactor::from_rational(r(k, 10)).map_err(|e| e.to_string())?;
        let coop = closed_form_payoff(&grim, &grim, &game, &delta);
        ensure(coop == Rational::one(), || {
            format!("grim vs grim at {k}/10 = {coop}")
        })?;
        let dev = closed_form_payoff(&alld, &grim, &game, &delta);
        let expect = Rational::integer(2) * (Rational::one() - r(k, 10));
        ensure(dev == expect, || {
            format!("ALLD vs grim at {k}/10 = {dev}, expected {expect}")
        })?;
        let sustained = cooperation_sustained(&game, &delta).map_err(|e| e.to_string())?;
        ensure(sustained == (k >= 5), || {
            format!("cooperation flag wrong at {k}/10")
        })?;
        for (a, b, exact) in [(&grim, &grim, &coop), (&alld, &grim, &dev)] {
            let t = discounted_average_payoff(&play_match(a, b, &game, AC2_HORIZON), &delta)
                .map_err(|e| e.to_string())?;
            let err = (t.value - exact.to_f64()).abs();
            worst = worst.max(err);
            ensure(err <= AC2_TOL, || {
                format!("truncation error {err:e} at {k}/10")
            })?;
        }
    }
    let just_below = DiscountFactor::from_rational(r(49_999, 100_000)).unwrap();
    ensure(!cooperation_sustained(&game, &just_below).unwrap(), || {
        "sustained below 1/2".into()
    })?;
    Ok(format!(
        "exact closed forms, flip at 1/2, max truncation error {worst:e}"
    ))
}

// ---- AC3 -------------------------------------------------------------------

fn ac3() -> Check {
    let half = cooperation_threshold_population(1, false).map_err(|e| e.to_string())?;
    ensure(half == 0.5, || format!("N=1 private threshold {half}"))?;
    for n in 1..=1000u64 {
        let private = cooperation_threshold_population(n, false).map_err(|e| e.to_string())?;
        let expect = 1.0 - 1.0 / (2.0 * n as f64);
        ensure(private == expect, || {
            format!("N={n}: {private} != {expect}")
        })?;
        let shared = cooperation_threshold_population(n, true).map_err(|e| e.to_string())?;
        ensure(shared == 0.5, || {
            format!("N={n}: shared threshold {shared}")
        })?;
    }
    Ok("1 - 1/(2N) for N in 1..=1000, shared 0.5".into())
}

// ---- AC4 -------------------------------------------------------------------

fn ac4() -> Check {
    let start = Instant::now();
    let game = table2();
    let mut strategies = vec![StrategyAutomaton::all_d()];
    strategies.extend(std::iter::repeat_n(StrategyAutomaton::reputation_grim(), 9));
    let seeds: Vec<u64> = (0..AC4_RUNS).collect();
    let mut lines = Vec::new();
    for (delta, defector_should_win) in [(0.9, false), (0.1, true)] {
        let config = PopulationConfig {
            strategies: strategies.clone(),
            delta: DiscountFactor::new(delta).unwrap(),
            reputation_visible: true,
            seed: 0,
            horizon: 300,
        };
        let reports =
            run_population_seeds(&config, &game, &seeds, true).map_err(|e| e.to_string())?;
        let (mut wins, mut losses) = (0u64, 0u64);
        let (mut sum_d, mut sum_c) = (0.0, 0.0);
        for rep in &reports {
            let d = rep.mean_discounted("alld").unwrap();
            let c = rep.mean_discounted("reputation-grim").unwrap();
            sum_d += d;
            sum_c += c;
            if d > c {
                wins += 1;
            } else if d < c {
                losses += 1;
            }
        }
        let n = reports.len() as f64;
        let (mean_d, mean_c) = (sum_d / n, sum_c / n);
        ensure((mean_d > mean_c) == defector_should_win, || {
            format!("delta {delta}: defector {mean_d}, cooperators {mean_c}")
        })?;
        let favourable = if defector_should_win { wins } else { losses };
        ensure(favourable * 2 > wins + losses, || {
            format!("delta {delta}: sign test runs the wrong way")
        })?;
        let p = scholarchain::strategies::population::sign_test_p_value(wins, losses);
        ensure(p < AC4_ALPHA, || {
            format!("delta {delta}: sign test p = {p}")
        })?;
        lines.push(format!(
            "delta {delta}: ALLD {mean_d:.4} vs grim {mean_c:.4}, p={p:.2e}"
        ));
    }
    within_budget(start.elapsed(), AC4_BUDGET)?;
    Ok(format!(
        "{} runs each; {}; {:?}",
        AC4_RUNS,
        lines.join("; "),
        start.elapsed()
    ))
}

// ---- AC5 -------------------------------------------------------------------

const USERS: [&str; 6] = ["ada", "bob", "cy", "dee", "eve", "platform"];
const PEERS: [&str; 4] = ["p1", "p2", "p3", "p4"];

fn metas() -> Vec<ContentMetadata> {
    ["ada", "bob", "cy"]
        .iter()
        .map(|a| ContentMetadata {
            title: format!("Paper by {a}"),
            abstract_text: "Findings.".into(),
            authors: vec![AuthorRef {
                name: a.to_uppercase(),
                user: u(a),
            }],
            institutions: vec![],
        })
        .collect()
}

fn fresh_state() -> ProtocolState {
    let ledger = Ledger::genesis(USERS.iter().map(|n| (u(n), 40)), 20).unwrap();
    ProtocolState::new(ProtocolConfig::default(), ledger, PEERS.map(u).to_vec())
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty")
}

fn random_user(rng: &mut ChaCha8Rng) -> UserId {
    u(pick(rng, &USERS))
}

/// Applies one random operation; returns a label for the claim branch taken, if any.
fn random_op(
    rng: &mut ChaCha8Rng,
    s: &mut ProtocolState,
    metas: &[ContentMetadata],
    hashes: &[ArticleHash],
) -> (Result<(), ProtocolError>, Option<&'static str>) {
    let hash = pick(rng, hashes).clone();
    let user = random_user(rng);
    let res = match rng.gen_range(0..9) {
        0 => s.submit_article(pick(rng, metas), &user).map(drop),
        1 => s.comment(&hash, &user, "ab").map(drop),
        2 => {
            let owner = s
                .article(&hash)
                .and_then(|a| a.owners.first().cloned())
                .unwrap_or(user);
            let n = rng.gen_range(0..4);
            let panel: Vec<UserId> = (0..n).map(|_| random_user(rng)).collect();
            s.start_review(&hash, &owner, rng.gen_range(3..15), &panel)
                .map(drop)
        }
        3 => {
            let outcome = *pick(rng, &Outcome::ALL);
            let shares = rng.gen_range(-10.0..20.0);
            s.trade_review_market(0, &hash, &user, outcome, shares)
                .map(drop)
        }
        4 => {
            let panel = s
                .article(&hash)
                .and_then(|a| a.review.as_ref())
                .map(|r| r.panel.clone())
                .unwrap_or_default();
            let mut votes = BTreeMap::new();
            for p in panel.iter().chain(std::iter::once(&user)) {
                if rng.gen_bool(0.85) {
                    votes.insert(p.clone(), *pick(rng, &Outcome::ALL));
                }
            }
            s.conclude_review(&hash, &votes).map(drop)
        }
        5 => s
            .raise_objection(&hash, &user, rng.gen_range(0..8))
            .map(drop),
        6 => {
            let id = DisputeId(rng.gen_range(0..3));
            let mut votes = BTreeMap::new();
            for p in PEERS {
                if rng.gen_bool(0.85) {
                    let v = if rng.gen_bool(0.6) {
                        DisputeVote::Retract
                    } else {
                        DisputeVote::Uphold
                    };
                    votes.insert(u(p), v);
                }
            }
            if rng.gen_bool(0.05) {
                votes.insert(user, DisputeVote::Retract);
            }
            s.resolve_dispute(id, &votes).map(drop)
        }
        _ => {
            let res = s.claim_published_article(&hash, "10.1/x", &user);
            let label = match &res {
                Ok(ClaimResult::Created) => Some("created"),
                Ok(ClaimResult::OwnerAdded) => Some("owner-added"),
                Err(ProtocolError::AlreadyClaimed) => Some("already-claimed"),
                Err(_) => None,
            };
            return (res.map(drop), label);
        }
    };
    (res, None)
}

fn ac5() -> Check {
    let start = Instant::now();
    let metas = metas();
    let mut hashes: Vec<ArticleHash> = metas.iter().map(|m| content_hash(m).unwrap()).collect();
    hashes.push(ArticleHash("cd".repeat(32)));
    hashes.push(ArticleHash("ef".repeat(32)));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen: BTreeSet<(ArticleState, ArticleState)> = BTreeSet::new();
    let mut branches: BTreeSet<&str> = BTreeSet::new();
    let (mut ok, mut rejected) = (0u64, 0u64);
    for seq in 0..AC5_SEQUENCES {
        let mut s = fresh_state();
        for _ in 0..rng.gen_range(5..40) {
            let before = s.clone();
            let (res, branch) = random_op(&mut rng, &mut s, &metas, &hashes);
            branches.extend(branch);
            if let Err(e) = res {
                rejected += 1;
                ensure(s == before, || {
                    format!("sequence {seq}: rejected `{e}` changed state")
                })?;
                continue;
            }
            ok += 1;
            ensure(s.ledger.is_conserved(), || {
                format!("sequence {seq}: ledger not conserved")
            })?;
            for (h, a) in &s.articles {
                a.check_invariants()
                    .map_err(|e| format!("sequence {seq}: {e}"))?;
                if let Some(old) = before.articles.get(h) {
                    ensure(old.state.can_become(a.state), || {
                        format!("sequence {seq}: illegal {} -> {}", old.state, a.state)
                    })?;
                    ensure(
                        old.state != ArticleState::Retracted || a.state == ArticleState::Retracted,
                        || "left RETRACTED".into(),
                    )?;
                    seen.insert((old.state, a.state));
                }
            }
        }
    }
    ensure(seen.len() == 8, || {
        format!("only {} of 8 transitions exercised: {seen:?}", seen.len())
    })?;
    ensure(branches.len() == 3, || {
        format!("claim branches exercised: {branches:?}")
    })?;
    within_budget(start.elapsed(), AC5_BUDGET)?;
    Ok(format!(
        "{AC5_SEQUENCES} sequences, {ok} applied, {rejected} rejected unchanged, 8/8 transitions, 3/3 claim branches, {:?}",
        start.elapsed()
    ))
}

// ---- AC6 -------------------------------------------------------------------

fn ac6() -> Check {
    let users = ["a", "b", "c", "d"].map(u);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut steps = 0u64;
    for seq in 0..AC6_SEQUENCES {
        let balances: Vec<(UserId, u64)> = users
            .iter()
            .map(|x| (x.clone(), rng.gen_range(0..60)))
            .collect();
        let mut ledger =
            Ledger::genesis(balances, rng.gen_range(0..50)).map_err(|e| e.to_string())?;
        let mut market: Market =
            open_market(MarketId(0), Rational::integer(rng.gen_range(10..200))).unwrap();
        for _ in 0..rng.gen_range(1..30) {
            let user = pick(&mut rng, &users).clone();
            let amount = rng.gen_range(0..30);
            let before = ledger.clone();
            let res = match rng.gen_range(0..9) {
                0 => ledger
                    .credit(&user, amount, CreditSource::Mint)
                    .map_err(|e| e.to_string()),
                1 => ledger
                    .credit(&user, amount, CreditSource::Reserve)
                    .map_err(|e| e.to_string()),
                2 => ledger.escrow(&user, amount).map_err(|e| e.to_string()),
                3 => {
                    let o = if rng.gen_bool(0.5) {
                        EscrowOutcome::Forfeit
                    } else {
                        EscrowOutcome::Refund
                    };
                    ledger
                        .resolve_escrow(&user, amount, o)
                        .map_err(|e| e.to_string())
                }
                4 | 5 => {
                    let outcome = *pick(&mut rng, &Outcome::ALL);
                    market
                        .trade(&mut ledger, &user, outcome, rng.gen_range(-15.0..25.0))
                        .map(drop)
                        .map_err(|e| e.to_string())
                }
                6 => ledger.disburse(&user, amount).map_err(|e| e.to_string()),
                7 => ledger.charge(&user, amount).map_err(|e| e.to_string()),
                _ if market.is_open() && rng.gen_bool(0.3) => market
                    .resolve(&mut ledger, *pick(&mut rng, &Outcome::ALL))
                    .map(drop)
                    .map_err(|e| e.to_string()),
                _ => ledger
                    .burn(amount.min(ledger.reserve()))
                    .map_err(|e| e.to_string()),
            };
            steps += 1;
            ensure(ledger.is_conserved(), || {
                format!("sequence {seq}: conservation broken")
            })?;
            if let Err(e) = res {
                ensure(ledger == before, || {
                    format!("sequence {seq}: failed `{e}` changed the ledger")
                })?;
            }
        }
    }
    Ok(format!(
        "{AC6_SEQUENCES} sequences, {steps} steps, held + burned == initial + minted after each"
    ))
}

// ---- AC7 -------------------------------------------------------------------

fn naive_cost(b: f64, q: [f64; 2]) -> f64 {
    b * ((q[0] / b).exp() + (q[1] / b).exp()).ln()
}

fn ac7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trader = u("t");
    let (mut worst_path, mut worst_loss_gap): (f64, f64) = (0.0, f64::INFINITY);
    for seq in 0..AC7_SEQUENCES {
        let b = rng.gen_range(10.0..300.0f64).round();
        let mut ledger = Ledger::genesis([(trader.clone(), 1_000_000)], 0).unwrap();
        let mut market = open_market(MarketId(0), Rational::integer(b as i64)).unwrap();
        let mut real_paid = 0.0;
        for _ in 0..rng.gen_range(1..25) {
            let outcome = *pick(&mut rng, &Outcome::ALL);
            let held = market.holding(&trader).get(outcome);
            let shares = if held > 1.0 && rng.gen_bool(0.3) {
                -rng.gen_range(0.0..held)
            } else {
                rng.gen_range(0.1..60.0)
            };
            let p_before = market.price(outcome).unwrap();
            let trade = market
                .trade(&mut ledger, &trader, outcome, shares)
                .map_err(|e| e.to_string())?;
            real_paid += trade.real_cost;
            let q = market.outstanding();
            let sum = lmsr_price(b, &q, Outcome::Publish) + lmsr_price(b, &q, Outcome::Revise);
            ensure((sum - 1.0).abs() <= AC7_PRICE_TOL, || {
                format!("sequence {seq}: prices sum to {sum}")
            })?;
            let p_after = market.price(outcome).unwrap();
            ensure((shares > 0.0) == (p_after > p_before), || {
                format!("sequence {seq}: price moved the wrong way")
            })?;
        }
        let q = market.outstanding();
        let oracle = naive_cost(b, q) - naive_cost(b, [0.0, 0.0]);
        let err = (real_paid - oracle).abs();
        worst_path = worst_path.max(err);
        ensure(err <= AC7_PATH_TOL, || {
            format!("sequence {seq}: path cost {real_paid} vs oracle {oracle}")
        })?;

        let winner = *pick(&mut rng, &Outcome::ALL);
        let bound = b * std::f64::consts::LN_2;
        let real_loss = q[winner.index()] - real_paid;
        let payouts = market
            .resolve(&mut ledger, winner)
            .map_err(|e| e.to_string())?;
        let token_loss = payouts.values().sum::<u64>() as f64 - market.token_income() as f64;
        ensure(
            real_loss <= bound + AC7_PATH_TOL && token_loss <= bound,
            || format!("sequence {seq}: loss {real_loss} / {token_loss} exceeds {bound}"),
        )?;
        worst_loss_gap = worst_loss_gap.min(bound - real_loss);
    }

    let mut ledger = Ledger::genesis([(trader.clone(), 100)], 0).unwrap();
    let mut market = open_market(MarketId(1), Rational::integer(100)).unwrap();
    let quote = market.quote(Outcome::Publish, 10.0);
    ensure((quote - AC7_ORACLE_COST).abs() <= 1e-12, || {
        format!("quote {quote}")
    })?;
    let trade = market
        .trade(&mut ledger, &trader, Outcome::Publish, 10.0)
        .map_err(|e| e.to_string())?;
    ensure(trade.cost == 6, || format!("charged {} tokens", trade.cost))?;
    ensure(ledger.balance(&trader) == 94, || {
        "balance after example".into()
    })?;
    Ok(format!(
        "{AC7_SEQUENCES} sequences, max path error {worst_path:e}, min slack to b*ln2 {worst_loss_gap:.3}, example {quote:.4} -> 6 tokens"
    ))
}

// ---- AC8 -------------------------------------------------------------------

fn bundled_protocol_scenarios() -> Vec<(String, Scenario)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).expect("scenarios dir") {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let scenario = Scenario::parse(&text).unwrap();
        if scenario.kind == scholarchain::scenario::ScenarioKind::ProtocolRun {
            out.push((
                path.file_name().unwrap().to_string_lossy().into_owned(),
                scenario,
            ));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn ac8() -> Check {
    let start = Instant::now();
    let demos = bundled_protocol_scenarios();
    ensure(demos.len() >= 3, || {
        "expected the publish, revise and retract demos".into()
    })?;
    let mut flips = 0usize;
    for (name, scenario) in &demos {
        let (out, summary) = run_protocol_demo(scenario).map_err(|e| format!("{name}: {e}"))?;
        let chain = out
            .get(&format!("{}_chain.jsonl", scenario.output))
            .unwrap()
            .to_string();
        let genesis: ProtocolState = serde_json::from_str(
            out.get(&format!("{}_genesis.json", scenario.output))
                .unwrap(),
        )
        .unwrap();
        let blocks = parse_chain_export(&chain).map_err(|e| format!("{name}: {e}"))?;
        let report = verify_chain(&blocks, &genesis);
        ensure(report.valid, || {
            format!("{name}: honest export rejected: {:?}", report.reason)
        })?;
        ensure(report.final_state_hash == summary.final_state_hash, || {
            format!("{name}: replay hash differs")
        })?;
        let (again, _) = run_protocol_demo(scenario).map_err(|e| e.to_string())?;
        ensure(again == out, || format!("{name}: rerun not byte-identical"))?;

        let bytes = chain.as_bytes();
        let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
        let positions: Vec<usize> = (0..bytes.len()).collect();
        let undetected: Vec<(usize, u8)> = std::thread::scope(|scope| {
            let handles: Vec<_> = positions
                .chunks(bytes.len().div_ceil(workers))
                .map(|part| {
                    let genesis = &genesis;
                    scope.spawn(move || {
                        let mut missed = Vec::new();
                        for &i in part {
                            for mask in [0x01u8, 0x20] {
                                let mut tampered = bytes.to_vec();
                                tampered[i] ^= mask;
                                let Ok(text) = String::from_utf8(tampered) else {
                                    continue;
                                };
                                let valid = match parse_chain_export(&text) {
                                    Ok(blocks) => verify_chain(&blocks, genesis).valid,
                                    Err(_) => false,
                                };
                                if valid {
                                    missed.push((i, mask));
                                }
                            }
                        }
                        missed
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        ensure(undetected.is_empty(), || {
            let (i, mask) = undetected[0];
            let lo = i.saturating_sub(30);
            format!(
                "{name}: {} undetected flips, first at byte {i} (mask {mask:#x}) near `{}`",
                undetected.len(),
                &chain[lo..(i + 30).min(chain.len())]
            )
        })?;
        flips += bytes.len() * 2;
    }
    within_budget(start.elapsed(), AC8_BUDGET)?;
    Ok(format!(
        "{} demos replay to identical hashes, {flips} byte flips all rejected, {:?}",
        demos.len(),
        start.elapsed()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 8] = [
        ("AC1 table reproduction", ac1),
        ("AC2 repeated-game analytics", ac2),
        ("AC3 population threshold", ac3),
        ("AC4 population Monte Carlo", ac4),
        ("AC5 lifecycle FSM", ac5),
        ("AC6 ledger conservation", ac6),
        ("AC7 market suite", ac7),
        ("AC8 chain replay and tamper detection", ac8),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
