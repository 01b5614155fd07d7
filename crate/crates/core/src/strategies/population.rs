//! Random-matching population play with optional public reputations.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{discounted_average, DiscountFactor, StrategyAutomaton, StrategyError};
use crate::games::{Action, PayoffMatrix2x2};

#[derive(Debug, Clone)]
pub struct PopulationConfig {
    /// One automaton per player; the population size is its length.
    pub strategies: Vec<StrategyAutomaton>,
    pub delta: DiscountFactor,
    pub reputation_visible: bool,
    pub seed: u64,
    pub horizon: usize,
}

impl PopulationConfig {
    pub fn size(&self) -> usize {
        self.strategies.len()
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.size() < 2 {
            return Err(StrategyError::InvalidConfig(
                "population needs at least 2 players".into(),
            ));
        }
        if self.horizon < 1 {
            return Err(StrategyError::InvalidConfig("horizon must be >= 1".into()));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerRound {
    pub round: usize,
    pub player: usize,
    /// `None` when the player sat out (odd population).
    pub action: Option<Action>,
    pub stage_payoff: f64,
    /// Standing after the round.
    pub good_reputation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationReport {
    pub seed: u64,
    pub delta: f64,
    pub strategies: Vec<String>,
    pub records: Vec<PlayerRound>,
    /// Per-player `(1 - d) * sum_t d^t u_t` over the horizon.
    pub discounted: Vec<f64>,
    /// Share of C among actions played, per round.
    pub cooperation_rate: Vec<f64>,
}

impl PopulationReport {
    /// `round,player,action,stage_payoff,reputation`; sit-outs show action `-`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,player,action,stage_payoff,reputation\n");
        for r in &self.records {
            let action = r.action.map_or("-".to_string(), |a| a.to_string());
            let rep = if r.good_reputation { "good" } else { "bad" };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.round, r.player, action, r.stage_payoff, rep
            );
        }
        out
    }

    /// Mean discounted payoff over players running the named strategy.
    pub fn mean_discounted(&self, strategy: &str) -> Option<f64> {
        let values: Vec<f64> = self
            .strategies
            .iter()
            .zip(&self.discounted)
            .filter(|(s, _)| s.as_str() == strategy)
            .map(|(_, v)| *v)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Plays `config.horizon` rounds of uniformly random pairings.
///
/// Each round the players are shuffled with a ChaCha8 stream seeded from
/// `config.seed` and paired off in order; with an odd count the last player in
/// the shuffle sits out with payoff 0. Actions are chosen from start-of-round
/// state, then automata step on the opponent's action. A player falls into bad
/// standing, permanently, when it defects against a good-standing opponent.
pub fn run_population(
    config: &PopulationConfig,
    game: &PayoffMatrix2x2,
) -> Result<PopulationReport, StrategyError> {
    config.validate()?;
    let n = config.size();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut states: Vec<usize> = config.strategies.iter().map(|s| s.initial).collect();
    let mut good = vec![true; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut payoffs: Vec<Vec<f64>> = vec![Vec::with_capacity(config.horizon); n];
    let mut records = Vec::with_capacity(n * config.horizon);
    let mut cooperation_rate = Vec::with_capacity(config.horizon);

    for round in 0..config.horizon {
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut actions: Vec<Option<Action>> = vec![None; n];
        let mut stage = vec![0.0; n];
        let standing = good.clone();

        for pair in order.chunks_exact(2) {
            let (i, j) = (pair[0], pair[1]);
            let visible = |k: usize| config.reputation_visible.then_some(standing[k]);
            let ai = config.strategies[i].action_with_reputation(states[i], visible(j));
            let aj = config.strategies[j].action_with_reputation(states[j], visible(i));
            let (ui, uj) = game.cell(ai, aj);
            stage[i] = ui.to_f64();
            stage[j] = uj.to_f64();
            actions[i] = Some(ai);
            actions[j] = Some(aj);
            states[i] = config.strategies[i].next(states[i], aj);
            states[j] = config.strategies[j].next(states[j], ai);
            if ai == Action::D && standing[j] {
                good[i] = false;
            }
            if aj == Action::D && standing[i] {
                good[j] = false;
            }
        }

        let played = actions.iter().flatten().count();
        let cooperated = actions
            .iter()
            .flatten()
            .filter(|&&a| a == Action::C)
            .count();
        cooperation_rate.push(cooperated as f64 / played as f64);
        for player in 0..n {
            payoffs[player].push(stage[player]);
            records.push(PlayerRound {
                round,
                player,
                action: actions[player],
                stage_payoff: stage[player],
                good_reputation: good[player],
            });
        }
    }

    let delta = config.delta.value();
    let discounted = payoffs
        .into_iter()
        .map(|p| discounted_average(p.into_iter(), delta).value)
        .collect();
    Ok(PopulationReport {
        seed: config.seed,
        delta,
        strategies: config.strategies.iter().map(|s| s.name.clone()).collect(),
        records,
        discounted,
        cooperation_rate,
    })
}

/// Two-sided exact sign test p-value for `positive` successes against
/// `negative` failures under a fair coin (ties are dropped by the caller).
pub fn sign_test_p_value(positive: u64, negative: u64) -> f64 {
    let n = positive + negative;
    if n == 0 {
        return 1.0;
    }
    let k = positive.min(negative);
    // P(X <= k) for X ~ Bin(n, 1/2), summed in log space.
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0; // ln C(n, 0)
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose + ln_half_n).exp();
    }
    (2.0 * tail).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::prisoners_dilemma;
    use crate::rational::Rational;

    fn table2() -> PayoffMatrix2x2 {
        prisoners_dilemma(Rational::integer(2), Rational::integer(1)).unwrap()
    }

    fn config(strategies: Vec<StrategyAutomaton>, delta: f64, seed: u64) -> PopulationConfig {
        PopulationConfig {
            strategies,
            delta: DiscountFactor::new(delta).unwrap(),
            reputation_visible: true,
            seed,
            horizon: 50,
        }
    }

    #[test]
    fn all_grim_always_cooperates() {
        for seed in 0..5 {
            let cfg = config(vec![StrategyAutomaton::grim(); 6], 0.9, seed);
            let report = run_population(&cfg, &table2()).unwrap();
            assert!(report.cooperation_rate.iter().all(|&r| r == 1.0));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let mut s = vec![StrategyAutomaton::reputation_grim(); 7];
        s[0] = StrategyAutomaton::all_d();
        let cfg = config(s, 0.9, 42);
        let a = run_population(&cfg, &table2()).unwrap();
        let b = run_population(&cfg, &table2()).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn odd_population_sits_one_out() {
        let cfg = config(vec![StrategyAutomaton::all_c(); 5], 0.5, 3);
        let report = run_population(&cfg, &table2()).unwrap();
        for round in 0..cfg.horizon {
            let idle = report
                .records
                .iter()
                .filter(|r| r.round == round && r.action.is_none())
                .count();
            assert_eq!(idle, 1);
        }
    }

    #[test]
    fn reputation_only_worsens() {
        let mut s = vec![StrategyAutomaton::reputation_grim(); 8];
        s[0] = StrategyAutomaton::all_d();
        s[1] = StrategyAutomaton::tit_for_tat();
        let report = run_population(&config(s, 0.9, 9), &table2()).unwrap();
        for player in 0..8 {
            let flags: Vec<bool> = report
                .records
                .iter()
                .filter(|r| r.player == player)
                .map(|r| r.good_reputation)
                .collect();
            assert!(
                flags.windows(2).all(|w| w[0] || !w[1]),
                "player {player} regained standing"
            );
        }
        // punishing a bad defector does not spoil the punisher
        assert!(report
            .records
            .iter()
            .filter(|r| r.player >= 2)
            .all(|r| r.good_reputation));
    }

    #[test]
    fn rejects_small_configs() {
        let cfg = config(vec![StrategyAutomaton::grim()], 0.5, 0);
        assert!(run_population(&cfg, &table2()).is_err());
        let mut cfg = config(vec![StrategyAutomaton::grim(); 2], 0.5, 0);
        cfg.horizon = 0;
        assert!(run_population(&cfg, &table2()).is_err());
    }

    #[test]
    fn sign_test_values() {
        // Bin(10, 1/2): P(X <= 1) = 11/1024
        assert!((sign_test_p_value(9, 1) - 22.0 / 1024.0).abs() < 1e-15);
        assert_eq!(sign_test_p_value(5, 5), 1.0);
        assert!(sign_test_p_value(1000, 0) < 1e-300 || sign_test_p_value(1000, 0) == 0.0);
    }
}
