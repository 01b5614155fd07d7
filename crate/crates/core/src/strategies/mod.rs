//! Repeated-game machinery: discounting, strategy automata and population play.
//!
//! The infinite-horizon average payoff `(1 - d) * sum_k d^k u_k` is available
//! two ways. [`closed_form_payoffs`] finds the cycle of the joint automaton
//! and sums the geometric series exactly; [`discounted_average_payoff`]
//! truncates a played transcript and reports the truncation bound.

mod automaton;
pub mod population;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use automaton::{AutomatonError, StrategyAutomaton};
pub use population::{run_population, PopulationConfig, PopulationReport};

use crate::games::{Action, PayoffMatrix2x2};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("discount factor {0} must lie strictly between 0 and 1")]
    InvalidDiscount(String),
    #[error("game is not a prisoner's dilemma (need T > R > P > S for both players)")]
    NotPrisonersDilemma,
    #[error("population threshold needs N >= 1, got {0}")]
    InvalidPopulation(u64),
    #[error("empty transcript")]
    EmptyTranscript,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("invalid population config: {0}")]
    InvalidConfig(String),
}

/// Discount factor in the open interval (0, 1), kept both exactly and as f64.
#[derive(Clone, PartialEq)]
pub struct DiscountFactor {
    exact: Rational,
    value: f64,
}

impl DiscountFactor {
    /// Takes the decimal value of `delta` exactly, so `0.1` is `1/10`.
    pub fn new(delta: f64) -> Result<Self, StrategyError> {
        let exact = Rational::from_f64_decimal(delta)
            .ok_or_else(|| StrategyError::InvalidDiscount(delta.to_string()))?;
        Self::from_rational(exact)
    }

    pub fn from_rational(exact: Rational) -> Result<Self, StrategyError> {
        if !exact.is_positive() || exact >= Rational::one() {
            return Err(StrategyError::InvalidDiscount(exact.to_string()));
        }
        let value = exact.to_f64();
        Ok(DiscountFactor { exact, value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> &Rational {
        &self.exact
    }
}

impl fmt::Debug for DiscountFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiscountFactor({})", self.exact)
    }
}

impl Serialize for DiscountFactor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value)
    }
}

impl<'de> Deserialize<'de> for DiscountFactor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Number(x) => DiscountFactor::new(x),
            Raw::Text(s) => {
                let r: Rational = s.parse().map_err(serde::de::Error::custom)?;
                DiscountFactor::from_rational(r)
            }
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Round {
    pub action_a: Action,
    pub action_b: Action,
    pub payoff_a: Rational,
    pub payoff_b: Rational,
}

/// Rounds of a two-player repeated game in play order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchTranscript {
    pub rounds: Vec<Round>,
}

impl MatchTranscript {
    pub fn push(&mut self, game: &PayoffMatrix2x2, action_a: Action, action_b: Action) {
        let (payoff_a, payoff_b) = game.cell(action_a, action_b).clone();
        self.rounds.push(Round {
            action_a,
            action_b,
            payoff_a,
            payoff_b,
        });
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Same match from B's point of view.
    pub fn swapped(&self) -> MatchTranscript {
        MatchTranscript {
            rounds: self
                .rounds
                .iter()
                .map(|r| Round {
                    action_a: r.action_b,
                    action_b: r.action_a,
                    payoff_a: r.payoff_b.clone(),
                    payoff_b: r.payoff_a.clone(),
                })
                .collect(),
        }
    }
}

/// Plays `a` against `b` for `rounds` stages.
pub fn play_match(
    a: &StrategyAutomaton,
    b: &StrategyAutomaton,
    game: &PayoffMatrix2x2,
    rounds: usize,
) -> MatchTranscript {
    let (mut sa, mut sb) = (a.initial, b.initial);
    let mut t = MatchTranscript {
        rounds: Vec::with_capacity(rounds),
    };
    for _ in 0..rounds {
        let (xa, xb) = (a.action(sa), b.action(sb));
        t.push(game, xa, xb);
        sa = a.next(sa, xb);
        sb = b.next(sb, xa);
    }
    t
}

/// Truncated discounted average and an upper bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscountedPayoff {
    pub value: f64,
    /// `d^K * max|u|`: the infinite-horizon value lies within this of `value`
    /// if the stage payoffs stay within the observed range.
    pub truncation_bound: f64,
}

/// `(1 - d) * sum_{k<K} d^k u_k` over player A's payoffs in the transcript.
pub fn discounted_average_payoff(
    transcript: &MatchTranscript,
    delta: &DiscountFactor,
) -> Result<DiscountedPayoff, StrategyError> {
    if transcript.is_empty() {
        return Err(StrategyError::EmptyTranscript);
    }
    Ok(discounted_average(
        transcript.rounds.iter().map(|r| r.payoff_a.to_f64()),
        delta.value(),
    ))
}

pub(crate) fn discounted_average(
    payoffs: impl Iterator<Item = f64>,
    delta: f64,
) -> DiscountedPayoff {
    let mut sum = 0.0;
    let mut weight = 1.0;
    let mut max_abs: f64 = 0.0;
    for u in payoffs {
        sum += weight * u;
        weight *= delta;
        max_abs = max_abs.max(u.abs());
    }
    DiscountedPayoff {
        value: (1.0 - delta) * sum,
        truncation_bound: weight * max_abs,
    }
}

/// Exact infinite-horizon discounted averages for (A, B).
///
/// The joint state `(state_a, state_b)` evolves deterministically, so it
/// revisits some state within `|A| * |B|` steps. With prefix length `p`,
/// cycle length `L` and stage payoffs `u_k`:
/// `(1 - d) * (sum_{k<p} d^k u_k + d^p * sum_{j<L} d^j u_{p+j} / (1 - d^L))`.
pub fn closed_form_payoffs(
    a: &StrategyAutomaton,
    b: &StrategyAutomaton,
    game: &PayoffMatrix2x2,
    delta: &DiscountFactor,
) -> (Rational, Rational) {
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut path: Vec<(Action, Action)> = Vec::new();
    let (mut sa, mut sb) = (a.initial, b.initial);
    let cycle_start = loop {
        if let Some(&first) = seen.get(&(sa, sb)) {
            break first;
        }
        seen.insert((sa, sb), path.len());
        let (xa, xb) = (a.action(sa), b.action(sb));
        path.push((xa, xb));
        sa = a.next(sa, xb);
        sb = b.next(sb, xa);
    };

    let d = delta.exact();
    let one = Rational::one();
    let series = |pick: &dyn Fn(Action, Action) -> Rational| -> Rational {
        let mut weight = Rational::one();
        let mut prefix = Rational::zero();
        for &(xa, xb) in &path[..cycle_start] {
            prefix = prefix + &weight * &pick(xa, xb);
            weight = &weight * d;
        }
        let cycle_weight = weight;
        let mut w = Rational::one();
        let mut cycle = Rational::zero();
        for &(xa, xb) in &path[cycle_start..] {
            cycle = cycle + &w * &pick(xa, xb);
            w = &w * d;
        }
        // w is now d^L
        let tail = &(&cycle_weight * &cycle) / &(&one - &w);
        &(&one - d) * &(prefix + tail)
    };
    let pa = series(&|xa, xb| game.row_payoff(xa, xb).clone());
    let pb = series(&|xa, xb| game.col_payoff(xa, xb).clone());
    (pa, pb)
}

/// Player A's exact discounted average payoff against B.
pub fn closed_form_payoff(
    a: &StrategyAutomaton,
    b: &StrategyAutomaton,
    game: &PayoffMatrix2x2,
    delta: &DiscountFactor,
) -> Rational {
    closed_form_payoffs(a, b, game, delta).0
}

/// Strict prisoner's dilemma ordering T > R > P > S for both players.
pub fn is_prisoners_dilemma(game: &PayoffMatrix2x2) -> bool {
    let check = |g: &PayoffMatrix2x2| {
        let r = g.row_payoff(Action::C, Action::C);
        let s = g.row_payoff(Action::C, Action::D);
        let t = g.row_payoff(Action::D, Action::C);
        let p = g.row_payoff(Action::D, Action::D);
        t > r && r > p && p > s
    };
    check(game) && check(&game.transposed())
}

/// Cooperation payoff and best-deviation payoff under grim punishment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CooperationCheck {
    pub cooperate: Rational,
    pub deviate: Rational,
    pub sustained: bool,
}

/// Compares grim-vs-grim against a one-shot deviation that grim then punishes
/// forever, for both players.
pub fn cooperation_check(
    game: &PayoffMatrix2x2,
    delta: &DiscountFactor,
) -> Result<CooperationCheck, StrategyError> {
    if !is_prisoners_dilemma(game) {
        return Err(StrategyError::NotPrisonersDilemma);
    }
    let grim = StrategyAutomaton::grim();
    let alld = StrategyAutomaton::all_d();
    let (coop_row, coop_col) = closed_form_payoffs(&grim, &grim, game, delta);
    let dev_row = closed_form_payoff(&alld, &grim, game, delta);
    let dev_col = closed_form_payoffs(&grim, &alld, game, delta).1;
    let sustained = coop_row >= dev_row && coop_col >= dev_col;
    Ok(CooperationCheck {
        cooperate: coop_row,
        deviate: dev_row,
        sustained,
    })
}

pub fn cooperation_sustained(
    game: &PayoffMatrix2x2,
    delta: &DiscountFactor,
) -> Result<bool, StrategyError> {
    cooperation_check(game, delta).map(|c| c.sustained)
}

/// Minimum discount factor for cooperation in a population of `n + 1`
/// randomly matched players: `1 - 1/(2n)` with private histories, `1/2` when
/// reputation-conditioned grim can be used.
pub fn cooperation_threshold_population(
    n: u64,
    reputation_shared: bool,
) -> Result<f64, StrategyError> {
    if n < 1 {
        return Err(StrategyError::InvalidPopulation(n));
    }
    if reputation_shared {
        return Ok(0.5);
    }
    Ok(1.0 - 1.0 / (2.0 * n as f64))
}
