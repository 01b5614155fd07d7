//! One-shot 2x2 games over cooperate/defect and their equilibria.
//!
//! Everything here is exact: payoffs are [`Rational`]s so that ties in the
//! best-response checks are real ties, not float artifacts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    C,
    D,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::C, Action::D];

    pub fn index(self) -> usize {
        match self {
            Action::C => 0,
            Action::D => 1,
        }
    }

    pub fn other(self) -> Action {
        match self {
            Action::C => Action::D,
            Action::D => Action::C,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::C => "C",
            Action::D => "D",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Row,
    Col,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("cooperator count {count} outside 0..={population}")]
    CoopCountOutOfRange { count: u64, population: u64 },
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),
}

/// A bimatrix game over {C, D}. `cells[row][col]` holds (row payoff, column payoff).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffMatrix2x2 {
    cells: [[(Rational, Rational); 2]; 2],
}

impl PayoffMatrix2x2 {
    /// Cells in the order (C,C), (C,D), (D,C), (D,D).
    pub fn new(
        cc: (Rational, Rational),
        cd: (Rational, Rational),
        dc: (Rational, Rational),
        dd: (Rational, Rational),
    ) -> Self {
        PayoffMatrix2x2 {
            cells: [[cc, cd], [dc, dd]],
        }
    }

    pub fn from_integers(cells: [(i64, i64); 4]) -> Self {
        let c = |(a, b): (i64, i64)| (Rational::integer(a), Rational::integer(b));
        Self::new(c(cells[0]), c(cells[1]), c(cells[2]), c(cells[3]))
    }

    pub fn zeros() -> Self {
        Self::from_integers([(0, 0); 4])
    }

    pub fn cell(&self, row: Action, col: Action) -> &(Rational, Rational) {
        &self.cells[row.index()][col.index()]
    }

    pub fn row_payoff(&self, row: Action, col: Action) -> &Rational {
        &self.cell(row, col).0
    }

    pub fn col_payoff(&self, row: Action, col: Action) -> &Rational {
        &self.cell(row, col).1
    }

    /// Payoff to `player` when it plays `own` and the opponent plays `other`.
    pub fn payoff_for(&self, player: Player, own: Action, other: Action) -> &Rational {
        match player {
            Player::Row => self.row_payoff(own, other),
            Player::Col => self.col_payoff(other, own),
        }
    }

    /// Adds `c` to every payoff of both players.
    pub fn shifted(&self, c: &Rational) -> Self {
        let s = |(a, b): &(Rational, Rational)| (a + c, b + c);
        PayoffMatrix2x2 {
            cells: [
                [s(&self.cells[0][0]), s(&self.cells[0][1])],
                [s(&self.cells[1][0]), s(&self.cells[1][1])],
            ],
        }
    }

    /// The same game seen from the column player's side.
    pub fn transposed(&self) -> Self {
        let t = |r: Action, c: Action| {
            let (a, b) = self.cell(c, r).clone();
            (b, a)
        };
        Self::new(
            t(Action::C, Action::C),
            t(Action::C, Action::D),
            t(Action::D, Action::C),
            t(Action::D, Action::D),
        )
    }

    pub fn profiles() -> impl Iterator<Item = (Action, Action)> {
        Action::ALL
            .into_iter()
            .flat_map(|r| Action::ALL.into_iter().map(move |c| (r, c)))
    }
}

impl fmt::Display for PayoffMatrix2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "     C          D")?;
        for r in Action::ALL {
            write!(f, "{r}")?;
            for c in Action::ALL {
                let (a, b) = self.cell(r, c);
                write!(f, "  ({a}, {b})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parameters of the N-threshold commons game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonsParams {
    #[serde(rename = "B")]
    pub benefit: Rational,
    #[serde(rename = "e")]
    pub effort: Rational,
    #[serde(rename = "N")]
    pub threshold: u64,
    #[serde(rename = "M")]
    pub population: u64,
}

impl CommonsParams {
    pub fn new(
        benefit: Rational,
        effort: Rational,
        threshold: u64,
        population: u64,
    ) -> Result<Self, GameError> {
        let p = CommonsParams {
            benefit,
            effort,
            threshold,
            population,
        };
        p.validate()?;
        Ok(p)
    }

    /// Requires `B > B - e > 0`, `e > 0`, `N >= 1`, `M >= N`.
    pub fn validate(&self) -> Result<(), GameError> {
        if !self.effort.is_positive() {
            return Err(GameError::InvalidParams("effort e must be > 0".into()));
        }
        if !(&self.benefit - &self.effort).is_positive() {
            return Err(GameError::InvalidParams(
                "benefit must exceed effort (B - e > 0)".into(),
            ));
        }
        if self.threshold == 0 {
            return Err(GameError::InvalidParams(
                "threshold N must be positive".into(),
            ));
        }
        if self.population < self.threshold {
            return Err(GameError::InvalidParams("population M must be >= N".into()));
        }
        Ok(())
    }
}

/// Payoff of one player in the commons game, given how many of the other
/// players cooperate. `coop_count >= N` counts as enough cooperators.
pub fn build_commons_payoff(
    params: &CommonsParams,
    coop_count: u64,
    own: Action,
) -> Result<Rational, GameError> {
    if coop_count > params.population {
        return Err(GameError::CoopCountOutOfRange {
            count: coop_count,
            population: params.population,
        });
    }
    let enough = coop_count >= params.threshold;
    Ok(match (own, enough) {
        (Action::C, true) => &params.benefit - &params.effort,
        (Action::C, false) => -params.effort.clone(),
        (Action::D, true) => params.benefit.clone(),
        (Action::D, false) => Rational::zero(),
    })
}

/// The two-player commons game: each player's only potential cooperator is
/// the other one, with threshold 1. With B = 2, e = 1 this is the standard
/// prisoner's dilemma (1,1) / (-1,2) / (2,-1) / (0,0).
pub fn prisoners_dilemma(
    benefit: Rational,
    effort: Rational,
) -> Result<PayoffMatrix2x2, GameError> {
    let params = CommonsParams::new(benefit, effort, 1, 1)?;
    let coop = |a: Action| u64::from(a == Action::C);
    let cell = |r: Action, c: Action| -> Result<(Rational, Rational), GameError> {
        Ok((
            build_commons_payoff(&params, coop(c), r)?,
            build_commons_payoff(&params, coop(r), c)?,
        ))
    };
    Ok(PayoffMatrix2x2::new(
        cell(Action::C, Action::C)?,
        cell(Action::C, Action::D)?,
        cell(Action::D, Action::C)?,
        cell(Action::D, Action::D)?,
    ))
}

/// Publication probabilities keyed by (own effort, other effort), where
/// effort is either 0 (honest, C) or e (hype, D).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicationProbabilities {
    /// P(e, 0): own hype against an honest rival.
    #[serde(rename = "e0")]
    pub hype_vs_honest: Rational,
    /// P(0, e): own honest paper against a hyped rival.
    #[serde(rename = "0e")]
    pub honest_vs_hype: Rational,
    #[serde(rename = "ee")]
    pub hype_vs_hype: Rational,
    #[serde(rename = "00")]
    pub honest_vs_honest: Rational,
}

impl PublicationProbabilities {
    pub fn get(&self, own: Action, other: Action) -> &Rational {
        match (own, other) {
            (Action::D, Action::C) => &self.hype_vs_honest,
            (Action::C, Action::D) => &self.honest_vs_hype,
            (Action::D, Action::D) => &self.hype_vs_hype,
            (Action::C, Action::C) => &self.honest_vs_honest,
        }
    }

    /// Biased review: hype always wins against honesty, ties are coin flips.
    pub fn biased() -> Self {
        PublicationProbabilities {
            hype_vs_honest: Rational::one(),
            honest_vs_hype: Rational::zero(),
            hype_vs_hype: Rational::new(1, 2),
            honest_vs_honest: Rational::new(1, 2),
        }
    }

    /// Lowered bias: hype only wins half the time against honesty.
    pub fn debiased() -> Self {
        PublicationProbabilities {
            hype_vs_honest: Rational::new(1, 2),
            ..Self::biased()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationParams {
    #[serde(rename = "R")]
    pub reward: Rational,
    #[serde(rename = "e")]
    pub effort: Rational,
    #[serde(rename = "P")]
    pub pub_prob: PublicationProbabilities,
}

impl PublicationParams {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.reward.is_negative() {
            return Err(GameError::InvalidParams("reward R must be >= 0".into()));
        }
        if !self.effort.is_positive() {
            return Err(GameError::InvalidParams("effort e must be > 0".into()));
        }
        let p = &self.pub_prob;
        for (name, v) in [
            ("e0", &p.hype_vs_honest),
            ("0e", &p.honest_vs_hype),
            ("ee", &p.hype_vs_hype),
            ("00", &p.honest_vs_honest),
        ] {
            if v.is_negative() || *v > Rational::one() {
                return Err(GameError::InvalidParams(format!(
                    "P[{name}] = {v} not in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Publication race: a player's payoff is `P(own, other) * R - own_effort`.
/// C spends no effort; D spends `e` on hype.
pub fn build_publication_game(params: &PublicationParams) -> Result<PayoffMatrix2x2, GameError> {
    params.validate()?;
    let effort = |a: Action| match a {
        Action::C => Rational::zero(),
        Action::D => params.effort.clone(),
    };
    let payoff =
        |own: Action, other: Action| params.pub_prob.get(own, other) * &params.reward - effort(own);
    let cell = |r: Action, c: Action| (payoff(r, c), payoff(c, r));
    Ok(PayoffMatrix2x2::new(
        cell(Action::C, Action::C),
        cell(Action::C, Action::D),
        cell(Action::D, Action::C),
        cell(Action::D, Action::D),
    ))
}

/// Pure equilibria and the interior mixed equilibrium, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquilibriumSet {
    pub pure: Vec<(Action, Action)>,
    /// (probability row plays D, probability column plays D).
    pub mixed: Option<(Rational, Rational)>,
}

pub fn equilibria(game: &PayoffMatrix2x2) -> EquilibriumSet {
    EquilibriumSet {
        pure: pure_equilibria(game),
        mixed: mixed_equilibrium(game),
    }
}

fn is_best_response(game: &PayoffMatrix2x2, player: Player, own: Action, other: Action) -> bool {
    game.payoff_for(player, own.other(), other) <= game.payoff_for(player, own, other)
}

/// All pure Nash profiles, in (C,C), (C,D), (D,C), (D,D) order. Ties count
/// as best responses.
pub fn pure_equilibria(game: &PayoffMatrix2x2) -> Vec<(Action, Action)> {
    PayoffMatrix2x2::profiles()
        .filter(|&(r, c)| {
            is_best_response(game, Player::Row, r, c) && is_best_response(game, Player::Col, c, r)
        })
        .collect()
}

/// Probability of D that makes the *opponent* of `player` indifferent,
/// i.e. solves `a(1-x) + b x = c(1-x) + d x` for the opponent's payoffs
/// when `player` plays D with probability x.
fn indifference_mix(game: &PayoffMatrix2x2, player: Player) -> Option<Rational> {
    let opponent = match player {
        Player::Row => Player::Col,
        Player::Col => Player::Row,
    };
    let u = |own: Action, other: Action| game.payoff_for(opponent, own, other);
    let a = u(Action::C, Action::C);
    let b = u(Action::C, Action::D);
    let c = u(Action::D, Action::C);
    let d = u(Action::D, Action::D);
    let gain_c = a - c;
    let denom = &gain_c + &(d - b);
    if denom.is_zero() {
        return None;
    }
    let x = gain_c / denom;
    (x.is_positive() && x < Rational::one()).then_some(x)
}

/// The completely mixed equilibrium, solved exactly from both players'
/// indifference conditions. Returns `None` when either condition has no
/// solution strictly inside (0, 1), which includes every game where the
/// opponent's payoff difference between C and D is constant (e.g. all-zero
/// or strictly dominant games).
pub fn mixed_equilibrium(game: &PayoffMatrix2x2) -> Option<(Rational, Rational)> {
    let row_d = indifference_mix(game, Player::Row)?;
    let col_d = indifference_mix(game, Player::Col)?;
    Some((row_d, col_d))
}

/// The action that strictly dominates the other for `player`.
pub fn dominant_action(game: &PayoffMatrix2x2, player: Player) -> Option<Action> {
    Action::ALL.into_iter().find(|&a| {
        Action::ALL.into_iter().all(|other| {
            game.payoff_for(player, a, other) > game.payoff_for(player, a.other(), other)
        })
    })
}

/// The action that weakly dominates the other: never worse, better somewhere.
pub fn weakly_dominant_action(game: &PayoffMatrix2x2, player: Player) -> Option<Action> {
    Action::ALL.into_iter().find(|&a| {
        let never_worse = Action::ALL
            .into_iter()
            .all(|o| game.payoff_for(player, a, o) >= game.payoff_for(player, a.other(), o));
        let sometimes_better = Action::ALL
            .into_iter()
            .any(|o| game.payoff_for(player, a, o) > game.payoff_for(player, a.other(), o));
        never_worse && sometimes_better
    })
}

/// Expected payoff of `player` playing pure `own` against an opponent that
/// plays D with probability `opp_d`.
pub fn expected_payoff(
    game: &PayoffMatrix2x2,
    player: Player,
    own: Action,
    opp_d: &Rational,
) -> Rational {
    let p_c = Rational::one() - opp_d.clone();
    game.payoff_for(player, own, Action::C) * &p_c + game.payoff_for(player, own, Action::D) * opp_d
}

/// Game description as loaded from scenario files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GameSpec {
    Publication(PublicationParams),
    PrisonersDilemma {
        #[serde(rename = "B")]
        benefit: Rational,
        #[serde(rename = "e")]
        effort: Rational,
    },
    Commons(CommonsParams),
    /// Explicit cells keyed "CC", "CD", "DC", "DD", each `[row, col]`.
    Matrix {
        cells: MatrixCells,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixCells {
    #[serde(rename = "CC")]
    pub cc: (Rational, Rational),
    #[serde(rename = "CD")]
    pub cd: (Rational, Rational),
    #[serde(rename = "DC")]
    pub dc: (Rational, Rational),
    #[serde(rename = "DD")]
    pub dd: (Rational, Rational),
}

impl GameSpec {
    /// The 2x2 matrix for two-player specs; `None` for the N-player commons game.
    pub fn matrix(&self) -> Result<Option<PayoffMatrix2x2>, GameError> {
        match self {
            GameSpec::Publication(p) => build_publication_game(p).map(Some),
            GameSpec::PrisonersDilemma { benefit, effort } => {
                prisoners_dilemma(benefit.clone(), effort.clone()).map(Some)
            }
            GameSpec::Commons(p) => p.validate().map(|_| None),
            GameSpec::Matrix { cells } => Ok(Some(PayoffMatrix2x2::new(
                cells.cc.clone(),
                cells.cd.clone(),
                cells.dc.clone(),
                cells.dd.clone(),
            ))),
        }
    }
}
