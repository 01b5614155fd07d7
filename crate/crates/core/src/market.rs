//! Logarithmic market scoring rule over the two review outcomes.
//!
//! The market maker's cost function is `C(q) = b * ln(sum_o exp(q_o / b))`
//! and the instantaneous price of outcome `o` is `exp(q_o / b) / sum exp(q / b)`.
//! Share quantities are real-valued; token movements are integers, rounded in
//! the platform's favor: buys round the cost up, sells and payouts round down.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ledger::{Ledger, LedgerError, UserId};
use crate::rational::Rational;

pub const DEFAULT_LIQUIDITY: i64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Publish,
    Revise,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Publish, Outcome::Revise];

    pub fn index(self) -> usize {
        match self {
            Outcome::Publish => 0,
            Outcome::Revise => 1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Publish => "PUBLISH",
            Outcome::Revise => "REVISE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarketId(pub u64);

impl fmt::Display for MarketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "outcome")]
pub enum MarketStatus {
    Open,
    Resolved(Outcome),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarketError {
    #[error("liquidity must be positive, got {0}")]
    InvalidLiquidity(String),
    #[error("market is already resolved")]
    Resolved,
    #[error("share amount must be finite and non-zero")]
    InvalidShares,
    #[error("`{user}` holds {held} {outcome} shares, cannot sell {requested}")]
    InsufficientHoldings {
        user: UserId,
        outcome: Outcome,
        held: f64,
        requested: f64,
    },
    #[error("`{0}` may not trade in this market")]
    Barred(UserId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Holding {
    pub publish: f64,
    pub revise: f64,
}

impl Holding {
    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Publish => self.publish,
            Outcome::Revise => self.revise,
        }
    }

    fn get_mut(&mut self, outcome: Outcome) -> &mut f64 {
        match outcome {
            Outcome::Publish => &mut self.publish,
            Outcome::Revise => &mut self.revise,
        }
    }
}

/// A settled trade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub user: UserId,
    pub outcome: Outcome,
    /// Positive buys, negative sells.
    pub shares: f64,
    /// Exact cost-function difference before rounding.
    pub real_cost: f64,
    /// Tokens paid by the trader (negative when the trader receives tokens).
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Market {
    pub id: MarketId,
    liquidity: Rational,
    /// Outstanding shares indexed by [`Outcome::index`].
    outstanding: [f64; 2],
    holdings: BTreeMap<UserId, Holding>,
    status: MarketStatus,
    barred: BTreeSet<UserId>,
    /// Net tokens received from traders.
    token_income: i64,
    /// Net cost-function income before rounding.
    real_income: f64,
    payouts: BTreeMap<UserId, u64>,
}

/// `b * ln(sum exp(q_i / b))`, via log-sum-exp.
pub fn lmsr_cost(b: f64, q: &[f64; 2]) -> f64 {
    let x = [q[0] / b, q[1] / b];
    let m = x[0].max(x[1]);
    b * (m + ((x[0] - m).exp() + (x[1] - m).exp()).ln())
}

pub fn lmsr_price(b: f64, q: &[f64; 2], outcome: Outcome) -> f64 {
    let i = outcome.index();
    // exp(q_i/b) / (exp(q_i/b) + exp(q_j/b)) = 1 / (1 + exp((q_j - q_i)/b))
    1.0 / (1.0 + ((q[1 - i] - q[i]) / b).exp())
}

/// Opens an empty book with liquidity `b`.
pub fn open_market(id: MarketId, liquidity: Rational) -> Result<Market, MarketError> {
    if !liquidity.is_positive() {
        return Err(MarketError::InvalidLiquidity(liquidity.to_string()));
    }
    Ok(Market {
        id,
        liquidity,
        outstanding: [0.0; 2],
        holdings: BTreeMap::new(),
        status: MarketStatus::Open,
        barred: BTreeSet::new(),
        token_income: 0,
        real_income: 0.0,
        payouts: BTreeMap::new(),
    })
}

impl Market {
    pub fn liquidity(&self) -> f64 {
        self.liquidity.to_f64()
    }

    pub fn status(&self) -> MarketStatus {
        self.status
    }

    pub fn is_open(&self) -> bool {
        self.status == MarketStatus::Open
    }

    pub fn outstanding(&self) -> [f64; 2] {
        self.outstanding
    }

    pub fn holding(&self, user: &UserId) -> Holding {
        self.holdings.get(user).copied().unwrap_or_default()
    }

    pub fn holdings(&self) -> &BTreeMap<UserId, Holding> {
        &self.holdings
    }

    pub fn token_income(&self) -> i64 {
        self.token_income
    }

    pub fn real_income(&self) -> f64 {
        self.real_income
    }

    pub fn payouts(&self) -> &BTreeMap<UserId, u64> {
        &self.payouts
    }

    pub fn bar(&mut self, user: UserId) {
        self.barred.insert(user);
    }

    pub fn is_barred(&self, user: &UserId) -> bool {
        self.barred.contains(user)
    }

    pub fn cost(&self) -> f64 {
        lmsr_cost(self.liquidity(), &self.outstanding)
    }

    pub fn price(&self, outcome: Outcome) -> Result<f64, MarketError> {
        if !self.is_open() {
            return Err(MarketError::Resolved);
        }
        Ok(lmsr_price(self.liquidity(), &self.outstanding, outcome))
    }

    /// Real-valued cost of moving `shares` of `outcome` at the current book.
    pub fn quote(&self, outcome: Outcome, shares: f64) -> f64 {
        let mut after = self.outstanding;
        after[outcome.index()] += shares;
        lmsr_cost(self.liquidity(), &after) - self.cost()
    }

    /// Buys (`shares > 0`) or sells (`shares < 0`) against the market maker,
    /// settling tokens against the platform reserve.
    pub fn trade(
        &mut self,
        ledger: &mut Ledger,
        user: &UserId,
        outcome: Outcome,
        shares: f64,
    ) -> Result<Trade, MarketError> {
        if !self.is_open() {
            return Err(MarketError::Resolved);
        }
        if !shares.is_finite() || shares == 0.0 {
            return Err(MarketError::InvalidShares);
        }
        if self.barred.contains(user) {
            return Err(MarketError::Barred(user.clone()));
        }
        let held = self.holding(user).get(outcome);
        if shares < 0.0 && held < -shares {
            return Err(MarketError::InsufficientHoldings {
                user: user.clone(),
                outcome,
                held,
                requested: -shares,
            });
        }
        let real_cost = self.quote(outcome, shares);
        let cost = if shares > 0.0 {
            let tokens = real_cost.max(0.0).ceil() as u64;
            if tokens > 0 {
                ledger.charge(user, tokens)?;
            }
            tokens as i64
        } else {
            let tokens = (-real_cost).max(0.0).floor() as u64;
            ledger.disburse(user, tokens)?;
            -(tokens as i64)
        };

        self.outstanding[outcome.index()] += shares;
        let holding = self
            .holdings
            .entry(user.clone())
            .or_default()
            .get_mut(outcome);
        *holding += shares;
        if *holding < 0.0 {
            *holding = 0.0;
        }
        if self.outstanding[outcome.index()] < 0.0 {
            self.outstanding[outcome.index()] = 0.0;
        }
        self.token_income += cost;
        self.real_income += real_cost;
        Ok(Trade {
            user: user.clone(),
            outcome,
            shares,
            real_cost,
            cost,
        })
    }

    /// Closes the market and pays one token per winning share, rounded down.
    pub fn resolve(
        &mut self,
        ledger: &mut Ledger,
        outcome: Outcome,
    ) -> Result<BTreeMap<UserId, u64>, MarketError> {
        if !self.is_open() {
            return Err(MarketError::Resolved);
        }
        let payouts: BTreeMap<UserId, u64> = self
            .holdings
            .iter()
            .map(|(u, h)| (u.clone(), h.get(outcome).floor() as u64))
            .filter(|(_, t)| *t > 0)
            .collect();
        let mut staged = ledger.clone();
        for (user, tokens) in &payouts {
            staged.disburse(user, *tokens)?;
        }
        *ledger = staged;
        self.status = MarketStatus::Resolved(outcome);
        self.payouts = payouts.clone();
        Ok(payouts)
    }
}
