//! Platform token accounts.
//!
//! Tokens only ever move between a user and the platform: minting, the
//! platform reserve, and escrow. There is deliberately no user-to-user
//! transfer. Every operation checks its preconditions before touching state,
//! so a returned error means nothing changed.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub balance: u64,
    pub escrowed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CreditSource {
    Mint,
    Reserve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EscrowOutcome {
    /// Escrowed tokens go to the platform reserve.
    Forfeit,
    /// Escrowed tokens go back to the user's balance.
    Refund,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("no account for user `{0}`")]
    UnknownAccount(UserId),
    #[error("insufficient balance for `{user}`: have {have}, need {need}")]
    InsufficientBalance { user: UserId, have: u64, need: u64 },
    #[error("insufficient escrow for `{user}`: have {have}, need {need}")]
    InsufficientEscrow { user: UserId, have: u64, need: u64 },
    #[error("insufficient platform reserve: have {have}, need {need}")]
    InsufficientReserve { have: u64, need: u64 },
    #[error("token supply overflow")]
    Overflow,
}

/// Reputation lookup result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Reputation {
    pub value: u64,
    pub has_account: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    accounts: BTreeMap<UserId, Account>,
    reserve: u64,
    initial_supply: u64,
    minted_total: u64,
    burned_total: u64,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// A ledger with starting balances and reserve; these make up the initial supply.
    pub fn genesis(
        balances: impl IntoIterator<Item = (UserId, u64)>,
        reserve: u64,
    ) -> Result<Self, LedgerError> {
        let mut ledger = Ledger {
            reserve,
            ..Self::default()
        };
        let mut supply = reserve;
        for (user, balance) in balances {
            supply = supply.checked_add(balance).ok_or(LedgerError::Overflow)?;
            ledger.accounts.entry(user).or_default().balance += balance;
        }
        ledger.initial_supply = supply;
        Ok(ledger)
    }

    pub fn account(&self, user: &UserId) -> Option<&Account> {
        self.accounts.get(user)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&UserId, &Account)> {
        self.accounts.iter()
    }

    pub fn balance(&self, user: &UserId) -> u64 {
        self.accounts.get(user).map_or(0, |a| a.balance)
    }

    pub fn escrowed(&self, user: &UserId) -> u64 {
        self.accounts.get(user).map_or(0, |a| a.escrowed)
    }

    pub fn reserve(&self) -> u64 {
        self.reserve
    }

    pub fn initial_supply(&self) -> u64 {
        self.initial_supply
    }

    pub fn minted_total(&self) -> u64 {
        self.minted_total
    }

    pub fn burned_total(&self) -> u64 {
        self.burned_total
    }

    /// Sum of all balances, escrows and the reserve.
    pub fn total_held(&self) -> u128 {
        let users: u128 = self
            .accounts
            .values()
            .map(|a| u128::from(a.balance) + u128::from(a.escrowed))
            .sum();
        users + u128::from(self.reserve)
    }

    /// `held == initial + minted - burned`.
    pub fn is_conserved(&self) -> bool {
        self.total_held() + u128::from(self.burned_total)
            == u128::from(self.initial_supply) + u128::from(self.minted_total)
    }

    pub fn credit(
        &mut self,
        user: &UserId,
        amount: u64,
        source: CreditSource,
    ) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let new_balance = self
            .balance(user)
            .checked_add(amount)
            .ok_or(LedgerError::Overflow)?;
        match source {
            CreditSource::Mint => {
                self.minted_total = self
                    .minted_total
                    .checked_add(amount)
                    .ok_or(LedgerError::Overflow)?;
            }
            CreditSource::Reserve => {
                if self.reserve < amount {
                    return Err(LedgerError::InsufficientReserve {
                        have: self.reserve,
                        need: amount,
                    });
                }
                self.reserve -= amount;
            }
        }
        self.accounts.entry(user.clone()).or_default().balance = new_balance;
        Ok(())
    }

    /// Pays `amount` out of the reserve, minting whatever the reserve lacks.
    pub fn disburse(&mut self, user: &UserId, amount: u64) -> Result<(), LedgerError> {
        if amount == 0 {
            return Ok(());
        }
        let from_reserve = amount.min(self.reserve);
        let shortfall = amount - from_reserve;
        self.balance(user)
            .checked_add(amount)
            .ok_or(LedgerError::Overflow)?;
        self.minted_total
            .checked_add(shortfall)
            .ok_or(LedgerError::Overflow)?;
        if from_reserve > 0 {
            self.credit(user, from_reserve, CreditSource::Reserve)?;
        }
        if shortfall > 0 {
            self.credit(user, shortfall, CreditSource::Mint)?;
        }
        Ok(())
    }

    /// Moves `amount` from the user's balance into the reserve.
    pub fn charge(&mut self, user: &UserId, amount: u64) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let reserve = self
            .reserve
            .checked_add(amount)
            .ok_or(LedgerError::Overflow)?;
        let account = self.funded_account(user, amount)?;
        account.balance -= amount;
        self.reserve = reserve;
        Ok(())
    }

    pub fn escrow(&mut self, user: &UserId, amount: u64) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let account = self.funded_account(user, amount)?;
        account.balance -= amount;
        account.escrowed += amount;
        Ok(())
    }

    pub fn resolve_escrow(
        &mut self,
        user: &UserId,
        amount: u64,
        outcome: EscrowOutcome,
    ) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let have = self.escrowed(user);
        if have < amount {
            return Err(LedgerError::InsufficientEscrow {
                user: user.clone(),
                have,
                need: amount,
            });
        }
        let reserve = match outcome {
            EscrowOutcome::Forfeit => self
                .reserve
                .checked_add(amount)
                .ok_or(LedgerError::Overflow)?,
            EscrowOutcome::Refund => self.reserve,
        };
        let account = self.accounts.get_mut(user).expect("escrow implies account");
        account.escrowed -= amount;
        if outcome == EscrowOutcome::Refund {
            account.balance += amount;
        }
        self.reserve = reserve;
        Ok(())
    }

    /// Destroys tokens held by the reserve.
    pub fn burn(&mut self, amount: u64) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        if self.reserve < amount {
            return Err(LedgerError::InsufficientReserve {
                have: self.reserve,
                need: amount,
            });
        }
        self.reserve -= amount;
        self.burned_total += amount;
        Ok(())
    }

    /// Reputation is the user's token holdings, escrow included.
    pub fn reputation(&self, user: &UserId) -> Reputation {
        match self.accounts.get(user) {
            Some(a) => Reputation {
                value: a.balance + a.escrowed,
                has_account: true,
            },
            None => Reputation {
                value: 0,
                has_account: false,
            },
        }
    }

    fn funded_account(&mut self, user: &UserId, amount: u64) -> Result<&mut Account, LedgerError> {
        let account = self
            .accounts
            .get_mut(user)
            .ok_or_else(|| LedgerError::UnknownAccount(user.clone()))?;
        if account.balance < amount {
            return Err(LedgerError::InsufficientBalance {
                user: user.clone(),
                have: account.balance,
                need: amount,
            });
        }
        Ok(account)
    }
}
