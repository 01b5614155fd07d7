//! Deterministic simulator of a blockchain-based scholarly publishing protocol.
//!
//! Two halves live in this crate:
//!
//! * the strategic side ([`games`], [`strategies`]): one-shot 2x2 games over
//!   cooperate/defect, their equilibria, and repeated play with discounting,
//!   grim automata and reputation-conditioned populations;
//! * the protocol side ([`ledger`], [`market`], [`lifecycle`], [`netchain`]):
//!   papers as finite-state contracts with token deposits, an LMSR prediction
//!   market on review outcomes, and a small permissioned chain that commits
//!   transactions by quorum re-execution.
//!
//! [`scenario`] ties both together into reproducible, file-driven runs.

pub mod digest;
pub mod games;
pub mod ledger;
pub mod lifecycle;
pub mod market;
pub mod netchain;
pub mod protocol;
pub mod rational;
pub mod scenario;
pub mod strategies;

pub use games::{Action, PayoffMatrix2x2, Player};
pub use ledger::{Ledger, LedgerError, UserId};
pub use lifecycle::{ArticleHash, ArticleState, ContentMetadata};
pub use market::{Market, MarketError, Outcome};
pub use netchain::{Block, Chain, PeerSet, Transaction, TxKind};
pub use protocol::{ProtocolConfig, ProtocolError, ProtocolState};
pub use rational::Rational;
pub use strategies::{DiscountFactor, StrategyAutomaton};
