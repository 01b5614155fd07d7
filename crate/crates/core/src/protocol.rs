//! The replicated protocol state: ledger, article registry, markets and disputes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ledger::{Ledger, LedgerError, UserId};
use crate::lifecycle::{Article, ArticleHash, ArticleState, Dispute, DisputeId, MetadataError};
use crate::market::{Market, MarketError, MarketId, DEFAULT_LIQUIDITY};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Deposits must be strictly greater than this.
    pub min_deposit: u64,
    /// Fixed publication reward; `None` means twice the author's deposit.
    pub publication_reward: Option<u64>,
    pub min_panel_size: usize,
    pub market_liquidity: Rational,
    /// Keep article owners out of their own article's market.
    pub bar_authors_from_market: bool,
    /// Identity allowed to mint and to submit review and dispute verdicts.
    pub platform: UserId,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            min_deposit: 5,
            publication_reward: None,
            min_panel_size: 1,
            market_liquidity: Rational::integer(DEFAULT_LIQUIDITY),
            bar_authors_from_market: true,
            platform: UserId::from("platform"),
        }
    }
}

impl ProtocolConfig {
    /// Reward for a published paper whose author deposited `deposit`.
    pub fn reward_for(&self, deposit: u64) -> u64 {
        self.publication_reward.unwrap_or(deposit.saturating_mul(2))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error("article {0} is already registered")]
    DuplicateArticle(ArticleHash),
    #[error("no article {0}")]
    UnknownArticle(ArticleHash),
    #[error("article is {actual}, operation needs {expected}")]
    WrongState {
        actual: ArticleState,
        expected: &'static str,
    },
    #[error("comments on articles under review are market trades")]
    CommentRedirectToMarket,
    #[error("`{0}` is not an owner of the article")]
    NotOwner(UserId),
    #[error("deposit {deposit} must exceed the minimum {min}")]
    DepositTooSmall { deposit: u64, min: u64 },
    #[error("publication reward {reward} must exceed the deposit {deposit}")]
    RewardTooSmall { reward: u64, deposit: u64 },
    #[error("review panel needs at least {min} distinct reviewers, got {got}")]
    PanelTooSmall { min: usize, got: usize },
    #[error("invalid review panel: {0}")]
    InvalidPanel(String),
    #[error("`{0}` is not on the review panel")]
    NotPanelist(UserId),
    #[error("`{0}` is not a registered peer")]
    NotPeer(UserId),
    #[error("no quorum: {detail}")]
    NoQuorum { detail: String },
    #[error("stake must be positive")]
    ZeroStake,
    #[error("article already has an open dispute")]
    DisputeAlreadyOpen,
    #[error("no dispute {0}")]
    UnknownDispute(DisputeId),
    #[error("dispute {0} is already resolved")]
    DisputeClosed(DisputeId),
    #[error("Owner has already claimed that article")]
    AlreadyClaimed,
    #[error("`{0}` is not authorized for this operation")]
    Unauthorized(UserId),
    #[error("no market {0}")]
    UnknownMarket(MarketId),
}

/// A trade as recorded in the market event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketEvent {
    pub tx: u64,
    pub market: MarketId,
    pub user: UserId,
    pub outcome: crate::market::Outcome,
    pub shares: f64,
    pub cost: i64,
}

/// Everything the peers replicate. Mutations go through [`ProtocolState::transact`],
/// which rolls back on error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolState {
    pub config: ProtocolConfig,
    pub ledger: Ledger,
    pub articles: BTreeMap<ArticleHash, Article>,
    pub markets: BTreeMap<MarketId, Market>,
    pub disputes: BTreeMap<DisputeId, Dispute>,
    /// Trusted community members: they approve blocks and settle disputes.
    pub peers: Vec<UserId>,
    pub market_events: Vec<MarketEvent>,
    /// Logical time, advanced by one per successful operation.
    pub clock: u64,
    next_market: u64,
    next_dispute: u64,
}

impl ProtocolState {
    pub fn new(config: ProtocolConfig, ledger: Ledger, peers: Vec<UserId>) -> Self {
        ProtocolState {
            config,
            ledger,
            articles: BTreeMap::new(),
            markets: BTreeMap::new(),
            disputes: BTreeMap::new(),
            peers,
            market_events: Vec::new(),
            clock: 0,
            next_market: 0,
            next_dispute: 0,
        }
    }

    pub fn article(&self, hash: &ArticleHash) -> Option<&Article> {
        self.articles.get(hash)
    }

    pub fn market(&self, id: MarketId) -> Option<&Market> {
        self.markets.get(&id)
    }

    pub fn dispute(&self, id: DisputeId) -> Option<&Dispute> {
        self.disputes.get(&id)
    }

    pub fn is_peer(&self, user: &UserId) -> bool {
        self.peers.contains(user)
    }

    /// Runs `op` on this state; on error the state is restored exactly.
    /// On success the logical clock advances.
    pub fn transact<T>(
        &mut self,
        op: impl FnOnce(&mut Self) -> Result<T, ProtocolError>,
    ) -> Result<T, ProtocolError> {
        let snapshot = self.clone();
        match op(self) {
            Ok(v) => {
                self.clock += 1;
                Ok(v)
            }
            Err(e) => {
                *self = snapshot;
                Err(e)
            }
        }
    }

    pub(crate) fn article_mut(
        &mut self,
        hash: &ArticleHash,
    ) -> Result<&mut Article, ProtocolError> {
        self.articles
            .get_mut(hash)
            .ok_or_else(|| ProtocolError::UnknownArticle(hash.clone()))
    }

    pub(crate) fn allocate_market(&mut self) -> MarketId {
        let id = MarketId(self.next_market);
        self.next_market += 1;
        id
    }

    pub(crate) fn allocate_dispute(&mut self) -> DisputeId {
        let id = DisputeId(self.next_dispute);
        self.next_dispute += 1;
        id
    }

    /// Article registry export: articles sorted by hash.
    pub fn registry(&self) -> Vec<&Article> {
        self.articles.values().collect()
    }
}
