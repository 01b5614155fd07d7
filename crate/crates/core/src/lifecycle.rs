//! Papers as finite-state contracts.
//!
//! ```text
//!   comment        comment/trade       comment       comment
//!   +--+            +--+               +--+           +--+
//!   v  |  deposit   v  |   publish     v  | dispute   v  |
//!  ACTIVE ------> UNDER_REVIEW ------> PUBLISHED ---> RETRACTED
//!    ^                |
//!    +----------------+ revise (deposit forfeited)
//! ```
//!
//! Every operation here is a method on [`ProtocolState`] wrapped in
//! [`ProtocolState::transact`], so a rejected operation leaves the article,
//! the ledger and every market exactly as they were.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::{is_hex_digest, sha256_hex};
use crate::ledger::{CreditSource, EscrowOutcome, UserId};
use crate::market::{open_market, MarketId, Outcome, Trade};
use crate::netchain::quorum_size;
use crate::protocol::{MarketEvent, ProtocolError, ProtocolState};

/// Field separator in the canonical metadata encoding (ASCII unit separator).
pub const FIELD_SEPARATOR: u8 = 0x1F;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArticleState {
    Active,
    UnderReview,
    Published,
    Retracted,
}

impl ArticleState {
    pub const ALL: [ArticleState; 4] = [
        ArticleState::Active,
        ArticleState::UnderReview,
        ArticleState::Published,
        ArticleState::Retracted,
    ];

    /// The transition relation of the lifecycle machine.
    pub fn can_become(self, next: ArticleState) -> bool {
        use ArticleState::*;
        matches!(
            (self, next),
            (Active, Active)
                | (Active, UnderReview)
                | (UnderReview, UnderReview)
                | (UnderReview, Active)
                | (UnderReview, Published)
                | (Published, Published)
                | (Published, Retracted)
                | (Retracted, Retracted)
        )
    }
}

impl fmt::Display for ArticleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArticleState::Active => "ACTIVE",
            ArticleState::UnderReview => "UNDER_REVIEW",
            ArticleState::Published => "PUBLISHED",
            ArticleState::Retracted => "RETRACTED",
        })
    }
}

/// SHA-256 of an article's canonical metadata, lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArticleHash(pub String);

impl fmt::Display for ArticleHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetadataError {
    #[error("title must not be empty")]
    EmptyTitle,
    #[error("at least one author is required")]
    NoAuthors,
    #[error("metadata fields must not contain the 0x1F separator")]
    SeparatorInField,
    #[error("`{0}` is not a 64-character lowercase hex digest")]
    InvalidHash(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthorRef {
    pub name: String,
    pub user: UserId,
}

/// The public part of a paper that gets hashed onto the chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentMetadata {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<AuthorRef>,
    #[serde(default)]
    pub institutions: Vec<String>,
}

impl ContentMetadata {
    pub fn validate(&self) -> Result<(), MetadataError> {
        if self.title.trim().is_empty() {
            return Err(MetadataError::EmptyTitle);
        }
        if self.authors.is_empty() {
            return Err(MetadataError::NoAuthors);
        }
        let sep = char::from(FIELD_SEPARATOR);
        let fields = [&self.title, &self.abstract_text]
            .into_iter()
            .chain(self.authors.iter().map(|a| &a.name))
            .chain(self.institutions.iter());
        for f in fields {
            if f.contains(sep) {
                return Err(MetadataError::SeparatorInField);
            }
        }
        Ok(())
    }

    /// Title, abstract, sorted author names, sorted institutions, joined by 0x1F.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut names: Vec<&str> = self.authors.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        let mut institutions: Vec<&str> = self.institutions.iter().map(String::as_str).collect();
        institutions.sort_unstable();
        let parts: Vec<&str> = [self.title.as_str(), self.abstract_text.as_str()]
            .into_iter()
            .chain(names)
            .chain(institutions)
            .collect();
        parts
            .join(&char::from(FIELD_SEPARATOR).to_string())
            .into_bytes()
    }
}

pub fn content_hash(meta: &ContentMetadata) -> Result<ArticleHash, MetadataError> {
    meta.validate()?;
    Ok(ArticleHash(sha256_hex(&meta.canonical_bytes())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub user: UserId,
    pub timestamp: u64,
    pub text_hash: String,
}

/// An open review round: the author's escrowed deposit, the panel and the market.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRound {
    pub author: UserId,
    pub deposit: u64,
    pub panel: Vec<UserId>,
    pub market: MarketId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub hash: ArticleHash,
    pub state: ArticleState,
    pub owners: Vec<UserId>,
    pub doi: Option<String>,
    /// Present exactly while the article is under review.
    pub review: Option<ReviewRound>,
    /// Most recent review market.
    pub market: Option<MarketId>,
    pub comments: Vec<Comment>,
    pub open_dispute: Option<DisputeId>,
}

impl Article {
    fn new(hash: ArticleHash, state: ArticleState, owner: UserId, doi: Option<String>) -> Self {
        Article {
            hash,
            state,
            owners: vec![owner],
            doi,
            review: None,
            market: None,
            comments: Vec::new(),
            open_dispute: None,
        }
    }

    pub fn author_deposit(&self) -> u64 {
        self.review.as_ref().map_or(0, |r| r.deposit)
    }

    /// Checks owners are non-empty and distinct and that a deposit is held
    /// exactly while under review.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.owners.is_empty() {
            return Err("no owners".into());
        }
        let distinct: BTreeSet<&UserId> = self.owners.iter().collect();
        if distinct.len() != self.owners.len() {
            return Err("duplicate owners".into());
        }
        let under_review = self.state == ArticleState::UnderReview;
        if (self.author_deposit() > 0) != under_review {
            return Err(format!(
                "deposit {} in state {}",
                self.author_deposit(),
                self.state
            ));
        }
        Ok(())
    }

    fn expect_state(&self, expected: ArticleState) -> Result<(), ProtocolError> {
        if self.state != expected {
            return Err(ProtocolError::WrongState {
                actual: self.state,
                expected: match expected {
                    ArticleState::Active => "ACTIVE",
                    ArticleState::UnderReview => "UNDER_REVIEW",
                    ArticleState::Published => "PUBLISHED",
                    ArticleState::Retracted => "RETRACTED",
                },
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisputeId(pub u64);

impl fmt::Display for DisputeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisputeVote {
    Retract,
    Uphold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisputeStatus {
    Open,
    Retracted,
    Upheld,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispute {
    pub id: DisputeId,
    pub article: ArticleHash,
    pub challenger: UserId,
    pub stake: u64,
    pub status: DisputeStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReviewResult {
    pub decision: Outcome,
    /// Reward tokens minted per owner (publish only).
    pub rewards: BTreeMap<UserId, u64>,
    pub market_payouts: BTreeMap<UserId, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClaimResult {
    Created,
    OwnerAdded,
}

/// Splits `total` evenly across `owners`; the remainder goes to the first owner.
pub fn split_reward(total: u64, owners: &[UserId]) -> BTreeMap<UserId, u64> {
    let n = owners.len() as u64;
    let share = total / n;
    let remainder = total % n;
    owners
        .iter()
        .enumerate()
        .map(|(i, o)| (o.clone(), share + if i == 0 { remainder } else { 0 }))
        .collect()
}

impl ProtocolState {
    /// Registers new content as an ACTIVE article owned by `submitter`.
    pub fn submit_article(
        &mut self,
        meta: &ContentMetadata,
        submitter: &UserId,
    ) -> Result<ArticleHash, ProtocolError> {
        self.transact(|s| {
            let hash = content_hash(meta)?;
            if s.articles.contains_key(&hash) {
                return Err(ProtocolError::DuplicateArticle(hash));
            }
            let article = Article::new(hash.clone(), ArticleState::Active, submitter.clone(), None);
            s.articles.insert(hash.clone(), article);
            Ok(hash)
        })
    }

    /// Free comment on an ACTIVE, PUBLISHED or RETRACTED article.
    pub fn comment(
        &mut self,
        hash: &ArticleHash,
        user: &UserId,
        text_hash: &str,
    ) -> Result<(), ProtocolError> {
        self.transact(|s| {
            let timestamp = s.clock;
            let article = s.article_mut(hash)?;
            if article.state == ArticleState::UnderReview {
                return Err(ProtocolError::CommentRedirectToMarket);
            }
            article.comments.push(Comment {
                user: user.clone(),
                timestamp,
                text_hash: text_hash.to_string(),
            });
            Ok(())
        })
    }

    /// ACTIVE -> UNDER_REVIEW: escrows the author's deposit and opens the review market.
    pub fn start_review(
        &mut self,
        hash: &ArticleHash,
        author: &UserId,
        deposit: u64,
        panel: &[UserId],
    ) -> Result<MarketId, ProtocolError> {
        self.transact(|s| {
            let config = s.config.clone();
            let article = s
                .articles
                .get(hash)
                .ok_or_else(|| ProtocolError::UnknownArticle(hash.clone()))?;
            article.expect_state(ArticleState::Active)?;
            if !article.owners.contains(author) {
                return Err(ProtocolError::NotOwner(author.clone()));
            }
            if deposit <= config.min_deposit {
                return Err(ProtocolError::DepositTooSmall {
                    deposit,
                    min: config.min_deposit,
                });
            }
            let reward = config.reward_for(deposit);
            if reward <= deposit {
                return Err(ProtocolError::RewardTooSmall { reward, deposit });
            }
            let distinct: BTreeSet<&UserId> = panel.iter().collect();
            if distinct.len() != panel.len() {
                return Err(ProtocolError::InvalidPanel("duplicate reviewer".into()));
            }
            if panel.len() < config.min_panel_size.max(1) {
                return Err(ProtocolError::PanelTooSmall {
                    min: config.min_panel_size.max(1),
                    got: panel.len(),
                });
            }
            if let Some(owner) = panel.iter().find(|r| article.owners.contains(r)) {
                return Err(ProtocolError::InvalidPanel(format!(
                    "owner `{owner}` cannot review"
                )));
            }
            let owners = article.owners.clone();

            s.ledger.escrow(author, deposit)?;
            let id = s.allocate_market();
            let mut market = open_market(id, config.market_liquidity.clone())?;
            if config.bar_authors_from_market {
                for o in owners {
                    market.bar(o);
                }
            }
            s.markets.insert(id, market);
            let article = s.article_mut(hash)?;
            article.state = ArticleState::UnderReview;
            article.market = Some(id);
            article.review = Some(ReviewRound {
                author: author.clone(),
                deposit,
                panel: panel.to_vec(),
                market: id,
            });
            Ok(id)
        })
    }

    /// UNDER_REVIEW -> UNDER_REVIEW: a comment is a trade on the review market.
    pub fn trade_review_market(
        &mut self,
        tx: u64,
        hash: &ArticleHash,
        user: &UserId,
        outcome: Outcome,
        shares: f64,
    ) -> Result<Trade, ProtocolError> {
        self.transact(|s| {
            let article = s
                .articles
                .get(hash)
                .ok_or_else(|| ProtocolError::UnknownArticle(hash.clone()))?;
            article.expect_state(ArticleState::UnderReview)?;
            let id = article.review.as_ref().expect("under review").market;
            let ProtocolState {
                ledger, markets, ..
            } = s;
            let market = markets
                .get_mut(&id)
                .ok_or(ProtocolError::UnknownMarket(id))?;
            let trade = market.trade(ledger, user, outcome, shares)?;
            s.market_events.push(MarketEvent {
                tx,
                market: id,
                user: user.clone(),
                outcome,
                shares,
                cost: trade.cost,
            });
            Ok(trade)
        })
    }

    /// Settles a review by strict majority of the full panel.
    ///
    /// Publish: deposit refunded, reward minted to the owners, market pays
    /// PUBLISH holders. Revise: deposit forfeited to the reserve, market pays
    /// REVISE holders, article back to ACTIVE.
    pub fn conclude_review(
        &mut self,
        hash: &ArticleHash,
        votes: &BTreeMap<UserId, Outcome>,
    ) -> Result<ReviewResult, ProtocolError> {
        self.transact(|s| {
            let article = s
                .articles
                .get(hash)
                .ok_or_else(|| ProtocolError::UnknownArticle(hash.clone()))?;
            article.expect_state(ArticleState::UnderReview)?;
            let review = article.review.clone().expect("under review");
            let owners = article.owners.clone();
            if let Some(outsider) = votes.keys().find(|v| !review.panel.contains(v)) {
                return Err(ProtocolError::NotPanelist(outsider.clone()));
            }
            let count = |o: Outcome| votes.values().filter(|&&v| v == o).count();
            let panel = review.panel.len();
            let decision = if 2 * count(Outcome::Publish) > panel {
                Outcome::Publish
            } else if 2 * count(Outcome::Revise) > panel {
                Outcome::Revise
            } else {
                return Err(ProtocolError::NoQuorum {
                    detail: format!(
                        "{} publish / {} revise of a {panel}-member panel",
                        count(Outcome::Publish),
                        count(Outcome::Revise)
                    ),
                });
            };

            let mut rewards = BTreeMap::new();
            let next_state = match decision {
                Outcome::Publish => {
                    s.ledger.resolve_escrow(
                        &review.author,
                        review.deposit,
                        EscrowOutcome::Refund,
                    )?;
                    rewards = split_reward(s.config.reward_for(review.deposit), &owners);
                    for (owner, amount) in &rewards {
                        if *amount > 0 {
                            s.ledger.credit(owner, *amount, CreditSource::Mint)?;
                        }
                    }
                    ArticleState::Published
                }
                Outcome::Revise => {
                    s.ledger.resolve_escrow(
                        &review.author,
                        review.deposit,
                        EscrowOutcome::Forfeit,
                    )?;
                    ArticleState::Active
                }
            };
            let ProtocolState {
                ledger, markets, ..
            } = s;
            let market = markets
                .get_mut(&review.market)
                .ok_or(ProtocolError::UnknownMarket(review.market))?;
            let market_payouts = market.resolve(ledger, decision)?;

            let article = s.article_mut(hash)?;
            article.state = next_state;
            article.review = None;
            Ok(ReviewResult {
                decision,
                rewards,
                market_payouts,
            })
        })
    }

    /// PUBLISHED: escrows the challenger's stake and opens a dispute for the peers.
    pub fn raise_objection(
        &mut self,
        hash: &ArticleHash,
        challenger: &UserId,
        stake: u64,
    ) -> Result<DisputeId, ProtocolError> {
        self.transact(|s| {
            let article = s
                .articles
                .get(hash)
                .ok_or_else(|| ProtocolError::UnknownArticle(hash.clone()))?;
            article.expect_state(ArticleState::Published)?;
            if stake == 0 {
                return Err(ProtocolError::ZeroStake);
            }
            if article.open_dispute.is_some() {
                return Err(ProtocolError::DisputeAlreadyOpen);
            }
            s.ledger.escrow(challenger, stake)?;
            let id = s.allocate_dispute();
            s.disputes.insert(
                id,
                Dispute {
                    id,
                    article: hash.clone(),
                    challenger: challenger.clone(),
                    stake,
                    status: DisputeStatus::Open,
                },
            );
            s.article_mut(hash)?.open_dispute = Some(id);
            Ok(id)
        })
    }

    /// Peer verdict on a dispute. Needs votes from a quorum
    /// (`floor(2n/3) + 1`) of the registered peers; more retract votes than
    /// uphold votes retracts the article, otherwise it stands.
    ///
    /// Retract: stake refunded plus an equal bounty from the reserve.
    /// Uphold: stake forfeited to the reserve.
    pub fn resolve_dispute(
        &mut self,
        id: DisputeId,
        votes: &BTreeMap<UserId, DisputeVote>,
    ) -> Result<DisputeStatus, ProtocolError> {
        self.transact(|s| {
            let dispute = s
                .disputes
                .get(&id)
                .ok_or(ProtocolError::UnknownDispute(id))?
                .clone();
            if dispute.status != DisputeStatus::Open {
                return Err(ProtocolError::DisputeClosed(id));
            }
            if let Some(outsider) = votes.keys().find(|v| !s.is_peer(v)) {
                return Err(ProtocolError::NotPeer(outsider.clone()));
            }
            let quorum = quorum_size(s.peers.len());
            if votes.len() < quorum {
                return Err(ProtocolError::NoQuorum {
                    detail: format!(
                        "{} of {} peers voted, need {quorum}",
                        votes.len(),
                        s.peers.len()
                    ),
                });
            }
            let retract = votes
                .values()
                .filter(|&&v| v == DisputeVote::Retract)
                .count();
            let uphold = votes.len() - retract;
            let status = if retract > uphold {
                s.ledger.resolve_escrow(
                    &dispute.challenger,
                    dispute.stake,
                    EscrowOutcome::Refund,
                )?;
                s.ledger.disburse(&dispute.challenger, dispute.stake)?;
                DisputeStatus::Retracted
            } else {
                s.ledger.resolve_escrow(
                    &dispute.challenger,
                    dispute.stake,
                    EscrowOutcome::Forfeit,
                )?;
                DisputeStatus::Upheld
            };
            let article = s.article_mut(&dispute.article)?;
            article.open_dispute = None;
            if status == DisputeStatus::Retracted {
                article.state = ArticleState::Retracted;
            }
            s.disputes.get_mut(&id).expect("checked above").status = status;
            Ok(status)
        })
    }

    /// Claims an article published elsewhere: creates it as PUBLISHED, or adds
    /// the caller as a further owner of an existing one.
    pub fn claim_published_article(
        &mut self,
        hash: &ArticleHash,
        doi: &str,
        caller: &UserId,
    ) -> Result<ClaimResult, ProtocolError> {
        self.transact(|s| {
            if !is_hex_digest(&hash.0) {
                return Err(MetadataError::InvalidHash(hash.0.clone()).into());
            }
            match s.articles.get_mut(hash) {
                Some(article) => {
                    if article.owners.contains(caller) {
                        return Err(ProtocolError::AlreadyClaimed);
                    }
                    article.owners.push(caller.clone());
                    Ok(ClaimResult::OwnerAdded)
                }
                None => {
                    let article = Article::new(
                        hash.clone(),
                        ArticleState::Published,
                        caller.clone(),
                        Some(doi.to_string()),
                    );
                    s.articles.insert(hash.clone(), article);
                    Ok(ClaimResult::Created)
                }
            }
        })
    }
}
