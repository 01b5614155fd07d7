//! A small permissioned chain.
//!
//! Peers re-execute each proposed batch of transactions against the tip
//! state and approve the block only if they compute the proposer's state
//! hash. A block commits with `floor(2n/3) + 1` approvals. Transactions that
//! fail are kept in the block, flagged with their rejection reason, and leave
//! the state untouched.
//!
//! Signatures are placeholders: a transaction's `signature` is the SHA-256 of
//! its unsigned content, so it detects corruption but proves no identity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::digest::{canonical_json, canonical_json_hash, is_hex_digest, sha256_hex};
use crate::ledger::{CreditSource, UserId};
use crate::lifecycle::{ArticleHash, ContentMetadata, DisputeId, DisputeVote};
use crate::market::Outcome;
use crate::protocol::{ProtocolError, ProtocolState};

pub const GENESIS_PREV_HASH: &str =
    "0000000000000000000000000000000000000000000000000000000000000000";

/// Approvals needed among `peers` participants.
pub fn quorum_size(peers: usize) -> usize {
    2 * peers / 3 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TxKind {
    /// Platform mint to a user.
    Credit {
        user: UserId,
        amount: u64,
    },
    SubmitArticle {
        meta: ContentMetadata,
    },
    Comment {
        article: ArticleHash,
        text_hash: String,
    },
    StartReview {
        article: ArticleHash,
        deposit: u64,
        panel: Vec<UserId>,
    },
    Trade {
        article: ArticleHash,
        outcome: Outcome,
        shares: f64,
    },
    ConcludeReview {
        article: ArticleHash,
        votes: BTreeMap<UserId, Outcome>,
    },
    RaiseObjection {
        article: ArticleHash,
        stake: u64,
    },
    ResolveDispute {
        dispute: DisputeId,
        votes: BTreeMap<UserId, DisputeVote>,
    },
    ClaimPublishedArticle {
        article_hash: ArticleHash,
        doi: String,
    },
}

impl TxKind {
    fn check_well_formed(&self) -> Result<(), String> {
        let hash_ok = |h: &ArticleHash| {
            if is_hex_digest(&h.0) {
                Ok(())
            } else {
                Err(format!("article `{}` is not a hex digest", h.0))
            }
        };
        match self {
            TxKind::Credit { amount, .. } if *amount == 0 => Err("credit amount is zero".into()),
            TxKind::Credit { .. } => Ok(()),
            TxKind::SubmitArticle { meta } => meta.validate().map_err(|e| e.to_string()),
            TxKind::Comment { article, .. } => hash_ok(article),
            TxKind::StartReview { article, panel, .. } => {
                hash_ok(article)?;
                if panel.is_empty() {
                    return Err("empty review panel".into());
                }
                Ok(())
            }
            TxKind::Trade {
                article, shares, ..
            } => {
                hash_ok(article)?;
                if !shares.is_finite() || *shares == 0.0 {
                    return Err("shares must be finite and non-zero".into());
                }
                Ok(())
            }
            TxKind::ConcludeReview { article, votes } => {
                hash_ok(article)?;
                if votes.is_empty() {
                    return Err("no review votes".into());
                }
                Ok(())
            }
            TxKind::RaiseObjection { article, .. } => hash_ok(article),
            TxKind::ResolveDispute { votes, .. } if votes.is_empty() => {
                Err("no dispute votes".into())
            }
            TxKind::ResolveDispute { .. } => Ok(()),
            TxKind::ClaimPublishedArticle { article_hash, .. } => hash_ok(article_hash),
        }
    }

    /// Operations only the platform identity may submit.
    pub fn platform_only(&self) -> bool {
        matches!(
            self,
            TxKind::Credit { .. } | TxKind::ConcludeReview { .. } | TxKind::ResolveDispute { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub tx_id: u64,
    pub submitter: UserId,
    pub kind: TxKind,
    pub signature: String,
}

#[derive(Serialize)]
struct UnsignedTx<'a> {
    tx_id: u64,
    submitter: &'a UserId,
    kind: &'a TxKind,
}

impl Transaction {
    pub fn new(tx_id: u64, submitter: UserId, kind: TxKind) -> Self {
        let signature = Self::placeholder_signature(tx_id, &submitter, &kind);
        Transaction {
            tx_id,
            submitter,
            kind,
            signature,
        }
    }

    fn placeholder_signature(tx_id: u64, submitter: &UserId, kind: &TxKind) -> String {
        canonical_json_hash(&UnsignedTx {
            tx_id,
            submitter,
            kind,
        })
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        let malformed = |reason: String| ChainError::MalformedTx {
            tx_id: self.tx_id,
            reason,
        };
        if self.submitter.as_str().is_empty() {
            return Err(malformed("empty submitter".into()));
        }
        self.kind.check_well_formed().map_err(malformed)?;
        if self.signature != Self::placeholder_signature(self.tx_id, &self.submitter, &self.kind) {
            return Err(malformed("signature does not match content".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("malformed transaction {tx_id}: {reason}")]
    MalformedTx { tx_id: u64, reason: String },
    #[error("transaction id {tx_id} must exceed {last}")]
    NonIncreasingTxId { tx_id: u64, last: u64 },
    #[error("no pending transactions")]
    EmptyPool,
    #[error("block {height} got {approvals} approvals, quorum is {quorum}")]
    QuorumFailure {
        height: u64,
        approvals: usize,
        quorum: usize,
    },
    #[error("peer set is empty")]
    NoPeers,
    #[error("chain export line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Pending transactions in submission order.
#[derive(Debug, Clone, Default)]
pub struct TxPool {
    pending: VecDeque<Transaction>,
    last_id: Option<u64>,
}

impl TxPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// A pool continuing after the last transaction already on `chain`.
    pub fn after(chain: &Chain) -> Self {
        TxPool {
            pending: VecDeque::new(),
            last_id: chain.last_tx_id(),
        }
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn pending(&self) -> impl Iterator<Item = &Transaction> {
        self.pending.iter()
    }

    pub fn next_tx_id(&self) -> u64 {
        self.last_id.map_or(0, |id| id + 1)
    }

    pub fn submit(&mut self, tx: Transaction) -> Result<(), ChainError> {
        tx.validate()?;
        if let Some(last) = self.last_id {
            if tx.tx_id <= last {
                return Err(ChainError::NonIncreasingTxId {
                    tx_id: tx.tx_id,
                    last,
                });
            }
        }
        self.last_id = Some(tx.tx_id);
        self.pending.push_back(tx);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerSet {
    pub peers: Vec<UserId>,
    /// Peers that report a corrupted state hash, for fault simulation.
    #[serde(default)]
    pub faulty: BTreeSet<UserId>,
}

impl PeerSet {
    pub fn new(peers: Vec<UserId>) -> Result<Self, ChainError> {
        if peers.is_empty() {
            return Err(ChainError::NoPeers);
        }
        Ok(PeerSet {
            peers,
            faulty: BTreeSet::new(),
        })
    }

    pub fn with_faulty(mut self, faulty: impl IntoIterator<Item = UserId>) -> Self {
        self.faulty.extend(faulty);
        self
    }

    pub fn quorum(&self) -> usize {
        quorum_size(self.peers.len())
    }
}

/// A transaction as recorded in a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockTx {
    pub tx: Transaction,
    /// Why execution failed; `None` when it applied.
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub prev_hash: String,
    pub txs: Vec<BlockTx>,
    pub state_hash: String,
    pub approvals: Vec<UserId>,
}

impl Block {
    /// The block as one line of the chain export.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("blocks always serialize")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json_line().as_bytes())
    }
}

/// Digest of the canonical serialization of the full protocol state.
pub fn state_hash(state: &ProtocolState) -> String {
    canonical_json_hash(state)
}

/// Canonical serialization used by [`state_hash`].
pub fn canonical_state(state: &ProtocolState) -> String {
    canonical_json(state)
}

/// Applies one transaction, rolling back on failure.
pub fn execute(state: &mut ProtocolState, tx: &Transaction) -> Result<(), ProtocolError> {
    if tx.kind.platform_only() && tx.submitter != state.config.platform {
        return Err(ProtocolError::Unauthorized(tx.submitter.clone()));
    }
    let who = &tx.submitter;
    match &tx.kind {
        TxKind::Credit { user, amount } => state.transact(|s| {
            s.ledger
                .credit(user, *amount, CreditSource::Mint)
                .map_err(Into::into)
        }),
        TxKind::SubmitArticle { meta } => state.submit_article(meta, who).map(drop),
        TxKind::Comment { article, text_hash } => state.comment(article, who, text_hash),
        TxKind::StartReview {
            article,
            deposit,
            panel,
        } => state.start_review(article, who, *deposit, panel).map(drop),
        TxKind::Trade {
            article,
            outcome,
            shares,
        } => state
            .trade_review_market(tx.tx_id, article, who, *outcome, *shares)
            .map(drop),
        TxKind::ConcludeReview { article, votes } => {
            state.conclude_review(article, votes).map(drop)
        }
        TxKind::RaiseObjection { article, stake } => {
            state.raise_objection(article, who, *stake).map(drop)
        }
        TxKind::ResolveDispute { dispute, votes } => {
            state.resolve_dispute(*dispute, votes).map(drop)
        }
        TxKind::ClaimPublishedArticle { article_hash, doi } => state
            .claim_published_article(article_hash, doi, who)
            .map(drop),
    }
}

/// Executes a batch; returns the post-state and each transaction's record.
pub fn execute_batch<'a>(
    tip: &ProtocolState,
    txs: impl IntoIterator<Item = &'a Transaction>,
) -> (ProtocolState, Vec<BlockTx>) {
    let mut state = tip.clone();
    let records = txs
        .into_iter()
        .map(|tx| BlockTx {
            tx: tx.clone(),
            rejected: execute(&mut state, tx).err().map(|e| e.to_string()),
        })
        .collect();
    (state, records)
}

#[derive(Debug, Clone)]
pub struct Chain {
    genesis: ProtocolState,
    blocks: Vec<Block>,
    tip: ProtocolState,
}

impl Chain {
    pub fn new(genesis: ProtocolState) -> Self {
        Chain {
            tip: genesis.clone(),
            genesis,
            blocks: Vec::new(),
        }
    }

    pub fn genesis(&self) -> &ProtocolState {
        &self.genesis
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &ProtocolState {
        &self.tip
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn tip_hash(&self) -> String {
        self.blocks
            .last()
            .map_or_else(|| GENESIS_PREV_HASH.to_string(), Block::hash)
    }

    pub fn last_tx_id(&self) -> Option<u64> {
        self.blocks
            .iter()
            .rev()
            .find_map(|b| b.txs.last().map(|t| t.tx.tx_id))
    }

    /// Proposes the whole pool as the next block and collects approvals.
    ///
    /// The proposer rotates with the height. Every peer re-executes the batch
    /// on its own copy of the tip (in parallel); honest peers report the true
    /// state hash, faulty ones a corrupted one. Peers whose hash matches the
    /// proposer's approve. Below quorum nothing changes and the pool is kept.
    pub fn produce_block(
        &mut self,
        pool: &mut TxPool,
        peers: &PeerSet,
    ) -> Result<&Block, ChainError> {
        if pool.is_empty() {
            return Err(ChainError::EmptyPool);
        }
        if peers.peers.is_empty() {
            return Err(ChainError::NoPeers);
        }
        let height = self.height();
        let txs: Vec<Transaction> = pool.pending.iter().cloned().collect();
        let tip = &self.tip;

        let results: Vec<(String, ProtocolState, Vec<BlockTx>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = peers
                .peers
                .iter()
                .map(|peer| {
                    let txs = &txs;
                    scope.spawn(move || {
                        let (state, records) = execute_batch(tip, txs);
                        let mut hash = state_hash(&state);
                        if peers.faulty.contains(peer) {
                            hash = sha256_hex(format!("{hash}/{peer}").as_bytes());
                        }
                        (hash, state, records)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("peer execution panicked"))
                .collect()
        });

        let proposer = (height as usize) % peers.peers.len();
        let proposed = results[proposer].0.clone();
        let mut approvals: Vec<UserId> = peers
            .peers
            .iter()
            .zip(&results)
            .filter(|(_, (hash, _, _))| *hash == proposed)
            .map(|(peer, _)| peer.clone())
            .collect();
        approvals.sort();
        let quorum = peers.quorum();
        if approvals.len() < quorum {
            return Err(ChainError::QuorumFailure {
                height,
                approvals: approvals.len(),
                quorum,
            });
        }

        let (_, state, records) = results.into_iter().nth(proposer).expect("proposer result");
        let block = Block {
            height,
            prev_hash: self.tip_hash(),
            txs: records,
            state_hash: proposed,
            approvals,
        };
        pool.pending.clear();
        self.tip = state;
        self.blocks.push(block);
        Ok(self.blocks.last().expect("just pushed"))
    }

    /// JSON lines, one block per line.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&b.to_json_line());
            out.push('\n');
        }
        out
    }
}

pub fn parse_chain_export(text: &str) -> Result<Vec<Block>, ChainError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ChainError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub valid: bool,
    /// First height at which replay or linkage diverged.
    pub divergent_height: Option<u64>,
    pub reason: Option<String>,
    pub final_state_hash: String,
}

impl VerifyReport {
    fn fail(height: u64, reason: impl Into<String>) -> Self {
        VerifyReport {
            valid: false,
            divergent_height: Some(height),
            reason: Some(reason.into()),
            final_state_hash: String::new(),
        }
    }
}

/// Replays `blocks` from `genesis`, checking links, heights, transaction
/// integrity and ordering, recorded rejections, state hashes and approvals
/// against the genesis peer set.
pub fn verify_chain(blocks: &[Block], genesis: &ProtocolState) -> VerifyReport {
    let peers: BTreeSet<&UserId> = genesis.peers.iter().collect();
    let quorum = quorum_size(genesis.peers.len());
    let mut state = genesis.clone();
    let mut prev_hash = GENESIS_PREV_HASH.to_string();
    let mut last_tx: Option<u64> = None;

    for (i, block) in blocks.iter().enumerate() {
        let h = i as u64;
        if block.height != h {
            return VerifyReport::fail(h, format!("height {} at position {h}", block.height));
        }
        if block.prev_hash != prev_hash {
            return VerifyReport::fail(h, "prev_hash does not link to the preceding block");
        }
        if block.txs.is_empty() {
            return VerifyReport::fail(h, "empty block");
        }
        let sorted = block.approvals.windows(2).all(|w| w[0] < w[1]);
        if !sorted || block.approvals.iter().any(|a| !peers.contains(a)) {
            return VerifyReport::fail(h, "approvals are not distinct sorted peers");
        }
        if block.approvals.len() < quorum {
            return VerifyReport::fail(h, "approvals below quorum");
        }
        for record in &block.txs {
            if let Err(e) = record.tx.validate() {
                return VerifyReport::fail(h, e.to_string());
            }
            if last_tx.is_some_and(|last| record.tx.tx_id <= last) {
                return VerifyReport::fail(h, format!("tx id {} out of order", record.tx.tx_id));
            }
            last_tx = Some(record.tx.tx_id);
            let replayed = execute(&mut state, &record.tx).err().map(|e| e.to_string());
            if replayed != record.rejected {
                return VerifyReport::fail(
                    h,
                    format!("tx {} outcome differs on replay", record.tx.tx_id),
                );
            }
        }
        if state_hash(&state) != block.state_hash {
            return VerifyReport::fail(h, "state hash differs on replay");
        }
        prev_hash = block.hash();
    }
    VerifyReport {
        valid: true,
        divergent_height: None,
        reason: None,
        final_state_hash: state_hash(&state),
    }
}
