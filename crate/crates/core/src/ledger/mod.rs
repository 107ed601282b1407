//! Ideal public ledger: signed transactions, an adversarially ordered mempool
//! with a synchrony bound Δ, blocks on a discrete clock, token balances, and
//! contract accounts.
//!
//! There are no forks. Once a transaction is in a block its effects are final.
//! Every accepted transaction is included within Δ blocks of submission.

mod contract;
pub mod mempool;
mod tx;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::crypto::{hash_fields, verify_sig, Digest};

pub use contract::{CallCtx, Constructor, Contract, Event, Reject, VerifierRegistry};
pub use mempool::{MempoolPolicy, PendingView, PolicyChoice};
pub use tx::{Address, Target, Transaction, ADDRESS_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("signature does not verify")]
    BadSignature,
    #[error("sender address does not match the sender key")]
    SenderMismatch,
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("insufficient balance: have {available}, need {needed}")]
    InsufficientBalance { available: u64, needed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerConfig {
    /// Synchrony bound: a transaction submitted at height h is in a block
    /// no later than h + delta.
    pub delta: u64,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self { delta: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxStatus {
    Ok,
    Failed(String),
}

impl fmt::Display for TxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxStatus::Ok => f.write_str("ok"),
            TxStatus::Failed(r) => write!(f, "failed:{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub tx_id: Digest,
    pub kind: &'static str,
    pub status: TxStatus,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub height: u64,
    pub parent: Digest,
    pub txs: Vec<Transaction>,
    pub receipts: Vec<Receipt>,
    pub hash: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inclusion {
    pub seq: u64,
    pub submitted_at: u64,
    pub included_at: u64,
    pub ok: bool,
}

struct Pending {
    seq: u64,
    submitted_at: u64,
    tx: Transaction,
}

/// `src`'s balance −v, `dst`'s balance +v; false and no change if `src` is short.
pub fn transfer(balances: &mut BTreeMap<Address, u64>, src: &Address, dst: &Address, v: u64) -> bool {
    let have = balances.get(src).copied().unwrap_or(0);
    if have < v {
        return false;
    }
    if v == 0 || src == dst {
        return true;
    }
    balances.insert(*src, have - v);
    *balances.entry(*dst).or_default() += v;
    true
}

pub struct Ledger {
    config: LedgerConfig,
    height: u64,
    supply: u64,
    balances: BTreeMap<Address, u64>,
    nonces: BTreeMap<Address, u64>,
    deploy_counters: BTreeMap<Address, u64>,
    contracts: BTreeMap<Address, Box<dyn Contract>>,
    constructor: Constructor,
    verifiers: VerifierRegistry,
    mempool: Vec<Pending>,
    next_seq: u64,
    blocks: Vec<Block>,
    inclusions: Vec<Inclusion>,
    events: Vec<Event>,
    trace: Vec<String>,
}

impl fmt::Debug for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height)
            .field("supply", &self.supply)
            .field("contracts", &self.contracts.len())
            .field("pending", &self.mempool.len())
            .finish_non_exhaustive()
    }
}

impl Ledger {
    pub fn new(
        config: LedgerConfig,
        genesis: impl IntoIterator<Item = (Address, u64)>,
        verifiers: VerifierRegistry,
        constructor: Constructor,
    ) -> Self {
        let mut balances = BTreeMap::new();
        for (addr, v) in genesis {
            *balances.entry(addr).or_default() += v;
        }
        let supply = balances.values().sum();
        Self {
            config,
            height: 0,
            supply,
            balances,
            nonces: BTreeMap::new(),
            deploy_counters: BTreeMap::new(),
            contracts: BTreeMap::new(),
            constructor,
            verifiers,
            mempool: Vec::new(),
            next_seq: 0,
            blocks: Vec::new(),
            inclusions: Vec::new(),
            events: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn config(&self) -> LedgerConfig {
        self.config
    }

    /// Height of the last mined block; 0 before the first.
    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn get_balance(&self, addr: &Address) -> u64 {
        self.balances.get(addr).copied().unwrap_or(0)
    }

    pub fn initial_supply(&self) -> u64 {
        self.supply
    }

    pub fn total_balance(&self) -> u64 {
        self.balances.values().sum()
    }

    pub fn verifiers(&self) -> &VerifierRegistry {
        &self.verifiers
    }

    fn pending_from(&self, sender: &Address) -> impl Iterator<Item = &Pending> {
        let sender = *sender;
        self.mempool.iter().filter(move |p| p.tx.sender == sender)
    }

    /// Nonce the next transaction from `addr` must carry, counting pending ones.
    pub fn next_nonce(&self, addr: &Address) -> u64 {
        self.nonces.get(addr).copied().unwrap_or(0) + self.pending_from(addr).count() as u64
    }

    /// Address the next deployment from `deployer` will receive.
    pub fn predict_contract_address(&self, deployer: &Address) -> Address {
        let pending = self
            .pending_from(deployer)
            .filter(|p| p.tx.target == Target::Deploy)
            .count() as u64;
        let counter = self.deploy_counters.get(deployer).copied().unwrap_or(0) + pending;
        Address::contract(deployer, counter)
    }

    pub fn submit_tx(&mut self, tx: Transaction) -> Result<u64, RejectReason> {
        if !verify_sig(&tx.sender_pk.0, &tx.signing_bytes(), &tx.sig.0) {
            return Err(RejectReason::BadSignature);
        }
        if Address::from_pk(&tx.sender_pk) != tx.sender {
            return Err(RejectReason::SenderMismatch);
        }
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(RejectReason::BadNonce {
                expected,
                got: tx.nonce,
            });
        }
        let committed: u64 = self.pending_from(&tx.sender).map(|p| p.tx.value).sum();
        let available = self.get_balance(&tx.sender).saturating_sub(committed);
        if available < tx.value {
            return Err(RejectReason::InsufficientBalance {
                available,
                needed: tx.value,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.mempool.push(Pending {
            seq,
            submitted_at: self.height,
            tx,
        });
        Ok(seq)
    }

    /// Public mempool contents, in submission order.
    pub fn pending(&self) -> Vec<PendingView<'_>> {
        self.mempool
            .iter()
            .map(|p| PendingView {
                seq: p.seq,
                submitted_at: p.submitted_at,
                deadline: p.submitted_at + self.config.delta,
                tx: &p.tx,
            })
            .collect()
    }

    pub fn contract(&self, addr: &Address) -> Option<&dyn Contract> {
        self.contracts.get(addr).map(|c| c.as_ref())
    }

    pub fn contract_as<T: 'static>(&self, addr: &Address) -> Option<&T> {
        self.contracts.get(addr)?.as_any().downcast_ref()
    }

    pub fn contract_addresses(&self) -> impl Iterator<Item = &Address> {
        self.contracts.keys()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn inclusions(&self) -> &[Inclusion] {
        &self.inclusions
    }

    /// Where and how the transaction with sequence number `seq` landed.
    pub fn inclusion(&self, seq: u64) -> Option<&Inclusion> {
        self.inclusions.iter().find(|i| i.seq == seq)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn trace_lines(&self) -> &[String] {
        &self.trace
    }

    /// Every byte committed to the chain, transaction by transaction.
    pub fn on_ledger_bytes(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        self.blocks.iter().flat_map(|b| b.txs.iter().map(Transaction::to_bytes))
    }

    fn order_for_block(&self, height: u64, policy: &mut dyn MempoolPolicy) -> Vec<usize> {
        let views = self.pending();
        let mut seen = BTreeSet::new();
        let mut order: Vec<usize> = policy
            .schedule(height, &views)
            .into_iter()
            .filter(|&i| i < views.len() && seen.insert(i))
            .collect();
        for (i, v) in views.iter().enumerate() {
            if v.deadline <= height && seen.insert(i) {
                order.push(i);
            }
        }
        // per sender, keep nonce order within the slots the policy chose and
        // drop anything past a gap; earlier nonces have earlier deadlines, so
        // this never defers a forced transaction
        let mut by_sender: BTreeMap<Address, Vec<usize>> = BTreeMap::new();
        for &i in &order {
            by_sender.entry(views[i].tx.sender).or_default().push(i);
        }
        let mut slot_fill: BTreeMap<usize, Option<usize>> = BTreeMap::new();
        for (sender, slots) in by_sender {
            let mut sorted = slots.clone();
            sorted.sort_by_key(|&i| views[i].tx.nonce);
            let mut next = self.nonces.get(&sender).copied().unwrap_or(0);
            let mut keep = Vec::new();
            for i in sorted {
                if views[i].tx.nonce == next {
                    keep.push(i);
                    next += 1;
                }
            }
            let mut slots = slots;
            slots.sort_by_key(|s| order.iter().position(|o| o == s));
            for (k, slot) in slots.iter().enumerate() {
                slot_fill.insert(*slot, keep.get(k).copied());
            }
        }
        order.iter().filter_map(|slot| slot_fill[slot]).collect()
    }

    /// Produces the next block: the policy orders the mempool, contracts see
    /// the clock tick, then the transactions execute in order.
    pub fn mine_block(&mut self, policy: &mut dyn MempoolPolicy) -> &Block {
        let height = self.height + 1;
        let order = self.order_for_block(height, policy);

        let mut submitted: Vec<u64> = order.iter().map(|&i| self.mempool[i].seq).collect();
        let executed = submitted.clone();
        submitted.sort_unstable();
        let chosen: BTreeSet<usize> = order.iter().copied().collect();
        let mut taken: Vec<Option<Pending>> = Vec::new();
        let mut remaining = Vec::new();
        let mut slots: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, p) in std::mem::take(&mut self.mempool).into_iter().enumerate() {
            if chosen.contains(&i) {
                slots.insert(i, taken.len());
                taken.push(Some(p));
            } else {
                remaining.push(p);
            }
        }
        self.mempool = remaining;
        let batch: Vec<Pending> = order.iter().map(|i| taken[slots[i]].take().expect("each slot once")).collect();

        self.height = height;
        self.trace.push(format!(
            "#order\t{height}\t{}\t{}\t{}",
            policy.name(),
            join_seqs(&submitted),
            join_seqs(&executed)
        ));

        self.tick_contracts(height);

        let mut txs = Vec::with_capacity(batch.len());
        let mut receipts = Vec::with_capacity(batch.len());
        for p in batch {
            let receipt = self.execute(height, &p.tx);
            self.trace.push(format!(
                "{height}\t{}\t{}\t{}\t{}\t{}",
                p.tx.sender,
                p.tx.target,
                receipt.kind,
                receipt.status,
                p.tx.value
            ));
            self.inclusions.push(Inclusion {
                seq: p.seq,
                submitted_at: p.submitted_at,
                included_at: height,
                ok: receipt.status == TxStatus::Ok,
            });
            txs.push(p.tx);
            receipts.push(receipt);
        }

        debug_assert_eq!(self.total_balance(), self.supply, "token supply not conserved");

        let parent = self.blocks.last().map(|b| b.hash).unwrap_or(Digest([0; 32]));
        let mut fields: Vec<Vec<u8>> = vec![b"zl-block".to_vec(), height.to_be_bytes().to_vec(), parent.0.to_vec()];
        for (tx, r) in txs.iter().zip(&receipts) {
            fields.push(tx.id().0.to_vec());
            fields.push(r.status.to_string().into_bytes());
        }
        let refs: Vec<&[u8]> = fields.iter().map(Vec::as_slice).collect();
        let hash = hash_fields(&refs);
        self.blocks.push(Block {
            height,
            parent,
            txs,
            receipts,
            hash,
        });
        self.blocks.last().expect("just pushed")
    }

    fn tick_contracts(&mut self, height: u64) {
        let addrs: Vec<Address> = self.contracts.keys().copied().collect();
        for addr in addrs {
            let mut c = self.contracts.remove(&addr).expect("listed");
            let first_event = self.events.len();
            let mut ctx = CallCtx {
                height,
                this: addr,
                sender: addr,
                value: 0,
                balances: &mut self.balances,
                verifiers: &self.verifiers,
                events: &mut self.events,
            };
            c.on_block(&mut ctx);
            self.trace_events(first_event);
            self.contracts.insert(addr, c);
        }
    }

    fn trace_events(&mut self, from: usize) {
        for e in &self.events[from..] {
            self.trace
                .push(format!("#event\t{}\t{}\t{}\t{}", e.height, e.contract, e.name, e.detail));
        }
    }

    fn execute(&mut self, height: u64, tx: &Transaction) -> Receipt {
        *self.nonces.entry(tx.sender).or_default() += 1;
        let tx_id = tx.id();
        let fallback_kind = match tx.target {
            Target::Deploy => "deploy",
            Target::Call(a) if self.contracts.contains_key(&a) => "call",
            Target::Call(_) => "transfer",
        };
        if self.get_balance(&tx.sender) < tx.value {
            return Receipt {
                tx_id,
                kind: fallback_kind,
                status: TxStatus::Failed("insufficient balance".into()),
            };
        }

        let (this, existing) = match tx.target {
            Target::Deploy => {
                let counter = self.deploy_counters.entry(tx.sender).or_default();
                let addr = Address::contract(&tx.sender, *counter);
                *counter += 1;
                if self.contracts.contains_key(&addr) {
                    return Receipt {
                        tx_id,
                        kind: "deploy",
                        status: TxStatus::Failed("address in use".into()),
                    };
                }
                (addr, None)
            }
            Target::Call(addr) => match self.contracts.remove(&addr) {
                Some(c) => (addr, Some(c)),
                None => {
                    transfer(&mut self.balances, &tx.sender, &addr, tx.value);
                    return Receipt {
                        tx_id,
                        kind: "transfer",
                        status: TxStatus::Ok,
                    };
                }
            },
        };

        let snapshot = self.balances.clone();
        let first_event = self.events.len();
        transfer(&mut self.balances, &tx.sender, &this, tx.value);
        let mut ctx = CallCtx {
            height,
            this,
            sender: tx.sender,
            value: tx.value,
            balances: &mut self.balances,
            verifiers: &self.verifiers,
            events: &mut self.events,
        };
        let (result, contract) = match existing {
            None => match (self.constructor)(&mut ctx, &tx.payload) {
                Ok(c) => (Ok("deploy"), Some(c)),
                Err(r) => (Err(Reject { kind: "deploy", ..r }), None),
            },
            Some(mut c) => (c.call(&mut ctx, &tx.payload), Some(c)),
        };
        if let Some(c) = contract {
            self.contracts.insert(this, c);
        }
        match result {
            Ok(kind) => {
                self.trace_events(first_event);
                Receipt {
                    tx_id,
                    kind,
                    status: TxStatus::Ok,
                }
            }
            Err(r) => {
                self.balances = snapshot;
                self.events.truncate(first_event);
                Receipt {
                    tx_id,
                    kind: r.kind,
                    status: TxStatus::Failed(r.reason),
                }
            }
        }
    }
}

fn join_seqs(seqs: &[u64]) -> String {
    if seqs.is_empty() {
        return "-".into();
    }
    seqs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}
