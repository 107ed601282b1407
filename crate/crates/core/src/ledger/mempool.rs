//! Network-adversary hooks over the mempool.
//!
//! A policy picks which pending transactions go into the next block and in
//! what order. It cannot forge, mutate, or withhold a transaction past the
//! synchrony bound: the ledger appends every transaction whose deadline is the
//! current block, whatever the policy returned.

use std::fmt;
use std::str::FromStr;

use super::Transaction;

#[derive(Debug, Clone, Copy)]
pub struct PendingView<'a> {
    /// Submission sequence number, unique per ledger.
    pub seq: u64,
    /// Ledger height when the transaction entered the mempool.
    pub submitted_at: u64,
    /// Last block height that may include it.
    pub deadline: u64,
    pub tx: &'a Transaction,
}

pub trait MempoolPolicy {
    /// Indices into `pending`, in execution order. Omitted transactions stay
    /// pending unless their deadline forces them in.
    fn schedule(&mut self, height: u64, pending: &[PendingView<'_>]) -> Vec<usize>;

    fn name(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Fifo;

impl MempoolPolicy for Fifo {
    fn schedule(&mut self, _height: u64, pending: &[PendingView<'_>]) -> Vec<usize> {
        (0..pending.len()).collect()
    }

    fn name(&self) -> &'static str {
        "fifo"
    }
}

/// Executes the newest transaction first, so a copy submitted after seeing
/// the original in the mempool front-runs it.
#[derive(Debug, Clone, Copy, Default)]
pub struct Reverse;

impl MempoolPolicy for Reverse {
    fn schedule(&mut self, _height: u64, pending: &[PendingView<'_>]) -> Vec<usize> {
        (0..pending.len()).rev().collect()
    }

    fn name(&self) -> &'static str {
        "reverse"
    }
}

/// Holds every transaction until its deadline.
#[derive(Debug, Clone, Copy, Default)]
pub struct Procrastinate;

impl MempoolPolicy for Procrastinate {
    fn schedule(&mut self, height: u64, pending: &[PendingView<'_>]) -> Vec<usize> {
        (0..pending.len()).filter(|&i| pending[i].deadline <= height).collect()
    }

    fn name(&self) -> &'static str {
        "procrastinate"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyChoice {
    #[default]
    Fifo,
    Reverse,
    Procrastinate,
}

impl PolicyChoice {
    pub fn build(self) -> Box<dyn MempoolPolicy> {
        match self {
            PolicyChoice::Fifo => Box::new(Fifo),
            PolicyChoice::Reverse => Box::new(Reverse),
            PolicyChoice::Procrastinate => Box::new(Procrastinate),
        }
    }
}

impl FromStr for PolicyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(Self::Fifo),
            "reverse" => Ok(Self::Reverse),
            "procrastinate" => Ok(Self::Procrastinate),
            other => Err(format!("unknown mempool policy `{other}` (fifo | reverse | procrastinate)")),
        }
    }
}

impl fmt::Display for PolicyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.build().name())
    }
}
