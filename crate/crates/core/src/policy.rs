//! Reward policies. The same functions are used by the requester to compute
//! an instruction, by the proof relations to check one, and by tests.
//!
//! All arithmetic is integer with flooring; whatever a policy does not pay out
//! flows back to the requester as refund.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};

/// One answer slot: a value from the task's answer set, or ⊥ for a missing or
/// invalid submission.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Value(String),
    Bottom,
}

impl Answer {
    pub fn value(v: impl Into<String>) -> Self {
        Answer::Value(v.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// τ/n to every answer equal to a plurality value.
    Majority,
    /// τ/n to every non-⊥ answer.
    Flat,
    /// Reverse auction: the k lowest bids win and are paid their own bid.
    LowestK { k: u32 },
}

impl PolicyKind {
    pub fn id(&self) -> u8 {
        match self {
            PolicyKind::Majority => 1,
            PolicyKind::Flat => 2,
            PolicyKind::LowestK { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Majority => "majority",
            PolicyKind::Flat => "flat",
            PolicyKind::LowestK { .. } => "lowest-k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// The declared finite answer set; empty for auction policies.
    pub answer_set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("auction needs {k} bids but only {available} were placed")]
    NotEnoughBids { k: usize, available: usize },
    #[error("selection pays {total}, above the budget {tau}")]
    OverBudget { total: u64, tau: u64 },
    #[error("policy {0} does not produce per-answer rewards")]
    NotARewardPolicy(&'static str),
    #[error("policy {0} is not an auction")]
    NotAnAuction(&'static str),
}

impl PolicySpec {
    pub fn majority<S: Into<String>>(answer_set: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind: PolicyKind::Majority,
            answer_set: answer_set.into_iter().map(Into::into).collect(),
        }
    }

    pub fn flat<S: Into<String>>(answer_set: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind: PolicyKind::Flat,
            answer_set: answer_set.into_iter().map(Into::into).collect(),
        }
    }

    pub fn lowest_k(k: u32) -> Self {
        Self {
            kind: PolicyKind::LowestK { k },
            answer_set: Vec::new(),
        }
    }

    /// Values outside the declared answer set are treated as ⊥.
    pub fn normalize(&self, answer: Answer) -> Answer {
        match answer {
            Answer::Value(v) if self.answer_set.iter().any(|a| *a == v) => Answer::Value(v),
            _ => Answer::Bottom,
        }
    }

    pub fn rewards(&self, answers: &[Answer], tau: u64) -> Result<Vec<u64>, PolicyError> {
        let normalized: Vec<Answer> = answers.iter().cloned().map(|a| self.normalize(a)).collect();
        match self.kind {
            PolicyKind::Majority => Ok(evaluate_majority(&normalized, tau)),
            PolicyKind::Flat => Ok(evaluate_flat(&normalized, tau)),
            PolicyKind::LowestK { .. } => Err(PolicyError::NotARewardPolicy(self.kind.name())),
        }
    }

    pub fn select(&self, bids: &[u64], tau: u64) -> Result<Selection, PolicyError> {
        match self.kind {
            PolicyKind::LowestK { k } => evaluate_auction_selection(bids, k as usize, tau),
            other => Err(PolicyError::NotAnAuction(other.name())),
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        w.u8(self.kind.id());
        if let PolicyKind::LowestK { k } = self.kind {
            w.u32(k);
        }
        w.count(self.answer_set.len());
        for a in &self.answer_set {
            w.str(a);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let kind = match r.u8()? {
            1 => PolicyKind::Majority,
            2 => PolicyKind::Flat,
            3 => PolicyKind::LowestK { k: r.u32()? },
            tag => return Err(DecodeError::BadTag { what: "policy", tag }),
        };
        let n = r.count()?;
        let answer_set = (0..n).map(|_| r.string()).collect::<Result<_, _>>()?;
        Ok(Self { kind, answer_set })
    }
}

fn share(tau: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        tau / n as u64
    }
}

/// Every answer equal to a plurality value (all tied pluralities count) gets
/// `floor(τ/n)`; everything else, including ⊥, gets 0.
pub fn evaluate_majority(answers: &[Answer], tau: u64) -> Vec<u64> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in answers {
        if let Answer::Value(v) = a {
            *counts.entry(v.as_str()).or_default() += 1;
        }
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let r = share(tau, answers.len());
    answers
        .iter()
        .map(|a| match a {
            Answer::Value(v) if counts[v.as_str()] == top => r,
            _ => 0,
        })
        .collect()
}

pub fn evaluate_flat(answers: &[Answer], tau: u64) -> Vec<u64> {
    let r = share(tau, answers.len());
    answers
        .iter()
        .map(|a| if *a == Answer::Bottom { 0 } else { r })
        .collect()
}

/// Winners of a lowest-k reverse auction, ordered by (bid, submission order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub payments: Vec<u64>,
}

impl Selection {
    pub fn total(&self) -> u64 {
        self.payments.iter().sum()
    }
}

pub fn evaluate_auction_selection(bids: &[u64], k: usize, tau: u64) -> Result<Selection, PolicyError> {
    if k > bids.len() {
        return Err(PolicyError::NotEnoughBids {
            k,
            available: bids.len(),
        });
    }
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by_key(|&i| (bids[i], i));
    order.truncate(k);
    let payments: Vec<u64> = order.iter().map(|&i| bids[i]).collect();
    let total = payments
        .iter()
        .try_fold(0u64, |acc, &p| acc.checked_add(p))
        .unwrap_or(u64::MAX);
    if total > tau {
        return Err(PolicyError::OverBudget { total, tau });
    }
    Ok(Selection {
        indices: order,
        payments,
    })
}
