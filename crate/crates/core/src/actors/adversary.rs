//! Scripted deviations from the honest protocol.
//!
//! Each strategy drives the same client types honest actors use, so anything
//! it gets past the contracts would be a real protocol failure.

use std::collections::BTreeSet;

use crate::contracts::Call;
use crate::ledger::{Address, Ledger, Target};

use super::{ActorError, PublicSetup, RequesterClient, WorkerClient};

/// Submits two answers (or bids) to one task from two fresh addresses with
/// one credential.
pub fn double_submit(
    worker: &mut WorkerClient,
    ledger: &mut Ledger,
    setup: &PublicSetup,
    contract: &Address,
    payloads: [&[u8]; 2],
) -> Result<[u64; 2], ActorError> {
    let first = worker.submit_from(ledger, setup, contract, 0, payloads[0])?;
    let second = worker.submit_from(ledger, setup, contract, 1, payloads[1])?;
    Ok([first, second])
}

/// Watches the mempool for submissions or bids to `contract` and re-sends
/// each ciphertext under the copier's own credential and address. Returns
/// the sequence numbers of the copies.
pub fn copy_ciphertext_frontrun(
    copier: &mut WorkerClient,
    ledger: &mut Ledger,
    setup: &PublicSetup,
    contract: &Address,
    victims: Option<&BTreeSet<Address>>,
) -> Result<Vec<u64>, ActorError> {
    let own: BTreeSet<Address> = copier.addresses().map(|(_, a)| a).collect();
    let observed: Vec<_> = ledger
        .pending()
        .iter()
        .filter(|p| p.tx.target == Target::Call(*contract) && !own.contains(&p.tx.sender))
        .filter(|p| victims.is_none_or(|v| v.contains(&p.tx.sender)))
        .filter_map(|p| match Call::decode(&p.tx.payload) {
            Ok(Call::Submit { ciphertext, .. } | Call::Bid { ciphertext, .. }) => Some(ciphertext),
            _ => None,
        })
        .collect();
    let mut seqs = Vec::new();
    for (slot, c) in observed.into_iter().enumerate() {
        seqs.push(copier.deliver(ledger, setup, contract, slot as u32, c, None)?);
    }
    Ok(seqs)
}

/// Tries to settle with `rewards` instead of the policy outcome. The honest
/// prover refuses; the requester then sends the instruction with a made-up
/// proof. Returns the prover's refusal and the sequence number of the forged
/// instruction.
pub fn false_report(
    requester: &mut RequesterClient,
    ledger: &mut Ledger,
    setup: &PublicSetup,
    contract: &Address,
    rewards: Vec<u64>,
) -> Result<(Option<ActorError>, u64), ActorError> {
    match requester.instruct(ledger, setup, contract, rewards.clone()) {
        Ok(seq) => Ok((None, seq)),
        Err(ActorError::Proof(e)) => {
            let seq = requester.send_unproven_instruction(ledger, contract, rewards)?;
            Ok((Some(ActorError::Proof(e)), seq))
        }
        Err(e) => Err(e),
    }
}

/// The requester answers their own task with their long-term credential, hoping
/// to recover part of the budget.
pub fn requester_self_submit(
    requester: &RequesterClient,
    ledger: &mut Ledger,
    setup: &PublicSetup,
    contract: &Address,
    answer: &str,
) -> Result<(WorkerClient, u64), ActorError> {
    let mut me = requester.as_worker();
    let seq = me.submit(ledger, setup, contract, answer)?;
    Ok((me, seq))
}

/// A worker holding several certificates submits one more answer or bid than
/// it has certificates, each from a fresh address.
pub fn sybil_flood(
    identities: &mut [WorkerClient],
    ledger: &mut Ledger,
    setup: &PublicSetup,
    contract: &Address,
    payload: &[u8],
) -> Result<Vec<u64>, ActorError> {
    let q = identities.len();
    let mut seqs = Vec::new();
    for i in 0..=q {
        let w = &mut identities[i % q];
        seqs.push(w.submit_from(ledger, setup, contract, (i / q) as u32, payload)?);
    }
    Ok(seqs)
}

/// Submits a ciphertext that does not decrypt under the task key.
pub fn garbage_submit(
    worker: &mut WorkerClient,
    ledger: &mut Ledger,
    setup: &PublicSetup,
    contract: &Address,
) -> Result<u64, ActorError> {
    let mut c = worker.seal_unsigned(ledger, contract, b"no signature here")?;
    let last = c.0.len() - 1;
    c.0[last] ^= 0xff;
    worker.deliver(ledger, setup, contract, 0, c, None)
}
