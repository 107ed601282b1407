//! Off-chain participants: the registration authority, requesters and
//! workers, plus scripted adversarial deviations.
//!
//! Actors never touch ledger state directly. They read contracts through the
//! ledger's public view and act only by submitting signed transactions.

pub mod adversary;
mod requester;
mod worker;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::DecodeError;
use crate::contracts::{AuctionTask, Call, QualityTask};
use crate::cpla::{self, Certificate, CplaError, MasterKeys};
use crate::crypto::{sig_keygen, CryptoError, EncPublicKey, PublicKey, SigKeyPair};
use crate::ledger::{Address, Ledger, RejectReason, Target, Transaction};
use crate::policy::PolicyError;
use crate::proof::{ParamSet, ParamsId, ProofError};

pub use requester::{AuctionSpec, QualitySpec, RequesterClient, RequesterTask};
pub use worker::{SubmissionLog, WorkerClient};

#[derive(Debug, Error)]
pub enum ActorError {
    #[error("identity `{0}` is already registered")]
    DuplicateRegistration(String),
    #[error("no task contract at {0}")]
    NoContract(Address),
    #[error("{0} is not a task published by this requester")]
    UnknownTask(Address),
    #[error("contract {contract} is in phase {phase}")]
    WrongPhase { contract: Address, phase: &'static str },
    #[error("contract parameters do not match the published setup")]
    ParamsMismatch,
    #[error("record {0} does not decrypt to an answer; report it first")]
    UndecryptableSlot(u64),
    #[error("ledger refused transaction: {0}")]
    Ledger(#[from] RejectReason),
    #[error(transparent)]
    Cpla(#[from] CplaError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Everything published at genesis that actors need: the RA's master public
/// key and the proof parameters for every relation.
#[derive(Debug, Clone)]
pub struct PublicSetup {
    pub mpk: PublicKey,
    pub params: ParamSet,
}

impl PublicSetup {
    fn check_ids(&self, auth: &ParamsId, mpk: &PublicKey) -> Result<(), ActorError> {
        if *auth != self.params.auth.id() || *mpk != self.mpk {
            return Err(ActorError::ParamsMismatch);
        }
        Ok(())
    }
}

/// A long-term signing key and its certificate.
#[derive(Debug, Clone)]
pub struct Credentials {
    pub keys: SigKeyPair,
    pub cert: Certificate,
}

#[derive(Debug)]
pub struct RegistrationAuthority {
    master: MasterKeys,
    registry: BTreeMap<String, PublicKey>,
}

impl RegistrationAuthority {
    pub fn new(master: MasterKeys) -> Self {
        Self {
            master,
            registry: BTreeMap::new(),
        }
    }

    pub fn mpk(&self) -> PublicKey {
        self.master.mpk
    }

    /// Issues the one certificate `identity` will ever get.
    pub fn register(&mut self, identity: &str, pk: &PublicKey) -> Result<Certificate, ActorError> {
        if self.registry.contains_key(identity) {
            return Err(ActorError::DuplicateRegistration(identity.to_string()));
        }
        self.registry.insert(identity.to_string(), *pk);
        Ok(cpla::cert_gen(&self.master.msk, pk))
    }

    /// Generates a key pair from `seed` and registers it.
    pub fn enroll(&mut self, identity: &str, seed: [u8; 32]) -> Result<Credentials, ActorError> {
        let keys = sig_keygen(seed);
        let cert = self.register(identity, &keys.pk)?;
        Ok(Credentials { keys, cert })
    }

    pub fn registered(&self) -> impl Iterator<Item = (&str, &PublicKey)> {
        self.registry.iter().map(|(i, pk)| (i.as_str(), pk))
    }
}

/// The public parts of a task contract a worker needs before submitting.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TaskView {
    pub epk: EncPublicKey,
    pub mpk: PublicKey,
    pub pp_auth: ParamsId,
    pub auction: bool,
}

pub(crate) fn task_view(ledger: &Ledger, contract: &Address) -> Result<TaskView, ActorError> {
    if let Some(t) = ledger.contract_as::<QualityTask>(contract) {
        let p = t.params();
        return Ok(TaskView {
            epk: p.epk,
            mpk: p.mpk,
            pp_auth: p.pp_auth,
            auction: false,
        });
    }
    if let Some(t) = ledger.contract_as::<AuctionTask>(contract) {
        let p = t.params();
        return Ok(TaskView {
            epk: p.epk,
            mpk: p.mpk,
            pp_auth: p.pp_auth,
            auction: true,
        });
    }
    Err(ActorError::NoContract(*contract))
}

/// Signs `call` with `from` and hands it to the mempool; returns its sequence
/// number.
pub(crate) fn send(ledger: &mut Ledger, from: &SigKeyPair, contract: &Address, call: &Call) -> Result<u64, ActorError> {
    let nonce = ledger.next_nonce(&Address::from_pk(&from.pk));
    let tx = Transaction::signed(from, Target::Call(*contract), 0, call.encode(), nonce);
    Ok(ledger.submit_tx(tx)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registration_is_one_per_identity() {
        let (master, _) = cpla::setup([1; 32]);
        let mut ra = RegistrationAuthority::new(master);
        let alice = sig_keygen([2; 32]);
        let cert = ra.register("alice", &alice.pk).unwrap();
        assert!(cpla::cert_vrfy(&cert.sigma, &alice.pk, &ra.mpk()));
        let other = sig_keygen([3; 32]);
        assert!(matches!(
            ra.register("alice", &other.pk),
            Err(ActorError::DuplicateRegistration(id)) if id == "alice"
        ));
        assert!(ra.enroll("bob", [4; 32]).is_ok());
        assert_eq!(ra.registered().count(), 2);
    }
}
