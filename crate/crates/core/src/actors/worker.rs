use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::contracts::{submission_message, Call};
use crate::cpla::{self, Attestation};
use crate::crypto::{derive_seed, encrypt, sig_keygen, Ciphertext, SigKeyPair};
use crate::ledger::{Address, Ledger};
use crate::proof::{bid_payload, SignedPlaintext};

use super::{send, task_view, ActorError, Credentials, PublicSetup};

/// One transaction a worker sent to a task contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionLog {
    pub contract: Address,
    pub address: Address,
    pub kind: &'static str,
    /// The payload the worker meant to deliver; `None` for a ciphertext it
    /// cannot read.
    pub payload: Option<Vec<u8>>,
    pub seq: u64,
}

#[derive(Debug)]
pub struct WorkerClient {
    identity: String,
    creds: Credentials,
    seed: [u8; 32],
    rng: ChaCha20Rng,
    accounts: BTreeMap<(Address, u32), SigKeyPair>,
    log: Vec<SubmissionLog>,
}

impl WorkerClient {
    pub fn new(identity: impl Into<String>, creds: Credentials, seed: [u8; 32]) -> Self {
        Self {
            identity: identity.into(),
            creds,
            seed,
            rng: ChaCha20Rng::from_seed(derive_seed(&seed, "worker-rng")),
            accounts: BTreeMap::new(),
            log: Vec::new(),
        }
    }

    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn credentials(&self) -> &Credentials {
        &self.creds
    }

    pub fn log(&self) -> &[SubmissionLog] {
        &self.log
    }

    /// One-time account number `slot` for `contract`. An honest worker only
    /// ever uses slot 0.
    pub fn account(&mut self, contract: &Address, slot: u32) -> SigKeyPair {
        let seed = &self.seed;
        self.accounts
            .entry((*contract, slot))
            .or_insert_with(|| sig_keygen(derive_seed(seed, &format!("one-time/{contract}/{slot}"))))
            .clone()
    }

    pub fn address(&mut self, contract: &Address, slot: u32) -> Address {
        Address::from_pk(&self.account(contract, slot).pk)
    }

    /// Every one-time address this worker has derived.
    pub fn addresses(&self) -> impl Iterator<Item = (&Address, Address)> {
        self.accounts.iter().map(|((c, _), k)| (c, Address::from_pk(&k.pk)))
    }

    fn attest(
        &self,
        setup: &PublicSetup,
        contract: &Address,
        from: &Address,
        c: &Ciphertext,
    ) -> Result<Attestation, ActorError> {
        let k = &self.creds.keys;
        Ok(cpla::auth(
            &submission_message(contract, from, c),
            &k.sk,
            &k.pk,
            &self.creds.cert,
            &setup.mpk,
            &setup.params.auth,
        )?)
    }

    /// Authenticates `c` from one-time account `slot` and sends it as a
    /// submission or bid, whichever the contract takes.
    pub fn deliver(
        &mut self,
        ledger: &mut Ledger,
        setup: &PublicSetup,
        contract: &Address,
        slot: u32,
        c: Ciphertext,
        payload: Option<Vec<u8>>,
    ) -> Result<u64, ActorError> {
        let view = task_view(ledger, contract)?;
        setup.check_ids(&view.pp_auth, &view.mpk)?;
        let keys = self.account(contract, slot);
        let from = Address::from_pk(&keys.pk);
        let att = self.attest(setup, contract, &from, &c)?;
        let call = if view.auction {
            Call::Bid { att, ciphertext: c }
        } else {
            Call::Submit { att, ciphertext: c }
        };
        let seq = send(ledger, &keys, contract, &call)?;
        self.log.push(SubmissionLog {
            contract: *contract,
            address: from,
            kind: call.kind(),
            payload,
            seq,
        });
        Ok(seq)
    }

    /// Signs `payload` under the one-time key and encrypts it to the task.
    pub fn seal(&mut self, ledger: &Ledger, contract: &Address, slot: u32, payload: &[u8]) -> Result<Ciphertext, ActorError> {
        let view = task_view(ledger, contract)?;
        let keys = self.account(contract, slot);
        let pt = SignedPlaintext::sign(payload.to_vec(), &keys).to_bytes();
        Ok(encrypt(&view.epk, &pt, &mut self.rng)?)
    }

    /// Encrypts raw bytes without the inner signature.
    pub fn seal_unsigned(&mut self, ledger: &Ledger, contract: &Address, bytes: &[u8]) -> Result<Ciphertext, ActorError> {
        let view = task_view(ledger, contract)?;
        Ok(encrypt(&view.epk, bytes, &mut self.rng)?)
    }

    pub fn submit_from(
        &mut self,
        ledger: &mut Ledger,
        setup: &PublicSetup,
        contract: &Address,
        slot: u32,
        payload: &[u8],
    ) -> Result<u64, ActorError> {
        let c = self.seal(ledger, contract, slot, payload)?;
        self.deliver(ledger, setup, contract, slot, c, Some(payload.to_vec()))
    }

    pub fn submit(&mut self, ledger: &mut Ledger, setup: &PublicSetup, contract: &Address, answer: &str) -> Result<u64, ActorError> {
        self.submit_from(ledger, setup, contract, 0, answer.as_bytes())
    }

    pub fn bid(&mut self, ledger: &mut Ledger, setup: &PublicSetup, contract: &Address, amount: u64) -> Result<u64, ActorError> {
        self.submit_from(ledger, setup, contract, 0, &bid_payload(amount))
    }

    /// Delivers the task answer after winning an auction, from the account
    /// that placed the bid.
    pub fn answer_auction(&mut self, ledger: &mut Ledger, contract: &Address, answer: &str) -> Result<u64, ActorError> {
        let c = self.seal(ledger, contract, 0, answer.as_bytes())?;
        let keys = self.account(contract, 0);
        let seq = send(ledger, &keys, contract, &Call::Answer { ciphertext: c })?;
        self.log.push(SubmissionLog {
            contract: *contract,
            address: Address::from_pk(&keys.pk),
            kind: "answer",
            payload: Some(answer.as_bytes().to_vec()),
            seq,
        });
        Ok(seq)
    }
}
