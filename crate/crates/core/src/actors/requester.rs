use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::contracts::{
    auction, quality, requester_message, AuctionParams, AuctionTask, Call, Deploy, QualityTask, TaskParams,
};
use crate::cpla;
use crate::crypto::{derive_seed, enc_keygen, sig_keygen, EncKeyPair, SigKeyPair};
use crate::ledger::{Address, Ledger, Target, Transaction};
use crate::policy::{evaluate_auction_selection, Answer, PolicySpec};
use crate::proof::{self, open_answer, open_bid, open_plaintext, EncWitness, FakeStatement, Proof, RelationId};

use super::{send, ActorError, Credentials, PublicSetup, WorkerClient};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualitySpec {
    pub tau: u64,
    pub n: u32,
    pub t_a: u64,
    pub t_i: u64,
    pub policy: PolicySpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionSpec {
    pub tau: u64,
    pub max_bids: u32,
    pub k: u32,
    pub t_b: u64,
    pub t_i: u64,
    pub t_a: u64,
}

/// Per-task secrets: the one-task-only account and the answer decryption key.
#[derive(Debug, Clone)]
pub struct RequesterTask {
    pub index: u64,
    pub contract: Address,
    pub alpha: SigKeyPair,
    pub enc: EncKeyPair,
}

#[derive(Debug)]
pub struct RequesterClient {
    identity: String,
    creds: Credentials,
    seed: [u8; 32],
    rng: ChaCha20Rng,
    next_task: u64,
    tasks: BTreeMap<Address, RequesterTask>,
    reported: BTreeSet<(Address, u64)>,
}

impl RequesterClient {
    pub fn new(identity: impl Into<String>, creds: Credentials, seed: [u8; 32]) -> Self {
        Self {
            identity: identity.into(),
            creds,
            seed,
            rng: ChaCha20Rng::from_seed(derive_seed(&seed, "requester-rng")),
            next_task: 0,
            tasks: BTreeMap::new(),
            reported: BTreeSet::new(),
        }
    }

    pub fn identity(&self) -> &str {
        &self.identity
    }

    pub fn credentials(&self) -> &Credentials {
        &self.creds
    }

    /// The fresh account used for the `index`-th task. Known in advance so
    /// it can be funded before publication.
    pub fn task_account(&self, index: u64) -> SigKeyPair {
        sig_keygen(derive_seed(&self.seed, &format!("task/{index}/account")))
    }

    pub fn task_address(&self, index: u64) -> Address {
        Address::from_pk(&self.task_account(index).pk)
    }

    fn task_enc(&self, index: u64) -> EncKeyPair {
        enc_keygen(derive_seed(&self.seed, &format!("task/{index}/enc")))
    }

    pub fn task(&self, contract: &Address) -> Option<&RequesterTask> {
        self.tasks.get(contract)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &RequesterTask> {
        self.tasks.values()
    }

    fn task_or_err(&self, contract: &Address) -> Result<&RequesterTask, ActorError> {
        self.tasks.get(contract).ok_or(ActorError::UnknownTask(*contract))
    }

    /// Starts a task: predicts the contract address, attests to it from the
    /// long-term credential, and deploys with `deposit`. The returned
    /// address holds the contract once the deploy is mined.
    fn start_task(
        &mut self,
        ledger: &mut Ledger,
        setup: &PublicSetup,
        deposit: u64,
        build: impl FnOnce(Address, cpla::Attestation, &EncKeyPair) -> Deploy,
    ) -> Result<Address, ActorError> {
        let index = self.next_task;
        let alpha = self.task_account(index);
        let enc = self.task_enc(index);
        let alpha_r = Address::from_pk(&alpha.pk);
        let contract = ledger.predict_contract_address(&alpha_r);
        let pi_r = cpla::auth(
            &requester_message(&contract, &alpha_r),
            &self.creds.keys.sk,
            &self.creds.keys.pk,
            &self.creds.cert,
            &setup.mpk,
            &setup.params.auth,
        )?;
        let payload = build(alpha_r, pi_r, &enc).encode();
        let tx = Transaction::signed(&alpha, Target::Deploy, deposit, payload, ledger.next_nonce(&alpha_r));
        ledger.submit_tx(tx)?;
        self.next_task += 1;
        self.tasks.insert(
            contract,
            RequesterTask {
                index,
                contract,
                alpha,
                enc,
            },
        );
        Ok(contract)
    }

    pub fn publish(
        &mut self,
        ledger: &mut Ledger,
        setup: &PublicSetup,
        spec: &QualitySpec,
        deposit: u64,
    ) -> Result<Address, ActorError> {
        self.start_task(ledger, setup, deposit, |alpha_r, pi_r, enc| {
            Deploy::Quality(TaskParams {
                alpha_r,
                pi_r,
                mpk: setup.mpk,
                tau: spec.tau,
                epk: enc.epk,
                pp_auth: setup.params.auth.id(),
                pp_reward: setup.params.reward.id(),
                pp_fake: setup.params.fake.id(),
                n: spec.n,
                t_a: spec.t_a,
                t_i: spec.t_i,
                policy: spec.policy.clone(),
            })
        })
    }

    pub fn publish_auction(
        &mut self,
        ledger: &mut Ledger,
        setup: &PublicSetup,
        spec: &AuctionSpec,
        deposit: u64,
    ) -> Result<Address, ActorError> {
        self.start_task(ledger, setup, deposit, |alpha_r, pi_r, enc| {
            Deploy::Auction(AuctionParams {
                alpha_r,
                pi_r,
                mpk: setup.mpk,
                tau: spec.tau,
                epk: enc.epk,
                pp_auth: setup.params.auth.id(),
                pp_fake: setup.params.fake.id(),
                pp_auction: setup.params.auction.id(),
                max_bids: spec.max_bids,
                k: spec.k,
                t_b: spec.t_b,
                t_i: spec.t_i,
                t_a: spec.t_a,
            })
        })
    }

    /// Reports every accepted submission or bid whose plaintext is not
    /// properly signed for its sender. Returns the sequence numbers of the
    /// removal transactions, skipping records reported earlier.
    pub fn police(&mut self, ledger: &mut Ledger, setup: &PublicSetup, contract: &Address) -> Result<Vec<u64>, ActorError> {
        let task = self.task_or_err(contract)?.clone();
        let (live, auction): (Vec<(quality::Submission, FakeStatement)>, bool) =
            if let Some(t) = ledger.contract_as::<QualityTask>(contract) {
                if !matches!(t.phase(), quality::Phase::Collecting | quality::Phase::AwaitingInstruction) {
                    return Ok(Vec::new());
                }
                let live = t.records().iter().map(|s| (s.clone(), t.fake_statement(s.record).expect("live")));
                (live.collect(), false)
            } else if let Some(t) = ledger.contract_as::<AuctionTask>(contract) {
                if !matches!(t.phase(), auction::Phase::Bidding | auction::Phase::AwaitingSelection) {
                    return Ok(Vec::new());
                }
                let live = t.bids().iter().map(|s| (s.clone(), t.fake_statement(s.record).expect("live")));
                (live.collect(), true)
            } else {
                return Err(ActorError::NoContract(*contract));
            };

        let mut seqs = Vec::new();
        for (s, x) in live {
            if self.reported.contains(&(*contract, s.record)) {
                continue;
            }
            let genuine = open_plaintext(&task.enc.esk, &s.ciphertext).is_some_and(|pt| pt.verifies_for(&s.worker));
            if genuine {
                continue;
            }
            let proof = proof::prove(
                &setup.params.fake,
                &x.statement(),
                &EncWitness { esk: task.enc.esk }.witness(RelationId::Fake),
            )?;
            let call = if auction {
                Call::ReportFakeBid {
                    record: s.record,
                    proof,
                }
            } else {
                Call::ReportFake {
                    record: s.record,
                    proof,
                }
            };
            seqs.push(send(ledger, &task.alpha, contract, &call)?);
            self.reported.insert((*contract, s.record));
        }
        Ok(seqs)
    }

    /// Decrypts every slot and applies the task's policy.
    pub fn honest_rewards(&self, ledger: &Ledger, contract: &Address) -> Result<Vec<u64>, ActorError> {
        let task = self.task_or_err(contract)?;
        let t = ledger
            .contract_as::<QualityTask>(contract)
            .ok_or(ActorError::NoContract(*contract))?;
        let mut answers = Vec::new();
        for (j, slot) in t.slots().iter().enumerate() {
            answers.push(match slot {
                None => Answer::Bottom,
                Some(c) => open_answer(&task.enc.esk, c).ok_or(ActorError::UndecryptableSlot(t.records()[j].record))?,
            });
        }
        Ok(t.params().policy.rewards(&answers, t.params().tau)?)
    }

    /// Proves and sends a reward instruction. A vector that is not the
    /// policy's outcome fails here with `ProveFailed`.
    pub fn instruct(
        &mut self,
        ledger: &mut Ledger,
        setup: &PublicSetup,
        contract: &Address,
        rewards: Vec<u64>,
    ) -> Result<u64, ActorError> {
        let task = self.task_or_err(contract)?.clone();
        let t = ledger
            .contract_as::<QualityTask>(contract)
            .ok_or(ActorError::NoContract(*contract))?;
        if t.phase() != quality::Phase::AwaitingInstruction {
            return Err(ActorError::WrongPhase {
                contract: *contract,
                phase: t.phase().name(),
            });
        }
        let x = t.reward_statement(rewards.clone());
        let proof = proof::prove(
            &setup.params.reward,
            &x.statement(),
            &EncWitness { esk: task.enc.esk }.witness(RelationId::Reward),
        )?;
        send(ledger, &task.alpha, contract, &Call::Instruction { rewards, proof })
    }

    pub fn settle(&mut self, ledger: &mut Ledger, setup: &PublicSetup, contract: &Address) -> Result<u64, ActorError> {
        let rewards = self.honest_rewards(ledger, contract)?;
        self.instruct(ledger, setup, contract, rewards)
    }

    /// Sends a reward instruction with a proof it could not produce honestly.
    pub fn send_unproven_instruction(
        &mut self,
        ledger: &mut Ledger,
        contract: &Address,
        rewards: Vec<u64>,
    ) -> Result<u64, ActorError> {
        let task = self.task_or_err(contract)?.clone();
        let mut tag = [0u8; 32];
        self.rng.fill_bytes(&mut tag);
        let proof = Proof {
            relation: RelationId::Reward,
            tag,
        };
        send(ledger, &task.alpha, contract, &Call::Instruction { rewards, proof })
    }

    /// Decrypts the bids and sends the proven lowest-k selection.
    pub fn select(&mut self, ledger: &mut Ledger, setup: &PublicSetup, contract: &Address) -> Result<u64, ActorError> {
        let task = self.task_or_err(contract)?.clone();
        let t = ledger
            .contract_as::<AuctionTask>(contract)
            .ok_or(ActorError::NoContract(*contract))?;
        if t.phase() != auction::Phase::AwaitingSelection {
            return Err(ActorError::WrongPhase {
                contract: *contract,
                phase: t.phase().name(),
            });
        }
        let mut values = Vec::new();
        for b in t.bids() {
            values.push(open_bid(&task.enc.esk, &b.ciphertext).ok_or(ActorError::UndecryptableSlot(b.record))?);
        }
        let k = (t.params().k as usize).min(values.len());
        let sel = evaluate_auction_selection(&values, k, t.params().tau)?;
        let selected: Vec<u32> = sel.indices.iter().map(|&i| i as u32).collect();
        let x = t.auction_statement(selected.clone(), sel.payments.clone());
        let proof = proof::prove(
            &setup.params.auction,
            &x.statement(),
            &EncWitness { esk: task.enc.esk }.witness(RelationId::Auction),
        )?;
        send(
            ledger,
            &task.alpha,
            contract,
            &Call::Selection {
                selected,
                payments: sel.payments,
                proof,
            },
        )
    }

    /// A worker client backed by this requester's own credential.
    pub fn as_worker(&self) -> WorkerClient {
        WorkerClient::new(
            format!("{}/as-worker", self.identity),
            self.creds.clone(),
            derive_seed(&self.seed, "as-worker"),
        )
    }
}
