//! The two task contracts and their on-ledger payload encodings.
//!
//! Deploy payloads start with a tag byte: `0x01` quality-aware task, `0x02`
//! auction task. Call payloads likewise: `0x10` submit, `0x11` report fake
//! submission, `0x12` reward instruction, `0x20` bid, `0x21` report fake bid,
//! `0x22` selection, `0x23` answer. Fields follow in declaration order using
//! the [`crate::codec`] conventions; attestations are 97 raw bytes and proofs
//! 33 raw bytes.

pub mod auction;
pub mod quality;

use crate::codec::{DecodeError, Reader, Writer};
use crate::cpla::{self, Attestation, Prefix, ATTESTATION_LEN};
use crate::crypto::{Ciphertext, Digest, EncPublicKey, PublicKey};
use crate::ledger::{Address, CallCtx, Contract, Reject};
use crate::policy::{PolicyKind, PolicySpec};
use crate::proof::{ParamsId, Proof, RelationId, PROOF_LEN};

pub use auction::AuctionTask;
pub use quality::QualityTask;

const DEPLOY_QUALITY: u8 = 0x01;
const DEPLOY_AUCTION: u8 = 0x02;

/// Parameters of a quality-aware task, fixed at deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskParams {
    pub alpha_r: Address,
    /// Requester's attestation on `prefix(α_C) || α_R`.
    pub pi_r: Attestation,
    pub mpk: PublicKey,
    pub tau: u64,
    pub epk: EncPublicKey,
    pub pp_auth: ParamsId,
    pub pp_reward: ParamsId,
    pub pp_fake: ParamsId,
    /// Answers requested.
    pub n: u32,
    /// Answer window in blocks.
    pub t_a: u64,
    /// Instruction window in blocks.
    pub t_i: u64,
    pub policy: PolicySpec,
}

/// Parameters of an auction task, fixed at deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionParams {
    pub alpha_r: Address,
    pub pi_r: Attestation,
    pub mpk: PublicKey,
    pub tau: u64,
    pub epk: EncPublicKey,
    pub pp_auth: ParamsId,
    pub pp_fake: ParamsId,
    pub pp_auction: ParamsId,
    /// Bids collected before bidding closes early.
    pub max_bids: u32,
    /// Winners selected.
    pub k: u32,
    pub t_b: u64,
    pub t_i: u64,
    pub t_a: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Deploy {
    Quality(TaskParams),
    Auction(AuctionParams),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Call {
    Submit { att: Attestation, ciphertext: Ciphertext },
    ReportFake { record: u64, proof: Proof },
    Instruction { rewards: Vec<u64>, proof: Proof },
    Bid { att: Attestation, ciphertext: Ciphertext },
    ReportFakeBid { record: u64, proof: Proof },
    /// Indices into the live bid list, with the payment for each.
    Selection { selected: Vec<u32>, payments: Vec<u64>, proof: Proof },
    Answer { ciphertext: Ciphertext },
}

fn read_attestation(r: &mut Reader<'_>) -> Result<Attestation, DecodeError> {
    Attestation::from_bytes(&r.fixed::<ATTESTATION_LEN>()?).ok_or(DecodeError::Invalid("attestation"))
}

fn read_proof(r: &mut Reader<'_>) -> Result<Proof, DecodeError> {
    Proof::from_bytes(&r.fixed::<PROOF_LEN>()?).ok_or(DecodeError::Invalid("proof"))
}

impl TaskParams {
    fn encode(&self, w: &mut Writer) {
        w.fixed(&self.alpha_r.0)
            .fixed(&self.pi_r.to_bytes())
            .fixed(&self.mpk.0)
            .u64(self.tau)
            .fixed(&self.epk.0)
            .fixed(&self.pp_auth.0)
            .fixed(&self.pp_reward.0)
            .fixed(&self.pp_fake.0)
            .u32(self.n)
            .u64(self.t_a)
            .u64(self.t_i);
        self.policy.encode(w);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            alpha_r: Address(r.fixed()?),
            pi_r: read_attestation(r)?,
            mpk: PublicKey(r.fixed()?),
            tau: r.u64()?,
            epk: EncPublicKey(r.fixed()?),
            pp_auth: Digest(r.fixed()?),
            pp_reward: Digest(r.fixed()?),
            pp_fake: Digest(r.fixed()?),
            n: r.u32()?,
            t_a: r.u64()?,
            t_i: r.u64()?,
            policy: PolicySpec::decode(r)?,
        })
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.n == 0 {
            return Err("n must be at least 1");
        }
        if self.t_a == 0 || self.t_i == 0 {
            return Err("deadlines must be positive");
        }
        if matches!(self.policy.kind, PolicyKind::LowestK { .. }) {
            return Err("policy is not a reward policy");
        }
        Ok(())
    }
}

impl AuctionParams {
    fn encode(&self, w: &mut Writer) {
        w.fixed(&self.alpha_r.0)
            .fixed(&self.pi_r.to_bytes())
            .fixed(&self.mpk.0)
            .u64(self.tau)
            .fixed(&self.epk.0)
            .fixed(&self.pp_auth.0)
            .fixed(&self.pp_fake.0)
            .fixed(&self.pp_auction.0)
            .u32(self.max_bids)
            .u32(self.k)
            .u64(self.t_b)
            .u64(self.t_i)
            .u64(self.t_a);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            alpha_r: Address(r.fixed()?),
            pi_r: read_attestation(r)?,
            mpk: PublicKey(r.fixed()?),
            tau: r.u64()?,
            epk: EncPublicKey(r.fixed()?),
            pp_auth: Digest(r.fixed()?),
            pp_fake: Digest(r.fixed()?),
            pp_auction: Digest(r.fixed()?),
            max_bids: r.u32()?,
            k: r.u32()?,
            t_b: r.u64()?,
            t_i: r.u64()?,
            t_a: r.u64()?,
        })
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.max_bids == 0 || self.k == 0 {
            return Err("max_bids and k must be at least 1");
        }
        if self.t_b == 0 || self.t_i == 0 || self.t_a == 0 {
            return Err("deadlines must be positive");
        }
        Ok(())
    }
}

impl Deploy {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            Deploy::Quality(p) => {
                w.u8(DEPLOY_QUALITY);
                p.encode(&mut w);
            }
            Deploy::Auction(p) => {
                w.u8(DEPLOY_AUCTION);
                p.encode(&mut w);
            }
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let out = match r.u8()? {
            DEPLOY_QUALITY => Deploy::Quality(TaskParams::decode(&mut r)?),
            DEPLOY_AUCTION => Deploy::Auction(AuctionParams::decode(&mut r)?),
            tag => return Err(DecodeError::BadTag { what: "deploy", tag }),
        };
        r.finish()?;
        Ok(out)
    }
}

impl Call {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            Call::Submit { att, ciphertext } => w.u8(0x10).fixed(&att.to_bytes()).bytes(&ciphertext.0),
            Call::ReportFake { record, proof } => w.u8(0x11).u64(*record).fixed(&proof.to_bytes()),
            Call::Instruction { rewards, proof } => {
                w.u8(0x12).count(rewards.len());
                for r in rewards {
                    w.u64(*r);
                }
                w.fixed(&proof.to_bytes())
            }
            Call::Bid { att, ciphertext } => w.u8(0x20).fixed(&att.to_bytes()).bytes(&ciphertext.0),
            Call::ReportFakeBid { record, proof } => w.u8(0x21).u64(*record).fixed(&proof.to_bytes()),
            Call::Selection {
                selected,
                payments,
                proof,
            } => {
                w.u8(0x22).count(selected.len());
                for i in selected {
                    w.u32(*i);
                }
                w.count(payments.len());
                for p in payments {
                    w.u64(*p);
                }
                w.fixed(&proof.to_bytes())
            }
            Call::Answer { ciphertext } => w.u8(0x23).bytes(&ciphertext.0),
        };
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let out = match r.u8()? {
            0x10 => Call::Submit {
                att: read_attestation(&mut r)?,
                ciphertext: Ciphertext(r.bytes()?.to_vec()),
            },
            0x11 => Call::ReportFake {
                record: r.u64()?,
                proof: read_proof(&mut r)?,
            },
            0x12 => {
                let n = r.count()?;
                let rewards = (0..n).map(|_| r.u64()).collect::<Result<_, _>>()?;
                Call::Instruction {
                    rewards,
                    proof: read_proof(&mut r)?,
                }
            }
            0x20 => Call::Bid {
                att: read_attestation(&mut r)?,
                ciphertext: Ciphertext(r.bytes()?.to_vec()),
            },
            0x21 => Call::ReportFakeBid {
                record: r.u64()?,
                proof: read_proof(&mut r)?,
            },
            0x22 => {
                let n = r.count()?;
                let selected = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
                let n = r.count()?;
                let payments = (0..n).map(|_| r.u64()).collect::<Result<_, _>>()?;
                Call::Selection {
                    selected,
                    payments,
                    proof: read_proof(&mut r)?,
                }
            }
            0x23 => Call::Answer {
                ciphertext: Ciphertext(r.bytes()?.to_vec()),
            },
            tag => return Err(DecodeError::BadTag { what: "call", tag }),
        };
        r.finish()?;
        Ok(out)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Call::Submit { .. } => "submit",
            Call::ReportFake { .. } => "report-fake",
            Call::Instruction { .. } => "instruction",
            Call::Bid { .. } => "bid",
            Call::ReportFakeBid { .. } => "report-fake-bid",
            Call::Selection { .. } => "selection",
            Call::Answer { .. } => "answer",
        }
    }
}

/// Message a worker authenticates when submitting `c` from `sender` to the
/// contract at `contract`.
pub fn submission_message(contract: &Address, sender: &Address, c: &Ciphertext) -> Vec<u8> {
    Prefix::for_contract(contract).message(&[&sender.0, &c.0])
}

/// Message the requester authenticates when publishing from `alpha_r`.
pub fn requester_message(contract: &Address, alpha_r: &Address) -> Vec<u8> {
    Prefix::for_contract(contract).message(&[&alpha_r.0])
}

/// Requester-side checks shared by both constructors.
fn check_deployment(
    ctx: &CallCtx<'_>,
    alpha_r: &Address,
    pi_r: &Attestation,
    mpk: &PublicKey,
    tau: u64,
    params: &[(ParamsId, RelationId)],
) -> Result<(), Reject> {
    let reject = |reason: &str| Err(Reject::new("deploy", reason));
    if ctx.sender != *alpha_r {
        return reject("deployer is not alpha_R");
    }
    if ctx.get_balance(&ctx.this) < tau {
        return reject("no deposit");
    }
    for (id, rel) in params {
        if ctx.verifiers().params(id).map(|pp| pp.relation()) != Some(*rel) {
            return reject("unknown proof parameters");
        }
    }
    let pp_auth = ctx.verifiers().params(&params[0].0).expect("checked above");
    if !cpla::verify(&requester_message(&ctx.this, alpha_r), pi_r, mpk, pp_auth) {
        return reject("pi_R does not verify");
    }
    Ok(())
}

/// Admission gate for a submission or bid: the attestation verifies on
/// `prefix || sender || c` and is linked neither to the requester nor to any
/// attestation already accepted.
fn admit<'a>(
    ctx: &CallCtx<'_>,
    kind: &'static str,
    mpk: &PublicKey,
    pp_auth: &ParamsId,
    pi_r: &Attestation,
    att: &Attestation,
    c: &Ciphertext,
    earlier: impl IntoIterator<Item = &'a Attestation>,
) -> Result<(), Reject> {
    let pp = ctx
        .verifiers()
        .params(pp_auth)
        .ok_or_else(|| Reject::new(kind, "unknown proof parameters"))?;
    if !cpla::verify(&submission_message(&ctx.this, &ctx.sender, c), att, mpk, pp) {
        return Err(Reject::new(kind, "attestation does not verify"));
    }
    if cpla::link(att, pi_r) {
        return Err(Reject::new(kind, "linked to requester"));
    }
    if earlier.into_iter().any(|a| cpla::link(att, a)) {
        return Err(Reject::new(kind, "linked to earlier submission"));
    }
    Ok(())
}

/// The ledger's contract constructor: dispatches on the deploy tag.
pub fn deploy(ctx: &mut CallCtx<'_>, payload: &[u8]) -> Result<Box<dyn Contract>, Reject> {
    match Deploy::decode(payload) {
        Ok(Deploy::Quality(p)) => Ok(Box::new(QualityTask::deploy(ctx, p)?)),
        Ok(Deploy::Auction(p)) => Ok(Box::new(AuctionTask::deploy(ctx, p)?)),
        Err(e) => Err(Reject::new("deploy", format!("malformed payload: {e}"))),
    }
}

fn decode_call(ctx: &CallCtx<'_>, payload: &[u8]) -> Result<Call, Reject> {
    let call = Call::decode(payload).map_err(|e| Reject::new("call", format!("malformed payload: {e}")))?;
    if ctx.value != 0 {
        return Err(Reject::new(call.kind(), "calls carry no value"));
    }
    Ok(call)
}

/// Pays every `(addr, amount)` then refunds the rest of the contract balance
/// to `alpha_r`. Returns the refund.
fn pay_out(ctx: &mut CallCtx<'_>, payouts: &[(Address, u64)], alpha_r: &Address) -> u64 {
    for (addr, amount) in payouts {
        let ok = ctx.transfer(addr, *amount);
        debug_assert!(ok, "payout exceeds contract balance");
        ctx.emit("payout", format!("{addr} {amount}"));
    }
    let refund = ctx.get_balance(&ctx.this);
    ctx.transfer(alpha_r, refund);
    ctx.emit("refund", format!("{alpha_r} {refund}"));
    refund
}

/// How a contract reached its terminal phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettleKind {
    Instruction,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settlement {
    pub kind: SettleKind,
    pub height: u64,
    pub payouts: Vec<(Address, u64)>,
    pub refund: u64,
}
