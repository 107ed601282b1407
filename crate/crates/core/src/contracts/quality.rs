//! Quality-aware task: collect up to n anonymously authenticated encrypted
//! answers, then pay out according to a proven reward instruction, or split
//! the budget evenly if the requester stays silent.
//!
//! Timers are relative to the height at which their phase was entered. A
//! phase whose window is `T` blocks expires at the start of the first block
//! above `entered + T`.

use std::any::Any;
use std::fmt;

use crate::cpla::Attestation;
use crate::crypto::Ciphertext;
use crate::ledger::{Address, CallCtx, Contract, Reject};
use crate::proof::{FakeStatement, Proof, RelationId, RewardStatement};

use super::{admit, check_deployment, decode_call, pay_out, Call, SettleKind, Settlement, TaskParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Init,
    Collecting,
    AwaitingInstruction,
    Settled,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Init => "Init",
            Phase::Collecting => "Collecting",
            Phase::AwaitingInstruction => "AwaitingInstruction",
            Phase::Settled => "Settled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submission {
    /// Stable id, assigned in acceptance order.
    pub record: u64,
    pub worker: Address,
    pub attestation: Attestation,
    pub ciphertext: Ciphertext,
    pub accepted_at: u64,
}

#[derive(Debug, Clone)]
pub struct QualityTask {
    params: TaskParams,
    phase: Phase,
    phase_log: Vec<(Phase, u64)>,
    records: Vec<Submission>,
    removed: Vec<Submission>,
    next_record: u64,
    settlement: Option<Settlement>,
}

impl QualityTask {
    pub fn deploy(ctx: &mut CallCtx<'_>, params: TaskParams) -> Result<Self, Reject> {
        params.validate().map_err(|e| Reject::new("deploy", e))?;
        check_deployment(
            ctx,
            &params.alpha_r,
            &params.pi_r,
            &params.mpk,
            params.tau,
            &[
                (params.pp_auth, RelationId::Auth),
                (params.pp_reward, RelationId::Reward),
                (params.pp_fake, RelationId::Fake),
            ],
        )?;
        let mut task = Self {
            params,
            phase: Phase::Init,
            phase_log: vec![(Phase::Init, ctx.height)],
            records: Vec::new(),
            removed: Vec::new(),
            next_record: 0,
            settlement: None,
        };
        task.enter(ctx, Phase::Collecting);
        Ok(task)
    }

    pub fn params(&self) -> &TaskParams {
        &self.params
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Every phase with the height it was entered at, oldest first.
    pub fn phase_log(&self) -> &[(Phase, u64)] {
        &self.phase_log
    }

    pub fn entered(&self, phase: Phase) -> Option<u64> {
        self.phase_log.iter().find(|(p, _)| *p == phase).map(|(_, h)| *h)
    }

    /// Live submissions in acceptance order.
    pub fn records(&self) -> &[Submission] {
        &self.records
    }

    /// Submissions removed by a fake proof.
    pub fn removed(&self) -> &[Submission] {
        &self.removed
    }

    pub fn settlement(&self) -> Option<&Settlement> {
        self.settlement.as_ref()
    }

    /// The n answer slots: live ciphertexts in acceptance order, then ⊥.
    pub fn slots(&self) -> Vec<Option<Ciphertext>> {
        let mut slots: Vec<_> = self.records.iter().map(|s| Some(s.ciphertext.clone())).collect();
        slots.resize(self.params.n as usize, None);
        slots
    }

    pub fn reward_statement(&self, rewards: Vec<u64>) -> RewardStatement {
        RewardStatement {
            epk: self.params.epk,
            tau: self.params.tau,
            policy: self.params.policy.clone(),
            slots: self.slots(),
            rewards,
        }
    }

    pub fn fake_statement(&self, record: u64) -> Option<FakeStatement> {
        let s = self.records.iter().find(|s| s.record == record)?;
        Some(FakeStatement {
            ciphertext: s.ciphertext.clone(),
            epk: self.params.epk,
            worker: s.worker,
        })
    }

    fn enter(&mut self, ctx: &mut CallCtx<'_>, next: Phase) {
        debug_assert!(next > self.phase, "phase moved backwards");
        ctx.emit("phase", format!("{} -> {next}", self.phase));
        self.phase = next;
        self.phase_log.push((next, ctx.height));
    }

    fn on_submit(&mut self, ctx: &mut CallCtx<'_>, att: Attestation, c: Ciphertext) -> Result<(), Reject> {
        if self.phase != Phase::Collecting {
            return Err(Reject::new("submit", format!("phase is {}", self.phase)));
        }
        let p = &self.params;
        let earlier = self.records.iter().chain(&self.removed).map(|s| &s.attestation);
        admit(ctx, "submit", &p.mpk, &p.pp_auth, &p.pi_r, &att, &c, earlier)?;
        let record = self.next_record;
        self.next_record += 1;
        ctx.emit("accept", format!("record={record} worker={}", ctx.sender));
        self.records.push(Submission {
            record,
            worker: ctx.sender,
            attestation: att,
            ciphertext: c,
            accepted_at: ctx.height,
        });
        if self.records.len() == p.n as usize {
            self.enter(ctx, Phase::AwaitingInstruction);
        }
        Ok(())
    }

    fn on_fake_proof(&mut self, ctx: &mut CallCtx<'_>, record: u64, proof: Proof) -> Result<(), Reject> {
        let reject = |r: &str| Err(Reject::new("report-fake", r));
        if ctx.sender != self.params.alpha_r {
            return reject("sender is not alpha_R");
        }
        if !matches!(self.phase, Phase::Collecting | Phase::AwaitingInstruction) {
            return reject("phase does not accept removals");
        }
        let Some(x) = self.fake_statement(record) else {
            return reject("no such record");
        };
        if !ctx.verifiers().verify(&self.params.pp_fake, &x.statement(), &proof) {
            return reject("fake proof does not verify");
        }
        let pos = self.records.iter().position(|s| s.record == record).expect("statement built from it");
        let s = self.records.remove(pos);
        ctx.emit("remove", format!("record={record} worker={}", s.worker));
        self.removed.push(s);
        Ok(())
    }

    fn on_instruction(&mut self, ctx: &mut CallCtx<'_>, rewards: Vec<u64>, proof: Proof) -> Result<(), Reject> {
        let reject = |r: &str| Err(Reject::new("instruction", r));
        if ctx.sender != self.params.alpha_r {
            return reject("sender is not alpha_R");
        }
        if self.phase != Phase::AwaitingInstruction {
            return reject("not awaiting instruction");
        }
        if rewards.len() != self.params.n as usize {
            return reject("reward vector has wrong length");
        }
        let total = rewards.iter().try_fold(0u64, |acc, r| acc.checked_add(*r));
        if total.is_none_or(|t| t > self.params.tau) {
            return reject("rewards exceed budget");
        }
        let x = self.reward_statement(rewards.clone());
        if !ctx.verifiers().verify(&self.params.pp_reward, &x.statement(), &proof) {
            return reject("reward proof does not verify");
        }
        let payouts: Vec<(Address, u64)> = self.records.iter().zip(&rewards).map(|(s, r)| (s.worker, *r)).collect();
        self.settle(ctx, SettleKind::Instruction, payouts);
        Ok(())
    }

    fn on_timeout(&mut self, ctx: &mut CallCtx<'_>) {
        let payouts = match self.records.len() {
            0 => Vec::new(),
            w => {
                let share = self.params.tau / w as u64;
                self.records.iter().map(|s| (s.worker, share)).collect()
            }
        };
        self.settle(ctx, SettleKind::Timeout, payouts);
    }

    fn settle(&mut self, ctx: &mut CallCtx<'_>, kind: SettleKind, payouts: Vec<(Address, u64)>) {
        let refund = pay_out(ctx, &payouts, &self.params.alpha_r);
        self.settlement = Some(Settlement {
            kind,
            height: ctx.height,
            payouts,
            refund,
        });
        self.enter(ctx, Phase::Settled);
    }
}

impl Contract for QualityTask {
    fn call(&mut self, ctx: &mut CallCtx<'_>, payload: &[u8]) -> Result<&'static str, Reject> {
        let call = decode_call(ctx, payload)?;
        let kind = call.kind();
        match call {
            Call::Submit { att, ciphertext } => self.on_submit(ctx, att, ciphertext)?,
            Call::ReportFake { record, proof } => self.on_fake_proof(ctx, record, proof)?,
            Call::Instruction { rewards, proof } => self.on_instruction(ctx, rewards, proof)?,
            _ => return Err(Reject::new(kind, "not a quality-task call")),
        }
        Ok(kind)
    }

    fn on_block(&mut self, ctx: &mut CallCtx<'_>) {
        let h = ctx.height;
        if self.phase == Phase::Collecting && h > self.entered(Phase::Collecting).expect("entered") + self.params.t_a {
            self.enter(ctx, Phase::AwaitingInstruction);
        }
        if self.phase == Phase::AwaitingInstruction
            && h > self.entered(Phase::AwaitingInstruction).expect("entered") + self.params.t_i
        {
            self.on_timeout(ctx);
        }
    }

    fn phase_name(&self) -> &'static str {
        self.phase.name()
    }

    fn is_settled(&self) -> bool {
        self.phase == Phase::Settled
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
