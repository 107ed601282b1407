//! Auction task: sealed bids, a proven lowest-k pay-as-bid selection, then
//! answers from the selected bidders, each paid its proven bid on arrival.
//!
//! If the requester never selects, every bidder is treated as selected at
//! `floor(τ / |W|)`. Whatever is left when answering closes goes back to α_R.

use std::any::Any;
use std::fmt;

use crate::cpla::Attestation;
use crate::crypto::Ciphertext;
use crate::ledger::{Address, CallCtx, Contract, Reject};
use crate::proof::{AuctionStatement, FakeStatement, Proof, RelationId};

use super::quality::Submission;
use super::{admit, check_deployment, decode_call, pay_out, AuctionParams, Call, SettleKind, Settlement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Init,
    Bidding,
    AwaitingSelection,
    Answering,
    Settled,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Init => "Init",
            Phase::Bidding => "Bidding",
            Phase::AwaitingSelection => "AwaitingSelection",
            Phase::Answering => "Answering",
            Phase::Settled => "Settled",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Winner {
    pub bidder: Address,
    pub payment: u64,
    pub answer: Option<Ciphertext>,
}

#[derive(Debug, Clone)]
pub struct AuctionTask {
    params: AuctionParams,
    phase: Phase,
    phase_log: Vec<(Phase, u64)>,
    bids: Vec<Submission>,
    removed: Vec<Submission>,
    next_record: u64,
    winners: Vec<Winner>,
    fallback: bool,
    paid: Vec<(Address, u64)>,
    settlement: Option<Settlement>,
}

impl AuctionTask {
    pub fn deploy(ctx: &mut CallCtx<'_>, params: AuctionParams) -> Result<Self, Reject> {
        params.validate().map_err(|e| Reject::new("deploy", e))?;
        check_deployment(
            ctx,
            &params.alpha_r,
            &params.pi_r,
            &params.mpk,
            params.tau,
            &[
                (params.pp_auth, RelationId::Auth),
                (params.pp_fake, RelationId::Fake),
                (params.pp_auction, RelationId::Auction),
            ],
        )?;
        let mut task = Self {
            params,
            phase: Phase::Init,
            phase_log: vec![(Phase::Init, ctx.height)],
            bids: Vec::new(),
            removed: Vec::new(),
            next_record: 0,
            winners: Vec::new(),
            fallback: false,
            paid: Vec::new(),
            settlement: None,
        };
        task.enter(ctx, Phase::Bidding);
        Ok(task)
    }

    pub fn params(&self) -> &AuctionParams {
        &self.params
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn phase_log(&self) -> &[(Phase, u64)] {
        &self.phase_log
    }

    pub fn entered(&self, phase: Phase) -> Option<u64> {
        self.phase_log.iter().find(|(p, _)| *p == phase).map(|(_, h)| *h)
    }

    /// Live bids in acceptance order.
    pub fn bids(&self) -> &[Submission] {
        &self.bids
    }

    pub fn removed(&self) -> &[Submission] {
        &self.removed
    }

    pub fn winners(&self) -> &[Winner] {
        &self.winners
    }

    /// True when the selection came from the no-selection timeout.
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    pub fn settlement(&self) -> Option<&Settlement> {
        self.settlement.as_ref()
    }

    pub fn auction_statement(&self, selected: Vec<u32>, payments: Vec<u64>) -> AuctionStatement {
        AuctionStatement {
            epk: self.params.epk,
            tau: self.params.tau,
            k: self.params.k,
            bids: self.bids.iter().map(|b| b.ciphertext.clone()).collect(),
            bidders: self.bids.iter().map(|b| b.worker).collect(),
            selected,
            payments,
        }
    }

    pub fn fake_statement(&self, record: u64) -> Option<FakeStatement> {
        let s = self.bids.iter().find(|s| s.record == record)?;
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

    fn on_bid(&mut self, ctx: &mut CallCtx<'_>, att: Attestation, c: Ciphertext) -> Result<(), Reject> {
        if self.phase != Phase::Bidding {
            return Err(Reject::new("bid", format!("phase is {}", self.phase)));
        }
        let p = &self.params;
        let earlier = self.bids.iter().chain(&self.removed).map(|s| &s.attestation);
        admit(ctx, "bid", &p.mpk, &p.pp_auth, &p.pi_r, &att, &c, earlier)?;
        let record = self.next_record;
        self.next_record += 1;
        ctx.emit("accept", format!("record={record} bidder={}", ctx.sender));
        self.bids.push(Submission {
            record,
            worker: ctx.sender,
            attestation: att,
            ciphertext: c,
            accepted_at: ctx.height,
        });
        if self.bids.len() == p.max_bids as usize {
            self.enter(ctx, Phase::AwaitingSelection);
        }
        Ok(())
    }

    fn on_fake_bid(&mut self, ctx: &mut CallCtx<'_>, record: u64, proof: Proof) -> Result<(), Reject> {
        let reject = |r: &str| Err(Reject::new("report-fake-bid", r));
        if ctx.sender != self.params.alpha_r {
            return reject("sender is not alpha_R");
        }
        if !matches!(self.phase, Phase::Bidding | Phase::AwaitingSelection) {
            return reject("phase does not accept removals");
        }
        let Some(x) = self.fake_statement(record) else {
            return reject("no such record");
        };
        if !ctx.verifiers().verify(&self.params.pp_fake, &x.statement(), &proof) {
            return reject("fake proof does not verify");
        }
        let pos = self.bids.iter().position(|s| s.record == record).expect("statement built from it");
        let s = self.bids.remove(pos);
        ctx.emit("remove", format!("record={record} bidder={}", s.worker));
        self.removed.push(s);
        Ok(())
    }

    fn on_selection(
        &mut self,
        ctx: &mut CallCtx<'_>,
        selected: Vec<u32>,
        payments: Vec<u64>,
        proof: Proof,
    ) -> Result<(), Reject> {
        let reject = |r: &str| Err(Reject::new("selection", r));
        if ctx.sender != self.params.alpha_r {
            return reject("sender is not alpha_R");
        }
        if self.phase != Phase::AwaitingSelection {
            return reject("not awaiting selection");
        }
        if selected.len() != payments.len() || selected.iter().any(|&i| i as usize >= self.bids.len()) {
            return reject("malformed selection");
        }
        let total = payments.iter().try_fold(0u64, |acc, p| acc.checked_add(*p));
        if total.is_none_or(|t| t > self.params.tau) {
            return reject("payments exceed budget");
        }
        let x = self.auction_statement(selected.clone(), payments.clone());
        if !ctx.verifiers().verify(&self.params.pp_auction, &x.statement(), &proof) {
            return reject("auction proof does not verify");
        }
        self.winners = selected
            .iter()
            .zip(&payments)
            .map(|(&i, &payment)| Winner {
                bidder: self.bids[i as usize].worker,
                payment,
                answer: None,
            })
            .collect();
        for w in &self.winners {
            ctx.emit("select", format!("{} {}", w.bidder, w.payment));
        }
        self.open_answering(ctx);
        Ok(())
    }

    fn on_answer(&mut self, ctx: &mut CallCtx<'_>, c: Ciphertext) -> Result<(), Reject> {
        if self.phase != Phase::Answering {
            return Err(Reject::new("answer", format!("phase is {}", self.phase)));
        }
        let sender = ctx.sender;
        let Some(w) = self.winners.iter_mut().find(|w| w.bidder == sender && w.answer.is_none()) else {
            return Err(Reject::new("answer", "sender is not an unpaid winner"));
        };
        w.answer = Some(c);
        let payment = w.payment;
        ctx.transfer(&sender, payment);
        ctx.emit("payout", format!("{sender} {payment}"));
        self.paid.push((sender, payment));
        if self.winners.iter().all(|w| w.answer.is_some()) {
            self.settle(ctx);
        }
        Ok(())
    }

    fn open_answering(&mut self, ctx: &mut CallCtx<'_>) {
        if self.winners.is_empty() {
            self.settle(ctx);
        } else {
            self.enter(ctx, Phase::Answering);
        }
    }

    fn on_selection_timeout(&mut self, ctx: &mut CallCtx<'_>) {
        self.fallback = true;
        if !self.bids.is_empty() {
            let share = self.params.tau / self.bids.len() as u64;
            self.winners = self
                .bids
                .iter()
                .map(|b| Winner {
                    bidder: b.worker,
                    payment: share,
                    answer: None,
                })
                .collect();
            ctx.emit("fallback", format!("{} bidders at {share}", self.winners.len()));
        }
        self.open_answering(ctx);
    }

    fn settle(&mut self, ctx: &mut CallCtx<'_>) {
        let refund = pay_out(ctx, &[], &self.params.alpha_r);
        let kind = if self.fallback {
            SettleKind::Timeout
        } else {
            SettleKind::Instruction
        };
        self.settlement = Some(Settlement {
            kind,
            height: ctx.height,
            payouts: self.paid.clone(),
            refund,
        });
        self.enter(ctx, Phase::Settled);
    }

    fn expired(&self, h: u64, phase: Phase, window: u64) -> bool {
        self.phase == phase && h > self.entered(phase).expect("entered") + window
    }
}

impl Contract for AuctionTask {
    fn call(&mut self, ctx: &mut CallCtx<'_>, payload: &[u8]) -> Result<&'static str, Reject> {
        let call = decode_call(ctx, payload)?;
        let kind = call.kind();
        match call {
            Call::Bid { att, ciphertext } => self.on_bid(ctx, att, ciphertext)?,
            Call::ReportFakeBid { record, proof } => self.on_fake_bid(ctx, record, proof)?,
            Call::Selection {
                selected,
                payments,
                proof,
            } => self.on_selection(ctx, selected, payments, proof)?,
            Call::Answer { ciphertext } => self.on_answer(ctx, ciphertext)?,
            _ => return Err(Reject::new(kind, "not an auction call")),
        }
        Ok(kind)
    }

    fn on_block(&mut self, ctx: &mut CallCtx<'_>) {
        let h = ctx.height;
        if self.expired(h, Phase::Bidding, self.params.t_b) {
            self.enter(ctx, Phase::AwaitingSelection);
        }
        if self.expired(h, Phase::AwaitingSelection, self.params.t_i) {
            self.on_selection_timeout(ctx);
        }
        if self.expired(h, Phase::Answering, self.params.t_a) {
            self.settle(ctx);
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
