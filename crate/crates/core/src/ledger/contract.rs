use std::any::Any;
use std::collections::BTreeMap;

use crate::proof::{self, ParamsId, Proof, PublicParams, Statement};

use super::Address;

/// Proof verification available to contracts, keyed by published parameter
/// id. Plays the role of a verifier library built into the contract runtime.
#[derive(Debug, Clone, Default)]
pub struct VerifierRegistry {
    params: BTreeMap<ParamsId, PublicParams>,
}

impl VerifierRegistry {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a PublicParams>) -> Self {
        Self {
            params: params.into_iter().map(|p| (p.id(), p.clone())).collect(),
        }
    }

    pub fn contains(&self, id: &ParamsId) -> bool {
        self.params.contains_key(id)
    }

    /// Unknown parameter ids never verify.
    pub fn verify(&self, id: &ParamsId, x: &Statement, proof: &Proof) -> bool {
        self.params.get(id).is_some_and(|pp| proof::verify(pp, x, proof))
    }

    /// Parameters for cryptographic checks done on behalf of a contract
    /// (attestation verification).
    pub fn params(&self, id: &ParamsId) -> Option<&PublicParams> {
        self.params.get(id)
    }
}

/// Why a contract refused a call or a deployment. The ledger reverts the
/// transaction's value transfer and records the reason in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub kind: &'static str,
    pub reason: String,
}

impl Reject {
    pub fn new(kind: &'static str, reason: impl Into<String>) -> Self {
        Self {
            kind,
            reason: reason.into(),
        }
    }
}

/// A contract event destined for the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub height: u64,
    pub contract: Address,
    pub name: &'static str,
    pub detail: String,
}

/// Execution context handed to a contract for one call or one clock tick.
pub struct CallCtx<'a> {
    pub height: u64,
    pub this: Address,
    pub sender: Address,
    pub value: u64,
    pub(super) balances: &'a mut BTreeMap<Address, u64>,
    pub(super) verifiers: &'a VerifierRegistry,
    pub(super) events: &'a mut Vec<Event>,
}

impl CallCtx<'_> {
    pub fn get_balance(&self, addr: &Address) -> u64 {
        self.balances.get(addr).copied().unwrap_or(0)
    }

    /// Moves `v` out of this contract's account; false and no change if the
    /// balance is short.
    pub fn transfer(&mut self, dst: &Address, v: u64) -> bool {
        let this = self.this;
        super::transfer(self.balances, &this, dst, v)
    }

    pub fn verifiers(&self) -> &VerifierRegistry {
        self.verifiers
    }

    pub fn emit(&mut self, name: &'static str, detail: impl Into<String>) {
        self.events.push(Event {
            height: self.height,
            contract: self.this,
            name,
            detail: detail.into(),
        });
    }
}

pub trait Contract: Any {
    /// Handles a call; returns the call kind for the trace.
    fn call(&mut self, ctx: &mut CallCtx<'_>, payload: &[u8]) -> Result<&'static str, Reject>;

    /// Runs once at the start of every block, before its transactions.
    fn on_block(&mut self, ctx: &mut CallCtx<'_>);

    fn phase_name(&self) -> &'static str;

    fn is_settled(&self) -> bool;

    fn as_any(&self) -> &dyn Any;
}

/// Builds a contract from a deploy payload. The deposit has already been
/// credited to `ctx.this` when this runs.
pub type Constructor = fn(&mut CallCtx<'_>, &[u8]) -> Result<Box<dyn Contract>, Reject>;
