//! Scenario configs, the deterministic runner, security games and reference
//! oracles.

pub mod config;
pub mod games;
pub mod oracle;
pub mod report;
mod runner;

pub use runner::{run_scenario, Run};

use crate::actors::{PublicSetup, RegistrationAuthority};
use crate::contracts;
use crate::cpla;
use crate::crypto::derive_seed;
use crate::ledger::{Address, Ledger, LedgerConfig, VerifierRegistry};
use crate::proof::ParamSet;

/// The seed every other seed in a run is derived from.
pub fn root_seed(seed: u64) -> [u8; 32] {
    derive_seed(&seed.to_be_bytes(), "scenario-root")
}

/// Registration authority plus everything it publishes.
pub fn trusted_setup(root: &[u8; 32]) -> (RegistrationAuthority, PublicSetup) {
    let (master, _) = cpla::setup(derive_seed(root, "ra"));
    let ra = RegistrationAuthority::new(master);
    let setup = PublicSetup {
        mpk: ra.mpk(),
        params: ParamSet::setup(derive_seed(root, "params")),
    };
    (ra, setup)
}

/// A ledger that knows the task contracts and the setup's verifiers.
pub fn new_ledger(setup: &PublicSetup, delta: u64, genesis: impl IntoIterator<Item = (Address, u64)>) -> Ledger {
    Ledger::new(
        LedgerConfig { delta },
        genesis,
        VerifierRegistry::new(setup.params.all()),
        contracts::deploy,
    )
}
