pub mod actors;
pub mod codec;
pub mod contracts;
pub mod cpla;
pub mod crypto;
pub mod harness;
pub mod ledger;
pub mod policy;
pub mod proof;
