//! Pluggable proof interface over the four protocol relations.
//!
//! The shipped backend is honest evaluation plus a trapdoor MAC: `prove`
//! evaluates the relation on the witness and, only if it holds, emits
//! `HMAC(trapdoor, relation || H(statement))`. `verify` recomputes the tag.
//! The trapdoor never leaves [`PublicParams`]; callers can only obtain tags
//! for statements they hold a satisfying witness for.
//!
//! A proof is 33 bytes for every relation (relation byte plus tag) and
//! contains nothing derived from the witness.

pub mod relations;

use std::fmt;

use hmac::{Hmac, Mac};
use sha2::Sha256;
use thiserror::Error;

use crate::codec::DecodeError;
use crate::crypto::{hash, hash_fields, Digest};

pub use relations::{
    bid_payload, open_answer, open_bid, open_plaintext, AuctionStatement, AuthStatement, AuthWitness,
    EncWitness, FakeStatement, RewardStatement, SignedPlaintext,
};

type HmacSha256 = Hmac<Sha256>;

pub const PROOF_LEN: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationId {
    Auth,
    Reward,
    Fake,
    Auction,
}

impl RelationId {
    pub const ALL: [RelationId; 4] = [Self::Auth, Self::Reward, Self::Fake, Self::Auction];

    pub fn byte(self) -> u8 {
        match self {
            Self::Auth => 1,
            Self::Reward => 2,
            Self::Fake => 3,
            Self::Auction => 4,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.byte() == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Auth => "auth",
            Self::Reward => "reward",
            Self::Fake => "fake",
            Self::Auction => "auction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("relation mismatch: params for {params:?}, got {got:?}")]
    RelationMismatch { params: RelationId, got: RelationId },
    #[error("statement is false for the supplied witness ({0:?} relation)")]
    ProveFailed(RelationId),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Identifier of a parameter set as published on the ledger; it is a
/// commitment to the trapdoor and reveals nothing about it.
pub type ParamsId = Digest;

#[derive(Clone, PartialEq, Eq)]
pub struct PublicParams {
    relation: RelationId,
    verifier_material: ParamsId,
    trapdoor: [u8; 32],
}

impl fmt::Debug for PublicParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicParams")
            .field("relation", &self.relation)
            .field("id", &self.verifier_material)
            .finish_non_exhaustive()
    }
}

impl PublicParams {
    pub fn relation(&self) -> RelationId {
        self.relation
    }

    pub fn id(&self) -> ParamsId {
        self.verifier_material
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub relation: RelationId,
    pub public_inputs: Vec<u8>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct Witness {
    pub relation: RelationId,
    pub private_inputs: Vec<u8>,
}

impl fmt::Debug for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Witness").field("relation", &self.relation).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Proof {
    pub relation: RelationId,
    pub tag: [u8; 32],
}

impl Proof {
    pub fn to_bytes(&self) -> [u8; PROOF_LEN] {
        let mut out = [0u8; PROOF_LEN];
        out[0] = self.relation.byte();
        out[1..].copy_from_slice(&self.tag);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != PROOF_LEN {
            return None;
        }
        Some(Self {
            relation: RelationId::from_byte(bytes[0])?,
            tag: bytes[1..].try_into().ok()?,
        })
    }
}

pub fn setup(relation: RelationId, seed: [u8; 32]) -> PublicParams {
    let rel = [relation.byte()];
    let trapdoor = hash_fields(&[b"zl-pp-trapdoor", &rel, &seed]).0;
    let verifier_material = hash_fields(&[b"zl-pp-id", &rel, &trapdoor]);
    PublicParams {
        relation,
        verifier_material,
        trapdoor,
    }
}

fn mac(pp: &PublicParams, x: &Statement) -> HmacSha256 {
    let mut m = HmacSha256::new_from_slice(&pp.trapdoor).expect("hmac accepts any key length");
    m.update(&[x.relation.byte()]);
    m.update(&hash(&x.public_inputs).0);
    m
}

fn check_relation(pp: &PublicParams, got: RelationId) -> Result<(), ProofError> {
    if pp.relation == got {
        Ok(())
    } else {
        Err(ProofError::RelationMismatch {
            params: pp.relation,
            got,
        })
    }
}

pub fn prove(pp: &PublicParams, x: &Statement, w: &Witness) -> Result<Proof, ProofError> {
    check_relation(pp, x.relation)?;
    check_relation(pp, w.relation)?;
    if !eval_relation(pp.relation, x, w)? {
        return Err(ProofError::ProveFailed(pp.relation));
    }
    Ok(Proof {
        relation: pp.relation,
        tag: mac(pp, x).finalize().into_bytes().into(),
    })
}

pub fn verify(pp: &PublicParams, x: &Statement, proof: &Proof) -> bool {
    if x.relation != pp.relation || proof.relation != pp.relation {
        return false;
    }
    mac(pp, x).verify_slice(&proof.tag).is_ok()
}

/// The relation predicate itself, shared by the prover and by test oracles.
pub fn eval_relation(relation: RelationId, x: &Statement, w: &Witness) -> Result<bool, ProofError> {
    if x.relation != relation {
        return Err(ProofError::RelationMismatch {
            params: relation,
            got: x.relation,
        });
    }
    if w.relation != relation {
        return Err(ProofError::RelationMismatch {
            params: relation,
            got: w.relation,
        });
    }
    let holds = match relation {
        RelationId::Auth => AuthStatement::decode(x)?.holds(&AuthWitness::decode(w)?),
        RelationId::Reward => RewardStatement::decode(x)?.holds(&EncWitness::decode(w, relation)?),
        RelationId::Fake => FakeStatement::decode(x)?.holds(&EncWitness::decode(w, relation)?),
        RelationId::Auction => AuctionStatement::decode(x)?.holds(&EncWitness::decode(w, relation)?),
    };
    Ok(holds)
}

/// One parameter set per relation, as published at genesis.
#[derive(Debug, Clone)]
pub struct ParamSet {
    pub auth: PublicParams,
    pub reward: PublicParams,
    pub fake: PublicParams,
    pub auction: PublicParams,
}

impl ParamSet {
    pub fn setup(seed: [u8; 32]) -> Self {
        Self {
            auth: setup(RelationId::Auth, seed),
            reward: setup(RelationId::Reward, seed),
            fake: setup(RelationId::Fake, seed),
            auction: setup(RelationId::Auction, seed),
        }
    }

    pub fn all(&self) -> [&PublicParams; 4] {
        [&self.auth, &self.reward, &self.fake, &self.auction]
    }
}
