//! Common-prefix-linkable anonymous authentication.
//!
//! An attestation on `p||m` is `(t1, t2, η)` with `t1 = H(p, sk)`,
//! `t2 = H(p||m, sk)` and `η` a proof that both tags were computed from a
//! secret key whose public key carries a certificate under `mpk`. Two
//! attestations by one key on messages sharing the λ-byte prefix `p` have the
//! same `t1` and are linked; across prefixes the tags are unrelated.

use thiserror::Error;

use crate::crypto::{self, hash, sig_keygen, Digest, PublicKey, SecretKey, Signature};
use crate::ledger::Address;
use crate::proof::{self, AuthStatement, AuthWitness, Proof, ProofError, PublicParams, RelationId, PROOF_LEN};

/// λ in bytes.
pub const PREFIX_LEN: usize = 32;
pub const ATTESTATION_LEN: usize = 32 + 32 + PROOF_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CplaError {
    #[error("message of {0} bytes is shorter than the {PREFIX_LEN}-byte prefix")]
    MessageTooShort(usize),
    #[error("authentication refused: {0}")]
    Auth(#[from] ProofError),
}

/// The λ-byte common prefix. In the protocol it is always the digest of a
/// contract address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Prefix(pub [u8; PREFIX_LEN]);

impl Prefix {
    pub fn for_contract(contract: &Address) -> Self {
        Prefix(hash(&contract.0).0)
    }

    /// `p || m`
    pub fn message(&self, parts: &[&[u8]]) -> Vec<u8> {
        let mut out = self.0.to_vec();
        for p in parts {
            out.extend_from_slice(p);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterKeys {
    pub mpk: PublicKey,
    pub msk: SecretKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Certificate {
    pub subject_pk: PublicKey,
    pub sigma: Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Attestation {
    pub t1: Digest,
    pub t2: Digest,
    pub eta: Proof,
}

impl Attestation {
    pub fn to_bytes(&self) -> [u8; ATTESTATION_LEN] {
        let mut out = [0u8; ATTESTATION_LEN];
        out[..32].copy_from_slice(&self.t1.0);
        out[32..64].copy_from_slice(&self.t2.0);
        out[64..].copy_from_slice(&self.eta.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != ATTESTATION_LEN {
            return None;
        }
        Some(Self {
            t1: Digest::from_slice(&bytes[..32])?,
            t2: Digest::from_slice(&bytes[32..64])?,
            eta: Proof::from_bytes(&bytes[64..])?,
        })
    }
}

pub fn setup(seed: [u8; 32]) -> (MasterKeys, PublicParams) {
    let keys = sig_keygen(crypto::derive_seed(&seed, "ra-master"));
    let pp = proof::setup(RelationId::Auth, crypto::derive_seed(&seed, "auth-params"));
    (
        MasterKeys {
            mpk: keys.pk,
            msk: keys.sk,
        },
        pp,
    )
}

fn cert_message(pk: &PublicKey) -> Vec<u8> {
    [b"zl-cert".as_slice(), &pk.0].concat()
}

/// Identity uniqueness is enforced by the registration authority, not here.
pub fn cert_gen(msk: &SecretKey, pk: &PublicKey) -> Certificate {
    Certificate {
        subject_pk: *pk,
        sigma: crypto::sign(msk, &cert_message(pk)),
    }
}

pub fn cert_vrfy(sigma: &Signature, pk: &PublicKey, mpk: &PublicKey) -> bool {
    crypto::verify_sig(&mpk.0, &cert_message(pk), &sigma.0)
}

fn length_tagged(data: &[u8], sk: &SecretKey) -> Digest {
    let mut buf = Vec::with_capacity(8 + data.len() + 32);
    buf.extend_from_slice(&(data.len() as u64).to_be_bytes());
    buf.extend_from_slice(data);
    buf.extend_from_slice(&sk.0);
    hash(&buf)
}

/// `t1 = H(len(p) || p || sk)`
pub fn prefix_tag(prefix: &[u8], sk: &SecretKey) -> Digest {
    length_tagged(prefix, sk)
}

/// `t2 = H(len(p||m) || p||m || sk)`
pub fn message_tag(message: &[u8], sk: &SecretKey) -> Digest {
    length_tagged(message, sk)
}

pub fn auth(
    message: &[u8],
    sk: &SecretKey,
    pk: &PublicKey,
    cert: &Certificate,
    mpk: &PublicKey,
    pp: &PublicParams,
) -> Result<Attestation, CplaError> {
    if message.len() < PREFIX_LEN {
        return Err(CplaError::MessageTooShort(message.len()));
    }
    let x = AuthStatement {
        t1: prefix_tag(&message[..PREFIX_LEN], sk),
        t2: message_tag(message, sk),
        message: message.to_vec(),
        mpk: *mpk,
    };
    let w = AuthWitness {
        sk: *sk,
        pk: *pk,
        cert: cert.sigma,
    };
    let eta = proof::prove(pp, &x.statement(), &w.witness())?;
    Ok(Attestation {
        t1: x.t1,
        t2: x.t2,
        eta,
    })
}

pub fn verify(message: &[u8], att: &Attestation, mpk: &PublicKey, pp: &PublicParams) -> bool {
    if message.len() < PREFIX_LEN {
        return false;
    }
    let x = AuthStatement {
        t1: att.t1,
        t2: att.t2,
        message: message.to_vec(),
        mpk: *mpk,
    };
    proof::verify(pp, &x.statement(), &att.eta)
}

/// Equality of prefix tags. Callers are responsible for having verified both
/// attestations on messages with the same prefix.
pub fn link(a: &Attestation, b: &Attestation) -> bool {
    a.t1 == b.t1
}
