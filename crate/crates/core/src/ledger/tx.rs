use std::fmt;

use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{hash, hash_fields, sign, Digest, PublicKey, SigKeyPair, Signature};

pub const ADDRESS_LEN: usize = 20;

/// Ledger account: the first 20 bytes of `H(pk)`, or of `H(deployer || counter)`
/// for contracts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; ADDRESS_LEN]);

impl Address {
    pub fn from_pk(pk: &PublicKey) -> Self {
        Self::truncate(&hash(&pk.0))
    }

    /// `truncate(H(deployer || counter))`, counter as big-endian u64.
    pub fn contract(deployer: &Address, counter: u64) -> Self {
        let mut buf = deployer.0.to_vec();
        buf.extend_from_slice(&counter.to_be_bytes());
        Self::truncate(&hash(&buf))
    }

    fn truncate(d: &Digest) -> Self {
        Address(d.0[..ADDRESS_LEN].try_into().expect("20 <= 32"))
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.short())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Deploy,
    /// A contract call, or a plain transfer when no contract lives there.
    Call(Address),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Deploy => f.write_str("DEPLOY"),
            Target::Call(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub sender: Address,
    pub sender_pk: PublicKey,
    pub target: Target,
    pub value: u64,
    pub payload: Vec<u8>,
    pub nonce: u64,
    pub sig: Signature,
}

fn signing_bytes(sender: &Address, target: &Target, value: u64, payload: &[u8], nonce: u64) -> Vec<u8> {
    let mut w = Writer::new();
    w.fixed(b"zl-tx").fixed(&sender.0);
    match target {
        Target::Deploy => w.u8(0),
        Target::Call(a) => w.u8(1).fixed(&a.0),
    };
    w.u64(value).bytes(payload).u64(nonce);
    w.finish()
}

impl Transaction {
    pub fn signed(keys: &SigKeyPair, target: Target, value: u64, payload: Vec<u8>, nonce: u64) -> Self {
        let sender = Address::from_pk(&keys.pk);
        let sig = sign(&keys.sk, &signing_bytes(&sender, &target, value, &payload, nonce));
        Self {
            sender,
            sender_pk: keys.pk,
            target,
            value,
            payload,
            nonce,
            sig,
        }
    }

    pub fn signing_bytes(&self) -> Vec<u8> {
        signing_bytes(&self.sender, &self.target, self.value, &self.payload, self.nonce)
    }

    /// Everything that is written to the ledger for this transaction.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.fixed(&self.sender_pk.0).bytes(&self.signing_bytes()).fixed(&self.sig.0);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let sender_pk = PublicKey(r.fixed()?);
        let body = r.bytes()?;
        let sig = Signature(r.fixed()?);
        r.finish()?;
        let mut b = Reader::new(body);
        if b.fixed::<5>()? != *b"zl-tx" {
            return Err(DecodeError::Invalid("transaction domain"));
        }
        let sender = Address(b.fixed()?);
        let target = match b.u8()? {
            0 => Target::Deploy,
            1 => Target::Call(Address(b.fixed()?)),
            tag => return Err(DecodeError::BadTag { what: "target", tag }),
        };
        let value = b.u64()?;
        let payload = b.bytes()?.to_vec();
        let nonce = b.u64()?;
        b.finish()?;
        Ok(Self {
            sender,
            sender_pk,
            target,
            value,
            payload,
            nonce,
            sig,
        })
    }

    pub fn id(&self) -> Digest {
        hash_fields(&[b"zl-txid", &self.to_bytes()])
    }
}
