//! Seedable primitives: SHA-256, Ed25519 signatures, and hybrid public-key
//! encryption (X25519 key agreement wrapping a ChaCha20-Poly1305 payload).
//!
//! Every key generator takes an explicit 32-byte seed so scenario runs are
//! bit-reproducible. Encryption draws its ephemeral key from a caller-supplied
//! RNG for the same reason.

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::ChaCha20Poly1305;
use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};
use sha2::{Digest as _, Sha256};
use thiserror::Error;
use x25519_dalek::{PublicKey as XPublic, StaticSecret};

/// Recorded in every trace header so runs are self-describing.
pub const PRIMITIVES: &str =
    "hash=SHA-256 sig=Ed25519 enc=X25519+ChaCha20-Poly1305 proof=honest-eval+HMAC-SHA256";

/// Largest plaintext `encrypt` accepts.
pub const MAX_PLAINTEXT: usize = 64 * 1024;

pub const DIGEST_LEN: usize = 32;
pub const KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
/// Ephemeral X25519 key plus the Poly1305 tag.
pub const CIPHERTEXT_OVERHEAD: usize = 32 + 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("plaintext of {len} bytes exceeds the {max}-byte bound")]
    PlaintextTooLarge { len: usize, max: usize },
    #[error("decryption failed")]
    DecryptionFailed,
    #[error("invalid encryption key")]
    InvalidKey,
}

macro_rules! byte_newtype {
    ($(#[$m:meta])* $name:ident, $len:expr) => {
        $(#[$m])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                bytes.try_into().ok().map(Self)
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }
    };
}

byte_newtype!(
    /// SHA-256 output.
    Digest,
    DIGEST_LEN
);
byte_newtype!(
    /// Ed25519 verification key.
    PublicKey,
    KEY_LEN
);
byte_newtype!(
    /// Ed25519 signing seed.
    SecretKey,
    KEY_LEN
);
byte_newtype!(Signature, SIGNATURE_LEN);
byte_newtype!(
    /// X25519 public key of a task's answer-encryption pair.
    EncPublicKey,
    KEY_LEN
);
byte_newtype!(EncSecretKey, KEY_LEN);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Debug for EncPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncPublicKey({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl fmt::Debug for EncSecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EncSecretKey(..)")
    }
}

pub fn hash(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Hash of several fields, each length-prefixed so field boundaries are
/// unambiguous.
pub fn hash_fields(fields: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for f in fields {
        h.update((f.len() as u64).to_be_bytes());
        h.update(f);
    }
    Digest(h.finalize().into())
}

/// Per-actor seed: `hash(parent || label)`.
pub fn derive_seed(parent: &[u8], label: &str) -> [u8; 32] {
    hash_fields(&[parent, label.as_bytes()]).0
}

#[derive(Clone, PartialEq, Eq)]
pub struct SigKeyPair {
    pub sk: SecretKey,
    pub pk: PublicKey,
}

impl fmt::Debug for SigKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigKeyPair").field("pk", &self.pk).finish_non_exhaustive()
    }
}

pub fn sig_keygen(seed: [u8; 32]) -> SigKeyPair {
    let signing = SigningKey::from_bytes(&seed);
    SigKeyPair {
        sk: SecretKey(seed),
        pk: PublicKey(signing.verifying_key().to_bytes()),
    }
}

pub fn sign(sk: &SecretKey, msg: &[u8]) -> Signature {
    Signature(SigningKey::from_bytes(&sk.0).sign(msg).to_bytes())
}

/// Never panics: malformed keys or signatures simply fail verification.
pub fn verify_sig(pk: &[u8], msg: &[u8], sig: &[u8]) -> bool {
    let Ok(pk) = <[u8; KEY_LEN]>::try_from(pk) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(&pk) else {
        return false;
    };
    let Ok(sig) = ed25519_dalek::Signature::from_slice(sig) else {
        return false;
    };
    vk.verify_strict(msg, &sig).is_ok()
}

/// 1 iff `sk` is the signing key behind `pk`.
pub fn pair(pk: &[u8], sk: &[u8]) -> bool {
    let (Ok(pk), Ok(sk)) = (<[u8; KEY_LEN]>::try_from(pk), <[u8; KEY_LEN]>::try_from(sk)) else {
        return false;
    };
    SigningKey::from_bytes(&sk).verifying_key().to_bytes() == pk
}

#[derive(Clone, PartialEq, Eq)]
pub struct EncKeyPair {
    pub esk: EncSecretKey,
    pub epk: EncPublicKey,
}

impl fmt::Debug for EncKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EncKeyPair").field("epk", &self.epk).finish_non_exhaustive()
    }
}

pub fn enc_keygen(seed: [u8; 32]) -> EncKeyPair {
    let secret = StaticSecret::from(seed);
    let public = XPublic::from(&secret);
    EncKeyPair {
        esk: EncSecretKey(secret.to_bytes()),
        epk: EncPublicKey(public.to_bytes()),
    }
}

/// 1 iff `esk` decrypts for `epk`.
pub fn enc_pair(epk: &EncPublicKey, esk: &EncSecretKey) -> bool {
    XPublic::from(&StaticSecret::from(esk.0)).to_bytes() == epk.0
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ciphertext(pub Vec<u8>);

impl Ciphertext {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = &self.0[..self.0.len().min(8)];
        write!(f, "Ciphertext({}.., {} bytes)", hex::encode(head), self.0.len())
    }
}

fn payload_cipher(eph: &[u8; 32], epk: &[u8; 32], shared: &[u8; 32]) -> ChaCha20Poly1305 {
    let key = hash_fields(&[b"zl-enc-key", eph, epk, shared]);
    ChaCha20Poly1305::new((&key.0).into())
}

// each payload key is single-use (fresh ephemeral), so a fixed nonce is sound
const NONCE: [u8; 12] = [0; 12];

/// Hybrid encryption; output length is `m.len() + CIPHERTEXT_OVERHEAD`.
pub fn encrypt<R: RngCore + CryptoRng>(
    epk: &EncPublicKey,
    m: &[u8],
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    if m.len() > MAX_PLAINTEXT {
        return Err(CryptoError::PlaintextTooLarge {
            len: m.len(),
            max: MAX_PLAINTEXT,
        });
    }
    let eph = StaticSecret::random_from_rng(rng);
    let eph_pub = XPublic::from(&eph).to_bytes();
    let shared = eph.diffie_hellman(&XPublic::from(epk.0));
    if !shared.was_contributory() {
        return Err(CryptoError::InvalidKey);
    }
    let cipher = payload_cipher(&eph_pub, &epk.0, shared.as_bytes());
    let body = cipher
        .encrypt((&NONCE).into(), Payload { msg: m, aad: &epk.0 })
        .map_err(|_| CryptoError::InvalidKey)?;
    let mut out = Vec::with_capacity(32 + body.len());
    out.extend_from_slice(&eph_pub);
    out.extend_from_slice(&body);
    Ok(Ciphertext(out))
}

/// Fails (rather than returning garbage) under the wrong key or on any
/// tampering.
pub fn decrypt(esk: &EncSecretKey, c: &Ciphertext) -> Result<Vec<u8>, CryptoError> {
    if c.0.len() < CIPHERTEXT_OVERHEAD {
        return Err(CryptoError::DecryptionFailed);
    }
    let (eph_pub, body) = c.0.split_at(32);
    let eph_pub: [u8; 32] = eph_pub.try_into().expect("32 bytes");
    let secret = StaticSecret::from(esk.0);
    let epk = XPublic::from(&secret).to_bytes();
    let shared = secret.diffie_hellman(&XPublic::from(eph_pub));
    if !shared.was_contributory() {
        return Err(CryptoError::DecryptionFailed);
    }
    payload_cipher(&eph_pub, &epk, shared.as_bytes())
        .decrypt((&NONCE).into(), Payload { msg: body, aad: &epk })
        .map_err(|_| CryptoError::DecryptionFailed)
}
