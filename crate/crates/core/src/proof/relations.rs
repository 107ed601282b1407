//! Statement and witness encodings for the four relations, and their
//! predicates.
//!
//! Field orders (all via [`crate::codec`]):
//!
//! | relation | public inputs | witness |
//! |----------|---------------|---------|
//! | auth     | t1[32] t2[32] bytes(message) mpk[32] | sk[32] pk[32] cert[64] |
//! | reward   | epk[32] u64(τ) policy count(slots){opt(bytes(C))} count(R){u64} | esk[32] |
//! | fake     | bytes(C) epk[32] worker[20] | esk[32] |
//! | auction  | epk[32] u64(τ) u32(k) count{bytes(B)} count{addr[20]} count{u32 idx} count{u64 pay} | esk[32] |

use crate::codec::{DecodeError, Reader, Writer};
use crate::cpla::{cert_vrfy, message_tag, prefix_tag, PREFIX_LEN};
use crate::crypto::{
    decrypt, enc_pair, pair, sign, verify_sig, Ciphertext, Digest, EncPublicKey, EncSecretKey,
    PublicKey, SecretKey, SigKeyPair, Signature,
};
use crate::ledger::Address;
use crate::policy::{evaluate_auction_selection, Answer, PolicySpec};

use super::{RelationId, Statement, Witness};

fn expect_relation(x: &Statement, r: RelationId) -> Result<(), DecodeError> {
    if x.relation == r {
        Ok(())
    } else {
        Err(DecodeError::Invalid("statement relation"))
    }
}

/// (t1, t2, p||m, mpk): the key behind the tags holds a certificate under mpk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthStatement {
    pub t1: Digest,
    pub t2: Digest,
    pub message: Vec<u8>,
    pub mpk: PublicKey,
}

#[derive(Clone, PartialEq, Eq)]
pub struct AuthWitness {
    pub sk: SecretKey,
    pub pk: PublicKey,
    pub cert: Signature,
}

impl AuthStatement {
    pub fn statement(&self) -> Statement {
        let mut w = Writer::new();
        w.fixed(&self.t1.0)
            .fixed(&self.t2.0)
            .bytes(&self.message)
            .fixed(&self.mpk.0);
        Statement {
            relation: RelationId::Auth,
            public_inputs: w.finish(),
        }
    }

    pub fn decode(x: &Statement) -> Result<Self, DecodeError> {
        expect_relation(x, RelationId::Auth)?;
        let mut r = Reader::new(&x.public_inputs);
        let out = Self {
            t1: Digest(r.fixed()?),
            t2: Digest(r.fixed()?),
            message: r.bytes()?.to_vec(),
            mpk: PublicKey(r.fixed()?),
        };
        r.finish()?;
        Ok(out)
    }

    pub fn holds(&self, w: &AuthWitness) -> bool {
        if self.message.len() < PREFIX_LEN {
            return false;
        }
        cert_vrfy(&w.cert, &w.pk, &self.mpk)
            && pair(&w.pk.0, &w.sk.0)
            && self.t1 == prefix_tag(&self.message[..PREFIX_LEN], &w.sk)
            && self.t2 == message_tag(&self.message, &w.sk)
    }
}

impl AuthWitness {
    pub fn witness(&self) -> Witness {
        let mut w = Writer::new();
        w.fixed(&self.sk.0).fixed(&self.pk.0).fixed(&self.cert.0);
        Witness {
            relation: RelationId::Auth,
            private_inputs: w.finish(),
        }
    }

    pub fn decode(w: &Witness) -> Result<Self, DecodeError> {
        if w.relation != RelationId::Auth {
            return Err(DecodeError::Invalid("witness relation"));
        }
        let mut r = Reader::new(&w.private_inputs);
        let out = Self {
            sk: SecretKey(r.fixed()?),
            pk: PublicKey(r.fixed()?),
            cert: Signature(r.fixed()?),
        };
        r.finish()?;
        Ok(out)
    }
}

/// The decryption key, the witness for every relation over ciphertexts.
#[derive(Clone, PartialEq, Eq)]
pub struct EncWitness {
    pub esk: EncSecretKey,
}

impl EncWitness {
    pub fn witness(&self, relation: RelationId) -> Witness {
        Witness {
            relation,
            private_inputs: self.esk.0.to_vec(),
        }
    }

    pub fn decode(w: &Witness, relation: RelationId) -> Result<Self, DecodeError> {
        if w.relation != relation {
            return Err(DecodeError::Invalid("witness relation"));
        }
        let mut r = Reader::new(&w.private_inputs);
        let esk = EncSecretKey(r.fixed()?);
        r.finish()?;
        Ok(Self { esk })
    }
}

const SIGNED_PAYLOAD_DOMAIN: &[u8] = b"zl-signed-payload";

/// What a worker encrypts: a payload (answer or bid) signed under the key of
/// the one-time address that submits it. The verification key travels inside
/// the plaintext so the signature can be checked against the address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPlaintext {
    pub payload: Vec<u8>,
    pub signer: PublicKey,
    pub sig: Signature,
}

impl SignedPlaintext {
    fn signing_message(payload: &[u8]) -> Vec<u8> {
        let mut w = Writer::new();
        w.fixed(SIGNED_PAYLOAD_DOMAIN).bytes(payload);
        w.finish()
    }

    pub fn sign(payload: Vec<u8>, keys: &SigKeyPair) -> Self {
        let sig = sign(&keys.sk, &Self::signing_message(&payload));
        Self {
            payload,
            signer: keys.pk,
            sig,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&self.payload).fixed(&self.signer.0).fixed(&self.sig.0);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader::new(bytes);
        let out = Self {
            payload: r.bytes().ok()?.to_vec(),
            signer: PublicKey(r.fixed().ok()?),
            sig: Signature(r.fixed().ok()?),
        };
        r.finish().ok()?;
        Some(out)
    }

    /// Properly signed by the key behind `addr`.
    pub fn verifies_for(&self, addr: &Address) -> bool {
        Address::from_pk(&self.signer) == *addr
            && verify_sig(&self.signer.0, &Self::signing_message(&self.payload), &self.sig.0)
    }
}

pub fn open_plaintext(esk: &EncSecretKey, c: &Ciphertext) -> Option<SignedPlaintext> {
    SignedPlaintext::from_bytes(&decrypt(esk, c).ok()?)
}

/// Decrypted answer in a slot; non-UTF-8 payloads are ⊥. `None` when the
/// ciphertext does not open at all.
pub fn open_answer(esk: &EncSecretKey, c: &Ciphertext) -> Option<Answer> {
    let pt = open_plaintext(esk, c)?;
    Some(match String::from_utf8(pt.payload) {
        Ok(s) => Answer::Value(s),
        Err(_) => Answer::Bottom,
    })
}

pub fn bid_payload(amount: u64) -> Vec<u8> {
    amount.to_be_bytes().to_vec()
}

pub fn open_bid(esk: &EncSecretKey, c: &Ciphertext) -> Option<u64> {
    let pt = open_plaintext(esk, c)?;
    Some(u64::from_be_bytes(pt.payload.as_slice().try_into().ok()?))
}

fn write_ciphertexts<'a>(w: &mut Writer, cs: impl ExactSizeIterator<Item = &'a Ciphertext>) {
    w.count(cs.len());
    for c in cs {
        w.bytes(&c.0);
    }
}

fn read_ciphertexts(r: &mut Reader<'_>) -> Result<Vec<Ciphertext>, DecodeError> {
    let n = r.count()?;
    (0..n).map(|_| Ok(Ciphertext(r.bytes()?.to_vec()))).collect()
}

/// (P̄, R̄) with P̄ = (epk, τ, policy, C_1..C_n); `None` slots are ⊥ padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardStatement {
    pub epk: EncPublicKey,
    pub tau: u64,
    pub policy: PolicySpec,
    pub slots: Vec<Option<Ciphertext>>,
    pub rewards: Vec<u64>,
}

impl RewardStatement {
    pub fn statement(&self) -> Statement {
        let mut w = Writer::new();
        w.fixed(&self.epk.0).u64(self.tau);
        self.policy.encode(&mut w);
        w.count(self.slots.len());
        for slot in &self.slots {
            match slot {
                None => w.u8(0),
                Some(c) => w.u8(1).bytes(&c.0),
            };
        }
        w.count(self.rewards.len());
        for r in &self.rewards {
            w.u64(*r);
        }
        Statement {
            relation: RelationId::Reward,
            public_inputs: w.finish(),
        }
    }

    pub fn decode(x: &Statement) -> Result<Self, DecodeError> {
        expect_relation(x, RelationId::Reward)?;
        let mut r = Reader::new(&x.public_inputs);
        let epk = EncPublicKey(r.fixed()?);
        let tau = r.u64()?;
        let policy = PolicySpec::decode(&mut r)?;
        let n = r.count()?;
        let mut slots = Vec::with_capacity(n);
        for _ in 0..n {
            slots.push(match r.u8()? {
                0 => None,
                1 => Some(Ciphertext(r.bytes()?.to_vec())),
                tag => return Err(DecodeError::BadTag { what: "slot", tag }),
            });
        }
        let m = r.count()?;
        let rewards = (0..m).map(|_| r.u64()).collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self {
            epk,
            tau,
            policy,
            slots,
            rewards,
        })
    }

    pub fn holds(&self, w: &EncWitness) -> bool {
        if !enc_pair(&self.epk, &w.esk) || self.rewards.len() != self.slots.len() {
            return false;
        }
        let mut answers = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            match slot {
                None => answers.push(Answer::Bottom),
                Some(c) => match open_answer(&w.esk, c) {
                    Some(a) => answers.push(a),
                    None => return false,
                },
            }
        }
        self.policy.rewards(&answers, self.tau).is_ok_and(|r| r == self.rewards)
    }
}

/// (C_i, epk, α_i): the plaintext under C_i is not a payload properly signed
/// for α_i, or does not decrypt at all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FakeStatement {
    pub ciphertext: Ciphertext,
    pub epk: EncPublicKey,
    pub worker: Address,
}

impl FakeStatement {
    pub fn statement(&self) -> Statement {
        let mut w = Writer::new();
        w.bytes(&self.ciphertext.0).fixed(&self.epk.0).fixed(&self.worker.0);
        Statement {
            relation: RelationId::Fake,
            public_inputs: w.finish(),
        }
    }

    pub fn decode(x: &Statement) -> Result<Self, DecodeError> {
        expect_relation(x, RelationId::Fake)?;
        let mut r = Reader::new(&x.public_inputs);
        let out = Self {
            ciphertext: Ciphertext(r.bytes()?.to_vec()),
            epk: EncPublicKey(r.fixed()?),
            worker: Address(r.fixed()?),
        };
        r.finish()?;
        Ok(out)
    }

    pub fn holds(&self, w: &EncWitness) -> bool {
        if !enc_pair(&self.epk, &w.esk) {
            return false;
        }
        match open_plaintext(&w.esk, &self.ciphertext) {
            None => true,
            Some(pt) => !pt.verifies_for(&self.worker),
        }
    }
}

/// (P̄, S̄): the selection is the lowest-k outcome over the decrypted bids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionStatement {
    pub epk: EncPublicKey,
    pub tau: u64,
    pub k: u32,
    pub bids: Vec<Ciphertext>,
    pub bidders: Vec<Address>,
    pub selected: Vec<u32>,
    pub payments: Vec<u64>,
}

impl AuctionStatement {
    pub fn statement(&self) -> Statement {
        let mut w = Writer::new();
        w.fixed(&self.epk.0).u64(self.tau).u32(self.k);
        write_ciphertexts(&mut w, self.bids.iter());
        w.count(self.bidders.len());
        for a in &self.bidders {
            w.fixed(&a.0);
        }
        w.count(self.selected.len());
        for i in &self.selected {
            w.u32(*i);
        }
        w.count(self.payments.len());
        for p in &self.payments {
            w.u64(*p);
        }
        Statement {
            relation: RelationId::Auction,
            public_inputs: w.finish(),
        }
    }

    pub fn decode(x: &Statement) -> Result<Self, DecodeError> {
        expect_relation(x, RelationId::Auction)?;
        let mut r = Reader::new(&x.public_inputs);
        let epk = EncPublicKey(r.fixed()?);
        let tau = r.u64()?;
        let k = r.u32()?;
        let bids = read_ciphertexts(&mut r)?;
        let n = r.count()?;
        let bidders = (0..n).map(|_| Ok(Address(r.fixed()?))).collect::<Result<_, DecodeError>>()?;
        let n = r.count()?;
        let selected = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
        let n = r.count()?;
        let payments = (0..n).map(|_| r.u64()).collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self {
            epk,
            tau,
            k,
            bids,
            bidders,
            selected,
            payments,
        })
    }

    pub fn holds(&self, w: &EncWitness) -> bool {
        if !enc_pair(&self.epk, &w.esk) || self.bids.len() != self.bidders.len() {
            return false;
        }
        let Some(values) = self
            .bids
            .iter()
            .map(|c| open_bid(&w.esk, c))
            .collect::<Option<Vec<u64>>>()
        else {
            return false;
        };
        let k = (self.k as usize).min(values.len());
        match evaluate_auction_selection(&values, k, self.tau) {
            Ok(sel) => {
                sel.payments == self.payments
                    && sel.indices.len() == self.selected.len()
                    && sel.indices.iter().zip(&self.selected).all(|(&a, &b)| a == b as usize)
            }
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpla;
    use crate::crypto::{enc_keygen, encrypt, sig_keygen};
    use crate::proof::{eval_relation, prove, setup, ProofError};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Task {
        esk: EncSecretKey,
        epk: EncPublicKey,
        rng: ChaCha20Rng,
    }

    impl Task {
        fn new(seed: u8) -> Self {
            let k = enc_keygen([seed; 32]);
            Self {
                esk: k.esk,
                epk: k.epk,
                rng: ChaCha20Rng::from_seed([seed ^ 0x5a; 32]),
            }
        }

        fn submit(&mut self, worker_seed: u8, payload: &[u8]) -> (Address, Ciphertext) {
            let keys = sig_keygen([worker_seed; 32]);
            let pt = SignedPlaintext::sign(payload.to_vec(), &keys);
            let c = encrypt(&self.epk, &pt.to_bytes(), &mut self.rng).unwrap();
            (Address::from_pk(&keys.pk), c)
        }
    }

    /// Plurality by exhaustive counting over the answer set.
    fn plurality_oracle(answers: &[&str], set: &[&str], tau: u64) -> Vec<u64> {
        let count = |v: &str| answers.iter().filter(|a| **a == v).count();
        let best = set.iter().map(|v| count(v)).max().unwrap_or(0);
        let winners: Vec<&str> = set.iter().copied().filter(|v| best > 0 && count(v) == best).collect();
        answers
            .iter()
            .map(|a| if winners.contains(a) { tau / answers.len() as u64 } else { 0 })
            .collect()
    }

    #[test]
    fn reward_relation_majority_n3() {
        let mut t = Task::new(1);
        let answers = ["cat", "cat", "dog"];
        let slots: Vec<_> = answers
            .iter()
            .enumerate()
            .map(|(i, a)| Some(t.submit(i as u8 + 10, a.as_bytes()).1))
            .collect();
        let expected = plurality_oracle(&answers, &["cat", "dog", "bird"], 30);
        assert_eq!(expected, vec![10, 10, 0]);
        let mut x = RewardStatement {
            epk: t.epk,
            tau: 30,
            policy: PolicySpec::majority(["cat", "dog", "bird"]),
            slots,
            rewards: expected,
        };
        let w = EncWitness { esk: t.esk.clone() };
        assert!(eval_relation(RelationId::Reward, &x.statement(), &w.witness(RelationId::Reward)).unwrap());
        assert_eq!(RewardStatement::decode(&x.statement()).unwrap(), x);

        // perturbing any single reward makes the relation false and proving fails
        let pp = setup(RelationId::Reward, [2; 32]);
        for j in 0..3 {
            let mut y = x.clone();
            y.rewards[j] += 1;
            assert!(!y.holds(&w));
            assert_eq!(
                prove(&pp, &y.statement(), &w.witness(RelationId::Reward)),
                Err(ProofError::ProveFailed(RelationId::Reward))
            );
        }
        x.rewards.pop();
        assert!(!x.holds(&w));
    }

    #[test]
    fn reward_relation_pads_bottom_and_rejects_garbage() {
        let mut t = Task::new(2);
        let (_, c) = t.submit(3, b"yes");
        let w = EncWitness { esk: t.esk.clone() };
        let x = RewardStatement {
            epk: t.epk,
            tau: 20,
            policy: PolicySpec::majority(["yes", "no"]),
            slots: vec![Some(c), None],
            rewards: vec![10, 0],
        };
        assert!(x.holds(&w));
        let mut g = x.clone();
        g.slots[1] = Some(Ciphertext(vec![0; 80]));
        g.rewards = vec![10, 0];
        assert!(!g.holds(&w));
    }

    #[test]
    fn fake_relation_cases() {
        let mut t = Task::new(3);
        let w = EncWitness { esk: t.esk.clone() };
        let (alpha, c) = t.submit(4, b"cat");
        let honest = FakeStatement {
            ciphertext: c.clone(),
            epk: t.epk,
            worker: alpha,
        };
        assert!(!honest.holds(&w));
        let copied = FakeStatement {
            worker: Address([0xcc; 20]),
            ..honest.clone()
        };
        assert!(copied.holds(&w));
        let garbage = FakeStatement {
            ciphertext: Ciphertext(vec![1; 70]),
            ..honest.clone()
        };
        assert!(garbage.holds(&w));
        // a wrong esk cannot establish anything
        let wrong = EncWitness {
            esk: enc_keygen([77; 32]).esk,
        };
        assert!(!copied.holds(&wrong));
        assert_eq!(FakeStatement::decode(&honest.statement()).unwrap(), honest);
    }

    #[test]
    fn auction_relation_matches_sort_oracle() {
        let mut t = Task::new(4);
        let bids = [5u64, 7, 3, 9];
        let (bidders, cts): (Vec<_>, Vec<_>) = bids
            .iter()
            .enumerate()
            .map(|(i, b)| t.submit(20 + i as u8, &bid_payload(*b)))
            .unzip();
        // sort oracle
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by_key(|&i| (bids[i], i));
        let winners: Vec<u32> = order[..2].iter().map(|&i| i as u32).collect();
        let pay: Vec<u64> = order[..2].iter().map(|&i| bids[i]).collect();
        assert_eq!((winners.clone(), pay.clone()), (vec![2, 0], vec![3, 5]));

        let x = AuctionStatement {
            epk: t.epk,
            tau: 20,
            k: 2,
            bids: cts,
            bidders,
            selected: winners,
            payments: pay,
        };
        let w = EncWitness { esk: t.esk.clone() };
        assert!(x.holds(&w));
        assert_eq!(AuctionStatement::decode(&x.statement()).unwrap(), x);

        let mut inflated = x.clone();
        inflated.payments[0] = 4;
        assert!(!inflated.holds(&w));
        let mut over = x.clone();
        over.tau = 7;
        assert!(!over.holds(&w));
        let mut wrong_pick = x.clone();
        wrong_pick.selected = vec![2, 1];
        assert!(!wrong_pick.holds(&w));
    }

    #[test]
    fn auth_relation_requires_certified_key() {
        let (master, _) = cpla::setup([1; 32]);
        let user = sig_keygen([2; 32]);
        let cert = cpla::cert_gen(&master.msk, &user.pk);
        let msg = [[9u8; 32].as_slice(), b"body"].concat();
        let x = AuthStatement {
            t1: prefix_tag(&msg[..32], &user.sk),
            t2: message_tag(&msg, &user.sk),
            message: msg.clone(),
            mpk: master.mpk,
        };
        let good = AuthWitness {
            sk: user.sk,
            pk: user.pk,
            cert: cert.sigma,
        };
        assert!(x.holds(&good));
        let stranger = sig_keygen([3; 32]);
        let uncertified = AuthWitness {
            sk: stranger.sk,
            pk: stranger.pk,
            cert: cert.sigma,
        };
        let x2 = AuthStatement {
            t1: prefix_tag(&msg[..32], &stranger.sk),
            t2: message_tag(&msg, &stranger.sk),
            ..x.clone()
        };
        assert!(!x2.holds(&uncertified));
        assert_eq!(AuthStatement::decode(&x.statement()).unwrap(), x);
        assert_eq!(AuthWitness::decode(&good.witness()).unwrap().pk, user.pk);
    }

    #[test]
    fn malformed_encodings_are_decode_errors() {
        let x = Statement {
            relation: RelationId::Fake,
            public_inputs: vec![0, 0, 0, 9, 1],
        };
        let w = EncWitness {
            esk: enc_keygen([1; 32]).esk,
        };
        assert!(matches!(
            eval_relation(RelationId::Fake, &x, &w.witness(RelationId::Fake)),
            Err(ProofError::Decode(_))
        ));
    }
}
