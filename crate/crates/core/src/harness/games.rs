//! Empirical security games against the anonymous-authentication scheme.
//!
//! Each game plays a fixed roster of adversary strategies in rotation and
//! counts wins. Linkability and forgery adversaries should never win;
//! anonymity adversaries should do no better than a coin flip.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::cpla::{self, Attestation, Certificate, MasterKeys, Prefix};
use crate::crypto::{derive_seed, enc_keygen, hash, sig_keygen, Digest, PublicKey, SigKeyPair, Signature};
use crate::policy::PolicySpec;
use crate::proof::{self, ParamSet, Proof, PublicParams, RelationId, EncWitness, RewardStatement};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyResult {
    pub strategy: &'static str,
    pub trials: u64,
    pub wins: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameReport {
    pub game: &'static str,
    pub seed: u64,
    pub q: Option<u32>,
    pub trials: u64,
    pub wins: u64,
    pub rate: f64,
    pub strategies: Vec<StrategyResult>,
}

impl GameReport {
    fn new(game: &'static str, seed: u64, q: Option<u32>, strategies: Vec<StrategyResult>) -> Self {
        let trials = strategies.iter().map(|s| s.trials).sum();
        let wins = strategies.iter().map(|s| s.wins).sum();
        Self {
            game,
            seed,
            q,
            trials,
            wins,
            rate: if trials == 0 { 0.0 } else { wins as f64 / trials as f64 },
            strategies,
        }
    }

    pub fn strategy_rate(&self, name: &str) -> Option<f64> {
        self.strategies
            .iter()
            .find(|s| s.strategy == name)
            .map(|s| s.wins as f64 / s.trials.max(1) as f64)
    }
}

struct Challenger {
    master: MasterKeys,
    pp: PublicParams,
}

struct User {
    keys: SigKeyPair,
    cert: Certificate,
}

impl Challenger {
    fn new(rng: &mut ChaCha20Rng) -> Self {
        let (master, pp) = cpla::setup(rng.gen());
        Self { master, pp }
    }

    fn enroll(&self, rng: &mut ChaCha20Rng) -> User {
        let keys = sig_keygen(rng.gen());
        let cert = cpla::cert_gen(&self.master.msk, &keys.pk);
        User { keys, cert }
    }

    fn attest(&self, u: &User, message: &[u8]) -> Option<Attestation> {
        cpla::auth(message, &u.keys.sk, &u.keys.pk, &u.cert, &self.master.mpk, &self.pp).ok()
    }

    fn verify(&self, message: &[u8], att: &Attestation) -> bool {
        cpla::verify(message, att, &self.master.mpk, &self.pp)
    }
}

fn rng_for(game: &str, seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(&seed.to_be_bytes(), game))
}

fn random_digest(rng: &mut ChaCha20Rng) -> Digest {
    Digest(rng.gen())
}

fn random_proof(rng: &mut ChaCha20Rng, relation: RelationId) -> Proof {
    Proof {
        relation,
        tag: rng.gen(),
    }
}

fn random_signature(rng: &mut ChaCha20Rng) -> Signature {
    let mut sig = [0u8; 64];
    rng.fill_bytes(&mut sig);
    Signature(sig)
}

fn message(prefix: &Prefix, rng: &mut ChaCha20Rng) -> Vec<u8> {
    let mut body = [0u8; 24];
    rng.fill_bytes(&mut body);
    prefix.message(&[&body])
}

fn tally(names: &[&'static str], trials: u64, mut play: impl FnMut(usize) -> bool) -> Vec<StrategyResult> {
    let mut out: Vec<StrategyResult> = names
        .iter()
        .map(|&strategy| StrategyResult {
            strategy,
            trials: 0,
            wins: 0,
        })
        .collect();
    for t in 0..trials {
        let s = (t % names.len() as u64) as usize;
        out[s].trials += 1;
        if play(s) {
            out[s].wins += 1;
        }
    }
    out
}

const LINK_STRATEGIES: [&str; 5] = [
    "reuse-key",
    "randomize-t1",
    "uncertified-key",
    "borrowed-certificate",
    "replay-other-message",
];

/// The adversary holds `q` certified keys and must output `q + 1`
/// attestations on messages sharing one prefix that all verify and are
/// pairwise unlinked.
pub fn linkability(q: u32, trials: u64, seed: u64) -> GameReport {
    assert!(q >= 1, "the adversary needs at least one certificate");
    let mut rng = rng_for("game/linkability", seed);
    let results = tally(&LINK_STRATEGIES, trials, |strategy| {
        let ch = Challenger::new(&mut rng);
        let users: Vec<User> = (0..q).map(|_| ch.enroll(&mut rng)).collect();
        let prefix = Prefix(rng.gen());
        let mut out: Vec<(Vec<u8>, Attestation)> = users
            .iter()
            .map(|u| {
                let m = message(&prefix, &mut rng);
                let a = ch.attest(u, &m).expect("certified user");
                (m, a)
            })
            .collect();
        let m = message(&prefix, &mut rng);
        let extra = match strategy {
            0 => ch.attest(&users[0], &m),
            1 => ch.attest(&users[0], &m).map(|mut a| {
                a.t1 = random_digest(&mut rng);
                a
            }),
            2 => {
                let rogue = sig_keygen(rng.gen());
                let fake_cert = Certificate {
                    subject_pk: rogue.pk,
                    sigma: random_signature(&mut rng),
                };
                let honest_try = cpla::auth(&m, &rogue.sk, &rogue.pk, &fake_cert, &ch.master.mpk, &ch.pp).ok();
                honest_try.or_else(|| {
                    Some(Attestation {
                        t1: cpla::prefix_tag(&prefix.0, &rogue.sk),
                        t2: cpla::message_tag(&m, &rogue.sk),
                        eta: random_proof(&mut rng, RelationId::Auth),
                    })
                })
            }
            3 => {
                let rogue = sig_keygen(rng.gen());
                let borrowed = users[0].cert;
                cpla::auth(&m, &rogue.sk, &rogue.pk, &borrowed, &ch.master.mpk, &ch.pp)
                    .ok()
                    .or_else(|| {
                        Some(Attestation {
                            t1: cpla::prefix_tag(&prefix.0, &rogue.sk),
                            t2: cpla::message_tag(&m, &rogue.sk),
                            eta: out[0].1.eta,
                        })
                    })
            }
            _ => {
                let mut a = out[0].1;
                a.t1 = random_digest(&mut rng);
                Some(a)
            }
        };
        let Some(extra) = extra else { return false };
        out.push((m, extra));
        let all_verify = out.iter().all(|(m, a)| ch.verify(m, a));
        let unlinked = (0..out.len()).all(|i| (i + 1..out.len()).all(|j| !cpla::link(&out[i].1, &out[j].1)));
        all_verify && unlinked
    });
    GameReport::new("linkability", seed, Some(q), results)
}

const ANON_STRATEGIES: [&str; 4] = ["random-guess", "t1-parity", "pk-hash-compare", "cross-prefix-link"];

/// Two certified users, adversary-chosen prefixes. The challenger attests
/// with user `b` on a fresh prefix; the adversary guesses `b`. Returns the
/// fraction of correct guesses.
pub fn anonymity(trials: u64, seed: u64) -> GameReport {
    let mut rng = rng_for("game/anonymity", seed);
    let ch = Challenger::new(&mut rng);
    let users = [ch.enroll(&mut rng), ch.enroll(&mut rng)];
    let results = tally(&ANON_STRATEGIES, trials, |strategy| {
        let b = rng.gen_range(0..2usize);
        let prefix = Prefix(rng.gen());
        let m = message(&prefix, &mut rng);
        let challenge = ch.attest(&users[b], &m).expect("certified user");
        let guess = match strategy {
            0 => rng.gen_range(0..2),
            1 => (challenge.t1.0[0] & 1) as usize,
            2 => {
                let score = |pk: &PublicKey| hash(&[pk.0.as_slice(), &challenge.t1.0].concat());
                usize::from(score(&users[1].keys.pk).0 < score(&users[0].keys.pk).0)
            }
            _ => {
                let other = Prefix(rng.gen());
                let probes: Vec<Attestation> = users
                    .iter()
                    .map(|u| ch.attest(u, &message(&other, &mut rng)).expect("certified user"))
                    .collect();
                match probes.iter().position(|p| cpla::link(p, &challenge)) {
                    Some(i) => i,
                    None => rng.gen_range(0..2),
                }
            }
        };
        guess == b
    });
    GameReport::new("anonymity", seed, None, results)
}

const FORGE_STRATEGIES: [&str; 6] = [
    "random-bytes",
    "replay-other-message",
    "mutate-t2",
    "uncertified-key",
    "maul-eta",
    "forged-reward-proof",
];

/// Produce something that verifies on a statement no honest party proved:
/// an attestation on a message the certified user never attested, or a
/// reward proof for a vector the policy does not output.
pub fn forgery(trials: u64, seed: u64) -> GameReport {
    let mut rng = rng_for("game/forgery", seed);
    let ch = Challenger::new(&mut rng);
    let params = ParamSet::setup(rng.gen());
    let user = ch.enroll(&mut rng);
    let results = tally(&FORGE_STRATEGIES, trials, |strategy| {
        let prefix = Prefix(rng.gen());
        let seen = message(&prefix, &mut rng);
        let seen_att = ch.attest(&user, &seen).expect("certified user");
        let target = message(&prefix, &mut rng);
        if strategy == 5 {
            return forge_reward(&params, &mut rng);
        }
        let forged = match strategy {
            0 => {
                let mut bytes = [0u8; cpla::ATTESTATION_LEN];
                rng.fill_bytes(&mut bytes);
                bytes[64] = RelationId::Auth.byte();
                Attestation::from_bytes(&bytes).expect("well-formed")
            }
            1 => seen_att,
            2 => Attestation {
                t2: cpla::message_tag(&target, &sig_keygen(rng.gen()).sk),
                ..seen_att
            },
            3 => {
                let rogue = sig_keygen(rng.gen());
                Attestation {
                    t1: cpla::prefix_tag(&prefix.0, &rogue.sk),
                    t2: cpla::message_tag(&target, &rogue.sk),
                    eta: random_proof(&mut rng, RelationId::Auth),
                }
            }
            _ => {
                let mut eta = seen_att.eta;
                eta.tag[rng.gen_range(0..32)] ^= 1 << rng.gen_range(0..8);
                Attestation { eta, ..seen_att }
            }
        };
        ch.verify(&target, &forged)
    });
    GameReport::new("forgery", seed, None, results)
}

/// Prove the honest (all-zero) reward vector for an empty task, then try to
/// pass off a paying vector with either that proof or a random one.
fn forge_reward(params: &ParamSet, rng: &mut ChaCha20Rng) -> bool {
    let enc = enc_keygen(rng.gen());
    let n = rng.gen_range(1..6usize);
    let tau = rng.gen_range(n as u64..1000);
    let honest = RewardStatement {
        epk: enc.epk,
        tau,
        policy: PolicySpec::majority(["a", "b"]),
        slots: vec![None; n],
        rewards: vec![0; n],
    };
    let w = EncWitness { esk: enc.esk.clone() }.witness(RelationId::Reward);
    let honest_proof = proof::prove(&params.reward, &honest.statement(), &w).expect("honest vector");
    let mut lie = honest.clone();
    lie.rewards[rng.gen_range(0..n)] = tau / n as u64;
    let candidate = if rng.gen() {
        honest_proof
    } else {
        random_proof(rng, RelationId::Reward)
    };
    proof::verify(&params.reward, &lie.statement(), &candidate)
}
