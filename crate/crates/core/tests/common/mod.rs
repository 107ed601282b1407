#![allow(dead_code)]

use zebralancer::actors::{AuctionSpec, PublicSetup, QualitySpec, RequesterClient, WorkerClient};
use zebralancer::crypto::{derive_seed, sig_keygen, SigKeyPair};
use zebralancer::harness::{new_ledger, root_seed, trusted_setup};
use zebralancer::ledger::mempool::Fifo;
use zebralancer::ledger::{Address, Block, Ledger, Target, Transaction, TxStatus};
use zebralancer::policy::PolicySpec;

pub const RICH_FUNDS: u64 = 1_000;

/// A requester, some workers, and a funded outsider on a fresh ledger.
pub struct World {
    pub setup: PublicSetup,
    pub ledger: Ledger,
    pub requester: RequesterClient,
    pub workers: Vec<WorkerClient>,
    pub rich: SigKeyPair,
}

impl World {
    /// `deposits[i]` funds the requester's account for task `i`.
    pub fn new(seed: u64, workers: usize, deposits: &[u64]) -> Self {
        let root = root_seed(seed);
        let (mut ra, setup) = trusted_setup(&root);
        let requester = RequesterClient::new(
            "requester",
            ra.enroll("requester", derive_seed(&root, "r")).unwrap(),
            derive_seed(&root, "r-client"),
        );
        let workers = (0..workers)
            .map(|i| {
                let id = format!("w{i}");
                let creds = ra.enroll(&id, derive_seed(&root, &id)).unwrap();
                WorkerClient::new(id.clone(), creds, derive_seed(&root, &format!("{id}-client")))
            })
            .collect();
        let rich = sig_keygen(derive_seed(&root, "rich"));
        let mut genesis: Vec<(Address, u64)> = deposits
            .iter()
            .enumerate()
            .map(|(i, d)| (requester.task_address(i as u64), *d))
            .collect();
        genesis.push((Address::from_pk(&rich.pk), RICH_FUNDS));
        let ledger = new_ledger(&setup, 1, genesis);
        Self {
            setup,
            ledger,
            requester,
            workers,
            rich,
        }
    }

    pub fn mine(&mut self) -> &Block {
        self.ledger.mine_block(&mut Fifo)
    }

    pub fn mine_until(&mut self, height: u64) {
        while self.ledger.height() < height {
            self.mine();
        }
    }

    /// Statuses of the last block's transactions, in execution order.
    pub fn last_statuses(&self) -> Vec<TxStatus> {
        self.ledger.blocks().last().unwrap().receipts.iter().map(|r| r.status.clone()).collect()
    }

    pub fn last_failure(&self) -> String {
        match self.last_statuses().as_slice() {
            [TxStatus::Failed(reason)] => reason.clone(),
            other => panic!("expected one failed tx, got {other:?}"),
        }
    }

    pub fn publish_quality(&mut self, n: u32, tau: u64, t_a: u64, t_i: u64) -> Address {
        let spec = QualitySpec {
            tau,
            n,
            t_a,
            t_i,
            policy: PolicySpec::majority(["cat", "dog", "bird"]),
        };
        let c = self.requester.publish(&mut self.ledger, &self.setup, &spec, tau).unwrap();
        self.mine();
        assert!(self.ledger.contract(&c).is_some(), "deploy failed: {:?}", self.last_statuses());
        c
    }

    pub fn publish_auction(&mut self, tau: u64, k: u32, max_bids: u32, windows: (u64, u64, u64)) -> Address {
        let spec = AuctionSpec {
            tau,
            max_bids,
            k,
            t_b: windows.0,
            t_i: windows.1,
            t_a: windows.2,
        };
        let c = self.requester.publish_auction(&mut self.ledger, &self.setup, &spec, tau).unwrap();
        self.mine();
        assert!(self.ledger.contract(&c).is_some(), "deploy failed: {:?}", self.last_statuses());
        c
    }

    pub fn submit(&mut self, worker: usize, contract: &Address, answer: &str) -> u64 {
        self.workers[worker].submit(&mut self.ledger, &self.setup, contract, answer).unwrap()
    }

    pub fn bid(&mut self, worker: usize, contract: &Address, amount: u64) -> u64 {
        self.workers[worker].bid(&mut self.ledger, &self.setup, contract, amount).unwrap()
    }

    /// Re-sends `payload` to `contract` from `keys`.
    pub fn send_raw(&mut self, keys: &SigKeyPair, contract: &Address, value: u64, payload: Vec<u8>) -> u64 {
        let nonce = self.ledger.next_nonce(&Address::from_pk(&keys.pk));
        let tx = Transaction::signed(keys, Target::Call(*contract), value, payload, nonce);
        self.ledger.submit_tx(tx).unwrap()
    }

    /// Takes the payload of the newest pending transaction out of view
    /// without touching the mempool.
    pub fn newest_pending_payload(&self) -> Vec<u8> {
        self.ledger.pending().last().unwrap().tx.payload.clone()
    }

    pub fn alpha_r(&self, task: u64) -> SigKeyPair {
        self.requester.task_account(task)
    }

    pub fn balance_of(&mut self, worker: usize, contract: &Address) -> u64 {
        let a = self.workers[worker].address(contract, 0);
        self.ledger.get_balance(&a)
    }
}
