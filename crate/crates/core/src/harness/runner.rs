use std::collections::{BTreeMap, BTreeSet};

use crate::actors::{adversary, ActorError, Credentials, AuctionSpec, PublicSetup, QualitySpec, RequesterClient, WorkerClient};
use crate::contracts::{auction, quality, AuctionTask, QualityTask, SettleKind, Settlement};
use crate::crypto::{derive_seed, PRIMITIVES};
use crate::ledger::{Address, Ledger, MempoolPolicy, Target, TxStatus};
use crate::policy::PolicySpec;
use crate::proof::bid_payload;

use super::config::{RequesterBehavior, ScenarioConfig, TaskConfig, TaskKind, WorkerBehavior, WorkerConfig};
use super::oracle;
use super::report::{Assertion, Payout, RunReport, TaskReport};
use super::{new_ledger, root_seed, trusted_setup};

/// Outcome of one scenario run.
pub struct Run {
    pub report: RunReport,
    pub trace: String,
    /// The final chain, for inspecting what an observer could see.
    pub ledger: Ledger,
    /// Long-term credentials by identity, requester included.
    pub credentials: BTreeMap<String, Credentials>,
    /// Off-chain owner of every address an actor used.
    pub labels: BTreeMap<Address, String>,
}

struct WorkerSlot {
    cfg: WorkerConfig,
    /// One client per certificate; only sybils hold more than one.
    clients: Vec<WorkerClient>,
}

struct TaskSlot {
    cfg: TaskConfig,
    predicted: Address,
    alpha_r: Address,
    contract: Option<Address>,
    deploy_failed: bool,
    opened_at: u64,
    acted: BTreeSet<usize>,
    instructed: bool,
    forged: Option<u64>,
    self_worker: Option<WorkerClient>,
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    setup: PublicSetup,
    ledger: Ledger,
    policy: Box<dyn MempoolPolicy>,
    requester: RequesterClient,
    workers: Vec<WorkerSlot>,
    tasks: Vec<TaskSlot>,
    errors: Vec<String>,
    notes: Vec<String>,
}

/// Runs a scenario to completion. Everything, including the trace bytes, is
/// a function of the config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Run {
    let mut runner = Runner::new(cfg);
    runner.run();
    runner.finish()
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let root = root_seed(cfg.seed);
        let (mut ra, setup) = trusted_setup(&root);

        let creds = ra
            .enroll("requester", derive_seed(&root, "requester/key"))
            .expect("fresh registry");
        let requester = RequesterClient::new("requester", creds, derive_seed(&root, "requester"));

        let mut workers = Vec::new();
        for w in &cfg.workers {
            let certs = match w.behavior {
                WorkerBehavior::Sybil => w.certs.unwrap_or(1),
                _ => 1,
            };
            let clients = (0..certs)
                .map(|i| {
                    let id = if certs == 1 { w.id.clone() } else { format!("{}#{i}", w.id) };
                    let creds = ra
                        .enroll(&id, derive_seed(&root, &format!("worker/{id}/key")))
                        .expect("worker ids are unique");
                    WorkerClient::new(id.clone(), creds, derive_seed(&root, &format!("worker/{id}")))
                })
                .collect();
            workers.push(WorkerSlot { cfg: w.clone(), clients });
        }

        let genesis: Vec<(Address, u64)> = cfg
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (requester.task_address(i as u64), t.deposit()))
            .collect();
        let ledger = new_ledger(&setup, cfg.delta, genesis);

        let tasks = cfg
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let alpha_r = requester.task_address(i as u64);
                TaskSlot {
                    cfg: t.clone(),
                    predicted: Address::contract(&alpha_r, 0),
                    alpha_r,
                    contract: None,
                    deploy_failed: false,
                    opened_at: 0,
                    acted: BTreeSet::new(),
                    instructed: false,
                    forged: None,
                    self_worker: None,
                }
            })
            .collect();

        Self {
            cfg,
            setup,
            ledger,
            policy: cfg.mempool.build(),
            requester,
            workers,
            tasks,
            errors: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn record<T>(&mut self, who: &str, result: Result<T, ActorError>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("height {} {who}: {e}", self.ledger.height()));
                None
            }
        }
    }

    fn run(&mut self) {
        self.publish_all();
        self.ledger.mine_block(self.policy.as_mut());
        self.track_deploys();
        while self.ledger.height() < self.cfg.max_blocks && !self.all_resolved() {
            for i in 0..self.tasks.len() {
                self.step_task(i);
            }
            self.ledger.mine_block(self.policy.as_mut());
            self.track_deploys();
        }
    }

    /// Picks up deploys included in the block just mined.
    fn track_deploys(&mut self) {
        let block = self.ledger.blocks().last().expect("a block was just mined");
        for t in self.tasks.iter_mut().filter(|t| t.contract.is_none()) {
            let deploy = block
                .txs
                .iter()
                .zip(&block.receipts)
                .find(|(tx, _)| tx.sender == t.alpha_r && tx.target == Target::Deploy);
            if let Some((_, receipt)) = deploy {
                if receipt.status == TxStatus::Ok {
                    t.contract = Some(t.predicted);
                    t.opened_at = block.height;
                } else {
                    t.deploy_failed = true;
                }
            }
        }
    }

    fn all_resolved(&self) -> bool {
        self.tasks.iter().all(|t| match t.contract {
            Some(c) => self.ledger.contract(&c).is_some_and(|k| k.is_settled()),
            None => t.deploy_failed,
        })
    }

    fn publish_all(&mut self) {
        for i in 0..self.tasks.len() {
            let t = &self.cfg.tasks[i];
            let result = match t.kind {
                TaskKind::Majority | TaskKind::Flat => {
                    let policy = if t.kind == TaskKind::Majority {
                        PolicySpec::majority(t.answers.iter().cloned())
                    } else {
                        PolicySpec::flat(t.answers.iter().cloned())
                    };
                    let spec = QualitySpec {
                        tau: t.tau,
                        n: t.n.expect("validated"),
                        t_a: t.t_a,
                        t_i: t.t_i,
                        policy,
                    };
                    self.requester.publish(&mut self.ledger, &self.setup, &spec, t.deposit())
                }
                TaskKind::Auction => {
                    let spec = AuctionSpec {
                        tau: t.tau,
                        max_bids: t.max_bids.unwrap_or(u32::MAX),
                        k: t.k.expect("validated"),
                        t_b: t.t_b.expect("validated"),
                        t_i: t.t_i,
                        t_a: t.t_a,
                    };
                    self.requester.publish_auction(&mut self.ledger, &self.setup, &spec, t.deposit())
                }
            };
            match self.record("requester publish", result) {
                Some(addr) => debug_assert_eq!(addr, self.tasks[i].predicted),
                None => self.tasks[i].deploy_failed = true,
            }
        }
    }

    fn requester_busy(&self, alpha_r: &Address) -> bool {
        self.ledger.pending().iter().any(|p| p.tx.sender == *alpha_r)
    }

    fn police(&mut self, contract: &Address) -> usize {
        let r = self.requester.police(&mut self.ledger, &self.setup, contract);
        self.record("requester police", r).map_or(0, |v| v.len())
    }

    /// Whether a transaction sent now is sure to land before a window that
    /// opened at `entered` and lasts `window` blocks expires.
    fn in_time(&self, entered: Option<u64>, window: u64) -> bool {
        entered.is_some_and(|e| self.ledger.height() + self.cfg.delta <= e + window)
    }

    fn step_task(&mut self, i: usize) {
        let Some(contract) = self.tasks[i].contract else { return };
        if let Some(t) = self.ledger.contract_as::<QualityTask>(&contract) {
            let p = t.params();
            match t.phase() {
                quality::Phase::Collecting => {
                    if self.in_time(t.entered(quality::Phase::Collecting), p.t_a) {
                        self.workers_act(i, &contract, false);
                        self.requester_self_submit(i, &contract);
                    }
                    self.police(&contract);
                }
                quality::Phase::AwaitingInstruction => {
                    let open = self.in_time(t.entered(quality::Phase::AwaitingInstruction), p.t_i);
                    let removals = self.police(&contract);
                    if open && removals == 0 && !self.requester_busy(&self.tasks[i].alpha_r) {
                        self.requester_instruct(i, &contract);
                    }
                }
                _ => {}
            }
        } else if let Some(t) = self.ledger.contract_as::<AuctionTask>(&contract) {
            let p = t.params();
            match t.phase() {
                auction::Phase::Bidding => {
                    if self.in_time(t.entered(auction::Phase::Bidding), p.t_b) {
                        self.workers_act(i, &contract, true);
                    }
                    self.police(&contract);
                }
                auction::Phase::AwaitingSelection => {
                    let open = self.in_time(t.entered(auction::Phase::AwaitingSelection), p.t_i);
                    let removals = self.police(&contract);
                    let slot = &self.tasks[i];
                    if open
                        && removals == 0
                        && !slot.instructed
                        && slot.cfg.requester != RequesterBehavior::NoSelection
                        && !self.requester_busy(&slot.alpha_r)
                    {
                        self.tasks[i].instructed = true;
                        let r = self.requester.select(&mut self.ledger, &self.setup, &contract);
                        self.record("requester select", r);
                    }
                }
                auction::Phase::Answering => {
                    if self.in_time(t.entered(auction::Phase::Answering), p.t_a) {
                        self.winners_answer(i, &contract);
                    }
                }
                _ => {}
            }
        }
    }

    fn workers_act(&mut self, task: usize, contract: &Address, auction: bool) {
        let height = self.ledger.height();
        let order: Vec<usize> = (0..self.workers.len())
            .filter(|&w| self.workers[w].cfg.behavior != WorkerBehavior::CopyFrontrun)
            .chain((0..self.workers.len()).filter(|&w| self.workers[w].cfg.behavior == WorkerBehavior::CopyFrontrun))
            .collect();
        for w in order {
            let cfg = self.workers[w].cfg.clone();
            if !cfg.works_on(task) || self.tasks[task].acted.contains(&w) || height < self.tasks[task].opened_at + cfg.delay {
                continue;
            }
            let payload = if auction {
                bid_payload(cfg.bid.unwrap_or(0))
            } else {
                cfg.answer_for(task).unwrap_or_default().as_bytes().to_vec()
            };
            let second = if auction {
                bid_payload(cfg.second_bid.or(cfg.bid).unwrap_or(0))
            } else {
                cfg.second_answer
                    .as_deref()
                    .or(cfg.answer_for(task))
                    .unwrap_or_default()
                    .as_bytes()
                    .to_vec()
            };
            let who = format!("worker {}", cfg.id);
            let (ledger, setup) = (&mut self.ledger, &self.setup);
            let mut acted = true;
            let result: Result<(), ActorError> = match cfg.behavior {
                WorkerBehavior::Honest => self.workers[w].clients[0]
                    .submit_from(ledger, setup, contract, 0, &payload)
                    .map(drop),
                WorkerBehavior::DoubleSubmit => {
                    adversary::double_submit(&mut self.workers[w].clients[0], ledger, setup, contract, [&payload, &second])
                        .map(drop)
                }
                WorkerBehavior::Garbage => {
                    adversary::garbage_submit(&mut self.workers[w].clients[0], ledger, setup, contract).map(drop)
                }
                WorkerBehavior::Sybil => {
                    adversary::sybil_flood(&mut self.workers[w].clients, ledger, setup, contract, &payload).map(drop)
                }
                WorkerBehavior::Silent => Ok(()),
                WorkerBehavior::CopyFrontrun => {
                    let victims: Option<BTreeSet<Address>> = cfg.target.as_ref().map(|target| {
                        let v = self.workers.iter_mut().find(|s| s.cfg.id == *target).expect("validated");
                        v.clients.iter_mut().map(|c| c.address(contract, 0)).collect()
                    });
                    let (ledger, setup) = (&mut self.ledger, &self.setup);
                    let copier = &mut self.workers[w].clients[0];
                    match adversary::copy_ciphertext_frontrun(copier, ledger, setup, contract, victims.as_ref()) {
                        Ok(seqs) => {
                            acted = !seqs.is_empty();
                            if acted {
                                self.notes.push(format!("copier {} copied {} ciphertext(s)", cfg.id, seqs.len()));
                            }
                            Ok(())
                        }
                        Err(e) => Err(e),
                    }
                }
            };
            self.record(&who, result);
            if acted {
                self.tasks[task].acted.insert(w);
            }
        }
    }

    fn requester_self_submit(&mut self, task: usize, contract: &Address) {
        let slot = &self.tasks[task];
        if slot.cfg.requester != RequesterBehavior::SelfSubmit || slot.self_worker.is_some() {
            return;
        }
        let answer = slot
            .cfg
            .self_answer
            .clone()
            .or_else(|| slot.cfg.answers.first().cloned())
            .unwrap_or_default();
        let r = adversary::requester_self_submit(&self.requester, &mut self.ledger, &self.setup, contract, &answer);
        if let Some((me, _)) = self.record("requester self-submit", r) {
            self.tasks[task].self_worker = Some(me);
        }
    }

    fn requester_instruct(&mut self, task: usize, contract: &Address) {
        let behavior = self.tasks[task].cfg.requester;
        if self.tasks[task].instructed || behavior == RequesterBehavior::Withhold {
            return;
        }
        if behavior == RequesterBehavior::FalseReport && self.tasks[task].forged.is_none() {
            let honest = self.requester.honest_rewards(&self.ledger, contract);
            let Some(honest) = self.record("requester rewards", honest) else { return };
            let rewards = self.tasks[task].cfg.false_rewards.clone().unwrap_or_else(|| shortchange(&honest));
            let r = adversary::false_report(&mut self.requester, &mut self.ledger, &self.setup, contract, rewards);
            if let Some((refusal, seq)) = self.record("requester false report", r) {
                if let Some(e) = refusal {
                    self.notes.push(format!("prover refused false report: {e}"));
                }
                self.tasks[task].forged = Some(seq);
            }
            return;
        }
        self.tasks[task].instructed = true;
        let r = self.requester.settle(&mut self.ledger, &self.setup, contract);
        self.record("requester settle", r);
    }

    fn winners_answer(&mut self, task: usize, contract: &Address) {
        let winners: Vec<Address> = self
            .ledger
            .contract_as::<AuctionTask>(contract)
            .map(|t| t.winners().iter().filter(|w| w.answer.is_none()).map(|w| w.bidder).collect())
            .unwrap_or_default();
        let answered: BTreeSet<Address> = self
            .ledger
            .pending()
            .iter()
            .filter(|p| p.tx.target == Target::Call(*contract))
            .map(|p| p.tx.sender)
            .collect();
        for bidder in winners {
            if answered.contains(&bidder) {
                continue;
            }
            for slot in &mut self.workers {
                let answer = slot.cfg.answer_for(task).unwrap_or("done").to_string();
                let id = slot.cfg.id.clone();
                if let Some(client) = slot.clients.iter_mut().find(|c| c.log().iter().any(|l| l.contract == *contract && l.address == bidder)) {
                    let r = client.answer_auction(&mut self.ledger, contract, &answer);
                    if let Err(e) = r {
                        self.errors.push(format!("height {} worker {id} answer: {e}", self.ledger.height()));
                    }
                    break;
                }
            }
        }
    }

    fn finish(self) -> Run {
        let mut checks = Checks::default();
        let labels = self.address_labels();
        let mut task_reports = Vec::new();
        for (i, slot) in self.tasks.iter().enumerate() {
            task_reports.push(self.check_task(i, slot, &labels, &mut checks));
        }
        self.check_global(&mut checks);

        let report = RunReport {
            scenario: self.cfg.name().to_string(),
            seed: self.cfg.seed,
            mempool: self.cfg.mempool.to_string(),
            delta: self.cfg.delta,
            final_height: self.ledger.height(),
            tasks: task_reports,
            assertions: checks.0,
            conservation_checksum: self.ledger.total_balance() as i128 - self.ledger.initial_supply() as i128,
        };

        let mut trace = String::new();
        trace.push_str("#zebralancer-trace v1\n");
        trace.push_str(&format!("#scenario\t{}\n", report.scenario));
        trace.push_str(&format!("#seed\t{}\n", report.seed));
        trace.push_str(&format!("#primitives\t{PRIMITIVES}\n"));
        trace.push_str(&format!("#mempool\t{}\n", report.mempool));
        trace.push_str(&format!("#delta\t{}\n", report.delta));
        for line in self.ledger.trace_lines() {
            trace.push_str(line);
            trace.push('\n');
        }
        for note in &self.notes {
            trace.push_str(&format!("#note\t{note}\n"));
        }
        for e in &self.errors {
            trace.push_str(&format!("#actor-error\t{e}\n"));
        }
        for t in &report.tasks {
            for p in &t.payouts {
                trace.push_str(&format!("#payout\t{}\t{}\t{}\n", t.index, p.address, p.amount));
            }
            trace.push_str(&format!("#refund\t{}\t{}\n", t.index, t.refund));
        }
        for a in &report.assertions {
            let status = if a.passed { "PASS" } else { "FAIL" };
            trace.push_str(&format!("#assert\t{status}\t{}\t{}\n", a.name, a.detail));
        }
        let mut credentials: BTreeMap<String, Credentials> = self
            .clients()
            .into_iter()
            .map(|(c, _)| (c.identity().to_string(), c.credentials().clone()))
            .collect();
        credentials.insert(self.requester.identity().to_string(), self.requester.credentials().clone());
        Run {
            report,
            trace,
            ledger: self.ledger,
            credentials,
            labels,
        }
    }

    /// Off-chain labels for every address an actor controls.
    fn address_labels(&self) -> BTreeMap<Address, String> {
        let mut labels = BTreeMap::new();
        for slot in &self.workers {
            for c in &slot.clients {
                for (_, a) in c.addresses() {
                    labels.insert(a, c.identity().to_string());
                }
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            labels.insert(t.alpha_r, format!("requester/task{i}"));
            if let Some(me) = &t.self_worker {
                for (_, a) in me.addresses() {
                    labels.insert(a, me.identity().to_string());
                }
            }
        }
        labels
    }

    /// Every client with its config, including the requester posing as a worker.
    fn clients(&self) -> Vec<(&WorkerClient, Option<&WorkerConfig>)> {
        let mut out: Vec<_> = self
            .workers
            .iter()
            .flat_map(|s| s.clients.iter().map(move |c| (c, Some(&s.cfg))))
            .collect();
        out.extend(self.tasks.iter().filter_map(|t| t.self_worker.as_ref()).map(|c| (c, None)));
        out
    }

    /// The payload each address says it delivered to `contract`.
    fn intended_payloads(&self, contract: &Address) -> BTreeMap<Address, Option<Vec<u8>>> {
        self.clients()
            .into_iter()
            .flat_map(|(c, _)| c.log().iter())
            .filter(|l| l.contract == *contract && (l.kind == "submit" || l.kind == "bid"))
            .map(|l| (l.address, l.payload.clone()))
            .collect()
    }

    fn check_task(
        &self,
        i: usize,
        slot: &TaskSlot,
        labels: &BTreeMap<Address, String>,
        checks: &mut Checks,
    ) -> TaskReport {
        let kind = match slot.cfg.kind {
            TaskKind::Majority => "majority",
            TaskKind::Flat => "flat",
            TaskKind::Auction => "auction",
        };
        let mut report = TaskReport {
            index: i,
            kind: kind.to_string(),
            contract: slot.contract.map(|c| c.to_string()),
            deposit: slot.cfg.deposit(),
            tau: slot.cfg.tau,
            phases: Vec::new(),
            settlement: None,
            accepted: 0,
            removed: 0,
            payouts: Vec::new(),
            refund: 0,
        };

        let should_deploy = slot.cfg.deposit() >= slot.cfg.tau;
        checks.add(
            format!("task{i}/deploy"),
            should_deploy == slot.contract.is_some(),
            if slot.contract.is_some() {
                "contract deployed".to_string()
            } else {
                format!("deploy rejected, alpha_R holds {}", self.ledger.get_balance(&slot.alpha_r))
            },
        );
        let Some(contract) = slot.contract else {
            checks.add(
                format!("task{i}/deposit-returned"),
                self.ledger.get_balance(&slot.alpha_r) == slot.cfg.deposit(),
                format!("{} of {}", self.ledger.get_balance(&slot.alpha_r), slot.cfg.deposit()),
            );
            return report;
        };

        let payloads = self.intended_payloads(&contract);
        let (phases, settlement, live, removed) = if let Some(t) = self.ledger.contract_as::<QualityTask>(&contract) {
            let phases: Vec<(String, u64)> = t.phase_log().iter().map(|(p, h)| (p.name().to_string(), *h)).collect();
            self.check_quality(i, t, &payloads, checks);
            (phases, t.settlement().cloned(), t.records().to_vec(), t.removed().to_vec())
        } else {
            let t = self.ledger.contract_as::<AuctionTask>(&contract).expect("task contracts only");
            let phases: Vec<(String, u64)> = t.phase_log().iter().map(|(p, h)| (p.name().to_string(), *h)).collect();
            self.check_auction(i, t, &payloads, checks);
            (phases, t.settlement().cloned(), t.bids().to_vec(), t.removed().to_vec())
        };

        let monotone = phases.windows(2).all(|w| w[0].1 <= w[1].1);
        checks.add(format!("task{i}/phases-forward"), monotone, describe_phases(&phases));
        checks.add(
            format!("task{i}/settled"),
            settlement.is_some(),
            settlement.as_ref().map_or("never settled".into(), |s| format!("settled at {}", s.height)),
        );

        if let Some(s) = &settlement {
            let paid: u64 = s.payouts.iter().map(|(_, v)| v).sum();
            checks.add(
                format!("task{i}/contract-conservation"),
                paid + s.refund == slot.cfg.deposit() && self.ledger.get_balance(&contract) == 0,
                format!("paid {paid} + refund {} vs deposit {}", s.refund, slot.cfg.deposit()),
            );
            report.settlement = Some(settle_name(s).to_string());
            report.refund = s.refund;
            report.payouts = s
                .payouts
                .iter()
                .map(|(a, v)| Payout {
                    address: a.to_string(),
                    actor: labels.get(a).cloned(),
                    amount: *v,
                })
                .collect();
        }
        report.phases = phases;
        report.accepted = live.len() + removed.len();
        report.removed = removed.len();

        self.check_credentials(i, &contract, &live, &removed, settlement.as_ref(), checks);
        if let Some(forged) = slot.forged {
            let rejected = self.ledger.inclusion(forged).is_some_and(|inc| !inc.ok);
            checks.add(format!("task{i}/forged-instruction-rejected"), rejected, format!("tx seq {forged}"));
        }
        report
    }

    fn check_quality(
        &self,
        i: usize,
        t: &QualityTask,
        payloads: &BTreeMap<Address, Option<Vec<u8>>>,
        checks: &mut Checks,
    ) {
        let Some(s) = t.settlement() else { return };
        let p = t.params();
        let w = t.records().len();
        let expected: Vec<u64> = match s.kind {
            SettleKind::Instruction => {
                let texts: Vec<Option<String>> = t
                    .records()
                    .iter()
                    .map(|r| {
                        payloads
                            .get(&r.worker)
                            .cloned()
                            .flatten()
                            .and_then(|b| String::from_utf8(b).ok())
                    })
                    .collect();
                let mut slots: Vec<Option<&str>> = texts.iter().map(|s| s.as_deref()).collect();
                slots.resize(p.n as usize, None);
                let all = match p.policy.kind {
                    crate::policy::PolicyKind::Flat => oracle::flat_rewards(&slots, &p.policy.answer_set, p.tau),
                    _ => oracle::plurality_rewards(&slots, &p.policy.answer_set, p.tau),
                };
                all[..w].to_vec()
            }
            SettleKind::Timeout => vec![if w == 0 { 0 } else { p.tau / w as u64 }; w],
        };
        let got: Vec<u64> = s.payouts.iter().map(|(_, v)| *v).collect();
        let workers_match = s.payouts.iter().zip(t.records()).all(|((a, _), r)| *a == r.worker);
        checks.add(
            format!("task{i}/payouts-match-oracle"),
            got == expected && workers_match,
            format!("{} settlement paid {got:?}, oracle {expected:?}", settle_name(s)),
        );
    }

    fn check_auction(
        &self,
        i: usize,
        t: &AuctionTask,
        payloads: &BTreeMap<Address, Option<Vec<u8>>>,
        checks: &mut Checks,
    ) {
        if t.settlement().is_none() {
            return;
        }
        let p = t.params();
        let got: Vec<(Address, u64)> = t.winners().iter().map(|w| (w.bidder, w.payment)).collect();
        let expected: Vec<(Address, u64)> = if t.is_fallback() {
            let share = if t.bids().is_empty() { 0 } else { p.tau / t.bids().len() as u64 };
            t.bids().iter().map(|b| (b.worker, share)).collect()
        } else {
            let values: Vec<u64> = t
                .bids()
                .iter()
                .map(|b| {
                    payloads
                        .get(&b.worker)
                        .cloned()
                        .flatten()
                        .and_then(|v| v.try_into().ok())
                        .map_or(u64::MAX, u64::from_be_bytes)
                })
                .collect();
            oracle::lowest_k(&values, p.k as usize)
                .into_iter()
                .map(|(idx, v)| (t.bids()[idx].worker, v))
                .collect()
        };
        let what = if t.is_fallback() { "fallback split" } else { "lowest-k selection" };
        checks.add(
            format!("task{i}/selection-matches-oracle"),
            got == expected,
            format!("{what}: {:?} vs oracle {:?}", amounts(&got), amounts(&expected)),
        );
        let paid: Vec<(Address, u64)> = t
            .winners()
            .iter()
            .filter(|w| w.answer.is_some())
            .map(|w| (w.bidder, w.payment))
            .collect();
        let settled_paid = t.settlement().map(|s| s.payouts.clone()).unwrap_or_default();
        checks.add(
            format!("task{i}/answered-winners-paid"),
            paid == settled_paid,
            format!("{} answered winner(s)", paid.len()),
        );
    }

    /// At most one accepted submission per certificate, and the specific
    /// outcomes each adversary is supposed to be held to.
    fn check_credentials(
        &self,
        i: usize,
        contract: &Address,
        live: &[quality::Submission],
        removed: &[quality::Submission],
        settlement: Option<&Settlement>,
        checks: &mut Checks,
    ) {
        let accepted: Vec<Address> = live.iter().chain(removed).map(|s| s.worker).collect();
        let paid: BTreeMap<Address, u64> = settlement
            .map(|s| s.payouts.iter().copied().collect())
            .unwrap_or_default();
        let mut worst = 0;
        for (client, cfg) in self.clients() {
            let mine: BTreeSet<Address> = client
                .log()
                .iter()
                .filter(|l| l.contract == *contract)
                .map(|l| l.address)
                .collect();
            let count = accepted.iter().filter(|a| mine.contains(a)).count();
            worst = worst.max(count);
            let id = client.identity();
            let earned: u64 = mine.iter().filter_map(|a| paid.get(a)).sum();
            match cfg.map(|c| c.behavior) {
                Some(WorkerBehavior::DoubleSubmit) if !mine.is_empty() => {
                    let first = client.log().iter().find(|l| l.contract == *contract).map(|l| l.seq);
                    let first_bounced = first.and_then(|s| self.ledger.inclusion(s)).is_some_and(|inc| !inc.ok);
                    checks.add(
                        format!("task{i}/{id}/one-accepted"),
                        count == 1 || (count == 0 && first_bounced),
                        format!("{count} accepted"),
                    );
                }
                Some(WorkerBehavior::CopyFrontrun) if !mine.is_empty() => {
                    let live_copies = live.iter().filter(|s| mine.contains(&s.worker)).count();
                    checks.add(
                        format!("task{i}/{id}/copies-removed"),
                        live_copies == 0,
                        format!("{count} copies accepted, {live_copies} still live"),
                    );
                    checks.add(format!("task{i}/{id}/copier-paid-zero"), earned == 0, format!("paid {earned}"));
                }
                Some(WorkerBehavior::Garbage) if !mine.is_empty() => {
                    checks.add(format!("task{i}/{id}/garbage-paid-zero"), earned == 0, format!("paid {earned}"));
                }
                None if !mine.is_empty() => {
                    checks.add(format!("task{i}/requester-submission-refused"), count == 0, format!("{count} accepted"));
                }
                _ => {}
            }
        }
        checks.add(
            format!("task{i}/one-accepted-per-certificate"),
            worst <= 1,
            format!("max {worst} accepted per certificate"),
        );
    }

    fn check_global(&self, checks: &mut Checks) {
        let supply = self.ledger.initial_supply();
        let total = self.ledger.total_balance();
        checks.add("conservation", supply == total, format!("supply {supply}, final {total}"));

        let delta = self.cfg.delta;
        let late = self
            .ledger
            .inclusions()
            .iter()
            .filter(|inc| inc.included_at > inc.submitted_at + delta)
            .count();
        checks.add(
            "liveness",
            late == 0,
            format!("{} txs, {late} included after the delta bound", self.ledger.inclusions().len()),
        );

        let mut contracts_by_sender: BTreeMap<Address, BTreeSet<Address>> = BTreeMap::new();
        for b in self.ledger.blocks() {
            for tx in &b.txs {
                if let Target::Call(c) = tx.target {
                    contracts_by_sender.entry(tx.sender).or_default().insert(c);
                }
            }
        }
        let reused = contracts_by_sender.values().filter(|cs| cs.len() > 1).count();
        checks.add(
            "one-time-addresses",
            reused == 0,
            format!("{reused} address(es) used on more than one contract"),
        );

        let adversarial = self.cfg.workers.iter().any(|w| w.behavior.is_adversarial())
            || self.cfg.tasks.iter().any(|t| t.requester != RequesterBehavior::Honest || t.deposit() < t.tau);
        if !adversarial {
            let (mut failed, mut late) = (0, 0);
            for r in self.ledger.blocks().iter().flat_map(|b| &b.receipts) {
                if let TxStatus::Failed(reason) = &r.status {
                    if matches!(r.kind, "submit" | "bid") && reason.starts_with("phase is ") {
                        late += 1;
                    } else {
                        failed += 1;
                    }
                }
            }
            checks.add(
                "honest-path-clean",
                failed == 0,
                format!("{failed} failed transaction(s), {late} submission(s) past capacity"),
            );
        }
        checks.add(
            "actors-ok",
            self.errors.is_empty(),
            if self.errors.is_empty() {
                "no actor errors".to_string()
            } else {
                self.errors.join("; ")
            },
        );
    }
}

#[derive(Default)]
struct Checks(Vec<Assertion>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Assertion {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

fn settle_name(s: &Settlement) -> &'static str {
    match s.kind {
        SettleKind::Instruction => "instruction",
        SettleKind::Timeout => "timeout",
    }
}

fn describe_phases(phases: &[(String, u64)]) -> String {
    phases.iter().map(|(p, h)| format!("{p}@{h}")).collect::<Vec<_>>().join(" ")
}

fn amounts(v: &[(Address, u64)]) -> Vec<u64> {
    v.iter().map(|(_, a)| *a).collect()
}

/// The honest vector with one unit shaved off the largest reward.
fn shortchange(honest: &[u64]) -> Vec<u64> {
    let mut out = honest.to_vec();
    match out.iter().enumerate().max_by_key(|(i, v)| (**v, std::cmp::Reverse(*i))) {
        Some((i, &v)) if v > 0 => out[i] -= 1,
        _ => {
            if let Some(first) = out.first_mut() {
                *first += 1;
            }
        }
    }
    out
}
