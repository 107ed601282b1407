//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use zebralancer::contracts::{AuctionTask, QualityTask};
use zebralancer::harness::config::ScenarioConfig;
use zebralancer::harness::{games, run_scenario, Run};
use zebralancer::ledger::{Address, TxStatus};

type Outcome = Result<String, String>;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenario_dir().join(format!("{name}.toml"))).expect("bundled scenario parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn contract_of(run: &Run, task: usize) -> Result<Address, String> {
    let hex = run.report.tasks[task].contract.as_deref().ok_or("task never deployed")?;
    run.ledger
        .contract_addresses()
        .find(|a| a.to_string() == hex)
        .copied()
        .ok_or_else(|| format!("no contract at {hex}"))
}

fn assertion_passed(run: &Run, name: &str) -> Result<(), String> {
    match run.report.assertion(name) {
        Some(a) if a.passed => Ok(()),
        Some(a) => Err(format!("{}: {name} failed ({})", run.report.scenario, a.detail)),
        None => Err(format!("{}: no assertion {name}", run.report.scenario)),
    }
}

/// Payout per actor label for task 0.
fn paid_by_actor(run: &Run) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for p in &run.report.tasks[0].payouts {
        *out.entry(p.actor.clone().unwrap_or_default()).or_default() += p.amount;
    }
    out
}

/// Plurality reward for every worker, from the answers in the config alone.
fn plurality_by_worker(cfg: &ScenarioConfig, answers: &BTreeMap<String, String>) -> BTreeMap<String, u64> {
    let t = &cfg.tasks[0];
    let n = t.n.unwrap() as u64;
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for a in answers.values().filter(|a| t.answers.contains(a)) {
        *counts.entry(a).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    answers
        .iter()
        .map(|(w, a)| {
            let r = if counts.get(a.as_str()) == Some(&top) { t.tau / n } else { 0 };
            (w.clone(), r)
        })
        .collect()
}

fn config_answers(cfg: &ScenarioConfig) -> BTreeMap<String, String> {
    cfg.workers
        .iter()
        .filter_map(|w| w.answer_for(0).map(|a| (w.id.clone(), a.to_string())))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for n in [3, 5, 7, 9, 11] {
        let cfg = load(&format!("majority_n{n}_honest"));
        let run = run_scenario(&cfg);
        let task = &run.report.tasks[0];
        ensure(task.settlement.as_deref() == Some("instruction"), || {
            format!("n={n}: settled by {:?}", task.settlement)
        })?;
        let expected = plurality_by_worker(&cfg, &config_answers(&cfg));
        let got = paid_by_actor(&run);
        ensure(got == expected, || format!("n={n}: paid {got:?}, oracle {expected:?}"))?;
        let paid: u64 = got.values().sum();
        ensure(paid + task.refund == task.deposit, || format!("n={n}: {paid} + {} != {}", task.refund, task.deposit))?;
        ensure(run.report.conservation_checksum == 0, || format!("n={n}: checksum nonzero"))?;
        ensure(run.report.passed(), || format!("n={n}: {:?}", run.report.failures().collect::<Vec<_>>()))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("five honest tasks match the plurality oracle exactly in {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    for q in 1..=3 {
        let r = games::linkability(q, 1000, 2024 + q as u64);
        ensure(r.trials == 1000 && r.wins == 0, || format!("linkability q={q}: {} wins", r.wins))?;
    }
    parts.push("linkability 0/1000 for q=1,2,3".to_string());
    let f = games::forgery(1000, 2024);
    ensure(f.trials == 1000 && f.wins == 0, || format!("forgery: {} wins", f.wins))?;
    parts.push("forgery 0/1000".to_string());
    let a = games::anonymity(40_000, 2024);
    for s in &a.strategies {
        let rate = s.wins as f64 / s.trials as f64;
        ensure(s.trials >= 10_000 && (0.45..=0.55).contains(&rate), || {
            format!("anonymity {}: {rate:.4} over {}", s.strategy, s.trials)
        })?;
        parts.push(format!("{} {rate:.4}", s.strategy));
    }
    Ok(parts.join(", "))
}

fn criterion_3() -> Outcome {
    let answers = ["cat", "dog", "bird"];
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut underpaid = 0;
    let mut forged_accepted = 0;
    for run_no in 0..100 {
        let mut cfg = load("false_report");
        cfg.seed = rng.gen_range(0..i64::MAX as u64);
        let n = rng.gen_range(2..7u32);
        cfg.tasks[0].n = Some(n);
        cfg.tasks[0].tau = 10 * n as u64 + rng.gen_range(0..10);
        let template = cfg.workers[0].clone();
        cfg.workers = (0..n)
            .map(|i| {
                let mut w = template.clone();
                w.id = format!("w{i}");
                w.answer = Some(answers[rng.gen_range(0..3)].to_string());
                w
            })
            .collect();
        cfg.name = Some(format!("false_report_{run_no}"));
        let run = run_scenario(&cfg);
        let expected = plurality_by_worker(&cfg, &config_answers(&cfg));
        let got = paid_by_actor(&run);
        if run.report.tasks[0].settlement.is_none() || expected.iter().any(|(w, r)| got.get(w).copied().unwrap_or(0) < *r) {
            underpaid += 1;
        }
        if !run.report.assertion("task0/forged-instruction-rejected").is_some_and(|a| a.passed) {
            forged_accepted += 1;
        }
    }
    ensure(underpaid == 0 && forged_accepted == 0, || {
        format!("{underpaid} under-paid settlements, {forged_accepted} forged instructions not rejected")
    })?;

    let ds = run_scenario(&load("double_submit"));
    let one = ds.report.assertion("task0/cheat/one-accepted").ok_or("double_submit: no assertion")?;
    ensure(one.passed && one.detail == "1 accepted", || format!("double_submit: {}", one.detail))?;
    assertion_passed(&ds, "task0/one-accepted-per-certificate")?;

    let cf_cfg = load("copy_frontrun");
    ensure(cf_cfg.mempool.to_string() == "reverse", || "copy_frontrun must reorder".into())?;
    let cf = run_scenario(&cf_cfg);
    ensure(cf.report.tasks[0].removed >= 1, || "copy_frontrun: no copy was ever accepted".into())?;
    let got = paid_by_actor(&cf);
    ensure(got.get("copier").copied().unwrap_or(0) == 0, || format!("copier paid {got:?}"))?;
    let honest: BTreeMap<String, String> = config_answers(&cf_cfg);
    let n = cf_cfg.tasks[0].n.unwrap() as usize;
    let mut padded = honest.clone();
    for i in honest.len()..n {
        padded.insert(format!("<empty {i}>"), String::new());
    }
    let expected: BTreeMap<String, u64> =
        plurality_by_worker(&cf_cfg, &padded).into_iter().filter(|(w, _)| honest.contains_key(w)).collect();
    let honest_got: BTreeMap<String, u64> = expected.keys().map(|w| (w.clone(), got.get(w).copied().unwrap_or(0))).collect();
    ensure(honest_got == expected, || format!("honest paid {honest_got:?}, oracle {expected:?}"))?;
    Ok(format!(
        "100 false reports, 0 under-payments; double submit kept 1 record; copier paid 0, honest {honest_got:?}"
    ))
}

fn criterion_4() -> Outcome {
    let cfg = load("withhold_instruction");
    let run = run_scenario(&cfg);
    let t = &run.report.tasks[0];
    ensure(t.settlement.as_deref() == Some("timeout"), || format!("settled by {:?}", t.settlement))?;
    let w = t.payouts.len() as u64;
    ensure(w > 0, || "no workers".into())?;
    let share = cfg.tasks[0].tau / w;
    ensure(t.payouts.iter().all(|p| p.amount == share), || format!("payouts {:?}", t.payouts))?;
    let total: u64 = t.payouts.iter().map(|p| p.amount).sum::<u64>() + t.refund;
    ensure(total == cfg.tasks[0].tau && t.refund == cfg.tasks[0].tau - share * w, || {
        format!("outflows {total}, refund {}", t.refund)
    })?;
    ensure(run.report.conservation_checksum == 0, || "checksum nonzero".into())?;
    Ok(format!("{w} workers at {share}, refund {}, outflows {total}", t.refund))
}

fn criterion_5() -> Outcome {
    let cfg = load("anonymity_two_tasks");
    ensure(cfg.workers.len() == 2 && cfg.tasks.len() == 2, || "scenario shape".into())?;
    let run = run_scenario(&cfg);
    assertion_passed(&run, "task0/settled")?;
    assertion_passed(&run, "task1/settled")?;

    let ledger_bytes: Vec<Vec<u8>> = run.ledger.on_ledger_bytes().collect();
    let mut secrets: Vec<(String, Vec<u8>)> = Vec::new();
    for (id, c) in &run.credentials {
        secrets.push((format!("{id} pk"), c.keys.pk.0.to_vec()));
        secrets.push((format!("{id} sk"), c.keys.sk.0.to_vec()));
        secrets.push((format!("{id} cert"), c.cert.sigma.0.to_vec()));
    }
    let mut windows = 0usize;
    for (what, bytes) in &secrets {
        for w in bytes.windows(8) {
            windows += 1;
            if ledger_bytes.iter().any(|b| b.windows(8).any(|x| x == w)) {
                return Err(format!("8 bytes of {what} appear on the ledger"));
            }
        }
    }

    let contracts = [contract_of(&run, 0)?, contract_of(&run, 1)?];
    for worker in ["w1", "w2"] {
        let tags: Vec<_> = contracts
            .iter()
            .map(|c| {
                let t = run.ledger.contract_as::<QualityTask>(c).unwrap();
                t.records()
                    .iter()
                    .chain(t.removed())
                    .find(|s| run.labels.get(&s.worker).map(String::as_str) == Some(worker))
                    .map(|s| s.attestation.t1)
            })
            .collect();
        let [Some(a), Some(b)] = tags[..] else {
            return Err(format!("{worker} missing from a task"));
        };
        ensure(a != b, || format!("{worker} has the same t1 on both tasks"))?;
    }
    Ok(format!(
        "{} on-ledger blobs, {windows} secret windows, none found; t1 differs across tasks for both workers",
        ledger_bytes.len()
    ))
}

fn criterion_6() -> Outcome {
    let cfg = load("auction_lowest_k");
    let run = run_scenario(&cfg);
    assertion_passed(&run, "task0/selection-matches-oracle")?;
    let mut bids: Vec<(u64, String)> = cfg.workers.iter().map(|w| (w.bid.unwrap(), w.id.clone())).collect();
    bids.sort();
    let k = cfg.tasks[0].k.unwrap() as usize;
    let expected: BTreeMap<String, u64> = bids.iter().take(k).map(|(b, id)| (id.clone(), *b)).collect();
    let got = paid_by_actor(&run);
    ensure(got == expected, || format!("paid {got:?}, sort oracle {expected:?}"))?;
    let refund = run.report.tasks[0].refund;
    ensure(refund == cfg.tasks[0].tau - expected.values().sum::<u64>(), || format!("refund {refund}"))?;

    let dup = run_scenario(&load("auction_duplicate_bid"));
    assertion_passed(&dup, "task0/cheat/one-accepted")?;
    let linkage_rejections = dup
        .ledger
        .blocks()
        .iter()
        .flat_map(|b| &b.receipts)
        .filter(|r| r.kind == "bid" && r.status == TxStatus::Failed("linked to earlier submission".into()))
        .count();
    ensure(linkage_rejections == 1, || format!("{linkage_rejections} linkage rejections"))?;

    let ns_cfg = load("auction_no_selection");
    let ns = run_scenario(&ns_cfg);
    let contract = contract_of(&ns, 0)?;
    let t = ns.ledger.contract_as::<AuctionTask>(&contract).unwrap();
    ensure(t.is_fallback(), || "no fallback".into())?;
    let share = ns_cfg.tasks[0].tau / t.bids().len() as u64;
    let s = t.settlement().unwrap();
    ensure(s.payouts.len() == ns_cfg.workers.len() && s.payouts.iter().all(|p| p.1 == share), || {
        format!("fallback paid {:?}", s.payouts)
    })?;
    let out: u64 = s.payouts.iter().map(|p| p.1).sum::<u64>() + s.refund;
    ensure(out == ns_cfg.tasks[0].tau && ns.report.conservation_checksum == 0, || format!("outflows {out}"))?;
    Ok(format!("lowest-{k} paid {got:?}; duplicate bid rejected by linkage; fallback {share} each"))
}

fn criterion_7() -> Outcome {
    let mut names: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    for path in &names {
        let cfg = ScenarioConfig::load(path).map_err(|e| e.to_string())?;
        let a = run_scenario(&cfg).trace;
        let b = run_scenario(&cfg).trace;
        ensure(a == b, || format!("{} differs between runs", path.display()))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_zebralancer");
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("trace{i}.tsv"));
        let status = Command::new(bin)
            .arg("run")
            .arg(scenario_dir().join("copy_frontrun.toml"))
            .arg("--trace")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stdout).into_owned())?;
        files.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1] && !files[0].is_empty(), || "CLI trace files differ".into())?;
    Ok(format!("{} bundled scenarios re-ran byte-identically; CLI trace files match", names.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("honest runs match the plurality oracle", criterion_1),
        ("security games", criterion_2),
        ("false report, double submit, copy front-run", criterion_3),
        ("instruction timeout split", criterion_4),
        ("structural anonymity", criterion_5),
        ("reverse auction", criterion_6),
        ("deterministic traces", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
