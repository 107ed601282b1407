use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Payout {
    pub address: String,
    /// Off-chain label of the actor behind the address, when known.
    pub actor: Option<String>,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub kind: String,
    pub contract: Option<String>,
    pub deposit: u64,
    pub tau: u64,
    /// Phases in the order entered, with the entry height.
    pub phases: Vec<(String, u64)>,
    pub settlement: Option<String>,
    pub accepted: usize,
    pub removed: usize,
    pub payouts: Vec<Payout>,
    pub refund: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub mempool: String,
    pub delta: u64,
    pub final_height: u64,
    pub tasks: Vec<TaskReport>,
    pub assertions: Vec<Assertion>,
    /// Final minus initial token supply; zero when funds are conserved.
    pub conservation_checksum: i128,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "scenario {} (seed {}, mempool {}, delta {}) ended at height {}",
            self.scenario, self.seed, self.mempool, self.delta, self.final_height
        )?;
        for t in &self.tasks {
            let phases: Vec<String> = t.phases.iter().map(|(p, h)| format!("{p}@{h}")).collect();
            writeln!(
                f,
                "task {} [{}] {} deposit={} accepted={} removed={} settlement={}",
                t.index,
                t.kind,
                t.contract.as_deref().unwrap_or("<not deployed>"),
                t.deposit,
                t.accepted,
                t.removed,
                t.settlement.as_deref().unwrap_or("-")
            )?;
            writeln!(f, "  phases: {}", phases.join(" "))?;
            for p in &t.payouts {
                writeln!(f, "  pay {:>8} -> {} ({})", p.amount, p.address, p.actor.as_deref().unwrap_or("?"))?;
            }
            writeln!(f, "  refund {}", t.refund)?;
        }
        for a in &self.assertions {
            let mark = if a.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{mark} {}: {}", a.name, a.detail)?;
        }
        write!(f, "conservation checksum {}", self.conservation_checksum)
    }
}
