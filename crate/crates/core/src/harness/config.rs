//! Scenario files.
//!
//! A scenario is TOML: top-level keys, then one `[[task]]` table per task and
//! one `[[worker]]` table per worker. Unknown keys are errors.
//!
//! ```toml
//! name = "majority_n3_honest"   # optional, defaults to the file stem
//! seed = 7                      # fixes every key and every coin (0 to 2^63 - 1)
//! delta = 1                     # synchrony bound in blocks (default 1)
//! mempool = "fifo"              # fifo | reverse | procrastinate
//! max_blocks = 200              # stop even if something never settles
//!
//! [[task]]
//! kind = "majority"             # majority | flat | auction
//! tau = 30
//! n = 3                         # answers requested (quality tasks)
//! answers = ["yes", "no"]       # declared answer set (quality tasks)
//! t_a = 4                       # answer window, blocks
//! t_i = 4                       # instruction or selection window, blocks
//! t_b = 4                       # bidding window (auction)
//! k = 2                         # winners (auction)
//! max_bids = 4                  # bidding closes early at this many bids (auction)
//! deposit = 30                  # defaults to tau
//! requester = "honest"          # honest | withhold | false_report | self_submit | no_selection
//! false_rewards = [0, 0, 0]     # vector tried by false_report (default: honest minus one)
//! self_answer = "yes"           # what self_submit answers
//!
//! [[worker]]
//! id = "w1"
//! behavior = "honest"           # honest | double_submit | copy_frontrun | garbage | sybil | silent
//! tasks = [0]                   # task indices to work on (default: all)
//! answer = "yes"                # answer for every task, or per task:
//! answers = ["yes", "no"]       # aligned with `tasks`
//! second_answer = "no"          # double_submit
//! bid = 5                       # auction bid
//! second_bid = 4                # double_submit on an auction
//! target = "w2"                 # copy_frontrun victim (default: everyone)
//! certs = 3                     # sybil: certificates held
//! delay = 0                     # blocks to wait after the task opens
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer};
use thiserror::Error;

use crate::ledger::PolicyChoice;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Majority,
    Flat,
    Auction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequesterBehavior {
    #[default]
    Honest,
    Withhold,
    FalseReport,
    SelfSubmit,
    NoSelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerBehavior {
    #[default]
    Honest,
    DoubleSubmit,
    CopyFrontrun,
    Garbage,
    Sybil,
    Silent,
}

impl WorkerBehavior {
    pub fn is_adversarial(self) -> bool {
        !matches!(self, WorkerBehavior::Honest | WorkerBehavior::Silent)
    }
}

impl fmt::Display for WorkerBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkerBehavior::Honest => "honest",
            WorkerBehavior::DoubleSubmit => "double_submit",
            WorkerBehavior::CopyFrontrun => "copy_frontrun",
            WorkerBehavior::Garbage => "garbage",
            WorkerBehavior::Sybil => "sybil",
            WorkerBehavior::Silent => "silent",
        })
    }
}

fn policy_choice<'de, D: Deserializer<'de>>(d: D) -> Result<PolicyChoice, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn one() -> u64 {
    1
}

fn default_max_blocks() -> u64 {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub seed: u64,
    #[serde(default = "one")]
    pub delta: u64,
    #[serde(default, deserialize_with = "policy_choice")]
    pub mempool: PolicyChoice,
    #[serde(default = "default_max_blocks")]
    pub max_blocks: u64,
    #[serde(rename = "task")]
    pub tasks: Vec<TaskConfig>,
    #[serde(rename = "worker", default)]
    pub workers: Vec<WorkerConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    pub tau: u64,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub answers: Vec<String>,
    pub t_a: u64,
    pub t_i: u64,
    #[serde(default)]
    pub t_b: Option<u64>,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub max_bids: Option<u32>,
    #[serde(default)]
    pub deposit: Option<u64>,
    #[serde(default)]
    pub requester: RequesterBehavior,
    #[serde(default)]
    pub false_rewards: Option<Vec<u64>>,
    #[serde(default)]
    pub self_answer: Option<String>,
}

impl TaskConfig {
    pub fn deposit(&self) -> u64 {
        self.deposit.unwrap_or(self.tau)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerConfig {
    pub id: String,
    #[serde(default)]
    pub behavior: WorkerBehavior,
    #[serde(default)]
    pub tasks: Option<Vec<usize>>,
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default)]
    pub answers: Option<Vec<String>>,
    #[serde(default)]
    pub second_answer: Option<String>,
    #[serde(default)]
    pub bid: Option<u64>,
    #[serde(default)]
    pub second_bid: Option<u64>,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub certs: Option<u32>,
    #[serde(default)]
    pub delay: u64,
}

impl WorkerConfig {
    pub fn works_on(&self, task: usize) -> bool {
        self.tasks.as_ref().is_none_or(|t| t.contains(&task))
    }

    /// The answer this worker gives on `task`.
    pub fn answer_for(&self, task: usize) -> Option<&str> {
        if let (Some(tasks), Some(answers)) = (&self.tasks, &self.answers) {
            let pos = tasks.iter().position(|t| *t == task)?;
            return answers.get(pos).map(String::as_str);
        }
        if let Some(answers) = &self.answers {
            return answers.get(task).map(String::as_str);
        }
        self.answer.as_deref()
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.delta == 0 {
            return Err(invalid("delta", "must be at least 1"));
        }
        if self.tasks.is_empty() {
            return Err(invalid("task", "at least one [[task]] is required"));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            let f = |name: &str| format!("task[{i}].{name}");
            if t.t_a == 0 {
                return Err(invalid(f("t_a"), "must be positive"));
            }
            if t.t_i == 0 {
                return Err(invalid(f("t_i"), "must be positive"));
            }
            match t.kind {
                TaskKind::Majority | TaskKind::Flat => {
                    match t.n {
                        None => return Err(invalid(f("n"), "required for quality tasks")),
                        Some(0) => return Err(invalid(f("n"), "must be at least 1")),
                        Some(_) => {}
                    }
                    if t.answers.is_empty() {
                        return Err(invalid(f("answers"), "declare the answer set"));
                    }
                    if t.requester == RequesterBehavior::NoSelection {
                        return Err(invalid(f("requester"), "no_selection applies to auctions"));
                    }
                }
                TaskKind::Auction => {
                    if t.t_b.is_none_or(|b| b == 0) {
                        return Err(invalid(f("t_b"), "required and positive for auctions"));
                    }
                    if t.k.is_none_or(|k| k == 0) {
                        return Err(invalid(f("k"), "required and at least 1 for auctions"));
                    }
                    if t.max_bids == Some(0) {
                        return Err(invalid(f("max_bids"), "must be at least 1"));
                    }
                    if matches!(t.requester, RequesterBehavior::FalseReport | RequesterBehavior::Withhold) {
                        return Err(invalid(f("requester"), "use no_selection for auctions"));
                    }
                }
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, w) in self.workers.iter().enumerate() {
            let f = |name: &str| format!("worker[{i}].{name}");
            if !ids.insert(w.id.as_str()) {
                return Err(invalid(f("id"), format!("duplicate id `{}`", w.id)));
            }
            for &t in w.tasks.iter().flatten() {
                if t >= self.tasks.len() {
                    return Err(invalid(f("tasks"), format!("no task {t}")));
                }
            }
            if let (Some(tasks), Some(answers)) = (&w.tasks, &w.answers) {
                if tasks.len() != answers.len() {
                    return Err(invalid(f("answers"), "must align with `tasks`"));
                }
            }
            if w.behavior == WorkerBehavior::Sybil && w.certs.is_none_or(|q| q == 0) {
                return Err(invalid(f("certs"), "sybil needs at least one certificate"));
            }
            if let Some(target) = &w.target {
                if !self.workers.iter().any(|o| o.id == *target) {
                    return Err(invalid(f("target"), format!("no worker `{target}`")));
                }
            }
            for (t, task) in self.tasks.iter().enumerate() {
                if !w.works_on(t) || w.behavior == WorkerBehavior::CopyFrontrun || w.behavior == WorkerBehavior::Silent {
                    continue;
                }
                if w.behavior == WorkerBehavior::Garbage {
                    continue;
                }
                if task.kind == TaskKind::Auction && w.bid.is_none() {
                    return Err(invalid(f("bid"), format!("task {t} is an auction")));
                }
                if task.kind != TaskKind::Auction && w.answer_for(t).is_none() {
                    return Err(invalid(f("answer"), format!("no answer for task {t}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 1

[[task]]
kind = "majority"
tau = 30
n = 3
answers = ["a", "b"]
t_a = 3
t_i = 3

[[worker]]
id = "w1"
answer = "a"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.delta, 1);
        assert_eq!(cfg.mempool, PolicyChoice::Fifo);
        assert_eq!(cfg.tasks[0].deposit(), 30);
        assert_eq!(cfg.workers[0].behavior, WorkerBehavior::Honest);
        assert_eq!(cfg.workers[0].answer_for(0), Some("a"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let broken = MINIMAL.replace("tau = 30", "tau = = 30");
        let msg = ScenarioConfig::from_toml(&broken).unwrap_err().to_string();
        assert!(msg.contains("line 6"), "{msg}");
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_field() {
        let extra = MINIMAL.replace("seed = 1", "seed = 1\nsede = 2");
        assert!(ScenarioConfig::from_toml(&extra).unwrap_err().to_string().contains("sede"));
        let zero_n = MINIMAL.replace("n = 3", "n = 0");
        assert_eq!(ScenarioConfig::from_toml(&zero_n).unwrap_err().to_string(), "task[0].n: must be at least 1");
        let bad_pool = MINIMAL.replace("seed = 1", "seed = 1\nmempool = \"lifo\"");
        assert!(ScenarioConfig::from_toml(&bad_pool).unwrap_err().to_string().contains("lifo"));
        let zero_deadline = MINIMAL.replace("t_i = 3", "t_i = 0");
        assert!(ScenarioConfig::from_toml(&zero_deadline).unwrap_err().to_string().starts_with("task[0].t_i"));
    }

    #[test]
    fn per_task_answers_follow_task_list() {
        let w = WorkerConfig {
            id: "w".into(),
            behavior: WorkerBehavior::Honest,
            tasks: Some(vec![2, 0]),
            answer: None,
            answers: Some(vec!["x".into(), "y".into()]),
            second_answer: None,
            bid: None,
            second_bid: None,
            target: None,
            certs: None,
            delay: 0,
        };
        assert_eq!(w.answer_for(2), Some("x"));
        assert_eq!(w.answer_for(0), Some("y"));
        assert_eq!(w.answer_for(1), None);
    }
}
