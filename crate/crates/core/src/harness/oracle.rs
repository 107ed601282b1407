//! Reference outcomes computed the slow, obvious way, without any of the
//! policy code. Scenario assertions compare contract payouts against these.

/// Plurality rewards over n slots. `None` is a missing answer; values
/// outside `answer_set` count as missing. Every slot holding a value that no
/// other value outnumbers gets `tau / n`.
pub fn plurality_rewards(slots: &[Option<&str>], answer_set: &[String], tau: u64) -> Vec<u64> {
    let n = slots.len();
    fn in_set<'a>(a: Option<&'a str>, set: &[String]) -> Option<&'a str> {
        a.filter(|v| set.iter().any(|s| s == v))
    }
    let valid = |a| in_set(a, answer_set);
    let count = |v: &str| slots.iter().filter(|s| valid(**s) == Some(v)).count();
    let mut rewards = vec![0; n];
    for (i, slot) in slots.iter().enumerate() {
        let Some(v) = valid(*slot) else { continue };
        let mine = count(v);
        let beaten = slots.iter().filter_map(|s| valid(*s)).any(|other| count(other) > mine);
        if !beaten {
            rewards[i] = tau / n as u64;
        }
    }
    rewards
}

/// Flat rewards: `tau / n` for every slot holding a value from the set.
pub fn flat_rewards(slots: &[Option<&str>], answer_set: &[String], tau: u64) -> Vec<u64> {
    let n = slots.len() as u64;
    slots
        .iter()
        .map(|s| match s {
            Some(v) if answer_set.iter().any(|a| a == v) => tau / n,
            _ => 0,
        })
        .collect()
}

/// Lowest-k winners as `(index, bid)`, cheapest first, earlier index on ties.
pub fn lowest_k(bids: &[u64], k: usize) -> Vec<(usize, u64)> {
    let mut taken = vec![false; bids.len()];
    let mut out = Vec::new();
    for _ in 0..k.min(bids.len()) {
        let mut best: Option<usize> = None;
        for i in 0..bids.len() {
            if !taken[i] && best.is_none_or(|b| bids[i] < bids[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("k <= len");
        taken[b] = true;
        out.push((b, bids[b]));
    }
    out
}
