//! Task contracts driven through the ledger, one transaction at a time.

mod common;

use common::{World, RICH_FUNDS};
use zebralancer::contracts::{auction, quality, AuctionTask, Call, QualityTask, SettleKind};
use zebralancer::crypto::Ciphertext;
use zebralancer::ledger::{Address, TxStatus};
use zebralancer::proof::{Proof, RelationId};

fn quality_task<'a>(w: &'a World, c: &Address) -> &'a QualityTask {
    w.ledger.contract_as::<QualityTask>(c).unwrap()
}

fn auction_task<'a>(w: &'a World, c: &Address) -> &'a AuctionTask {
    w.ledger.contract_as::<AuctionTask>(c).unwrap()
}

fn junk_proof(relation: RelationId) -> Proof {
    Proof { relation, tag: [7; 32] }
}

#[test]
fn honest_quality_task_pays_policy_rewards() {
    let mut w = World::new(1, 3, &[30]);
    let c = w.publish_quality(3, 30, 5, 5);
    for (i, a) in ["cat", "dog", "cat"].iter().enumerate() {
        w.submit(i, &c, a);
    }
    w.mine();
    assert_eq!(quality_task(&w, &c).phase(), quality::Phase::AwaitingInstruction);

    w.requester.settle(&mut w.ledger, &w.setup, &c).unwrap();
    w.mine();
    let t = quality_task(&w, &c);
    assert_eq!(t.phase(), quality::Phase::Settled);
    let s = t.settlement().unwrap();
    assert_eq!(s.kind, SettleKind::Instruction);
    assert_eq!(s.payouts.iter().map(|p| p.1).collect::<Vec<_>>(), vec![10, 0, 10]);
    assert_eq!(s.refund, 10);
    assert_eq!(w.balance_of(0, &c), 10);
    assert_eq!(w.balance_of(1, &c), 0);
    assert_eq!(w.ledger.get_balance(&c), 0);
    assert_eq!(w.ledger.get_balance(&w.requester.task_address(0)), 10);
}

#[test]
fn collecting_closes_at_n_and_late_submissions_bounce() {
    let mut w = World::new(2, 3, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    w.submit(0, &c, "cat");
    w.submit(1, &c, "dog");
    w.mine();
    w.submit(2, &c, "cat");
    w.mine();
    assert_eq!(w.last_failure(), "phase is AwaitingInstruction");
    assert_eq!(quality_task(&w, &c).records().len(), 2);
}

#[test]
fn answer_window_expires_strictly_after_deadline() {
    let mut w = World::new(3, 1, &[12]);
    let c = w.publish_quality(3, 12, 3, 2);
    let opened = quality_task(&w, &c).entered(quality::Phase::Collecting).unwrap();
    assert_eq!(opened, 1);
    w.mine_until(opened + 3);
    assert_eq!(quality_task(&w, &c).phase(), quality::Phase::Collecting);
    w.mine();
    assert_eq!(quality_task(&w, &c).phase(), quality::Phase::AwaitingInstruction);

    w.mine_until(opened + 3 + 1 + 2);
    assert_eq!(quality_task(&w, &c).phase(), quality::Phase::AwaitingInstruction);
    w.mine();
    let s = quality_task(&w, &c).settlement().unwrap().clone();
    assert_eq!(s.kind, SettleKind::Timeout);
    assert!(s.payouts.is_empty());
    assert_eq!(s.refund, 12);
}

#[test]
fn withheld_instruction_splits_budget_evenly() {
    let mut w = World::new(4, 3, &[10]);
    let c = w.publish_quality(4, 10, 2, 2);
    for i in 0..3 {
        w.submit(i, &c, "bird");
    }
    w.mine_until(10);
    let s = quality_task(&w, &c).settlement().unwrap().clone();
    assert_eq!(s.kind, SettleKind::Timeout);
    assert_eq!(s.payouts.iter().map(|p| p.1).collect::<Vec<_>>(), vec![3, 3, 3]);
    assert_eq!(s.refund, 1);
}

#[test]
fn one_credential_one_submission_even_after_removal() {
    let mut w = World::new(5, 2, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    let garbage = w.workers[0].seal_unsigned(&w.ledger, &c, b"unsigned").unwrap();
    w.workers[0].deliver(&mut w.ledger, &w.setup, &c, 0, garbage, None).unwrap();
    w.mine();
    assert_eq!(quality_task(&w, &c).records().len(), 1);

    let reports = w.requester.police(&mut w.ledger, &w.setup, &c).unwrap();
    assert_eq!(reports.len(), 1);
    w.mine();
    assert_eq!(w.last_statuses(), vec![TxStatus::Ok]);
    let t = quality_task(&w, &c);
    assert!(t.records().is_empty());
    assert_eq!(t.removed().len(), 1);

    w.workers[0].submit_from(&mut w.ledger, &w.setup, &c, 1, b"cat").unwrap();
    w.mine();
    assert_eq!(w.last_failure(), "linked to earlier submission");

    w.submit(1, &c, "cat");
    w.mine();
    assert_eq!(w.last_statuses(), vec![TxStatus::Ok]);
    assert_eq!(quality_task(&w, &c).records()[0].record, 1);
}

#[test]
fn requester_cannot_answer_own_task() {
    let mut w = World::new(6, 0, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    let mut me = w.requester.as_worker();
    me.submit(&mut w.ledger, &w.setup, &c, "cat").unwrap();
    w.mine();
    assert_eq!(w.last_failure(), "linked to requester");
}

#[test]
fn attestation_is_bound_to_sender_address() {
    let mut w = World::new(7, 1, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    w.submit(0, &c, "cat");
    let stolen = w.newest_pending_payload();
    let rich = w.rich.clone();
    w.send_raw(&rich, &c, 0, stolen);
    w.mine();
    assert_eq!(
        w.last_statuses(),
        vec![TxStatus::Ok, TxStatus::Failed("attestation does not verify".into())]
    );
}

#[test]
fn instructions_are_checked_before_any_payout() {
    let mut w = World::new(8, 2, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    w.submit(0, &c, "cat");
    w.submit(1, &c, "cat");
    w.mine();
    let alpha = w.alpha_r(0);

    let cases = [
        (vec![10], "reward vector has wrong length"),
        (vec![15, 15], "rewards exceed budget"),
        (vec![10, 10], "reward proof does not verify"),
    ];
    for (rewards, reason) in cases {
        let call = Call::Instruction {
            rewards,
            proof: junk_proof(RelationId::Reward),
        };
        w.send_raw(&alpha, &c, 0, call.encode());
        w.mine();
        assert_eq!(w.last_failure(), reason);
    }

    w.requester.settle(&mut w.ledger, &w.setup, &c).unwrap();
    let honest = w.newest_pending_payload();
    let mut skimmed = Call::decode(&honest).unwrap();
    if let Call::Instruction { rewards, .. } = &mut skimmed {
        rewards[1] = 0;
    }
    let rich = w.rich.clone();
    w.send_raw(&rich, &c, 0, honest);
    w.send_raw(&alpha, &c, 0, skimmed.encode());
    w.mine();
    assert_eq!(
        w.last_statuses(),
        vec![
            TxStatus::Ok,
            TxStatus::Failed("sender is not alpha_R".into()),
            TxStatus::Failed("not awaiting instruction".into()),
        ]
    );
    let s = quality_task(&w, &c).settlement().unwrap();
    assert_eq!(s.payouts.iter().map(|p| p.1).collect::<Vec<_>>(), vec![10, 10]);
}

#[test]
fn genuine_records_cannot_be_reported_fake() {
    let mut w = World::new(9, 1, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    w.submit(0, &c, "dog");
    w.mine();
    let alpha = w.alpha_r(0);
    let forged = Call::ReportFake {
        record: 0,
        proof: junk_proof(RelationId::Fake),
    };
    w.send_raw(&alpha, &c, 0, forged.encode());
    w.mine();
    assert_eq!(w.last_failure(), "fake proof does not verify");
    assert!(w.requester.police(&mut w.ledger, &w.setup, &c).unwrap().is_empty());

    let missing = Call::ReportFake {
        record: 9,
        proof: junk_proof(RelationId::Fake),
    };
    w.send_raw(&alpha, &c, 0, missing.encode());
    w.mine();
    assert_eq!(w.last_failure(), "no such record");
    assert_eq!(quality_task(&w, &c).records().len(), 1);
}

#[test]
fn calls_carrying_value_are_refused_and_reverted() {
    let mut w = World::new(10, 1, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    w.submit(0, &c, "cat");
    let payload = w.newest_pending_payload();
    w.mine();
    let rich = w.rich.clone();
    w.send_raw(&rich, &c, 5, payload);
    w.mine();
    assert_eq!(w.last_failure(), "calls carry no value");
    assert_eq!(w.ledger.get_balance(&Address::from_pk(&rich.pk)), RICH_FUNDS);
    assert_eq!(w.ledger.get_balance(&c), 20);
}

#[test]
fn auction_calls_rejected_by_quality_task() {
    let mut w = World::new(11, 0, &[20]);
    let c = w.publish_quality(2, 20, 5, 5);
    let rich = w.rich.clone();
    let call = Call::Answer {
        ciphertext: Ciphertext(vec![0; 60]),
    };
    w.send_raw(&rich, &c, 0, call.encode());
    w.mine();
    assert_eq!(w.last_failure(), "not a quality-task call");
}

#[test]
fn auction_pays_lowest_bids_as_bid() {
    let mut w = World::new(20, 4, &[20]);
    let c = w.publish_auction(20, 2, 10, (3, 3, 3));
    for (i, b) in [5, 7, 3, 9].into_iter().enumerate() {
        w.bid(i, &c, b);
    }
    w.mine_until(5);
    assert_eq!(auction_task(&w, &c).phase(), auction::Phase::AwaitingSelection);
    w.requester.select(&mut w.ledger, &w.setup, &c).unwrap();
    w.mine();
    let t = auction_task(&w, &c);
    assert_eq!(t.phase(), auction::Phase::Answering);
    let winners: Vec<(Address, u64)> = t.winners().iter().map(|x| (x.bidder, x.payment)).collect();
    let expected = vec![(w.workers[2].address(&c, 0), 3), (w.workers[0].address(&c, 0), 5)];
    assert_eq!(winners, expected);

    w.workers[2].answer_auction(&mut w.ledger, &c, "done").unwrap();
    w.workers[1].answer_auction(&mut w.ledger, &c, "me too").unwrap();
    w.workers[0].answer_auction(&mut w.ledger, &c, "done").unwrap();
    w.mine();
    assert_eq!(
        w.last_statuses(),
        vec![
            TxStatus::Ok,
            TxStatus::Failed("sender is not an unpaid winner".into()),
            TxStatus::Ok,
        ]
    );
    let s = auction_task(&w, &c).settlement().unwrap().clone();
    assert_eq!(s.kind, SettleKind::Instruction);
    assert_eq!(s.refund, 12);
    assert_eq!(w.balance_of(2, &c), 3);
    assert_eq!(w.balance_of(0, &c), 5);
}

#[test]
fn auction_closes_bidding_at_max_bids() {
    let mut w = World::new(21, 3, &[20]);
    let c = w.publish_auction(20, 1, 2, (10, 3, 3));
    w.bid(0, &c, 4);
    w.bid(1, &c, 6);
    w.bid(2, &c, 1);
    w.mine();
    assert_eq!(
        w.last_statuses(),
        vec![TxStatus::Ok, TxStatus::Ok, TxStatus::Failed("phase is AwaitingSelection".into())]
    );
}

#[test]
fn duplicate_bid_rejected_by_linkage() {
    let mut w = World::new(22, 1, &[20]);
    let c = w.publish_auction(20, 1, 10, (3, 3, 3));
    w.workers[0].submit_from(&mut w.ledger, &w.setup, &c, 0, &zebralancer::proof::bid_payload(9)).unwrap();
    w.workers[0].submit_from(&mut w.ledger, &w.setup, &c, 1, &zebralancer::proof::bid_payload(2)).unwrap();
    w.mine();
    assert_eq!(
        w.last_statuses(),
        vec![TxStatus::Ok, TxStatus::Failed("linked to earlier submission".into())]
    );
}

#[test]
fn selection_must_match_proven_payments() {
    let build = || {
        let mut w = World::new(23, 2, &[20]);
        let c = w.publish_auction(20, 1, 2, (3, 10, 3));
        w.bid(0, &c, 8);
        w.bid(1, &c, 6);
        w.mine();
        (w, c)
    };
    let (mut witness, c) = build();
    witness.requester.select(&mut witness.ledger, &witness.setup, &c).unwrap();
    let Call::Selection { selected, payments, proof } = Call::decode(&witness.newest_pending_payload()).unwrap() else {
        panic!("selection expected")
    };
    assert_eq!((selected.clone(), payments.clone()), (vec![1], vec![6]));

    let (mut w, c2) = build();
    assert_eq!(c, c2);
    let alpha = w.alpha_r(0);
    let doctored = [
        (vec![1], vec![12], "auction proof does not verify"),
        (vec![0], vec![6], "auction proof does not verify"),
        (vec![1, 0], vec![6], "malformed selection"),
        (vec![5], vec![6], "malformed selection"),
        (vec![1], vec![21], "payments exceed budget"),
    ];
    for (selected, payments, reason) in doctored {
        let call = Call::Selection { selected, payments, proof };
        w.send_raw(&alpha, &c, 0, call.encode());
        w.mine();
        assert_eq!(w.last_failure(), reason);
    }
    w.send_raw(&alpha, &c, 0, Call::Selection { selected, payments, proof }.encode());
    w.mine();
    assert_eq!(w.last_statuses(), vec![TxStatus::Ok]);
    assert_eq!(auction_task(&w, &c).winners()[0].payment, 6);
}

#[test]
fn empty_auction_refunds_everything() {
    let mut w = World::new(24, 0, &[20]);
    let c = w.publish_auction(20, 2, 10, (2, 2, 2));
    w.mine_until(8);
    let t = auction_task(&w, &c);
    assert_eq!(t.phase(), auction::Phase::Settled);
    assert!(t.is_fallback());
    assert_eq!(t.settlement().unwrap().refund, 20);
}

#[test]
fn unanswered_winners_are_refunded_after_answer_window() {
    let mut w = World::new(25, 3, &[30]);
    let c = w.publish_auction(30, 2, 3, (3, 3, 2));
    w.bid(0, &c, 4);
    w.bid(1, &c, 6);
    w.bid(2, &c, 9);
    w.mine();
    w.requester.select(&mut w.ledger, &w.setup, &c).unwrap();
    w.mine();
    let answering = auction_task(&w, &c).entered(auction::Phase::Answering).unwrap();
    w.workers[1].answer_auction(&mut w.ledger, &c, "late but fine").unwrap();
    w.mine_until(answering + 2);
    assert_eq!(auction_task(&w, &c).phase(), auction::Phase::Answering);
    w.mine();
    let s = auction_task(&w, &c).settlement().unwrap().clone();
    assert_eq!(s.payouts, vec![(w.workers[1].address(&c, 0), 6)]);
    assert_eq!(s.refund, 24);
}
