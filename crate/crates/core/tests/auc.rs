use auc3pc_core::auc::{
    aupr, auroc_no_ties, auroc_with_ties, detect_ties, evaluate, AucResult, AucShare, Metric, RecallAxis,
};
use auc3pc_core::oracle::{floor_scaled, plain_aupr, plain_auroc_no_tie, plain_auroc_tie, PlainSample};
use auc3pc_core::primitives::SharedVec;
use auc3pc_core::random::{PairStream, StreamOwner};
use auc3pc_core::sort::{DeltaParam, ShareList};
use auc3pc_core::{run_local, Execution, Party, ProtocolTag, Result, Ring, Role};
use num_rational::BigRational;
use num_traits::ToPrimitive;

const F: u64 = 10_000;

fn dealer(seed: u64) -> PairStream {
    PairStream::new(&[4; 32], StreamOwner::Proxies, seed, ProtocolTag::Script)
}

/// Runs `f` on a shared copy of one already-sorted list of `(con, label)`.
fn on_sorted<T: Send>(
    records: &[(u64, u64)],
    seed: u64,
    f: impl Fn(&mut Party, &ShareList) -> Result<T> + Sync,
) -> [T; 3] {
    let con: Vec<u64> = records.iter().map(|r| r.0).collect();
    let label: Vec<u64> = records.iter().map(|r| r.1).collect();
    let dealt = ShareList::deal(&con, &label, &mut dealer(seed)).unwrap();
    run_local(&[seed as u8; 32], Execution::Parallel, |p| {
        let list = match p.role() {
            Role::S0 => dealt[0].clone(),
            Role::S1 => dealt[1].clone(),
            Role::S2 => ShareList::placeholder(con.len()),
        };
        f(p, &list)
    })
    .unwrap()
}

fn value(out: &[AucShare; 3]) -> u64 {
    AucResult::reconstruct(out[0], out[1]).unwrap().value
}

fn metric_on(records: &[(u64, u64)], metric: Metric, seed: u64) -> u64 {
    let out = on_sorted(records, seed, |p, l| match metric {
        Metric::Auroc => auroc_no_ties(p, l, F),
        Metric::AurocTie => {
            let t = detect_ties(p, &l.con)?;
            auroc_with_ties(p, l, &t, F)
        }
        Metric::Aupr => {
            let t = detect_ties(p, &l.con)?;
            aupr(p, l, &t, F, RecallAxis::default())
        }
    });
    value(&out)
}

fn toy() -> Vec<(u64, u64)> {
    vec![(9000, 1), (8000, 0), (7000, 1), (6000, 0)]
}

fn samples(records: &[(u64, u64)]) -> Vec<PlainSample> {
    records.iter().map(|&(c, l)| PlainSample::scaled(c, F, l == 1)).collect()
}

#[test]
fn toy_dataset() {
    assert_eq!(metric_on(&toy(), Metric::Auroc, 1), 7500);
    assert_eq!(metric_on(&toy(), Metric::AurocTie, 2), 7500);
    assert_eq!(metric_on(&toy(), Metric::Aupr, 3), 7916);
}

#[test]
fn perfect_separation() {
    let r: Vec<(u64, u64)> = (0..8).map(|k| (9000 - k * 100, (k < 3) as u64)).collect();
    assert_eq!(metric_on(&r, Metric::Auroc, 4), F);
    assert_eq!(metric_on(&r, Metric::AurocTie, 5), F);
}

#[test]
fn all_positive_aupr() {
    let r: Vec<(u64, u64)> = (0..6).map(|k| (9000 - k * 100, 1)).collect();
    assert_eq!(metric_on(&r, Metric::Aupr, 6), F);
}

#[test]
fn extreme_ties() {
    let first: Vec<(u64, u64)> = (0..10).map(|k| (5000, (k < 5) as u64)).collect();
    let last: Vec<(u64, u64)> = (0..10).map(|k| (5000, (k >= 5) as u64)).collect();
    assert_eq!(metric_on(&first, Metric::Auroc, 7), F);
    assert_eq!(metric_on(&last, Metric::Auroc, 8), 0);
    assert_eq!(metric_on(&first, Metric::AurocTie, 9), 5000);
    assert_eq!(metric_on(&last, Metric::AurocTie, 10), 5000);
}

#[test]
fn tie_marks() {
    let marks = |cons: &[u64], seed| {
        let r: Vec<(u64, u64)> = cons.iter().map(|&c| (c, 0)).collect();
        let out = on_sorted(&r, seed, |p, l| detect_ties(p, &l.con));
        SharedVec::from_outputs(&out).reconstruct(Ring::L)
    };
    assert_eq!(marks(&[9000, 9000, 8000], 11), vec![0, 1, 1]);
    assert_eq!(marks(&[5], 12), vec![1]);
    assert_eq!(marks(&[9, 8, 7, 6, 5], 13), vec![1; 5]);
    let mut d = dealer(14);
    for case in 0..200 {
        let m = 1 + d.next_below(40) as usize;
        let mut cons: Vec<u64> = (0..m).map(|_| d.next_below(8)).collect();
        cons.sort_unstable_by(|a, b| b.cmp(a));
        let expected: Vec<u64> = (0..m)
            .map(|j| (j + 1 == m || cons[j] != cons[j + 1]) as u64)
            .collect();
        assert_eq!(marks(&cons, 100 + case), expected);
    }
}

#[test]
fn tie_marks_message_length_hides_nothing_but_m() {
    let lens = |cons: &[u64], seed| {
        let r: Vec<(u64, u64)> = cons.iter().map(|&c| (c, 0)).collect();
        on_sorted(&r, seed, |p, l| {
            detect_ties(p, &l.con)?;
            Ok(p.transcript().bytes_for(ProtocolTag::DetectTies))
        })
    };
    let a = lens(&[4, 4, 4, 4, 4, 4, 4, 4], 21);
    let b = lens(&[8, 7, 6, 5, 4, 3, 2, 1], 21);
    assert_eq!(a, b);
}

fn random_dataset(d: &mut PairStream, m: usize) -> Vec<(u64, u64)> {
    let mut r: Vec<(u64, u64)> = Vec::with_capacity(m);
    while r.len() < m {
        let c = d.next_below(F + 1);
        let run = 1 + d.next_below(4) as usize;
        for _ in 0..run.min(m - r.len()) {
            r.push((c, d.next_bit() as u64));
        }
    }
    r.sort_by(|a, b| b.0.cmp(&a.0));
    r
}

fn ulps(v: u64, exact: &BigRational) -> f64 {
    (v as f64 - (exact * BigRational::from_integer(F.into())).to_f64().unwrap()).abs()
}

#[test]
fn matches_oracles_on_random_data() {
    let mut d = dealer(30);
    for case in 0..20u64 {
        let m = 2 + d.next_below(60) as usize;
        let r = random_dataset(&mut d, m);
        let s = samples(&r);
        if let Ok(exact) = plain_auroc_tie(&s) {
            let got = metric_on(&r, Metric::AurocTie, 200 + case);
            assert!(ulps(got, &exact) <= 1.0, "auroc-tie {got} vs {exact}");
        }
        if let Ok(exact) = plain_aupr(&s) {
            let got = metric_on(&r, Metric::Aupr, 300 + case);
            assert!(ulps(got, &exact) <= 10.0, "aupr {got} vs {exact}");
        }
        let mut distinct = r.clone();
        distinct.dedup_by_key(|x| x.0);
        if let Ok(exact) = plain_auroc_no_tie(&samples(&distinct)) {
            let got = metric_on(&distinct, Metric::Auroc, 400 + case);
            assert_eq!(got, floor_scaled(&exact, F));
            assert_eq!(metric_on(&distinct, Metric::AurocTie, 500 + case), got);
        }
    }
}

#[test]
fn permuting_within_ties_changes_nothing() {
    let r = vec![(9000, 1), (7000, 0), (7000, 1), (7000, 0), (5000, 1), (5000, 0)];
    let mut swapped = r.clone();
    swapped.swap(1, 2);
    swapped.swap(4, 5);
    for metric in [Metric::AurocTie, Metric::Aupr] {
        assert_eq!(metric_on(&r, metric, 40), metric_on(&swapped, metric, 41));
    }
}

#[test]
fn rank_axis_variant_runs() {
    let out = on_sorted(&toy(), 50, |p, l| {
        let t = detect_ties(p, &l.con)?;
        aupr(p, l, &t, F, RecallAxis::Rank)
    });
    // the rank axis does not measure recall, so only determinism is checked
    let again = on_sorted(&toy(), 50, |p, l| {
        let t = detect_ties(p, &l.con)?;
        aupr(p, l, &t, F, RecallAxis::Rank)
    });
    assert_eq!(value(&out), value(&again));
}

#[test]
fn evaluate_over_several_owners() {
    let lists = [vec![(9000u64, 1u64), (7000, 1)], vec![(8000, 0), (6000, 0)]];
    let mut d = dealer(60);
    let dealt: Vec<[ShareList; 2]> = lists
        .iter()
        .map(|l| {
            let c: Vec<u64> = l.iter().map(|x| x.0).collect();
            let b: Vec<u64> = l.iter().map(|x| x.1).collect();
            ShareList::deal(&c, &b, &mut d).unwrap()
        })
        .collect();
    for (metric, expected) in [(Metric::Auroc, 7500), (Metric::AurocTie, 7500), (Metric::Aupr, 7916)] {
        let out = run_local(&[61; 32], Execution::Parallel, |p| {
            let views = dealt
                .iter()
                .map(|pair| match p.role() {
                    Role::S2 => ShareList::placeholder(pair[0].len()),
                    r => pair[r.index()].clone(),
                })
                .collect();
            evaluate(p, views, metric, DeltaParam::new(1)?, F, None)
        })
        .unwrap();
        assert_eq!(value(&out), expected, "{metric}");
    }
}
