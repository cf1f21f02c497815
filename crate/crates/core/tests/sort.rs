use auc3pc_core::random::{PairStream, StreamOwner};
use auc3pc_core::sort::{
    merge_many, merge_pair, possible_merge_count, shuffle_step, DeltaParam, LeakageReport, ShareList,
};
use auc3pc_core::{run_local, Execution, ProtocolTag};
use num_bigint::BigUint;

fn dealer(seed: u64) -> PairStream {
    PairStream::new(&[9; 32], StreamOwner::Proxies, seed, ProtocolTag::Script)
}

/// Shares plain descending `(con, label)` lists for the proxies.
fn deal(lists: &[Vec<(u64, u64)>], d: &mut PairStream) -> Vec<[ShareList; 2]> {
    lists
        .iter()
        .map(|l| {
            let con: Vec<u64> = l.iter().map(|r| r.0).collect();
            let label: Vec<u64> = l.iter().map(|r| r.1).collect();
            ShareList::deal(&con, &label, d).unwrap()
        })
        .collect()
}

fn view(dealt: &[[ShareList; 2]], role: auc3pc_core::Role) -> Vec<ShareList> {
    dealt
        .iter()
        .map(|pair| match role.index() {
            i @ (0 | 1) => pair[i].clone(),
            _ => ShareList::placeholder(pair[0].len()),
        })
        .collect()
}

fn merged(lists: &[Vec<(u64, u64)>], delta: usize, seed: u64) -> (Vec<(u64, u64)>, LeakageReport) {
    let mut d = dealer(seed);
    let dealt = deal(lists, &mut d);
    let out = run_local(&[seed as u8; 32], Execution::Parallel, |p| {
        let mut report = LeakageReport::default();
        let l = merge_many(p, view(&dealt, p.role()), DeltaParam::new(delta)?, Some(&mut report))?;
        Ok((l, report))
    })
    .unwrap();
    assert_eq!(out[0].1, out[2].1, "S0 and S2 observe the same merge");
    let (con, label) = ShareList::reconstruct(&out[0].0, &out[1].0);
    (con.into_iter().zip(label).collect(), out[0].1.clone())
}

fn desc(mut v: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    v
}

/// Canonical form: descending confidences, labels sorted within tie runs.
fn canonical(v: &[(u64, u64)]) -> Vec<(u64, u64)> {
    desc(v.to_vec())
}

#[test]
fn shuffle_examples() {
    let mut d = dealer(1);
    let dealt = deal(&[vec![(3, 0)], vec![(9, 1)], vec![(9, 1)], vec![(3, 0)]], &mut d);
    let out = run_local(&[1; 32], Execution::Sequential, |p| {
        let v = view(&dealt, p.role());
        Ok((shuffle_step(p, &v[0], &v[1])?, shuffle_step(p, &v[2], &v[3])?))
    })
    .unwrap();
    let r = |a: &ShareList, b: &ShareList| ShareList::reconstruct(a, b);
    assert_eq!(r(&out[0].0 .0, &out[1].0 .0), (vec![9], vec![1]));
    assert_eq!(r(&out[0].0 .1, &out[1].0 .1), (vec![3], vec![0]));
    assert_eq!(r(&out[0].1 .0, &out[1].1 .0), (vec![9], vec![1]));
    assert_ne!(out[0].1 .0.con, dealt[2][0].con, "shares are refreshed");
}

#[test]
fn shuffle_random_max_min() {
    let mut d = dealer(2);
    let a: Vec<(u64, u64)> = (0..300).map(|_| (d.next_below(10_001), d.next_bit() as u64)).collect();
    let b: Vec<(u64, u64)> = (0..200).map(|_| (d.next_below(10_001), d.next_bit() as u64)).collect();
    let dealt = deal(&[a.clone(), b.clone()], &mut d);
    let out = run_local(&[2; 32], Execution::Parallel, |p| {
        let v = view(&dealt, p.role());
        shuffle_step(p, &v[0], &v[1])
    })
    .unwrap();
    let (hi, _) = ShareList::reconstruct(&out[0].0, &out[1].0);
    let (lo, _) = ShareList::reconstruct(&out[0].1, &out[1].1);
    for k in 0..200 {
        assert_eq!(hi[k], a[k].0.max(b[k].0));
        assert_eq!(lo[k], a[k].0.min(b[k].0));
    }
    assert_eq!(&hi[200..], &a[200..].iter().map(|r| r.0).collect::<Vec<_>>()[..]);
}

#[test]
fn merge_examples() {
    let a = vec![(5, 1), (3, 0), (1, 1)];
    let b = vec![(4, 0), (2, 1)];
    let (out, report) = merged(&[a.clone(), b], 1, 3);
    assert_eq!(out, vec![(5, 1), (4, 0), (3, 0), (2, 1), (1, 1)]);
    assert_eq!(report.merges[0].possible_merges, BigUint::from(10u32));
    let (out, _) = merged(&[a.clone(), vec![]], 3, 4);
    assert_eq!(out, a);
}

#[test]
fn merge_single_list_is_identity() {
    let a = vec![(7, 1), (6, 0)];
    let (out, report) = merged(&[a.clone()], 1, 5);
    assert_eq!(out, a);
    assert!(report.merges.is_empty());
}

#[test]
fn merge_four_singletons() {
    let lists = vec![vec![(2, 0)], vec![(8, 1)], vec![(5, 1)], vec![(9, 0)]];
    let (out, _) = merged(&lists, 1, 6);
    assert_eq!(out, vec![(9, 0), (8, 1), (5, 1), (2, 0)]);
}

fn random_lists(d: &mut PairStream, owners: usize, max_len: u64, distinct: bool) -> Vec<Vec<(u64, u64)>> {
    let mut used = std::collections::HashSet::new();
    (0..owners)
        .map(|_| {
            let n = d.next_below(max_len + 1);
            let mut l: Vec<(u64, u64)> = Vec::new();
            while (l.len() as u64) < n {
                let c = d.next_below(10_001);
                if distinct && !used.insert(c) {
                    continue;
                }
                l.push((c, d.next_bit() as u64));
            }
            desc(l)
        })
        .collect()
}

#[test]
fn merge_random_lists_agree_across_delta() {
    let mut d = dealer(7);
    for case in 0..40u64 {
        let owners = 1 + d.next_below(5) as usize;
        let distinct = case % 2 == 0;
        let lists = random_lists(&mut d, owners, 12, distinct);
        if lists.iter().all(|l| l.is_empty()) {
            continue;
        }
        let expected = canonical(&lists.concat());
        for delta in [1, 3, 5, 11] {
            let (out, report) = merged(&lists, delta, 100 + case);
            let cons: Vec<u64> = out.iter().map(|r| r.0).collect();
            assert_eq!(cons, expected.iter().map(|r| r.0).collect::<Vec<_>>());
            assert_eq!(canonical(&out), expected);
            if distinct {
                assert_eq!(out, expected);
            }
            for m in &report.merges {
                assert!(m.delta_used.iter().all(|(dl, _)| *dl <= delta && dl % 2 == 1));
                if delta == 1 {
                    assert!(m.revealed.is_empty());
                }
            }
        }
    }
}

#[test]
fn unbalanced_distribution() {
    let sizes = [1usize, 2, 3, 6, 11, 26, 51, 101];
    let mut d = dealer(8);
    let lists: Vec<Vec<(u64, u64)>> = sizes
        .iter()
        .map(|&n| desc((0..n).map(|_| (d.next_below(10_001), d.next_bit() as u64)).collect()))
        .collect();
    let expected = canonical(&lists.concat());
    for delta in [1, 5] {
        let (out, _) = merged(&lists, delta, 9);
        assert_eq!(canonical(&out), expected);
    }
}

fn interleavings(n1: usize, n2: usize) -> u64 {
    if n1 == 0 || n2 == 0 {
        return 1;
    }
    interleavings(n1 - 1, n2) + interleavings(n1, n2 - 1)
}

#[test]
fn merge_count_matches_enumeration() {
    for n1 in 1..=6 {
        for n2 in 1..=n1 {
            assert_eq!(possible_merge_count(n1, n2).unwrap(), BigUint::from(interleavings(n1, n2)));
        }
    }
}

#[test]
fn merge_pair_reports_leakage() {
    let mut d = dealer(10);
    let lists = random_lists(&mut d, 2, 20, true);
    let dealt = deal(&lists, &mut d);
    let out = run_local(&[10; 32], Execution::Sequential, |p| {
        let v = view(&dealt, p.role());
        let mut report = LeakageReport::default();
        merge_pair(p, v[0].clone(), v[1].clone(), DeltaParam::new(3)?, Some(&mut report))?;
        Ok(report.render())
    })
    .unwrap();
    assert!(out[0].contains("delta: 3"));
    assert!(out[0].contains("possible_merges:"));
    assert_eq!(out[0], out[1]);
}
