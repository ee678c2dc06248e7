use proptest::prelude::*;

use hypermatch_core::{
    canonical_edge, check_maximality, check_state, exact_maximum_matching, Config, DynamicMatching, EdgeKey,
    EdgeLocation, Termination, UpdateBatch,
};

/// A batch as raw choices: insertions over a small vertex range and
/// deletion picks indexing into whatever edges exist when it is applied.
#[derive(Debug, Clone)]
struct RawBatch {
    inserts: Vec<Vec<u32>>,
    delete_picks: Vec<usize>,
}

fn raw_batches(n: u32, r: usize) -> impl Strategy<Value = Vec<RawBatch>> {
    let edge = prop::collection::vec(0..n, 1..=r);
    let batch = (prop::collection::vec(edge, 0..12), prop::collection::vec(any::<usize>(), 0..8))
        .prop_map(|(inserts, delete_picks)| RawBatch { inserts, delete_picks });
    prop::collection::vec(batch, 1..10)
}

/// Resolves a raw batch against the current edge set into a valid batch.
fn resolve(raw: &RawBatch, present: &[EdgeKey], r: usize) -> UpdateBatch {
    let mut deletions: Vec<EdgeKey> = Vec::new();
    if !present.is_empty() {
        for &p in &raw.delete_picks {
            let k = present[p % present.len()].clone();
            if !deletions.contains(&k) {
                deletions.push(k);
            }
        }
    }
    let mut insertions: Vec<Vec<u32>> = Vec::new();
    let mut seen: Vec<EdgeKey> = Vec::new();
    for e in &raw.inserts {
        let e = &e[..e.len().min(r)];
        let k = canonical_edge(e, r).unwrap();
        if present.contains(&k) || seen.contains(&k) {
            continue;
        }
        seen.push(k);
        insertions.push(e.to_vec());
    }
    UpdateBatch { insertions, deletions }
}

fn replay(config: Config, raws: &[RawBatch]) -> (DynamicMatching, Vec<UpdateBatch>) {
    let r = config.rank;
    let mut m = DynamicMatching::new(config);
    let mut applied = Vec::new();
    for raw in raws {
        let batch = resolve(raw, &m.edge_keys(), r);
        m.apply_batch(&batch).unwrap();
        applied.push(batch);
    }
    (m, applied)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn state_is_valid_after_every_batch(r in 2usize..=4, seed in any::<u64>(), raws in raw_batches(14, 4)) {
        let mut m = DynamicMatching::new(Config::new(r, 14, seed).unwrap());
        for raw in &raws {
            let batch = resolve(raw, &m.edge_keys(), r);
            m.apply_batch(&batch).unwrap();
            let violations = check_state(&m);
            prop_assert!(violations.is_empty(), "{:?}", violations);
            let keys = m.edge_keys();
            let matched: Vec<EdgeKey> = m.matching().into_iter().map(|e| e.edge).collect();
            prop_assert!(check_maximality(&keys, &matched).is_empty());
            for k in &batch.deletions {
                prop_assert_eq!(m.location(k), EdgeLocation::Absent);
            }
            prop_assert_eq!(m.undecided_count(), 0);
            prop_assert_eq!(m.pending_count(), 0);
        }
    }

    #[test]
    fn matching_is_within_rank_of_maximum(r in 2usize..=3, seed in any::<u64>(), raws in raw_batches(10, 3)) {
        let (m, _) = replay(Config::new(r, 10, seed).unwrap(), &raws);
        let keys = m.edge_keys();
        if keys.len() <= 24 {
            let best = exact_maximum_matching(&keys).unwrap();
            prop_assert!(m.matching().len() * r >= best);
        }
    }

    #[test]
    fn same_seed_same_run(seed in any::<u64>(), raws in raw_batches(12, 3)) {
        let (a, _) = replay(Config::new(3, 12, seed).unwrap(), &raws);
        let (b, _) = replay(Config::new(3, 12, seed).unwrap(), &raws);
        prop_assert_eq!(a.matching(), b.matching());
        prop_assert_eq!(a.epochs(), b.epochs());
        prop_assert_eq!(a.stats().depth_per_batch, b.stats().depth_per_batch);
    }

    #[test]
    fn tiny_capacity_forces_rebuilds(seed in any::<u64>(), raws in raw_batches(12, 2)) {
        let (m, applied) = replay(Config::with_capacity(2, 2, seed).unwrap(), &raws);
        prop_assert!(check_state(&m).is_empty());
        prop_assert!(m.config().capacity.is_power_of_two());
        let updates: usize = applied.iter().map(|b| b.len()).sum();
        // Any update implies at least one vertex, so two updates exceed 2.
        if updates >= 2 {
            prop_assert!(m.stats().rebuilds >= 1);
        }
    }

    #[test]
    fn epoch_accounting(seed in any::<u64>(), raws in raw_batches(16, 2)) {
        let (m, _) = replay(Config::new(2, 16, seed).unwrap(), &raws);
        let s = m.stats();
        let opened: usize = m.epochs().iter().map(|r| r.d_size_at_creation).sum();
        prop_assert!(opened as u64 <= s.temp_deletions);
        let open = m.epochs().iter().filter(|r| r.termination == Termination::Open).count();
        prop_assert_eq!(open, m.matching().len());
        for r in m.epochs() {
            prop_assert_eq!(r.ended_at.is_none(), r.termination == Termination::Open);
            if let Some(end) = r.ended_at {
                prop_assert!(end >= r.created_at);
            }
        }
        for l in &s.levels {
            prop_assert_eq!(l.epochs_created, l.natural + l.induced + l.open);
        }
    }

    #[test]
    fn hub_churn_stays_valid(
        r in 2usize..=3,
        seed in any::<u64>(),
        leaves in 20u32..120,
        picks in prop::collection::vec(prop::collection::vec(any::<usize>(), 1..16), 1..8),
    ) {
        let mut m = DynamicMatching::new(Config::new(r, leaves as u64 + 1, seed).unwrap());
        let star: Vec<Vec<u32>> = (1..=leaves).map(|u| if r == 3 && u % 3 == 0 { vec![0, u, u - 1] } else { vec![0, u] }).collect();
        m.apply_batch(&UpdateBatch { insertions: star, deletions: vec![] }).unwrap();
        for round in &picks {
            // Matched edges first, so the hub keeps losing its partner.
            let mut present: Vec<EdgeKey> = m.matching().into_iter().map(|e| e.edge).collect();
            present.extend(m.edge_keys());
            let raw = RawBatch { inserts: vec![], delete_picks: round.iter().map(|&p| p % present.len().min(4)).collect() };
            let batch = resolve(&raw, &present, r);
            m.apply_batch(&batch).unwrap();
            let violations = check_state(&m);
            prop_assert!(violations.is_empty(), "{:?}", violations);
            if m.edge_keys().is_empty() {
                break;
            }
        }
    }
}
