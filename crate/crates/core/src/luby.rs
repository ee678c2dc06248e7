//! Luby-style maximal matching on an explicit hyperedge list.
//!
//! Each round draws a priority per remaining edge; an edge joins the matching
//! when it holds the maximum priority at every one of its endpoints. Chosen
//! edges and every edge touching them are then dropped. Ties on the 64-bit
//! priority are broken by key order.

use rand::Rng;
use rayon::prelude::*;

use crate::batch_set::{FixedMap, FixedSet};
use crate::config::ceil_log2;
use crate::cost::CostMeter;
use crate::edge::{EdgeKey, VertexId};
use crate::error::{Error, Result};

/// Rounds with fewer candidates than this run sequentially.
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LubyOutcome {
    /// Indices into the input slice, ascending.
    pub selected: Vec<usize>,
    pub rounds: usize,
}

pub fn round_cap(c_luby: usize, edges: usize) -> usize {
    c_luby * ceil_log2(edges as u64 + 2) as usize
}

/// Computes a matching that is maximal within `edges`. Input edges must be
/// pairwise distinct.
pub fn luby_maximal_matching<R: Rng + ?Sized>(
    edges: &[EdgeKey],
    rng: &mut R,
    c_luby: usize,
    meter: &mut CostMeter,
) -> Result<LubyOutcome> {
    let cap = round_cap(c_luby, edges.len());
    let mut remaining: Vec<usize> = (0..edges.len()).collect();
    let mut selected = Vec::new();
    let mut rounds = 0;

    while !remaining.is_empty() {
        if rounds == cap {
            return Err(Error::RoundCapExceeded { cap });
        }
        rounds += 1;
        let work: u64 = remaining.iter().map(|&i| edges[i].rank() as u64).sum();
        meter.charge(work, meter.log_n())?;

        let priority: Vec<u64> = remaining.iter().map(|_| rng.gen()).collect();
        let mut best: FixedMap<VertexId, usize> = FixedMap::default();
        for (slot, &i) in remaining.iter().enumerate() {
            for &v in edges[i].vertices() {
                best.entry(v)
                    .and_modify(|b| {
                        if (priority[slot], &edges[i]) > (priority[*b], &edges[remaining[*b]]) {
                            *b = slot;
                        }
                    })
                    .or_insert(slot);
            }
        }

        let wins = |slot: usize| {
            let i = remaining[slot];
            edges[i].vertices().iter().all(|v| best[v] == slot)
        };
        let winners: Vec<usize> = if remaining.len() >= PAR_THRESHOLD {
            (0..remaining.len()).into_par_iter().filter(|&s| wins(s)).collect()
        } else {
            (0..remaining.len()).filter(|&s| wins(s)).collect()
        };

        let mut covered: FixedSet<VertexId> = FixedSet::default();
        for &slot in &winners {
            let i = remaining[slot];
            covered.extend(edges[i].vertices().iter().copied());
            selected.push(i);
        }
        remaining.retain(|&i| !edges[i].vertices().iter().any(|v| covered.contains(v)));
    }

    selected.sort_unstable();
    Ok(LubyOutcome { selected, rounds })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::config::CostConstants;
    use crate::edge::canonical_edge;

    fn keys(raw: &[&[u32]]) -> Vec<EdgeKey> {
        raw.iter().map(|vs| canonical_edge(vs, 8).unwrap()).collect()
    }

    fn meter() -> CostMeter {
        let mut m = CostMeter::new(1 << 16, CostConstants::default());
        m.begin_batch();
        m
    }

    fn run(edges: &[EdgeKey], seed: u64) -> LubyOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        luby_maximal_matching(edges, &mut rng, 8, &mut meter()).unwrap()
    }

    fn assert_maximal_matching(edges: &[EdgeKey], chosen: &[usize]) {
        for (a, &i) in chosen.iter().enumerate() {
            for &j in &chosen[a + 1..] {
                assert!(!edges[i].intersects(&edges[j]), "{} and {} overlap", edges[i], edges[j]);
            }
        }
        for e in edges {
            assert!(chosen.iter().any(|&i| edges[i].intersects(e)), "{e} is free");
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(run(&[], 0), LubyOutcome { selected: vec![], rounds: 0 });
    }

    #[test]
    fn single_edge() {
        let edges = keys(&[&[1, 2]]);
        assert_eq!(run(&edges, 3).selected, vec![0]);
    }

    #[test]
    fn triangle_yields_one_edge() {
        let edges = keys(&[&[1, 2], &[2, 3], &[1, 3]]);
        for seed in 0..20 {
            assert_eq!(run(&edges, seed).selected.len(), 1);
        }
    }

    #[test]
    fn path_yields_a_maximal_matching() {
        let edges = keys(&[&[1, 2], &[2, 3], &[3, 4]]);
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..64 {
            let out = run(&edges, seed);
            assert!(out.selected == vec![0, 2] || out.selected == vec![1], "{:?}", out.selected);
            seen.insert(out.selected);
        }
        // both maximal matchings of P4 occur
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn round_cap_is_enforced() {
        // a chain forces at least two rounds for some seeds; cap 0 rounds fails
        let edges = keys(&[&[1, 2]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = luby_maximal_matching(&edges, &mut rng, 0, &mut meter()).unwrap_err();
        assert_eq!(err, Error::RoundCapExceeded { cap: 0 });
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: u32, m: usize, rank: usize) -> Vec<EdgeKey> {
        let mut seen = FixedSet::default();
        let mut out = Vec::new();
        let mut attempts = 0;
        while out.len() < m && attempts < 20 * m {
            attempts += 1;
            let k = rng.gen_range(1..=rank);
            let vs: Vec<u32> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            let key = canonical_edge(&vs, rank).unwrap();
            if seen.insert(key.clone()) {
                out.push(key);
            }
        }
        out
    }

    #[test]
    fn random_instances_are_maximal_and_deterministic() {
        let mut gen = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..200 {
            let m = gen.gen_range(0..300);
            let rank = gen.gen_range(2..=4);
            let edges = random_instance(&mut gen, 60, m, rank);
            let a = run(&edges, trial);
            assert_maximal_matching(&edges, &a.selected);
            assert_eq!(a, run(&edges, trial));
        }
    }

    #[test]
    fn round_count_envelope() {
        let mut gen = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let m = if trial % 100 == 0 { 10_000 } else { gen.gen_range(1..2_000) };
            let n = gen.gen_range(20..2_000);
            let edges = random_instance(&mut gen, n, m, 3);
            let out = run(&edges, trial);
            let bound = 4.0 * (edges.len() as f64).log2() + 8.0;
            assert!(out.rounds as f64 <= bound, "{} rounds for {} edges", out.rounds, edges.len());
        }
    }

    #[test]
    fn work_and_depth_charged_per_round() {
        let edges = keys(&[&[1, 2], &[3, 4]]);
        let mut m = CostMeter::new(256, CostConstants::default());
        m.begin_batch();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = luby_maximal_matching(&edges, &mut rng, 8, &mut m).unwrap();
        assert_eq!(out.rounds, 1);
        assert_eq!(m.end_batch().unwrap().depth, 8);
    }
}
