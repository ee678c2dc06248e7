//! Seeded oblivious-adversary workloads.
//!
//! Generators draw from ChaCha stream 1 of the seed, while the matcher uses
//! stream 0, so the update sequence never depends on the algorithm's coins.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::edge::{canonical_edge, EdgeKey, VertexId};
use crate::engine::UpdateBatch;
use crate::stream::StreamFile;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("infeasible workload: {0}")]
    InfeasibleSpec(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Random batch sizes; each update inserts a fresh edge or deletes a
    /// uniformly chosen live one.
    UniformMix,
    /// Fixed-size insert batches; the oldest edges leave once the window fills.
    SlidingWindow,
    /// `batch_count` insert batches, then the same edges deleted in order.
    InsertAllThenDeleteAll,
    /// Like uniform mix, with ranks down to 1 and endpoints skewed to hubs.
    HypergraphRandom,
}

impl Generator {
    pub const ALL: [Generator; 4] =
        [Generator::UniformMix, Generator::SlidingWindow, Generator::InsertAllThenDeleteAll, Generator::HypergraphRandom];

    pub fn name(self) -> &'static str {
        match self {
            Generator::UniformMix => "uniform-mix",
            Generator::SlidingWindow => "sliding-window",
            Generator::InsertAllThenDeleteAll => "insert-all-then-delete-all",
            Generator::HypergraphRandom => "hypergraph-random",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| WorkloadError::UnknownGenerator(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub generator: Generator,
    pub n: u32,
    pub r: usize,
    pub batch_count: usize,
    pub batch_size: usize,
    pub insert_ratio: f64,
    pub seed: u64,
}

/// Live edges with O(1) uniform sampling and removal.
#[derive(Default)]
struct LiveSet {
    keys: Vec<EdgeKey>,
    slot: HashMap<EdgeKey, usize>,
}

impl LiveSet {
    fn contains(&self, key: &EdgeKey) -> bool {
        self.slot.contains_key(key)
    }

    fn insert(&mut self, key: EdgeKey) {
        self.slot.insert(key.clone(), self.keys.len());
        self.keys.push(key);
    }

    fn remove_at(&mut self, i: usize) -> EdgeKey {
        let key = self.keys.swap_remove(i);
        self.slot.remove(&key);
        if let Some(moved) = self.keys.get(i) {
            self.slot.insert(moved.clone(), i);
        }
        key
    }
}

struct EdgeSampler {
    n: u32,
    min_rank: usize,
    max_rank: usize,
    /// Number of hub vertices that receive half of all endpoint draws.
    hubs: Option<u32>,
}

impl EdgeSampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> EdgeKey {
        let k = rng.gen_range(self.min_rank..=self.max_rank).min(self.n as usize);
        let vs: Vec<VertexId> = match self.hubs {
            Some(h) => {
                let mut vs = Vec::with_capacity(k);
                while vs.len() < k {
                    let v = if rng.gen_bool(0.5) { rng.gen_range(0..h) } else { rng.gen_range(0..self.n) };
                    if !vs.contains(&v) {
                        vs.push(v);
                    }
                }
                vs
            }
            None => sample(rng, self.n as usize, k).into_iter().map(|v| v as VertexId).collect(),
        };
        canonical_edge(&vs, self.max_rank).expect("sampled edge is valid")
    }
}

const INSERT_ATTEMPTS: usize = 64;

fn check(spec: &WorkloadSpec) -> Result<(), WorkloadError> {
    let fail = |m: &str| Err(WorkloadError::InfeasibleSpec(m.to_string()));
    if spec.r < 2 {
        return fail("rank must be at least 2");
    }
    if spec.n < 2 {
        return fail("need at least two vertices");
    }
    if spec.batch_size == 0 {
        return fail("batch size must be positive");
    }
    if !(0.0..=1.0).contains(&spec.insert_ratio) {
        return fail("insert ratio must lie in [0, 1]");
    }
    let mixes = matches!(spec.generator, Generator::UniformMix | Generator::HypergraphRandom);
    if mixes && spec.insert_ratio == 0.0 && spec.batch_count > 0 {
        return fail("deletions requested from an empty graph");
    }
    Ok(())
}

/// Produces a deterministic stream for `spec`.
pub fn generate(spec: &WorkloadSpec) -> Result<StreamFile, WorkloadError> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let rank = spec.r.min(spec.n as usize);
    let uniform = EdgeSampler { n: spec.n, min_rank: 2, max_rank: rank, hubs: None };
    let batches = match spec.generator {
        Generator::UniformMix => mixed(spec, &uniform, &mut rng),
        Generator::HypergraphRandom => {
            let hubs = ((spec.n as f64).sqrt().ceil() as u32).max(1);
            let sampler = EdgeSampler { n: spec.n, min_rank: 1, max_rank: rank, hubs: Some(hubs) };
            mixed(spec, &sampler, &mut rng)
        }
        Generator::SlidingWindow => sliding(spec, &uniform, &mut rng)?,
        Generator::InsertAllThenDeleteAll => insert_then_delete(spec, &uniform, &mut rng)?,
    };
    Ok(StreamFile { batches })
}

fn mixed(spec: &WorkloadSpec, sampler: &EdgeSampler, rng: &mut ChaCha8Rng) -> Vec<UpdateBatch> {
    let mut live = LiveSet::default();
    let mut out = Vec::with_capacity(spec.batch_count);
    for _ in 0..spec.batch_count {
        let size = rng.gen_range(1..=spec.batch_size);
        let mut batch = UpdateBatch::default();
        let mut added: Vec<EdgeKey> = Vec::new();
        let mut touched: HashSet<EdgeKey> = HashSet::new();
        for _ in 0..size {
            let want_insert = live.keys.is_empty() || rng.gen_bool(spec.insert_ratio);
            let fresh = want_insert
                .then(|| {
                    (0..INSERT_ATTEMPTS)
                        .map(|_| sampler.draw(rng))
                        .find(|k| !live.contains(k) && !touched.contains(k))
                })
                .flatten();
            match fresh {
                Some(key) => {
                    touched.insert(key.clone());
                    batch.insertions.push(key.vertices().to_vec());
                    added.push(key);
                }
                None if !live.keys.is_empty() => {
                    let i = rng.gen_range(0..live.keys.len());
                    let key = live.remove_at(i);
                    touched.insert(key.clone());
                    batch.deletions.push(key);
                }
                None => break,
            }
        }
        for key in added {
            live.insert(key);
        }
        out.push(batch);
    }
    out
}

fn fresh_edge(
    sampler: &EdgeSampler,
    rng: &mut ChaCha8Rng,
    taken: &HashSet<EdgeKey>,
) -> Result<EdgeKey, WorkloadError> {
    (0..INSERT_ATTEMPTS)
        .map(|_| sampler.draw(rng))
        .find(|k| !taken.contains(k))
        .ok_or_else(|| WorkloadError::InfeasibleSpec("too few distinct edges for the requested size".into()))
}

fn sliding(spec: &WorkloadSpec, sampler: &EdgeSampler, rng: &mut ChaCha8Rng) -> Result<Vec<UpdateBatch>, WorkloadError> {
    let window = 4 * spec.batch_size;
    let mut queue: VecDeque<EdgeKey> = VecDeque::new();
    let mut taken: HashSet<EdgeKey> = HashSet::new();
    let mut out = Vec::with_capacity(spec.batch_count);
    for _ in 0..spec.batch_count {
        let mut batch = UpdateBatch::default();
        while queue.len() + spec.batch_size > window {
            batch.deletions.push(queue.pop_front().expect("window is nonempty"));
        }
        let mut added = Vec::with_capacity(spec.batch_size);
        for _ in 0..spec.batch_size {
            let key = fresh_edge(sampler, rng, &taken)?;
            taken.insert(key.clone());
            batch.insertions.push(key.vertices().to_vec());
            added.push(key);
        }
        // Keys deleted this batch may come back only in a later batch.
        for key in &batch.deletions {
            taken.remove(key);
        }
        queue.extend(added);
        out.push(batch);
    }
    Ok(out)
}

fn insert_then_delete(
    spec: &WorkloadSpec,
    sampler: &EdgeSampler,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<UpdateBatch>, WorkloadError> {
    let rounds = spec.batch_count.max(1);
    let mut taken: HashSet<EdgeKey> = HashSet::new();
    let mut inserted: Vec<Vec<EdgeKey>> = Vec::with_capacity(rounds);
    let mut out = Vec::with_capacity(2 * rounds);
    for _ in 0..rounds {
        let mut keys = Vec::with_capacity(spec.batch_size);
        for _ in 0..spec.batch_size {
            let key = fresh_edge(sampler, rng, &taken)?;
            taken.insert(key.clone());
            keys.push(key);
        }
        out.push(UpdateBatch { insertions: keys.iter().map(|k| k.vertices().to_vec()).collect(), deletions: vec![] });
        inserted.push(keys);
    }
    for keys in inserted {
        out.push(UpdateBatch { insertions: vec![], deletions: keys });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(generator: Generator) -> WorkloadSpec {
        WorkloadSpec { generator, n: 40, r: 3, batch_count: 30, batch_size: 16, insert_ratio: 0.6, seed: 5 }
    }

    /// Replays a stream against a plain set of live keys.
    fn replay(stream: &StreamFile, rank: usize) {
        let mut live: HashSet<EdgeKey> = HashSet::new();
        for b in &stream.batches {
            for d in &b.deletions {
                assert!(live.remove(d), "delete of absent {d}");
            }
            let mut seen = HashSet::new();
            for vs in &b.insertions {
                let k = canonical_edge(vs, rank).unwrap();
                assert!(seen.insert(k.clone()));
                assert!(live.insert(k), "duplicate insert");
            }
        }
    }

    #[test]
    fn insert_then_delete_shape() {
        let s = WorkloadSpec { batch_count: 1, batch_size: 4, ..spec(Generator::InsertAllThenDeleteAll) };
        let out = generate(&s).unwrap();
        assert_eq!(out.batches.len(), 2);
        assert_eq!((out.batches[0].insertions.len(), out.batches[0].deletions.len()), (4, 0));
        assert_eq!((out.batches[1].insertions.len(), out.batches[1].deletions.len()), (0, 4));
    }

    #[test]
    fn generators_are_deterministic_and_valid() {
        for g in Generator::ALL {
            let a = generate(&spec(g)).unwrap();
            let b = generate(&spec(g)).unwrap();
            assert_eq!(a.to_string(), b.to_string(), "{g}");
            replay(&a, 3);
            let reparsed = StreamFile::parse(&a.to_string(), 3).unwrap();
            assert_eq!(reparsed.to_string(), a.to_string());
        }
    }

    #[test]
    fn seeds_change_streams() {
        let a = generate(&spec(Generator::UniformMix)).unwrap();
        let b = generate(&WorkloadSpec { seed: 6, ..spec(Generator::UniformMix) }).unwrap();
        assert_ne!(a.to_string(), b.to_string());
    }

    #[test]
    fn sliding_window_holds_at_most_the_window() {
        let s = spec(Generator::SlidingWindow);
        let out = generate(&s).unwrap();
        let mut live = 0usize;
        for b in &out.batches {
            live = live - b.deletions.len() + b.insertions.len();
            assert!(live <= 4 * s.batch_size);
        }
        // Oldest edges go first.
        let first: Vec<EdgeKey> =
            out.batches[0].insertions.iter().map(|v| canonical_edge(v, 3).unwrap()).collect();
        assert_eq!(out.batches[4].deletions, first);
    }

    #[test]
    fn hypergraph_random_uses_small_ranks() {
        let out = generate(&spec(Generator::HypergraphRandom)).unwrap();
        let ranks: HashSet<usize> = out.batches.iter().flat_map(|b| b.insertions.iter().map(|v| v.len())).collect();
        assert!(ranks.contains(&1) && ranks.iter().all(|&k| (1..=3).contains(&k)));
    }

    #[test]
    fn infeasible_specs() {
        let bad = |s: WorkloadSpec| matches!(generate(&s), Err(WorkloadError::InfeasibleSpec(_)));
        assert!(bad(WorkloadSpec { insert_ratio: 0.0, ..spec(Generator::UniformMix) }));
        assert!(bad(WorkloadSpec { n: 1, ..spec(Generator::UniformMix) }));
        assert!(bad(WorkloadSpec { batch_size: 0, ..spec(Generator::SlidingWindow) }));
        // Only one distinct edge exists on two vertices with rank 2.
        assert!(bad(WorkloadSpec { n: 2, r: 2, batch_size: 2, ..spec(Generator::InsertAllThenDeleteAll) }));
    }

    #[test]
    fn names_round_trip() {
        for g in Generator::ALL {
            assert_eq!(g.name().parse::<Generator>().unwrap(), g);
        }
        assert!("bogus".parse::<Generator>().is_err());
    }
}
