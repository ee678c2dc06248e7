//! Shared fixtures for the criterion benches.

use hypermatch_core::{generate, Config, DynamicMatching, Generator, StreamFile, UpdateBatch, WorkloadSpec};

pub fn workload(generator: Generator, n: u32, r: usize, batch_count: usize, batch_size: usize) -> StreamFile {
    generate(&WorkloadSpec { generator, n, r, batch_count, batch_size, insert_ratio: 0.6, seed: 42 })
        .expect("feasible workload")
}

/// `k` disjoint edges of rank `r`.
pub fn disjoint_batch(k: usize, r: usize) -> UpdateBatch {
    let insertions = (0..k as u32).map(|i| (0..r as u32).map(|j| i * r as u32 + j).collect()).collect();
    UpdateBatch { insertions, deletions: vec![] }
}

/// Replays `stream` on a fresh matcher and returns the final matching size.
pub fn replay(stream: &StreamFile, config: Config) -> usize {
    let mut m = DynamicMatching::new(config);
    for batch in &stream.batches {
        m.apply_batch(batch).expect("valid stream");
    }
    m.matching().len()
}
