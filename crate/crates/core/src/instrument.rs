//! Epoch lifecycle tracking and per-level statistics.
//!
//! An epoch is the maximal stretch of batches during which one hyperedge
//! stays matched. It ends *naturally* when the adversary deletes the edge
//! and is *induced* when the algorithm removes it from the matching.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::batch_set::FixedMap;
use crate::cost::CostMeter;
use crate::edge::{EdgeKey, Level};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Natural,
    Induced,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub edge: EdgeKey,
    pub level: Level,
    pub created_at: u64,
    pub ended_at: Option<u64>,
    pub termination: Termination,
    pub d_size_at_creation: usize,
    /// Adversary deletions that landed in `D(edge)` while the epoch was open.
    pub d_hits: usize,
}

impl EpochRecord {
    /// `d_hits + 1`. Exact for natural epochs, a lower-bound proxy otherwise.
    pub fn uninterrupted_duration(&self) -> usize {
        self.d_hits + 1
    }

    pub fn is_short(&self, mu: f64, alpha: u64) -> bool {
        let scale = (alpha as f64).powi(self.level);
        self.uninterrupted_duration() as f64 <= mu * scale
    }
}

/// `1 / (alpha^4 * log2(alpha) * log2(N)^4)`, the default short-epoch scale.
pub fn default_mu(alpha: u64, capacity: u64) -> f64 {
    let a = alpha as f64;
    let log_n = (capacity as f64).log2().max(1.0);
    1.0 / (a.powi(4) * a.log2() * log_n.powi(4))
}

#[derive(Debug, Clone, Default)]
pub struct EpochTracker {
    records: Vec<EpochRecord>,
    open: FixedMap<EdgeKey, usize>,
    temp_deletions: u64,
}

impl EpochTracker {
    pub fn open(&mut self, edge: EdgeKey, level: Level, d_size: usize, batch: u64) -> Result<()> {
        if self.open.contains_key(&edge) {
            return Err(Error::DoubleOpen(edge));
        }
        self.open.insert(edge.clone(), self.records.len());
        self.records.push(EpochRecord {
            edge,
            level,
            created_at: batch,
            ended_at: None,
            termination: Termination::Open,
            d_size_at_creation: d_size,
            d_hits: 0,
        });
        Ok(())
    }

    pub fn close(&mut self, edge: &EdgeKey, termination: Termination, batch: u64) -> Result<()> {
        let idx = self.open.remove(edge).ok_or_else(|| Error::CloseUnopened(edge.clone()))?;
        let rec = &mut self.records[idx];
        rec.termination = termination;
        rec.ended_at = Some(batch);
        Ok(())
    }

    /// Counts an adversary deletion of a member of `D(parent)`.
    pub fn d_hit(&mut self, parent: &EdgeKey) -> Result<()> {
        let idx = *self.open.get(parent).ok_or_else(|| Error::CloseUnopened(parent.clone()))?;
        self.records[idx].d_hits += 1;
        Ok(())
    }

    pub fn note_temp_deletions(&mut self, count: usize) {
        self.temp_deletions += count as u64;
    }

    pub fn temp_deletions(&self) -> u64 {
        self.temp_deletions
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn is_open(&self, edge: &EdgeKey) -> bool {
        self.open.contains_key(edge)
    }

    pub fn open_count(&self) -> usize {
        self.open.len()
    }
}

/// Settle counters for one level.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SettleStats {
    pub invocations: u64,
    pub subsettle_repetitions: u64,
    pub max_repetitions: u64,
    pub edges_matched: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Instrumentation {
    pub epochs: EpochTracker,
    pub settle: BTreeMap<Level, SettleStats>,
    pub repetition_histogram: BTreeMap<u64, u64>,
    pub depth_per_batch: Vec<u64>,
    pub work_per_batch: Vec<u64>,
    pub updates: u64,
    pub max_luby_rounds: usize,
    pub rebuilds: u64,
    pub progress_checks: u64,
}

impl Instrumentation {
    pub fn record_settle(&mut self, level: Level, repetitions: u64, matched: u64) {
        let s = self.settle.entry(level).or_default();
        s.invocations += 1;
        s.subsettle_repetitions += repetitions;
        s.max_repetitions = s.max_repetitions.max(repetitions);
        s.edges_matched += matched;
        *self.repetition_histogram.entry(repetitions).or_default() += 1;
    }

    pub fn report(&self, alpha: u64, capacity: u64, meter: &CostMeter) -> StatsReport {
        let mu = default_mu(alpha, capacity);
        let mut levels: BTreeMap<Level, LevelReport> = BTreeMap::new();
        for rec in self.epochs.records() {
            let l = levels.entry(rec.level).or_insert_with(|| LevelReport::empty(rec.level));
            l.epochs_created += 1;
            match rec.termination {
                Termination::Natural => l.natural += 1,
                Termination::Induced => l.induced += 1,
                Termination::Open => l.open += 1,
            }
            if rec.is_short(mu, alpha) {
                l.mu_short += 1;
            }
        }
        for (&level, s) in &self.settle {
            let l = levels.entry(level).or_insert_with(|| LevelReport::empty(level));
            l.settle_invocations = s.invocations;
            l.subsettle_repetitions = s.subsettle_repetitions;
        }
        for l in levels.values_mut() {
            if l.epochs_created > 0 {
                l.mu_short_fraction = l.mu_short as f64 / l.epochs_created as f64;
            }
        }

        let invocations: u64 = self.repetition_histogram.values().sum();
        let reps: u64 = self.repetition_histogram.iter().map(|(r, c)| r * c).sum();
        let total_work = meter.total_work();
        StatsReport {
            batches: self.depth_per_batch.len() as u64,
            updates: self.updates,
            total_work,
            amortized_work_per_update: if self.updates == 0 {
                0.0
            } else {
                total_work as f64 / self.updates as f64
            },
            max_depth: self.depth_per_batch.iter().copied().max().unwrap_or(0),
            depth_per_batch: self.depth_per_batch.clone(),
            max_luby_rounds: self.max_luby_rounds,
            rebuilds: self.rebuilds,
            temp_deletions: self.epochs.temp_deletions(),
            mu,
            settle_invocations: invocations,
            mean_settle_repetitions: if invocations == 0 { 0.0 } else { reps as f64 / invocations as f64 },
            max_settle_repetitions: self.repetition_histogram.keys().copied().max().unwrap_or(0),
            settle_repetition_histogram: self.repetition_histogram.clone(),
            progress_checks: self.progress_checks,
            levels: levels.into_values().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: Level,
    pub epochs_created: u64,
    pub natural: u64,
    pub induced: u64,
    pub open: u64,
    pub mu_short: u64,
    pub mu_short_fraction: f64,
    pub settle_invocations: u64,
    pub subsettle_repetitions: u64,
}

impl LevelReport {
    fn empty(level: Level) -> Self {
        Self {
            level,
            epochs_created: 0,
            natural: 0,
            induced: 0,
            open: 0,
            mu_short: 0,
            mu_short_fraction: 0.0,
            settle_invocations: 0,
            subsettle_repetitions: 0,
        }
    }
}

/// Run-level statistics document. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub batches: u64,
    pub updates: u64,
    pub total_work: u64,
    pub amortized_work_per_update: f64,
    pub max_depth: u64,
    pub depth_per_batch: Vec<u64>,
    pub max_luby_rounds: usize,
    pub rebuilds: u64,
    pub temp_deletions: u64,
    pub mu: f64,
    pub settle_invocations: u64,
    pub mean_settle_repetitions: f64,
    pub max_settle_repetitions: u64,
    pub settle_repetition_histogram: BTreeMap<u64, u64>,
    pub progress_checks: u64,
    pub levels: Vec<LevelReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CostConstants;
    use crate::edge::canonical_edge;

    fn key(vs: &[u32]) -> EdgeKey {
        canonical_edge(vs, 4).unwrap()
    }

    #[test]
    fn natural_and_induced_termination() {
        let mut t = EpochTracker::default();
        t.open(key(&[1, 2]), 0, 0, 0).unwrap();
        t.open(key(&[3, 4]), 1, 5, 0).unwrap();
        t.close(&key(&[1, 2]), Termination::Natural, 2).unwrap();
        t.close(&key(&[3, 4]), Termination::Induced, 3).unwrap();
        t.open(key(&[5, 6]), 0, 0, 3).unwrap();
        let recs = t.records();
        assert_eq!(recs[0].termination, Termination::Natural);
        assert_eq!(recs[0].ended_at, Some(2));
        assert_eq!(recs[1].termination, Termination::Induced);
        assert_eq!(recs[2].termination, Termination::Open);
    }

    #[test]
    fn lifecycle_errors() {
        let mut t = EpochTracker::default();
        t.open(key(&[1, 2]), 0, 0, 0).unwrap();
        assert_eq!(t.open(key(&[1, 2]), 0, 0, 0), Err(Error::DoubleOpen(key(&[1, 2]))));
        assert_eq!(
            t.close(&key(&[7, 8]), Termination::Natural, 0),
            Err(Error::CloseUnopened(key(&[7, 8])))
        );
    }

    #[test]
    fn d_hits_accumulate_until_close() {
        let mut t = EpochTracker::default();
        t.open(key(&[1, 2]), 1, 3, 0).unwrap();
        t.d_hit(&key(&[1, 2])).unwrap();
        t.d_hit(&key(&[1, 2])).unwrap();
        t.close(&key(&[1, 2]), Termination::Natural, 1).unwrap();
        assert!(t.d_hit(&key(&[1, 2])).is_err());
        assert_eq!(t.records()[0].d_hits, 2);
        assert_eq!(t.records()[0].uninterrupted_duration(), 3);
    }

    #[test]
    fn fresh_report_is_zero() {
        let inst = Instrumentation::default();
        let meter = CostMeter::new(1024, CostConstants::default());
        let r = inst.report(8, 1024, &meter);
        assert_eq!(r.total_work, 0);
        assert_eq!(r.updates, 0);
        assert_eq!(r.amortized_work_per_update, 0.0);
        assert!(r.levels.is_empty());
        assert_eq!(r.settle_invocations, 0);
    }

    #[test]
    fn amortized_is_work_over_updates() {
        let mut inst = Instrumentation::default();
        let mut meter = CostMeter::new(1024, CostConstants::default());
        meter.begin_batch();
        meter.charge(300, 1).unwrap();
        meter.end_batch().unwrap();
        inst.updates = 12;
        assert_eq!(inst.report(8, 1024, &meter).amortized_work_per_update, 25.0);
    }

    #[test]
    fn short_epochs_by_level() {
        // mu * alpha^level with mu = 0.5, alpha = 8: level 1 threshold is 4.
        let rec = |level, d_hits| EpochRecord {
            edge: key(&[1, 2]),
            level,
            created_at: 0,
            ended_at: None,
            termination: Termination::Open,
            d_size_at_creation: 8,
            d_hits,
        };
        assert!(rec(1, 3).is_short(0.5, 8));
        assert!(!rec(1, 4).is_short(0.5, 8));
        assert!(!rec(0, 0).is_short(0.5, 8));
    }

    #[test]
    fn default_mu_value() {
        // alpha = 8, N = 2^10: 1 / (4096 * 3 * 10^4)
        let mu = default_mu(8, 1024);
        assert!((mu - 1.0 / (4096.0 * 3.0 * 1.0e4)).abs() < 1e-18);
    }
}
