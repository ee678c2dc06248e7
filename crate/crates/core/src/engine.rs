//! The batch update algorithm.
//!
//! A batch runs in three phases: unmatched and temporarily deleted edges are
//! dropped, matched deletions leave undecided endpoints that the level sweep
//! (`L` down to 0) re-matches, demotes or lifts through the random settle
//! hierarchy, and finally new edges plus every edge displaced during the
//! batch are inserted. Capacity overflow triggers a full rebuild.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::batch_set::{BatchSet, FixedMap, FixedSet};
use crate::config::Config;
use crate::cost::{BatchCost, CostMeter};
use crate::edge::{canonical_edge, EdgeId, EdgeKey, EdgeLocation, Level, VertexId};
use crate::error::{Error, Result};
use crate::instrument::{EpochRecord, Instrumentation, StatsReport, Termination};
use crate::leveling::{Leveling, Place};
use crate::luby::luby_maximal_matching;

/// One adversary round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateBatch {
    pub insertions: Vec<Vec<VertexId>>,
    pub deletions: Vec<EdgeKey>,
}

impl UpdateBatch {
    pub fn is_empty(&self) -> bool {
        self.insertions.is_empty() && self.deletions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.insertions.len() + self.deletions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchedEdge {
    pub edge: EdgeKey,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettleRecord {
    pub level: Level,
    pub initial: usize,
    pub repetitions: u64,
    pub matched: usize,
}

/// Net effect of one batch. An edge that leaves and re-enters the matching
/// within the batch appears in neither list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BatchReport {
    pub batch: u64,
    pub matched_added: Vec<MatchedEdge>,
    pub matched_removed: Vec<EdgeKey>,
    /// `(vertex, old level, new level)`, by vertex.
    pub level_changes: Vec<(VertexId, Level, Level)>,
    pub cost: BatchCost,
    /// Largest round count of any static matching call in the batch.
    pub luby_rounds: usize,
    pub settles: Vec<SettleRecord>,
    pub rebuilt: bool,
}

/// Number of subsettle phases, `2 * ceil(log2 alpha)`.
pub fn subsettle_phases(config: &Config) -> u64 {
    2 * config.log2_alpha()
}

/// Iterations of one subsettle phase, `ceil(c_sub * log2(|E'| + 2))`.
pub fn phase_iterations(c_sub: f64, e_prime: usize) -> u64 {
    (c_sub * ((e_prime + 2) as f64).log2()).ceil() as u64
}

/// Minimum number of edges a settle over `initial` rising nodes must match.
pub fn progress_requirement(initial: usize, alpha: u64) -> usize {
    let cube = (alpha as u128).pow(3);
    ((initial as u128).div_ceil(cube)) as usize
}

/// Indices in `0..n`, each included independently with probability `p`.
/// Draws one geometric gap per selected index instead of one coin per index.
fn bernoulli_indices<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<usize> {
    if p >= 1.0 {
        return (0..n).collect();
    }
    let mut out = Vec::new();
    if p <= 0.0 {
        return out;
    }
    let ln_q = (1.0 - p).ln();
    let mut i = 0usize;
    while i < n {
        let u = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / ln_q).floor();
        if skip >= (n - i) as f64 {
            break;
        }
        i += skip as usize;
        out.push(i);
        i += 1;
    }
    out
}

/// Working state of one `grand_random_settle` call.
struct SettleCtx {
    b: Vec<VertexId>,
    /// `E'` in key order.
    e_prime: Vec<EdgeId>,
    in_e: FixedSet<EdgeId>,
    h: FixedMap<EdgeId, VertexId>,
    /// Edges grouped by their sampled endpoint.
    h_inv: FixedMap<VertexId, Vec<EdgeId>>,
    matched: usize,
}

#[derive(Debug, Clone)]
pub struct DynamicMatching {
    config: Config,
    graph: Leveling,
    meter: CostMeter,
    rng: ChaCha8Rng,
    undecided: Vec<BatchSet<VertexId>>,
    pending: BatchSet<EdgeKey>,
    instr: Instrumentation,
    batches: u64,
    // Per-batch bookkeeping for the report.
    touched: FixedMap<EdgeKey, Option<Level>>,
    vertex_pre: FixedMap<VertexId, Level>,
    luby_rounds: usize,
    settles: Vec<SettleRecord>,
}

impl DynamicMatching {
    pub fn new(config: Config) -> Self {
        let graph = Leveling::new(&config);
        Self {
            meter: CostMeter::new(config.capacity, config.cost),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            undecided: (0..=config.levels()).map(|_| BatchSet::new()).collect(),
            pending: BatchSet::new(),
            instr: Instrumentation::default(),
            batches: 0,
            touched: FixedMap::default(),
            vertex_pre: FixedMap::default(),
            luby_rounds: 0,
            settles: Vec::new(),
            graph,
            config,
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn graph(&self) -> &Leveling {
        &self.graph
    }

    #[cfg(test)]
    pub(crate) fn graph_mut(&mut self) -> &mut Leveling {
        &mut self.graph
    }

    pub fn batches(&self) -> u64 {
        self.batches
    }

    pub fn level(&self, v: VertexId) -> Level {
        self.graph.level(v)
    }

    pub fn location(&self, key: &EdgeKey) -> EdgeLocation {
        self.graph.location(key)
    }

    /// Matched edges with their levels, in key order.
    pub fn matching(&self) -> Vec<MatchedEdge> {
        let mut out: Vec<MatchedEdge> = self
            .graph
            .edges()
            .filter(|(_, e)| e.is_matched())
            .map(|(_, e)| MatchedEdge { edge: e.key().clone(), level: e.level() })
            .collect();
        out.sort_by(|a, b| a.edge.cmp(&b.edge));
        out
    }

    /// Edges in the graph, including temporarily deleted ones, in key order.
    pub fn edge_keys(&self) -> Vec<EdgeKey> {
        let mut out: Vec<EdgeKey> = self.graph.edges().map(|(_, e)| e.key().clone()).collect();
        out.sort();
        out
    }

    pub fn undecided_count(&self) -> usize {
        self.undecided.iter().map(|u| u.len()).sum()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn epochs(&self) -> &[EpochRecord] {
        self.instr.epochs.records()
    }

    pub fn instrumentation(&self) -> &Instrumentation {
        &self.instr
    }

    pub fn stats(&self) -> StatsReport {
        self.instr.report(self.config.alpha(), self.config.capacity, &self.meter)
    }

    // ---- batch driver ---------------------------------------------------

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<BatchReport> {
        let (inserts, deletes) = self.validate(batch)?;
        self.meter.begin_batch();
        self.touched.clear();
        self.vertex_pre.clear();
        self.luby_rounds = 0;
        self.settles.clear();

        // Phase 1: unmatched and temporarily deleted edges.
        let (matched, unmatched): (Vec<EdgeId>, Vec<EdgeId>) =
            deletes.into_iter().partition(|&id| self.graph.edge(id).is_matched());
        self.delete_unmatched(&unmatched)?;

        // Phase 2: matched edges, then the level sweep.
        self.delete_matched(&matched)?;
        for l in (0..=self.graph.levels()).rev() {
            self.process_level(l)?;
        }
        debug_assert_eq!(self.undecided_count(), 0);
        debug_assert!((0..=self.graph.levels()).all(|l| self.graph.rise_set(l).is_empty()));

        // Phase 3: fresh insertions plus every displaced edge.
        let mut keys = self.pending.drain(&mut self.meter)?;
        keys.extend(inserts);
        keys.sort();
        self.insert_edges(&keys)?;

        self.instr.updates += batch.len() as u64;
        let rebuilt = self.maybe_rebuild()?;
        let cost = self.meter.end_batch()?;
        self.instr.depth_per_batch.push(cost.depth);
        self.instr.work_per_batch.push(cost.work);
        self.instr.max_luby_rounds = self.instr.max_luby_rounds.max(self.luby_rounds);

        let report = self.build_report(cost, rebuilt);
        self.batches += 1;
        Ok(report)
    }

    fn validate(&self, batch: &UpdateBatch) -> Result<(Vec<EdgeKey>, Vec<EdgeId>)> {
        let mut deleted: FixedSet<&EdgeKey> = FixedSet::default();
        let mut ids = Vec::with_capacity(batch.deletions.len());
        for key in &batch.deletions {
            match self.graph.id_of(key) {
                Some(id) if deleted.insert(key) => ids.push(id),
                _ => return Err(Error::UnknownEdge(key.clone())),
            }
        }
        let mut seen: FixedSet<EdgeKey> = FixedSet::default();
        let mut keys = Vec::with_capacity(batch.insertions.len());
        for vs in &batch.insertions {
            let key = canonical_edge(vs, self.config.rank)?;
            let present = self.graph.id_of(&key).is_some() && !deleted.contains(&key);
            if present || !seen.insert(key.clone()) {
                return Err(Error::DuplicateEdge(key));
            }
            keys.push(key);
        }
        Ok((keys, ids))
    }

    fn build_report(&mut self, cost: BatchCost, rebuilt: bool) -> BatchReport {
        self.absorb_level_log();
        let mut level_changes: Vec<(VertexId, Level, Level)> = self
            .vertex_pre
            .iter()
            .map(|(&v, &old)| (v, old, self.graph.level(v)))
            .filter(|&(_, old, new)| old != new)
            .collect();
        level_changes.sort_unstable();

        let touched: BTreeMap<&EdgeKey, Option<Level>> = self.touched.iter().map(|(k, &l)| (k, l)).collect();
        let mut matched_added = Vec::new();
        let mut matched_removed = Vec::new();
        for (key, before) in touched {
            let after = self.graph.id_of(key).map(|id| self.graph.edge(id)).filter(|e| e.is_matched());
            match (before, after) {
                (None, Some(e)) => matched_added.push(MatchedEdge { edge: key.clone(), level: e.level() }),
                (Some(_), None) => matched_removed.push(key.clone()),
                _ => {}
            }
        }
        BatchReport {
            batch: self.batches,
            matched_added,
            matched_removed,
            level_changes,
            cost,
            luby_rounds: self.luby_rounds,
            settles: std::mem::take(&mut self.settles),
            rebuilt,
        }
    }

    fn absorb_level_log(&mut self) {
        for (v, old) in self.graph.drain_level_log() {
            self.vertex_pre.entry(v).or_insert(old);
        }
    }

    /// Remembers whether `id` was matched before its first change this batch.
    fn touch(&mut self, id: EdgeId) {
        let e = self.graph.edge(id);
        let before = e.is_matched().then_some(e.level());
        if !self.touched.contains_key(e.key()) {
            self.touched.insert(e.key().clone(), before);
        }
    }

    // ---- phase 1 and 2 deletions -----------------------------------------

    fn delete_unmatched(&mut self, ids: &[EdgeId]) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        let (parked, active): (Vec<EdgeId>, Vec<EdgeId>) =
            ids.iter().partition(|&&id| self.graph.edge(id).temp_parent().is_some());
        for &id in &active {
            if self.graph.edge(id).is_matched() {
                return Err(Error::MatchedEdgePassed(self.graph.key(id).clone()));
            }
        }
        self.meter.seq_begin();
        self.meter.par_begin();
        for &t in &parked {
            let parent = self.graph.edge(t).temp_parent().expect("parked");
            self.graph.edge_mut(parent).d_set.erase(t, &mut self.meter)?;
            self.instr.epochs.d_hit(self.graph.key(parent))?;
            self.graph.set_place(t, Place::Detached);
        }
        self.meter.end()?;
        self.graph.detach_many(&active, &mut self.meter)?;
        self.meter.end()?;
        for &id in parked.iter().chain(&active) {
            self.graph.destroy_edge(id);
        }
        Ok(())
    }

    fn delete_matched(&mut self, ids: &[EdgeId]) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        for &id in ids {
            if !self.graph.edge(id).is_matched() {
                return Err(Error::NotMatched(self.graph.key(id).clone()));
            }
        }
        self.meter.seq_begin();
        self.meter.par_begin();
        for &id in ids {
            let key = self.graph.key(id).clone();
            self.instr.epochs.close(&key, Termination::Natural, self.batches)?;
            self.touch(id);
            self.graph.mark_unmatched(id);
            let level = self.graph.edge(id).level();
            self.undecided[level as usize].insert_batch(key.vertices().iter().copied(), &mut self.meter)?;
            let flushed = self.graph.edge_mut(id).d_set.drain(&mut self.meter)?;
            self.flush_to_pending(flushed)?;
        }
        self.meter.end()?;
        self.graph.detach_many(ids, &mut self.meter)?;
        self.meter.end()?;
        for &id in ids {
            self.graph.destroy_edge(id);
        }
        Ok(())
    }

    /// Moves temporarily deleted edges to the pending reinsertion set.
    fn flush_to_pending(&mut self, mut ids: Vec<EdgeId>) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        ids.sort_by(|a, b| self.graph.key(*a).cmp(self.graph.key(*b)));
        let mut keys = Vec::with_capacity(ids.len());
        for id in ids {
            self.graph.set_place(id, Place::Detached);
            keys.push(self.graph.destroy_edge(id));
        }
        self.pending.insert_batch(keys, &mut self.meter)
    }

    // ---- level sweep ------------------------------------------------------

    fn process_level(&mut self, l: Level) -> Result<()> {
        // Step 1: re-match undecided nodes through free edges they own,
        // demote the rest.
        let mut u_nodes = self.undecided[l as usize].retrieve(&mut self.meter)?;
        if !u_nodes.is_empty() {
            u_nodes.sort_unstable();
            self.meter.seq_begin();
            self.meter.par_begin();
            let mut free = Vec::new();
            for &u in &u_nodes {
                let owned = self.graph.vertex(u).expect("undecided vertex exists").owned().retrieve(&mut self.meter)?;
                for id in owned {
                    let key = self.graph.key(id);
                    self.meter.charge(key.rank() as u64, 1)?;
                    if key.vertices().iter().all(|&w| !self.graph.is_matched_vertex(w)) {
                        free.push(id);
                    }
                }
            }
            self.meter.end()?;
            self.match_free(free)?;

            let rest: Vec<VertexId> = u_nodes.into_iter().filter(|&u| !self.graph.is_matched_vertex(u)).collect();
            self.undecided[l as usize].erase_batch(rest.iter().copied(), &mut self.meter)?;
            let pairs: Vec<(VertexId, Level)> = rest.into_iter().map(|u| (u, -1)).collect();
            self.graph.set_level_many(&pairs, &mut self.meter)?;
            self.meter.end()?;
        }

        // Step 2: settle until nobody is due to rise to `l`. Every settle
        // lifts at least one edge for good, so the vertex count bounds this.
        let mut rounds = 0;
        while !self.graph.rise_set(l).is_empty() {
            if rounds > self.graph.vertex_count() {
                return Err(Error::SettleDivergence { level: l, cap: rounds });
            }
            rounds += 1;
            let mut b = self.graph.rise_set(l).retrieve(&mut self.meter)?;
            b.sort_unstable();
            self.grand_random_settle(b, l)?;
        }
        Ok(())
    }

    /// Runs the static matcher over `candidates` and puts the winners at level 0.
    fn match_free(&mut self, mut candidates: Vec<EdgeId>) -> Result<()> {
        if candidates.is_empty() {
            return Ok(());
        }
        candidates.sort_by(|a, b| self.graph.key(*a).cmp(self.graph.key(*b)));
        let keys: Vec<EdgeKey> = candidates.iter().map(|&id| self.graph.key(id).clone()).collect();
        let out = luby_maximal_matching(&keys, &mut self.rng, self.config.c_luby, &mut self.meter)?;
        self.luby_rounds = self.luby_rounds.max(out.rounds);
        let chosen: Vec<EdgeId> = out.selected.into_iter().map(|i| candidates[i]).collect();
        self.commit_matches(&chosen, 0)?;
        for &id in &chosen {
            self.instr.epochs.open(self.graph.key(id).clone(), 0, 0, self.batches)?;
        }
        Ok(())
    }

    /// Lifts the endpoints of vertex-disjoint edges to `level` and matches
    /// the edges. Epochs are opened by the caller.
    fn commit_matches(&mut self, ids: &[EdgeId], level: Level) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        let mut pairs: Vec<(VertexId, Level)> = Vec::new();
        let mut leaving: BTreeMap<Level, Vec<VertexId>> = BTreeMap::new();
        for &id in ids {
            for &v in self.graph.key(id).vertices() {
                pairs.push((v, level));
                let lv = self.graph.level(v);
                if lv >= 0 && self.undecided[lv as usize].contains(&v) {
                    leaving.entry(lv).or_default().push(v);
                }
            }
        }
        pairs.sort_unstable();
        self.meter.seq_begin();
        self.meter.par_begin();
        for (lv, vs) in leaving {
            self.undecided[lv as usize].erase_batch(vs, &mut self.meter)?;
        }
        self.meter.end()?;
        self.graph.set_level_many(&pairs, &mut self.meter)?;
        for &id in ids {
            self.touch(id);
            self.graph.mark_matched(id);
        }
        self.meter.end()
    }

    // ---- random settle ----------------------------------------------------

    /// Lifts or thins out every vertex of `b` (a snapshot of `S_l`): when it
    /// returns, each one is either at level `l` or has
    /// `tilde_o(v, l) < alpha^l / 2`.
    fn grand_random_settle(&mut self, b: Vec<VertexId>, l: Level) -> Result<()> {
        if b.is_empty() {
            return Ok(());
        }
        let initial = b.len();
        let cap = self.config.settle_cap();
        let mut ctx = SettleCtx {
            b,
            e_prime: Vec::new(),
            in_e: FixedSet::default(),
            h: FixedMap::default(),
            h_inv: FixedMap::default(),
            matched: 0,
        };
        self.meter.seq_begin();
        self.recompute_e_prime(&mut ctx, l)?;
        let mut reps = 0u64;
        while !ctx.b.is_empty() {
            if reps as usize == cap {
                return Err(Error::SettleDivergence { level: l, cap });
            }
            reps += 1;
            self.subsettle(&mut ctx, l)?;
        }
        self.meter.end()?;

        let required = progress_requirement(initial, self.config.alpha());
        self.instr.progress_checks += 1;
        if ctx.matched < required {
            return Err(Error::ProgressViolation { level: l, initial, matched: ctx.matched, required });
        }
        self.instr.record_settle(l, reps, ctx.matched as u64);
        self.settles.push(SettleRecord { level: l, initial, repetitions: reps, matched: ctx.matched });
        Ok(())
    }

    fn subsettle(&mut self, ctx: &mut SettleCtx, l: Level) -> Result<()> {
        for i in 0..subsettle_phases(&self.config) {
            if ctx.b.is_empty() {
                return Ok(());
            }
            for _ in 0..phase_iterations(self.config.c_sub, ctx.e_prime.len()) {
                if ctx.b.is_empty() {
                    return Ok(());
                }
                self.subsubsettle(ctx, l, i)?;
            }
        }
        Ok(())
    }

    fn subsubsettle(&mut self, ctx: &mut SettleCtx, l: Level, phase: u64) -> Result<()> {
        let p = (2f64.powi(phase as i32) / (self.config.alpha() as f64).powi(l + 2)).min(1.0);
        self.meter.seq_begin();
        self.meter.charge(ctx.e_prime.len() as u64, 1)?;
        let marked: Vec<EdgeId> =
            bernoulli_indices(ctx.e_prime.len(), p, &mut self.rng).into_iter().map(|i| ctx.e_prime[i]).collect();
        if marked.is_empty() {
            return self.meter.end();
        }

        // Marked edges without a marked neighbor settle.
        let mut hits: FixedMap<VertexId, u32> = FixedMap::default();
        let mut work = 0;
        for &id in &marked {
            let key = self.graph.key(id);
            work += key.rank() as u64;
            for &v in key.vertices() {
                *hits.entry(v).or_default() += 1;
            }
        }
        self.meter.charge(work, self.meter.log_n())?;
        let settled: Vec<EdgeId> = marked
            .iter()
            .copied()
            .filter(|&id| self.graph.key(id).vertices().iter().all(|v| hits[v] == 1))
            .collect();

        if !settled.is_empty() {
            let marked: FixedSet<EdgeId> = marked.into_iter().collect();
            self.settle_edges(ctx, &settled, &marked, l)?;
            self.filter_b(ctx, l)?;
            self.recompute_e_prime(ctx, l)?;
        }
        self.meter.end()
    }

    /// Matches `settled` at level `l`, kicking out whatever their endpoints
    /// were matched to and parking unmarked edges that sampled one of their
    /// endpoints.
    fn settle_edges(&mut self, ctx: &mut SettleCtx, settled: &[EdgeId], marked: &FixedSet<EdgeId>, l: Level) -> Result<()> {
        let mut host: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
        for &e in settled {
            for &v in self.graph.key(e).vertices() {
                host.insert(v, e);
            }
        }

        // Kick the old matched edges. A settled edge that was already
        // matched is re-leveled: its epoch ends and a new one starts at `l`.
        let mut kicked: Vec<EdgeId> = host.keys().filter_map(|&u| self.graph.vertex(u).and_then(|s| s.matched_edge())).collect();
        kicked.sort_unstable();
        kicked.dedup();
        kicked.sort_by(|a, b| self.graph.key(*a).cmp(self.graph.key(*b)));

        self.meter.seq_begin();
        self.meter.par_begin();
        let mut evicted = Vec::new();
        let mut newly_undecided: BTreeMap<Level, Vec<VertexId>> = BTreeMap::new();
        for &k in &kicked {
            let key = self.graph.key(k).clone();
            self.instr.epochs.close(&key, Termination::Induced, self.batches)?;
            self.touch(k);
            self.graph.mark_unmatched(k);
            let flushed = self.graph.edge_mut(k).d_set.drain(&mut self.meter)?;
            self.flush_to_pending(flushed)?;
            if host.get(&key.vertices()[0]) == Some(&k) {
                continue;
            }
            for &w in key.vertices() {
                if !host.contains_key(&w) {
                    let lw = self.graph.level(w);
                    debug_assert!((0..l).contains(&lw));
                    newly_undecided.entry(lw).or_default().push(w);
                }
            }
            evicted.push(k);
        }
        for (lw, ws) in newly_undecided {
            self.undecided[lw as usize].insert_batch(ws, &mut self.meter)?;
        }
        self.meter.end()?;
        self.graph.detach_many(&evicted, &mut self.meter)?;
        let mut keys = Vec::with_capacity(evicted.len());
        for k in evicted {
            keys.push(self.graph.destroy_edge(k));
        }
        self.pending.insert_batch(keys, &mut self.meter)?;

        self.commit_matches(settled, l)?;

        // Park every unmarked edge of E' whose sampled endpoint is now
        // covered by a settled edge.
        let mut parked: Vec<(EdgeId, EdgeId)> = Vec::new();
        for (&u, &e) in &host {
            let Some(candidates) = ctx.h_inv.get(&u) else { continue };
            for &t in candidates {
                if !ctx.in_e.contains(&t) || marked.contains(&t) || !self.graph.is_live(t) {
                    continue;
                }
                let te = self.graph.edge(t);
                if te.is_active() && !te.is_matched() {
                    parked.push((t, e));
                }
            }
        }
        parked.sort_by(|a, b| self.graph.key(a.0).cmp(self.graph.key(b.0)));
        let ids: Vec<EdgeId> = parked.iter().map(|p| p.0).collect();
        self.graph.detach_many(&ids, &mut self.meter)?;
        self.meter.par_begin();
        for &(t, e) in &parked {
            self.graph.set_place(t, Place::TempDeleted(e));
            self.graph.edge_mut(e).d_set.insert(t, &mut self.meter)?;
        }
        self.meter.end()?;
        self.instr.epochs.note_temp_deletions(parked.len());

        for &e in settled {
            let d = self.graph.edge(e).d_set().len();
            self.instr.epochs.open(self.graph.key(e).clone(), l, d, self.batches)?;
        }
        ctx.matched += settled.len();
        self.meter.end()
    }

    /// Keeps the vertices still below `l` with `2 * tilde_o(v, l) >= alpha^l`.
    fn filter_b(&mut self, ctx: &mut SettleCtx, l: Level) -> Result<()> {
        let threshold = self.graph.alpha_pow(l);
        self.meter.par_begin();
        let mut kept = Vec::with_capacity(ctx.b.len());
        for &v in &ctx.b {
            if self.graph.level(v) < l && 2 * self.graph.tilde_o(v, l, &mut self.meter)? >= threshold {
                kept.push(v);
            }
        }
        self.meter.end()?;
        ctx.b = kept;
        Ok(())
    }

    /// Recomputes `E'` from `B`, keeping key order and sampling `h` for
    /// edges seen for the first time.
    fn recompute_e_prime(&mut self, ctx: &mut SettleCtx, l: Level) -> Result<()> {
        self.meter.par_begin();
        let mut fresh: FixedSet<EdgeId> = FixedSet::default();
        for &v in &ctx.b {
            fresh.extend(self.graph.tilde_owned(v, l, &mut self.meter)?);
        }
        self.meter.end()?;

        let mut next: Vec<EdgeId> = ctx.e_prime.iter().copied().filter(|id| fresh.contains(id)).collect();
        let mut unseen: Vec<EdgeId> = fresh.iter().copied().filter(|id| !ctx.h.contains_key(id)).collect();
        if !unseen.is_empty() {
            unseen.sort_by(|a, b| self.graph.key(*a).cmp(self.graph.key(*b)));
            self.meter.charge(unseen.len() as u64, 1)?;
            for &id in &unseen {
                let vs = self.graph.key(id).vertices();
                let u = vs[self.rng.gen_range(0..vs.len())];
                ctx.h.insert(id, u);
                ctx.h_inv.entry(u).or_default().push(id);
            }
            next.extend(unseen);
            next.sort_by(|a, b| self.graph.key(*a).cmp(self.graph.key(*b)));
        }
        ctx.e_prime = next;
        ctx.in_e = fresh;
        Ok(())
    }

    // ---- insertion and rebuild ---------------------------------------------

    fn insert_edges(&mut self, keys: &[EdgeKey]) -> Result<()> {
        if keys.is_empty() {
            return Ok(());
        }
        self.meter.seq_begin();
        let mut ids = Vec::with_capacity(keys.len());
        for key in keys {
            ids.push(self.graph.create_edge(key.clone())?);
        }
        self.meter.charge_round(ids.len() as u64)?;

        self.meter.par_begin();
        let mut free = Vec::new();
        for &id in &ids {
            let key = self.graph.key(id);
            self.meter.charge(key.rank() as u64, 1)?;
            if key.vertices().iter().all(|&v| !self.graph.is_matched_vertex(v)) {
                free.push(id);
            }
        }
        self.meter.end()?;
        self.match_free(free)?;
        self.graph.attach_many(&ids, &mut self.meter)?;
        self.meter.end()
    }

    /// Doubles `N` and rebuilds everything once vertices plus updates exceed it.
    fn maybe_rebuild(&mut self) -> Result<bool> {
        let counter = self.graph.vertex_count() as u64 + self.instr.updates;
        if counter <= self.config.capacity {
            return Ok(false);
        }
        let mut capacity = self.config.capacity;
        while capacity < counter {
            capacity *= 2;
        }

        let matched: Vec<EdgeId> = self.graph.edges().filter(|(_, e)| e.is_matched()).map(|(id, _)| id).collect();
        for id in matched {
            self.touch(id);
            self.instr.epochs.close(self.graph.key(id), Termination::Induced, self.batches)?;
        }
        self.absorb_level_log();
        let mut vertices: Vec<(VertexId, Level)> = self.graph.vertices().map(|(v, s)| (v, s.level())).collect();
        vertices.sort_unstable();
        for &(v, l) in &vertices {
            self.vertex_pre.entry(v).or_insert(l);
        }
        let keys = self.edge_keys();

        self.config.set_capacity(capacity);
        self.meter.set_capacity(capacity);
        self.graph = Leveling::new(&self.config);
        for (v, _) in vertices {
            self.graph.ensure_vertex(v);
        }
        self.undecided = (0..=self.config.levels()).map(|_| BatchSet::new()).collect();
        self.insert_edges(&keys)?;
        self.instr.rebuilds += 1;
        Ok(true)
    }
}
