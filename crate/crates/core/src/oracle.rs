//! Brute-force verification. Everything here is recomputed from the raw
//! edge list; none of the incremental counters are trusted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::edge::{EdgeId, EdgeKey, Level, VertexId};
use crate::engine::DynamicMatching;
use crate::error::{Error, Result};
use crate::leveling::Leveling;
#[cfg(test)]
use crate::leveling::Place;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// Owner is not a maximum-level endpoint, or an edge level is wrong.
    Ownership,
    /// `N`, `O` or `A` sets disagree with a recount.
    Incidence,
    RiseIndex,
    Matching,
    Invariant1,
    Invariant2,
    Maximality,
    /// Leftover per-batch state (undecided nodes, pending reinsertions).
    Lifecycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

fn violation(kind: ViolationKind, detail: String) -> Violation {
    Violation { kind, detail }
}

/// Audits the leveling structures: ownership, the `N`/`O`/`A` partition,
/// `A` sets below a vertex's level, and the rise index.
pub fn check_structure(graph: &Leveling) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let top = graph.levels();
    let level_of = |v: VertexId| graph.vertex(v).map_or(-1, |s| s.level());

    // Expected sets, rebuilt from the active edges.
    let mut incident: BTreeMap<VertexId, BTreeSet<EdgeId>> = BTreeMap::new();
    let mut owned: BTreeMap<VertexId, BTreeSet<EdgeId>> = BTreeMap::new();
    let mut a_sets: BTreeMap<(VertexId, Level), BTreeSet<EdgeId>> = BTreeMap::new();

    for (id, e) in graph.edges() {
        if !e.is_active() {
            continue;
        }
        let key = e.key();
        if !key.contains(e.owner()) {
            out.push(violation(Ownership, format!("{key} owned by non-endpoint {}", e.owner())));
            continue;
        }
        let max = key.vertices().iter().map(|&u| level_of(u)).max().expect("nonempty");
        if level_of(e.owner()) != max {
            out.push(violation(
                Ownership,
                format!("{key} owned by {} at level {}, max is {max}", e.owner(), level_of(e.owner())),
            ));
        }
        if !e.is_matched() && e.level() != max.max(0) {
            out.push(violation(Ownership, format!("unmatched {key} at level {}, expected {}", e.level(), max.max(0))));
        }
        if e.level() < 0 || e.level() > top {
            out.push(violation(Ownership, format!("{key} level {} outside [0, {top}]", e.level())));
            continue;
        }
        for &u in key.vertices() {
            incident.entry(u).or_default().insert(id);
            if u == e.owner() {
                owned.entry(u).or_default().insert(id);
            } else {
                a_sets.entry((u, e.level())).or_default().insert(id);
            }
        }
    }

    let empty = BTreeSet::new();
    for (v, s) in graph.vertices() {
        let got: BTreeSet<EdgeId> = s.incident().iter().copied().collect();
        if &got != incident.get(&v).unwrap_or(&empty) {
            out.push(violation(Incidence, format!("N({v}) disagrees with recount")));
        }
        let got: BTreeSet<EdgeId> = s.owned().iter().copied().collect();
        if &got != owned.get(&v).unwrap_or(&empty) {
            out.push(violation(Incidence, format!("O({v}) disagrees with recount")));
        }
        for l in 0..=top {
            let got: BTreeSet<EdgeId> = s.a_set(l).iter().copied().collect();
            let want = a_sets.get(&(v, l)).unwrap_or(&empty);
            if &got != want {
                out.push(violation(Incidence, format!("A({v}, {l}) disagrees with recount")));
            }
            if l < s.level() && !got.is_empty() {
                out.push(violation(Incidence, format!("A({v}, {l}) nonempty below level {}", s.level())));
            }
        }

        // Rise index, from the recounted sets only.
        let from = s.level().max(0);
        for l in 0..=top {
            let recount = owned.get(&v).map_or(0, |o| o.len())
                + (from..l).map(|x| a_sets.get(&(v, x)).map_or(0, |a| a.len())).sum::<usize>();
            let due = l > s.level() && recount as u64 >= graph.alpha_pow(l);
            if due != graph.rise_set(l).contains(&v) {
                out.push(violation(
                    RiseIndex,
                    format!("S_{l} membership of {v} is {}, expected {due}", !due),
                ));
            }
        }
    }
    for l in 0..=top {
        for &v in graph.rise_set(l).iter() {
            if graph.vertex(v).is_none() {
                out.push(violation(RiseIndex, format!("S_{l} holds unknown vertex {v}")));
            }
        }
    }
    out
}

/// Full between-batch audit: structure, matching consistency, both level
/// invariants, temporary deletions, and maximality.
pub fn check_state(engine: &DynamicMatching) -> Vec<Violation> {
    use ViolationKind::*;
    let graph = engine.graph();
    let mut out = check_structure(graph);
    let level_of = |v: VertexId| graph.vertex(v).map_or(-1, |s| s.level());

    // Matching consistency and Invariant 1.
    for (v, s) in graph.vertices() {
        match s.matched_edge() {
            Some(id) => {
                let live = graph.is_live(id).then(|| graph.edge(id));
                match live {
                    Some(e) if e.is_matched() && e.key().contains(v) => {}
                    _ => out.push(violation(Matching, format!("M({v}) points at a non-matched or foreign edge"))),
                }
                if s.level() < 0 {
                    out.push(violation(Invariant1, format!("matched vertex {v} at level -1")));
                }
            }
            None => {
                if s.level() != -1 {
                    out.push(violation(Invariant1, format!("unmatched vertex {v} at level {}", s.level())));
                }
            }
        }
    }

    let mut containing: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    for (id, e) in graph.edges() {
        let key = e.key();
        if e.is_matched() {
            if !e.is_active() {
                out.push(violation(Matching, format!("matched {key} is not active")));
            }
            for &u in key.vertices() {
                if graph.vertex(u).and_then(|s| s.matched_edge()) != Some(id) {
                    out.push(violation(Matching, format!("M({u}) is not {key}")));
                }
                if level_of(u) != e.level() {
                    out.push(violation(
                        Invariant1,
                        format!("matched {key} at level {} but endpoint {u} at {}", e.level(), level_of(u)),
                    ));
                }
            }
        } else if e.is_active() {
            let max = key.vertices().iter().map(|&u| level_of(u)).max().expect("nonempty");
            if e.level() != max {
                out.push(violation(Invariant1, format!("unmatched {key} at level {}, max endpoint {max}", e.level())));
            }
            if !e.d_set().is_empty() {
                out.push(violation(Invariant2, format!("unmatched {key} holds temporarily deleted edges")));
            }
        } else if e.temp_parent().is_none() {
            out.push(violation(Lifecycle, format!("{key} is detached between batches")));
        }
        for &t in e.d_set().iter() {
            containing.entry(t).or_default().push(id);
        }
    }

    // Invariant 2: each temporarily deleted edge sits in exactly one D(e) of
    // a matched edge it touches.
    let mut parked: BTreeSet<EdgeId> = containing.keys().copied().collect();
    parked.extend(graph.edges().filter(|(_, e)| e.temp_parent().is_some()).map(|(id, _)| id));
    for t in parked {
        let Some(te) = graph.is_live(t).then(|| graph.edge(t)) else {
            out.push(violation(Invariant2, format!("D-set references a dead edge slot {}", t.0)));
            continue;
        };
        let holders = containing.get(&t).map_or(&[][..], |h| h.as_slice());
        let ok = match te.temp_parent() {
            Some(p) => {
                let pe = graph.edge(p);
                holders == [p] && pe.is_matched() && pe.key().intersects(te.key())
            }
            None => false,
        };
        if !ok {
            out.push(violation(
                Invariant2,
                format!("{} is held by {} D-sets and parented inconsistently", te.key(), holders.len()),
            ));
        }
    }

    if engine.undecided_count() > 0 {
        out.push(violation(Lifecycle, format!("{} undecided vertices remain", engine.undecided_count())));
    }
    if engine.pending_count() > 0 {
        out.push(violation(Lifecycle, format!("{} reinsertions remain pending", engine.pending_count())));
    }

    let active: Vec<EdgeKey> = graph.edges().filter(|(_, e)| e.is_active()).map(|(_, e)| e.key().clone()).collect();
    let matching: Vec<EdgeKey> = graph.edges().filter(|(_, e)| e.is_matched()).map(|(_, e)| e.key().clone()).collect();
    out.extend(check_maximality(&active, &matching));
    out
}

/// Reports every edge whose endpoints are all unmatched.
pub fn check_maximality(edges: &[EdgeKey], matching: &[EdgeKey]) -> Vec<Violation> {
    let covered: BTreeSet<VertexId> = matching.iter().flat_map(|m| m.vertices().iter().copied()).collect();
    edges
        .iter()
        .filter(|e| !e.vertices().iter().any(|v| covered.contains(v)))
        .map(|e| violation(ViolationKind::Maximality, format!("{e} has no matched endpoint")))
        .collect()
}

pub const EXACT_MATCHING_LIMIT: usize = 24;

/// Maximum matching size by include/exclude branch and bound.
pub fn exact_maximum_matching(edges: &[EdgeKey]) -> Result<usize> {
    if edges.len() > EXACT_MATCHING_LIMIT {
        return Err(Error::TooLarge { got: edges.len(), max: EXACT_MATCHING_LIMIT });
    }
    let mut ids: BTreeMap<VertexId, usize> = BTreeMap::new();
    let compact: Vec<Vec<usize>> = edges
        .iter()
        .map(|e| {
            e.vertices()
                .iter()
                .map(|v| {
                    let n = ids.len();
                    *ids.entry(*v).or_insert(n)
                })
                .collect()
        })
        .collect();

    fn search(i: usize, edges: &[Vec<usize>], used: &mut [bool], size: usize, best: &mut usize) {
        if size + (edges.len() - i) <= *best {
            return;
        }
        if i == edges.len() {
            *best = size;
            return;
        }
        let e = &edges[i];
        if e.iter().all(|&v| !used[v]) {
            e.iter().for_each(|&v| used[v] = true);
            search(i + 1, edges, used, size + 1, best);
            e.iter().for_each(|&v| used[v] = false);
        }
        search(i + 1, edges, used, size, best);
    }

    let mut used = vec![false; ids.len()];
    let mut best = 0;
    search(0, &compact, &mut used, 0, &mut best);
    Ok(best)
}

/// Files one temporarily deleted edge under a second matched edge.
#[cfg(test)]
pub(crate) fn inject_double_parent(engine: &mut DynamicMatching) -> bool {
    let graph = engine.graph_mut();
    let parked: Vec<(EdgeId, EdgeId)> = graph.edges().filter_map(|(id, e)| e.temp_parent().map(|p| (id, p))).collect();
    let matched: Vec<EdgeId> = graph.edges().filter(|(_, e)| e.is_matched()).map(|(id, _)| id).collect();
    for (t, p) in parked {
        if let Some(&other) = matched.iter().find(|&&m| m != p) {
            let mut meter = crate::cost::CostMeter::new(1 << 10, Default::default());
            meter.begin_batch();
            graph.edge_mut(other).d_set.insert(t, &mut meter).expect("insert");
            debug_assert!(matches!(graph.edge(t).place, Place::TempDeleted(_)));
            return true;
        }
    }
    false
}
