//! Leveling scheme: vertex and edge levels, edge ownership, the per-level
//! `A(v, l)` sets and the rise index `S_l`.
//!
//! Every active edge is owned by one of its maximum-level endpoints. An
//! unmatched edge sits at the level of its owner (clamped to 0); every
//! other endpoint `u` files it under `A(u, level(e))`. The quantity
//! `tilde_o(v, l)` counts the edges `v` would own if it alone rose to `l`,
//! and `S_l` holds the vertices below `l` for which that count reaches
//! `alpha^l`.
//!
//! Matching state lives here too (`M(v)`, `M(e)`, `D(e)`), but the rules
//! for changing it belong to the update engine.

use crate::batch_set::{BatchSet, FixedMap};
use crate::config::{ceil_log2, Config};
use crate::cost::CostMeter;
use crate::edge::{EdgeId, EdgeKey, EdgeLocation, Level, VertexId};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct VertexState {
    pub(crate) level: Level,
    pub(crate) matched: Option<EdgeId>,
    pub(crate) owned: BatchSet<EdgeId>,
    pub(crate) incident: BatchSet<EdgeId>,
    /// `A(v, l)` for `l` in `[0, L]`; entries below `level` stay empty.
    pub(crate) a_sets: Vec<BatchSet<EdgeId>>,
}

impl VertexState {
    fn new(levels: Level) -> Self {
        Self {
            level: -1,
            matched: None,
            owned: BatchSet::new(),
            incident: BatchSet::new(),
            a_sets: (0..=levels).map(|_| BatchSet::new()).collect(),
        }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn matched_edge(&self) -> Option<EdgeId> {
        self.matched
    }

    pub fn owned(&self) -> &BatchSet<EdgeId> {
        &self.owned
    }

    pub fn incident(&self) -> &BatchSet<EdgeId> {
        &self.incident
    }

    pub fn a_set(&self, level: Level) -> &BatchSet<EdgeId> {
        &self.a_sets[level as usize]
    }

    pub fn a_count(&self, level: Level) -> usize {
        self.a_sets[level as usize].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Place {
    Active,
    TempDeleted(EdgeId),
    /// Known but outside every live structure (fresh, pending reinsertion).
    Detached,
}

#[derive(Debug, Clone)]
pub struct EdgeState {
    pub(crate) key: EdgeKey,
    pub(crate) level: Level,
    pub(crate) owner: VertexId,
    pub(crate) matched: bool,
    pub(crate) d_set: BatchSet<EdgeId>,
    pub(crate) place: Place,
}

impl EdgeState {
    pub fn key(&self) -> &EdgeKey {
        &self.key
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn owner(&self) -> VertexId {
        self.owner
    }

    pub fn is_matched(&self) -> bool {
        self.matched
    }

    pub fn d_set(&self) -> &BatchSet<EdgeId> {
        &self.d_set
    }

    pub fn is_active(&self) -> bool {
        self.place == Place::Active
    }

    pub fn temp_parent(&self) -> Option<EdgeId> {
        match self.place {
            Place::TempDeleted(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Leveling {
    levels: Level,
    alpha_pow: Vec<u64>,
    vertices: FixedMap<VertexId, VertexState>,
    edges: Vec<Option<EdgeState>>,
    free_ids: Vec<u32>,
    index: FixedMap<EdgeKey, EdgeId>,
    rise: Vec<BatchSet<VertexId>>,
    dirty: Vec<VertexId>,
    /// `(vertex, previous level)` for every level change, drained by the engine.
    level_log: Vec<(VertexId, Level)>,
}

impl Leveling {
    pub fn new(config: &Config) -> Self {
        let levels = config.levels();
        Self {
            levels,
            alpha_pow: (0..=levels + 1).map(|l| config.alpha_pow(l)).collect(),
            vertices: FixedMap::default(),
            edges: Vec::new(),
            free_ids: Vec::new(),
            index: FixedMap::default(),
            rise: (0..=levels).map(|_| BatchSet::new()).collect(),
            dirty: Vec::new(),
            level_log: Vec::new(),
        }
    }

    /// `L`, the top level.
    pub fn levels(&self) -> Level {
        self.levels
    }

    pub fn alpha_pow(&self, level: Level) -> u64 {
        self.alpha_pow[level as usize]
    }

    // ---- lookups -------------------------------------------------------

    pub fn vertex(&self, v: VertexId) -> Option<&VertexState> {
        self.vertices.get(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &VertexState)> {
        self.vertices.iter().map(|(&v, s)| (v, s))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Level of `v`; unknown vertices are at `-1`.
    pub fn level(&self, v: VertexId) -> Level {
        self.vertices.get(&v).map_or(-1, |s| s.level)
    }

    pub fn is_matched_vertex(&self, v: VertexId) -> bool {
        self.vertices.get(&v).is_some_and(|s| s.matched.is_some())
    }

    pub fn edge(&self, id: EdgeId) -> &EdgeState {
        self.edges[id.index()].as_ref().expect("live edge id")
    }

    pub(crate) fn edge_mut(&mut self, id: EdgeId) -> &mut EdgeState {
        self.edges[id.index()].as_mut().expect("live edge id")
    }

    pub fn is_live(&self, id: EdgeId) -> bool {
        self.edges.get(id.index()).is_some_and(|e| e.is_some())
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &EdgeState)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (EdgeId(i as u32), e)))
    }

    pub fn id_of(&self, key: &EdgeKey) -> Option<EdgeId> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: EdgeId) -> &EdgeKey {
        &self.edge(id).key
    }

    pub fn location(&self, key: &EdgeKey) -> EdgeLocation {
        match self.id_of(key).map(|id| self.edge(id).place) {
            Some(Place::Active) => EdgeLocation::Active,
            Some(Place::TempDeleted(p)) => EdgeLocation::TempDeleted(self.key(p).clone()),
            Some(Place::Detached) | None => EdgeLocation::Absent,
        }
    }

    pub fn rise_set(&self, level: Level) -> &BatchSet<VertexId> {
        &self.rise[level as usize]
    }

    pub(crate) fn drain_level_log(&mut self) -> Vec<(VertexId, Level)> {
        std::mem::take(&mut self.level_log)
    }

    /// Maximum-level endpoint of `key`, smallest id on ties.
    pub fn max_level_endpoint(&self, key: &EdgeKey) -> VertexId {
        let mut best = key.vertices()[0];
        let mut best_level = self.level(best);
        for &u in &key.vertices()[1..] {
            let l = self.level(u);
            if l > best_level {
                best = u;
                best_level = l;
            }
        }
        best
    }

    // ---- derived quantities -------------------------------------------

    fn check_rise_level(&self, v: VertexId, level: Level) -> Result<()> {
        let current = self.level(v);
        if level <= current || level > self.levels + 1 {
            return Err(Error::LevelOutOfRange { vertex: v, level, current });
        }
        Ok(())
    }

    fn tilde_o_unchecked(&self, v: VertexId, level: Level) -> u64 {
        let Some(s) = self.vertices.get(&v) else { return 0 };
        let from = s.level.max(0);
        let a: usize = (from..level).map(|l| s.a_sets[l as usize].len()).sum();
        (s.owned.len() + a) as u64
    }

    /// Number of edges `v` would own if raised to `level` alone:
    /// `o_v + sum_{l' = max(level(v), 0)}^{level - 1} a_{v, l'}`.
    pub fn tilde_o(&self, v: VertexId, level: Level, meter: &mut CostMeter) -> Result<u64> {
        self.check_rise_level(v, level)?;
        meter.charge(self.levels as u64 + 1, ceil_log2(self.levels as u64 + 1).max(1))?;
        Ok(self.tilde_o_unchecked(v, level))
    }

    /// Materializes `O(v)` together with `A(v, l')` for `max(level(v), 0) <= l' < level`.
    pub fn tilde_owned(&self, v: VertexId, level: Level, meter: &mut CostMeter) -> Result<Vec<EdgeId>> {
        self.check_rise_level(v, level)?;
        let Some(s) = self.vertices.get(&v) else { return Ok(Vec::new()) };
        meter.par_begin();
        let mut out = s.owned.retrieve(meter)?;
        for l in s.level.max(0)..level {
            out.extend(s.a_sets[l as usize].retrieve(meter)?);
        }
        meter.end()?;
        Ok(out)
    }

    // ---- vertex and edge lifecycle ------------------------------------

    pub(crate) fn ensure_vertex(&mut self, v: VertexId) {
        let levels = self.levels;
        self.vertices.entry(v).or_insert_with(|| VertexState::new(levels));
    }

    /// Registers `key` as a detached edge slot.
    pub(crate) fn create_edge(&mut self, key: EdgeKey) -> Result<EdgeId> {
        if self.index.contains_key(&key) {
            return Err(Error::DuplicateEdge(key));
        }
        for &v in key.vertices() {
            self.ensure_vertex(v);
        }
        let state = EdgeState {
            owner: key.vertices()[0],
            key: key.clone(),
            level: 0,
            matched: false,
            d_set: BatchSet::new(),
            place: Place::Detached,
        };
        let id = match self.free_ids.pop() {
            Some(i) => {
                self.edges[i as usize] = Some(state);
                EdgeId(i)
            }
            None => {
                self.edges.push(Some(state));
                EdgeId(self.edges.len() as u32 - 1)
            }
        };
        self.index.insert(key, id);
        Ok(id)
    }

    /// Forgets a detached or temporarily deleted edge entirely.
    pub(crate) fn destroy_edge(&mut self, id: EdgeId) -> EdgeKey {
        let state = self.edges[id.index()].take().expect("live edge id");
        debug_assert!(state.place != Place::Active && !state.matched && state.d_set.is_empty());
        self.index.remove(&state.key);
        self.free_ids.push(id.0);
        state.key
    }

    pub(crate) fn set_place(&mut self, id: EdgeId, place: Place) {
        self.edge_mut(id).place = place;
    }

    /// Erases `id` from `O(owner)` and `A(u, level(e))` of every other endpoint.
    fn unplace(&mut self, id: EdgeId, meter: &mut CostMeter) -> Result<()> {
        let e = self.edges[id.index()].as_ref().expect("live edge id");
        let (owner, level) = (e.owner, e.level);
        for &u in e.key.vertices() {
            let s = self.vertices.get_mut(&u).expect("endpoint exists");
            if u == owner {
                s.owned.erase(id, meter)?;
            } else {
                s.a_sets[level as usize].erase(id, meter)?;
            }
            self.dirty.push(u);
        }
        Ok(())
    }

    /// Inverse of [`Self::unplace`] for the current owner and level.
    fn place(&mut self, id: EdgeId, meter: &mut CostMeter) -> Result<()> {
        let e = self.edges[id.index()].as_ref().expect("live edge id");
        let (owner, level) = (e.owner, e.level);
        for &u in e.key.vertices() {
            let s = self.vertices.get_mut(&u).expect("endpoint exists");
            if u == owner {
                s.owned.insert(id, meter)?;
            } else {
                s.a_sets[level as usize].insert(id, meter)?;
            }
            self.dirty.push(u);
        }
        Ok(())
    }

    /// Inserts detached edges into `N`, `O` and `A`, each owned by its
    /// maximum-level endpoint.
    pub(crate) fn attach_many(&mut self, ids: &[EdgeId], meter: &mut CostMeter) -> Result<()> {
        meter.par_begin();
        for &id in ids {
            let owner = self.max_level_endpoint(&self.edge(id).key);
            let level = self.level(owner).max(0);
            let e = self.edge_mut(id);
            debug_assert_eq!(e.place, Place::Detached);
            e.owner = owner;
            e.level = level;
            e.place = Place::Active;
            let key = e.key.clone();
            meter.charge(key.rank() as u64, 1)?;
            for &u in key.vertices() {
                self.vertices.get_mut(&u).expect("endpoint exists").incident.insert(id, meter)?;
            }
            self.place(id, meter)?;
        }
        meter.end()?;
        self.refresh_rise(meter)
    }

    /// Removes active edges from every live structure, leaving them detached.
    pub(crate) fn detach_many(&mut self, ids: &[EdgeId], meter: &mut CostMeter) -> Result<()> {
        meter.par_begin();
        for &id in ids {
            let e = self.edge(id);
            if e.place != Place::Active {
                return Err(Error::NotActive(e.key.clone()));
            }
            let key = e.key.clone();
            self.unplace(id, meter)?;
            for &u in key.vertices() {
                self.vertices.get_mut(&u).expect("endpoint exists").incident.erase(id, meter)?;
            }
            self.edge_mut(id).place = Place::Detached;
        }
        meter.end()?;
        self.refresh_rise(meter)
    }

    // ---- matching bookkeeping -----------------------------------------

    pub(crate) fn mark_matched(&mut self, id: EdgeId) {
        let key = self.edge(id).key.clone();
        for &u in key.vertices() {
            let s = self.vertices.get_mut(&u).expect("endpoint exists");
            debug_assert!(s.matched.is_none(), "vertex {u} already matched");
            s.matched = Some(id);
        }
        self.edge_mut(id).matched = true;
    }

    pub(crate) fn mark_unmatched(&mut self, id: EdgeId) {
        let key = self.edge(id).key.clone();
        for &u in key.vertices() {
            let s = self.vertices.get_mut(&u).expect("endpoint exists");
            debug_assert_eq!(s.matched, Some(id));
            s.matched = None;
        }
        self.edge_mut(id).matched = false;
    }

    // ---- set-owner ------------------------------------------------------

    fn set_owner_inner(&mut self, id: EdgeId, v: VertexId, meter: &mut CostMeter) -> Result<()> {
        let e = self.edge(id);
        if !e.key.contains(v) {
            return Err(Error::NotEndpoint { edge: e.key.clone(), vertex: v });
        }
        if e.place != Place::Active {
            return Err(Error::NotActive(e.key.clone()));
        }
        let lv = self.level(v);
        if e.key.vertices().iter().any(|&u| self.level(u) > lv) {
            return Err(Error::NotMaxLevel { edge: e.key.clone(), vertex: v });
        }
        let new_level = lv.max(0);
        if e.owner == v && e.level == new_level {
            return Ok(());
        }
        meter.seq_begin();
        meter.par_begin();
        self.unplace(id, meter)?;
        meter.end()?;
        let e = self.edge_mut(id);
        e.owner = v;
        e.level = new_level;
        meter.par_begin();
        self.place(id, meter)?;
        meter.end()?;
        meter.end()
    }

    /// Makes `v` the owner of `id`. `v` must be a maximum-level endpoint.
    pub fn set_owner(&mut self, id: EdgeId, v: VertexId, meter: &mut CostMeter) -> Result<()> {
        self.set_owner_inner(id, v, meter)?;
        self.refresh_rise(meter)
    }

    /// Applies a round of `set-owner` calls in one parallel step.
    pub fn set_owner_many(&mut self, pairs: &[(EdgeId, VertexId)], meter: &mut CostMeter) -> Result<()> {
        meter.par_begin();
        for &(id, v) in pairs {
            self.set_owner_inner(id, v, meter)?;
        }
        meter.end()?;
        self.refresh_rise(meter)
    }

    // ---- set-level ------------------------------------------------------

    fn set_level_inner(&mut self, v: VertexId, level: Level, meter: &mut CostMeter) -> Result<()> {
        let old = self.level(v);
        if !(-1..=self.levels).contains(&level) {
            return Err(Error::LevelOutOfRange { vertex: v, level, current: old });
        }
        if old == level {
            return Ok(());
        }
        self.ensure_vertex(v);
        self.vertices.get_mut(&v).expect("just ensured").level = level;
        self.level_log.push((v, old));
        self.dirty.push(v);

        meter.seq_begin();
        // Inspecting every A(v, l) is O(L).
        meter.charge(self.levels as u64 + 1, 1)?;

        // Re-own the previously owned edges under the new level of v.
        let owned = self.vertices[&v].owned.retrieve(meter)?;
        let pairs: Vec<(EdgeId, VertexId)> = owned
            .into_iter()
            .map(|id| (id, self.max_level_endpoint(&self.edge(id).key)))
            .collect();
        meter.par_begin();
        for (id, w) in pairs {
            self.set_owner_inner(id, w, meter)?;
        }
        meter.end()?;

        // On a rise, v takes over every edge it now strictly dominates.
        if level > old {
            meter.par_begin();
            for l in old.max(0)..level {
                let taken = self.vertices[&v].a_sets[l as usize].retrieve(meter)?;
                for id in taken {
                    self.set_owner_inner(id, v, meter)?;
                }
            }
            meter.end()?;
        }
        meter.end()
    }

    pub fn set_level(&mut self, v: VertexId, level: Level, meter: &mut CostMeter) -> Result<()> {
        self.set_level_inner(v, level, meter)?;
        self.refresh_rise(meter)
    }

    /// Applies level changes to pairwise-distinct vertices in one parallel step.
    /// Pairs are applied in the given order.
    pub fn set_level_many(&mut self, pairs: &[(VertexId, Level)], meter: &mut CostMeter) -> Result<()> {
        debug_assert!({
            let mut vs: Vec<_> = pairs.iter().map(|p| p.0).collect();
            vs.sort_unstable();
            vs.windows(2).all(|w| w[0] != w[1])
        });
        meter.par_begin();
        for &(v, l) in pairs {
            self.set_level_inner(v, l, meter)?;
        }
        meter.end()?;
        self.refresh_rise(meter)
    }

    // ---- rise index -------------------------------------------------------

    /// Re-evaluates `S_l` membership at every level for all touched vertices.
    fn refresh_rise(&mut self, meter: &mut CostMeter) -> Result<()> {
        if self.dirty.is_empty() {
            return Ok(());
        }
        let mut dirty = std::mem::take(&mut self.dirty);
        dirty.sort_unstable();
        dirty.dedup();
        meter.par_begin();
        for v in dirty {
            meter.charge(self.levels as u64 + 1, ceil_log2(self.levels as u64 + 1).max(1))?;
            let s = &self.vertices[&v];
            let mut acc = s.owned.len() as u64;
            let from = s.level.max(0);
            for l in 0..=self.levels {
                let due = l > s.level && acc >= self.alpha_pow[l as usize];
                let present = self.rise[l as usize].contains(&v);
                if due && !present {
                    self.rise[l as usize].insert(v, meter)?;
                } else if !due && present {
                    self.rise[l as usize].erase(v, meter)?;
                }
                if l >= from {
                    acc += s.a_sets[l as usize].len() as u64;
                }
            }
        }
        meter.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CostConstants;
    use crate::edge::canonical_edge;
    use crate::oracle::check_structure;

    fn setup() -> (Leveling, CostMeter) {
        let config = Config::with_capacity(2, 1 << 12, 0).unwrap();
        let mut meter = CostMeter::new(config.capacity, CostConstants::default());
        meter.begin_batch();
        (Leveling::new(&config), meter)
    }

    fn add(lv: &mut Leveling, m: &mut CostMeter, vs: &[u32]) -> EdgeId {
        let id = lv.create_edge(canonical_edge(vs, 2).unwrap()).unwrap();
        lv.attach_many(&[id], m).unwrap();
        id
    }

    fn levels(lv: &mut Leveling, m: &mut CostMeter, pairs: &[(u32, Level)]) {
        for &(v, l) in pairs {
            lv.ensure_vertex(v);
            lv.set_level(v, l, m).unwrap();
        }
    }

    #[test]
    fn set_owner_basic() {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0), (2, 0)]);
        let e = add(&mut lv, &mut m, &[1, 2]);
        lv.set_owner(e, 2, &mut m).unwrap();
        lv.set_owner(e, 1, &mut m).unwrap();
        assert_eq!(lv.edge(e).owner(), 1);
        assert!(lv.vertex(2).unwrap().a_set(0).contains(&e));
        assert!(!lv.vertex(1).unwrap().a_set(0).contains(&e));
        assert!(check_structure(&lv).is_empty());
    }

    #[test]
    fn set_owner_is_idempotent() {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0), (2, 0)]);
        let e = add(&mut lv, &mut m, &[1, 2]);
        lv.set_owner(e, 1, &mut m).unwrap();
        let before = (lv.edge(e).owner(), lv.edge(e).level(), lv.vertex(2).unwrap().a_count(0));
        lv.set_owner(e, 1, &mut m).unwrap();
        let after = (lv.edge(e).owner(), lv.edge(e).level(), lv.vertex(2).unwrap().a_count(0));
        assert_eq!(before, after);
    }

    #[test]
    fn set_owner_rejects_lower_endpoint() {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0)]);
        let e = add(&mut lv, &mut m, &[1, 2]);
        levels(&mut lv, &mut m, &[(2, 3)]);
        assert!(matches!(lv.set_owner(e, 1, &mut m), Err(Error::NotMaxLevel { .. })));
        assert!(matches!(lv.set_owner(e, 7, &mut m), Err(Error::NotEndpoint { .. })));
    }

    #[test]
    fn set_level_noop_on_isolated_vertex() {
        let (mut lv, mut m) = setup();
        lv.ensure_vertex(5);
        lv.set_level(5, -1, &mut m).unwrap();
        assert_eq!(lv.level(5), -1);
        assert!(lv.vertex(5).unwrap().owned().is_empty());
    }

    #[test]
    fn lowering_hands_edge_to_higher_endpoint() {
        // v = 1 owns e = (1, 2) while 2 already sits at level 2.
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0)]);
        let e = add(&mut lv, &mut m, &[1, 2]);
        lv.vertices.get_mut(&2).unwrap().level = 2;
        lv.set_level(1, -1, &mut m).unwrap();
        assert_eq!(lv.edge(e).owner(), 2);
        assert_eq!(lv.edge(e).level(), 2);
        assert!(lv.vertex(1).unwrap().a_set(2).contains(&e));
        assert!(check_structure(&lv).is_empty());
    }

    #[test]
    fn rising_takes_over_a_set() {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0), (2, 0)]);
        let e = add(&mut lv, &mut m, &[1, 2]);
        assert_eq!(lv.edge(e).owner(), 1);
        assert!(lv.vertex(2).unwrap().a_set(0).contains(&e));
        lv.set_level(2, 1, &mut m).unwrap();
        assert_eq!(lv.edge(e).owner(), 2);
        assert_eq!(lv.edge(e).level(), 1);
        assert!(lv.vertex(1).unwrap().a_set(1).contains(&e));
        assert!(check_structure(&lv).is_empty());
    }

    /// v = 10 at level 0 owning one edge, with a_{v,0} = 2 and a_{v,1} = 4.
    fn prefix_state() -> (Leveling, CostMeter) {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0), (2, 0), (3, 1), (4, 1), (5, 1), (6, 1), (10, 0)]);
        for u in [1, 2, 3, 4, 5, 6, 11] {
            add(&mut lv, &mut m, &[u, 10]);
        }
        (lv, m)
    }

    #[test]
    fn tilde_o_prefix_sum() {
        let (lv, mut m) = prefix_state();
        let s = lv.vertex(10).unwrap();
        assert_eq!((s.owned().len(), s.a_count(0), s.a_count(1)), (1, 2, 4));
        // level 1: o_v + a_{v,0}
        assert_eq!(lv.tilde_o(10, 1, &mut m).unwrap(), 3);
        // level 2: o_v + a_{v,0} + a_{v,1}
        assert_eq!(lv.tilde_o(10, 2, &mut m).unwrap(), 7);
        assert!(matches!(lv.tilde_o(10, 0, &mut m), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn tilde_o_without_a_sets() {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0)]);
        for u in [2, 3, 4] {
            add(&mut lv, &mut m, &[1, u]);
        }
        assert_eq!(lv.tilde_o(1, 1, &mut m).unwrap(), 3);
    }

    #[test]
    fn tilde_owned_union() {
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(1, 0), (2, 0), (3, 0)]);
        let e1 = add(&mut lv, &mut m, &[2, 5]);
        let e2 = add(&mut lv, &mut m, &[1, 2]);
        assert_eq!(lv.edge(e2).owner(), 1);
        let mut got = lv.tilde_owned(2, 1, &mut m).unwrap();
        got.sort();
        assert_eq!(got, vec![e1, e2]);
        assert_eq!(got.len() as u64, lv.tilde_o(2, 1, &mut m).unwrap());
    }

    #[test]
    fn rise_index_tracks_threshold() {
        // alpha = 8: a vertex below level 1 owning 8 edges belongs to S_1.
        let (mut lv, mut m) = setup();
        levels(&mut lv, &mut m, &[(0, 0)]);
        for u in 1..8 {
            add(&mut lv, &mut m, &[0, u]);
        }
        assert!(!lv.rise_set(1).contains(&0));
        let last = add(&mut lv, &mut m, &[0, 8]);
        assert!(lv.rise_set(1).contains(&0));
        lv.detach_many(&[last], &mut m).unwrap();
        assert!(!lv.rise_set(1).contains(&0));
        assert!(check_structure(&lv).is_empty());
    }

    #[test]
    fn level_round_trip_restores_audit() {
        let (mut lv, mut m) = prefix_state();
        assert!(check_structure(&lv).is_empty());
        lv.set_level(10, 2, &mut m).unwrap();
        assert!(check_structure(&lv).is_empty());
        lv.set_level(10, 0, &mut m).unwrap();
        assert!(check_structure(&lv).is_empty());
        assert_eq!(lv.tilde_o(10, 2, &mut m).unwrap(), 7);
    }
}
