//! Unordered set with batched mutation and the parallel-dictionary cost
//! contract: every non-empty `insert`, `erase` or `retrieve` call is one
//! round of depth `ceil(log2 N)` and work `k * ceil(log2 N)`.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{BuildHasherDefault, Hash};

use crate::cost::CostMeter;
use crate::error::{Error, Result};

/// Fixed-key hasher so iteration order depends only on the operation history.
pub(crate) type FixedState = BuildHasherDefault<DefaultHasher>;
pub(crate) type FixedMap<K, V> = std::collections::HashMap<K, V, FixedState>;
pub(crate) type FixedSet<T> = HashSet<T, FixedState>;

#[derive(Debug, Clone)]
pub struct BatchSet<T> {
    items: FixedSet<T>,
}

impl<T> Default for BatchSet<T> {
    fn default() -> Self {
        Self { items: FixedSet::default() }
    }
}

impl<T: Eq + Hash + Clone> BatchSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_batch<I>(&mut self, items: I, meter: &mut CostMeter) -> Result<()>
    where
        I: IntoIterator<Item = T>,
    {
        let mut k = 0u64;
        for item in items {
            self.items.insert(item);
            k += 1;
        }
        meter.charge_round(k)
    }

    /// Erases every item; all of them must be present.
    pub fn erase_batch<I>(&mut self, items: I, meter: &mut CostMeter) -> Result<()>
    where
        I: IntoIterator<Item = T>,
    {
        let mut k = 0u64;
        for item in items {
            if !self.items.remove(&item) {
                return Err(Error::EraseMissing);
            }
            k += 1;
        }
        meter.charge_round(k)
    }

    pub fn insert(&mut self, item: T, meter: &mut CostMeter) -> Result<()> {
        self.insert_batch(std::iter::once(item), meter)
    }

    pub fn erase(&mut self, item: T, meter: &mut CostMeter) -> Result<()> {
        self.erase_batch(std::iter::once(item), meter)
    }

    pub fn retrieve(&self, meter: &mut CostMeter) -> Result<Vec<T>> {
        meter.charge_round(self.items.len() as u64)?;
        Ok(self.items.iter().cloned().collect())
    }

    /// Removes and returns every item as one round.
    pub fn drain(&mut self, meter: &mut CostMeter) -> Result<Vec<T>> {
        meter.charge_round(self.items.len() as u64)?;
        Ok(self.items.drain().collect())
    }

    pub fn contains(&self, item: &T) -> bool {
        self.items.contains(item)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Uncharged view for auditing.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}
