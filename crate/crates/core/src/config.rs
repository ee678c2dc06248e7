use serde::Serialize;

use crate::edge::Level;
use crate::error::{Error, Result};

/// Multipliers applied to every charged primitive. Defaults are 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostConstants {
    pub work: u64,
    pub depth: u64,
}

impl Default for CostConstants {
    fn default() -> Self {
        Self { work: 1, depth: 1 }
    }
}

/// Global parameters of the matcher.
///
/// `alpha` and `levels` are derived from `rank` and `capacity` and are kept
/// in sync by [`Config::set_capacity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub rank: usize,
    /// Upper bound on vertices plus total updates (`N`).
    pub capacity: u64,
    alpha: u64,
    levels: Level,
    pub seed: u64,
    /// Iterations per subsettle phase are `ceil(c_sub * log2(|E'| + 2))`.
    pub c_sub: f64,
    /// Luby rounds are capped at `c_luby * ceil(log2(|edges| + 2))`.
    pub c_luby: usize,
    /// Subsettle repetitions allowed per settle; `None` means `64 * ceil(log2 N)`.
    pub settle_repeat_cap: Option<usize>,
    pub cost: CostConstants,
}

pub const DEFAULT_C_SUB: f64 = 4.0;
pub const DEFAULT_C_LUBY: usize = 8;

impl Config {
    /// Builds a configuration with the default capacity `2 * (initial_vertices + 1024)`.
    pub fn new(rank: usize, initial_vertices: u64, seed: u64) -> Result<Self> {
        Self::with_capacity(rank, 2 * (initial_vertices + 1024), seed)
    }

    pub fn with_capacity(rank: usize, capacity: u64, seed: u64) -> Result<Self> {
        if rank < 2 {
            return Err(Error::InvalidConfig(format!("rank must be at least 2, got {rank}")));
        }
        if capacity < 2 {
            return Err(Error::InvalidConfig(format!("capacity must be at least 2, got {capacity}")));
        }
        let alpha = 4 * rank as u64;
        Ok(Self {
            rank,
            capacity,
            alpha,
            levels: level_count(alpha, capacity),
            seed,
            c_sub: DEFAULT_C_SUB,
            c_luby: DEFAULT_C_LUBY,
            settle_repeat_cap: None,
            cost: CostConstants::default(),
        })
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    /// `L = ceil(log_alpha N)`.
    pub fn levels(&self) -> Level {
        self.levels
    }

    pub fn log2_capacity(&self) -> u64 {
        ceil_log2(self.capacity)
    }

    pub fn log2_alpha(&self) -> u64 {
        ceil_log2(self.alpha)
    }

    pub fn set_capacity(&mut self, capacity: u64) {
        self.capacity = capacity;
        self.levels = level_count(self.alpha, capacity);
    }

    pub fn settle_cap(&self) -> usize {
        self.settle_repeat_cap.unwrap_or(64 * self.log2_capacity() as usize)
    }

    /// `alpha^level`, saturating.
    pub fn alpha_pow(&self, level: Level) -> u64 {
        debug_assert!(level >= 0);
        self.alpha.saturating_pow(level as u32)
    }
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

fn level_count(alpha: u64, capacity: u64) -> Level {
    let mut levels = 0;
    let mut reach = 1u64;
    while reach < capacity {
        reach = reach.saturating_mul(alpha);
        levels += 1;
    }
    levels
}
