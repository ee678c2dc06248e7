//! Work/depth accounting in the PRAM cost model.
//!
//! Work is the sum over every charged primitive. Depth composes through a
//! stack of frames: a sequential frame adds the depth of everything charged
//! inside it, a parallel frame keeps the maximum over its children. The
//! batch itself is the outermost sequential frame.

use serde::Serialize;

use crate::config::{ceil_log2, CostConstants};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BatchCost {
    pub work: u64,
    pub depth: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FrameKind {
    Seq,
    Par,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    kind: FrameKind,
    depth: u64,
}

impl Frame {
    fn absorb(&mut self, depth: u64) {
        match self.kind {
            FrameKind::Seq => self.depth += depth,
            FrameKind::Par => self.depth = self.depth.max(depth),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CostMeter {
    log_n: u64,
    constants: CostConstants,
    total_work: u64,
    batch_work: u64,
    frames: Vec<Frame>,
}

impl CostMeter {
    pub fn new(capacity: u64, constants: CostConstants) -> Self {
        Self {
            log_n: ceil_log2(capacity).max(1),
            constants,
            total_work: 0,
            batch_work: 0,
            frames: Vec::new(),
        }
    }

    pub fn set_capacity(&mut self, capacity: u64) {
        self.log_n = ceil_log2(capacity).max(1);
    }

    /// `ceil(log2 N)`, the depth of one dictionary round.
    pub fn log_n(&self) -> u64 {
        self.log_n
    }

    pub fn total_work(&self) -> u64 {
        self.total_work
    }

    pub fn in_batch(&self) -> bool {
        !self.frames.is_empty()
    }

    pub fn begin_batch(&mut self) {
        self.batch_work = 0;
        self.frames.clear();
        self.frames.push(Frame { kind: FrameKind::Seq, depth: 0 });
    }

    pub fn end_batch(&mut self) -> Result<BatchCost> {
        if self.frames.is_empty() {
            return Err(Error::NoOpenBatch);
        }
        // Collapse any frames left open by an aborted phase.
        while self.frames.len() > 1 {
            self.end()?;
        }
        let root = self.frames.pop().expect("root frame");
        Ok(BatchCost { work: self.batch_work, depth: root.depth })
    }

    /// Charges raw `work` operations and `depth` sequential steps to the
    /// innermost frame. Both are scaled by the configured constants.
    pub fn charge(&mut self, work: u64, depth: u64) -> Result<()> {
        let top = self.frames.last_mut().ok_or(Error::NoOpenBatch)?;
        top.absorb(depth * self.constants.depth);
        let w = work * self.constants.work;
        self.batch_work += w;
        self.total_work += w;
        Ok(())
    }

    /// One dictionary round over `items` elements: work `items * ceil(log2 N)`,
    /// depth `ceil(log2 N)`. Empty rounds are free.
    pub fn charge_round(&mut self, items: u64) -> Result<()> {
        if items == 0 {
            return if self.in_batch() { Ok(()) } else { Err(Error::NoOpenBatch) };
        }
        self.charge(items * self.log_n, self.log_n)
    }

    pub fn seq_begin(&mut self) {
        self.frames.push(Frame { kind: FrameKind::Seq, depth: 0 });
    }

    pub fn par_begin(&mut self) {
        self.frames.push(Frame { kind: FrameKind::Par, depth: 0 });
    }

    /// Closes the innermost frame and folds its depth into the parent.
    pub fn end(&mut self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::NoOpenBatch);
        }
        let frame = self.frames.pop().expect("checked");
        self.frames.last_mut().expect("checked").absorb(frame.depth);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meter() -> CostMeter {
        CostMeter::new(256, CostConstants::default())
    }

    #[test]
    fn sequential_rounds_add() {
        let mut m = meter();
        m.begin_batch();
        m.charge_round(1).unwrap();
        m.charge_round(1).unwrap();
        assert_eq!(m.end_batch().unwrap(), BatchCost { work: 16, depth: 16 });
    }

    #[test]
    fn parallel_branches_take_max() {
        let mut m = meter();
        m.begin_batch();
        m.par_begin();
        m.charge_round(1).unwrap();
        m.charge_round(3).unwrap();
        m.end().unwrap();
        assert_eq!(m.end_batch().unwrap(), BatchCost { work: 32, depth: 8 });
    }

    #[test]
    fn nested_frames() {
        let mut m = meter();
        m.begin_batch();
        m.par_begin();
        m.seq_begin();
        m.charge(1, 3).unwrap();
        m.charge(1, 4).unwrap();
        m.end().unwrap();
        m.seq_begin();
        m.charge(1, 5).unwrap();
        m.end().unwrap();
        m.end().unwrap();
        m.charge(1, 1).unwrap();
        assert_eq!(m.end_batch().unwrap(), BatchCost { work: 4, depth: 8 });
        assert_eq!(m.total_work(), 4);
    }

    #[test]
    fn charging_outside_batch_fails() {
        let mut m = meter();
        assert_eq!(m.charge(1, 1), Err(Error::NoOpenBatch));
        assert_eq!(m.charge_round(0), Err(Error::NoOpenBatch));
        assert_eq!(m.end_batch(), Err(Error::NoOpenBatch));
    }

    #[test]
    fn constants_scale_charges() {
        let mut m = CostMeter::new(256, CostConstants { work: 3, depth: 2 });
        m.begin_batch();
        m.charge_round(4).unwrap();
        assert_eq!(m.end_batch().unwrap(), BatchCost { work: 96, depth: 16 });
    }

    #[test]
    fn unbalanced_frames_collapse_at_batch_end() {
        let mut m = meter();
        m.begin_batch();
        m.par_begin();
        m.charge(0, 5).unwrap();
        assert_eq!(m.end_batch().unwrap().depth, 5);
    }
}
