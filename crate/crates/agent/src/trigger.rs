//! When an agent gets to decide.

use serde::{Deserialize, Serialize};

pub const MINERAL_TRIGGER: u32 = 170;
pub const DECISION_PERIOD: u64 = 10;
pub const FORCED_INTERVAL: u64 = 100;

/// Decide on a period boundary while minerals exceed the trigger, and in any
/// case once `next_forced` is reached. Returns the decision and the updated
/// forced deadline.
pub fn should_decide(tick: u64, minerals: u32, next_forced: u64) -> (bool, u64) {
    if tick >= next_forced {
        return (true, tick + FORCED_INTERVAL);
    }
    (minerals > MINERAL_TRIGGER && tick % DECISION_PERIOD == 0, next_forced)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionClock {
    pub next_forced: u64,
}

impl DecisionClock {
    pub fn poll(&mut self, tick: u64, minerals: u32) -> bool {
        let (fire, next) = should_decide(tick, minerals, self.next_forced);
        self.next_forced = next;
        fire
    }
}
