use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::Millis;

/// Holds remote items until `receipt + artificial_latency`.
///
/// Items must be pushed in non-decreasing receipt order; they are released in
/// that order. Changing the latency applies to everything still queued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBuffer<T> {
    pub artificial_latency: Millis,
    queue: VecDeque<(Millis, T)>,
}

impl<T> DelayBuffer<T> {
    pub fn new(artificial_latency: Millis) -> Self {
        Self {
            artificial_latency,
            queue: VecDeque::new(),
        }
    }

    pub fn push(&mut self, received_at: Millis, item: T) {
        debug_assert!(self.queue.back().is_none_or(|(t, _)| *t <= received_at));
        self.queue.push_back((received_at, item));
    }

    /// Releases every item with `receipt + latency <= now`, oldest first.
    pub fn delayed_view(&mut self, now: Millis) -> Vec<(Millis, T)> {
        let mut out = Vec::new();
        while let Some((t, _)) = self.queue.front() {
            if t + self.artificial_latency > now {
                break;
            }
            out.push(self.queue.pop_front().expect("front exists"));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}
