//! Shared solver counters.
//!
//! Counters are atomic so concurrent workers can share one sink; totals are
//! order-insensitive sums.

use std::sync::atomic::{AtomicU64, Ordering};

/// Counter sink threaded through the solver layers.
#[derive(Debug, Default)]
pub struct Counters {
    pub lp_calls: AtomicU64,
    pub lp_pivots: AtomicU64,
    pub icp_calls: AtomicU64,
    pub icp_boxes: AtomicU64,
    pub stars: AtomicU64,
    pub sat_solves: AtomicU64,
    pub cache_hits: AtomicU64,
}

impl Counters {
    pub fn new() -> Self {
        Counters::default()
    }

    pub fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add(counter: &AtomicU64, n: u64) {
        counter.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }

    /// Snapshot of all counters as plain integers.
    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            lp_calls: Self::get(&self.lp_calls),
            lp_pivots: Self::get(&self.lp_pivots),
            icp_calls: Self::get(&self.icp_calls),
            icp_boxes: Self::get(&self.icp_boxes),
            stars: Self::get(&self.stars),
            sat_solves: Self::get(&self.sat_solves),
            cache_hits: Self::get(&self.cache_hits),
        }
    }
}

/// Plain-value snapshot of [`Counters`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub lp_calls: u64,
    pub lp_pivots: u64,
    pub icp_calls: u64,
    pub icp_boxes: u64,
    pub stars: u64,
    pub sat_solves: u64,
    pub cache_hits: u64,
}
