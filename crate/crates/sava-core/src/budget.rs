//! Accounting for materialized cost-matrix entries.
//!
//! The batched solver's memory contract is that no more than one batch-pair
//! matrix plus the batch-distance table is ever live. The tracker keeps a
//! high-water mark of live entries across all matrices registered with it so
//! reports can prove the contract was met rather than assume it.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// Shared counter of live and peak cost-matrix entries.
#[derive(Debug, Default, Clone)]
pub struct PeakTracker {
    inner: Arc<Counters>,
}

#[derive(Debug, Default)]
struct Counters {
    live: AtomicUsize,
    peak: AtomicUsize,
}

impl PeakTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `entries` live entries; they stay counted until the returned
    /// guard drops.
    pub fn alloc(&self, entries: usize) -> AllocGuard {
        let live = self.inner.live.fetch_add(entries, Ordering::SeqCst) + entries;
        self.inner.peak.fetch_max(live, Ordering::SeqCst);
        AllocGuard {
            tracker: self.clone(),
            entries,
        }
    }

    pub fn live(&self) -> usize {
        self.inner.live.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.inner.peak.load(Ordering::SeqCst)
    }
}

/// RAII registration of one matrix's entries.
#[derive(Debug)]
pub struct AllocGuard {
    tracker: PeakTracker,
    entries: usize,
}

impl Drop for AllocGuard {
    fn drop(&mut self) {
        self.tracker
            .inner
            .live
            .fetch_sub(self.entries, Ordering::SeqCst);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_tracks_overlapping_allocations() {
        let t = PeakTracker::new();
        let a = t.alloc(100);
        {
            let _b = t.alloc(50);
            assert_eq!(t.live(), 150);
        }
        assert_eq!(t.live(), 100);
        drop(a);
        assert_eq!(t.live(), 0);
        assert_eq!(t.peak(), 150);
    }
}
