//! Capacity-one, latest-wins hand-off between the frame source and the
//! processor. A new item replaces any unconsumed one; replaced items are
//! counted as dropped and never delivered.

use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::Duration;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueueStats {
    pub produced: u64,
    pub delivered: u64,
    pub dropped: u64,
}

/// Single-threaded latest-wins queue state.
#[derive(Debug)]
pub struct LatestQueue<T> {
    slot: Option<T>,
    stats: QueueStats,
}

impl<T> Default for LatestQueue<T> {
    fn default() -> Self {
        Self { slot: None, stats: QueueStats::default() }
    }
}

impl<T> LatestQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `item` as the newest unconsumed item and returns the one it displaced.
    pub fn ingest_latest(&mut self, item: T) -> Option<T> {
        self.stats.produced += 1;
        let displaced = self.slot.replace(item);
        if displaced.is_some() {
            self.stats.dropped += 1;
        }
        displaced
    }

    pub fn take(&mut self) -> Option<T> {
        let item = self.slot.take();
        if item.is_some() {
            self.stats.delivered += 1;
        }
        item
    }

    pub fn peek(&self) -> Option<&T> {
        self.slot.as_ref()
    }

    pub fn stats(&self) -> QueueStats {
        self.stats
    }
}

#[derive(Debug)]
struct SlotState<T> {
    queue: LatestQueue<T>,
    closed: bool,
    error: Option<String>,
}

/// Thread-safe latest-wins slot.
#[derive(Debug)]
pub struct LatestSlot<T> {
    state: Mutex<SlotState<T>>,
    ready: Condvar,
}

impl<T> Default for LatestSlot<T> {
    fn default() -> Self {
        Self {
            state: Mutex::new(SlotState { queue: LatestQueue::new(), closed: false, error: None }),
            ready: Condvar::new(),
        }
    }
}

impl<T> LatestSlot<T> {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, SlotState<T>> {
        self.state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn push(&self, item: T) {
        let mut st = self.lock();
        st.queue.ingest_latest(item);
        drop(st);
        self.ready.notify_one();
    }

    /// Marks the producer finished. A pending item is still delivered.
    pub fn close(&self, error: Option<String>) {
        let mut st = self.lock();
        st.closed = true;
        if error.is_some() {
            st.error = error;
        }
        drop(st);
        self.ready.notify_all();
    }

    /// Blocks until an item is available, or returns `None` once closed and drained.
    pub fn recv(&self) -> Option<T> {
        let mut st = self.lock();
        loop {
            if let Some(item) = st.queue.take() {
                return Some(item);
            }
            if st.closed {
                return None;
            }
            st = self.ready.wait(st).unwrap_or_else(|poisoned| poisoned.into_inner());
        }
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<T> {
        let mut st = self.lock();
        if let Some(item) = st.queue.take() {
            return Some(item);
        }
        if st.closed {
            return None;
        }
        st = self.ready.wait_timeout(st, timeout).unwrap_or_else(|poisoned| poisoned.into_inner()).0;
        st.queue.take()
    }

    pub fn stats(&self) -> QueueStats {
        self.lock().queue.stats()
    }

    pub fn error(&self) -> Option<String> {
        self.lock().error.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn consumer_sees_latest() {
        let mut q = LatestQueue::new();
        for i in 1..=3 {
            q.ingest_latest(i);
        }
        assert_eq!(q.take(), Some(3));
        assert_eq!(q.take(), None);
        assert_eq!(q.stats(), QueueStats { produced: 3, delivered: 1, dropped: 2 });
    }

    #[test]
    fn keeping_pace_drops_nothing() {
        let mut q = LatestQueue::new();
        for i in 0..100 {
            q.ingest_latest(i);
            assert_eq!(q.take(), Some(i));
        }
        assert_eq!(q.stats().dropped, 0);
    }

    #[test]
    fn closed_slot_drains_then_ends() {
        let slot = LatestSlot::new();
        slot.push(1);
        slot.push(2);
        slot.close(Some("boom".into()));
        assert_eq!(slot.recv(), Some(2));
        assert_eq!(slot.recv(), None);
        assert_eq!(slot.error().as_deref(), Some("boom"));
    }

    #[test]
    fn threaded_conservation() {
        let slot = Arc::new(LatestSlot::new());
        let producer = {
            let slot = Arc::clone(&slot);
            std::thread::spawn(move || {
                for i in 0..10_000u64 {
                    slot.push(i);
                }
                slot.close(None);
            })
        };
        let mut last = None;
        let mut got = 0u64;
        while let Some(v) = slot.recv() {
            assert!(last.is_none_or(|l| v > l));
            last = Some(v);
            got += 1;
        }
        producer.join().unwrap();
        let s = slot.stats();
        assert_eq!(s.delivered, got);
        assert_eq!(s.delivered + s.dropped, s.produced);
        assert_eq!(last, Some(9_999));
    }
}
