//! Single-writer latest-value register shared by the gaze and render workers.
//!
//! A sequence lock over atomic words: the writer bumps the sequence to odd,
//! stores the payload and bumps it back to even; readers retry until they
//! see the same even sequence before and after reading. Readers never block
//! the writer and never observe a half-written pair.

use std::sync::atomic::{fence, AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotValue {
    pub exit_index: usize,
    pub point: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSnapshot {
    pub value: Option<SlotValue>,
    /// Completed writes when the snapshot was taken.
    pub write_count: u64,
}

#[derive(Debug, Default)]
pub struct SharedGazeSlot {
    seq: AtomicU64,
    exit: AtomicU64,
    x: AtomicU64,
    y: AtomicU64,
}

impl SharedGazeSlot {
    pub fn new() -> Self {
        Self::default()
    }

    /// Publish a prediction. Only one thread may write.
    pub fn publish(&self, exit_index: usize, point: (f64, f64)) {
        let s = self.seq.load(Ordering::Relaxed);
        debug_assert!(s.is_multiple_of(2), "concurrent writers");
        debug_assert!(
            s == 0 || exit_index as u64 > self.exit.load(Ordering::Relaxed),
            "exit index must increase"
        );
        self.seq.store(s + 1, Ordering::Relaxed);
        fence(Ordering::Release);
        self.exit.store(exit_index as u64, Ordering::Relaxed);
        self.x.store(point.0.to_bits(), Ordering::Relaxed);
        self.y.store(point.1.to_bits(), Ordering::Relaxed);
        self.seq.store(s + 2, Ordering::Release);
    }

    pub fn read(&self) -> SlotSnapshot {
        loop {
            let s1 = self.seq.load(Ordering::Acquire);
            if s1 % 2 == 1 {
                std::hint::spin_loop();
                continue;
            }
            let exit = self.exit.load(Ordering::Relaxed);
            let x = self.x.load(Ordering::Relaxed);
            let y = self.y.load(Ordering::Relaxed);
            fence(Ordering::Acquire);
            let s2 = self.seq.load(Ordering::Relaxed);
            if s1 != s2 {
                continue;
            }
            let value = (s1 > 0).then(|| SlotValue {
                exit_index: exit as usize,
                point: (f64::from_bits(x), f64::from_bits(y)),
            });
            return SlotSnapshot {
                value,
                write_count: s1 / 2,
            };
        }
    }

    pub fn write_count(&self) -> u64 {
        self.seq.load(Ordering::Acquire) / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn empty_then_latest() {
        let s = SharedGazeSlot::new();
        assert_eq!(s.read().value, None);
        s.publish(1, (1.0, 2.0));
        s.publish(3, (5.0, 6.0));
        let r = s.read();
        assert_eq!(r.write_count, 2);
        assert_eq!(r.value, Some(SlotValue { exit_index: 3, point: (5.0, 6.0) }));
    }

    #[test]
    fn no_torn_reads_under_contention() {
        let slot = Arc::new(SharedGazeSlot::new());
        let w = Arc::clone(&slot);
        let writer = std::thread::spawn(move || {
            for i in 1..=200_000usize {
                let v = i as f64;
                w.publish(i, (v, -v));
            }
        });
        let mut last = 0;
        let mut last_count = 0;
        while !writer.is_finished() || last < 200_000 {
            let snap = slot.read();
            if let Some(v) = snap.value {
                assert_eq!(v.point.0, v.exit_index as f64);
                assert_eq!(v.point.1, -(v.exit_index as f64));
                assert!(v.exit_index >= last);
                assert!(snap.write_count >= last_count);
                assert_eq!(snap.write_count, v.exit_index as u64);
                last = v.exit_index;
                last_count = snap.write_count;
            }
        }
        writer.join().unwrap();
    }
}
