use crate::error::{invalid, Result};

/// Fixed-capacity history of the most recent samples, zero-initialized.
///
/// Samples are mirrored into a double-length buffer so the newest `k`
/// samples are always one contiguous slice in chronological order.
#[derive(Debug, Clone)]
pub struct RingBuffer {
    data: Vec<f64>,
    capacity: usize,
    // index of the next write within [0, capacity)
    head: usize,
}

impl RingBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return invalid("ring buffer capacity must be >= 1");
        }
        Ok(Self {
            data: vec![0.0; 2 * capacity],
            capacity,
            head: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, sample: f64) {
        self.data[self.head] = sample;
        self.data[self.head + self.capacity] = sample;
        self.head += 1;
        if self.head == self.capacity {
            self.head = 0;
        }
    }

    pub fn extend(&mut self, samples: &[f64]) {
        for &s in samples {
            self.push(s);
        }
    }

    /// The newest `k` samples, oldest first. Panics if `k > capacity`.
    pub fn last(&self, k: usize) -> &[f64] {
        assert!(k <= self.capacity, "requested {k} samples from a ring of {}", self.capacity);
        let end = self.head + self.capacity;
        &self.data[end - k..end]
    }

    /// The newest sample.
    pub fn newest(&self) -> f64 {
        self.last(1)[0]
    }

    pub fn clear(&mut self) {
        self.data.fill(0.0);
        self.head = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn starts_zeroed() {
        let r = RingBuffer::new(4).unwrap();
        assert_eq!(r.last(4), &[0.0; 4]);
        assert!(RingBuffer::new(0).is_err());
    }

    #[test]
    fn discards_oldest() {
        let mut r = RingBuffer::new(3).unwrap();
        r.extend(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(r.last(3), &[3.0, 4.0, 5.0]);
        assert_eq!(r.last(1), &[5.0]);
        assert_eq!(r.newest(), 5.0);
    }

    proptest! {
        #[test]
        fn last_matches_vec_tail(cap in 1usize..40, xs in prop::collection::vec(-1.0f64..1.0, 0..200), k in 0usize..40) {
            let k = k.min(cap);
            let mut r = RingBuffer::new(cap).unwrap();
            r.extend(&xs);
            let mut padded = vec![0.0; cap];
            padded.extend_from_slice(&xs);
            prop_assert_eq!(r.last(k), &padded[padded.len() - k..]);
        }
    }
}
