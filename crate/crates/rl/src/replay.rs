use rand::seq::index;
use rand::Rng;

/// One environment step. Observations are the raw `u8` tensor bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<u8>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<u8>,
    pub done: bool,
    /// Valid actions in the next state.
    pub next_mask: Vec<bool>,
}

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(4096)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Up to `n` distinct transitions drawn uniformly.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<&Transition> {
        let n = n.min(self.items.len());
        index::sample(rng, self.items.len(), n).into_iter().map(|i| &self.items[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn t(action: usize) -> Transition {
        Transition {
            observation: vec![],
            action,
            reward: 0.0,
            next_observation: vec![],
            done: false,
            next_mask: vec![],
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for a in 0..5 {
            buf.push(t(a));
        }
        assert_eq!(buf.len(), 3);
        let mut seen: Vec<_> = buf.sample(10, &mut ChaCha8Rng::seed_from_u64(1)).iter().map(|t| t.action).collect();
        seen.sort();
        assert_eq!(seen, vec![2, 3, 4]);
    }

    #[test]
    fn batches_have_no_repeats() {
        let mut buf = ReplayBuffer::new(100);
        (0..100).for_each(|a| buf.push(t(a)));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let mut b: Vec<_> = buf.sample(32, &mut rng).iter().map(|t| t.action).collect();
            b.sort();
            b.dedup();
            assert_eq!(b.len(), 32);
        }
    }
}
