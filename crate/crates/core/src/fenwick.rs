/// Binary indexed tree over non-negative integer weights, used for
/// proportional selection with O(log n) updates.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Self {
            tree: vec![0; len + 1],
            weights: vec![0; len],
            total: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn weight(&self, idx: usize) -> u64 {
        self.weights[idx]
    }

    pub fn set(&mut self, idx: usize, weight: u64) {
        let old = self.weights[idx];
        if old == weight {
            return;
        }
        self.weights[idx] = weight;
        self.total = self.total - old + weight;
        let mut i = idx + 1;
        if weight > old {
            let d = weight - old;
            while i < self.tree.len() {
                self.tree[i] += d;
                i += i & i.wrapping_neg();
            }
        } else {
            let d = old - weight;
            while i < self.tree.len() {
                self.tree[i] -= d;
                i += i & i.wrapping_neg();
            }
        }
    }

    /// Smallest index whose prefix sum exceeds `target`; requires `target < total`.
    pub fn find(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
