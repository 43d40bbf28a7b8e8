//! Ordered driver queue with O(log n) access by rank.
//!
//! Drivers occupy slots in arrival order; a Fenwick tree over slot occupancy
//! finds the k-th live driver. Removed slots are reclaimed by compaction when
//! the tail reaches capacity.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedDriver {
    pub id: u64,
    /// Time the driver (last) joined the tail.
    pub joined_at: f64,
    /// Time the driver first arrived at the origin.
    pub arrived_at: f64,
    pub in_cohort: bool,
    pub tagged: bool,
}

#[derive(Debug, Clone)]
pub struct DriverQueue {
    slots: Vec<Option<QueuedDriver>>,
    tree: Vec<u32>,
    tail: usize,
    len: usize,
}

const MIN_CAPACITY: usize = 1024;

impl Default for DriverQueue {
    fn default() -> Self {
        Self::with_capacity(MIN_CAPACITY)
    }
}

impl DriverQueue {
    pub fn with_capacity(cap: usize) -> Self {
        let cap = cap.max(MIN_CAPACITY).next_power_of_two();
        Self {
            slots: vec![None; cap],
            tree: vec![0; cap + 1],
            tail: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn add(&mut self, slot: usize, delta: i32) {
        let mut i = slot + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    fn rebuild(&mut self, cap: usize) {
        let live: Vec<QueuedDriver> = self.slots[..self.tail].iter().flatten().copied().collect();
        self.slots = vec![None; cap];
        self.tree = vec![0; cap + 1];
        for (k, d) in live.iter().enumerate() {
            self.slots[k] = Some(*d);
            self.tree[k + 1] = 1;
        }
        // linear-time Fenwick construction
        for i in 1..=cap {
            let parent = i + (i & i.wrapping_neg());
            if parent <= cap {
                self.tree[parent] += self.tree[i];
            }
        }
        self.tail = live.len();
        self.len = live.len();
    }

    pub fn push_back(&mut self, d: QueuedDriver) {
        if self.tail == self.slots.len() {
            let cap = self.slots.len();
            let cap = if self.len * 2 > cap { cap * 2 } else { cap };
            self.rebuild(cap);
        }
        self.slots[self.tail] = Some(d);
        self.add(self.tail, 1);
        self.tail += 1;
        self.len += 1;
    }

    /// Slot of the driver with `rank` drivers ahead of it.
    fn slot_of(&self, rank: usize) -> usize {
        debug_assert!(rank < self.len);
        let mut pos = 0;
        let mut remaining = rank as u32;
        let mut step = self.slots.len();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }

    pub fn get(&self, rank: usize) -> Option<&QueuedDriver> {
        if rank >= self.len {
            return None;
        }
        self.slots[self.slot_of(rank)].as_ref()
    }

    pub fn remove(&mut self, rank: usize) -> Option<QueuedDriver> {
        if rank >= self.len {
            return None;
        }
        let slot = self.slot_of(rank);
        let d = self.slots[slot].take();
        self.add(slot, -1);
        self.len -= 1;
        d
    }

    /// Live drivers from head to tail.
    pub fn iter(&self) -> impl Iterator<Item = &QueuedDriver> {
        self.slots[..self.tail].iter().flatten()
    }
}
