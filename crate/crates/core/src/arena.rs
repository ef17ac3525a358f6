//! Slab storage shared by the bucketed queues.
//!
//! Items live in a single vector of nodes linked into per-bucket FIFO lists.
//! A [`Handle`] names a slot plus a generation so that stale handles are
//! detected instead of aliasing a reused slot.

use crate::error::QueueError;

pub(crate) const NIL: u32 = u32::MAX;

/// Stable reference to an item stored in one of the bucketed queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Handle {
    slot: u32,
    generation: u32,
}

#[derive(Debug)]
pub(crate) struct Node<T> {
    pub item: Option<T>,
    pub rank: u64,
    pub prev: u32,
    pub next: u32,
    pub generation: u32,
    /// Bucket index inside the owning window.
    pub bucket: u32,
    /// Owning window (0 or 1) for the two-window queues.
    pub window: u8,
}

#[derive(Debug)]
pub(crate) struct Arena<T> {
    nodes: Vec<Node<T>>,
    free: Vec<u32>,
}

impl<T> Default for Arena<T> {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
        }
    }
}

impl<T> Arena<T> {
    pub fn alloc(&mut self, rank: u64, item: T, bucket: u32, window: u8) -> Handle {
        if let Some(slot) = self.free.pop() {
            let n = &mut self.nodes[slot as usize];
            n.item = Some(item);
            n.rank = rank;
            n.prev = NIL;
            n.next = NIL;
            n.bucket = bucket;
            n.window = window;
            Handle {
                slot,
                generation: n.generation,
            }
        } else {
            let slot = self.nodes.len() as u32;
            self.nodes.push(Node {
                item: Some(item),
                rank,
                prev: NIL,
                next: NIL,
                generation: 0,
                bucket,
                window,
            });
            Handle {
                slot,
                generation: 0,
            }
        }
    }

    /// Releases a slot and returns its payload. The node must already be unlinked.
    pub fn release(&mut self, slot: u32) -> (u64, T) {
        let n = &mut self.nodes[slot as usize];
        let item = n.item.take().expect("released slot holds an item");
        n.generation = n.generation.wrapping_add(1);
        self.free.push(slot);
        (n.rank, item)
    }

    pub fn resolve(&self, h: Handle) -> Result<u32, QueueError> {
        match self.nodes.get(h.slot as usize) {
            Some(n) if n.generation == h.generation && n.item.is_some() => Ok(h.slot),
            _ => Err(QueueError::InvalidHandle),
        }
    }

    pub fn handle_of(&self, slot: u32) -> Handle {
        Handle {
            slot,
            generation: self.nodes[slot as usize].generation,
        }
    }

    #[inline]
    pub fn node(&self, slot: u32) -> &Node<T> {
        &self.nodes[slot as usize]
    }

    #[inline]
    pub fn node_mut(&mut self, slot: u32) -> &mut Node<T> {
        &mut self.nodes[slot as usize]
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.free.clear();
    }
}

/// Intrusive doubly linked FIFO over arena slots.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FifoList {
    pub head: u32,
    pub tail: u32,
    pub len: u32,
}

impl Default for FifoList {
    fn default() -> Self {
        Self {
            head: NIL,
            tail: NIL,
            len: 0,
        }
    }
}

impl FifoList {
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push_back<T>(&mut self, arena: &mut Arena<T>, slot: u32) {
        {
            let n = arena.node_mut(slot);
            n.prev = self.tail;
            n.next = NIL;
        }
        if self.tail == NIL {
            self.head = slot;
        } else {
            arena.node_mut(self.tail).next = slot;
        }
        self.tail = slot;
        self.len += 1;
    }

    pub fn unlink<T>(&mut self, arena: &mut Arena<T>, slot: u32) {
        let (prev, next) = {
            let n = arena.node(slot);
            (n.prev, n.next)
        };
        if prev == NIL {
            self.head = next;
        } else {
            arena.node_mut(prev).next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            arena.node_mut(next).prev = prev;
        }
        let n = arena.node_mut(slot);
        n.prev = NIL;
        n.next = NIL;
        self.len -= 1;
    }

    pub fn pop_front<T>(&mut self, arena: &mut Arena<T>) -> Option<u32> {
        if self.head == NIL {
            return None;
        }
        let slot = self.head;
        self.unlink(arena, slot);
        Some(slot)
    }
}
