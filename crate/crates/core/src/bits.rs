//! Fixed-universe bit sets used for element sets, state sets, and block sets.

use std::fmt;

const BITS: usize = 64;

/// A set over a fixed universe `0..len`, packed into 64-bit blocks.
///
/// All binary operations require both operands to share the same universe
/// size; this is asserted because mixing sets from different lattices or
/// systems is always a logic error.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    len: usize,
    blocks: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { len, blocks: vec![0; len.div_ceil(BITS)] }
    }

    pub fn full(len: usize) -> Self {
        let mut s = BitSet::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(len: usize, iter: I) -> Self {
        let mut s = BitSet::new(len);
        for i in iter {
            s.insert(i);
        }
        s
    }

    /// Universe size (not the number of members).
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of universe 0..{}", self.len);
        self.blocks[i / BITS] |= 1 << (i % BITS);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of universe 0..{}", self.len);
        self.blocks[i / BITS] &= !(1 << (i % BITS));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.blocks[i / BITS] & (1 << (i % BITS)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &BitSet) {
        self.check(other);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        self.check(other);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        self.check(other);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= !b;
        }
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.check(other);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.check(other);
        self.blocks.iter().zip(&other.blocks).any(|(a, b)| a & b != 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut b = block;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let tz = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(bi * BITS + tz)
                }
            })
        })
    }

    pub fn min(&self) -> Option<usize> {
        self.iter().next()
    }

    fn check(&self, other: &BitSet) {
        assert_eq!(self.len, other.len, "bit sets over different universes");
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_iterate_round_trip() {
        let s = BitSet::from_iter(130, [0, 63, 64, 100, 129]);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 63, 64, 100, 129]);
        assert_eq!(s.count(), 5);
        assert!(s.contains(64));
        assert!(!s.contains(65));
    }

    #[test]
    fn set_algebra() {
        let a = BitSet::from_iter(10, [1, 2, 3]);
        let b = BitSet::from_iter(10, [3, 4]);
        assert_eq!(a.union(&b), BitSet::from_iter(10, [1, 2, 3, 4]));
        assert_eq!(a.intersection(&b), BitSet::from_iter(10, [3]));
        assert_eq!(a.difference(&b), BitSet::from_iter(10, [1, 2]));
        assert!(BitSet::from_iter(10, [1, 3]).is_subset(&a));
        assert!(!a.is_subset(&b));
        assert!(a.intersects(&b));
        assert!(!a.intersects(&BitSet::from_iter(10, [7])));
    }

    #[test]
    fn empty_and_full() {
        assert!(BitSet::new(9).is_empty());
        assert_eq!(BitSet::full(9).count(), 9);
        assert_eq!(BitSet::new(0).count(), 0);
        assert!(BitSet::full(64).contains(63));
    }

    #[test]
    #[should_panic(expected = "different universes")]
    fn mixed_universes_rejected() {
        let _ = BitSet::new(4).union(&BitSet::new(5));
    }
}
