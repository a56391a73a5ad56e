//! Fixed-width concept sets.
//!
//! A [`ConceptSet`] is a bit vector indexed by the ordering of a
//! [`ConceptSpace`](crate::mind::ConceptSpace). Every operation in the crate is
//! set algebra over these words, so spaces are limited to [`MAX_CONCEPTS`].

use std::fmt;

/// Largest concept space representable by a [`ConceptSet`].
pub const MAX_CONCEPTS: usize = 64;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptSet(u64);

impl ConceptSet {
    pub const EMPTY: ConceptSet = ConceptSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        ConceptSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// The set `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_CONCEPTS);
        if n == MAX_CONCEPTS {
            ConceptSet(u64::MAX)
        } else {
            ConceptSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_CONCEPTS);
        ConceptSet(1u64 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_CONCEPTS && self.0 & (1u64 << i) != 0
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let was = self.contains(i);
        self.0 |= 1u64 << i;
        !was
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let was = self.contains(i);
        self.0 &= !(1u64 << i);
        was
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        ConceptSet(self.0 | (1u64 << i))
    }

    #[must_use]
    pub fn without(self, i: usize) -> Self {
        ConceptSet(self.0 & !(1u64 << i))
    }

    pub fn union(self, other: Self) -> Self {
        ConceptSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ConceptSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ConceptSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_superset(self, other: Self) -> bool {
        other.is_subset(self)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest member index.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Member indices in ascending order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    /// All subsets of `self`, in increasing order of their bit pattern.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Debug for ConceptSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ConceptSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ConceptSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl IntoIterator for ConceptSet {
    type Item = usize;
    type IntoIter = Members;

    fn into_iter(self) -> Members {
        self.iter()
    }
}

#[derive(Clone)]
pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// Walks the subsets of a mask via `next = (cur - mask) & mask`.
pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = ConceptSet;

    fn next(&mut self) -> Option<ConceptSet> {
        let cur = self.next?;
        let succ = cur.wrapping_sub(self.mask) & self.mask;
        self.next = (succ != 0).then_some(succ);
        Some(ConceptSet(cur))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerates_every_subset_once() {
        let mask = ConceptSet::from_bits(0b1011);
        let subs: Vec<_> = mask.subsets().map(|s| s.bits()).collect();
        assert_eq!(
            subs,
            vec![0b0000, 0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1010, 0b1011]
        );
        assert_eq!(ConceptSet::EMPTY.subsets().count(), 1);
        assert_eq!(ConceptSet::full(6).subsets().count(), 64);
    }

    #[test]
    fn members_ascend() {
        let s: ConceptSet = [5, 0, 3].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.first(), Some(0));
        assert!(s.without(0).with(1).contains(1));
    }

    #[test]
    fn full_width() {
        assert_eq!(ConceptSet::full(64).len(), 64);
        assert_eq!(ConceptSet::full(0), ConceptSet::EMPTY);
        assert!(ConceptSet::full(3).is_subset(ConceptSet::full(4)));
    }
}
