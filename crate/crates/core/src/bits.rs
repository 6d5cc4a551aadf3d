//! Dense square bit matrices used for adjacency and reachability.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub(crate) fn new(n: usize) -> Self {
        let words = words_for(n);
        Self { n, words, bits: vec![0; n * words] }
    }

    #[inline]
    pub(crate) fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.bits[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub(crate) fn row(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words..(r + 1) * self.words]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.bits[r * self.words..(r + 1) * self.words]
    }

    pub(crate) fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
    }

    /// `row(dst) |= row(src)`.
    pub(crate) fn or_row_into(&mut self, src: usize, dst: usize) {
        if src == dst {
            return;
        }
        let w = self.words;
        for i in 0..w {
            let v = self.bits[src * w + i];
            self.bits[dst * w + i] |= v;
        }
    }

    pub(crate) fn row_count(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Iterates the set bits of a word slice in ascending order.
pub(crate) fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        core::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + t)
            }
        })
    })
}
