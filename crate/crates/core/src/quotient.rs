//! Floor-division quotient enumeration.
//!
//! For a fixed `n`, the map `k -> n / k` takes only `O(sqrt n)` distinct
//! values. [`QuotientBlocks`] walks the maximal runs `lo..=hi` of `k` on which
//! the quotient is constant, using `hi = n / (n / lo)`.

/// A maximal run `lo..=hi` with `n / k == quotient` for every `k` in the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuotientBlock {
    pub lo: u64,
    pub hi: u64,
    pub quotient: u64,
}

impl QuotientBlock {
    #[inline]
    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of `k` over the run, `lo + ... + hi`.
    #[inline]
    pub fn index_sum(&self) -> u128 {
        (self.lo as u128 + self.hi as u128) * self.len() as u128 / 2
    }
}

#[derive(Debug, Clone)]
pub struct QuotientBlocks {
    n: u64,
    next: u64,
    end: u64,
}

impl Iterator for QuotientBlocks {
    type Item = QuotientBlock;

    #[inline]
    fn next(&mut self) -> Option<QuotientBlock> {
        if self.next > self.end {
            return None;
        }
        let lo = self.next;
        let quotient = self.n / lo;
        let hi = (self.n / quotient).min(self.end);
        self.next = hi + 1;
        Some(QuotientBlock { lo, hi, quotient })
    }
}

/// Blocks covering `k = 1..=n`. Empty when `n == 0`.
pub fn quotient_blocks(n: u64) -> QuotientBlocks {
    quotient_blocks_in(n, 1, n)
}

/// Blocks covering `k = start..=end`, with `end` clamped to `n`.
pub fn quotient_blocks_in(n: u64, start: u64, end: u64) -> QuotientBlocks {
    QuotientBlocks {
        n,
        next: start.max(1),
        end: end.min(n),
    }
}
