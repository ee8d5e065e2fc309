//! Binomial coefficients and lexicographic k-subset enumeration.

/// `C(n, k)`, or `None` on overflow of `u128`.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is always an integer at this point
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Iterator over all `k`-subsets of `0..n`, as ascending index vectors, in
/// lexicographic order.
///
/// Iteration can start at any rank, so a worker can walk a contiguous slice
/// of the sequence without touching the rest.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    k: usize,
    current: Vec<usize>,
    remaining: u128,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self::starting_at(n, k, 0)
    }

    /// Start at lexicographic position `rank`. Past the end yields nothing.
    pub fn starting_at(n: usize, k: usize, rank: u128) -> Self {
        let total = binomial(n as u64, k as u64).unwrap_or(u128::MAX);
        if k > n || rank >= total {
            return Self { n, k, current: Vec::new(), remaining: 0 };
        }
        Self { n, k, current: unrank(n, k, rank), remaining: total - rank }
    }

    /// Limit the iterator to at most `count` items.
    pub fn take_count(mut self, count: u128) -> Self {
        self.remaining = self.remaining.min(count);
        self
    }

    /// Advance `current` in place to its lexicographic successor.
    fn advance(&mut self) {
        let (n, k) = (self.n, self.k);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return;
            }
        }
    }

    /// Lending-style traversal without allocating per item.
    pub fn for_each_ref(mut self, mut f: impl FnMut(&[usize])) {
        while self.remaining > 0 {
            f(&self.current);
            self.remaining -= 1;
            if self.remaining > 0 {
                self.advance();
            }
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining == 0 {
            return None;
        }
        let out = self.current.clone();
        self.remaining -= 1;
        if self.remaining > 0 {
            self.advance();
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, usize::try_from(self.remaining).ok())
    }
}

/// The `rank`-th k-subset of `0..n` in lexicographic order.
pub fn unrank(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0usize;
    for slot in 0..k {
        let mut c = next;
        loop {
            // subsets whose `slot`-th element is c
            let block = binomial((n - c - 1) as u64, (k - slot - 1) as u64).unwrap_or(u128::MAX);
            if rank < block {
                break;
            }
            rank -= block;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}
