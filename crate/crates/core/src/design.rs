//! Treatment-assignment mechanisms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, Combinations};
use crate::error::{Arm, Error, Result};

/// Exhaustive enumeration refuses designs with more assignments than this.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// One completely randomized allocation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    labels: Vec<u8>,
    n1: usize,
}

impl Assignment {
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&t| t > 1) {
            return Err(Error::InvalidParameter(format!("label {} at position {i} is not 0/1", labels[i])));
        }
        let n1 = labels.iter().filter(|&&t| t == 1).count();
        check_n1(labels.len(), n1)?;
        Ok(Self { labels, n1 })
    }

    /// Treat exactly the units in `treated` (indices into `0..n`).
    pub fn from_treated(n: usize, treated: &[usize]) -> Result<Self> {
        let mut labels = vec![0u8; n];
        for &i in treated {
            if i >= n {
                return Err(Error::InvalidParameter(format!("unit {i} out of range 0..{n}")));
            }
            labels[i] = 1;
        }
        Self::from_labels(labels)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn treated_indices(&self) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &t)| t == 1).map(|(i, _)| i).collect()
    }
}

fn check_n1(n: usize, n1: usize) -> Result<()> {
    if n1 == 0 {
        return Err(Error::InsufficientArm { arm: Arm::Treatment, got: 0, need: 1 });
    }
    if n1 >= n {
        return Err(Error::InsufficientArm { arm: Arm::Control, got: n.saturating_sub(n1), need: 1 });
    }
    Ok(())
}

/// Uniform random `k`-subsets of `0..n` by partial Fisher-Yates.
///
/// The index buffer is reused between draws. Each draw starts from whatever
/// permutation the previous one left behind, which does not bias the result:
/// a partial shuffle of any fixed arrangement is uniform over subsets.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    perm: Vec<u32>,
    k: usize,
}

impl SubsetSampler {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k <= n && n <= u32::MAX as usize);
        Self { perm: (0..n as u32).collect(), k }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[u32] {
        let n = self.perm.len() as u32;
        for i in 0..self.k {
            let j = rng.gen_range(i as u32..n) as usize;
            self.perm.swap(i, j);
        }
        &self.perm[..self.k]
    }
}

/// Uniform draw over all `C(n, n1)` allocations.
pub fn draw_crd<R: Rng + ?Sized>(n: usize, n1: usize, rng: &mut R) -> Result<Assignment> {
    check_n1(n, n1)?;
    let mut labels = vec![0u8; n];
    for &i in SubsetSampler::new(n, n1).sample(rng) {
        labels[i as usize] = 1;
    }
    Ok(Assignment { labels, n1 })
}

/// Every allocation of `n1` treated among `n`, each once, in lexicographic
/// order of the treated index set.
#[derive(Debug, Clone)]
pub struct CrdEnumeration {
    n: usize,
    sets: Combinations,
}

impl CrdEnumeration {
    /// Underlying treated-set iterator, for callers that want to avoid
    /// allocating an [`Assignment`] per item.
    pub fn into_treated_sets(self) -> Combinations {
        self.sets
    }
}

impl Iterator for CrdEnumeration {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let set = self.sets.next()?;
        let mut labels = vec![0u8; self.n];
        for &i in &set {
            labels[i] = 1;
        }
        Some(Assignment { labels, n1: set.len() })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.sets.size_hint()
    }
}

/// Number of assignments `enumerate_crd` would produce, refused above `cap`.
pub fn crd_count(n: usize, n1: usize, cap: u128) -> Result<u128> {
    check_n1(n, n1)?;
    let count = binomial(n as u64, n1 as u64).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    Ok(count)
}

pub fn enumerate_crd(n: usize, n1: usize, cap: u128) -> Result<CrdEnumeration> {
    crd_count(n, n1, cap)?;
    Ok(CrdEnumeration { n, sets: Combinations::new(n, n1) })
}

/// Enumerate the lexicographic rank range `[start, start + len)` only.
pub fn enumerate_crd_range(n: usize, n1: usize, cap: u128, start: u128, len: u128) -> Result<CrdEnumeration> {
    crd_count(n, n1, cap)?;
    Ok(CrdEnumeration { n, sets: Combinations::starting_at(n, n1, start).take_count(len) })
}

/// Independent fair coin per matched pair. `1` means the first unit of the
/// pair is treated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairAssignment {
    flips: Vec<u8>,
}

impl PairAssignment {
    pub fn from_flips(flips: Vec<u8>) -> Self {
        Self { flips: flips.into_iter().map(|f| f & 1).collect() }
    }

    pub fn flips(&self) -> &[u8] {
        &self.flips
    }
}

pub fn draw_pairs<R: Rng + ?Sized>(n_pairs: usize, rng: &mut R) -> Result<PairAssignment> {
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("need at least one pair".into()));
    }
    let flips = (0..n_pairs).map(|_| rng.gen::<bool>() as u8).collect();
    Ok(PairAssignment { flips })
}

/// Largest design `enumerate_pairs` accepts (2^20 sign patterns).
pub const MAX_ENUMERATED_PAIRS: usize = 20;

/// All `2^n_pairs` flip vectors, in binary counting order with pair 0 as
/// the most significant digit.
pub fn enumerate_pairs(n_pairs: usize) -> Result<impl Iterator<Item = PairAssignment>> {
    if n_pairs == 0 || n_pairs > MAX_ENUMERATED_PAIRS {
        return Err(Error::EnumerationCap { count: 1u128 << n_pairs.min(127), cap: 1u128 << MAX_ENUMERATED_PAIRS });
    }
    Ok((0u64..1 << n_pairs).map(move |code| PairAssignment {
        flips: (0..n_pairs).map(|i| ((code >> (n_pairs - 1 - i)) & 1) as u8).collect(),
    }))
}

/// Balanced factorial allocation: unit `i` receives combination `cells[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorialAssignment {
    cells: Vec<usize>,
}

impl FactorialAssignment {
    pub fn from_cells(k: usize, r: usize, cells: Vec<usize>) -> Result<Self> {
        let j = 1usize << k;
        if cells.len() != r * j {
            return Err(Error::LengthMismatch { expected: r * j, got: cells.len() });
        }
        let mut counts = vec![0usize; j];
        for &c in &cells {
            if c >= j {
                return Err(Error::InvalidParameter(format!("cell {c} out of range 0..{j}")));
            }
            counts[c] += 1;
        }
        if counts.iter().any(|&c| c != r) {
            return Err(Error::InvalidParameter(format!("every cell must receive exactly {r} units")));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }
}

/// Reusable balanced-factorial sampler: shuffle the units, then cut the
/// permutation into J consecutive blocks of r.
#[derive(Debug, Clone)]
pub struct FactorialSampler {
    perm: Vec<u32>,
    r: usize,
}

impl FactorialSampler {
    pub fn new(k: usize, r: usize) -> Self {
        let n = r << k;
        Self { perm: (0..n as u32).collect(), r }
    }

    /// Fill `cells` (length N) with a fresh uniform balanced allocation.
    pub fn sample_into<R: Rng + ?Sized>(&mut self, rng: &mut R, cells: &mut [usize]) {
        let n = self.perm.len();
        for i in 0..n.saturating_sub(1) {
            let j = rng.gen_range(i as u32..n as u32) as usize;
            self.perm.swap(i, j);
        }
        for (pos, &unit) in self.perm.iter().enumerate() {
            cells[unit as usize] = pos / self.r;
        }
    }
}

pub fn draw_factorial<R: Rng + ?Sized>(k: usize, r: usize, rng: &mut R) -> Result<FactorialAssignment> {
    if k == 0 || k > 20 {
        return Err(Error::InvalidParameter(format!("number of factors must be in 1..=20, got {k}")));
    }
    if r < 2 {
        return Err(Error::InvalidParameter(format!("need r >= 2 replications per cell for cell variances, got {r}")));
    }
    let mut cells = vec![0usize; r << k];
    FactorialSampler::new(k, r).sample_into(rng, &mut cells);
    Ok(FactorialAssignment { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn rejects_empty_arms() {
        let mut rng = stream(1, 0);
        assert!(draw_crd(4, 0, &mut rng).is_err());
        assert!(draw_crd(4, 4, &mut rng).is_err());
        assert!(Assignment::from_labels(vec![1, 1]).is_err());
    }

    #[test]
    fn two_units_have_two_equally_likely_assignments() {
        let mut rng = stream(3, 0);
        let mut first = 0usize;
        let draws = 100_000;
        for _ in 0..draws {
            let a = draw_crd(2, 1, &mut rng).unwrap();
            first += a.labels()[0] as usize;
        }
        let p = first as f64 / draws as f64;
        let se = (0.25 / draws as f64).sqrt();
        assert!((p - 0.5).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_crd(4, 2, DEFAULT_ENUMERATION_CAP).unwrap().count(), 6);
        let all: Vec<Assignment> = enumerate_crd(12, 6, DEFAULT_ENUMERATION_CAP).unwrap().collect();
        assert_eq!(all.len(), 924);
        let unique: HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), 924);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        match enumerate_crd(100, 50, DEFAULT_ENUMERATION_CAP) {
            Err(Error::EnumerationCap { count, .. }) => assert!(count > DEFAULT_ENUMERATION_CAP),
            other => panic!("expected cap error, got {other:?}"),
        }
        assert!(enumerate_crd(6, 3, 19).is_err());
        assert!(enumerate_crd(6, 3, 20).is_ok());
    }

    #[test]
    fn ranged_enumeration_partitions_the_sequence() {
        let whole: Vec<Assignment> = enumerate_crd(8, 3, DEFAULT_ENUMERATION_CAP).unwrap().collect();
        let mut parts = Vec::new();
        for start in (0..56).step_by(10) {
            parts.extend(enumerate_crd_range(8, 3, DEFAULT_ENUMERATION_CAP, start, 10).unwrap());
        }
        assert_eq!(parts, whole);
    }

    #[test]
    fn pair_flips_are_fair_and_enumerable() {
        let mut rng = stream(5, 0);
        let draws = 100_000;
        let ones: usize = (0..draws / 10)
            .map(|_| draw_pairs(10, &mut rng).unwrap().flips().iter().map(|&f| f as usize).sum::<usize>())
            .sum();
        let p = ones as f64 / draws as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / draws as f64).sqrt());
        assert_eq!(enumerate_pairs(10).unwrap().count(), 1024);
        let distinct: HashSet<_> = enumerate_pairs(12).unwrap().collect();
        assert_eq!(distinct.len(), 4096);
        assert!(enumerate_pairs(21).is_err());
    }

    #[test]
    fn pair_draws_are_seed_deterministic() {
        let a = draw_pairs(30, &mut stream(9, 2)).unwrap();
        let b = draw_pairs(30, &mut stream(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factorial_cells_are_balanced() {
        let mut rng = stream(11, 0);
        for _ in 0..200 {
            let a = draw_factorial(3, 4, &mut rng).unwrap();
            let mut counts = HashMap::new();
            for &c in a.cells() {
                *counts.entry(c).or_insert(0) += 1;
            }
            assert_eq!(counts.len(), 8);
            assert!(counts.values().all(|&v| v == 4));
        }
        assert!(draw_factorial(2, 1, &mut rng).is_err());
    }

    #[test]
    fn factorial_inclusion_probability() {
        let (k, r) = (2, 3);
        let n = r << k;
        let draws = 100_000;
        let mut rng = stream(13, 0);
        let mut hits = vec![0usize; n];
        let mut sampler = FactorialSampler::new(k, r);
        let mut cells = vec![0; n];
        for _ in 0..draws {
            sampler.sample_into(&mut rng, &mut cells);
            for (i, &c) in cells.iter().enumerate() {
                if c == 0 {
                    hits[i] += 1;
                }
            }
        }
        let p = 1.0 / (1 << k) as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for h in hits {
            assert!((h as f64 / draws as f64 - p).abs() < 4.5 * se);
        }
    }
}
