//! Sparse vectors with strictly increasing indices and no stored zeros.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<S> {
    entries: Vec<(u32, S)>,
}

impl<S: Scalar> Default for SparseVector<S> {
    fn default() -> Self {
        SparseVector { entries: Vec::new() }
    }
}

impl<S: Scalar> SparseVector<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from arbitrary (index, value) pairs: duplicates are summed,
    /// zeros dropped, indices sorted.
    pub fn from_pairs(mut pairs: Vec<(u32, S)>) -> Self {
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, S)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != S::zero());
        SparseVector { entries }
    }

    /// Build from pairs already sorted with strictly increasing indices.
    pub fn from_sorted(entries: Vec<(u32, S)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        let mut entries = entries;
        entries.retain(|&(_, v)| v != S::zero());
        SparseVector { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, S)> + '_ {
        self.entries.iter().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn get(&self, index: u32) -> S {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => S::zero(),
        }
    }

    pub fn dot(&self, other: &SparseVector<S>) -> S {
        let mut acc = S::zero();
        let (mut a, mut b) = (self.entries.iter(), other.entries.iter());
        let (mut xa, mut xb) = (a.next(), b.next());
        while let (Some(&(ia, va)), Some(&(ib, vb))) = (xa, xb) {
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => xa = a.next(),
                std::cmp::Ordering::Greater => xb = b.next(),
                std::cmp::Ordering::Equal => {
                    acc += va * vb;
                    xa = a.next();
                    xb = b.next();
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[S]) -> S {
        let mut acc = S::zero();
        for &(i, v) in &self.entries {
            acc += dense[i as usize] * v;
        }
        acc
    }

    /// dense += alpha * self
    pub fn axpy_into(&self, alpha: S, dense: &mut [S]) {
        for &(i, v) in &self.entries {
            dense[i as usize] += alpha * v;
        }
    }

    pub fn norm(&self) -> S {
        self.entries
            .iter()
            .map(|&(_, v)| v * v)
            .fold(S::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Unit-normalized copy; the all-zero vector stays all-zero.
    pub fn normalized(&self) -> SparseVector<S> {
        let n = self.norm();
        if n == S::zero() {
            return self.clone();
        }
        SparseVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v / n)).collect(),
        }
    }

    /// self - other, used for pairwise difference vectors.
    pub fn sub(&self, other: &SparseVector<S>) -> SparseVector<S> {
        let mut out = Vec::with_capacity(self.nnz() + other.nnz());
        let (mut a, mut b) = (self.entries.iter(), other.entries.iter());
        let (mut xa, mut xb) = (a.next(), b.next());
        loop {
            match (xa, xb) {
                (Some(&(ia, va)), Some(&(ib, vb))) => match ia.cmp(&ib) {
                    std::cmp::Ordering::Less => {
                        out.push((ia, va));
                        xa = a.next();
                    }
                    std::cmp::Ordering::Greater => {
                        out.push((ib, -vb));
                        xb = b.next();
                    }
                    std::cmp::Ordering::Equal => {
                        let d = va - vb;
                        if d != S::zero() {
                            out.push((ia, d));
                        }
                        xa = a.next();
                        xb = b.next();
                    }
                },
                (Some(&(ia, va)), None) => {
                    out.push((ia, va));
                    xa = a.next();
                }
                (None, Some(&(ib, vb))) => {
                    out.push((ib, -vb));
                    xb = b.next();
                }
                (None, None) => break,
            }
        }
        SparseVector { entries: out }
    }

    pub fn scale(&self, alpha: S) -> SparseVector<S> {
        if alpha == S::zero() {
            return SparseVector::new();
        }
        SparseVector {
            entries: self.entries.iter().map(|&(i, v)| (i, alpha * v)).collect(),
        }
    }
}
