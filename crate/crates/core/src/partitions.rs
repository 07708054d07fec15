//! Set partitions of `{1..n}`, the non-crossing and interval subfamilies,
//! the reversed refinement order and the join.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Largest ground set accepted by [`enumerate_partitions`].
pub const DEFAULT_MAX_SIZE: usize = 14;

/// Which partitions to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    All,
    NonCrossing,
    Interval,
}

/// A partition of `{1..n}` in canonical form: elements ascending inside each
/// block, blocks ordered by their minimum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Build from arbitrary blocks; checks the covering and disjointness.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Partition> {
        let mut seen = vec![false; n + 1];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Domain("empty block".into()));
            }
            for &e in b {
                if e == 0 || e > n || seen[e] {
                    return Err(Error::Domain(alloc::format!("bad element {e} for n = {n}")));
                }
                seen[e] = true;
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(Error::Domain("blocks do not cover the ground set".into()));
        }
        Ok(Partition::canonical(n, blocks))
    }

    fn canonical(n: usize, mut blocks: Vec<Vec<usize>>) -> Partition {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Partition { n, blocks }
    }

    /// Build from a restricted growth string (0-based block labels).
    pub fn from_rgs(rgs: &[usize]) -> Partition {
        let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        Partition { n: rgs.len(), blocks }
    }

    /// The one-block partition `1_n`.
    pub fn one(n: usize) -> Partition {
        Partition { n, blocks: vec![(1..=n).collect()] }
    }

    /// The partition into singletons.
    pub fn singletons(n: usize) -> Partition {
        Partition { n, blocks: (1..=n).map(|i| vec![i]).collect() }
    }

    /// Interval partition from consecutive block lengths.
    pub fn from_lengths(lengths: &[usize]) -> Partition {
        let mut blocks = Vec::with_capacity(lengths.len());
        let mut start = 1;
        for &l in lengths {
            blocks.push((start..start + l).collect());
            start += l;
        }
        Partition { n: start - 1, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks, `|π|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block label of every element, 0-based, in element order.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (j, b) in self.blocks.iter().enumerate() {
            for &e in b {
                out[e - 1] = j;
            }
        }
        out
    }

    /// Four-point test: no `a < b < c < d` with `a, c` in one block and
    /// `b, d` in another.
    pub fn is_noncrossing(&self) -> bool {
        let lab = self.labels();
        let n = self.n;
        for a in 0..n {
            for b in a + 1..n {
                if lab[b] == lab[a] {
                    continue;
                }
                for c in b + 1..n {
                    if lab[c] != lab[a] {
                        continue;
                    }
                    for d in c + 1..n {
                        if lab[d] == lab[b] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Three-point test: no `a < b < c` with `a, c` in one block and `b`
    /// outside it.
    pub fn is_interval(&self) -> bool {
        let lab = self.labels();
        let n = self.n;
        for a in 0..n {
            for b in a + 1..n {
                if lab[b] == lab[a] {
                    continue;
                }
                if (b + 1..n).any(|c| lab[c] == lab[a]) {
                    return false;
                }
            }
        }
        true
    }

    /// Brace notation, e.g. `{1,3|2}`.
    pub fn to_brace_string(&self) -> String {
        let mut s = String::from("{");
        for (j, b) in self.blocks.iter().enumerate() {
            if j > 0 {
                s.push('|');
            }
            for (i, e) in b.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&alloc::format!("{e}"));
            }
        }
        s.push('}');
        s
    }

    /// Inverse of [`Partition::to_brace_string`].
    pub fn parse(s: &str) -> Result<Partition> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(alloc::format!("expected braces in {s:?}")))?;
        let mut blocks = Vec::new();
        let mut n = 0;
        for part in inner.split('|') {
            let mut b = Vec::new();
            for e in part.split(',') {
                let v: usize =
                    e.trim().parse().map_err(|_| Error::Parse(alloc::format!("bad element {e:?}")))?;
                n = n.max(v);
                b.push(v);
            }
            blocks.push(b);
        }
        Partition::new(n, blocks)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_brace_string())
    }
}

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n == 0 || n > limit {
        return Err(Error::SizeLimit { what: "partition size", got: n, limit });
    }
    Ok(())
}

/// Lazily walks a family in restricted-growth-string order.
///
/// The non-crossing and interval families are generated by pruning the
/// string as it grows, so the order is the same as filtering `All`.
pub struct PartitionIter {
    family: Family,
    n: usize,
    rgs: Vec<usize>,
    started: bool,
    done: bool,
}

impl PartitionIter {
    pub fn new(n: usize, family: Family) -> Result<PartitionIter> {
        PartitionIter::with_limit(n, family, DEFAULT_MAX_SIZE)
    }

    pub fn with_limit(n: usize, family: Family, limit: usize) -> Result<PartitionIter> {
        check_size(n, limit)?;
        Ok(PartitionIter { family, n, rgs: vec![0; n], started: false, done: false })
    }

    /// Whether setting position `i` to `v` keeps `rgs[..=i]` extendable.
    fn admissible(&self, i: usize, v: usize) -> bool {
        let rgs = &self.rgs;
        let fresh = rgs[..i].iter().all(|&x| x < v);
        match self.family {
            Family::All => true,
            Family::Interval => fresh || rgs[i - 1] == v,
            Family::NonCrossing => {
                if fresh {
                    return true;
                }
                // Reusing block v at i closes every block seen since v's
                // previous element; none of them may have started earlier.
                let last = (0..i).rev().find(|&j| rgs[j] == v).unwrap();
                rgs[last + 1..i].iter().all(|w| !rgs[..last].contains(w))
            }
        }
    }

    fn max_label(&self, i: usize) -> usize {
        self.rgs[..i].iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Fill positions `from..n` with the smallest admissible values.
    fn fill_min(&mut self, from: usize) -> bool {
        for i in from..self.n {
            let cap = self.max_label(i);
            let mut placed = false;
            for v in 0..=cap {
                if i == 0 || self.admissible(i, v) {
                    self.rgs[i] = v;
                    placed = true;
                    break;
                }
            }
            if !placed {
                return false;
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        let mut i = self.n;
        while i > 1 {
            i -= 1;
            let cap = self.max_label(i);
            let mut v = self.rgs[i] + 1;
            while v <= cap {
                if self.admissible(i, v) {
                    self.rgs[i] = v;
                    if self.fill_min(i + 1) {
                        return true;
                    }
                }
                v += 1;
            }
        }
        false
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if !self.fill_min(0) {
                self.done = true;
                return None;
            }
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(Partition::from_rgs(&self.rgs))
    }
}

/// Every partition of the family, in restricted-growth-string order.
pub fn enumerate_partitions(n: usize, family: Family) -> Result<Vec<Partition>> {
    Ok(PartitionIter::new(n, family)?.collect())
}

/// Count without materialising the list.
pub fn count_partitions(n: usize, family: Family, limit: usize) -> Result<u64> {
    Ok(PartitionIter::with_limit(n, family, limit)?.count() as u64)
}

/// Reversed refinement order: every block of `p` sits inside a block of `q`.
pub fn compare_leq(p: &Partition, q: &Partition) -> Result<bool> {
    if p.n != q.n {
        return Err(Error::Dimension(alloc::format!("partitions of {} and {}", p.n, q.n)));
    }
    let lq = q.labels();
    Ok(p.blocks.iter().all(|b| b.iter().all(|&e| lq[e - 1] == lq[b[0] - 1])))
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Join in the lattice of all partitions.
pub fn join_partitions(p: &Partition, q: &Partition) -> Result<Partition> {
    if p.n != q.n {
        return Err(Error::Dimension(alloc::format!("partitions of {} and {}", p.n, q.n)));
    }
    let n = p.n;
    let mut parent: Vec<usize> = (0..n).collect();
    for b in p.blocks.iter().chain(q.blocks.iter()) {
        let r0 = find(&mut parent, b[0] - 1);
        for &e in &b[1..] {
            let r = find(&mut parent, e - 1);
            if r != r0 {
                parent[r] = r0;
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for e in 0..n {
        let r = find(&mut parent, e);
        if label[r] == usize::MAX {
            label[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[label[r]].push(e + 1);
    }
    Ok(Partition { n, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: usize, family: Family) -> Vec<Partition> {
        enumerate_partitions(n, Family::All)
            .unwrap()
            .into_iter()
            .filter(|p| match family {
                Family::All => true,
                Family::NonCrossing => p.is_noncrossing(),
                Family::Interval => p.is_interval(),
            })
            .collect()
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_partitions(1, Family::All).unwrap(), vec![Partition::one(1)]);
        assert_eq!(enumerate_partitions(4, Family::NonCrossing).unwrap().len(), 14);
        assert_eq!(enumerate_partitions(4, Family::Interval).unwrap().len(), 8);
        assert_eq!(enumerate_partitions(5, Family::All).unwrap().len(), 52);
    }

    #[test]
    fn pruned_generation_equals_filtering() {
        for n in 1..=9 {
            for fam in [Family::NonCrossing, Family::Interval] {
                assert_eq!(enumerate_partitions(n, fam).unwrap(), brute(n, fam), "n={n} {fam:?}");
            }
        }
    }

    #[test]
    fn size_limit() {
        assert!(matches!(
            enumerate_partitions(15, Family::NonCrossing),
            Err(Error::SizeLimit { limit: 14, .. })
        ));
        assert!(enumerate_partitions(0, Family::All).is_err());
    }

    #[test]
    fn order_examples() {
        let p = Partition::parse("{1,3|2}").unwrap();
        assert!(compare_leq(&Partition::singletons(3), &p).unwrap());
        assert!(compare_leq(&p, &Partition::one(3)).unwrap());
        let a = Partition::parse("{1,2|3}").unwrap();
        assert!(!compare_leq(&a, &p).unwrap());
        assert!(!compare_leq(&p, &a).unwrap());
        assert!(compare_leq(&a, &Partition::one(4)).is_err());
    }

    #[test]
    fn join_examples() {
        let p = Partition::parse("{1|2,3}").unwrap();
        let q = Partition::parse("{1,2|3}").unwrap();
        assert_eq!(join_partitions(&p, &q).unwrap(), Partition::one(3));
        assert_eq!(join_partitions(&p, &p).unwrap(), p);
        assert_eq!(join_partitions(&Partition::singletons(3), &q).unwrap(), q);
    }

    #[test]
    fn brace_round_trip() {
        for p in enumerate_partitions(5, Family::All).unwrap() {
            assert_eq!(Partition::parse(&p.to_brace_string()).unwrap(), p);
        }
    }
}
