//! Dominant weight combinatorics for B_n.
//!
//! A [`Weight`] stores integer entries plus a `spin_shift` flag; the flag marks
//! the half-integral weight `λ' = λ + (1/2, …, 1/2)` without leaving integer
//! arithmetic. Rank is always explicit: `(1,0)` and `(1)` are different weights.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight {
    pub entries: Vec<i64>,
    #[serde(rename = "spin")]
    pub spin_shift: bool,
}

impl Weight {
    pub fn new(entries: Vec<i64>) -> Self {
        assert!(!entries.is_empty(), "weights have rank at least 1");
        Self { entries, spin_shift: false }
    }

    pub fn spin(entries: Vec<i64>) -> Self {
        assert!(!entries.is_empty(), "weights have rank at least 1");
        Self { entries, spin_shift: true }
    }

    pub fn zero(rank: usize) -> Self {
        Self::new(vec![0; rank])
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    /// The spin-shifted companion `λ'`.
    pub fn shifted(&self) -> Self {
        Self { entries: self.entries.clone(), spin_shift: true }
    }

    /// The integral part of a (possibly shifted) weight.
    pub fn integral(&self) -> Self {
        Self { entries: self.entries.clone(), spin_shift: false }
    }

    /// Entries doubled, so half-integral weights become integers.
    pub fn doubled(&self) -> Vec<i64> {
        self.entries.iter().map(|e| 2 * e + i64::from(self.spin_shift)).collect()
    }

    pub fn first(&self) -> i64 {
        self.entries[0]
    }

    pub fn is_dominant(&self) -> bool {
        is_dominant(self)
    }

    /// `self + ε_index` (0-based index).
    pub fn raised(&self, index: usize) -> Self {
        let mut w = self.clone();
        w.entries[index] += 1;
        w
    }

    /// `self - ε_index` (0-based index).
    pub fn lowered(&self, index: usize) -> Self {
        let mut w = self.clone();
        w.entries[index] -= 1;
        w
    }

    /// If `other = self ± ε_i`, returns `(i, +1 or -1)`.
    pub fn unit_step_to(&self, other: &Weight) -> Option<(usize, i64)> {
        if self.rank() != other.rank() || self.spin_shift != other.spin_shift {
            return None;
        }
        let diffs: Vec<(usize, i64)> = self
            .entries
            .iter()
            .zip(&other.entries)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, (a, b))| (i, b - a))
            .collect();
        match diffs.as_slice() {
            [(i, d)] if d.abs() == 1 => Some((*i, *d)),
            _ => None,
        }
    }

    fn check_compatible(&self, other: &Weight) -> Result<()> {
        if self.rank() != other.rank() {
            return Err(Error::RankMismatch(self.rank(), other.rank()));
        }
        if self.spin_shift != other.spin_shift {
            return Err(Error::SpinMismatch);
        }
        Ok(())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = if self.spin_shift {
            self.entries.iter().map(|e| format!("{}/2", 2 * e + 1)).collect()
        } else {
            self.entries.iter().map(|e| e.to_string()).collect()
        };
        write!(f, "({})", parts.join(","))
    }
}

/// Signs `σ_i ∈ {+1, -1}` selecting the summand `λ + Σ σ_i ε_i / 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignCode {
    pub signs: Vec<i8>,
}

impl SignCode {
    /// Number of positions where two codes differ.
    pub fn hamming(&self, other: &SignCode) -> usize {
        self.signs.iter().zip(&other.signs).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for SignCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<&str> = self.signs.iter().map(|s| if *s > 0 { "+" } else { "-" }).collect();
        write!(f, "({})", s.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// A dominant lattice path. `nodes` always run from the lower weight to the
/// upper one; `direction` records whether the path is read forwards
/// (lower → upper) or as a reverse path (upper → lower). `changes` are
/// 1-based coordinate indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<Weight>,
    pub changes: Vec<usize>,
    pub direction: Direction,
}

impl Path {
    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn lower(&self) -> &Weight {
        &self.nodes[0]
    }

    pub fn upper(&self) -> &Weight {
        self.nodes.last().expect("paths have at least one node")
    }

    pub fn reversed(&self) -> Path {
        let direction = match self.direction {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        };
        Path { direction, ..self.clone() }
    }

    /// Builds a path from a start weight and a change sequence, validating
    /// dominance of every node.
    pub fn from_changes(lower: &Weight, changes: &[usize]) -> Result<Path> {
        let mut nodes = vec![lower.clone()];
        for &c in changes {
            if c == 0 || c > lower.rank() {
                return Err(Error::IndexOutOfRange(format!("change {c} for rank {}", lower.rank())));
            }
            let next = nodes.last().expect("nonempty").raised(c - 1);
            if !next.is_dominant() {
                return Err(Error::NotDominant(next));
            }
            nodes.push(next);
        }
        Ok(Path { nodes, changes: changes.to_vec(), direction: Direction::Forward })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEnumeration {
    pub paths: Vec<Path>,
    pub truncated: bool,
}

/// Entries non-increasing and the last entry non-negative.
pub fn is_dominant(w: &Weight) -> bool {
    w.entries.windows(2).all(|p| p[0] >= p[1]) && w.entries.last().is_some_and(|e| *e >= 0)
}

/// `ν ≼ μ` in the componentwise (Bruhat) order.
pub fn bruhat_leq(nu: &Weight, mu: &Weight) -> Result<bool> {
    nu.check_compatible(mu)?;
    Ok(nu.entries.iter().zip(&mu.entries).all(|(n, m)| m >= n))
}

pub fn manhattan_distance(mu: &Weight, nu: &Weight) -> Result<u64> {
    if mu.rank() != nu.rank() {
        return Err(Error::RankMismatch(mu.rank(), nu.rank()));
    }
    Ok(mu.entries.iter().zip(&nu.entries).map(|(a, b)| (a - b).unsigned_abs()).sum())
}

/// Whether `lambda` lies in the box `B(mu)`.
pub fn in_box(mu: &Weight, lambda: &Weight) -> bool {
    if mu.rank() != lambda.rank() || mu.spin_shift || lambda.spin_shift {
        return false;
    }
    let n = mu.rank();
    (0..n).all(|i| {
        let floor = if i + 1 < n { mu.entries[i + 1] } else { 0 };
        mu.entries[i] >= lambda.entries[i] && lambda.entries[i] >= floor
    })
}

/// The box `B(μ)`: dominant integral λ with `μ_i ≥ λ_i ≥ μ_{i+1}` and
/// `μ_n ≥ λ_n ≥ 0`, in descending lexicographic order (μ first).
pub fn weight_box(mu: &Weight) -> Result<Vec<Weight>> {
    if mu.spin_shift {
        return Err(Error::NotIntegral(mu.clone()));
    }
    if !mu.is_dominant() {
        return Err(Error::NotDominant(mu.clone()));
    }
    let n = mu.rank();
    let ranges: Vec<(i64, i64)> = (0..n)
        .map(|i| (if i + 1 < n { mu.entries[i + 1] } else { 0 }, mu.entries[i]))
        .collect();
    let mut out = Vec::new();
    let mut current = vec![0i64; n];
    fn rec(i: usize, ranges: &[(i64, i64)], current: &mut Vec<i64>, out: &mut Vec<Weight>) {
        if i == ranges.len() {
            out.push(Weight::new(current.clone()));
            return;
        }
        let (lo, hi) = ranges[i];
        for v in (lo..=hi).rev() {
            current[i] = v;
            rec(i + 1, ranges, current, out);
        }
    }
    rec(0, &ranges, &mut current, &mut out);
    Ok(out)
}

fn check_interval(nu: &Weight, mu: &Weight) -> Result<()> {
    if !bruhat_leq(nu, mu)? {
        return Err(Error::NotBruhatOrdered { lower: nu.clone(), upper: mu.clone() });
    }
    for w in [nu, mu] {
        if !w.is_dominant() {
            return Err(Error::NotDominant(w.clone()));
        }
    }
    Ok(())
}

/// All dominant paths from ν up to μ, lexicographic in the change sequence,
/// truncated after `cap` paths.
pub fn enumerate_paths(nu: &Weight, mu: &Weight, cap: usize) -> Result<PathEnumeration> {
    check_interval(nu, mu)?;
    let mut paths = Vec::new();
    let mut truncated = false;
    let mut changes = Vec::new();
    let mut nodes = vec![nu.clone()];

    fn dfs(
        mu: &Weight,
        cap: usize,
        nodes: &mut Vec<Weight>,
        changes: &mut Vec<usize>,
        paths: &mut Vec<Path>,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        let here = nodes.last().expect("nonempty").clone();
        if here == *mu {
            if paths.len() == cap {
                *truncated = true;
                return;
            }
            paths.push(Path { nodes: nodes.clone(), changes: changes.clone(), direction: Direction::Forward });
            return;
        }
        for i in 0..here.rank() {
            if here.entries[i] >= mu.entries[i] {
                continue;
            }
            let next = here.raised(i);
            if !next.is_dominant() {
                continue;
            }
            nodes.push(next);
            changes.push(i + 1);
            dfs(mu, cap, nodes, changes, paths, truncated);
            nodes.pop();
            changes.pop();
        }
    }

    dfs(mu, cap, &mut nodes, &mut changes, &mut paths, &mut truncated);
    Ok(PathEnumeration { paths, truncated })
}

/// Number of dominant paths from ν up to μ (no cap).
pub fn count_paths(nu: &Weight, mu: &Weight) -> Result<u128> {
    check_interval(nu, mu)?;
    let mut memo = std::collections::HashMap::new();
    fn rec(w: &Weight, mu: &Weight, memo: &mut std::collections::HashMap<Weight, u128>) -> u128 {
        if w == mu {
            return 1;
        }
        if let Some(v) = memo.get(w) {
            return *v;
        }
        let mut total = 0;
        for i in 0..w.rank() {
            if w.entries[i] < mu.entries[i] {
                let next = w.raised(i);
                if next.is_dominant() {
                    total += rec(&next, mu, memo);
                }
            }
        }
        memo.insert(w.clone(), total);
        total
    }
    Ok(rec(nu, mu, &mut memo))
}

/// The preferred path: fill coordinate 1 first, then 2, and so on; its change
/// sequence is non-decreasing.
pub fn canonical_path(nu: &Weight, mu: &Weight) -> Result<Path> {
    check_interval(nu, mu)?;
    let changes: Vec<usize> = (0..nu.rank())
        .flat_map(|i| std::iter::repeat_n(i + 1, (mu.entries[i] - nu.entries[i]) as usize))
        .collect();
    Path::from_changes(nu, &changes)
}

/// Dominant members of `Λ_λ = {λ + Σ σ_i ε_i / 2}` as spin-shifted weights,
/// each with its sign code. Codes run with `+` before `-`, first coordinate
/// most significant.
pub fn summand_weights(lambda: &Weight) -> Vec<(Weight, SignCode)> {
    assert!(!lambda.spin_shift, "summand_weights takes an integral weight");
    let n = lambda.rank();
    let mut out = Vec::new();
    for bits in 0..(1u32 << n) {
        let signs: Vec<i8> = (0..n).map(|i| if bits >> (n - 1 - i) & 1 == 0 { 1 } else { -1 }).collect();
        let entries = lambda
            .entries
            .iter()
            .zip(&signs)
            .map(|(l, s)| if *s > 0 { *l } else { l - 1 })
            .collect();
        let w = Weight::spin(entries);
        if w.is_dominant() {
            out.push((w, SignCode { signs }));
        }
    }
    out
}

/// Dominant integral weights of the given rank with every entry at most
/// `max_entry`, in descending lexicographic order.
pub fn dominant_weights(rank: usize, max_entry: i64) -> Vec<Weight> {
    fn fill(prefix: &mut Vec<i64>, rank: usize, ceiling: i64, out: &mut Vec<Weight>) {
        if prefix.len() == rank {
            out.push(Weight::new(prefix.clone()));
            return;
        }
        for e in (0..=ceiling).rev() {
            prefix.push(e);
            fill(prefix, rank, e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if rank > 0 && max_entry >= 0 {
        fill(&mut Vec::new(), rank, max_entry, &mut out);
    }
    out
}

/// Dominant integral `ν ≼ μ`, in descending lexicographic order.
pub fn dominant_below(mu: &Weight) -> Vec<Weight> {
    dominant_weights(mu.rank(), mu.first())
        .into_iter()
        .filter(|nu| nu.entries.iter().zip(&mu.entries).all(|(a, b)| a <= b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(e: &[i64]) -> Weight {
        Weight::new(e.to_vec())
    }

    #[test]
    fn dominance() {
        assert!(is_dominant(&w(&[2, 1, 0])));
        assert!(!is_dominant(&w(&[1, 2])));
        assert!(is_dominant(&w(&[0, 0, 0])));
        assert!(!is_dominant(&w(&[1, -1])));
    }

    #[test]
    fn bruhat_order() {
        assert!(bruhat_leq(&w(&[1, 0]), &w(&[2, 1])).unwrap());
        assert!(!bruhat_leq(&w(&[2, 0]), &w(&[1, 1])).unwrap());
        assert!(bruhat_leq(&w(&[2, 1]), &w(&[2, 1])).unwrap());
        assert_eq!(bruhat_leq(&w(&[1]), &w(&[1, 0])), Err(Error::RankMismatch(1, 2)));
        assert_eq!(bruhat_leq(&w(&[1]), &Weight::spin(vec![1])), Err(Error::SpinMismatch));
    }

    #[test]
    fn distances() {
        assert_eq!(manhattan_distance(&w(&[3, 1]), &w(&[1, 0])).unwrap(), 3);
        assert_eq!(manhattan_distance(&w(&[2, 1]), &w(&[2, 1])).unwrap(), 0);
        assert_eq!(manhattan_distance(&w(&[2, 1]), &w(&[1, 1])).unwrap(), 1);
    }

    #[test]
    fn boxes() {
        assert_eq!(weight_box(&w(&[2, 1])).unwrap(), vec![w(&[2, 1]), w(&[2, 0]), w(&[1, 1]), w(&[1, 0])]);
        assert_eq!(weight_box(&w(&[0, 0])).unwrap(), vec![w(&[0, 0])]);
        assert_eq!(weight_box(&w(&[1, 1, 1])).unwrap(), vec![w(&[1, 1, 1]), w(&[1, 1, 0])]);
        assert!(matches!(weight_box(&w(&[1, 2])), Err(Error::NotDominant(_))));
    }

    #[test]
    fn paths_from_zero_to_21() {
        let e = enumerate_paths(&w(&[0, 0]), &w(&[2, 1]), 100).unwrap();
        assert!(!e.truncated);
        let seqs: Vec<Vec<usize>> = e.paths.iter().map(|p| p.changes.clone()).collect();
        assert_eq!(seqs, vec![vec![1, 1, 2], vec![1, 2, 1]]);
        assert_eq!(enumerate_paths(&w(&[1, 0]), &w(&[2, 1]), 100).unwrap().paths.len(), 2);
        let trivial = enumerate_paths(&w(&[2, 1]), &w(&[2, 1]), 100).unwrap();
        assert_eq!(trivial.paths.len(), 1);
        assert!(trivial.paths[0].is_empty());
    }

    #[test]
    fn truncation_flag() {
        let e = enumerate_paths(&w(&[0, 0]), &w(&[2, 1]), 1).unwrap();
        assert_eq!(e.paths.len(), 1);
        assert!(e.truncated);
        assert!(matches!(enumerate_paths(&w(&[2, 0]), &w(&[1, 1]), 5), Err(Error::NotBruhatOrdered { .. })));
    }

    #[test]
    fn canonical_paths() {
        let p = canonical_path(&w(&[0, 0]), &w(&[2, 1])).unwrap();
        assert_eq!(p.nodes, vec![w(&[0, 0]), w(&[1, 0]), w(&[2, 0]), w(&[2, 1])]);
        assert_eq!(canonical_path(&w(&[0]), &w(&[4])).unwrap().len(), 4);
        assert_eq!(canonical_path(&w(&[1, 0]), &w(&[2, 1])).unwrap().changes, vec![1, 2]);
    }

    #[test]
    fn summands() {
        let s = summand_weights(&w(&[1, 0]));
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], (Weight::spin(vec![1, 0]), SignCode { signs: vec![1, 1] }));
        assert_eq!(s[1], (Weight::spin(vec![0, 0]), SignCode { signs: vec![-1, 1] }));
        let s11: Vec<Weight> = summand_weights(&w(&[1, 1])).into_iter().map(|x| x.0).collect();
        assert_eq!(s11, vec![Weight::spin(vec![1, 1]), Weight::spin(vec![1, 0]), Weight::spin(vec![0, 0])]);
        assert_eq!(summand_weights(&w(&[0, 0, 0])).len(), 1);
    }

    #[test]
    fn display() {
        assert_eq!(Weight::spin(vec![1, 0]).to_string(), "(3/2,1/2)");
        assert_eq!(w(&[2, 1]).to_string(), "(2,1)");
    }

    fn dominant_weight(max_rank: usize, max_entry: i64) -> impl Strategy<Value = Weight> {
        (1..=max_rank)
            .prop_flat_map(move |n| proptest::collection::vec(0..=max_entry, n))
            .prop_map(|mut v| {
                v.sort_unstable_by(|a, b| b.cmp(a));
                Weight::new(v)
            })
    }

    proptest! {
        #[test]
        fn box_is_bounded(mu in dominant_weight(4, 4)) {
            let b = weight_box(&mu).unwrap();
            prop_assert!(b.contains(&mu));
            let mut tail = mu.entries[1..].to_vec();
            tail.push(0);
            prop_assert!(b.contains(&Weight::new(tail.clone())));
            prop_assert_eq!(manhattan_distance(&mu, &Weight::new(tail)).unwrap(), mu.first() as u64);
            for l in &b {
                prop_assert!(bruhat_leq(l, &mu).unwrap());
                prop_assert!(l.is_dominant());
                prop_assert!(manhattan_distance(&mu, l).unwrap() <= mu.first() as u64);
            }
        }

        #[test]
        fn paths_have_manhattan_length(mu in dominant_weight(3, 3)) {
            let nu = Weight::zero(mu.rank());
            let e = enumerate_paths(&nu, &mu, 10_000).unwrap();
            let d = manhattan_distance(&mu, &nu).unwrap() as usize;
            prop_assert_eq!(e.paths.len() as u128, count_paths(&nu, &mu).unwrap());
            for p in &e.paths {
                prop_assert_eq!(p.len(), d);
                prop_assert!(p.nodes.iter().all(Weight::is_dominant));
            }
            prop_assert!(e.paths.contains(&canonical_path(&nu, &mu).unwrap()));
        }

        #[test]
        fn summands_have_multiplicity_one(lambda in dominant_weight(4, 3)) {
            let s = summand_weights(&lambda);
            prop_assert!(s.len() <= 1 << lambda.rank());
            let mut ws: Vec<&Weight> = s.iter().map(|x| &x.0).collect();
            ws.sort();
            ws.dedup();
            prop_assert_eq!(ws.len(), s.len());
            prop_assert_eq!(&s[0].0, &lambda.shifted());
        }
    }

    #[test]
    fn dominant_enumeration() {
        assert_eq!(dominant_weights(2, 1).len(), 3);
        assert_eq!(dominant_weights(3, 3).len(), 20);
        let below = dominant_below(&Weight::new(vec![2, 1]));
        assert_eq!(below.len(), 5);
        assert!(below.iter().all(|w| w.is_dominant()));
    }
}
