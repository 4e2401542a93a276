//! The FFT computation tree over `[n]^d`, its node labels, root-containing
//! subtrees, leaf weights and the Kraft-inequality utilities shared by every
//! recovery routine.
//!
//! A node is a path from the root. Step `i` of the path refines one bit of one
//! coordinate: the last coordinate is refined first, least significant bit
//! first. Taking the left child at a step sets that bit in the node label,
//! taking the right child leaves it clear.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Result, SfftError};

/// Largest supported tree depth `d * log2(n)`; depth and prefix share one word.
pub const MAX_DEPTH: u32 = 58;

const PREFIX_BITS: u32 = 58;
const PREFIX_MASK: u64 = (1 << PREFIX_BITS) - 1;

/// Side length and dimension of the signal domain `[n]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    n: u64,
    d: usize,
    log_n: u32,
}

impl Dims {
    pub fn new(n: u64, d: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return domain(format!("side length {n} is not a power of two >= 2"));
        }
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        let log_n = n.trailing_zeros();
        if (d as u64) * (log_n as u64) > MAX_DEPTH as u64 {
            return domain(format!(
                "tree depth {}*{} exceeds {MAX_DEPTH}",
                d, log_n
            ));
        }
        Ok(Self { n, d, log_n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn log_n(&self) -> u32 {
        self.log_n
    }

    /// Total number of points `N = n^d`.
    pub fn size(&self) -> u64 {
        1u64 << self.depth()
    }

    /// Depth of the full tree, `log2 N`.
    pub fn depth(&self) -> u32 {
        self.log_n * self.d as u32
    }

    /// Coordinate and bit refined by the step leaving depth `level`.
    pub fn step(&self, level: u32) -> (usize, u32) {
        let q = (level / self.log_n) as usize;
        (self.d - 1 - q, level % self.log_n)
    }

    pub fn check_freq(&self, f: &FreqVec) -> Result<()> {
        if f.0.len() != self.d {
            return domain(format!("frequency {f} has {} coordinates, expected {}", f.0.len(), self.d));
        }
        if f.0.iter().any(|&c| c >= self.n) {
            return domain(format!("frequency {f} out of range for n = {}", self.n));
        }
        Ok(())
    }

    /// Flat index of a point, coordinate 0 in the low bits.
    pub fn flatten(&self, point: &[u64]) -> u64 {
        point
            .iter()
            .enumerate()
            .fold(0, |acc, (c, &v)| acc | (v << (c as u32 * self.log_n)))
    }

    pub fn unflatten(&self, idx: u64) -> FreqVec {
        FreqVec((0..self.d).map(|c| self.coord(idx, c)).collect())
    }

    /// Coordinate `c` of a flat index.
    pub fn coord(&self, idx: u64, c: usize) -> u64 {
        (idx >> (c as u32 * self.log_n)) & (self.n - 1)
    }

    /// `a . b mod n` for two flat indices.
    pub fn dot_mod(&self, a: u64, b: u64) -> u64 {
        let mut acc = 0u64;
        for c in 0..self.d {
            acc = acc.wrapping_add(self.coord(a, c).wrapping_mul(self.coord(b, c)));
        }
        acc & (self.n - 1)
    }

    /// `a - b` coordinatewise mod n, on flat indices.
    pub fn sub_mod(&self, a: u64, b: u64) -> u64 {
        let mut out = 0u64;
        for c in 0..self.d {
            let v = self.coord(a, c).wrapping_sub(self.coord(b, c)) & (self.n - 1);
            out |= v << (c as u32 * self.log_n);
        }
        out
    }

    pub fn add_mod(&self, a: u64, b: u64) -> u64 {
        let mut out = 0u64;
        for c in 0..self.d {
            let v = self.coord(a, c).wrapping_add(self.coord(b, c)) & (self.n - 1);
            out |= v << (c as u32 * self.log_n);
        }
        out
    }
}

/// A frequency (or time point) in `[n]^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreqVec(pub Vec<u64>);

impl FreqVec {
    pub fn zeros(d: usize) -> Self {
        FreqVec(vec![0; d])
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

impl fmt::Display for FreqVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for FreqVec {
    type Err = SfftError;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|e| SfftError::Parse(format!("bad frequency component {p:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(FreqVec)
    }
}

/// A vertex of the full FFT tree, packed as `depth << 58 | prefix`.
///
/// Bit `i` of the prefix is 1 when step `i` went to the left child. The
/// derived order compares depth first, then prefix.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u64);

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Node({}, {:#b})", self.depth(), self.prefix())
    }
}

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn new(depth: u32, prefix: u64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return domain(format!("depth {depth} exceeds {MAX_DEPTH}"));
        }
        if depth < 64 && prefix >> depth != 0 {
            return domain(format!("prefix {prefix:#b} does not fit depth {depth}"));
        }
        Ok(Self::raw(depth, prefix))
    }

    fn raw(depth: u32, prefix: u64) -> Self {
        NodeId(((depth as u64) << PREFIX_BITS) | prefix)
    }

    pub fn depth(self) -> u32 {
        (self.0 >> PREFIX_BITS) as u32
    }

    pub fn prefix(self) -> u64 {
        self.0 & PREFIX_MASK
    }

    pub fn is_root(self) -> bool {
        self.0 == 0
    }

    pub(crate) fn left(self) -> Self {
        let d = self.depth();
        Self::raw(d + 1, self.prefix() | (1 << d))
    }

    pub(crate) fn right(self) -> Self {
        Self::raw(self.depth() + 1, self.prefix())
    }

    /// Was the last step into this node a left step?
    pub fn is_left_child(self) -> bool {
        let d = self.depth();
        d > 0 && (self.prefix() >> (d - 1)) & 1 == 1
    }

    /// `(left, right)` children; fails at full depth.
    pub fn children(self, dims: &Dims) -> Result<(NodeId, NodeId)> {
        if self.depth() >= dims.depth() {
            return domain(format!("{self:?} is a leaf of the full tree"));
        }
        Ok((self.left(), self.right()))
    }

    pub fn parent(self) -> Result<NodeId> {
        match self.depth() {
            0 => domain("the root has no parent"),
            d => Ok(self.ancestor_at(d - 1)),
        }
    }

    pub(crate) fn parent_unchecked(self) -> NodeId {
        self.ancestor_at(self.depth() - 1)
    }

    pub fn sibling(self) -> Result<NodeId> {
        let p = self.parent()?;
        Ok(if self.is_left_child() { p.right() } else { p.left() })
    }

    /// Ancestor at `depth <= self.depth()`.
    pub fn ancestor_at(self, depth: u32) -> NodeId {
        debug_assert!(depth <= self.depth());
        Self::raw(depth, self.prefix() & low_mask(depth))
    }

    /// True when `self` is `other` or one of its ancestors.
    pub fn is_ancestor_of(self, other: NodeId) -> bool {
        let d = self.depth();
        d <= other.depth() && other.prefix() & low_mask(d) == self.prefix()
    }

    pub fn comparable(self, other: NodeId) -> bool {
        self.is_ancestor_of(other) || other.is_ancestor_of(self)
    }

    /// Depth of the deepest common ancestor.
    pub fn lca_depth(self, other: NodeId) -> u32 {
        let m = self.depth().min(other.depth());
        let diff = self.prefix() ^ other.prefix();
        m.min(diff.trailing_zeros())
    }

    /// Leaves below `self` occupy the half-open range `[lo, hi)` of
    /// [`NodeId::path_key`] values.
    pub fn path_range(self, full_depth: u32) -> (u64, u64) {
        let lo = self.path_key(full_depth);
        (lo, lo + (1u64 << (full_depth - self.depth())))
    }

    /// The path read root-first as a `full_depth`-bit integer.
    pub fn path_key(self, full_depth: u32) -> u64 {
        let d = self.depth();
        if d == 0 {
            return 0;
        }
        (self.prefix().reverse_bits() >> (64 - d)) << (full_depth - d)
    }
}

fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn check_node(node: NodeId, dims: &Dims) -> Result<()> {
    if node.depth() > dims.depth() {
        return domain(format!("{node:?} deeper than tree depth {}", dims.depth()));
    }
    Ok(())
}

/// Label of `node` under the FFT tree labeling rules.
pub fn label(node: NodeId, dims: &Dims) -> Result<FreqVec> {
    check_node(node, dims)?;
    Ok(label_unchecked(node, dims))
}

pub(crate) fn label_unchecked(node: NodeId, dims: &Dims) -> FreqVec {
    dims.unflatten(label_index(node, dims))
}

/// Swaps `log n`-bit blocks `q` and `d-1-q`: maps prefixes to flat labels and back.
fn block_reverse(x: u64, dims: &Dims) -> u64 {
    let ln = dims.log_n;
    let mask = dims.n - 1;
    let d = dims.d as u32;
    let mut out = 0u64;
    for q in 0..d {
        out |= ((x >> (q * ln)) & mask) << ((d - 1 - q) * ln);
    }
    out
}

/// Label of `node` as a flat index.
pub fn label_index(node: NodeId, dims: &Dims) -> u64 {
    block_reverse(node.prefix(), dims)
}

/// Full-depth leaf labeled by the flat index `f`.
pub fn leaf_of_index(f: u64, dims: &Dims) -> NodeId {
    NodeId::raw(dims.depth(), block_reverse(f, dims))
}

/// The full-depth leaf whose label is `f`.
pub fn leaf_of(f: &FreqVec, dims: &Dims) -> Result<NodeId> {
    dims.check_freq(f)?;
    Ok(leaf_of_index(dims.flatten(&f.0), dims))
}

/// Is `f` in the frequency cone of `node`?
pub fn cone_contains(node: NodeId, f: &FreqVec, dims: &Dims) -> Result<bool> {
    check_node(node, dims)?;
    Ok(node.is_ancestor_of(leaf_of(f, dims)?))
}

/// Exact dyadic rational `num / 2^log_den`, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyadic {
    num: u128,
    log_den: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, log_den: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, log_den: 0 };

    /// Sum of `2^{-w}` over the given weights.
    pub fn kraft_sum(weights: impl IntoIterator<Item = u32>) -> Self {
        const DEN: u32 = 64;
        let num = weights
            .into_iter()
            .map(|w| {
                assert!(w <= DEN, "weight {w} too large");
                1u128 << (DEN - w)
            })
            .sum();
        Self::reduced(num, DEN)
    }

    fn reduced(mut num: u128, mut log_den: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let tz = num.trailing_zeros().min(log_den);
        num >>= tz;
        log_den -= tz;
        Dyadic { num, log_den }
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn log_denominator(&self) -> u32 {
        self.log_den
    }

    /// `self >= 1/2`
    pub fn at_least_half(&self) -> bool {
        // num / 2^L >= 1/2  <=>  2 num >= 2^L
        self.log_den == 0 && self.num >= 1 || (self.num << 1) >= (1u128 << self.log_den)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / 2f64.powi(self.log_den as i32)
    }
}

/// A root-containing subtree of the full FFT tree.
///
/// Nodes are closed under parent and every internal node keeps one or two
/// children. Weights are computed on demand by walking the root path, which
/// is at most [`MAX_DEPTH`] steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTree {
    // bit 1: left child present, bit 0: right child present
    nodes: BTreeMap<NodeId, u8>,
    leaves: BTreeSet<NodeId>,
}

impl Default for SubTree {
    fn default() -> Self {
        Self::new()
    }
}

fn child_bit(child: NodeId) -> u8 {
    if child.is_left_child() {
        0b10
    } else {
        0b01
    }
}

impl SubTree {
    /// The tree consisting of the root alone.
    pub fn new() -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(NodeId::ROOT, 0);
        let mut leaves = BTreeSet::new();
        leaves.insert(NodeId::ROOT);
        SubTree { nodes, leaves }
    }

    /// `T(S)`: the smallest root-containing subtree containing every node of `S`.
    pub fn spanning(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut t = Self::new();
        for v in nodes {
            t.insert_path(v);
        }
        t
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_bare_root(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Leaves in `(depth, prefix)` order.
    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.leaves.iter().copied()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.leaves.contains(&v)
    }

    /// Leaves of the subtree hanging below `v` (including `v` itself if it is a leaf).
    pub fn leaves_under(&self, v: NodeId) -> Vec<NodeId> {
        self.leaves
            .iter()
            .copied()
            .filter(|&u| v.is_ancestor_of(u))
            .collect()
    }

    /// `(left, right)` children present in the tree.
    pub fn children(&self, v: NodeId) -> (Option<NodeId>, Option<NodeId>) {
        match self.nodes.get(&v) {
            None => (None, None),
            Some(&mask) => (
                (mask & 0b10 != 0).then(|| v.left()),
                (mask & 0b01 != 0).then(|| v.right()),
            ),
        }
    }

    /// Adds `v` and all of its ancestors.
    pub fn insert_path(&mut self, v: NodeId) {
        let mut cur = v;
        if self.nodes.contains_key(&cur) {
            return;
        }
        self.nodes.insert(cur, 0);
        self.leaves.insert(cur);
        while !cur.is_root() {
            let p = cur.parent_unchecked();
            let bit = child_bit(cur);
            match self.nodes.get_mut(&p) {
                Some(mask) => {
                    if *mask == 0 {
                        self.leaves.remove(&p);
                    }
                    *mask |= bit;
                    return;
                }
                None => {
                    self.nodes.insert(p, bit);
                }
            }
            cur = p;
        }
    }

    /// Removes leaf `u`, then removes ancestors left without children, stopping
    /// at `stop` (or the root). A childless `stop` becomes a leaf again.
    ///
    /// Returns `false` if `u` was not a leaf.
    pub fn remove_leaf(&mut self, u: NodeId, stop: NodeId) -> bool {
        if !self.leaves.contains(&u) || u.is_root() {
            return false;
        }
        let mut cur = u;
        loop {
            self.nodes.remove(&cur);
            self.leaves.remove(&cur);
            let p = cur.parent_unchecked();
            let mask = self.nodes.get_mut(&p).expect("tree closed under parent");
            *mask &= !child_bit(cur);
            if *mask != 0 {
                return true;
            }
            if p == stop || p.is_root() {
                self.leaves.insert(p);
                return true;
            }
            cur = p;
        }
    }

    fn two_children(&self, v: NodeId) -> bool {
        self.nodes.get(&v) == Some(&0b11)
    }

    /// Depths of the ancestors of `v` that have two children, ascending.
    pub fn anc_levels(&self, v: NodeId) -> Result<Vec<u32>> {
        if !self.contains(v) {
            return domain(format!("{v:?} is not in the tree"));
        }
        Ok((0..v.depth())
            .filter(|&l| self.two_children(v.ancestor_at(l)))
            .collect())
    }

    /// Number of two-child ancestors of `v`.
    pub fn weight(&self, v: NodeId) -> Result<u32> {
        Ok(self.anc_levels(v)?.len() as u32)
    }

    pub(crate) fn weight_unchecked(&self, v: NodeId) -> u32 {
        (0..v.depth())
            .filter(|&l| self.two_children(v.ancestor_at(l)))
            .count() as u32
    }

    fn check_leaves<'a>(&self, set: impl IntoIterator<Item = &'a NodeId>) -> Result<()> {
        for u in set {
            if !self.is_leaf(*u) {
                return domain(format!("{u:?} is not a leaf of the tree"));
            }
        }
        Ok(())
    }

    /// Exact `sum_{u in S} 2^{-w_T(u)}`.
    pub fn kraft_mass<'a>(&self, set: impl IntoIterator<Item = &'a NodeId> + Clone) -> Result<Dyadic> {
        self.check_leaves(set.clone())?;
        Ok(Dyadic::kraft_sum(set.into_iter().map(|&u| self.weight_unchecked(u))))
    }

    /// Minimum-weight leaf outside `excluded`; ties go to smaller depth, then prefix.
    pub fn min_weight_leaf(&self, excluded: &BTreeSet<NodeId>) -> Result<NodeId> {
        min_weight(
            self.leaves
                .iter()
                .filter(|u| !excluded.contains(u))
                .map(|&u| (u, self.weight_unchecked(u))),
        )
        .ok_or_else(|| SfftError::Domain("no eligible leaf".into()))
    }

    /// Greedy cheap-to-estimate subset of the leaf set `set`.
    pub fn extract_cheap_subset(&self, set: &[NodeId]) -> Result<Vec<NodeId>> {
        self.check_leaves(set)?;
        let weighted: Vec<_> = set.iter().map(|&u| (u, self.weight_unchecked(u))).collect();
        extract_cheap_subset_weighted(&weighted)
    }
}

/// Argmin of weight with the `(depth, prefix)` tie rule.
pub fn min_weight(items: impl IntoIterator<Item = (NodeId, u32)>) -> Option<NodeId> {
    items
        .into_iter()
        .min_by_key(|&(u, w)| (w, u))
        .map(|(u, _)| u)
}

/// Grows `L` by ascending weight until `|L| (8 + 4 log2 |S|) >= max_{L} 2^w`.
///
/// `weighted` pairs each leaf with its weight in the tree of interest; the
/// Kraft mass of the whole set must be at least one half.
pub fn extract_cheap_subset_weighted(weighted: &[(NodeId, u32)]) -> Result<Vec<NodeId>> {
    if !Dyadic::kraft_sum(weighted.iter().map(|&(_, w)| w)).at_least_half() {
        return domain("Kraft mass of the candidate set is below 1/2");
    }
    let mut sorted = weighted.to_vec();
    sorted.sort_by_key(|&(u, w)| (w, u));
    let factor = 8.0 + 4.0 * (sorted.len() as f64).log2();
    let mut out = Vec::new();
    let mut max_cost = f64::INFINITY;
    for (u, w) in sorted {
        if (out.len() as f64) * factor >= max_cost {
            break;
        }
        out.push(u);
        // ascending order: the newest leaf carries the max weight
        max_cost = 2f64.powi(w as i32);
    }
    Ok(out)
}

/// Splitting tree of a nonempty frequency set.
pub fn splitting_tree(set: &[FreqVec], dims: &Dims) -> Result<SubTree> {
    if set.is_empty() {
        return domain("splitting tree of an empty set");
    }
    let mut t = SubTree::new();
    for f in set {
        t.insert_path(leaf_of(f, dims)?);
    }
    Ok(t)
}

/// `w_S(v)`: weight of `v` in `T(S ∪ {v})`.
///
/// An ancestor of `v` branches exactly when some node of `S` leaves the
/// root-to-`v` path there, so this is the number of distinct divergence depths.
pub fn weight_wrt_set<'a>(set: impl IntoIterator<Item = &'a NodeId>, v: NodeId) -> u32 {
    let mut seen = 0u64;
    for &e in set {
        if !e.comparable(v) {
            seen |= 1 << e.lca_depth(v);
        }
    }
    seen.count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims(n: u64, d: usize) -> Dims {
        Dims::new(n, d).unwrap()
    }

    fn node(depth: u32, prefix: u64) -> NodeId {
        NodeId::new(depth, prefix).unwrap()
    }

    fn fv(c: &[u64]) -> FreqVec {
        FreqVec(c.to_vec())
    }

    #[test]
    fn dims_validation() {
        assert!(Dims::new(3, 1).is_err());
        assert!(Dims::new(1, 1).is_err());
        assert!(Dims::new(4, 0).is_err());
        assert!(Dims::new(1 << 30, 2).is_err());
        let d = dims(4, 2);
        assert_eq!(d.size(), 16);
        assert_eq!(d.depth(), 4);
    }

    #[test]
    fn labels_match_the_n4_d2_figure() {
        let d = dims(4, 2);
        assert_eq!(label(node(1, 1), &d).unwrap(), fv(&[0, 1]));
        assert_eq!(label(node(1, 0), &d).unwrap(), fv(&[0, 0]));
        assert_eq!(label(node(4, 0b1111), &d).unwrap(), fv(&[3, 3]));
        assert_eq!(label(NodeId::ROOT, &d).unwrap(), fv(&[0, 0]));
        // left-left then right-right: second coordinate done, first untouched
        assert_eq!(label(node(2, 0b11), &d).unwrap(), fv(&[0, 3]));
        assert_eq!(label(node(3, 0b101), &d).unwrap(), fv(&[1, 1]));
    }

    #[test]
    fn label_rejects_deep_nodes() {
        assert!(label(node(5, 0), &dims(4, 2)).is_err());
    }

    #[test]
    fn children_and_parent() {
        let d = dims(4, 1);
        let (l, r) = NodeId::ROOT.children(&d).unwrap();
        assert_eq!(l, node(1, 1));
        assert_eq!(r, node(1, 0));
        assert_eq!(l.parent().unwrap(), NodeId::ROOT);
        assert!(NodeId::ROOT.parent().is_err());
        assert!(node(2, 0).children(&d).is_err());
        assert_eq!(l.sibling().unwrap(), r);
        assert!(l.is_left_child() && !r.is_left_child());
    }

    #[test]
    fn cone_of_depth_one_left_node() {
        let d = dims(4, 2);
        let v = node(1, 1);
        assert!(cone_contains(v, &fv(&[0, 1]), &d).unwrap());
        assert!(!cone_contains(v, &fv(&[0, 2]), &d).unwrap());
        // enumerate descendants via label(): exactly the f with odd last coordinate
        let mut from_labels = BTreeSet::new();
        for p in 0..4u64 {
            let leaf = node(4, 1 | (p << 1) & 0b1110);
            from_labels.insert(label(leaf, &d).unwrap());
        }
        for f1 in 0..4 {
            for f2 in 0..4 {
                let f = fv(&[f1, f2]);
                let inside = cone_contains(v, &f, &d).unwrap();
                assert_eq!(inside, f2 % 2 == 1);
            }
        }
        assert!(from_labels.iter().all(|f| f.0[1] % 2 == 1));
        assert!(cone_contains(NodeId::ROOT, &fv(&[2, 3]), &d).unwrap());
    }

    #[test]
    fn leaf_cone_is_a_single_frequency() {
        let d = dims(8, 2);
        let leaf = node(6, 0b101101);
        let f = label(leaf, &d).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let g = fv(&[a, b]);
                assert_eq!(cone_contains(leaf, &g, &d).unwrap(), g == f);
            }
        }
    }

    #[test]
    fn label_is_a_bijection_on_leaves() {
        for (n, d) in [(4096u64, 1usize), (64, 2), (16, 3), (8, 4)] {
            let dm = dims(n, d);
            let mut seen = BTreeSet::new();
            for p in 0..dm.size() {
                let leaf = node(dm.depth(), p);
                let f = label(leaf, &dm).unwrap();
                assert_eq!(leaf_of(&f, &dm).unwrap(), leaf);
                assert!(seen.insert(f));
            }
            assert_eq!(seen.len() as u64, dm.size());
        }
    }

    #[test]
    fn cone_matches_ancestry_exhaustively() {
        for (n, d) in [(1024u64, 1usize), (32, 2), (8, 3)] {
            let dm = dims(n, d);
            let depth = dm.depth();
            let leaves: Vec<_> = (0..dm.size())
                .map(|p| (node(depth, p), label(node(depth, p), &dm).unwrap()))
                .collect();
            for dep in 0..=depth {
                // a sample of nodes per depth keeps this quadratic loop cheap
                let step = ((1u64 << dep) / 16).max(1);
                for p in (0..(1u64 << dep)).step_by(step as usize) {
                    let v = node(dep, p);
                    for (leaf, f) in &leaves {
                        assert_eq!(cone_contains(v, f, &dm).unwrap(), v.is_ancestor_of(*leaf));
                    }
                }
            }
        }
    }

    #[test]
    fn splitting_tree_of_zero_and_two() {
        let d = dims(4, 1);
        let t = splitting_tree(&[fv(&[0]), fv(&[2])], &d).unwrap();
        // root, depth-1 right node (label 0), leaves 0 and 2
        assert_eq!(t.len(), 4);
        assert!(t.contains(node(1, 0)));
        let leaves: Vec<_> = t.leaves().collect();
        assert_eq!(leaves.len(), 2);
        let labels: BTreeSet<_> = leaves.iter().map(|&u| label(u, &d).unwrap()).collect();
        assert_eq!(labels, [fv(&[0]), fv(&[2])].into_iter().collect());
        for u in leaves {
            assert_eq!(t.weight(u).unwrap(), 1);
            assert_eq!(t.anc_levels(u).unwrap(), vec![1]);
        }
        assert!(splitting_tree(&[], &d).is_err());
    }

    #[test]
    fn single_frequency_splitting_tree_is_a_path() {
        let d = dims(16, 2);
        let t = splitting_tree(&[fv(&[5, 9])], &d).unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(t.num_leaves(), 1);
        for v in t.nodes() {
            assert_eq!(t.weight(v).unwrap(), 0);
            assert!(t.anc_levels(v).unwrap().is_empty());
        }
    }

    #[test]
    fn weight_of_missing_node_is_an_error() {
        let t = SubTree::new();
        assert!(t.weight(node(1, 0)).is_err());
    }

    #[test]
    fn weight_wrt_set_basics() {
        let v = node(3, 0b101);
        assert_eq!(weight_wrt_set(&[], v), 0);
        assert_eq!(weight_wrt_set(&[v], v), 0);
        let s = [node(1, 0), node(3, 0b001)];
        // diverges at depth 0 and depth 1
        assert_eq!(weight_wrt_set(&s, v), 2);
        let t = SubTree::spanning(s.iter().copied().chain([v]));
        assert_eq!(t.weight(v).unwrap(), 2);
    }

    #[test]
    fn kraft_examples() {
        let d = dims(4, 1);
        let t = splitting_tree(&[fv(&[0]), fv(&[2]), fv(&[1])], &d).unwrap();
        let leaves: Vec<_> = t.leaves().collect();
        let ws: Vec<_> = leaves.iter().map(|&u| t.weight(u).unwrap()).collect();
        let mut sorted = ws.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 2, 2]);
        assert_eq!(t.kraft_mass(&leaves).unwrap(), Dyadic::ONE);
        assert_eq!(t.kraft_mass(&[]).unwrap(), Dyadic::ZERO);
        assert!(t.kraft_mass(&[NodeId::ROOT]).is_err());
        assert!(Dyadic::kraft_sum([1]).at_least_half());
        assert!(!Dyadic::kraft_sum([2]).at_least_half());
        assert!(Dyadic::kraft_sum([2, 2]).at_least_half());
    }

    #[test]
    fn min_weight_leaf_ties_and_exclusion() {
        let t = SubTree::spanning([node(2, 0b00), node(2, 0b10), node(1, 1)]);
        // weights: (1,1) -> 1, (2,0b00) -> 2, (2,0b10) -> 2
        assert_eq!(t.min_weight_leaf(&BTreeSet::new()).unwrap(), node(1, 1));
        let ex: BTreeSet<_> = [node(1, 1)].into_iter().collect();
        assert_eq!(t.min_weight_leaf(&ex).unwrap(), node(2, 0b00));
        let all: BTreeSet<_> = t.leaves().collect();
        assert!(t.min_weight_leaf(&all).is_err());
        let single = SubTree::spanning([node(3, 0b110)]);
        assert_eq!(single.min_weight_leaf(&BTreeSet::new()).unwrap(), node(3, 0b110));
    }

    #[test]
    fn extract_cheap_subset_examples() {
        let t = SubTree::spanning([node(1, 0), node(1, 1)]);
        let s: Vec<_> = t.leaves().collect();
        assert_eq!(t.extract_cheap_subset(&s).unwrap(), vec![node(1, 0)]);

        let t = SubTree::spanning([node(1, 0), node(2, 0b01), node(2, 0b11)]);
        let s: Vec<_> = t.leaves().collect();
        assert_eq!(t.extract_cheap_subset(&s).unwrap(), vec![node(1, 0)]);

        let path = SubTree::spanning([node(4, 0b1010)]);
        assert_eq!(path.extract_cheap_subset(&[node(4, 0b1010)]).unwrap(), vec![node(4, 0b1010)]);

        // Kraft mass 1/4 violates the precondition
        assert!(t.extract_cheap_subset(&[node(2, 0b01)]).is_err());
    }

    #[test]
    fn remove_leaf_prunes_to_stop() {
        let mut t = SubTree::spanning([node(3, 0b000), node(3, 0b100)]);
        assert!(t.remove_leaf(node(3, 0b100), NodeId::ROOT));
        assert_eq!(t.leaves().collect::<Vec<_>>(), vec![node(3, 0)]);
        assert_eq!(t.len(), 4);
        assert!(t.remove_leaf(node(3, 0), NodeId::ROOT));
        assert!(t.is_bare_root());
        assert!(t.is_leaf(NodeId::ROOT));

        let mut t = SubTree::spanning([node(3, 0b000)]);
        assert!(t.remove_leaf(node(3, 0), node(1, 0)));
        assert_eq!(t.leaves().collect::<Vec<_>>(), vec![node(1, 0)]);
        assert!(!t.remove_leaf(NodeId::ROOT, NodeId::ROOT));
    }

    #[test]
    fn path_ranges_cover_descendants() {
        let full = 6;
        let v = node(2, 0b10);
        let (lo, hi) = v.path_range(full);
        for p in 0..64u64 {
            let leaf = node(full, p);
            let k = leaf.path_key(full);
            assert_eq!(v.is_ancestor_of(leaf), lo <= k && k < hi);
        }
    }

    #[test]
    fn freqvec_text_round_trip() {
        let f: FreqVec = "3,1".parse().unwrap();
        assert_eq!(f, fv(&[3, 1]));
        assert_eq!(f.to_string(), "3,1");
        assert!("3,x".parse::<FreqVec>().is_err());
    }

    fn arb_dims() -> impl Strategy<Value = Dims> {
        prop_oneof![
            Just(dims(64, 1)),
            Just(dims(16, 2)),
            Just(dims(8, 3)),
            Just(dims(1 << 10, 2)),
        ]
    }

    fn arb_nodes(max: usize) -> impl Strategy<Value = (Dims, Vec<NodeId>)> {
        arb_dims().prop_flat_map(move |dm| {
            let depth = dm.depth();
            let one = (0..=depth, any::<u64>()).prop_map(move |(d, p)| node(d, p & low_mask(d)));
            (Just(dm), prop::collection::vec(one, 1..max))
        })
    }

    proptest! {
        #[test]
        fn parent_of_children_round_trips((dm, nodes) in arb_nodes(8)) {
            for v in nodes {
                if v.depth() < dm.depth() {
                    let (l, r) = v.children(&dm).unwrap();
                    prop_assert_eq!(l.parent().unwrap(), v);
                    prop_assert_eq!(r.parent().unwrap(), v);
                    let fl = label(l, &dm).unwrap();
                    let fr = label(r, &dm).unwrap();
                    let fv_ = label(v, &dm).unwrap();
                    prop_assert_eq!(&fr, &fv_);
                    let (c, bit) = dm.step(v.depth());
                    let mut expect = fv_.clone();
                    expect.0[c] += 1 << bit;
                    prop_assert_eq!(fl, expect);
                }
            }
        }

        #[test]
        fn splitting_tree_has_one_leaf_per_frequency(
            (dm, picks) in arb_dims().prop_flat_map(|dm| (Just(dm), prop::collection::vec(any::<u64>(), 1..40)))
        ) {
            let set: BTreeSet<FreqVec> = picks.iter().map(|&p| label(node(dm.depth(), p & (dm.size() - 1)), &dm).unwrap()).collect();
            let set: Vec<_> = set.into_iter().collect();
            let t = splitting_tree(&set, &dm).unwrap();
            prop_assert_eq!(t.num_leaves(), set.len());
            for u in t.leaves() {
                prop_assert_eq!(u.depth(), dm.depth());
                prop_assert!(set.contains(&label(u, &dm).unwrap()));
            }
            // node set is exactly the nodes whose cone meets the set
            for v in t.nodes() {
                prop_assert!(set.iter().any(|f| cone_contains(v, f, &dm).unwrap()));
            }
        }

        #[test]
        fn kraft_equality_and_averaging((_dm, nodes) in arb_nodes(30)) {
            let t = SubTree::spanning(nodes);
            let leaves: Vec<_> = t.leaves().collect();
            prop_assert_eq!(t.kraft_mass(&leaves).unwrap(), Dyadic::ONE);
            let best = t.min_weight_leaf(&BTreeSet::new()).unwrap();
            let bound = (leaves.len() as f64).log2().floor() as u32;
            prop_assert!(t.weight(best).unwrap() <= bound);
            for &u in &leaves {
                prop_assert!(t.weight(u).unwrap() <= u.depth());
            }
        }

        #[test]
        fn weight_is_subadditive(
            (_dm, a) in arb_nodes(10),
            b in prop::collection::vec((0u32..=10, any::<u64>()), 0..10),
            v in (0u32..=10, any::<u64>()),
        ) {
            let b: Vec<_> = b.into_iter().map(|(d, p)| node(d, p & low_mask(d))).collect();
            let v = node(v.0, v.1 & low_mask(v.0));
            let both: Vec<_> = a.iter().chain(&b).copied().collect();
            prop_assert!(weight_wrt_set(&both, v) <= weight_wrt_set(&a, v) + weight_wrt_set(&b, v));
            let spanned = SubTree::spanning(a.iter().copied().chain([v]));
            prop_assert_eq!(spanned.weight(v).unwrap(), weight_wrt_set(&a, v));
        }

        #[test]
        fn cheap_subset_guarantee((_dm, nodes) in arb_nodes(40), keep in any::<u64>()) {
            let t = SubTree::spanning(nodes);
            let leaves: Vec<_> = t.leaves().collect();
            // a random subset that still carries Kraft mass >= 1/2
            let mut s: Vec<_> = leaves.iter().enumerate().filter(|(i, _)| (keep >> (i % 64)) & 1 == 1).map(|(_, &u)| u).collect();
            if !t.kraft_mass(&s).unwrap().at_least_half() {
                s = leaves.clone();
            }
            let l = t.extract_cheap_subset(&s).unwrap();
            prop_assert!(!l.is_empty());
            prop_assert!(l.iter().all(|u| s.contains(u)));
            let max_cost = l.iter().map(|&u| 2f64.powi(t.weight(u).unwrap() as i32)).fold(0.0, f64::max);
            prop_assert!(l.len() as f64 * (8.0 + 4.0 * (s.len() as f64).log2()) >= max_cost);
        }
    }
}
