//! Tree exploration over an abstract oracle: the cubic frontier explorer and
//! the backtracking explorer with geometric budgets.
//!
//! Both are generic over [`ExplorationOracle`], so the same code runs against
//! the Fourier-backed oracle and against [`SyntheticOracle`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_complex::Complex64 as C64;

use crate::tree::{weight_wrt_set, Dims, NodeId, SubTree};

/// Recovered leaves with their estimates. Keys are full-depth leaves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Found {
    map: BTreeMap<NodeId, C64>,
}

impl Found {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics if `leaf` is already present.
    pub fn insert(&mut self, leaf: NodeId, value: C64) {
        let prev = self.map.insert(leaf, value);
        assert!(prev.is_none(), "Found union of overlapping key sets at {leaf:?}");
    }

    pub fn get(&self, leaf: NodeId) -> Option<C64> {
        self.map.get(&leaf).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, C64)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }

    /// `self + other`; panics on overlapping keys.
    pub fn union(&mut self, other: &Found) {
        for (k, v) in other.iter() {
            self.insert(k, v);
        }
    }

    pub fn to_vec(&self) -> Vec<(NodeId, C64)> {
        self.iter().collect()
    }
}

impl FromIterator<(NodeId, C64)> for Found {
    fn from_iter<I: IntoIterator<Item = (NodeId, C64)>>(iter: I) -> Self {
        let mut f = Found::new();
        for (k, v) in iter {
            f.insert(k, v);
        }
        f
    }
}

pub type Excluded = BTreeSet<NodeId>;

/// The two primitives the explorers are written against.
///
/// Guarantees only hold when `v` is isolated by `(found, excluded)` and the
/// subtree of `v` holds at most `budget` nonzero leaves; otherwise answers
/// may be arbitrary.
pub trait ExplorationOracle {
    fn dims(&self) -> Dims;

    /// True iff every leaf under `v` is zero or correctly estimated in `found`.
    fn zero_test(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], v: NodeId, budget: usize) -> bool;

    /// Value of the full-depth `leaf` after subtracting `found`.
    fn estimate(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], leaf: NodeId) -> C64;
}

/// Set of frontier nodes kept as the leaves of their spanning tree, so the
/// weight of a member with respect to the set is its weight in the tree.
#[derive(Debug, Clone)]
pub(crate) struct Frontier {
    tree: SubTree,
    len: usize,
}

impl Frontier {
    pub(crate) fn new() -> Self {
        Frontier { tree: SubTree::new(), len: 0 }
    }

    pub(crate) fn single(v: NodeId) -> Self {
        let mut f = Self::new();
        f.insert(v);
        f
    }

    pub(crate) fn insert(&mut self, v: NodeId) {
        debug_assert!(!self.contains(v));
        self.tree.insert_path(v);
        self.len += 1;
    }

    pub(crate) fn remove(&mut self, v: NodeId) {
        debug_assert!(self.contains(v));
        if !v.is_root() {
            self.tree.remove_leaf(v, NodeId::ROOT);
        }
        self.len -= 1;
    }

    pub(crate) fn contains(&self, v: NodeId) -> bool {
        self.len > 0 && self.tree.is_leaf(v)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.tree.leaves().take(if self.len == 0 { 0 } else { usize::MAX })
    }

    /// Minimum-weight member; ties by depth then prefix.
    pub(crate) fn pop_min(&mut self) -> Option<NodeId> {
        if self.len == 0 {
            return None;
        }
        let z = self.tree.min_weight_leaf(&BTreeSet::new()).ok()?;
        self.remove(z);
        Some(z)
    }
}

/// Counters collected during one exploration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExploreStats {
    pub calls: u64,
    pub slow_calls: u64,
    pub failed_calls: u64,
    pub requeued: u64,
    pub max_depth: u32,
}

struct Explorer<'a, O: ExplorationOracle> {
    oracle: &'a mut O,
    full_depth: u32,
    log_n: f64,
    alpha: f64,
    k: usize,
    found: Vec<(NodeId, C64)>,
    keys: HashSet<NodeId>,
    excluded: Vec<NodeId>,
    stats: ExploreStats,
}

impl<'a, O: ExplorationOracle> Explorer<'a, O> {
    fn new(oracle: &'a mut O, found: &Found, excluded: &Excluded, alpha: f64, k: usize) -> Self {
        let dims = oracle.dims();
        let mut ex = Explorer {
            oracle,
            full_depth: dims.depth(),
            log_n: dims.depth() as f64,
            alpha,
            k,
            found: Vec::new(),
            keys: HashSet::new(),
            excluded: excluded.iter().copied().collect(),
            stats: ExploreStats::default(),
        };
        ex.push_found(&found.to_vec());
        ex
    }

    fn push_found(&mut self, entries: &[(NodeId, C64)]) {
        for &(leaf, v) in entries {
            assert!(self.keys.insert(leaf), "Found union of overlapping key sets at {leaf:?}");
            self.found.push((leaf, v));
        }
    }

    fn pop_found(&mut self, count: usize) {
        for _ in 0..count {
            let (leaf, _) = self.found.pop().expect("found stack underflow");
            self.keys.remove(&leaf);
        }
    }

    fn push_excluded(&mut self, frontier: &Frontier) -> usize {
        let before = self.excluded.len();
        self.excluded.extend(frontier.members());
        self.excluded.len() - before
    }

    fn pop_excluded(&mut self, count: usize) {
        let len = self.excluded.len() - count;
        self.excluded.truncate(len);
    }

    fn zero_test(&mut self, v: NodeId, budget: usize) -> bool {
        self.oracle.zero_test(&self.found, &self.excluded, v, budget)
    }

    fn estimate(&mut self, leaf: NodeId) -> C64 {
        self.oracle.estimate(&self.found, &self.excluded, leaf)
    }

    fn slow(&mut self, v: NodeId, b: usize) -> Vec<(NodeId, C64)> {
        self.stats.slow_calls += 1;
        let cap = 6.0 * b as f64 * self.log_n;
        let mut frontier = Frontier::single(v);
        let mut steps = 1u64;
        let mut out: Vec<(NodeId, C64)> = Vec::new();
        while !frontier.is_empty() {
            if steps as f64 > cap {
                return Vec::new();
            }
            let z = frontier.pop_min().expect("nonempty frontier");
            steps += 1;
            let pushed = self.push_excluded(&frontier);
            self.push_found(&out);
            if z.depth() == self.full_depth {
                let est = self.estimate(z);
                self.pop_found(out.len());
                if est != C64::default() {
                    out.push((z, est));
                }
            } else {
                let empty = self.zero_test(z, b);
                self.pop_found(out.len());
                if !empty {
                    frontier.insert(z.left());
                    frontier.insert(z.right());
                }
            }
            self.pop_excluded(pushed);
        }
        out
    }

    fn exact(&mut self, v: NodeId, s: usize, level: u32) -> Vec<(NodeId, C64)> {
        self.stats.calls += 1;
        self.stats.max_depth = self.stats.max_depth.max(level);
        if s as f64 <= 1.0 / self.alpha {
            let out = self.slow(v, s);
            return if out.len() <= s { out } else { self.fail() };
        }
        let cap = 6.0 * self.log_n / self.alpha;
        let mut out: Vec<(NodeId, C64)> = Vec::new();
        let mut frontier = Frontier::single(v);
        let mut steps = 1u64;
        loop {
            let z = frontier.pop_min().expect("loop runs only on a nonempty frontier");
            steps += 1;
            let pushed = self.push_excluded(&frontier);
            self.push_found(&out);
            let found_len = self.found.len();
            if self.zero_test(z, s) {
                // nothing left under z
            } else if z.depth() == self.full_depth {
                let est = self.estimate(z);
                if est != C64::default() {
                    self.push_found(&[(z, est)]);
                    out.push((z, est));
                }
            } else {
                let s_desc = ((self.alpha * s as f64).floor() as usize)
                    .min(self.k.saturating_sub(found_len))
                    .max(1);
                let (zl, zr) = (z.left(), z.right());
                self.excluded.push(zr);
                let got_left = self.exact(zl, s_desc, level + 1);
                self.excluded.pop();
                self.excluded.push(zl);
                let got_right = self.exact(zr, s_desc, level + 1);
                self.excluded.pop();
                let ok_left = self.verify(zl, zr, &got_left, s);
                let ok_right = self.verify(zr, zl, &got_right, s);
                for (child, ok, got) in [(zl, ok_left, got_left), (zr, ok_right, got_right)] {
                    if ok {
                        self.push_found(&got);
                        out.extend(got);
                    } else {
                        self.stats.requeued += 1;
                        frontier.insert(child);
                    }
                }
            }
            self.pop_found(out.len());
            self.pop_excluded(pushed);
            // overshoot of |out| inside one iteration is only checked here
            if frontier.is_empty() || steps as f64 > cap || out.len() > s {
                break;
            }
        }
        if frontier.is_empty() && steps as f64 <= cap && out.len() <= s {
            out
        } else {
            self.fail()
        }
    }

    fn fail(&mut self) -> Vec<(NodeId, C64)> {
        self.stats.failed_calls += 1;
        Vec::new()
    }

    fn verify(&mut self, child: NodeId, sibling: NodeId, got: &[(NodeId, C64)], s: usize) -> bool {
        self.push_found(got);
        self.excluded.push(sibling);
        let ok = self.zero_test(child, s);
        self.excluded.pop();
        self.pop_found(got.len());
        ok
    }
}

/// Frontier explorer with budget `b` for every zero test. Returns an empty
/// map when more than `6 b log2 N` nodes would be visited.
pub fn slow_exact_recovery<O: ExplorationOracle>(
    oracle: &mut O,
    found: &Found,
    excluded: &Excluded,
    v: NodeId,
    b: usize,
) -> Found {
    let mut ex = Explorer::new(oracle, found, excluded, 0.5, b);
    ex.slow(v, b).into_iter().collect()
}

/// Backtracking explorer: children are explored with budget `α s` and
/// verified at budget `s`, failed children are re-queued.
pub fn exact_recovery<O: ExplorationOracle>(
    oracle: &mut O,
    found: &Found,
    excluded: &Excluded,
    v: NodeId,
    s: usize,
    k: usize,
    alpha: f64,
) -> Found {
    exact_recovery_traced(oracle, found, excluded, v, s, k, alpha).0
}

pub fn exact_recovery_traced<O: ExplorationOracle>(
    oracle: &mut O,
    found: &Found,
    excluded: &Excluded,
    v: NodeId,
    s: usize,
    k: usize,
    alpha: f64,
) -> (Found, ExploreStats) {
    assert!(alpha > 0.0 && alpha <= 0.5, "alpha must lie in (0, 1/2]");
    let mut ex = Explorer::new(oracle, found, excluded, alpha, k);
    let out = ex.exact(v, s.max(1), 0);
    (out.into_iter().collect(), ex.stats)
}

/// `2^{-⌈2 sqrt(log k · log log N)⌉}` clamped to `[2^{-⌈log k⌉}, 1/2]`.
pub fn default_alpha(k: usize, big_n: u64) -> f64 {
    let log_k = (k.max(1) as f64).log2();
    let loglog = (big_n.max(4) as f64).log2().log2();
    let e = (2.0 * (log_k * loglog).sqrt()).ceil() as i32;
    let floor = 2f64.powi(-(log_k.ceil() as i32));
    2f64.powi(-e).max(floor).min(0.5)
}

/// `2^{-⌈log k / 2⌉}` capped at 1/2: the root explores children with budget
/// about `√k`, which then fall straight into the frontier explorer.
pub fn one_level_alpha(k: usize) -> f64 {
    let log_k = (k.max(1) as f64).log2();
    2f64.powi(-((log_k / 2.0).ceil() as i32)).min(0.5)
}

/// Answer policy of [`SyntheticOracle`] outside the guaranteed regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Always the ground truth.
    Truthful,
    /// Ground truth only when required; otherwise claims the subtree is done
    /// and returns garbage estimates.
    Adversarial,
}

/// Abstract cost and call counts charged by an oracle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostLedger {
    pub zero_tests: u64,
    pub estimates: u64,
    pub cost: f64,
}

/// Oracle over an explicit leaf-value map, for testing explorers without
/// any Fourier machinery.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    dims: Dims,
    truth: BTreeMap<u64, (NodeId, C64)>,
    mode: OracleMode,
    pub ledger: CostLedger,
}

impl SyntheticOracle {
    /// Zero values are dropped. Leaves must be at full depth.
    pub fn new(dims: Dims, truth: impl IntoIterator<Item = (NodeId, C64)>, mode: OracleMode) -> Self {
        let d = dims.depth();
        let truth = truth
            .into_iter()
            .filter(|(_, v)| *v != C64::default())
            .map(|(leaf, v)| {
                assert_eq!(leaf.depth(), d, "truth keys must be full-depth leaves");
                (leaf.path_key(d), (leaf, v))
            })
            .collect();
        SyntheticOracle { dims, truth, mode, ledger: CostLedger::default() }
    }

    pub fn truth(&self) -> Found {
        self.truth.values().copied().collect()
    }

    fn under(&self, v: NodeId) -> impl Iterator<Item = &(NodeId, C64)> + '_ {
        let (lo, hi) = v.path_range(self.dims.depth());
        self.truth.range(lo..hi).map(|(_, e)| e)
    }

    fn value(&self, leaf: NodeId) -> C64 {
        self.truth
            .get(&leaf.path_key(self.dims.depth()))
            .map(|e| e.1)
            .unwrap_or_default()
    }

    /// Nonzero leaves under `v`.
    pub fn heavy_count(&self, v: NodeId) -> usize {
        self.under(v).count()
    }

    fn residual_zero_under(&self, found: &[(NodeId, C64)], v: NodeId) -> bool {
        let lookup: BTreeMap<NodeId, C64> = found.iter().copied().filter(|(l, _)| v.is_ancestor_of(*l)).collect();
        self.under(v).all(|(l, val)| lookup.get(l) == Some(val))
            && lookup.iter().all(|(&l, &est)| self.value(l) == est)
    }

    fn isolated(&self, found: &[(NodeId, C64)], excluded: &[NodeId], v: NodeId) -> bool {
        is_isolated_slices(found, excluded, v, |l| self.value(l), self.truth.values().map(|e| e.0))
    }

    fn charge(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], v: NodeId, b: usize) {
        let w = weight_wrt_set(excluded, v);
        self.ledger.cost += (2f64.powi(w as i32) + found.len() as f64) * b as f64;
    }
}

impl ExplorationOracle for SyntheticOracle {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn zero_test(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], v: NodeId, budget: usize) -> bool {
        self.ledger.zero_tests += 1;
        self.charge(found, excluded, v, budget);
        let truth = self.residual_zero_under(found, v);
        match self.mode {
            OracleMode::Truthful => truth,
            OracleMode::Adversarial => {
                if self.heavy_count(v) <= budget && self.isolated(found, excluded, v) {
                    truth
                } else {
                    true
                }
            }
        }
    }

    fn estimate(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], leaf: NodeId) -> C64 {
        self.ledger.estimates += 1;
        self.charge(found, excluded, leaf, 1);
        let prior = found.iter().find(|(l, _)| *l == leaf).map(|e| e.1).unwrap_or_default();
        let truth = self.value(leaf) - prior;
        match self.mode {
            OracleMode::Adversarial if !self.isolated(found, excluded, leaf) => truth + C64::new(1e3, -7.0),
            _ => truth,
        }
    }
}

fn is_isolated_slices(
    found: &[(NodeId, C64)],
    excluded: &[NodeId],
    v: NodeId,
    value: impl Fn(NodeId) -> C64,
    nonzero: impl Iterator<Item = NodeId>,
) -> bool {
    if excluded.iter().any(|e| e.comparable(v)) {
        return false;
    }
    let covered = |l: NodeId| excluded.iter().any(|e| e.is_ancestor_of(l));
    let found_map: BTreeMap<NodeId, C64> = found.iter().copied().collect();
    let wrong_truth = nonzero
        .filter(|&l| !v.is_ancestor_of(l))
        .any(|l| found_map.get(&l) != Some(&value(l)) && !covered(l));
    let wrong_found = found_map
        .iter()
        .any(|(&l, &est)| !v.is_ancestor_of(l) && value(l) != est && !covered(l));
    !(wrong_truth || wrong_found)
}

/// Whether `v` is isolated: no excluded node overlaps `v`'s subtree, and every
/// leaf outside it either has a zero residual `truth − found` or lies under an
/// excluded node.
pub fn is_isolated(found: &Found, excluded: &Excluded, v: NodeId, truth: &BTreeMap<NodeId, C64>) -> bool {
    let ex: Vec<_> = excluded.iter().copied().collect();
    is_isolated_slices(
        &found.to_vec(),
        &ex,
        v,
        |l| truth.get(&l).copied().unwrap_or_default(),
        truth.iter().filter(|(_, v)| **v != C64::default()).map(|(l, _)| *l),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn dims(n: u64, d: usize) -> Dims {
        Dims::new(n, d).unwrap()
    }

    fn leaf(dm: &Dims, p: u64) -> NodeId {
        NodeId::new(dm.depth(), p).unwrap()
    }

    fn random_truth(dm: &Dims, k: usize, seed: u64) -> Vec<(NodeId, C64)> {
        let mut rng = rng_from(seed);
        let mut set = BTreeMap::new();
        // half the time cluster the support under one random subtree
        let cluster = rng.gen_bool(0.5);
        let base_depth = if cluster { rng.gen_range(0..dm.depth() / 2 + 1) } else { 0 };
        let base = rng.gen_range(0..(1u64 << base_depth));
        while set.len() < k {
            let low = rng.gen_range(0..dm.size()) & !((1u64 << base_depth) - 1);
            let p = low | base;
            set.insert(leaf(dm, p), C64::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)));
        }
        set.into_iter().collect()
    }

    #[test]
    fn alpha_schedules() {
        assert_eq!(default_alpha(1, 1 << 20), 0.5);
        assert_eq!(default_alpha(64, 1 << 20), 2f64.powi(-6));
        let mut prev = 1.0;
        for k in 1..300 {
            let a = default_alpha(k, 1 << 20);
            assert!(a <= prev);
            prev = a;
        }
        assert_eq!(one_level_alpha(1), 0.5);
        assert_eq!(one_level_alpha(16), 0.25);
        assert_eq!(one_level_alpha(64), 0.125);
        assert_eq!(one_level_alpha(32), 0.125);
    }

    #[test]
    fn isolation_examples() {
        let dm = dims(8, 1);
        let empty = BTreeMap::new();
        assert!(is_isolated(&Found::new(), &Excluded::new(), NodeId::ROOT, &empty));
        let l5 = leaf(&dm, 5);
        let truth: BTreeMap<_, _> = [(l5, C64::new(1.0, 0.0))].into_iter().collect();
        let v = NodeId::new(1, 0).unwrap();
        assert!(!v.is_ancestor_of(l5));
        assert!(!is_isolated(&Found::new(), &Excluded::new(), v, &truth));
        let ex: Excluded = [NodeId::new(1, 1).unwrap()].into_iter().collect();
        assert!(is_isolated(&Found::new(), &ex, v, &truth));
        let found: Found = [(l5, C64::new(1.0, 0.0))].into_iter().collect();
        assert!(is_isolated(&found, &Excluded::new(), v, &truth));
        // an excluded ancestor of v breaks isolation
        let ex: Excluded = [NodeId::ROOT].into_iter().collect();
        assert!(!is_isolated(&Found::new(), &ex, v, &truth));
    }

    #[test]
    #[should_panic(expected = "overlapping")]
    fn found_union_must_be_disjoint() {
        let l = NodeId::new(2, 1).unwrap();
        let mut a: Found = [(l, C64::new(1.0, 0.0))].into_iter().collect();
        a.union(&a.clone());
    }

    #[test]
    fn slow_on_zero_subtree_stops_after_one_test() {
        let dm = dims(16, 1);
        let mut o = SyntheticOracle::new(dm, [], OracleMode::Truthful);
        let out = slow_exact_recovery(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, 3);
        assert!(out.is_empty());
        assert_eq!(o.ledger.zero_tests, 1);
    }

    #[test]
    fn slow_recovers_a_single_leaf() {
        let dm = dims(16, 2);
        let l = leaf(&dm, 0b1011_0110);
        let val = C64::new(0.3, -2.0);
        let mut o = SyntheticOracle::new(dm, [(l, val)], OracleMode::Adversarial);
        let out = slow_exact_recovery(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, 1);
        assert_eq!(out.to_vec(), vec![(l, val)]);
    }

    #[test]
    fn slow_over_budget_with_truthful_oracle_still_recovers() {
        let dm = dims(64, 1);
        let truth = random_truth(&dm, 5, 3);
        let mut o = SyntheticOracle::new(dm, truth.clone(), OracleMode::Truthful);
        let out = slow_exact_recovery(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, 4);
        assert_eq!(out.to_vec(), truth);
    }

    #[test]
    fn slow_never_expands_zero_subtrees() {
        let dm = dims(256, 1);
        let truth = random_truth(&dm, 6, 8);
        let mut o = SyntheticOracle::new(dm, truth.clone(), OracleMode::Truthful);
        slow_exact_recovery(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, 6);
        // internal nodes tested: at most (#nonzero subtrees) + their children
        let nonzero_internal: BTreeSet<_> = truth
            .iter()
            .flat_map(|(l, _)| (0..dm.depth()).map(move |dd| l.ancestor_at(dd)))
            .collect();
        assert!(o.ledger.zero_tests as usize <= 2 * nonzero_internal.len() + 1);
        assert!((o.ledger.zero_tests + o.ledger.estimates) as f64 <= 6.0 * 6.0 * 8.0);
    }

    #[test]
    fn exact_recovers_with_backtracking() {
        let dm = dims(1024, 1);
        for seed in 0..20 {
            let truth = random_truth(&dm, 24, seed);
            for alpha in [0.5, 0.25, one_level_alpha(24)] {
                let mut o = SyntheticOracle::new(dm, truth.clone(), OracleMode::Adversarial);
                let (out, stats) =
                    exact_recovery_traced(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, 24, 24, alpha);
                assert_eq!(out.to_vec(), truth, "seed {seed} alpha {alpha}");
                assert!(stats.calls > 1);
            }
        }
    }

    #[test]
    fn underbudget_child_call_may_fail_and_parent_catches_it() {
        // 4 leaves under the left child of the root, budget 2 for that child
        let dm = dims(64, 1);
        let truth: Vec<_> = [1u64, 3, 5, 7].iter().map(|&p| (leaf(&dm, p), C64::new(1.0, 0.0))).collect();
        let mut o = SyntheticOracle::new(dm, truth.clone(), OracleMode::Adversarial);
        let left = NodeId::ROOT.left();
        let ex: Excluded = [NodeId::ROOT.right()].into_iter().collect();
        let child = exact_recovery(&mut o, &Found::new(), &ex, left, 2, 4, 0.5);
        // the adversary may return anything that is not a full correct answer here
        let verified = o.zero_test(&child.to_vec(), &[NodeId::ROOT.right()], left, 4);
        assert_eq!(verified, child.to_vec() == truth);
        let mut o = SyntheticOracle::new(dm, truth.clone(), OracleMode::Adversarial);
        let all = exact_recovery(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, 4, 4, 0.5);
        assert_eq!(all.to_vec(), truth);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn adversarial_recovery_is_exact(seed in any::<u64>(), k in 1usize..40, which in 0usize..3) {
            let dm = [dims(1 << 12, 1), dims(64, 2), dims(16, 3)][which];
            let truth = random_truth(&dm, k, seed);
            for alpha in [default_alpha(k, dm.size()), one_level_alpha(k), 0.5] {
                let mut o = SyntheticOracle::new(dm, truth.clone(), OracleMode::Adversarial);
                let out = exact_recovery(&mut o, &Found::new(), &Excluded::new(), NodeId::ROOT, k, k, alpha);
                prop_assert_eq!(out.to_vec(), truth.clone());
            }
        }
    }
}
