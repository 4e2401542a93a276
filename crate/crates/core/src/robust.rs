//! Robust recovery for k-high-SNR signals: median-of-means heavy tests,
//! batched estimation, and the inner/outer exploration loops.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C64;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::exact::filtered_coeffs;
use crate::filter::{build_filter_multidim, IsolatingFilter};
use crate::signal::{rng_from, Roots, SignalOracle, SparseSpectrum};
use crate::tree::{label_index, leaf_of_index, min_weight, Dyadic, NodeId, SubTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeavyMode {
    /// `c_heavy · s · ⌈log₂N⌉` samples per round.
    Practical,
    /// `s · ⌈log₂N⌉³` samples per round.
    Theory,
}

/// Knobs shared by the robust pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustParams {
    /// Upper bound on the tail norm `‖η̂‖₂`.
    pub mu: f64,
    pub eps: f64,
    pub c_heavy: f64,
    pub mode: HeavyMode,
    /// Residual energy below `(c_tol · max(1, max |measurement|))²` counts as
    /// zero even when `μ = 0`.
    pub c_tol: f64,
    pub seed: u64,
}

impl RobustParams {
    pub fn new(mu: f64, eps: f64, seed: u64) -> Self {
        RobustParams { mu, eps, c_heavy: 8.0, mode: HeavyMode::Practical, c_tol: 1e-7, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return domain(format!("tail bound {} must be finite and >= 0", self.mu));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return domain(format!("eps = {} must be positive", self.eps));
        }
        if !(self.c_heavy > 0.0) {
            return domain("c_heavy must be positive");
        }
        Ok(())
    }

    /// `⌈32 log₂N⌉`
    pub fn heavy_reps(&self, big_n: u64) -> usize {
        32 * log2_ceil(big_n).max(1) as usize
    }

    /// `⌈16 log₂N⌉`
    pub fn est_reps(&self, big_n: u64) -> usize {
        16 * log2_ceil(big_n).max(1) as usize
    }

    /// Samples per round of a heavy test at sparsity level `s`.
    pub fn heavy_samples(&self, s: usize, big_n: u64) -> usize {
        let log_n = log2_ceil(big_n).max(1) as f64;
        let raw = match self.mode {
            HeavyMode::Practical => self.c_heavy * s as f64 * log_n,
            HeavyMode::Theory => s as f64 * log_n.powi(3),
        };
        (raw.ceil() as usize).max(1)
    }

    pub fn theta(&self) -> f64 {
        6.0 * self.mu * self.mu
    }
}

fn log2_ceil(v: u64) -> u32 {
    v.max(1).next_power_of_two().trailing_zeros()
}

/// Counters for one robust run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobustStats {
    pub heavy_tests: u64,
    pub heavy_true: u64,
    pub estimated: u64,
    pub promise_calls: u64,
    pub promise_failures: u64,
    pub recursive_calls: u64,
    pub iteration_cap_hits: u64,
    pub heavy_samples: u64,
    pub estimate_samples: u64,
}

/// Recorded on request, to audit what happens after a failed subcall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    /// A subcall on this node returned `(False, empty)`.
    ChildFailed(NodeId),
    /// The failed node was added back to the explored tree.
    Requeued(NodeId),
    /// The call rooted at this node gave up its budget.
    Aborted(NodeId),
}

/// Randomness, signal access and bookkeeping for one run.
#[derive(Debug)]
pub struct RobustCtx<'a> {
    pub(crate) x: &'a SignalOracle,
    pub(crate) params: RobustParams,
    rng: ChaCha8Rng,
    roots: Roots,
    pub(crate) est_mult: f64,
    pub stats: RobustStats,
    pub trace: Option<Vec<TraceEvent>>,
}

impl<'a> RobustCtx<'a> {
    pub fn new(x: &'a SignalOracle, params: RobustParams) -> Self {
        RobustCtx {
            x,
            params,
            rng: rng_from(params.seed),
            roots: Roots::new(x.dims().n()),
            est_mult: 1.0,
            stats: RobustStats::default(),
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Scales the sample count of the recursive pipeline's inner estimates.
    pub fn with_est_mult(mut self, mult: f64) -> Self {
        self.est_mult = mult;
        self
    }

    pub fn params(&self) -> &RobustParams {
        &self.params
    }

    pub(crate) fn big_n(&self) -> u64 {
        self.x.dims().size()
    }

    pub(crate) fn record(&mut self, e: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(e);
        }
    }

    /// One uniform point; `N` is a power of two, so masking is exactly uniform.
    fn draw(&mut self) -> u64 {
        let mask = self.big_n() - 1;
        if mask <= u32::MAX as u64 {
            self.rng.next_u32() as u64 & mask
        } else {
            self.rng.next_u64() & mask
        }
    }

    fn residual(&self, filter: IsolatingFilter, chi: &SparseSpectrum, demod: Option<u64>, draws: usize) -> Residual {
        let coeffs = filtered_coeffs(&filter, chi.iter());
        let n = self.big_n();
        // points repeat once the draws outnumber the domain
        let memo = (n <= MEMO_MAX && draws as u64 >= n / 8).then(|| vec![None; n as usize]);
        Residual { filter, coeffs, demod, memo }
    }

    /// `N (G * x)(t) − Σ_ξ c_ξ e^{2πi ξ·t/n}`, times `e^{−2πi f·t/n}` when
    /// demodulating at `f`. Every call is charged the `2^w` samples of one
    /// filtered measurement.
    fn eval(&self, r: &mut Residual, t: u64) -> C64 {
        if let Some(Some(v)) = r.memo.as_ref().map(|m| m[t as usize]) {
            self.x.charge(r.filter.support().len() as u64);
            return v;
        }
        let dims = self.x.dims();
        let meas = r.filter.conv_at(self.x, t) * dims.size() as f64;
        let h: C64 = r.coeffs.iter().map(|&(xi, c)| c * self.roots.get(dims.dot_mod(xi, t))).sum();
        let mut v = meas - h;
        if let Some(f) = r.demod {
            v *= self.roots.get(dims.n() - dims.dot_mod(f, t));
        }
        if let Some(m) = &mut r.memo {
            m[t as usize] = Some(v);
        }
        v
    }

    /// Median over `⌈32 log N⌉` rounds of the mean residual energy at `m`
    /// random filtered samples; `false` iff the median is at most `θ`.
    pub fn heavy_test(&mut self, chi: &SparseSpectrum, tree: &SubTree, v: NodeId, m: usize, theta: f64) -> Result<bool> {
        let filter = build_filter_multidim(tree, v, self.x.dims())?;
        let reps = self.params.heavy_reps(self.big_n());
        let m = m.max(1);
        let w = filter.weight();
        let mut r = self.residual(filter, chi, None, reps * m);
        let mut rounds = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut acc = 0.0;
            for _ in 0..m {
                let t = self.draw();
                acc += self.eval(&mut r, t).norm_sqr();
            }
            rounds.push(acc / m as f64);
        }
        self.stats.heavy_samples += ((reps * m) as u64) << w;
        // scale of the signal itself, for the floating-point floor
        let scale = r.coeffs.iter().map(|&(_, c)| c.norm()).fold(1.0, f64::max);
        let floor = (self.params.c_tol * scale).powi(2);
        let heavy = median(&mut rounds) > theta.max(floor);
        self.stats.heavy_tests += 1;
        self.stats.heavy_true += heavy as u64;
        Ok(heavy)
    }

    /// `(x̂ − χ̂)(f_u)` for each full-depth leaf `u ∈ set` of `tree`, each a
    /// median over `⌈16 log N⌉` rounds of `m` samples, taken separately on
    /// the real and imaginary parts.
    pub fn estimate_set(
        &mut self,
        chi: &SparseSpectrum,
        tree: &SubTree,
        set: &[NodeId],
        m: usize,
    ) -> Result<BTreeMap<NodeId, C64>> {
        let dims = *self.x.dims();
        if let Some(u) = set.iter().find(|u| u.depth() != dims.depth()) {
            return domain(format!("{u:?} is not a full-depth leaf"));
        }
        let reps = self.params.est_reps(self.big_n());
        let m = m.max(1);
        let mut out = BTreeMap::new();
        for &u in set {
            let filter = build_filter_multidim(tree, u, &dims)?;
            let w = filter.weight();
            let f = label_index(u, &dims);
            let mut r = self.residual(filter, chi, Some(f), reps * m);
            let mut re = Vec::with_capacity(reps);
            let mut im = Vec::with_capacity(reps);
            for _ in 0..reps {
                let mut acc = C64::default();
                for _ in 0..m {
                    let t = self.draw();
                    acc += self.eval(&mut r, t);
                }
                acc /= m as f64;
                re.push(acc.re);
                im.push(acc.im);
            }
            out.insert(u, C64::new(median(&mut re), median(&mut im)));
            self.stats.estimate_samples += ((reps * m) as u64) << w;
        }
        self.stats.estimated += set.len() as u64;
        Ok(out)
    }
}

/// Domains up to this size get a dense memo of residual values.
const MEMO_MAX: u64 = 1 << 22;

/// Filter, filtered `χ̂` coefficients, and values already computed.
struct Residual {
    filter: IsolatingFilter,
    coeffs: Vec<(u64, C64)>,
    demod: Option<u64>,
    memo: Option<Vec<Option<C64>>>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(crate) fn sum(a: &SparseSpectrum, b: &SparseSpectrum) -> SparseSpectrum {
    a.merged(b).expect("spectra share dimensions")
}

/// Weights of `set` inside the part of `tree` hanging below `v`.
pub(crate) fn local_weights(tree: &SubTree, v: NodeId, set: impl IntoIterator<Item = NodeId>) -> Vec<(NodeId, u32)> {
    let base = tree.weight(v).expect("v in tree");
    set.into_iter()
        .map(|u| (u, tree.weight(u).expect("leaf in tree") - base))
        .collect()
}

/// Result of a budgeted subtree recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct Promise {
    pub ok: bool,
    pub chi: SparseSpectrum,
}

impl Promise {
    fn fail(ctx: &mut RobustCtx<'_>, v: NodeId) -> Self {
        ctx.record(TraceEvent::Aborted(v));
        ctx.stats.promise_failures += 1;
        Promise { ok: false, chi: SparseSpectrum::new(*ctx.x.dims()) }
    }
}

/// Explores the subtree below the leaf `v` of `side_tree` assuming its cone
/// holds at most `b` heads of `x̂ − χ̂_in`. Returns `(False, ∅)` when the
/// assumption is caught being wrong; `k` sets the sample level of the final
/// check.
pub fn robust_promise_sft(
    ctx: &mut RobustCtx<'_>,
    chi_in: &SparseSpectrum,
    side_tree: &SubTree,
    v: NodeId,
    b: usize,
    k: usize,
) -> Result<Promise> {
    if !side_tree.is_leaf(v) {
        return domain(format!("{v:?} is not a leaf of the side tree"));
    }
    ctx.stats.promise_calls += 1;
    let dims = *ctx.x.dims();
    let big_n = dims.size();
    let theta = ctx.params.theta();
    let m_explore = ctx.params.heavy_samples(b, big_n);
    let trigger = 1.0 / (4.0 + 2.0 * (b.max(1) as f64).log2());
    // one exploration step per node of at most b root-to-leaf paths, plus
    // one estimation per mark
    let cap = 4 * (b + 1) * (dims.depth() as usize + 2);

    let mut work = side_tree.clone();
    let mut chi_out = SparseSpectrum::new(dims);
    let mut marked: BTreeSet<NodeId> = BTreeSet::new();
    let mut v_estimated = false;
    let mut iters = 0;
    loop {
        iters += 1;
        if iters > cap {
            ctx.stats.iteration_cap_hits += 1;
            return Ok(Promise::fail(ctx, v));
        }
        let t_leaves = if v_estimated { Vec::new() } else { work.leaves_under(v) };
        if t_leaves.len() + chi_out.len() > b {
            return Ok(Promise::fail(ctx, v));
        }
        let unmarked: Vec<_> = t_leaves.iter().copied().filter(|u| !marked.contains(u)).collect();
        let lazy = !marked.is_empty() && {
            let w = local_weights(&work, v, marked.iter().copied());
            let max_w = w.iter().map(|&(_, w)| w).max().unwrap_or(0);
            // with every leaf marked there is nothing else to do
            marked.len() as f64 / 2f64.powi(max_w as i32) >= trigger || unmarked.is_empty()
        };
        if lazy {
            let set: Vec<_> = marked.iter().copied().collect();
            let m = (368 * b).div_ceil(set.len());
            let est = ctx.estimate_set(&sum(chi_in, &chi_out), &work, &set, m)?;
            for (u, h) in est {
                chi_out.insert_index(label_index(u, &dims), h);
                if u == v {
                    v_estimated = true;
                } else {
                    work.remove_leaf(u, v);
                }
            }
            marked.clear();
        } else {
            let z = min_weight(local_weights(&work, v, unmarked)).expect("an unmarked leaf exists");
            if z.depth() == dims.depth() {
                marked.insert(z);
            } else {
                let (zl, zr) = z.children(&dims)?;
                work.insert_path(zl);
                work.insert_path(zr);
                let chi = sum(chi_in, &chi_out);
                let hl = ctx.heavy_test(&chi, &work, zl, m_explore, theta)?;
                let hr = ctx.heavy_test(&chi, &work, zr, m_explore, theta)?;
                if !hl {
                    work.remove_leaf(zl, z);
                }
                if !hr {
                    work.remove_leaf(zr, z);
                }
                if z != v && !hl && !hr {
                    return Ok(Promise::fail(ctx, v));
                }
            }
        }
        if v_estimated || work.is_leaf(v) {
            break;
        }
    }
    let m_final = ctx.params.heavy_samples(k, big_n);
    if ctx.heavy_test(&sum(chi_in, &chi_out), side_tree, v, m_final, theta)? {
        return Ok(Promise::fail(ctx, v));
    }
    Ok(Promise { ok: true, chi: chi_out })
}

/// Adds every frequency of `chi` to `tree` as a full-depth leaf and marks it.
pub(crate) fn mark_support(tree: &mut SubTree, marked: &mut BTreeSet<NodeId>, chi: &SparseSpectrum) {
    let dims = *chi.dims();
    for (f, _) in chi.iter() {
        let leaf = leaf_of_index(f, &dims);
        tree.insert_path(leaf);
        marked.insert(leaf);
    }
}

/// Adds a child whose subcall failed. A full-depth child is already fully
/// identified and is marked rather than left for expansion.
pub(crate) fn requeue(
    ctx: &mut RobustCtx<'_>,
    tree: &mut SubTree,
    marked: &mut BTreeSet<NodeId>,
    child: NodeId,
) {
    ctx.record(TraceEvent::ChildFailed(child));
    tree.insert_path(child);
    if child.depth() == ctx.x.dims().depth() {
        marked.insert(child);
    }
    ctx.record(TraceEvent::Requeued(child));
}

/// Sparse recovery of a k-high-SNR signal to `‖x̂ − χ̂‖₂² ≤ (1+ε)μ²`.
pub fn robust_sparse_ft(x: &SignalOracle, k: usize, params: RobustParams) -> Result<SparseSpectrum> {
    let mut ctx = RobustCtx::new(x, params);
    robust_sparse_ft_with(&mut ctx, k)
}

pub fn robust_sparse_ft_with(ctx: &mut RobustCtx<'_>, k: usize) -> Result<SparseSpectrum> {
    ctx.params.validate()?;
    let dims = *ctx.x.dims();
    let mut chi = SparseSpectrum::new(dims);
    if k == 0 {
        return Ok(chi);
    }
    let b = (k as f64).cbrt().ceil() as usize;
    let eps = ctx.params.eps;
    let mut frontier = SubTree::new();
    let mut marked: BTreeSet<NodeId> = BTreeSet::new();
    // each of the at most 2k log N frontier nodes is expanded once, and each
    // head is estimated once
    let cap = 4 * (k + 1) * (dims.depth() as usize + 2);
    let mut iters = 0;
    loop {
        iters += 1;
        if iters > cap {
            ctx.stats.iteration_cap_hits += 1;
            break;
        }
        let mass = Dyadic::kraft_sum(marked.iter().map(|&u| frontier.weight(u).expect("marked leaf in frontier")));
        if !marked.is_empty() && mass.at_least_half() {
            let set: Vec<_> = marked.iter().copied().collect();
            let cheap = frontier.extract_cheap_subset(&set)?;
            let m = (32.0 * k as f64 / (eps * cheap.len() as f64)).ceil() as usize;
            let est = ctx.estimate_set(&chi, &frontier, &cheap, m)?;
            for (u, h) in est {
                chi.insert_index(label_index(u, &dims), h);
                frontier.remove_leaf(u, NodeId::ROOT);
                marked.remove(&u);
            }
        } else {
            let v = frontier
                .min_weight_leaf(&marked)
                .expect("Kraft mass of all leaves is 1, so an unmarked leaf exists");
            let (vl, vr) = v.children(&dims)?;
            let mut t = frontier.clone();
            t.insert_path(vl);
            t.insert_path(vr);
            let left = robust_promise_sft(ctx, &chi, &t, vl, b, k)?;
            let right = robust_promise_sft(ctx, &chi, &t, vr, b, k)?;
            for (side, res) in [(vl, &left), (vr, &right)] {
                if res.ok {
                    mark_support(&mut frontier, &mut marked, &res.chi);
                } else {
                    requeue(ctx, &mut frontier, &mut marked, side);
                }
            }
            if left.ok && right.ok && frontier.is_leaf(v) && !v.is_root() {
                frontier.remove_leaf(v, NodeId::ROOT);
            }
        }
        if frontier.is_bare_root() && marked.is_empty() {
            break;
        }
    }
    Ok(chi)
}
