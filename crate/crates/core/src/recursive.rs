//! Recursive robust recovery with shrinking budgets, and the two-stage
//! wrapper that re-estimates the located head to `(1+ε)` precision.

use std::collections::BTreeSet;

use crate::error::{domain, Result};
use crate::robust::{
    local_weights, mark_support, requeue, robust_promise_sft, sum, Promise, RobustCtx, RobustParams, TraceEvent,
};
use crate::signal::{SignalOracle, SparseSpectrum};
use crate::tree::{extract_cheap_subset_weighted, label_index, min_weight, splitting_tree, Dyadic, NodeId, SubTree};

/// `2^{-⌈sqrt(log₂k · log₂(2 log₂N))⌉}`, at most 1/2.
pub fn recursive_alpha(k: usize, big_n: u64) -> f64 {
    let log_k = (k.max(1) as f64).log2();
    let log_n = (big_n.max(2) as f64).log2();
    let e = (log_k * (2.0 * log_n).log2()).sqrt().ceil() as i32;
    2f64.powi(-e).min(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursiveParams {
    pub robust: RobustParams,
    /// `None` picks [`recursive_alpha`].
    pub alpha: Option<f64>,
    /// Multiplies `m = ⌈736 k log₂²N / |Cheap|⌉` of the inner estimates.
    pub est_mult: f64,
}

impl RecursiveParams {
    pub fn new(mu: f64, eps: f64, seed: u64) -> Self {
        RecursiveParams { robust: RobustParams::new(mu, eps, seed), alpha: None, est_mult: 1.0 }
    }

    pub fn alpha_for(&self, k: usize, big_n: u64) -> f64 {
        self.alpha.unwrap_or_else(|| recursive_alpha(k, big_n)).min(0.5)
    }
}

/// Recovered spectrum plus whether the identification stage succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustSftOutput {
    pub spectrum: SparseSpectrum,
    pub identified: bool,
    pub alpha: f64,
}

/// Hard stop on nesting: `⌈log_{1/α} k⌉ + 2`.
fn depth_cap(k: usize, alpha: f64) -> u32 {
    let levels = ((k.max(2) as f64).ln() / (1.0 / alpha).ln()).ceil();
    levels as u32 + 2
}

/// Recovers the heads of `x̂ − χ̂_in` under the leaf `v` of `frontier`,
/// assuming there are at most `k`; subcalls work with budget `⌈αk⌉`.
pub fn recursive_robust_sft(
    ctx: &mut RobustCtx<'_>,
    chi_in: &SparseSpectrum,
    frontier: &SubTree,
    v: NodeId,
    k: usize,
    alpha: f64,
) -> Result<Promise> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return domain(format!("alpha = {alpha} outside (0, 1/2]"));
    }
    if !frontier.is_leaf(v) {
        return domain(format!("{v:?} is not a leaf of the frontier"));
    }
    let cap = depth_cap(k, alpha);
    recurse(ctx, chi_in, frontier, v, k, alpha, 0, cap)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    ctx: &mut RobustCtx<'_>,
    chi_in: &SparseSpectrum,
    frontier: &SubTree,
    v: NodeId,
    k: usize,
    alpha: f64,
    depth: u32,
    cap: u32,
) -> Result<Promise> {
    ctx.stats.recursive_calls += 1;
    if k as f64 <= 1.0 / alpha {
        let k_over = (k as f64 / alpha).ceil() as usize;
        return robust_promise_sft(ctx, chi_in, frontier, v, k, k_over);
    }
    let dims = *ctx.x.dims();
    if depth >= cap {
        return Ok(fail(ctx, v));
    }
    let big_n = dims.size();
    let log_n = dims.depth().max(1) as f64;
    let b = (alpha * k as f64).ceil() as usize;
    let est_base = ctx.est_mult * 736.0 * k as f64 * log_n * log_n;
    let iter_cap = 4 * (k + 1) * (dims.depth() as usize + 2);

    let mut work = frontier.clone();
    let mut chi_v = SparseSpectrum::new(dims);
    let mut marked: BTreeSet<NodeId> = BTreeSet::new();
    let mut v_estimated = false;
    let mut iters = 0;
    loop {
        iters += 1;
        if iters > iter_cap {
            ctx.stats.iteration_cap_hits += 1;
            return Ok(fail(ctx, v));
        }
        let t_leaves = if v_estimated { Vec::new() } else { work.leaves_under(v) };
        let unmarked: Vec<_> = t_leaves.iter().copied().filter(|u| !marked.contains(u)).collect();
        if (b + 1) * unmarked.len() + marked.len() + chi_v.len() > k {
            return Ok(fail(ctx, v));
        }
        let weighted = local_weights(&work, v, marked.iter().copied());
        if !marked.is_empty() && Dyadic::kraft_sum(weighted.iter().map(|&(_, w)| w)).at_least_half() {
            let cheap = extract_cheap_subset_weighted(&weighted)?;
            let m = (est_base / cheap.len() as f64).ceil() as usize;
            let est = ctx.estimate_set(&sum(chi_in, &chi_v), &work, &cheap, m)?;
            for (u, h) in est {
                chi_v.insert_index(label_index(u, &dims), h);
                if u == v {
                    v_estimated = true;
                } else {
                    work.remove_leaf(u, v);
                }
                marked.remove(&u);
            }
        } else {
            let z = min_weight(local_weights(&work, v, unmarked)).expect("Kraft mass below 1/2 leaves an unmarked leaf");
            if z.depth() == dims.depth() {
                // only reachable when v itself is a full-depth leaf
                marked.insert(z);
            } else {
                let (zl, zr) = z.children(&dims)?;
                let mut t = work.clone();
                t.insert_path(zl);
                t.insert_path(zr);
                let chi = sum(chi_in, &chi_v);
                let left = recurse(ctx, &chi, &t, zl, b, alpha, depth + 1, cap)?;
                let right = recurse(ctx, &chi, &t, zr, b, alpha, depth + 1, cap)?;
                if left.ok && right.ok && z != v && left.chi.len() + right.chi.len() <= b {
                    return Ok(fail(ctx, v));
                }
                for (side, res) in [(zl, &left), (zr, &right)] {
                    if res.ok {
                        mark_support(&mut work, &mut marked, &res.chi);
                    } else {
                        requeue(ctx, &mut work, &mut marked, side);
                    }
                }
            }
        }
        if v_estimated || work.is_leaf(v) {
            break;
        }
    }
    let m_final = ctx.params().heavy_samples((k as f64 / alpha).ceil() as usize, big_n);
    let theta = ctx.params().theta();
    if ctx.heavy_test(&sum(chi_in, &chi_v), frontier, v, m_final, theta)? {
        return Ok(fail(ctx, v));
    }
    Ok(Promise { ok: true, chi: chi_v })
}

fn fail(ctx: &mut RobustCtx<'_>, v: NodeId) -> Promise {
    ctx.record(TraceEvent::Aborted(v));
    Promise { ok: false, chi: SparseSpectrum::new(*ctx.x.dims()) }
}

/// Locates the head with [`recursive_robust_sft`], then re-estimates it
/// in cheap batches to `‖x̂ − χ̂‖₂² ≤ (1+ε)μ²`.
pub fn robust_sft(x: &SignalOracle, k: usize, params: RecursiveParams) -> Result<SparseSpectrum> {
    let mut ctx = RobustCtx::new(x, params.robust).with_est_mult(params.est_mult);
    Ok(robust_sft_with(&mut ctx, k, params.alpha)?.spectrum)
}

pub fn robust_sft_with(ctx: &mut RobustCtx<'_>, k: usize, alpha: Option<f64>) -> Result<RobustSftOutput> {
    ctx.params().validate()?;
    let dims = *ctx.x.dims();
    let alpha = alpha.unwrap_or_else(|| recursive_alpha(k, dims.size())).min(0.5);
    let empty = SparseSpectrum::new(dims);
    if k == 0 {
        return Ok(RobustSftOutput { spectrum: empty, identified: true, alpha });
    }
    let stage1 = recursive_robust_sft(ctx, &empty, &SubTree::new(), NodeId::ROOT, k, alpha)?;
    if !stage1.ok {
        return Ok(RobustSftOutput { spectrum: stage1.chi, identified: false, alpha });
    }
    if stage1.chi.is_empty() {
        return Ok(RobustSftOutput { spectrum: empty, identified: true, alpha });
    }
    let freqs: Vec<_> = stage1.chi.iter_freqs().map(|(f, _)| f).collect();
    let mut tree = splitting_tree(&freqs, &dims)?;
    let mut chi_eps = SparseSpectrum::new(dims);
    let eps = ctx.params().eps;
    while !tree.is_bare_root() {
        let leaves: Vec<_> = tree.leaves().collect();
        let cheap = tree.extract_cheap_subset(&leaves)?;
        let m = (32.0 * k as f64 / (eps * cheap.len() as f64)).ceil() as usize;
        let est = ctx.estimate_set(&chi_eps, &tree, &cheap, m)?;
        for (u, h) in est {
            chi_eps.insert_index(label_index(u, &dims), h);
            tree.remove_leaf(u, NodeId::ROOT);
        }
    }
    Ok(RobustSftOutput { spectrum: chi_eps, identified: true, alpha })
}
