//! Adaptive aliasing filters.
//!
//! For a leaf `v` of a subtree `T`, the filter `G_v` has
//! `Ĝ_v(ξ) = ∏_{L ∈ Anc(v,T)} (1 + e^{2πi (ξ_c − f_c)/2^{r+1}}) / 2`
//! where step `L` refines bit `r` of coordinate `c` and `f` is the label of
//! `v`. Each factor is the transform of `(δ_0 + e^{−2πi f_c/2^{r+1}} δ_s)/2`
//! with `s = −n/2^{r+1}` along coordinate `c`, so the time support is the
//! product of those two-point sets and has exactly `2^{w_T(v)}` points.

use num_complex::Complex64 as C64;

use crate::error::{domain, Result};
use crate::signal::{unit_root, SignalOracle};
use crate::tree::{label_index, Dims, FreqVec, NodeId, SubTree};

/// A `(v, T)`-isolating filter with its materialized time support.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolatingFilter {
    dims: Dims,
    node: NodeId,
    label: u64,
    levels: Vec<u32>,
    support: Vec<(u64, C64)>,
}

impl IsolatingFilter {
    /// Filter for `node` isolating it at the given two-child ancestor depths.
    pub fn from_levels(dims: Dims, node: NodeId, levels: Vec<u32>) -> Result<Self> {
        if node.depth() > dims.depth() {
            return domain(format!("{node:?} deeper than the tree"));
        }
        if levels.iter().any(|&l| l >= node.depth()) {
            return domain("ancestor level not above the node");
        }
        let label = label_index(node, &dims);
        let mut support = vec![(0u64, C64::new(1.0, 0.0))];
        for &level in &levels {
            let (c, r) = dims.step(level);
            let period = 2u64 << r;
            let fc = dims.coord(label, c);
            let phase = unit_root(period, period - (fc & (period - 1)));
            let shift = ((dims.n() - dims.n() / period) & (dims.n() - 1)) << (c as u32 * dims.log_n());
            let mut next = Vec::with_capacity(support.len() * 2);
            for &(p, g) in &support {
                next.push((p, g * 0.5));
                next.push((dims.add_mod(p, shift), g * phase * 0.5));
            }
            support = next;
        }
        Ok(IsolatingFilter { dims, node, label, levels, support })
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    /// `w_T(v)`
    pub fn weight(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Time-domain support as `(flat point, value)` pairs.
    pub fn support(&self) -> &[(u64, C64)] {
        &self.support
    }

    /// `Ĝ_v(ξ)` at a flat frequency, from the product formula.
    pub fn freq_index(&self, xi: u64) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for &level in &self.levels {
            let (c, r) = self.dims.step(level);
            let period = 2u64 << r;
            let diff = self.dims.coord(xi, c).wrapping_sub(self.dims.coord(self.label, c));
            // only the parity of bit r matters once the lower bits agree
            acc *= (C64::new(1.0, 0.0) + unit_root(period, diff)) * 0.5;
            if acc == C64::new(0.0, 0.0) {
                break;
            }
        }
        acc
    }

    pub fn freq(&self, xi: &FreqVec) -> Result<C64> {
        self.dims.check_freq(xi)?;
        Ok(self.freq_index(self.dims.flatten(&xi.0)))
    }

    /// `Σ_s G(s) x(t − s)`; charges one sample per support point.
    pub fn conv_at(&self, x: &SignalOracle, t: u64) -> C64 {
        self.support
            .iter()
            .map(|&(s, g)| g * x.sample_index(self.dims.sub_mod(t, s)))
            .sum()
    }
}

/// Filter for a leaf of a tree over `[n]` (d = 1).
pub fn build_filter_1d(tree: &SubTree, v: NodeId, dims: &Dims) -> Result<IsolatingFilter> {
    if dims.d() != 1 {
        return domain(format!("one-dimensional filter requested with d = {}", dims.d()));
    }
    build_filter_multidim(tree, v, dims)
}

/// Filter for a leaf of a tree over `[n]^d`; the product splits into one
/// one-dimensional filter per coordinate block of the root-to-`v` path.
pub fn build_filter_multidim(tree: &SubTree, v: NodeId, dims: &Dims) -> Result<IsolatingFilter> {
    if !tree.is_leaf(v) {
        return domain(format!("{v:?} is not a leaf of the tree"));
    }
    IsolatingFilter::from_levels(*dims, v, tree.anc_levels(v)?)
}

/// `Ĝ_v(ξ)`
pub fn filter_freq(filter: &IsolatingFilter, xi: &FreqVec) -> Result<C64> {
    filter.freq(xi)
}

/// Convolution of the filter with `x`, evaluated at `t`.
pub fn conv_at(filter: &IsolatingFilter, x: &SignalOracle, t: &FreqVec) -> Result<C64> {
    filter.dims.check_freq(t)?;
    Ok(filter.conv_at(x, filter.dims.flatten(&t.0)))
}
