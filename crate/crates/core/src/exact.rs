//! Fourier-backed zero tests and estimates, the Found/Excluded translation,
//! and the exact k-sparse FFT entry point.
//!
//! All measurements are taken on the `x̂` scale: a filtered sample is
//! multiplied by `N`, so that `N (G_v * x)(t) = Σ_{f ∈ cone(v)} x̂_f e^{2πi f·t/n}`
//! when `v` is isolated.

use num_complex::Complex64 as C64;

use crate::error::{domain, Result};
use crate::explore::{
    exact_recovery_traced, one_level_alpha, default_alpha, ExplorationOracle, ExploreStats, Excluded, Found,
};
use crate::filter::IsolatingFilter;
use crate::signal::{derive_seed, rip_samples, RipConfig, Roots, SignalOracle, SparseSpectrum};
use crate::tree::{label_index, Dims, NodeId, SubTree};

/// Tolerances of the floating-point zero test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierConfig {
    pub rip: RipConfig,
    /// Relative threshold: a residual counts as zero when its energy is at
    /// most `(c_tol · max(1, max |measurement|))²`.
    pub c_tol: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig { rip: RipConfig::default(), c_tol: 1e-7 }
    }
}

/// Depths at which the path to `v` branches toward an excluded node.
///
/// Excluded nodes comparable with `v` contribute nothing.
pub(crate) fn excluded_levels(excluded: &[NodeId], v: NodeId) -> Vec<u32> {
    let mut mask = 0u64;
    for e in excluded {
        if !e.comparable(v) {
            mask |= 1 << e.lca_depth(v);
        }
    }
    (0..64).filter(|l| mask >> l & 1 == 1).collect()
}

/// `(T, χ̂)` for a zero test at `v`: `T` is the root-to-`v` path plus the
/// off-path child at each depth where an excluded node branches off, and
/// `χ̂` holds the `found` estimates at their labels.
pub fn translate(found: &Found, excluded: &Excluded, v: NodeId, dims: &Dims) -> Result<(SubTree, SparseSpectrum)> {
    if v.depth() > dims.depth() {
        return domain(format!("{v:?} deeper than the tree"));
    }
    let ex: Vec<_> = excluded.iter().copied().collect();
    let mut tree = SubTree::spanning([v]);
    for level in excluded_levels(&ex, v) {
        let on_path = v.ancestor_at(level + 1);
        tree.insert_path(on_path.sibling()?);
    }
    let mut chi = SparseSpectrum::new(*dims);
    for (leaf, value) in found.iter() {
        if leaf.depth() != dims.depth() {
            return domain(format!("found key {leaf:?} is not a full-depth leaf"));
        }
        chi.insert_index(label_index(leaf, dims), value);
    }
    Ok((tree, chi))
}

/// `(ξ, χ̂(ξ) Ĝ(ξ))` for the entries of `χ̂` the filter does not annihilate.
pub(crate) fn filtered_coeffs(filter: &IsolatingFilter, chi: impl Iterator<Item = (u64, C64)>) -> Vec<(u64, C64)> {
    chi.filter_map(|(xi, c)| {
        let g = filter.freq_index(xi);
        (g != C64::default()).then(|| (xi, c * g))
    })
    .collect()
}

/// `N (G * x)(t)` and `Σ_ξ c_ξ e^{2πi ξ·t/n}`.
fn measure(x: &SignalOracle, filter: &IsolatingFilter, coeffs: &[(u64, C64)], roots: &Roots, t: u64) -> (C64, C64) {
    let dims = x.dims();
    let meas = filter.conv_at(x, t) * dims.size() as f64;
    let h = coeffs.iter().map(|&(xi, c)| c * roots.get(dims.dot_mod(xi, t))).sum();
    (meas, h)
}

fn zero_test_core(
    x: &SignalOracle,
    filter: &IsolatingFilter,
    coeffs: &[(u64, C64)],
    points: &[u64],
    roots: &Roots,
    c_tol: f64,
) -> bool {
    let mut energy = 0.0;
    let mut scale = 1.0f64;
    for &t in points {
        let (meas, h) = measure(x, filter, coeffs, roots, t);
        energy += (meas - h).norm_sqr();
        scale = scale.max(meas.norm());
    }
    energy <= (c_tol * scale).powi(2)
}

fn estimate_core(x: &SignalOracle, filter: &IsolatingFilter, coeffs: &[(u64, C64)], roots: &Roots, c_tol: f64) -> C64 {
    let (meas, h) = measure(x, filter, coeffs, roots, 0);
    let est = meas - h;
    if est.norm() <= c_tol * meas.norm().max(1.0) {
        C64::default()
    } else {
        est
    }
}

/// Tests whether `x̂` and `χ̂` agree on the cone of the leaf `v` of `tree`,
/// from `RIP_s` filtered samples.
pub fn zero_test_fourier(
    x: &SignalOracle,
    chi: &SparseSpectrum,
    tree: &SubTree,
    v: NodeId,
    s: usize,
    cfg: &FourierConfig,
) -> Result<bool> {
    let dims = *x.dims();
    let filter = crate::filter::build_filter_multidim(tree, v, &dims)?;
    let points = rip_samples(s, &dims, &cfg.rip)?;
    let coeffs = filtered_coeffs(&filter, chi.iter());
    Ok(zero_test_core(x, &filter, &coeffs, &points, &Roots::new(dims.n()), cfg.c_tol))
}

/// `(x̂ − χ̂)(f_leaf)` from `2^{w_T(leaf)}` samples.
pub fn estimate_freq_fourier(
    x: &SignalOracle,
    chi: &SparseSpectrum,
    tree: &SubTree,
    leaf: NodeId,
    cfg: &FourierConfig,
) -> Result<C64> {
    let dims = *x.dims();
    if leaf.depth() != dims.depth() {
        return domain(format!("{leaf:?} is not a full-depth leaf"));
    }
    let filter = crate::filter::build_filter_multidim(tree, leaf, &dims)?;
    let coeffs = filtered_coeffs(&filter, chi.iter());
    Ok(estimate_core(x, &filter, &coeffs, &Roots::new(dims.n()), cfg.c_tol))
}

/// [`ExplorationOracle`] answering through filtered samples of a signal.
///
/// Each zero test draws a fresh RIP set from a seed derived from the master
/// seed and the call index.
#[derive(Debug)]
pub struct FourierOracle<'a> {
    x: &'a SignalOracle,
    cfg: FourierConfig,
    roots: Roots,
    calls: u64,
}

impl<'a> FourierOracle<'a> {
    pub fn new(x: &'a SignalOracle, cfg: FourierConfig) -> Self {
        FourierOracle { x, cfg, roots: Roots::new(x.dims().n()), calls: 0 }
    }

    fn filter(&self, excluded: &[NodeId], v: NodeId) -> IsolatingFilter {
        IsolatingFilter::from_levels(*self.x.dims(), v, excluded_levels(excluded, v))
            .expect("explorer nodes stay inside the tree")
    }

    fn coeffs(&self, filter: &IsolatingFilter, found: &[(NodeId, C64)]) -> Vec<(u64, C64)> {
        let dims = self.x.dims();
        filtered_coeffs(filter, found.iter().map(|&(l, c)| (label_index(l, dims), c)))
    }
}

impl ExplorationOracle for FourierOracle<'_> {
    fn dims(&self) -> Dims {
        *self.x.dims()
    }

    fn zero_test(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], v: NodeId, budget: usize) -> bool {
        self.calls += 1;
        let filter = self.filter(excluded, v);
        let coeffs = self.coeffs(&filter, found);
        let rip = RipConfig { seed: derive_seed(self.cfg.rip.seed, self.calls), ..self.cfg.rip };
        let points = rip_samples(budget.max(1), self.x.dims(), &rip).expect("budget is positive");
        zero_test_core(self.x, &filter, &coeffs, &points, &self.roots, self.cfg.c_tol)
    }

    fn estimate(&mut self, found: &[(NodeId, C64)], excluded: &[NodeId], leaf: NodeId) -> C64 {
        let filter = self.filter(excluded, leaf);
        let coeffs = self.coeffs(&filter, found);
        estimate_core(self.x, &filter, &coeffs, &self.roots, self.cfg.c_tol)
    }
}

/// Budget decay schedule for the backtracking explorer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSchedule {
    /// `2^{-⌈log k / 2⌉}`: one level of backtracking below the root.
    OneLevel,
    /// `2^{-⌈2 sqrt(log k log log N)⌉}` clamped to `[2^{-⌈log k⌉}, 1/2]`.
    Asymptotic,
    Fixed(f64),
}

impl AlphaSchedule {
    pub fn alpha(&self, k: usize, big_n: u64) -> f64 {
        match *self {
            AlphaSchedule::OneLevel => one_level_alpha(k),
            AlphaSchedule::Asymptotic => default_alpha(k, big_n),
            AlphaSchedule::Fixed(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    pub fourier: FourierConfig,
    pub alpha: AlphaSchedule,
    /// Entries below `prune · max |value|` are dropped from the output.
    pub prune: f64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { fourier: FourierConfig::default(), alpha: AlphaSchedule::OneLevel, prune: 1e-9 }
    }
}

fn found_to_spectrum(found: &Found, dims: &Dims, prune: f64) -> SparseSpectrum {
    let mut out = SparseSpectrum::new(*dims);
    for (leaf, v) in found.iter() {
        out.insert_index(label_index(leaf, dims), v);
    }
    let tol = prune * out.max_abs();
    out.prune(tol);
    out
}

/// Recovers an exactly `k`-sparse spectrum with default settings.
pub fn exact_sparse_fft(x: &SignalOracle, k: usize) -> SparseSpectrum {
    exact_sparse_fft_with(x, k, &ExactConfig::default()).0
}

pub fn exact_sparse_fft_with(x: &SignalOracle, k: usize, cfg: &ExactConfig) -> (SparseSpectrum, ExploreStats) {
    let dims = *x.dims();
    if k == 0 {
        return (SparseSpectrum::new(dims), ExploreStats::default());
    }
    let alpha = cfg.alpha.alpha(k, dims.size());
    let mut oracle = FourierOracle::new(x, cfg.fourier);
    let (found, stats) =
        exact_recovery_traced(&mut oracle, &Found::new(), &Excluded::new(), NodeId::ROOT, k, k, alpha);
    (found_to_spectrum(&found, &dims, cfg.prune), stats)
}

/// The cubic frontier explorer at budget `k` from the root.
pub fn slow_sparse_fft(x: &SignalOracle, k: usize, cfg: &ExactConfig) -> SparseSpectrum {
    let dims = *x.dims();
    if k == 0 {
        return SparseSpectrum::new(dims);
    }
    let mut oracle = FourierOracle::new(x, cfg.fourier);
    let found = crate::explore::slow_exact_recovery(&mut oracle, &Found::new(), &Excluded::new(), NodeId::ROOT, k);
    found_to_spectrum(&found, &dims, cfg.prune)
}
