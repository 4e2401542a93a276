//! Signals on `[n]^d`: the dense multidimensional FFT, sparse spectra,
//! sample-counting oracles, RIP sample sets and the synthetic signal classes.
//!
//! Points and frequencies are addressed by flat indices: coordinate `c`
//! occupies bits `[c log n, (c+1) log n)`. The transform convention is
//! `x̂_f = Σ_t x_t e^{-2πi f·t/n}` with `1/N` on the inverse.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result, SfftError};
use crate::tree::{Dims, FreqVec};

/// Largest `N` materialized densely by the noisy generator.
pub const MAX_DENSE_LOG: u32 = 26;

/// `e^{2πi k/n}` for `n` a power of two, `k` reduced mod `n` first.
pub fn unit_root(n: u64, k: u64) -> C64 {
    let k = k & (n - 1);
    let (s, c) = (2.0 * PI * k as f64 / n as f64).sin_cos();
    C64::new(c, s)
}

/// Lookup table of `n`-th roots of unity, computed on demand above 2^16.
#[derive(Debug, Clone)]
pub(crate) struct Roots {
    n: u64,
    table: Vec<C64>,
}

impl Roots {
    pub(crate) fn new(n: u64) -> Self {
        let table = if n <= 1 << 16 { (0..n).map(|k| unit_root(n, k)).collect() } else { Vec::new() };
        Roots { n, table }
    }

    /// `e^{2πi k/n}`
    pub(crate) fn get(&self, k: u64) -> C64 {
        if self.table.is_empty() {
            unit_root(self.n, k)
        } else {
            self.table[(k & (self.n - 1)) as usize]
        }
    }
}

/// splitmix64 step, used to fan a master seed out into independent streams.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fft_1d(buf: &mut [C64], twiddles: &[C64]) {
    let len = buf.len();
    let bits = len.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..len {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < len {
        let stride = len / (2 * half);
        for start in (0..len).step_by(2 * half) {
            for j in 0..half {
                let w = twiddles[j * stride];
                let a = buf[start + j];
                let b = buf[start + j + half] * w;
                buf[start + j] = a + b;
                buf[start + j + half] = a - b;
            }
        }
        half *= 2;
    }
}

fn transform(x: &[C64], dims: &Dims, sign: f64) -> Result<Vec<C64>> {
    if x.len() as u64 != dims.size() {
        return Err(SfftError::Length { expected: dims.size() as usize, got: x.len() });
    }
    let n = dims.n() as usize;
    let twiddles: Vec<C64> = (0..n / 2)
        .map(|j| {
            let (s, c) = (2.0 * PI * j as f64 / n as f64).sin_cos();
            C64::new(c, sign * s)
        })
        .collect();
    let mut out = x.to_vec();
    let mut line = vec![C64::new(0.0, 0.0); n];
    for axis in 0..dims.d() {
        let stride = n.pow(axis as u32);
        for base in 0..out.len() {
            // visit each line once, from its first element
            if (base / stride) % n != 0 {
                continue;
            }
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = out[base + i * stride];
            }
            fft_1d(&mut line, &twiddles);
            for (i, v) in line.iter().enumerate() {
                out[base + i * stride] = *v;
            }
        }
    }
    Ok(out)
}

/// Forward multidimensional DFT of a time-domain array.
pub fn dft_dense(x: &[C64], dims: &Dims) -> Result<Vec<C64>> {
    transform(x, dims, -1.0)
}

/// Inverse DFT, including the `1/N` factor.
pub fn idft_dense(xhat: &[C64], dims: &Dims) -> Result<Vec<C64>> {
    let scale = 1.0 / dims.size() as f64;
    let mut out = transform(xhat, dims, 1.0)?;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Finite map from frequencies to nonzero complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpectrum {
    dims: Dims,
    entries: BTreeMap<u64, C64>,
}

impl SparseSpectrum {
    pub fn new(dims: Dims) -> Self {
        SparseSpectrum { dims, entries: BTreeMap::new() }
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores `value` at `f`; an exact zero removes the entry.
    pub fn insert(&mut self, f: &FreqVec, value: C64) -> Result<()> {
        self.dims.check_freq(f)?;
        self.insert_index(self.dims.flatten(&f.0), value);
        Ok(())
    }

    pub fn insert_index(&mut self, f: u64, value: C64) {
        debug_assert!(f < self.dims.size());
        if value == C64::new(0.0, 0.0) {
            self.entries.remove(&f);
        } else {
            self.entries.insert(f, value);
        }
    }

    pub fn add_index(&mut self, f: u64, value: C64) {
        let cur = self.get_index(f);
        self.insert_index(f, cur + value);
    }

    pub fn get(&self, f: &FreqVec) -> C64 {
        self.get_index(self.dims.flatten(&f.0))
    }

    pub fn get_index(&self, f: u64) -> C64 {
        self.entries.get(&f).copied().unwrap_or_default()
    }

    pub fn contains_index(&self, f: u64) -> bool {
        self.entries.contains_key(&f)
    }

    /// `(flat index, value)` pairs in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, C64)> + '_ {
        self.entries.iter().map(|(&f, &v)| (f, v))
    }

    pub fn iter_freqs(&self) -> impl Iterator<Item = (FreqVec, C64)> + '_ {
        self.iter().map(|(f, v)| (self.dims.unflatten(f), v))
    }

    pub fn support(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dims.size() as usize];
        for (f, v) in self.iter() {
            out[f as usize] = v;
        }
        out
    }

    /// Keeps the entries of a dense spectrum with magnitude above `tol`.
    pub fn from_dense(dims: Dims, xhat: &[C64], tol: f64) -> Result<Self> {
        if xhat.len() as u64 != dims.size() {
            return Err(SfftError::Length { expected: dims.size() as usize, got: xhat.len() });
        }
        let mut s = Self::new(dims);
        for (i, v) in xhat.iter().enumerate() {
            if v.norm() > tol {
                s.entries.insert(i as u64, *v);
            }
        }
        Ok(s)
    }

    /// Drops entries with magnitude at most `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.entries.retain(|_, v| v.norm() > tol);
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|v| v.norm_sqr()).sum()
    }

    /// `‖self − other‖₂²`
    pub fn dist_sq(&self, other: &SparseSpectrum) -> Result<f64> {
        check_same_dims(&self.dims, &other.dims)?;
        let mut total = 0.0;
        for (f, v) in self.iter() {
            total += (v - other.get_index(f)).norm_sqr();
        }
        for (f, v) in other.iter() {
            if !self.contains_index(f) {
                total += v.norm_sqr();
            }
        }
        Ok(total)
    }

    /// Entrywise sum.
    pub fn merged(&self, other: &SparseSpectrum) -> Result<SparseSpectrum> {
        check_same_dims(&self.dims, &other.dims)?;
        let mut out = self.clone();
        for (f, v) in other.iter() {
            out.add_index(f, v);
        }
        Ok(out)
    }
}

fn check_same_dims(a: &Dims, b: &Dims) -> Result<()> {
    if a != b {
        return Err(SfftError::DimsMismatch(format!(
            "(n={}, d={}) vs (n={}, d={})",
            a.n(),
            a.d(),
            b.n(),
            b.d()
        )));
    }
    Ok(())
}

/// `(1/N) Σ_f χ̂_f e^{2πi f·t/n}`, evaluated term by term.
pub fn nonequispaced_eval(chi: &SparseSpectrum, t: &FreqVec) -> Result<C64> {
    chi.dims.check_freq(t)?;
    let dims = chi.dims;
    Ok(eval_index(chi, dims.flatten(&t.0)) / dims.size() as f64)
}

/// `Σ_f χ̂_f e^{2πi f·t/n}` at flat point `t` (no `1/N`).
pub(crate) fn eval_index(chi: &SparseSpectrum, t: u64) -> C64 {
    let dims = chi.dims;
    chi.iter()
        .map(|(f, v)| v * unit_root(dims.n(), dims.dot_mod(f, t)))
        .sum()
}

#[derive(Debug)]
enum Backing {
    Dense(Vec<C64>),
    Spectrum(SparseSpectrum),
}

/// Point-access view of a signal with a sample counter.
///
/// Cloning shares the data and starts an independent counter at the
/// current value.
#[derive(Debug, Clone)]
pub struct SignalOracle {
    dims: Dims,
    backing: Arc<Backing>,
    head: Option<Arc<SparseSpectrum>>,
    mu: f64,
    count: Cell<u64>,
}

impl SignalOracle {
    pub fn from_dense(dims: Dims, x: Vec<C64>) -> Result<Self> {
        if x.len() as u64 != dims.size() {
            return Err(SfftError::Length { expected: dims.size() as usize, got: x.len() });
        }
        Ok(Self::with(dims, Backing::Dense(x)))
    }

    /// Values synthesized from the spectrum on every query.
    pub fn from_spectrum(spec: SparseSpectrum) -> Self {
        let dims = spec.dims;
        Self::with(dims, Backing::Spectrum(spec))
    }

    /// Materializes the time-domain signal of `spec` for fast queries.
    pub fn dense_from_spectrum(spec: &SparseSpectrum) -> Result<Self> {
        check_dense_size(&spec.dims)?;
        let x = idft_dense(&spec.to_dense(), &spec.dims)?;
        Self::from_dense(spec.dims, x)
    }

    fn with(dims: Dims, backing: Backing) -> Self {
        SignalOracle { dims, backing: Arc::new(backing), head: None, mu: 0.0, count: Cell::new(0) }
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    /// Sparse head of a noisy instance, if this oracle came from [`gen_high_snr`].
    pub fn head(&self) -> Option<&SparseSpectrum> {
        self.head.as_deref()
    }

    /// Tail energy bound of a noisy instance (0 otherwise).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `x(t)` at a flat point; counts one sample.
    pub fn sample_index(&self, t: u64) -> C64 {
        self.count.set(self.count.get() + 1);
        self.peek(t)
    }

    pub fn sample(&self, t: &FreqVec) -> Result<C64> {
        self.dims.check_freq(t)?;
        Ok(self.sample_index(self.dims.flatten(&t.0)))
    }

    fn peek(&self, t: u64) -> C64 {
        match &*self.backing {
            Backing::Dense(x) => x[t as usize],
            Backing::Spectrum(s) => eval_index(s, t) / self.dims.size() as f64,
        }
    }

    pub fn sample_count(&self) -> u64 {
        self.count.get()
    }

    pub fn reset_count(&self) {
        self.count.set(0);
    }

    /// Charges `n` samples whose values the caller already holds.
    pub(crate) fn charge(&self, n: u64) {
        self.count.set(self.count.get() + n);
    }

    /// Full spectrum via the dense FFT (no samples charged).
    pub fn spectrum_dense(&self) -> Result<Vec<C64>> {
        match &*self.backing {
            Backing::Dense(x) => dft_dense(x, &self.dims),
            Backing::Spectrum(s) => {
                check_dense_size(&self.dims)?;
                Ok(s.to_dense())
            }
        }
    }
}

fn check_dense_size(dims: &Dims) -> Result<()> {
    if dims.depth() > MAX_DENSE_LOG {
        return domain(format!("N = 2^{} too large to materialize densely", dims.depth()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipMode {
    /// `c · s · ⌈log₂N⌉³` samples.
    Theory,
    /// `max(floor, c · s · ⌈log₂N⌉)` samples.
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipConfig {
    pub mode: RipMode,
    pub c_theory: f64,
    pub c_practical: f64,
    pub floor: usize,
    pub seed: u64,
}

impl Default for RipConfig {
    fn default() -> Self {
        RipConfig { mode: RipMode::Practical, c_theory: 1.0, c_practical: 12.0, floor: 16, seed: 0 }
    }
}

impl RipConfig {
    pub fn theory(seed: u64) -> Self {
        RipConfig { mode: RipMode::Theory, seed, ..Default::default() }
    }

    pub fn practical(seed: u64) -> Self {
        RipConfig { seed, ..Default::default() }
    }

    /// Number of points drawn for sparsity budget `s`.
    pub fn count(&self, s: usize, dims: &Dims) -> usize {
        let log_n = dims.depth().max(1) as f64;
        let raw = match self.mode {
            RipMode::Theory => (self.c_theory * s as f64 * log_n.powi(3)).ceil() as usize,
            RipMode::Practical => ((self.c_practical * s as f64 * log_n).ceil() as usize).max(self.floor),
        };
        raw.max(s)
    }
}

/// Uniform i.i.d. points (flat indices) for an `s`-RIP sample set.
pub fn rip_samples(s: usize, dims: &Dims, cfg: &RipConfig) -> Result<Vec<u64>> {
    if s == 0 {
        return domain("RIP sparsity must be at least 1");
    }
    let mut rng = rng_from(cfg.seed);
    Ok((0..cfg.count(s, dims)).map(|_| rng.gen_range(0..dims.size())).collect())
}

fn random_phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))
}

/// `k` distinct uniform frequencies with unit-magnitude random phases.
pub fn gen_random_support(k: usize, dims: Dims, seed: u64) -> Result<SparseSpectrum> {
    if k as u64 > dims.size() {
        return domain(format!("k = {k} exceeds N = {}", dims.size()));
    }
    let mut rng = rng_from(seed);
    let mut s = SparseSpectrum::new(dims);
    while s.len() < k {
        let f = rng.gen_range(0..dims.size());
        if !s.contains_index(f) {
            let v = random_phase(&mut rng);
            s.insert_index(f, v);
        }
    }
    Ok(s)
}

/// `k/(d+1)` random frequencies, each with its `d` overtones `f + (n/2) e_i`.
pub fn gen_random_overtones(k: usize, dims: Dims, seed: u64) -> Result<SparseSpectrum> {
    let group = dims.d() + 1;
    if k % group != 0 {
        return domain(format!("k = {k} is not a multiple of d+1 = {group}"));
    }
    if dims.n() < 4 {
        return domain("overtones need n >= 4");
    }
    if k as u64 > dims.size() {
        return domain(format!("k = {k} exceeds N = {}", dims.size()));
    }
    let mut rng = rng_from(seed);
    let mut s = SparseSpectrum::new(dims);
    let half = dims.n() / 2;
    let mut attempts = 0u64;
    while s.len() < k {
        attempts += 1;
        if attempts > 1000 * k as u64 + 1000 {
            return domain("could not place disjoint overtone groups");
        }
        let f = rng.gen_range(0..dims.size());
        let members: Vec<u64> = std::iter::once(f)
            .chain((0..dims.d()).map(|c| dims.add_mod(f, half << (c as u32 * dims.log_n()))))
            .collect();
        if members.iter().any(|&m| s.contains_index(m)) {
            continue;
        }
        for m in members {
            let v = random_phase(&mut rng);
            s.insert_index(m, v);
        }
    }
    Ok(s)
}

/// Randomly shifted lattice with `sizes[c]` points along coordinate `c`,
/// each a power of two dividing `n`.
pub fn gen_shifted_lattice_comb(sizes: &[u64], dims: Dims, seed: u64) -> Result<SparseSpectrum> {
    if sizes.len() != dims.d() {
        return domain(format!("{} lattice sizes for d = {}", sizes.len(), dims.d()));
    }
    if sizes.iter().any(|&m| m == 0 || !m.is_power_of_two() || m > dims.n()) {
        return domain("lattice sizes must be powers of two dividing n");
    }
    let mut rng = rng_from(seed);
    let f_shift = rng.gen_range(0..dims.size());
    let t_shift = rng.gen_range(0..dims.size());
    let total: u64 = sizes.iter().product();
    let mut s = SparseSpectrum::new(dims);
    for j in 0..total {
        let mut rest = j;
        let mut point = 0u64;
        for (c, &m) in sizes.iter().enumerate() {
            let stride = dims.n() / m;
            point |= ((rest % m) * stride) << (c as u32 * dims.log_n());
            rest /= m;
        }
        let f = dims.add_mod(point, f_shift);
        s.insert_index(f, unit_root(dims.n(), dims.dot_mod(f, t_shift)));
    }
    Ok(s)
}

/// Isotropic comb with `k^{1/d}` points per coordinate.
pub fn gen_shifted_dirac_comb(k: usize, dims: Dims, seed: u64) -> Result<SparseSpectrum> {
    let d = dims.d() as u32;
    let side = (1..=dims.n()).find(|m| m.checked_pow(d) == Some(k as u64));
    match side {
        Some(m) if m.is_power_of_two() => gen_shifted_lattice_comb(&vec![m; dims.d()], dims, seed),
        _ => domain(format!("k = {k} is not a d-th power dividing n^d")),
    }
}

/// Pointwise sum; coinciding frequencies add.
pub fn gen_mixture(a: &SparseSpectrum, b: &SparseSpectrum) -> Result<SparseSpectrum> {
    a.merged(b)
}

/// Noisy instance `x̂ = head + η̂` with `‖η̂‖₂ = μ` spread over the frequencies
/// off the head support. Requires `min |head| ≥ 3μ`.
pub fn gen_high_snr(head: &SparseSpectrum, mu: f64, seed: u64) -> Result<SignalOracle> {
    let dims = head.dims;
    check_dense_size(&dims)?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return domain(format!("tail bound {mu} must be finite and >= 0"));
    }
    let min_head = head.iter().map(|(_, v)| v.norm()).fold(f64::INFINITY, f64::min);
    if min_head < 3.0 * mu * (1.0 - 1e-12) {
        return domain(format!("head magnitude {min_head} below 3 mu = {}", 3.0 * mu));
    }
    let mut xhat = head.to_dense();
    if mu > 0.0 {
        let mut rng = rng_from(seed);
        let mut noise = vec![C64::default(); xhat.len()];
        for (i, slot) in noise.iter_mut().enumerate() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if !head.contains_index(i as u64) {
                *slot = C64::new(re, im);
            }
        }
        let norm = noise.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return domain("no room for noise off the head support");
        }
        for (x, e) in xhat.iter_mut().zip(&noise) {
            *x += e * (mu / norm);
        }
    }
    let x = idft_dense(&xhat, &dims)?;
    let mut oracle = SignalOracle::from_dense(dims, x)?;
    oracle.head = Some(Arc::new(head.clone()));
    oracle.mu = mu;
    Ok(oracle)
}
