//! The four experiment signal classes and their noisy variants.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sfft_core::signal::{
    derive_seed, gen_high_snr, gen_mixture, gen_random_overtones, gen_random_support, gen_shifted_lattice_comb,
    SignalOracle, SparseSpectrum,
};
use sfft_core::tree::Dims;

use crate::error::{invalid, Result};
use crate::io::{SpectrumData, SpectrumFile};

/// Stream used for the noise of a noisy instance.
const NOISE_STREAM: u64 = 0x6e6f_6973_65;
/// Spectrum-backed oracles above this size; dense ones below.
const DENSE_ORACLE_LOG: u32 = 20;
const DISJOINT_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalClass {
    /// Random frequencies, each with its `d` half-period overtones.
    Overtones,
    /// One randomly shifted lattice comb.
    Comb,
    /// Two independent shifted combs of sparsity `k/2`.
    CombMix,
    /// `k/2` random frequencies plus a shifted comb of sparsity `k/2`.
    RandCombMix,
}

impl SignalClass {
    pub const ALL: [SignalClass; 4] =
        [SignalClass::Overtones, SignalClass::Comb, SignalClass::CombMix, SignalClass::RandCombMix];

    pub fn name(self) -> &'static str {
        match self {
            SignalClass::Overtones => "overtones",
            SignalClass::Comb => "comb",
            SignalClass::CombMix => "comb-mix",
            SignalClass::RandCombMix => "rand-comb-mix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub class: SignalClass,
    pub k: usize,
    pub seed: u64,
    pub mu: f64,
    pub noise_seed: u64,
}

/// Generated `k`-sparse head plus what is needed to rebuild the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub meta: InstanceMeta,
    pub head: SparseSpectrum,
}

impl Instance {
    pub fn generate(class: SignalClass, n: u64, d: usize, k: usize, seed: u64, mu: f64) -> Result<Self> {
        let dims = Dims::new(n, d)?;
        if k == 0 {
            return invalid("k must be at least 1");
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return invalid(format!("mu = {mu} must be finite and >= 0"));
        }
        let head = match class {
            SignalClass::Overtones => overtones(k, dims, seed)?,
            SignalClass::Comb => gen_shifted_lattice_comb(&lattice_sizes(k, dims)?, dims, seed)?,
            SignalClass::CombMix => {
                let sizes = lattice_sizes(half(k)?, dims)?;
                let a = gen_shifted_lattice_comb(&sizes, dims, derive_seed(seed, 0))?;
                add_disjoint(&a, seed, |s| gen_shifted_lattice_comb(&sizes, dims, s))?
            }
            SignalClass::RandCombMix => {
                let sizes = lattice_sizes(half(k)?, dims)?;
                let a = gen_shifted_lattice_comb(&sizes, dims, derive_seed(seed, 0))?;
                add_disjoint(&a, seed, |s| gen_random_support(k - k / 2, dims, s))?
            }
        };
        debug_assert_eq!(head.len(), k);
        let meta = InstanceMeta { class, k, seed, mu, noise_seed: derive_seed(seed, NOISE_STREAM) };
        Ok(Instance { meta, head })
    }

    pub fn from_file(file: &SpectrumFile) -> Result<Self> {
        let head = file.spectrum.to_spectrum()?;
        let meta = match file.instance {
            Some(meta) => meta,
            None => return invalid("spectrum file carries no instance metadata"),
        };
        Ok(Instance { meta, head })
    }

    pub fn to_file(&self) -> SpectrumFile {
        SpectrumFile { spectrum: SpectrumData::from_spectrum(&self.head), instance: Some(self.meta) }
    }

    pub fn dims(&self) -> &Dims {
        self.head.dims()
    }

    /// Fresh oracle with its own sample counter.
    pub fn oracle(&self) -> Result<SignalOracle> {
        if self.meta.mu > 0.0 {
            Ok(gen_high_snr(&self.head, self.meta.mu, self.meta.noise_seed)?)
        } else if self.dims().depth() <= DENSE_ORACLE_LOG {
            Ok(SignalOracle::dense_from_spectrum(&self.head)?)
        } else {
            Ok(SignalOracle::from_spectrum(self.head.clone()))
        }
    }
}

fn half(k: usize) -> Result<usize> {
    if k < 2 || k % 2 != 0 {
        return invalid(format!("mixtures need an even k >= 2, got {k}"));
    }
    Ok(k / 2)
}

/// Power-of-two side lengths with product `k`, as equal as possible,
/// larger ones first. Equals the isotropic comb when `k` is a `d`-th power.
pub fn lattice_sizes(k: usize, dims: Dims) -> Result<Vec<u64>> {
    if !k.is_power_of_two() {
        return invalid(format!("comb sparsity {k} is not a power of two"));
    }
    let bits = k.trailing_zeros();
    let d = dims.d() as u32;
    let sizes: Vec<u64> = (0..d).map(|c| 1u64 << (bits / d + u32::from(c < bits % d))).collect();
    if sizes.iter().any(|&m| m > dims.n()) {
        return invalid(format!("comb sparsity {k} exceeds N = {}", dims.size()));
    }
    Ok(sizes)
}

/// `⌊k/(d+1)⌋` overtone groups, topped up with random frequencies when
/// `d+1` does not divide `k`.
fn overtones(k: usize, dims: Dims, seed: u64) -> Result<SparseSpectrum> {
    let group = dims.d() + 1;
    let whole = k / group * group;
    let base = if whole > 0 {
        gen_random_overtones(whole, dims, derive_seed(seed, 0))?
    } else {
        SparseSpectrum::new(dims)
    };
    if whole == k {
        return Ok(base);
    }
    add_disjoint(&base, seed, |s| gen_random_support(k - whole, dims, s))
}

/// Adds the first draw of `part` (streams 1, 2, ...) whose support misses `base`.
fn add_disjoint(
    base: &SparseSpectrum,
    seed: u64,
    part: impl Fn(u64) -> sfft_core::error::Result<SparseSpectrum>,
) -> Result<SparseSpectrum> {
    for stream in 1..=DISJOINT_ATTEMPTS {
        let extra = part(derive_seed(seed, stream))?;
        if extra.iter().all(|(f, _)| !base.contains_index(f)) {
            return Ok(gen_mixture(base, &extra)?);
        }
    }
    invalid("could not place disjoint mixture components")
}
