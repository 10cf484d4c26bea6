//! Periodic kernels with finite, even, nonnegative Fourier spectra.
//!
//! A [`FourierKernel`] is a real even 1-periodic function on the torus
//! `[0,1)^d`, stored through its Fourier coefficients. Only the centered
//! kernel `F⁰ = F − F̂(0)` enters the search and the error analysis, so
//! evaluation always excludes the constant term.
//!
//! Spectra are stored as a canonical half-spectrum: for every pair `±k`
//! only the lexicographically positive representative is kept and the
//! mirror is implied. The centered kernel then evaluates as
//! `Σ_{k canonical} 2·F̂(k)·cos(2π⟨k,x⟩)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use thiserror::Error;

/// Hard cap on the number of stored frequencies.
pub const MAX_SPECTRUM_TERMS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("smoothness r must exceed 1, got {0}")]
    Smoothness(f64),
    #[error("truncation limit K must be positive")]
    ZeroLimit,
    #[error("frequency {index} has {found} components, kernel dimension is {expected}")]
    FrequencyArity {
        index: FrequencyIndex,
        expected: usize,
        found: usize,
    },
    #[error("the zero frequency belongs in `mean`, not in the spectrum")]
    ZeroFrequency,
    #[error("frequency {0} listed twice")]
    DuplicateFrequency(FrequencyIndex),
    #[error("non-finite value {value} for {what}")]
    NonFinite { what: String, value: f64 },
    #[error("spectrum would hold {0} terms, above the limit of {MAX_SPECTRUM_TERMS}")]
    SpectrumTooLarge(u128),
    #[error("point has {found} coordinates, kernel dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Integer frequency vector `k ∈ ℤ^d`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrequencyIndex(Vec<i32>);

impl FrequencyIndex {
    pub fn new(components: Vec<i32>) -> Self {
        Self(components)
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&c| -c).collect())
    }

    /// True when the first nonzero component is positive.
    pub fn is_canonical(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    pub fn canonical(&self) -> Self {
        if self.is_canonical() {
            self.clone()
        } else {
            self.negated()
        }
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> u32 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// `⟨k, x⟩` accumulated in coordinate order.
    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .fold(0.0, |acc, (&k, &xi)| acc + f64::from(k) * xi)
    }
}

impl From<Vec<i32>> for FrequencyIndex {
    fn from(v: Vec<i32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for FrequencyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelStructure {
    /// Coefficients listed one by one.
    Explicit,
    /// `F̂(k) = ∏_{k_i≠0} |k_i|^{-r}` on the box `[-K, K]^d`, `F̂(0) = 1`.
    Korobov { smoothness: f64, limit: u32 },
}

/// One way a kernel can fail the hypotheses of the `m^{-1/2}` guarantee.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeCoefficient {
        index: FrequencyIndex,
        value: f64,
    },
    Evenness {
        index: FrequencyIndex,
        value: f64,
        mirror: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeCoefficient { index, value } => {
                write!(f, "negative coefficient at k={index} (value {value})")
            }
            Violation::Evenness {
                index,
                value,
                mirror,
            } => write!(
                f,
                "evenness at k={index} (F̂(k) = {value}, F̂(-k) = {mirror})"
            ),
        }
    }
}

/// A real even periodic kernel on `[0,1)^d` with a finite spectrum.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct FourierKernel {
    dim: usize,
    mean: f64,
    structure: KernelStructure,
    /// Coefficients exactly as supplied. Korobov kernels hold only canonical keys.
    entries: BTreeMap<FrequencyIndex, f64>,
    /// Canonical representatives in lexicographic order with their coefficient.
    half_spectrum: Vec<(FrequencyIndex, f64)>,
    /// `k^{-r}` for `k = 1..=K`, korobov kernels only.
    korobov_weights: Vec<f64>,
}

impl FourierKernel {
    /// Tensor-product Korobov-type kernel with nonnegative cosine coefficients.
    pub fn korobov(dim: usize, smoothness: f64, limit: u32) -> Result<Self, KernelError> {
        if dim == 0 {
            return Err(KernelError::ZeroDimension);
        }
        if !smoothness.is_finite() || smoothness <= 1.0 {
            return Err(KernelError::Smoothness(smoothness));
        }
        if limit == 0 {
            return Err(KernelError::ZeroLimit);
        }
        let side = 2 * u128::from(limit) + 1;
        let total = side.checked_pow(dim as u32).unwrap_or(u128::MAX);
        if total / 2 > MAX_SPECTRUM_TERMS as u128 {
            return Err(KernelError::SpectrumTooLarge(total / 2));
        }

        let korobov_weights: Vec<f64> = (1..=limit)
            .map(|k| f64::from(k).powf(-smoothness))
            .collect();
        let weight = |c: i32| -> f64 {
            if c == 0 {
                1.0
            } else {
                korobov_weights[c.unsigned_abs() as usize - 1]
            }
        };

        let k = limit as i32;
        let mut half_spectrum = Vec::with_capacity((total / 2) as usize);
        let mut current = vec![-k; dim];
        loop {
            let index = FrequencyIndex(current.clone());
            if index.is_canonical() {
                let coeff = index.0.iter().fold(1.0, |acc, &c| acc * weight(c));
                half_spectrum.push((index, coeff));
            }
            if !advance_box(&mut current, k) {
                break;
            }
        }

        let entries = half_spectrum.iter().cloned().collect();
        Ok(Self {
            dim,
            mean: 1.0,
            structure: KernelStructure::Korobov { smoothness, limit },
            entries,
            half_spectrum,
            korobov_weights,
        })
    }

    /// Kernel from an explicit coefficient list.
    ///
    /// A frequency may be given on either side of the mirror or on both; if
    /// both sides are given with different values the kernel is still built
    /// and [`check_admissible`](Self::check_admissible) reports the conflict.
    pub fn explicit<I, K>(dim: usize, mean: f64, coefficients: I) -> Result<Self, KernelError>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<FrequencyIndex>,
    {
        if dim == 0 {
            return Err(KernelError::ZeroDimension);
        }
        if !mean.is_finite() {
            return Err(KernelError::NonFinite {
                what: "mean".into(),
                value: mean,
            });
        }
        let mut entries = BTreeMap::new();
        for (index, value) in coefficients {
            let index: FrequencyIndex = index.into();
            if index.dim() != dim {
                return Err(KernelError::FrequencyArity {
                    expected: dim,
                    found: index.dim(),
                    index,
                });
            }
            if index.is_zero() {
                return Err(KernelError::ZeroFrequency);
            }
            if !value.is_finite() {
                return Err(KernelError::NonFinite {
                    what: format!("coefficient at k={index}"),
                    value,
                });
            }
            if entries.contains_key(&index) {
                return Err(KernelError::DuplicateFrequency(index));
            }
            entries.insert(index, value);
        }

        let mut canonical: BTreeMap<FrequencyIndex, f64> = BTreeMap::new();
        for (index, &value) in &entries {
            let key = index.canonical();
            // the canonical side wins when both are present
            if index.is_canonical() || !canonical.contains_key(&key) {
                canonical.insert(key, value);
            }
        }

        Ok(Self {
            dim,
            mean,
            structure: KernelStructure::Explicit,
            entries,
            half_spectrum: canonical.into_iter().collect(),
            korobov_weights: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `F̂(0)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn structure(&self) -> KernelStructure {
        self.structure
    }

    /// Largest `|k_i|` over the stored spectrum.
    pub fn truncation_limit(&self) -> u32 {
        match self.structure {
            KernelStructure::Korobov { limit, .. } => limit,
            KernelStructure::Explicit => self
                .half_spectrum
                .iter()
                .map(|(k, _)| k.max_abs())
                .max()
                .unwrap_or(0),
        }
    }

    /// Canonical half-spectrum in lexicographic order. Each entry stands for
    /// both `k` and `-k`.
    pub fn half_spectrum(&self) -> &[(FrequencyIndex, f64)] {
        &self.half_spectrum
    }

    /// `F̂(k)` for any `k`, including mirrors and `k = 0`.
    pub fn coefficient(&self, index: &FrequencyIndex) -> f64 {
        if index.dim() != self.dim {
            return 0.0;
        }
        if index.is_zero() {
            return self.mean;
        }
        if let Some(&v) = self.entries.get(index) {
            return v;
        }
        self.entries.get(&index.negated()).copied().unwrap_or(0.0)
    }

    /// Short human-readable description, free of whitespace.
    pub fn describe(&self) -> String {
        match self.structure {
            KernelStructure::Korobov { smoothness, limit } => {
                format!("korobov(d={},r={},K={})", self.dim, smoothness, limit)
            }
            KernelStructure::Explicit => {
                format!("explicit(d={},terms={})", self.dim, self.entries.len())
            }
        }
    }

    /// Lists every violated hypothesis; empty iff the kernel is admissible.
    pub fn check_admissible(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (index, &value) in &self.entries {
            if value < 0.0 {
                out.push(Violation::NegativeCoefficient {
                    index: index.clone(),
                    value,
                });
            }
        }
        for (index, &value) in &self.entries {
            if !index.is_canonical() {
                continue;
            }
            if let Some(&mirror) = self.entries.get(&index.negated()) {
                if mirror != value {
                    out.push(Violation::Evenness {
                        index: index.clone(),
                        value,
                        mirror,
                    });
                }
            }
        }
        out
    }

    pub fn is_admissible(&self) -> bool {
        self.check_admissible().is_empty()
    }

    /// `F⁰(x)`; coordinates are reduced mod 1 first.
    pub fn evaluate_centered(&self, x: &[f64]) -> Result<f64, KernelError> {
        self.ensure_dim(x.len())?;
        let reduced: Vec<f64> = x.iter().map(|&t| wrap_unit(t)).collect();
        Ok(self.centered_reduced(&reduced))
    }

    /// `F⁰(x)` by summing the stored spectrum directly, whatever the structure.
    pub fn evaluate_centered_spectral(&self, x: &[f64]) -> Result<f64, KernelError> {
        self.ensure_dim(x.len())?;
        let reduced: Vec<f64> = x.iter().map(|&t| wrap_unit(t)).collect();
        Ok(self.spectral_sum(&reduced))
    }

    /// `‖F⁰‖∞ = F⁰(0) = Σ_{k≠0} F̂(k)`, valid for admissible kernels.
    ///
    /// Evaluated as `F⁰(0)` through the same path as every other kernel
    /// value: `(1 + 2Σ_{k≤K} k^{-r})^d − 1` for korobov kernels, the
    /// coefficient sum otherwise.
    pub fn sup_norm_centered(&self) -> f64 {
        self.centered_reduced(&vec![0.0; self.dim])
    }

    pub(crate) fn ensure_dim(&self, found: usize) -> Result<(), KernelError> {
        if found == self.dim {
            Ok(())
        } else {
            Err(KernelError::DimensionMismatch {
                expected: self.dim,
                found,
            })
        }
    }

    /// `F⁰(x)` for `x` already in `[0,1)^d`.
    #[inline]
    pub(crate) fn centered_reduced(&self, x: &[f64]) -> f64 {
        if self.korobov_weights.is_empty() {
            return self.spectral_sum(x);
        }
        x.iter().fold(1.0, |acc, &t| acc * self.korobov_factor(t)) - 1.0
    }

    /// `F⁰((a − b) mod 1)`.
    #[inline]
    pub(crate) fn centered_difference(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.korobov_weights.is_empty() {
            let diff: Vec<f64> = a.iter().zip(b).map(|(&p, &q)| wrap_unit(p - q)).collect();
            return self.spectral_sum(&diff);
        }
        a.iter().zip(b).fold(1.0, |acc, (&p, &q)| {
            acc * self.korobov_factor(wrap_unit(p - q))
        }) - 1.0
    }

    /// Per-coordinate factor `1 + 2 Σ_{k=1}^{K} k^{-r} cos(2πkt)` of a korobov kernel.
    #[inline]
    pub(crate) fn korobov_factor(&self, t: f64) -> f64 {
        let mut s = 0.0;
        for (i, &w) in self.korobov_weights.iter().enumerate() {
            s += w * (TAU * (i + 1) as f64 * t).cos();
        }
        1.0 + 2.0 * s
    }

    pub(crate) fn is_factorized(&self) -> bool {
        !self.korobov_weights.is_empty()
    }

    fn spectral_sum(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, c) in &self.half_spectrum {
            s += c * (TAU * k.dot(x)).cos();
        }
        2.0 * s
    }
}

/// Steps through the box `[-k, k]^d` in lexicographic order, last coordinate
/// fastest. Returns false after the last vector.
fn advance_box(current: &mut [i32], k: i32) -> bool {
    for pos in (0..current.len()).rev() {
        if current[pos] < k {
            current[pos] += 1;
            return true;
        }
        current[pos] = -k;
    }
    false
}

/// Reduces `t` into `[0, 1)`.
#[inline]
pub fn wrap_unit(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    // rem_euclid rounds tiny negatives up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}
