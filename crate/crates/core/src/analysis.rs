//! Error analysis of an equal-weight cubature formula against the class `W^F₁`.
//!
//! For a knot set `X = {ξ¹,…,ξᵐ}` and an admissible kernel this module
//! computes the chain
//!
//! ```text
//! wce_grid ≤ ‖(1/m) Σ_μ F⁰(ξ^μ − ·)‖∞ ≤ ‖F⁰‖∞^{1/2} m^{-1} E^{1/2} = cs_bound
//! ```
//!
//! where `E = Σ_{j,n} F⁰(ξⁿ − ξʲ) = m² Σ_{k≠0} F̂(k)|Q(X,k)|²`. For sets
//! produced by either search algorithm `E ≤ m·F⁰(0)`, which turns the last
//! quantity into `‖F⁰‖∞ m^{-1/2}`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{argmax_first, Orientation, TorusGrid};
use crate::kernel::{FourierKernel, FrequencyIndex};
use crate::pointset::PointSet;
use crate::sum::CompensatedSum;

/// Energies in `[-NEGATIVE_ENERGY_SLACK, 0)` are treated as zero by [`cs_bound`].
pub const NEGATIVE_ENERGY_SLACK: f64 = 1e-9;

/// Relative slack allowed on `wce_grid ≤ cs_bound`.
pub const WCE_CHAIN_SLACK: f64 = 1e-9;

/// Absolute slack on `wce_grid ≤ cs_bound`, in units of `‖F⁰‖∞`.
pub const WCE_ROUNDING_FLOOR: f64 = 1e-12;

/// Relative slack allowed on `cs_bound ≤ theorem_bound`.
pub const THEOREM_CHAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("point dimension {found} does not match kernel dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pair energy {0} is negative beyond rounding; the spectrum is corrupt")]
    NegativeEnergy(f64),
    #[error("grid resolution must be positive")]
    ZeroGrid,
}

fn ensure_dims(kernel: &FourierKernel, set: &PointSet) -> Result<(), AnalysisError> {
    if kernel.dim() != set.dim() {
        return Err(AnalysisError::DimensionMismatch {
            expected: kernel.dim(),
            found: set.dim(),
        });
    }
    Ok(())
}

/// `Q(X,k) = (1/m) Σ_j e^{2πi⟨k,ξʲ⟩}`.
pub fn exp_sum(set: &PointSet, k: &FrequencyIndex) -> Result<Complex64, AnalysisError> {
    if k.dim() != set.dim() {
        return Err(AnalysisError::DimensionMismatch {
            expected: set.dim(),
            found: k.dim(),
        });
    }
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for p in set.points() {
        let (s, c) = (TAU * k.dot(p)).sin_cos();
        re.add(c);
        im.add(s);
    }
    let m = set.len() as f64;
    Ok(Complex64::new(re.value() / m, im.value() / m))
}

/// `|Q(X,k)|²` for every canonical frequency of `kernel`, in spectrum order.
///
/// Characters are assembled from per-coordinate tables
/// `e^{2πi k_i ξʲ_i}` so each point costs `d` table lookups per frequency.
pub fn exp_sum_moduli_squared(
    kernel: &FourierKernel,
    set: &PointSet,
) -> Result<Vec<f64>, AnalysisError> {
    use rayon::prelude::*;

    ensure_dims(kernel, set)?;
    let d = set.dim();
    let limit = kernel.truncation_limit() as i64;
    // tables[j*d + i][k + K] = e^{2πi k ξʲ_i}
    let tables: Vec<Vec<Complex64>> = set
        .coords()
        .iter()
        .map(|&x| {
            (-limit..=limit)
                .map(|k| {
                    let (s, c) = (TAU * k as f64 * x).sin_cos();
                    Complex64::new(c, s)
                })
                .collect()
        })
        .collect();
    let m = set.len() as f64;
    let out = kernel
        .half_spectrum()
        .par_iter()
        .map(|(k, _)| {
            let mut re = CompensatedSum::new();
            let mut im = CompensatedSum::new();
            for j in 0..set.len() {
                let mut z = Complex64::new(1.0, 0.0);
                for (i, &ki) in k.components().iter().enumerate() {
                    z *= tables[j * d + i][(i64::from(ki) + limit) as usize];
                }
                re.add(z.re);
                im.add(z.im);
            }
            let q = Complex64::new(re.value() / m, im.value() / m);
            q.norm_sqr()
        })
        .collect::<Vec<_>>();
    Ok(out)
}

/// `Σ_{j,n} F⁰(ξⁿ − ξʲ)` by direct summation: `m·F⁰(0)` plus twice the
/// lower triangle `Σ_n Σ_{j<n} F⁰(ξⁿ − ξʲ)`.
pub fn pair_energy_direct(kernel: &FourierKernel, set: &PointSet) -> Result<f64, AnalysisError> {
    ensure_dims(kernel, set)?;
    let origin = vec![0.0; set.dim()];
    let diagonal = set.len() as f64 * kernel.centered_difference(&origin, &origin);
    let mut acc = CompensatedSum::new();
    for n in 1..set.len() {
        let xn = set.point(n);
        for j in 0..n {
            acc.add(kernel.centered_difference(xn, set.point(j)));
        }
    }
    Ok(diagonal + 2.0 * acc.value())
}

/// `m² Σ_{k≠0} F̂(k)|Q(X,k)|²` over the stored spectrum and its mirror.
pub fn pair_energy_spectral(kernel: &FourierKernel, set: &PointSet) -> Result<f64, AnalysisError> {
    let moduli = exp_sum_moduli_squared(kernel, set)?;
    let mut acc = CompensatedSum::new();
    for ((_, c), q2) in kernel.half_spectrum().iter().zip(&moduli) {
        acc.add(c * q2);
    }
    let m = set.len() as f64;
    Ok(m * m * 2.0 * acc.value())
}

/// `(1/m) Σ_μ F⁰((ξ^μ − y) mod 1)`, the integration error of the translate
/// `F⁰(· − y)` up to sign.
pub fn shifted_average(
    kernel: &FourierKernel,
    set: &PointSet,
    y: &[f64],
) -> Result<f64, AnalysisError> {
    ensure_dims(kernel, set)?;
    if y.len() != set.dim() {
        return Err(AnalysisError::DimensionMismatch {
            expected: set.dim(),
            found: y.len(),
        });
    }
    let y: Vec<f64> = y.iter().map(|&t| crate::kernel::wrap_unit(t)).collect();
    let mut s = 0.0;
    for p in set.points() {
        s += kernel.centered_difference(p, &y);
    }
    Ok(s / set.len() as f64)
}

/// Grid estimate of `Q_m(W^F₁, X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WceEstimate {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub grid: usize,
}

/// `max_y |(1/m) Σ_μ F⁰(ξ^μ − y)|` over the uniform grid of resolution `grid`.
///
/// A lower estimate of the true supremum; resolutions of at least `2K+1`
/// per coordinate resolve the trigonometric polynomial well.
pub fn wce_l1_class(
    kernel: &FourierKernel,
    set: &PointSet,
    grid: usize,
) -> Result<WceEstimate, AnalysisError> {
    ensure_dims(kernel, set)?;
    if grid == 0 {
        return Err(AnalysisError::ZeroGrid);
    }
    let torus = TorusGrid::new(set.dim(), grid);
    let mut field = vec![0.0; torus.len()];
    for p in set.points() {
        torus.accumulate_translate(kernel, p, Orientation::CenterMinusPoint, &mut field);
    }
    let m = set.len() as f64;
    for v in &mut field {
        *v = (*v / m).abs();
    }
    let index = argmax_first(&field).expect("grid is nonempty");
    Ok(WceEstimate {
        value: field[index],
        argmax: torus.point(index),
        grid,
    })
}

/// `‖g_{ξ,Q,F}‖∞` on the grid; for even kernels this is the same function
/// as [`wce_l1_class`].
pub fn g_sup_norm(
    kernel: &FourierKernel,
    set: &PointSet,
    grid: usize,
) -> Result<f64, AnalysisError> {
    wce_l1_class(kernel, set, grid).map(|w| w.value)
}

/// `‖F⁰‖∞^{1/2} m^{-1} E^{1/2}` with `E` taken from the spectral energy.
pub fn cs_bound(kernel: &FourierKernel, set: &PointSet) -> Result<f64, AnalysisError> {
    let energy = pair_energy_spectral(kernel, set)?;
    cs_bound_from_energy(kernel, set.len(), energy)
}

pub fn cs_bound_from_energy(
    kernel: &FourierKernel,
    m: usize,
    energy: f64,
) -> Result<f64, AnalysisError> {
    if energy < -NEGATIVE_ENERGY_SLACK {
        return Err(AnalysisError::NegativeEnergy(energy));
    }
    let energy = energy.max(0.0);
    Ok(kernel.sup_norm_centered().sqrt() * energy.sqrt() / m as f64)
}

/// `‖F⁰‖∞ m^{-1/2}`.
pub fn theorem_bound(kernel: &FourierKernel, m: usize) -> f64 {
    assert!(m >= 1, "theorem bound needs m ≥ 1");
    kernel.sup_norm_centered() / (m as f64).sqrt()
}

/// Equal-weight cubature `(1/m) Σ_j f(ξʲ)`, summed in index order.
pub fn qmc_evaluate<T, F>(set: &PointSet, f: F) -> T
where
    F: Fn(&[f64]) -> T,
    T: std::ops::Add<Output = T> + std::ops::Div<f64, Output = T> + num_traits::Zero,
{
    let mut acc = T::zero();
    for p in set.points() {
        acc = acc + f(p);
    }
    acc / set.len() as f64
}

/// Integration error of `f = F⁰(· − y0)`, whose exact integral is zero.
pub fn integration_error(
    kernel: &FourierKernel,
    y0: &[f64],
    set: &PointSet,
) -> Result<f64, AnalysisError> {
    Ok(shifted_average(kernel, set, y0)?.abs())
}

/// Every quantity of the bound chain for one (kernel, point set) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub m: usize,
    pub d: usize,
    pub pair_energy: f64,
    pub spectral_energy: f64,
    pub wce_grid: f64,
    #[serde(rename = "grid_G")]
    pub grid_g: usize,
    pub cs_bound: f64,
    pub theorem_bound: f64,
    #[serde(skip)]
    pub wce_argmax: Vec<f64>,
}

pub const CSV_HEADER: &str =
    "m,d,pair_energy,spectral_energy,wce_grid,grid_G,cs_bound,theorem_bound";

impl ErrorReport {
    pub fn compute(
        kernel: &FourierKernel,
        set: &PointSet,
        grid: usize,
    ) -> Result<Self, AnalysisError> {
        let pair_energy = pair_energy_direct(kernel, set)?;
        let spectral_energy = pair_energy_spectral(kernel, set)?;
        let wce = wce_l1_class(kernel, set, grid)?;
        let cs = cs_bound_from_energy(kernel, set.len(), spectral_energy)?;
        Ok(Self {
            m: set.len(),
            d: set.dim(),
            pair_energy,
            spectral_energy,
            wce_grid: wce.value,
            grid_g: grid,
            cs_bound: cs,
            theorem_bound: theorem_bound(kernel, set.len()),
            wce_argmax: wce.argmax,
        })
    }

    /// Failed links of the certified chain. `wce_grid ≤ cs_bound` holds for
    /// every set; `cs_bound ≤ theorem_bound` is checked only when
    /// `search_produced` is set.
    pub fn chain_violations(&self, search_produced: bool) -> Vec<String> {
        let mut out = Vec::new();
        let sup_norm = self.theorem_bound * (self.m as f64).sqrt();
        let allowed = self.cs_bound * (1.0 + WCE_CHAIN_SLACK) + WCE_ROUNDING_FLOOR * sup_norm;
        if self.wce_grid > allowed {
            out.push(format!(
                "wce_grid {} exceeds cs_bound {}",
                self.wce_grid, self.cs_bound
            ));
        }
        if search_produced && self.cs_bound > self.theorem_bound * (1.0 + THEOREM_CHAIN_SLACK) {
            out.push(format!(
                "cs_bound {} exceeds theorem_bound {}",
                self.cs_bound, self.theorem_bound
            ));
        }
        out
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{},{:?},{:?}",
            self.m,
            self.d,
            self.pair_energy,
            self.spectral_energy,
            self.wce_grid,
            self.grid_g,
            self.cs_bound,
            self.theorem_bound
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
