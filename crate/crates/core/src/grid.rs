//! Uniform grids on the torus and kernel translates sampled on them.

use rayon::prelude::*;

use crate::kernel::{wrap_unit, FourierKernel};

/// The grid `{0, 1/G, …, (G−1)/G}^d`, indexed lexicographically with
/// coordinate 0 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    resolution: usize,
}

/// Which difference a translate samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `F⁰((y − c) mod 1)` at grid point `y`.
    PointMinusCenter,
    /// `F⁰((c − y) mod 1)` at grid point `y`.
    CenterMinusPoint,
}

impl TorusGrid {
    /// Panics if `resolution^dim` overflows `usize`.
    pub fn new(dim: usize, resolution: usize) -> Self {
        assert!(
            dim > 0 && resolution > 0,
            "grid needs positive dim and resolution"
        );
        resolution
            .checked_pow(dim as u32)
            .expect("grid size overflows usize");
        Self { dim, resolution }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate value of grid line `a`.
    #[inline]
    pub fn coordinate(&self, a: usize) -> f64 {
        a as f64 / self.resolution as f64
    }

    /// Writes the point with lexicographic `index` into `out`.
    pub fn point_into(&self, mut index: usize, out: &mut [f64]) {
        for slot in out.iter_mut().rev() {
            *slot = self.coordinate(index % self.resolution);
            index /= self.resolution;
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point_into(index, &mut p);
        p
    }

    /// Adds the translate of `F⁰` centred at `center` to `values`, one entry
    /// per grid point. Each entry receives exactly the value that
    /// `kernel.centered_difference` produces for the same pair, so a field
    /// built by repeated calls matches a sequential sum bit for bit.
    pub fn accumulate_translate(
        &self,
        kernel: &FourierKernel,
        center: &[f64],
        orientation: Orientation,
        values: &mut [f64],
    ) {
        assert_eq!(values.len(), self.len());
        assert_eq!(center.len(), self.dim);
        let g = self.resolution;

        if kernel.is_factorized() {
            // per-coordinate factor tables, then products
            let tables: Vec<Vec<f64>> = center
                .iter()
                .map(|&c| {
                    (0..g)
                        .map(|a| {
                            let y = self.coordinate(a);
                            let t = match orientation {
                                Orientation::PointMinusCenter => wrap_unit(y - c),
                                Orientation::CenterMinusPoint => wrap_unit(c - y),
                            };
                            kernel.korobov_factor(t)
                        })
                        .collect()
                })
                .collect();
            let dim = self.dim;
            values
                .par_chunks_mut(g.min(values.len()))
                .enumerate()
                .for_each(|(chunk, out)| {
                    let mut digits = vec![0usize; dim];
                    let mut base = chunk * g;
                    for slot in digits.iter_mut().rev() {
                        *slot = base % g;
                        base /= g;
                    }
                    for (a_last, v) in out.iter_mut().enumerate() {
                        digits[dim - 1] = a_last;
                        let prod = digits
                            .iter()
                            .zip(&tables)
                            .fold(1.0, |acc, (&a, t)| acc * t[a]);
                        *v += prod - 1.0;
                    }
                });
        } else {
            values.par_iter_mut().enumerate().for_each(|(index, v)| {
                let y = self.point(index);
                *v += match orientation {
                    Orientation::PointMinusCenter => kernel.centered_difference(&y, center),
                    Orientation::CenterMinusPoint => kernel.centered_difference(center, &y),
                };
            });
        }
    }
}

/// Index of the smallest value; the lowest index wins ties.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
