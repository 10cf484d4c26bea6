//! Averaging Search and Greedy Averaging Search applied to `g = F⁰`.
//!
//! Both algorithms build `ξ¹, …, ξᵐ` one point at a time. Step `n` looks at
//! the partial sum `Sₙ(x) = Σ_{j<n} F⁰(x − ξʲ)`:
//!
//! * averaging search accepts the first seeded uniform draw with `Sₙ(x) ≤ 0`;
//! * greedy search takes an approximate global minimizer of `Sₙ`, found by a
//!   scan of the uniform grid followed by coordinate-wise golden-section
//!   refinement inside the winning cell.
//!
//! `Sₙ` has mean zero over the torus, so a point with `Sₙ ≤ 0` always
//! exists. Every accepted point is checked against that inequality using
//! [`partial_sum`] itself, and the value recorded in the trace is that
//! same number.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{argmin_first, Orientation, TorusGrid};
use crate::kernel::{wrap_unit, FourierKernel, Violation};
use crate::pointset::{PointSet, PointSetError, Provenance};
use crate::rng::UniformStream;

pub const DEFAULT_CANDIDATE_BUDGET: usize = 10_000;
pub const DEFAULT_REFINEMENT_STEPS: usize = 30;

/// Golden-section ratio `(√5 − 1)/2`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("kernel is not admissible: {}", list_violations(.0))]
    Inadmissible(Vec<Violation>),
    #[error("number of points must be positive")]
    ZeroPoints,
    #[error("point has {found} coordinates, kernel dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} must be positive")]
    ZeroParameter(&'static str),
    #[error(
        "candidate budget exhausted at step {step}: all {budget} draws gave a positive partial sum"
    )]
    CandidateBudgetExhausted { step: usize, budget: usize },
    #[error("grid minimum {value} at step {step} is positive")]
    PositiveMinimum { step: usize, value: f64 },
    #[error(transparent)]
    PointSet(#[from] PointSetError),
}

fn list_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Averaging,
    Greedy,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Averaging => "averaging",
            Variant::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "averaging" => Ok(Variant::Averaging),
            "greedy" => Ok(Variant::Greedy),
            other => Err(format!(
                "unknown variant `{other}` (expected averaging or greedy)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub variant: Variant,
    /// `ξ¹`; the origin when `None`.
    pub first_point: Option<Vec<f64>>,
    pub seed: u64,
    /// Maximum uniform draws per averaging step.
    pub candidate_budget: usize,
    /// Greedy scan resolution per coordinate; dimension default when `None`.
    pub grid_resolution: Option<usize>,
    /// Golden-section iterations per coordinate during greedy refinement.
    pub refinement_steps: usize,
}

impl SearchConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            first_point: None,
            seed: 0,
            candidate_budget: DEFAULT_CANDIDATE_BUDGET,
            grid_resolution: None,
            refinement_steps: DEFAULT_REFINEMENT_STEPS,
        }
    }

    pub fn averaging(seed: u64) -> Self {
        Self {
            seed,
            ..Self::new(Variant::Averaging)
        }
    }

    pub fn greedy() -> Self {
        Self::new(Variant::Greedy)
    }

    pub fn resolution_for(&self, dim: usize) -> usize {
        self.grid_resolution
            .unwrap_or_else(|| default_grid_resolution(dim))
    }

    /// Provenance fields for a set produced with this configuration.
    pub fn provenance(&self, kernel: &FourierKernel) -> Provenance {
        let mut params = Vec::new();
        match self.variant {
            Variant::Averaging => {
                params.push(("budget".into(), self.candidate_budget.to_string()));
            }
            Variant::Greedy => {
                params.push(("grid".into(), self.resolution_for(kernel.dim()).to_string()));
                params.push(("refine".into(), self.refinement_steps.to_string()));
            }
        }
        Provenance::Generated {
            algorithm: self.variant.name().into(),
            kernel: Some(kernel.describe()),
            seed: Some(self.seed),
            params,
        }
    }

    fn validate(&self, kernel: &FourierKernel) -> Result<Vec<f64>, SearchError> {
        let first = match &self.first_point {
            Some(p) => {
                if p.len() != kernel.dim() {
                    return Err(SearchError::DimensionMismatch {
                        expected: kernel.dim(),
                        found: p.len(),
                    });
                }
                p.iter().map(|&x| wrap_unit(x)).collect()
            }
            None => vec![0.0; kernel.dim()],
        };
        if self.candidate_budget == 0 {
            return Err(SearchError::ZeroParameter("candidate_budget"));
        }
        if self.grid_resolution == Some(0) {
            return Err(SearchError::ZeroParameter("grid_resolution"));
        }
        Ok(first)
    }
}

/// Scan resolution used when none is configured.
pub fn default_grid_resolution(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 64,
        3 => 16,
        _ => 8,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index `n`.
    pub step: usize,
    pub point: Vec<f64>,
    /// `Sₙ = Σ_{j<n} F⁰(ξⁿ − ξʲ)`; `None` for the first step.
    pub objective: Option<f64>,
    pub candidates: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<StepRecord>,
}

impl SearchTrace {
    /// `Sₙ` for `n ≥ 2`, in step order.
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().filter_map(|s| s.objective)
    }

    /// Steps whose recorded objective is positive.
    pub fn violations(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.objective.is_some_and(|v| v > 0.0))
            .map(|s| s.step)
            .collect()
    }

    /// The trace of the first `n` steps.
    pub fn prefix(&self, n: usize) -> SearchTrace {
        SearchTrace {
            steps: self.steps[..n.min(self.steps.len())].to_vec(),
        }
    }
}

/// `Σ_j F⁰((x − ξʲ) mod 1)` over the prefix, summed in index order.
pub fn partial_sum(
    kernel: &FourierKernel,
    prefix: &PointSet,
    x: &[f64],
) -> Result<f64, SearchError> {
    if prefix.dim() != kernel.dim() {
        return Err(SearchError::DimensionMismatch {
            expected: kernel.dim(),
            found: prefix.dim(),
        });
    }
    if x.len() != kernel.dim() {
        return Err(SearchError::DimensionMismatch {
            expected: kernel.dim(),
            found: x.len(),
        });
    }
    Ok(partial_sum_flat(kernel, prefix.coords(), x))
}

fn partial_sum_flat(kernel: &FourierKernel, coords: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in coords.chunks_exact(kernel.dim()) {
        s += kernel.centered_difference(x, p);
    }
    s
}

fn precheck(
    kernel: &FourierKernel,
    m: usize,
    config: &SearchConfig,
) -> Result<Vec<f64>, SearchError> {
    let violations = kernel.check_admissible();
    if !violations.is_empty() {
        return Err(SearchError::Inadmissible(violations));
    }
    if m == 0 {
        return Err(SearchError::ZeroPoints);
    }
    config.validate(kernel)
}

/// Runs whichever algorithm `config.variant` names.
pub fn run_search(
    kernel: &FourierKernel,
    m: usize,
    config: &SearchConfig,
) -> Result<(PointSet, SearchTrace), SearchError> {
    match config.variant {
        Variant::Averaging => averaging_search(kernel, m, config),
        Variant::Greedy => greedy_averaging_search(kernel, m, config),
    }
}

/// Averaging Search with seeded rejection sampling.
pub fn averaging_search(
    kernel: &FourierKernel,
    m: usize,
    config: &SearchConfig,
) -> Result<(PointSet, SearchTrace), SearchError> {
    let first = precheck(kernel, m, config)?;
    let d = kernel.dim();
    let mut coords = Vec::with_capacity(m * d);
    coords.extend_from_slice(&first);
    let mut trace = SearchTrace::default();
    trace.steps.push(StepRecord {
        step: 1,
        point: first,
        objective: None,
        candidates: 0,
    });

    let mut stream = UniformStream::new(config.seed);
    let mut candidate = vec![0.0; d];
    for step in 2..=m {
        let mut accepted = None;
        for draw in 1..=config.candidate_budget {
            stream.fill_point(&mut candidate);
            let s = partial_sum_flat(kernel, &coords, &candidate);
            if s <= 0.0 {
                accepted = Some((s, draw));
                break;
            }
        }
        let (s, draws) = accepted.ok_or(SearchError::CandidateBudgetExhausted {
            step,
            budget: config.candidate_budget,
        })?;
        coords.extend_from_slice(&candidate);
        trace.steps.push(StepRecord {
            step,
            point: candidate.clone(),
            objective: Some(s),
            candidates: draws,
        });
    }

    let set = PointSet::new(d, coords, config.provenance(kernel))?;
    Ok((set, trace))
}

/// Greedy Averaging Search: grid scan plus local refinement at every step.
pub fn greedy_averaging_search(
    kernel: &FourierKernel,
    m: usize,
    config: &SearchConfig,
) -> Result<(PointSet, SearchTrace), SearchError> {
    let first = precheck(kernel, m, config)?;
    let mut stepper = GreedyStepper::new(kernel, config)?;
    stepper.push(&first)?;
    let mut trace = SearchTrace::default();
    trace.steps.push(StepRecord {
        step: 1,
        point: first,
        objective: None,
        candidates: 0,
    });
    for _ in 2..=m {
        let record = stepper.step()?;
        stepper.push(&record.point)?;
        trace.steps.push(record);
    }
    let set = PointSet::new(kernel.dim(), stepper.coords, config.provenance(kernel))?;
    Ok((set, trace))
}

/// Incremental state of the greedy algorithm: the chosen prefix and `S`
/// sampled on the scan grid.
///
/// Also usable on its own to replay an arbitrary prefix through one greedy
/// step.
#[derive(Debug, Clone)]
pub struct GreedyStepper<'k> {
    kernel: &'k FourierKernel,
    grid: TorusGrid,
    field: Vec<f64>,
    coords: Vec<f64>,
    refinement_steps: usize,
}

impl<'k> GreedyStepper<'k> {
    pub fn new(kernel: &'k FourierKernel, config: &SearchConfig) -> Result<Self, SearchError> {
        let violations = kernel.check_admissible();
        if !violations.is_empty() {
            return Err(SearchError::Inadmissible(violations));
        }
        config.validate(kernel)?;
        let grid = TorusGrid::new(kernel.dim(), config.resolution_for(kernel.dim()));
        Ok(Self {
            kernel,
            grid,
            field: vec![0.0; grid.len()],
            coords: Vec::new(),
            refinement_steps: config.refinement_steps,
        })
    }

    /// Stepper whose prefix is `prefix`.
    pub fn with_prefix(
        kernel: &'k FourierKernel,
        config: &SearchConfig,
        prefix: &[f64],
    ) -> Result<Self, SearchError> {
        let mut s = Self::new(kernel, config)?;
        for p in prefix.chunks(kernel.dim()) {
            s.push(p)?;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.kernel.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Appends `point` to the prefix.
    pub fn push(&mut self, point: &[f64]) -> Result<(), SearchError> {
        if point.len() != self.kernel.dim() {
            return Err(SearchError::DimensionMismatch {
                expected: self.kernel.dim(),
                found: point.len(),
            });
        }
        let point: Vec<f64> = point.iter().map(|&x| wrap_unit(x)).collect();
        self.grid.accumulate_translate(
            self.kernel,
            &point,
            Orientation::PointMinusCenter,
            &mut self.field,
        );
        self.coords.extend_from_slice(&point);
        Ok(())
    }

    /// Chooses the next point without appending it.
    pub fn step(&self) -> Result<StepRecord, SearchError> {
        let step = self.len() + 1;
        if self.is_empty() {
            return Err(SearchError::ZeroPoints);
        }
        let d = self.kernel.dim();
        let index = argmin_first(&self.field).expect("grid is nonempty");
        let mut best = self.grid.point(index);
        let mut best_value = self.objective(&best);
        let mut evaluations = self.grid.len() + 1;

        let half_width = 1.0 / self.grid.resolution() as f64;
        let mut probe = best.clone();
        for axis in 0..d {
            if self.refinement_steps == 0 {
                break;
            }
            let centre = best[axis];
            let mut lo = centre - half_width;
            let mut hi = centre + half_width;
            let mut eval = |t: f64, probe: &mut Vec<f64>| -> f64 {
                probe.copy_from_slice(&best);
                probe[axis] = wrap_unit(t);
                evaluations += 1;
                partial_sum_flat(self.kernel, &self.coords, probe)
            };
            let mut c = hi - INV_PHI * (hi - lo);
            let mut e = lo + INV_PHI * (hi - lo);
            let mut fc = eval(c, &mut probe);
            let mut fe = eval(e, &mut probe);
            let mut local = if fc <= fe { (c, fc) } else { (e, fe) };
            for _ in 0..self.refinement_steps {
                if fc <= fe {
                    hi = e;
                    e = c;
                    fe = fc;
                    c = hi - INV_PHI * (hi - lo);
                    fc = eval(c, &mut probe);
                    if fc < local.1 {
                        local = (c, fc);
                    }
                } else {
                    lo = c;
                    c = e;
                    fc = fe;
                    e = lo + INV_PHI * (hi - lo);
                    fe = eval(e, &mut probe);
                    if fe < local.1 {
                        local = (e, fe);
                    }
                }
            }
            // only strict improvements move the point off the grid winner
            if local.1 < best_value {
                best[axis] = wrap_unit(local.0);
                best_value = local.1;
            }
        }

        if best_value > 0.0 {
            return Err(SearchError::PositiveMinimum {
                step,
                value: best_value,
            });
        }
        Ok(StepRecord {
            step,
            point: best,
            objective: Some(best_value),
            candidates: evaluations,
        })
    }

    /// `S(x)` for the current prefix, computed exactly as [`partial_sum`] does.
    pub fn objective(&self, x: &[f64]) -> f64 {
        partial_sum_flat(self.kernel, &self.coords, x)
    }

    /// `S` sampled on the scan grid.
    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }
}
