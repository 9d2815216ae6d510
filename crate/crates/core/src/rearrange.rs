//! Polarization (two-point rearrangement), Schwarz symmetrization, half-space
//! sequences and the iterated polarization driver.
//!
//! Grid-exact half-spaces map cell centers to cell centers, so polarization
//! becomes a compare-exchange between paired cells and preserves the value
//! multiset exactly. Other half-spaces read the reflected value by multilinear
//! interpolation. In both regimes a cell whose mirror image falls outside the
//! box is left unchanged; in 1D this coincides with zero extension.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{evaluate_j, Integrand};
use crate::grid::{lp_distance, seminorm_raw, Grid, GridFunction, HalfSpace};

const NO_PARTNER: u32 = u32::MAX;

/// Precomputed action of one half-space on one grid.
#[derive(Debug, Clone)]
pub enum PolarizationPlan {
    Exact {
        partner: Vec<u32>,
        inside: Vec<bool>,
    },
    Interpolated {
        inside: Vec<bool>,
        /// `None` when the mirror image leaves the box.
        stencil: Vec<Option<Vec<(usize, f64)>>>,
    },
}

impl PolarizationPlan {
    pub fn new(grid: &Grid, hs: &HalfSpace) -> Result<Self> {
        if hs.dim() != grid.dim() {
            return Err(Error::InvalidHalfSpace(format!(
                "half-space of dim {} on a grid of dim {}",
                hs.dim(),
                grid.dim()
            )));
        }
        let n = grid.len();
        if let Some(lr) = hs.lattice_reflection(grid) {
            let mut partner = vec![NO_PARTNER; n];
            let mut inside = vec![true; n];
            for i in 0..n {
                let k = grid.lattice(i);
                let image = lr.apply(k);
                if image == k {
                    continue;
                }
                inside[i] = hs.signed_distance(grid.center(i)) < 0.0;
                if let Some(j) = grid.index_of(image) {
                    partner[i] = j as u32;
                }
            }
            return Ok(Self::Exact { partner, inside });
        }
        let h = grid.spacing();
        let bound = grid.half() as f64 * h * (1.0 + 1e-12);
        let mut inside = vec![true; n];
        let mut stencil = Vec::with_capacity(n);
        for (i, slot) in inside.iter_mut().enumerate() {
            let x = grid.center(i);
            *slot = hs.contains(x);
            let y = hs.reflect(x);
            let outside = y[0].abs() > bound || (grid.dim() == 2 && y[1].abs() > bound);
            if outside {
                stencil.push(None);
                continue;
            }
            stencil.push(Some(interpolation_weights(grid, y)));
        }
        Ok(Self::Interpolated { inside, stencil })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact { .. })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        match self {
            Self::Exact { partner, inside } => values
                .iter()
                .enumerate()
                .map(|(i, &v)| match partner[i] {
                    NO_PARTNER => v,
                    j => {
                        let w = values[j as usize];
                        if inside[i] {
                            v.max(w)
                        } else {
                            v.min(w)
                        }
                    }
                })
                .collect(),
            Self::Interpolated { inside, stencil } => values
                .iter()
                .enumerate()
                .map(|(i, &v)| match &stencil[i] {
                    None => v,
                    Some(weights) => {
                        let w: f64 = weights.iter().map(|&(j, c)| c * values[j]).sum();
                        if inside[i] {
                            v.max(w)
                        } else {
                            v.min(w)
                        }
                    }
                })
                .collect(),
        }
    }
}

fn interpolation_weights(grid: &Grid, y: [f64; 2]) -> Vec<(usize, f64)> {
    let h = grid.spacing();
    let split = |c: f64| {
        let s = c / h;
        let f = s.floor();
        (f as i64, s - f)
    };
    let (k0, f0) = split(y[0]);
    let corners: Vec<([i64; 2], f64)> = if grid.dim() == 1 {
        vec![([k0, 0], 1.0 - f0), ([k0 + 1, 0], f0)]
    } else {
        let (k1, f1) = split(y[1]);
        vec![
            ([k0, k1], (1.0 - f0) * (1.0 - f1)),
            ([k0 + 1, k1], f0 * (1.0 - f1)),
            ([k0, k1 + 1], (1.0 - f0) * f1),
            ([k0 + 1, k1 + 1], f0 * f1),
        ]
    };
    corners
        .into_iter()
        .filter(|(_, w)| *w != 0.0)
        .filter_map(|(k, w)| grid.index_of(k).map(|j| (j, w)))
        .collect()
}

/// `u^H`: max of `u` and its mirror image on `H`, min off `H`.
pub fn polarize(u: &GridFunction, hs: &HalfSpace) -> Result<GridFunction> {
    let plan = PolarizationPlan::new(u.grid(), hs)?;
    Ok(GridFunction::from_trusted(u.grid().clone(), plan.apply(u.values())))
}

/// Discrete Schwarz symmetrization: values sorted in decreasing order are
/// placed on cells ordered by distance from the origin (ties lexicographic).
pub fn schwarz_symmetrize(u: &GridFunction) -> GridFunction {
    let order = u.grid().radial_order();
    let sorted = u.sorted_values();
    let mut out = vec![0.0; sorted.len()];
    for (cell, v) in order.into_iter().zip(sorted) {
        out[cell] = v;
    }
    GridFunction::from_trusted(u.grid().clone(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Lattice-preserving reflections enumerated cyclically.
    GridExactAxes,
    /// Uniform normals, exponentially distributed offsets.
    RandomDense { seed: u64 },
    /// Golden-angle normals and van der Corput offsets.
    LowDiscrepancy,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfSpaceSequence {
    pub strategy: Strategy,
    pub halfspaces: Vec<HalfSpace>,
}

impl HalfSpaceSequence {
    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn all_grid_exact(&self, grid: &Grid) -> bool {
        self.halfspaces.iter().all(|h| h.is_grid_exact(grid))
    }
}

/// One full cycle of the grid-exact reflections for `grid`.
///
/// Reflections through the origin are oriented so that, at equal distance
/// from the origin, the lexicographically smaller cell keeps the larger
/// value; this matches the tie-break of [`schwarz_symmetrize`], which is then
/// a fixed point of every listed polarization.
pub fn grid_exact_cycle(grid: &Grid) -> Vec<HalfSpace> {
    let h = grid.spacing();
    let reach = 2 * grid.half();
    let mk = |n: &[f64], d: f64| HalfSpace::new(n, d).expect("unit normal");
    let mut out = Vec::new();
    if grid.dim() == 1 {
        out.push(mk(&[1.0], 0.0));
        for k in 1..=reach {
            let d = 0.5 * k as f64 * h;
            out.push(mk(&[1.0], d));
            out.push(mk(&[-1.0], d));
        }
        return out;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    out.push(mk(&[1.0, 0.0], 0.0));
    out.push(mk(&[0.0, 1.0], 0.0));
    out.push(mk(&[s, -s], 0.0));
    out.push(mk(&[s, s], 0.0));
    let axes = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    let diagonals = [[s, -s], [-s, s], [s, s], [-s, -s]];
    for k in 1..=reach {
        for n in &axes {
            out.push(mk(n, 0.5 * k as f64 * h));
        }
        for n in &diagonals {
            out.push(mk(n, k as f64 * h * s));
        }
    }
    out
}

fn van_der_corput(mut i: u64, base: u64) -> f64 {
    let mut q = 0.0;
    let mut bk = 1.0 / base as f64;
    while i > 0 {
        q += (i % base) as f64 * bk;
        i /= base;
        bk /= base as f64;
    }
    q
}

/// Generates `count` half-spaces for `grid` following `strategy`.
pub fn halfspace_sequence(strategy: Strategy, count: usize, grid: &Grid) -> Result<HalfSpaceSequence> {
    if count == 0 {
        return Err(Error::InvalidParameter("sequence count must be >= 1".into()));
    }
    let extent = grid.extent();
    let halfspaces = match strategy {
        Strategy::GridExactAxes => {
            let cycle = grid_exact_cycle(grid);
            (0..count).map(|i| cycle[i % cycle.len()].clone()).collect()
        }
        Strategy::RandomDense { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let u: f64 = rng.gen::<f64>();
                    // exponential with mean L/4; 1-u lies in (0, 1]
                    let d = -(1.0 - u).ln() * extent / 4.0;
                    if grid.dim() == 1 {
                        let n = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        HalfSpace::new(&[n], d)
                    } else {
                        let a = rng.gen::<f64>() * 2.0 * PI;
                        HalfSpace::new(&[a.cos(), a.sin()], d)
                    }
                    .expect("valid random half-space")
                })
                .collect()
        }
        Strategy::LowDiscrepancy => {
            let golden = (5f64.sqrt() - 1.0) / 2.0;
            (1..=count as u64)
                .map(|i| {
                    let d = 0.5 * extent * van_der_corput(i, 2);
                    if grid.dim() == 1 {
                        let n = if van_der_corput(i, 3) < 0.5 { 1.0 } else { -1.0 };
                        HalfSpace::new(&[n], d)
                    } else {
                        let a = 2.0 * PI * (i as f64 * golden).fract();
                        HalfSpace::new(&[a.cos(), a.sin()], d)
                    }
                    .expect("valid low-discrepancy half-space")
                })
                .collect()
        }
    };
    Ok(HalfSpaceSequence {
        strategy,
        halfspaces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Step `n+1` applies `H_1, …, H_{n+1}` to `u_n`.
    Triangular,
    /// Step `n+1` applies `H_{n+1}` only.
    Linear,
}

#[derive(Debug, Clone)]
pub struct IterateOptions {
    pub p: f64,
    pub schedule: Schedule,
    /// Upper bound on `cells × polarizations`.
    pub budget_cells: u128,
    pub integrand: Option<Integrand>,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            p: 2.0,
            schedule: Schedule::Triangular,
            budget_cells: 10_000_000_000,
            integrand: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub lp_distance: f64,
    pub seminorm: f64,
    #[serde(rename = "J")]
    pub j_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub p: f64,
    pub schedule: Schedule,
    pub grid_exact: bool,
    pub records: Vec<TraceRecord>,
    #[serde(skip)]
    pub last: Option<GridFunction>,
}

impl IterationTrace {
    pub fn distances(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lp_distance).collect()
    }

    pub fn seminorms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.seminorm).collect()
    }

    /// Columns `step,lp_distance,seminorm,J`; `J` is empty when no integrand was attached.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,lp_distance,seminorm,J\n");
        for r in &self.records {
            let j = r.j_value.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", r.step, r.lp_distance, r.seminorm, j));
        }
        out
    }
}

/// Total `cells × polarizations` for `steps` under `schedule`.
pub fn iteration_cost(cells: usize, steps: usize, schedule: Schedule) -> u128 {
    let n = steps as u128;
    let polarizations = match schedule {
        Schedule::Triangular => n * (n + 1) / 2,
        Schedule::Linear => n,
    };
    polarizations * cells as u128
}

/// Runs the polarization sequence and records the distance to `u*`, the
/// seminorm and optionally `J` after every step (step 0 is the input).
pub fn polarization_iterate(
    u: &GridFunction,
    seq: &HalfSpaceSequence,
    steps: usize,
    opts: &IterateOptions,
) -> Result<IterationTrace> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    if seq.is_empty() {
        return Err(Error::InvalidParameter("empty half-space sequence".into()));
    }
    let grid = u.grid();
    let needed = iteration_cost(grid.len(), steps, opts.schedule);
    if needed > opts.budget_cells {
        return Err(Error::BudgetExceeded {
            needed,
            budget: opts.budget_cells,
        });
    }
    let plans = seq
        .halfspaces
        .iter()
        .map(|h| PolarizationPlan::new(grid, h))
        .collect::<Result<Vec<_>>>()?;
    let grid_exact = plans.iter().all(PolarizationPlan::is_exact);
    let target = schwarz_symmetrize(u);
    let record = |step: usize, f: &GridFunction| -> Result<TraceRecord> {
        Ok(TraceRecord {
            step,
            lp_distance: lp_distance(f, &target, opts.p)?,
            seminorm: seminorm_raw(f.grid(), f.values(), opts.p),
            j_value: match &opts.integrand {
                Some(j) => Some(evaluate_j(f, j)?),
                None => None,
            },
        })
    };
    let mut records = vec![record(0, u)?];
    let mut values = u.values().to_vec();
    for n in 0..steps {
        let range = match opts.schedule {
            Schedule::Triangular => 0..n + 1,
            Schedule::Linear => n..n + 1,
        };
        for i in range {
            values = plans[i % plans.len()].apply(&values);
        }
        let current = GridFunction::from_trusted(grid.clone(), values.clone());
        records.push(record(n + 1, &current)?);
    }
    Ok(IterationTrace {
        p: opts.p,
        schedule: opts.schedule,
        grid_exact,
        records,
        last: Some(GridFunction::from_trusted(grid.clone(), values)),
    })
}
