//! Uniform box grids, nonnegative grid functions, reflections and the
//! finite-difference stencil shared by every functional in the crate.
//!
//! A grid covers `[-L, L]^N` (`N` is 1 or 2) with `M` cells per axis, `M` odd,
//! so the origin is the center of the middle cell. Cell centers sit on the
//! lattice `h·Z^N` with `h = 2L/M`. Functions are zero outside the box.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{map_sum, pairwise_sum};

/// A point in the plane; 1D grids use the first coordinate and keep the second at zero.
pub type Point = [f64; 2];

/// Integer lattice coordinates of a cell center, `x = k·h`.
pub type Lattice = [i64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    cells_per_axis: usize,
    extent: f64,
}

impl Grid {
    pub fn new(dim: usize, cells_per_axis: usize, extent: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if cells_per_axis % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "cells per axis must be odd, got {cells_per_axis}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        Ok(Self {
            dim,
            cells_per_axis,
            extent,
        })
    }

    /// Grid with spacing `h` and `M` cells, i.e. extent `M·h/2`.
    pub fn with_spacing(dim: usize, cells_per_axis: usize, spacing: f64) -> Result<Self> {
        Self::new(dim, cells_per_axis, 0.5 * spacing * cells_per_axis as f64)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.cells_per_axis as f64
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest lattice coordinate along an axis, `(M-1)/2`.
    pub fn half(&self) -> i64 {
        (self.cells_per_axis as i64 - 1) / 2
    }

    pub fn lattice(&self, index: usize) -> Lattice {
        let m = self.cells_per_axis;
        let h = self.half();
        match self.dim {
            1 => [index as i64 - h, 0],
            _ => [(index / m) as i64 - h, (index % m) as i64 - h],
        }
    }

    pub fn index_of(&self, k: Lattice) -> Option<usize> {
        let h = self.half();
        let m = self.cells_per_axis as i64;
        let in_range = |c: i64| (-h..=h).contains(&c);
        match self.dim {
            1 => (in_range(k[0]) && k[1] == 0).then(|| (k[0] + h) as usize),
            _ => (in_range(k[0]) && in_range(k[1])).then(|| ((k[0] + h) * m + k[1] + h) as usize),
        }
    }

    pub fn center(&self, index: usize) -> Point {
        let k = self.lattice(index);
        let h = self.spacing();
        [k[0] as f64 * h, k[1] as f64 * h]
    }

    pub fn radius(&self, index: usize) -> f64 {
        let x = self.center(index);
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    /// Cell indices ordered by distance from the origin, ties broken
    /// lexicographically on the center coordinates. Exact integer comparison.
    pub fn radial_order(&self) -> Vec<usize> {
        let mut keys: Vec<(i64, i64, i64, usize)> = (0..self.len())
            .map(|i| {
                let k = self.lattice(i);
                (k[0] * k[0] + k[1] * k[1], k[0], k[1], i)
            })
            .collect();
        keys.sort_unstable();
        keys.into_iter().map(|t| t.3).collect()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.cells_per_axis == other.cells_per_axis
            && self.extent.to_bits() == other.extent.to_bits()
    }
}

/// A nonnegative function sampled at cell centers, zero outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidValue { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at every cell center. Negative samples are rejected.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, values)
    }

    /// Samples `f` on integer lattice coordinates; useful when exact symmetry
    /// of the samples matters.
    pub fn from_lattice_fn(grid: Grid, f: impl Fn(Lattice) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.lattice(i))).collect();
        Self::new(grid, values)
    }

    /// Skips validation; callers guarantee nonnegative finite values.
    pub(crate) fn from_trusted(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Values sorted in decreasing order.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_unstable_by(|a, b| b.total_cmp(a));
        v
    }

    /// `c·u` for `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// Same samples on a grid with spacing multiplied by `factor`.
    pub fn respaced(&self, factor: f64) -> Result<Self> {
        let grid = Grid::new(
            self.grid.dim,
            self.grid.cells_per_axis,
            self.grid.extent * factor,
        )?;
        Ok(Self {
            grid,
            values: self.values.clone(),
        })
    }

    /// Shift by an integer number of cells; mass leaving the box is dropped.
    pub fn translated(&self, offset: Lattice) -> Self {
        let mut out = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let k = self.grid.lattice(i);
            let target = [k[0] + offset[0], k[1] + offset[1]];
            if let Some(j) = self.grid.index_of(target) {
                out[j] = v;
            }
        }
        Self {
            grid: self.grid.clone(),
            values: out,
        }
    }

    /// Multilinear interpolation at an arbitrary point, zero outside the box.
    pub fn interpolate(&self, x: Point) -> f64 {
        interpolate(&self.grid, &self.values, x)
    }

    /// Number of cells with a strictly positive value.
    pub fn support_cells(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }
}

/// A signed field on a grid. Only accepted at ingestion; see
/// [`crate::minimize::negative_part_reduction`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignedField {
    grid: Grid,
    values: Vec<f64>,
}

impl SignedField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidValue { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn abs(&self) -> GridFunction {
        GridFunction::from_trusted(
            self.grid.clone(),
            self.values.iter().map(|v| v.abs()).collect(),
        )
    }
}

impl From<GridFunction> for SignedField {
    fn from(u: GridFunction) -> Self {
        SignedField {
            grid: u.grid,
            values: u.values,
        }
    }
}

pub(crate) fn interpolate(grid: &Grid, values: &[f64], x: Point) -> f64 {
    let h = grid.spacing();
    let at = |k: Lattice| grid.index_of(k).map_or(0.0, |i| values[i]);
    let split = |c: f64| {
        let s = c / h;
        let f = s.floor();
        (f as i64, s - f)
    };
    let (k0, f0) = split(x[0]);
    if grid.dim() == 1 {
        if f0 == 0.0 {
            return at([k0, 0]);
        }
        return (1.0 - f0) * at([k0, 0]) + f0 * at([k0 + 1, 0]);
    }
    let (k1, f1) = split(x[1]);
    let mut acc = 0.0;
    for (d0, w0) in [(0, 1.0 - f0), (1, f0)] {
        for (d1, w1) in [(0, 1.0 - f1), (1, f1)] {
            let w = w0 * w1;
            if w != 0.0 {
                acc += w * at([k0 + d0, k1 + d1]);
            }
        }
    }
    acc
}

/// Closed half-space `{x : x·ν ≤ d}` with unit normal `ν` and `d ≥ 0`, so it
/// always contains the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    dim: usize,
    normal: Point,
    offset: f64,
}

/// Integer form of a lattice-preserving reflection: `σ(k) = R·k + t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeReflection {
    pub linear: [[i64; 2]; 2],
    pub shift: Lattice,
}

impl LatticeReflection {
    pub fn apply(&self, k: Lattice) -> Lattice {
        let r = &self.linear;
        [
            r[0][0] * k[0] + r[0][1] * k[1] + self.shift[0],
            r[1][0] * k[0] + r[1][1] * k[1] + self.shift[1],
        ]
    }
}

const UNIT_TOL: f64 = 1e-12;
const LATTICE_TOL: f64 = 1e-9;

impl HalfSpace {
    pub fn new(normal: &[f64], offset: f64) -> Result<Self> {
        let dim = normal.len();
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidHalfSpace(format!("normal must have 1 or 2 components")));
        }
        let norm = normal.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::InvalidHalfSpace(format!("|normal| = {norm}, expected 1")));
        }
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::InvalidHalfSpace(format!(
                "offset must be >= 0 so the origin lies in H, got {offset}"
            )));
        }
        let mut n = [0.0; 2];
        n[..dim].copy_from_slice(normal);
        Ok(Self {
            dim,
            normal: n,
            offset,
        })
    }

    /// Normalizes `direction` first.
    pub fn from_direction(direction: &[f64], offset: f64) -> Result<Self> {
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidHalfSpace("zero direction".into()));
        }
        let unit: Vec<f64> = direction.iter().map(|c| c / norm).collect();
        Self::new(&unit, offset)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal[..self.dim]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance `x·ν − d`; nonpositive inside `H`.
    pub fn signed_distance(&self, x: Point) -> f64 {
        x[0] * self.normal[0] + x[1] * self.normal[1] - self.offset
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) <= 0.0
    }

    pub fn reflect(&self, x: Point) -> Point {
        reflect(x, self)
    }

    /// Integer form of the reflection if it maps the lattice `h·Z^N` onto itself.
    pub fn lattice_reflection(&self, grid: &Grid) -> Option<LatticeReflection> {
        if grid.dim() != self.dim {
            return None;
        }
        let n = self.normal;
        let mut linear = [[0i64; 2]; 2];
        for (a, row) in linear.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                let delta = if a == b { 1.0 } else { 0.0 };
                let r = delta - 2.0 * n[a] * n[b];
                let rounded = r.round();
                if (r - rounded).abs() > LATTICE_TOL {
                    return None;
                }
                *entry = rounded as i64;
            }
        }
        if self.dim == 1 {
            linear[1] = [0, 1];
        }
        let h = grid.spacing();
        let mut shift = [0i64; 2];
        for a in 0..2 {
            let t = 2.0 * self.offset * n[a] / h;
            let rounded = t.round();
            if (t - rounded).abs() > LATTICE_TOL {
                return None;
            }
            shift[a] = rounded as i64;
        }
        Some(LatticeReflection { linear, shift })
    }

    /// True iff the reflection maps every cell center to a cell center.
    pub fn is_grid_exact(&self, grid: &Grid) -> bool {
        self.lattice_reflection(grid).is_some()
    }
}

/// `σ_H(x) = x − 2(x·ν − d)ν`.
pub fn reflect(x: Point, h: &HalfSpace) -> Point {
    let s = h.signed_distance(x);
    [x[0] - 2.0 * s * h.normal[0], x[1] - 2.0 * s * h.normal[1]]
}

/// `μ({u > t})` as `h^N` times the number of cells with value strictly above `t`.
pub fn distribution_function(u: &GridFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distribution function is defined for t > 0, got {t}"
        )));
    }
    let count = u.values.iter().filter(|v| **v > t).count();
    Ok(count as f64 * u.grid.cell_volume())
}

/// Forward-difference gradient magnitude at a box cell, zero extension outside.
fn cell_gradient(grid: &Grid, values: &[f64], k: Lattice, here: f64) -> f64 {
    let h = grid.spacing();
    let at = |k: Lattice| grid.index_of(k).map_or(0.0, |i| values[i]);
    let d0 = (at([k[0] + 1, k[1]]) - here) / h;
    if grid.dim() == 1 {
        return d0.abs();
    }
    let d1 = (at([k[0], k[1] + 1]) - here) / h;
    (d0 * d0 + d1 * d1).sqrt()
}

/// Per-cell `|∇u|` on the box cells.
pub fn gradient_norm(u: &GridFunction) -> Vec<f64> {
    gradient_field(&u.grid, &u.values)
}

pub(crate) fn gradient_field(grid: &Grid, values: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|i| cell_gradient(grid, values, grid.lattice(i), values[i]))
        .collect()
}

/// `(value, |∇u|)` pairs seen by the stencil: every box cell in index order,
/// then the ghost layer on the low side of each axis. Ghost cells carry value
/// zero; their forward differences reach into the box, which makes the
/// discrete energy of a zero-extended function independent of where the box
/// edges fall.
pub fn stencil_pairs(grid: &Grid, values: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| (values[i], cell_gradient(grid, values, grid.lattice(i), values[i])))
        .collect();
    out.extend(ghost_gradients(grid, values).into_iter().map(|t| (0.0, t)));
    out
}

pub(crate) fn ghost_gradients(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let half = grid.half();
    let h = grid.spacing();
    let at = |k: Lattice| grid.index_of(k).map_or(0.0, |i| values[i]);
    if grid.dim() == 1 {
        return vec![at([-half, 0]).abs() / h];
    }
    let mut out = Vec::with_capacity(2 * grid.cells_per_axis());
    for c in -half..=half {
        out.push(at([-half, c]).abs() / h);
    }
    for c in -half..=half {
        out.push(at([c, -half]).abs() / h);
    }
    out
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent must be > 1, got {p}")));
    }
    Ok(())
}

/// `(Σ |u_i|^p h^N)^{1/p}`.
pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm_raw(&u.grid, &u.values, p))
}

pub(crate) fn lp_norm_raw(grid: &Grid, values: &[f64], p: f64) -> f64 {
    let s = map_sum(values.len(), |i| values[i].abs().powf(p));
    (s * grid.cell_volume()).powf(1.0 / p)
}

/// `‖u − v‖_p` for functions on the same grid.
pub fn lp_distance(u: &GridFunction, v: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if !u.grid.same_as(&v.grid) {
        return Err(Error::GridMismatch("lp_distance".into()));
    }
    let s = map_sum(u.values.len(), |i| (u.values[i] - v.values[i]).abs().powf(p));
    Ok((s * u.grid.cell_volume()).powf(1.0 / p))
}

/// `‖∇u‖_p` over the stencil, including the ghost layer.
pub fn sobolev_seminorm(u: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(seminorm_raw(&u.grid, &u.values, p))
}

pub(crate) fn seminorm_raw(grid: &Grid, values: &[f64], p: f64) -> f64 {
    let terms: Vec<f64> = stencil_pairs(grid, values)
        .into_iter()
        .map(|(_, t)| t.powf(p))
        .collect();
    (pairwise_sum(&terms) * grid.cell_volume()).powf(1.0 / p)
}

/// Named measurements of a function in a `W^{1,p}` context.
#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub lp_exponent: f64,
    pub quadrature_weight: f64,
    pub values: BTreeMap<String, f64>,
}

pub fn measure(u: &GridFunction, p: f64) -> Result<Measurement> {
    check_exponent(p)?;
    let mut values = BTreeMap::new();
    values.insert("lp_norm".to_string(), lp_norm(u, p)?);
    values.insert("seminorm".to_string(), sobolev_seminorm(u, p)?);
    values.insert(
        "support_measure".to_string(),
        u.support_cells() as f64 * u.grid.cell_volume(),
    );
    values.insert("max".to_string(), u.max_value());
    Ok(Measurement {
        lp_exponent: p,
        quadrature_weight: u.grid.cell_volume(),
        values,
    })
}
