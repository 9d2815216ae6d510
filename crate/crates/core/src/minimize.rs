//! Constrained minimization of `J(u) = Σ_k ∫ j_k(u_k, |∇u_k|) − ∫ F(|x|, u)`
//! on `Σ_k ∫ G_k(u_k) = 1` by projected gradient flow, plus the structural
//! certificates around it: the `Υ_θ` negativity certificate, the dilation
//! probe, Gagliardo–Nirenberg ratios and radial decay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{
    constraint_raw, coupling_raw, j_raw, ConstraintDensity, Coupling, Integrand,
};
use crate::grid::{lp_distance, lp_norm_raw, seminorm_raw, Grid, GridFunction, Lattice, SignedField};
use crate::inequalities::{best_translation, discretization_tolerance, C_DISC};
use crate::rearrange::schwarz_symmetrize;
use crate::report::{Check, Report};
use crate::sum::pairwise_sum;

/// A minimization instance on a fixed grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub p: f64,
    pub integrands: Vec<Integrand>,
    pub coupling: Coupling,
    pub constraints: Vec<ConstraintDensity>,
}

impl Problem {
    pub fn new(
        grid: Grid,
        p: f64,
        integrands: Vec<Integrand>,
        coupling: Coupling,
        constraints: Vec<ConstraintDensity>,
    ) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
        }
        let m = integrands.len();
        if m == 0 || constraints.len() != m || coupling.components() != m {
            return Err(Error::InvalidParameter(format!(
                "component counts disagree: {} integrands, {} constraints, coupling takes {}",
                m,
                constraints.len(),
                coupling.components()
            )));
        }
        if let Some(g) = constraints.iter().find(|g| g.degree() != p) {
            return Err(Error::InvalidParameter(format!(
                "constraint degree {} differs from p = {p}",
                g.degree()
            )));
        }
        Ok(Self {
            grid,
            p,
            integrands,
            coupling,
            constraints,
        })
    }

    pub fn components(&self) -> usize {
        self.integrands.len()
    }

    /// True when the standing assumption `1 < p < N` does not hold.
    pub fn relaxed(&self) -> bool {
        self.p >= self.grid.dim() as f64
    }

    /// Runs the integrand and coupling audits the flow relies on.
    pub fn audit(&self) -> Result<()> {
        for j in &self.integrands {
            j.require_convex_monotone()?;
        }
        if !self.coupling.is_zero() {
            self.coupling.require_cooperative()?;
        }
        Ok(())
    }

    fn check_components(&self, n: usize, grids: impl Iterator<Item = Grid>) -> Result<()> {
        if n != self.components() {
            return Err(Error::InvalidParameter(format!(
                "expected {} components, got {n}",
                self.components()
            )));
        }
        for g in grids {
            if !g.same_as(&self.grid) {
                return Err(Error::GridMismatch("component grid differs from the problem grid".into()));
            }
        }
        Ok(())
    }

    fn energy_raw(&self, comps: &[&[f64]]) -> Result<f64> {
        let kinetic: Vec<f64> = comps
            .iter()
            .zip(&self.integrands)
            .map(|(c, j)| j_raw(&self.grid, c, j))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&kinetic) - coupling_raw(&self.grid, comps, &self.coupling)?)
    }

    /// `J(u)`.
    pub fn energy(&self, u: &[GridFunction]) -> Result<f64> {
        self.check_components(u.len(), u.iter().map(|c| c.grid().clone()))?;
        let comps: Vec<&[f64]> = u.iter().map(GridFunction::values).collect();
        self.energy_raw(&comps)
    }

    /// `J` evaluated on signed fields.
    pub fn energy_signed(&self, u: &[SignedField]) -> Result<f64> {
        self.check_components(u.len(), u.iter().map(|c| c.grid().clone()))?;
        let comps: Vec<&[f64]> = u.iter().map(SignedField::values).collect();
        self.energy_raw(&comps)
    }

    /// Kinetic part `Σ_k ∫ j_k` and coupling part `∫ F` separately.
    pub fn energy_parts(&self, u: &[GridFunction]) -> Result<(f64, f64)> {
        self.check_components(u.len(), u.iter().map(|c| c.grid().clone()))?;
        let comps: Vec<&[f64]> = u.iter().map(GridFunction::values).collect();
        let kinetic: Vec<f64> = comps
            .iter()
            .zip(&self.integrands)
            .map(|(c, j)| j_raw(&self.grid, c, j))
            .collect::<Result<_>>()?;
        Ok((pairwise_sum(&kinetic), coupling_raw(&self.grid, &comps, &self.coupling)?))
    }

    /// `Σ_k ∫ G_k(u_k)`.
    pub fn constraint(&self, u: &[GridFunction]) -> Result<f64> {
        self.check_components(u.len(), u.iter().map(|c| c.grid().clone()))?;
        let comps: Vec<&[f64]> = u.iter().map(GridFunction::values).collect();
        constraint_raw(&self.grid, &comps, &self.constraints)
    }

    /// Discretization tolerance `C·h·(1 + |value|)`.
    pub fn tolerance(&self, value: f64) -> f64 {
        discretization_tolerance(C_DISC, self.grid.spacing(), value)
    }

    /// Local energy density derivative `∂J/∂u_k(x_i) / h^N` for every cell.
    fn gradient(&self, comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let grid = &self.grid;
        let h = grid.spacing();
        let dim = grid.dim();
        let half = grid.half();
        let m = comps.len();
        (0..m)
            .map(|k| {
                let values = &comps[k];
                let j = &self.integrands[k];
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let ki = grid.lattice(i);
                        let at = |kk: Lattice, v: f64| -> f64 {
                            match grid.index_of(kk) {
                                Some(idx) if idx == i => v,
                                Some(idx) => values[idx],
                                None => 0.0,
                            }
                        };
                        let slope = |kk: Lattice, v: f64| -> f64 {
                            let here = at(kk, v);
                            let d0 = (at([kk[0] + 1, kk[1]], v) - here) / h;
                            if dim == 1 {
                                return d0.abs();
                            }
                            let d1 = (at([kk[0], kk[1] + 1], v) - here) / h;
                            (d0 * d0 + d1 * d1).sqrt()
                        };
                        // cells whose stencil reads u_i: itself and its backward
                        // neighbours, ghosts included
                        let mut cells: [Lattice; 3] = [ki; 3];
                        let mut n = 1;
                        cells[n] = [ki[0] - 1, ki[1]];
                        n += 1;
                        if dim == 2 {
                            cells[n] = [ki[0], ki[1] - 1];
                            n += 1;
                        }
                        let local = |v: f64| -> f64 {
                            let mut e = 0.0;
                            for &c in &cells[..n] {
                                let inside = grid.index_of(c).is_some();
                                let ghost = !inside
                                    && (c[0] == -half - 1 && (dim == 1 || c[1].abs() <= half)
                                        || dim == 2 && c[1] == -half - 1 && c[0].abs() <= half);
                                if inside || ghost {
                                    e += j.eval(at(c, v), slope(c, v));
                                }
                            }
                            if !self.coupling.is_zero() {
                                let mut s: Vec<f64> = comps.iter().map(|c| c[i]).collect();
                                s[k] = v;
                                e -= self.coupling.eval(grid.radius(i), &s);
                            }
                            e
                        };
                        let u0 = values[i];
                        let eps = 1e-6 * (1.0 + u0.abs());
                        (local(u0 + eps) - local(u0 - eps)) / (2.0 * eps)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rescales `u` by `τ = (Σ_k ∫ G_k(u_k))^{−1/p}` so the constraint equals one.
pub fn project_to_constraint(u: &[GridFunction], g: &[ConstraintDensity]) -> Result<Vec<GridFunction>> {
    let p = g
        .first()
        .map(ConstraintDensity::degree)
        .ok_or_else(|| Error::InvalidParameter("no constraint densities".into()))?;
    if g.iter().any(|gk| gk.degree() != p) {
        return Err(Error::InvalidParameter("constraint densities must share one degree".into()));
    }
    let mass = crate::functional::evaluate_constraint(u, g)?;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Precondition(format!("cannot project: constraint mass is {mass}")));
    }
    let tau = mass.powf(-1.0 / p);
    u.iter().map(|c| c.scaled(tau)).collect()
}

fn project_raw(grid: &Grid, comps: &mut [Vec<f64>], g: &[ConstraintDensity]) -> Result<()> {
    let refs: Vec<&[f64]> = comps.iter().map(Vec::as_slice).collect();
    let mass = constraint_raw(grid, &refs, g)?;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Precondition(format!("cannot project: constraint mass is {mass}")));
    }
    let tau = mass.powf(-1.0 / g[0].degree());
    for c in comps.iter_mut() {
        c.iter_mut().for_each(|v| *v *= tau);
    }
    Ok(())
}

/// Componentwise absolute value.
pub fn negative_part_reduction(u: &[SignedField]) -> Vec<GridFunction> {
    u.iter().map(SignedField::abs).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowOptions {
    /// Initial step size.
    pub eta: f64,
    pub max_iters: usize,
    /// Symmetrize every `K` iterations; 0 disables.
    pub symmetrize_every: usize,
    /// Converged once `J` dropped by less than this over `window` iterations.
    pub stop_tol: f64,
    pub window: usize,
    /// `J` below this floor declares divergence.
    pub divergence_floor: f64,
    /// Seed for the multiplicative jitter applied to the initial guess.
    pub seed: u64,
    /// Relative jitter amplitude; 0 keeps the initial guess as is.
    pub jitter: f64,
    /// Cell offset applied to the default initial guess.
    pub shift: Lattice,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            eta: 1.0,
            max_iters: 20_000,
            symmetrize_every: 0,
            stop_tol: 1e-10,
            window: 50,
            divergence_floor: -1e6,
            seed: 0,
            jitter: 0.0,
            shift: [0, 0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    Divergent,
    BudgetExhausted,
    /// Backtracking could not find a decrease; `J` is flat at working precision.
    Stalled,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizationEvent {
    pub iteration: usize,
    pub before: f64,
    pub after: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryAudit {
    pub component: usize,
    pub offset: Lattice,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub components: Vec<GridFunction>,
    pub energy: f64,
    pub constraint_residual: f64,
    pub status: FlowStatus,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub symmetrizations: Vec<SymmetrizationEvent>,
    pub symmetry: Vec<SymmetryAudit>,
    pub tolerance: f64,
    pub relaxed: bool,
}

impl Solution {
    pub fn report(&self) -> Report {
        let mut r = Report::new("minimize");
        r.set("energy", self.energy);
        r.set("constraint_residual", self.constraint_residual);
        r.set("iterations", self.iterations as f64);
        r.set("tolerance", self.tolerance);
        r.checks.push(Check::new("constraint", self.constraint_residual, 1e-10, 1));
        for a in &self.symmetry {
            r.set(&format!("symmetry_distance_{}", a.component), a.distance);
            r.set(&format!("symmetry_offset_{}_0", a.component), a.offset[0] as f64);
            r.set(&format!("symmetry_offset_{}_1", a.component), a.offset[1] as f64);
        }
        r.flag(match self.status {
            FlowStatus::Converged => "converged",
            FlowStatus::Divergent => "divergent",
            FlowStatus::BudgetExhausted => "budget_exhausted",
            FlowStatus::Stalled => "stalled",
        });
        if self.relaxed {
            r.flag("relaxed_dimension");
            r.notes.push("p >= N: the standing assumption 1 < p < N is not met".into());
        }
        r.series.insert("energy".into(), self.history.clone());
        r
    }
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let parts: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| pairwise_sum(&x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>()))
        .collect();
    pairwise_sum(&parts)
}

/// Projected gradient flow with Barzilai–Borwein steps, Armijo backtracking
/// and optional periodic Schwarz symmetrization of every component.
pub fn minimize(problem: &Problem, opts: &FlowOptions, init: Option<Vec<GridFunction>>) -> Result<Solution> {
    if !(opts.eta > 0.0) || opts.window == 0 {
        return Err(Error::InvalidParameter("need eta > 0 and window >= 1".into()));
    }
    problem.audit()?;
    let grid = &problem.grid;
    let start = match init {
        Some(u) => {
            problem.check_components(u.len(), u.iter().map(|c| c.grid().clone()))?;
            u
        }
        None => upsilon(problem, 1.0)?.into_iter().map(|c| c.translated(opts.shift)).collect(),
    };
    let mut comps: Vec<Vec<f64>> = start.into_iter().map(GridFunction::into_values).collect();
    if opts.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for c in comps.iter_mut() {
            for v in c.iter_mut() {
                *v *= 1.0 + opts.jitter * (2.0 * rng.gen::<f64>() - 1.0);
            }
        }
    }
    project_raw(grid, &mut comps, &problem.constraints)?;
    let energy_of = |c: &[Vec<f64>]| -> Result<f64> {
        let refs: Vec<&[f64]> = c.iter().map(Vec::as_slice).collect();
        problem.energy_raw(&refs)
    };
    let tangent = |c: &[Vec<f64>], g: &mut [Vec<f64>]| {
        let normal: Vec<Vec<f64>> = c
            .iter()
            .zip(&problem.constraints)
            .map(|(ck, gk)| {
                ck.iter()
                    .map(|&s| gk.c * gk.p * s.abs().powf(gk.p - 1.0) * s.signum())
                    .collect()
            })
            .collect();
        let nn = dot(&normal, &normal);
        if nn > 0.0 {
            let coef = dot(g, &normal) / nn;
            for (gk, nk) in g.iter_mut().zip(&normal) {
                gk.iter_mut().zip(nk).for_each(|(a, b)| *a -= coef * b);
            }
        }
    };

    let mut energy = energy_of(&comps)?;
    let mut history = vec![energy];
    let mut events = Vec::new();
    let mut eta = opts.eta;
    let mut prev: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
    let mut status = FlowStatus::BudgetExhausted;
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        iterations = it;
        let mut g = problem.gradient(&comps);
        tangent(&comps, &mut g);
        if let Some((pu, pg)) = &prev {
            let du: Vec<Vec<f64>> = comps.iter().zip(pu).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
            let dg: Vec<Vec<f64>> = g.iter().zip(pg).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
            let (ss, sy) = (dot(&du, &du), dot(&du, &dg));
            if sy > 0.0 && ss > 0.0 {
                eta = ss / sy;
            }
        }
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<Vec<f64>> = comps
                .iter()
                .zip(&g)
                .map(|(c, gk)| c.iter().zip(gk).map(|(v, d)| (v - eta * d).max(0.0)).collect())
                .collect();
            if project_raw(grid, &mut trial, &problem.constraints).is_err() {
                eta *= 0.5;
                continue;
            }
            let e = energy_of(&trial)?;
            let moved: f64 = comps
                .iter()
                .zip(&trial)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .sum();
            if e <= energy - 1e-4 / eta * moved * grid.cell_volume() {
                accepted = Some((trial, e));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, e)) = accepted else {
            status = FlowStatus::Stalled;
            break;
        };
        prev = Some((std::mem::replace(&mut comps, next), g));
        energy = e;

        if opts.symmetrize_every > 0 && it % opts.symmetrize_every == 0 {
            let sym: Vec<Vec<f64>> = comps
                .iter()
                .map(|c| schwarz_symmetrize(&GridFunction::from_trusted(grid.clone(), c.clone())).into_values())
                .collect();
            let es = energy_of(&sym)?;
            let ok = es <= energy + problem.tolerance(energy);
            events.push(SymmetrizationEvent {
                iteration: it,
                before: energy,
                after: es,
                accepted: ok,
            });
            if ok {
                comps = sym;
                energy = es;
                prev = None;
            }
        }
        history.push(energy);
        if energy < opts.divergence_floor {
            status = FlowStatus::Divergent;
            break;
        }
        if history.len() > opts.window {
            let n = history.len() - 1;
            if (history[n - opts.window] - history[n]).abs() < opts.stop_tol {
                status = FlowStatus::Converged;
                break;
            }
        }
    }
    let components: Vec<GridFunction> = comps
        .into_iter()
        .map(|c| GridFunction::from_trusted(grid.clone(), c))
        .collect();
    let residual = (problem.constraint(&components)? - 1.0).abs();
    let symmetry = components
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let star = schwarz_symmetrize(c);
            best_translation(c, &star, problem.p, 3).map(|(offset, distance)| SymmetryAudit {
                component: k,
                offset,
                distance,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Solution {
        components,
        energy,
        constraint_residual: residual,
        status,
        iterations,
        history,
        symmetrizations: events,
        symmetry,
        tolerance: problem.tolerance(energy),
        relaxed: problem.relaxed(),
    })
}

fn sphere_area(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * std::f64::consts::PI
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `∫_{ℝᴺ} e^{−p|x|^p} dx` and the fraction of it outside the ball of radius `rmax`.
fn radial_mass(dim: usize, p: f64, rmax: f64) -> (f64, f64) {
    let n = dim as f64;
    let f = |r: f64| r.powf(n - 1.0) * (-p * r.powf(p)).exp();
    // the integrand is below 1e-30 beyond this radius
    let far = (70.0 / p).powf(1.0 / p) + 1.0;
    let total = sphere_area(dim) * simpson(f, 0.0, far, 20_000);
    let tail = if rmax >= far {
        0.0
    } else {
        sphere_area(dim) * simpson(f, rmax, far, 20_000)
    };
    (total, tail / total)
}

/// The test family `Υ_θ^k(x) = θ^{N/p²} d_k^{−1/p} e^{−θ|x|^p}` with
/// `d_k = m ∫ G_k(e^{−|x|^p}) dx`, which lies on the constraint in the continuum.
pub fn upsilon(problem: &Problem, theta: f64) -> Result<Vec<GridFunction>> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let grid = &problem.grid;
    let n = grid.dim() as f64;
    let p = problem.p;
    let m = problem.components() as f64;
    // Υ_θ^p = θ^{N/p} e^{-pθ|x|^p}: in the scaled variable y = θ^{1/p} x the box
    // half-width is θ^{1/p} L (the inscribed ball in 2D).
    let (mass, tail) = radial_mass(grid.dim(), p, theta.powf(1.0 / p) * grid.extent());
    if tail > 1e-8 {
        return Err(Error::GrowExtent(format!(
            "tail mass {tail:.3e} outside the box at theta = {theta}; increase the extent"
        )));
    }
    problem
        .constraints
        .iter()
        .map(|g| {
            let d = m * g.c * mass;
            let amp = theta.powf(n / (p * p)) * d.powf(-1.0 / p);
            GridFunction::from_fn(grid.clone(), |x| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                amp * (-theta * r.powf(p)).exp()
            })
        })
        .collect()
}

/// Sweeps `θ`, evaluates `J(Υ_θ)` and the constraint, and reports the
/// largest sampled `θ₀` such that `J(Υ_θ) < 0` for every sampled `θ ≤ θ₀`.
pub fn upsilon_certificate(problem: &Problem, thetas: &[f64]) -> Result<Report> {
    let mut report = Report::new("upsilon_certificate");
    let decl = problem.coupling.declared().ok_or_else(|| {
        Error::Precondition(format!(
            "coupling {} declares no lower-bound constants",
            problem.coupling.name()
        ))
    })?;
    let n = problem.grid.dim() as f64;
    let worst = (0..problem.components())
        .map(|k| n * decl.sigma[k] + problem.p * decl.tau[k] - problem.p * problem.p)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        return Err(Error::Precondition(format!(
            "N sigma + p tau - p^2 = {worst} must be negative"
        )));
    }
    let mut sorted: Vec<f64> = thetas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.is_empty() || sorted.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::InvalidParameter("theta values must lie in (0, 1]".into()));
    }
    let rows: Vec<(f64, f64, f64)> = sorted
        .par_iter()
        .map(|&theta| {
            let u = upsilon(problem, theta)?;
            Ok((theta, problem.energy(&u)?, problem.constraint(&u)?))
        })
        .collect::<Result<_>>()?;
    let worst_constraint = rows.iter().map(|r| (r.2 - 1.0).abs()).fold(0.0, f64::max);
    let mut theta0 = None;
    for r in &rows {
        if r.1 < 0.0 {
            theta0 = Some(r.0);
        } else {
            break;
        }
    }
    let smallest_negative = rows.iter().find(|r| r.1 < 0.0).map(|r| r.0);
    report.series.insert("theta".into(), rows.iter().map(|r| r.0).collect());
    report.series.insert("J".into(), rows.iter().map(|r| r.1).collect());
    report.series.insert("constraint".into(), rows.iter().map(|r| r.2).collect());
    report
        .checks
        .push(Check::new("constraint_on_family", worst_constraint, 1e-8, rows.len()).noted("quadrature limited"));
    let mut neg = Check::new("negative_energy", rows[0].1, 0.0, rows.len());
    neg.pass = Some(theta0.is_some());
    report.checks.push(neg.noted("J(Upsilon_theta) < 0 for every sampled theta <= theta0"));
    if let Some(t) = theta0 {
        report.set("theta0", t);
    }
    if let Some(t) = smallest_negative {
        report.set("theta_smallest_negative", t);
    }
    report.set("exponent_margin", worst);
    if problem.relaxed() {
        report.flag("relaxed_dimension");
    }
    Ok(report)
}

fn dilate(u: &GridFunction, delta: f64, p: f64) -> Result<GridFunction> {
    let n = u.grid().dim() as f64;
    let amp = delta.powf(-n / p);
    GridFunction::from_fn(u.grid().clone(), |x| amp * u.interpolate([x[0] / delta, x[1] / delta]))
}

/// Evaluates `J(w^δ)` for `w^δ(x) = δ^{−N/p} w(x/δ)` after projecting `w` on
/// the constraint, both raw and renormalized, and fits the exponent of
/// coupling/kinetic against `1/δ`.
pub fn scaling_probe(problem: &Problem, w: &[GridFunction], deltas: &[f64]) -> Result<Report> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter("deltas must be positive".into()));
    }
    let w = project_to_constraint(w, &problem.constraints)?;
    problem.check_components(w.len(), w.iter().map(|c| c.grid().clone()))?;
    let mut raw = Vec::new();
    let mut renorm = Vec::new();
    let mut kinetic = Vec::new();
    let mut coupling = Vec::new();
    for &delta in deltas {
        let wd: Vec<GridFunction> = if delta == 1.0 {
            w.clone()
        } else {
            w.iter().map(|c| dilate(c, delta, problem.p)).collect::<Result<_>>()?
        };
        if wd.iter().any(|c| c.support_cells() < 4) {
            return Err(Error::InvalidParameter(format!(
                "delta = {delta} leaves fewer than 4 support cells"
            )));
        }
        let (k, f) = problem.energy_parts(&wd)?;
        raw.push(k - f);
        kinetic.push(k);
        coupling.push(f);
        renorm.push(problem.energy(&project_to_constraint(&wd, &problem.constraints)?)?);
    }
    let mut report = Report::new("scaling_probe");
    let n = problem.grid.dim() as f64;
    let p = problem.p;
    let sigma = problem
        .coupling
        .declared()
        .map(|d| d.sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let threshold = p * p / n;
    report.set("threshold_sigma", threshold);
    let alpha_max = problem
        .integrands
        .iter()
        .map(|j| (j.flags().alpha - p) / 2.0)
        .fold(0.0, f64::max);
    report.set("threshold_sigma_quasilinear", 2.0 * alpha_max + threshold);
    // slope of ln(F/K) against ln(1/δ)
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .zip(kinetic.iter().zip(&coupling))
        .filter(|(_, (k, f))| **k > 0.0 && **f > 0.0)
        .map(|(d, (k, f))| ((1.0 / d).ln(), (f / k).ln()))
        .collect();
    if pts.len() >= 2 {
        let mx = pts.iter().map(|q| q.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|q| q.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|q| (q.0 - mx) * (q.0 - mx)).sum();
        if sxx > 0.0 {
            report.set("fitted_exponent", sxy / sxx);
        }
    }
    if let Some(s) = sigma {
        report.set("sigma", s);
        report.set("predicted_exponent", n * s / p - p);
        report.flag(if s > threshold { "unbounded_regime" } else { "bounded_regime" });
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let monotone = order.windows(2).all(|w| raw[w[1]] < raw[w[0]]);
    report.set("monotone_decreasing", if monotone { 1.0 } else { 0.0 });
    report.set("min_J", raw.iter().cloned().fold(f64::INFINITY, f64::min));
    report.series.insert("delta".into(), deltas.to_vec());
    report.series.insert("J_raw".into(), raw);
    report.series.insert("J_renormalized".into(), renorm);
    report.series.insert("kinetic".into(), kinetic);
    report.series.insert("coupling".into(), coupling);
    report.notes.push("dilation uses multilinear interpolation; values are approximate".into());
    if problem.relaxed() {
        report.flag("relaxed_dimension");
    }
    Ok(report)
}

/// `‖u‖_q^q / (‖u‖_p^{p²/N} ‖∇u‖_p^p)` with `q = p + p²/N`.
pub fn gn_ratio(u: &GridFunction, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
    }
    let n = u.grid().dim() as f64;
    let q = p + p * p / n;
    let grid = u.grid();
    let num = lp_norm_raw(grid, u.values(), q).powf(q);
    let den = lp_norm_raw(grid, u.values(), p).powf(p * p / n) * seminorm_raw(grid, u.values(), p).powf(p);
    if !(den > 0.0) {
        return Err(Error::Precondition("GN ratio needs a nonzero function".into()));
    }
    Ok(num / den)
}

fn refine(u: &GridFunction) -> Result<GridFunction> {
    let g = u.grid();
    let fine = Grid::with_spacing(g.dim(), 2 * g.cells_per_axis() + 1, g.spacing() / 2.0)?;
    GridFunction::from_fn(fine, |x| u.interpolate(x))
}

/// GN ratios over a family, their maximum as an empirical constant, and the
/// drift of each ratio under one refinement `h → h/2`.
pub fn gn_check(family: &[GridFunction], p: f64) -> Result<Report> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    let mut ratios = Vec::new();
    let mut drifts = Vec::new();
    let mut worst_drift: f64 = 0.0;
    let mut counted = 0;
    let mut dominated = 0;
    for u in family {
        let r = gn_ratio(u, p)?;
        let fine = gn_ratio(&refine(u)?, p)?;
        let drift = (fine - r).abs() / r;
        ratios.push(r);
        drifts.push(drift);
        // spikes and other few-cell supports are dominated by the stencil
        if u.support_cells() < 9 {
            dominated += 1;
        } else {
            worst_drift = worst_drift.max(drift);
            counted += 1;
        }
    }
    let mut report = Report::new("gn_check");
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    report.set("C", c);
    let mut fin = Check::new("finite", if c.is_finite() { 0.0 } else { f64::INFINITY }, 0.0, ratios.len());
    fin.pass = Some(ratios.iter().all(|r| r.is_finite()));
    report.checks.push(fin);
    report.checks.push(Check::new("refinement_drift", worst_drift, 0.1, counted));
    if dominated > 0 {
        report.flag("stencil_dominated");
        report.set("stencil_dominated_count", dominated as f64);
    }
    report.series.insert("ratio".into(), ratios);
    report.series.insert("drift".into(), drifts);
    Ok(report)
}

/// `c = max_i u_i |x_i|^{N/p}` for a radially nonincreasing `u`.
pub fn radial_decay_check(u: &GridFunction, p: f64) -> Result<Report> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
    }
    let star = schwarz_symmetrize(u);
    let dist = lp_distance(u, &star, p)?;
    let norm = lp_norm_raw(u.grid(), u.values(), p);
    if dist > 1e-12 * norm {
        return Err(Error::NotRadial(dist));
    }
    let grid = u.grid();
    let n = grid.dim() as f64;
    let mut c: f64 = 0.0;
    let mut at: f64 = 0.0;
    for (i, &v) in u.values().iter().enumerate() {
        let r = grid.radius(i);
        if r > 0.0 {
            let w = v * r.powf(n / p);
            if w > c {
                c = w;
                at = r;
            }
        }
    }
    let mut report = Report::new("radial_decay_check");
    report.set("c", c);
    report.set("argmax_radius", at);
    report.set("lp_norm", norm);
    if norm > 0.0 {
        report.set("c_over_norm", c / norm);
    }
    let mut fin = Check::new("finite", 0.0, 0.0, grid.len());
    fin.pass = Some(c.is_finite());
    report.checks.push(fin);
    report
        .notes
        .push("c <= C(N,p)·||u||_p is reported, not asserted; the sharp constant is external".into());
    Ok(report)
}
