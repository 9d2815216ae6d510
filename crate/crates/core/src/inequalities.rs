//! Verdicts for the rearrangement inequalities: polarization invariance,
//! gradient-norm preservation, Polya–Szegő, the coupling rearrangement
//! inequality and the equality-case probe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{evaluate_coupling, evaluate_j, Coupling, Integrand};
use crate::grid::{gradient_norm, lp_distance, sobolev_seminorm, stencil_pairs, GridFunction, HalfSpace, Lattice};
use crate::rearrange::{polarize, schwarz_symmetrize, IterationTrace};
use crate::report::{Check, Report, Verdict};

/// Default constant of the discretization tolerance `C·h·(1 + |J|)`.
pub const C_DISC: f64 = 4.0;

/// Relative tolerance for identities that hold exactly up to rounding.
pub const EXACT_TOL: f64 = 1e-12;

/// `c_disc · h · (1 + |value|)`.
pub fn discretization_tolerance(c_disc: f64, h: f64, value: f64) -> f64 {
    c_disc * h * (1.0 + value.abs())
}

fn sorted_pairs(u: &GridFunction) -> Vec<(f64, f64)> {
    let mut pairs = stencil_pairs(u.grid(), u.values());
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
}

/// True when `u` and `v` carry the same multiset of `(value, |∇u|)` pairs
/// over the whole stencil (box cells and ghost layer), compared bitwise.
pub fn pair_multiset_equal(u: &GridFunction, v: &GridFunction) -> bool {
    sorted_pairs(u) == sorted_pairs(v)
}

/// True when every reflection orbit `{x, σ_H(x)}` keeps its multiset of
/// `(value, |∇u|)` pairs. The forward stencil does not commute with
/// reflections, so this is stronger than what polarization guarantees.
pub fn orbit_pairs_preserved(u: &GridFunction, hs: &HalfSpace) -> Result<bool> {
    let grid = u.grid();
    let lr = hs
        .lattice_reflection(grid)
        .ok_or_else(|| Error::Precondition("half-space is not grid-exact".into()))?;
    let uh = polarize(u, hs)?;
    let (gu, gh) = (gradient_norm(u), gradient_norm(&uh));
    for i in 0..grid.len() {
        let k = grid.lattice(i);
        let image = lr.apply(k);
        let mut before = vec![(u.values()[i], gu[i])];
        let mut after = vec![(uh.values()[i], gh[i])];
        match grid.index_of(image) {
            Some(j) if j != i => {
                if j < i {
                    continue;
                }
                before.push((u.values()[j], gu[j]));
                after.push((uh.values()[j], gh[j]));
            }
            _ => {}
        }
        let key = |a: &(f64, f64), b: &(f64, f64)| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1));
        before.sort_by(key);
        after.sort_by(key);
        if before != after {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `J(u^H) = J(u)` for a grid-exact `H`, with the `(value, |∇u|)` pair
/// multiset required to be preserved as well.
pub fn verify_polarization_invariance(u: &GridFunction, hs: &HalfSpace, j: &Integrand) -> Result<Verdict> {
    if !hs.is_grid_exact(u.grid()) {
        return Err(Error::Precondition(
            "polarization invariance is only asserted for grid-exact half-spaces".into(),
        ));
    }
    let uh = polarize(u, hs)?;
    let before = evaluate_j(u, j)?;
    let after = evaluate_j(&uh, j)?;
    let orbit = orbit_pairs_preserved(u, hs)?;
    Ok(
        Verdict::equal("polarization_invariance", after, before, EXACT_TOL * (1.0 + before.abs()))
            .require("pair_multiset_preserved", pair_multiset_equal(u, &uh))
            .with_meta("orbit_pairs_preserved", orbit)
            .with_meta("h", u.spacing())
            .with_meta("integrand", j.name())
            .with_meta("normal", hs.normal().to_vec())
            .with_meta("offset", hs.offset()),
    )
}

/// The seminorm column of a grid-exact trace is constant to `1e-12` relative.
pub fn verify_gradient_preservation(trace: &IterationTrace) -> Result<Verdict> {
    if !trace.grid_exact {
        return Err(Error::Precondition(
            "trace uses interpolated half-spaces; use seminorm_drift instead".into(),
        ));
    }
    let col = trace.seminorms();
    let first = *col.first().ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    let worst = col.iter().map(|s| (s - first).abs()).fold(0.0, f64::max);
    Ok(Verdict::at_most("gradient_norm_preserved", worst, 0.0, EXACT_TOL * first.abs())
        .with_meta("steps", col.len() - 1)
        .with_meta("p", trace.p)
        .with_meta("seminorm_min", col.iter().cloned().fold(f64::INFINITY, f64::min))
        .with_meta("seminorm_max", col.iter().cloned().fold(f64::NEG_INFINITY, f64::max)))
}

/// Drift of the seminorm column for traces built from any half-spaces.
pub fn seminorm_drift(trace: &IterationTrace) -> Report {
    let col = trace.seminorms();
    let first = col.first().copied().unwrap_or(0.0);
    let mut report = Report::new("seminorm_drift");
    let worst = col.iter().map(|s| (s - first).abs()).fold(0.0, f64::max);
    report.set("initial", first);
    report.set("final", col.last().copied().unwrap_or(0.0));
    report.set("max_abs_drift", worst);
    report.series.insert("seminorm".into(), col);
    if !trace.grid_exact {
        report.flag("interpolated");
    }
    report
}

/// `J(u*) ≤ J(u) + C·h·(1 + |J(u)|)` plus exact equimeasurability of `u*`.
pub fn verify_polya_szego(u: &GridFunction, j: &Integrand, c_disc: f64) -> Result<Verdict> {
    j.require_convex_monotone()?;
    let star = schwarz_symmetrize(u);
    let ju = evaluate_j(u, j)?;
    let js = evaluate_j(&star, j)?;
    let tol = discretization_tolerance(c_disc, u.spacing(), ju);
    let p = j.flags().p.max(1.0 + f64::EPSILON);
    let same_norm = u.sorted_values() == star.sorted_values();
    Ok(Verdict::at_most("polya_szego", js, ju, tol)
        .require("equimeasurable", same_norm)
        .with_meta("lp_norm", crate::grid::lp_norm(u, p.max(1.5))?)
        .with_meta("h", u.spacing())
        .with_meta("c_disc", c_disc)
        .with_meta("integrand", j.name()))
}

/// `∫F(|x|, u) ≤ ∫F(|x|, u*) + C·h·(1 + |∫F(|x|, u)|)` with componentwise `u*`.
pub fn verify_coupling_rearrangement(u: &[GridFunction], f: &Coupling, c_disc: f64) -> Result<Verdict> {
    f.require_cooperative()?;
    let star: Vec<GridFunction> = u.iter().map(schwarz_symmetrize).collect();
    let lhs = evaluate_coupling(u, f)?;
    let rhs = evaluate_coupling(&star, f)?;
    let h = u.first().map(GridFunction::spacing).unwrap_or(0.0);
    Ok(
        Verdict::at_most("coupling_rearrangement", lhs, rhs, discretization_tolerance(c_disc, h, lhs))
            .with_meta("h", h)
            .with_meta("c_disc", c_disc)
            .with_meta("coupling", f.name()),
    )
}

/// Integer cell offset `x₀` minimizing `‖u − v(· − x₀)‖_p` in a window of
/// `±radius` cells around the difference of the centers of mass.
pub fn best_translation(u: &GridFunction, v: &GridFunction, p: f64, radius: i64) -> Result<(Lattice, f64)> {
    if !u.grid().same_as(v.grid()) {
        return Err(Error::GridMismatch("best_translation".into()));
    }
    let com = |f: &GridFunction| {
        let grid = f.grid();
        let mut m = [0.0f64; 3];
        for (i, &val) in f.values().iter().enumerate() {
            let k = grid.lattice(i);
            m[0] += val * k[0] as f64;
            m[1] += val * k[1] as f64;
            m[2] += val;
        }
        if m[2] > 0.0 {
            [m[0] / m[2], m[1] / m[2]]
        } else {
            [0.0, 0.0]
        }
    };
    let (cu, cv) = (com(u), com(v));
    let center = [(cu[0] - cv[0]).round() as i64, (cu[1] - cv[1]).round() as i64];
    let second = if u.grid().dim() == 2 { radius } else { 0 };
    let mut best = ([0, 0], f64::INFINITY);
    for d0 in -radius..=radius {
        for d1 in -second..=second {
            let offset = [center[0] + d0, center[1] + d1];
            let dist = lp_distance(u, &v.translated(offset), p)?;
            if dist < best.1 {
                best = (offset, dist);
            }
        }
    }
    Ok(best)
}

/// Classification produced by [`equality_case_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProbeOutcome {
    /// `J(u*) < J(u)` beyond tolerance: not an equality case.
    StrictInequality,
    /// Equality holds but the critical set of `u*` is too large to conclude.
    CriticalSetGuard,
    /// Equality holds and `u` is a cell translate of `u*`.
    TranslationRecovered { offset: Lattice },
    /// Equality holds, the critical set is small, yet no translate matches.
    NoTranslation,
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub c_disc: f64,
    /// Slope below which a cell counts as critical; `None` means `h`.
    pub eps_grad: Option<f64>,
    /// Critical-set fraction of the support above which the guard fires.
    pub guard_fraction: f64,
    pub search_radius: i64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            c_disc: C_DISC,
            eps_grad: None,
            guard_fraction: 0.05,
            search_radius: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualityProbe {
    pub outcome: ProbeOutcome,
    pub report: Report,
}

/// Staged equality-case analysis: (a) `J(u) = J(u*)`, (b) equal gradient
/// norms, (c) critical-set measure of `u*` inside `{0 < u* < max}`,
/// (d) best integer translation of `u*` onto `u`.
pub fn equality_case_probe(u: &GridFunction, j: &Integrand, p: f64, opts: &ProbeOptions) -> Result<EqualityProbe> {
    j.require_strict_coercive()?;
    let grid = u.grid();
    let h = grid.spacing();
    let star = schwarz_symmetrize(u);
    let ju = evaluate_j(u, j)?;
    let js = evaluate_j(&star, j)?;
    let tol = discretization_tolerance(opts.c_disc, h, ju);
    let mut report = Report::new("equality_case_probe");
    report.set("tolerance", tol);
    report.set("J_u", ju);
    report.set("J_star", js);

    let stage_a = (ju - js).abs() <= tol;
    report.checks.push(Check::new("a_energy_equality", (ju - js).abs(), tol, 1));

    let (gu, gs) = (sobolev_seminorm(u, p)?, sobolev_seminorm(&star, p)?);
    report.set("grad_norm_u", gu);
    report.set("grad_norm_star", gs);
    report.checks.push(Check::new("b_gradient_norm_equality", (gu - gs).abs(), tol, 1));

    let top = star.max_value();
    let eps_val = 1e-9 * top;
    let eps_grad = opts.eps_grad.unwrap_or(h);
    let grad = gradient_norm(&star);
    let critical = (0..grid.len())
        .filter(|&i| {
            let v = star.values()[i];
            grad[i] < eps_grad && v > eps_val && v < top - eps_val
        })
        .count();
    let critical_measure = critical as f64 * grid.cell_volume();
    let support_measure = star.support_cells() as f64 * grid.cell_volume();
    let limit = opts.guard_fraction * support_measure;
    let guard = critical_measure > limit;
    report.set("critical_set_measure", critical_measure);
    report.set("support_measure", support_measure);
    report.set("eps_grad", eps_grad);
    report.checks.push(
        Check::new("c_critical_set", critical_measure, limit, critical)
            .noted(format!("guard fires above {} of the support measure", opts.guard_fraction)),
    );

    let (offset, dist) = best_translation(u, &star, p, opts.search_radius)?;
    report.set("translation_distance", dist);
    report.set("offset_0", offset[0] as f64);
    report.set("offset_1", offset[1] as f64);
    let mut d = Check::new("d_translation", dist, tol, (2 * opts.search_radius as usize + 1).pow(grid.dim() as u32));
    if guard {
        d = d.noted("advisory: critical-set guard fired");
    }
    report.checks.push(d);
    report.notes.push(
        "strict convergence of J(u_n) -> J(u*) to gradient convergence is assumed for strictly convex coercive integrands"
            .into(),
    );

    let outcome = if !stage_a {
        report.flag("not_an_equality_case");
        ProbeOutcome::StrictInequality
    } else if guard {
        report.flag("critical_set_guard");
        ProbeOutcome::CriticalSetGuard
    } else if dist <= tol {
        report.flag("translation_recovered");
        ProbeOutcome::TranslationRecovered { offset }
    } else {
        report.flag("no_translation");
        ProbeOutcome::NoTranslation
    };
    Ok(EqualityProbe { outcome, report })
}
