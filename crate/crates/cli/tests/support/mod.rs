//! Independent oracles and input generators for the acceptance harness.

use itertools::Itertools;
use polarsym_core::functional::Coupling;
use polarsym_core::grid::{Grid, GridFunction};
use rand::Rng;
use rayon::prelude::*;

/// Ground state of `u'' = u − u²/2` on the half line, found by shooting on
/// `u(0)` with `u'(0) = 0`, sampled with step `dx` until the trajectory
/// leaves the homoclinic orbit or `u` falls below `floor`.
pub struct Shooting {
    pub peak: f64,
    pub dx: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

fn rk4(u: f64, v: f64, dx: f64) -> (f64, f64) {
    let f = |u: f64, v: f64| (v, u - 0.5 * u * u);
    let (a1, b1) = f(u, v);
    let (a2, b2) = f(u + 0.5 * dx * a1, v + 0.5 * dx * b1);
    let (a3, b3) = f(u + 0.5 * dx * a2, v + 0.5 * dx * b2);
    let (a4, b4) = f(u + dx * a3, v + dx * b3);
    (
        u + dx / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        v + dx / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    )
}

enum Shot {
    Overshoot,
    Undershoot,
}

fn shoot(a: f64, dx: f64, x_max: f64, floor: f64, keep: bool) -> (Shot, Vec<f64>, Vec<f64>) {
    let (mut u, mut v) = (a, 0.0);
    let (mut us, mut vs) = (vec![u], vec![v]);
    let steps = (x_max / dx) as usize;
    for _ in 0..steps {
        let (nu, nv) = rk4(u, v, dx);
        if nu < 0.0 {
            return (Shot::Overshoot, us, vs);
        }
        if nv > 0.0 {
            return (Shot::Undershoot, us, vs);
        }
        u = nu;
        v = nv;
        if keep {
            us.push(u);
            vs.push(v);
        }
        if u < floor {
            break;
        }
    }
    (Shot::Undershoot, us, vs)
}

impl Shooting {
    pub fn solve(dx: f64) -> Self {
        let (mut lo, mut hi) = (1.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            match shoot(mid, dx, 80.0, 0.0, false).0 {
                Shot::Overshoot => hi = mid,
                Shot::Undershoot => lo = mid,
            }
        }
        let (_, u, du) = shoot(lo, dx, 80.0, 1e-12, true);
        Self { peak: lo, dx, u, du }
    }

    fn integral(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        // trapezoid on [0, X], doubled for the even extension
        let n = self.u.len();
        let mut s = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            s += w * f(self.u[i], self.du[i]);
        }
        2.0 * s * self.dx
    }

    /// Scale `λ` with `∫ u_λ² = 1` for `u_λ(x) = λ u(√λ x)`.
    pub fn lambda(&self) -> f64 {
        self.integral(|u, _| u * u).powf(-2.0 / 3.0)
    }

    /// `∫ |u_λ'|² − ∫ |u_λ|³/3` at the normalized scale.
    pub fn energy(&self) -> f64 {
        let l = self.lambda();
        let kinetic = self.integral(|_, v| v * v);
        let cubic = self.integral(|u, _| u * u * u);
        l.powf(2.5) * (kinetic - cubic / 3.0)
    }
}

/// `Σ_i F(|x_i|, s(x_i))` with the terms summed in sorted order, so the
/// value depends only on the multiset of terms.
pub fn arrangement_value(grid: &Grid, comps: &[&[f64]], f: &Coupling) -> f64 {
    let mut terms: Vec<f64> = (0..grid.len())
        .map(|i| {
            let s: Vec<f64> = comps.iter().map(|c| c[i]).collect();
            f.eval(grid.radius(i), &s)
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>() * grid.cell_volume()
}

/// Maximum of [`arrangement_value`] over every independent permutation of
/// every component.
pub fn max_over_arrangements(grid: &Grid, comps: &[Vec<f64>], f: &Coupling) -> f64 {
    let n = grid.len();
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let apply = |c: &[f64], p: &[usize]| -> Vec<f64> { p.iter().map(|&i| c[i]).collect() };
    match comps.len() {
        1 => perms
            .par_iter()
            .map(|p| arrangement_value(grid, &[&apply(&comps[0], p)], f))
            .reduce(|| f64::NEG_INFINITY, f64::max),
        2 => perms
            .par_iter()
            .map(|p| {
                let a = apply(&comps[0], p);
                perms
                    .iter()
                    .map(|q| arrangement_value(grid, &[&a, &apply(&comps[1], q)], f))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max),
        m => panic!("brute force supports one or two components, got {m}"),
    }
}

/// Random nonnegative field: a few bumps with random centers and widths,
/// plus sparse noise, plus some exact zeros.
pub fn random_field(grid: &Grid, rng: &mut impl Rng) -> GridFunction {
    let dim = grid.dim();
    let l = grid.extent();
    let bumps: Vec<([f64; 2], f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let c = [rng.gen_range(-0.6 * l..0.6 * l), if dim == 2 { rng.gen_range(-0.6 * l..0.6 * l) } else { 0.0 }];
            (c, rng.gen_range(0.05 * l..0.4 * l), rng.gen_range(0.2..3.0))
        })
        .collect();
    let noise = rng.gen_range(0.0..0.5);
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            let mut v: f64 = bumps
                .iter()
                .map(|(c, w, a)| {
                    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                    a * (-r2 / (w * w)).exp()
                })
                .sum();
            if rng.gen_bool(0.3) {
                v += noise * rng.gen::<f64>();
            }
            if v < 1e-3 {
                0.0
            } else {
                v
            }
        })
        .collect();
    GridFunction::new(grid.clone(), values).unwrap()
}

/// Uniform random odd cell count in `lo..=hi`.
pub fn random_odd(rng: &mut impl Rng, lo: usize, hi: usize) -> usize {
    let m = rng.gen_range(lo..=hi);
    if m % 2 == 0 {
        m + 1
    } else {
        m
    }
}

/// One pass/fail line for a criterion.
pub fn line(n: usize, title: &str, pass: bool, detail: &str) -> bool {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} [{word}] {title}: {detail}");
    pass
}
