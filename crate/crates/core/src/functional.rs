//! Integrands `j(s, t)`, coupling terms `F(r, s_1, …, s_m)`, constraint
//! densities `G_k(s)`, their grid integrals and sampled hypothesis audits.

use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{stencil_pairs, Grid, GridFunction};
use crate::report::{Check, Report};
use crate::sum::{map_sum, pairwise_sum};

/// Relative tolerance used by every sampled audit.
pub const AUDIT_TOL: f64 = 1e-12;

type Kernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Structural constants and flags an integrand declares about itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrandFlags {
    pub convex_in_t: bool,
    pub nondecreasing_in_t: bool,
    pub strictly_convex_in_t: bool,
    /// Coercivity constant in `ν t^p ≤ j(s, t)`.
    pub nu: f64,
    /// Exponent in `j(λs, λt) ≤ λ^α j(s, t)` for `λ ≥ 1`.
    pub alpha: f64,
    /// Growth exponent `p` paired with `nu`.
    pub p: f64,
}

#[derive(Clone)]
enum IntegrandKind {
    Power { p: f64 },
    ConvexA { p: f64 },
    SplitBA { p: f64 },
    QuasiLinear { p: f64, a: f64 },
    Sqrt,
    Table(Arc<Table>),
    Custom(Kernel),
}

/// A Lagrangian `j(s, t)` evaluated at (value, gradient magnitude).
#[derive(Clone)]
pub struct Integrand {
    name: String,
    kind: IntegrandKind,
    flags: IntegrandFlags,
    audit: Arc<OnceLock<Report>>,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn exponent(p: f64) -> Result<f64> {
    if p.is_finite() && p > 1.0 {
        Ok(p)
    } else {
        Err(Error::InvalidParameter(format!("exponent p must be > 1, got {p}")))
    }
}

impl Integrand {
    fn build(name: String, kind: IntegrandKind, flags: IntegrandFlags) -> Self {
        Self {
            name,
            kind,
            flags,
            audit: Arc::new(OnceLock::new()),
        }
    }

    /// `t^p`.
    pub fn power(p: f64) -> Result<Self> {
        let p = exponent(p)?;
        Ok(Self::build(
            format!("power:p={p}"),
            IntegrandKind::Power { p },
            IntegrandFlags {
                convex_in_t: true,
                nondecreasing_in_t: true,
                strictly_convex_in_t: true,
                nu: 1.0,
                alpha: p,
                p,
            },
        ))
    }

    /// `A(t) = (1 + t²)^{p/2} − 1`.
    pub fn convex_a(p: f64) -> Result<Self> {
        let p = exponent(p)?;
        Ok(Self::build(
            format!("convex:p={p}"),
            IntegrandKind::ConvexA { p },
            IntegrandFlags {
                convex_in_t: true,
                nondecreasing_in_t: true,
                strictly_convex_in_t: true,
                nu: if p >= 2.0 { 1.0 } else { 0.0 },
                alpha: p.max(2.0),
                p,
            },
        ))
    }

    /// `b(s) t^p` with `b(s) = 2 − e^{−|s|}`.
    pub fn split_ba(p: f64) -> Result<Self> {
        let p = exponent(p)?;
        Ok(Self::build(
            format!("split:p={p}"),
            IntegrandKind::SplitBA { p },
            IntegrandFlags {
                convex_in_t: true,
                nondecreasing_in_t: true,
                strictly_convex_in_t: true,
                nu: 1.0,
                alpha: p + 1.0,
                p,
            },
        ))
    }

    /// `½(1 + |s|^{2a}) t^p`.
    pub fn quasi_linear(p: f64, a: f64) -> Result<Self> {
        let p = exponent(p)?;
        let a = positive("alpha", a)?;
        Ok(Self::build(
            format!("quasilinear:p={p},alpha={a}"),
            IntegrandKind::QuasiLinear { p, a },
            IntegrandFlags {
                convex_in_t: true,
                nondecreasing_in_t: true,
                strictly_convex_in_t: true,
                nu: 0.5,
                alpha: p + 2.0 * a,
                p,
            },
        ))
    }

    /// `√t`: increasing but concave.
    pub fn sqrt() -> Self {
        Self::build(
            "sqrt".into(),
            IntegrandKind::Sqrt,
            IntegrandFlags {
                convex_in_t: false,
                nondecreasing_in_t: true,
                strictly_convex_in_t: false,
                nu: 0.0,
                alpha: 1.0,
                p: 1.0,
            },
        )
    }

    pub fn custom(
        name: &str,
        flags: IntegrandFlags,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::build(name.to_string(), IntegrandKind::Custom(Arc::new(f)), flags)
    }

    /// Parses an `IJ1` table.
    pub fn from_table(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let name = format!("table:{}", table.label);
        let flags = table.flags;
        Ok(Self::build(name, IntegrandKind::Table(Arc::new(table)), flags))
    }

    pub fn read_table(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut j = Self::from_table(&text)?;
        j.name = format!("table:{}", path.as_ref().display());
        Ok(j)
    }

    /// Parses a preset string such as `power:p=2`, `quasilinear:p=2,alpha=1`,
    /// `convex:p=2`, `split:p=2`, `sqrt` or `table:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        if kind == "table" {
            return Self::read_table(rest);
        }
        let params = Params::parse(rest)?;
        let j = match kind {
            "power" => Self::power(params.get("p", 2.0)?)?,
            "convex" => Self::convex_a(params.get("p", 2.0)?)?,
            "split" => Self::split_ba(params.get("p", 2.0)?)?,
            "quasilinear" => Self::quasi_linear(params.get("p", 2.0)?, params.get("alpha", 1.0)?)?,
            "sqrt" => Self::sqrt(),
            _ => return Err(Error::Parse(format!("unknown integrand '{kind}'"))),
        };
        params.finish()?;
        Ok(j)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> IntegrandFlags {
        self.flags
    }

    #[inline]
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match &self.kind {
            IntegrandKind::Power { p } => t.powf(*p),
            IntegrandKind::ConvexA { p } => {
                // (1+t²)^{p/2} − 1 without cancellation for small t
                (0.5 * p * (t * t).ln_1p()).exp_m1()
            }
            IntegrandKind::SplitBA { p } => (2.0 - (-s.abs()).exp()) * t.powf(*p),
            IntegrandKind::QuasiLinear { p, a } => 0.5 * (1.0 + s.abs().powf(2.0 * a)) * t.powf(*p),
            IntegrandKind::Sqrt => t.sqrt(),
            IntegrandKind::Table(table) => table.eval(s, t),
            IntegrandKind::Custom(f) => f(s, t),
        }
    }

    /// Sampled audit with the default sampler, computed once per instance.
    pub fn audit(&self) -> &Report {
        self.audit.get_or_init(|| audit_integrand(self, &Sampler::default()))
    }

    /// Fails unless the audit confirms convexity and monotonicity in `t`.
    pub fn require_convex_monotone(&self) -> Result<()> {
        let report = self.audit();
        for name in ["convex_in_t", "nondecreasing_in_t"] {
            if report.check(name).and_then(|c| c.pass) != Some(true) {
                return Err(Error::Precondition(format!(
                    "integrand {} fails the {name} audit",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Fails unless the audit confirms strict convexity and coercivity with `ν > 0`.
    pub fn require_strict_coercive(&self) -> Result<()> {
        self.require_convex_monotone()?;
        let report = self.audit();
        if report.check("strictly_convex_in_t").and_then(|c| c.pass) != Some(true) {
            return Err(Error::Precondition(format!("integrand {} is not strictly convex in t", self.name)));
        }
        if !(self.flags.nu > 0.0) || report.check("coercivity").and_then(|c| c.pass) != Some(true) {
            return Err(Error::Precondition(format!("integrand {} is not coercive", self.name)));
        }
        Ok(())
    }
}

/// `key=value` list with tracking of unused keys.
pub(crate) struct Params {
    items: Vec<(String, String)>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl Params {
    pub(crate) fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            items.push((k.trim().to_string(), v.trim().to_string()));
        }
        let used = std::cell::RefCell::new(vec![false; items.len()]);
        Ok(Self { items, used })
    }

    pub(crate) fn get(&self, key: &str, default: f64) -> Result<f64> {
        match self.items.iter().position(|(k, _)| k == key) {
            None => Ok(default),
            Some(i) => {
                self.used.borrow_mut()[i] = true;
                self.items[i]
                    .1
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number for {key}: '{}'", self.items[i].1)))
            }
        }
    }

    pub(crate) fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.items.iter().zip(used.iter()).find(|(_, u)| !**u) {
            Some(((k, _), _)) => Err(Error::Parse(format!("unknown parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

/// Tensor-product table on an `(s, t)` lattice, bilinear inside, clamped in
/// `|s|` and linearly extrapolated in `t`.
#[derive(Debug)]
struct Table {
    label: String,
    s: Vec<f64>,
    t: Vec<f64>,
    /// `j[is * t.len() + it]`
    j: Vec<f64>,
    flags: IntegrandFlags,
}

fn bracket(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty IJ1 table".into()))?;
        let mut words = header.split_whitespace();
        if words.next() != Some("IJ1") {
            return Err(Error::Parse("IJ1 table must start with 'IJ1'".into()));
        }
        let mut flags = IntegrandFlags {
            convex_in_t: true,
            nondecreasing_in_t: true,
            strictly_convex_in_t: false,
            nu: 0.0,
            alpha: 2.0,
            p: 2.0,
        };
        let mut label = "inline".to_string();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad IJ1 header field '{w}'")))?;
            let flag = |v: &str| {
                v.parse::<bool>()
                    .map_err(|_| Error::Parse(format!("bad boolean '{v}'")))
            };
            let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{v}'")));
            match k {
                "name" => label = v.to_string(),
                "convex" => flags.convex_in_t = flag(v)?,
                "nondecreasing" => flags.nondecreasing_in_t = flag(v)?,
                "strict" => flags.strictly_convex_in_t = flag(v)?,
                "nu" => flags.nu = num(v)?,
                "alpha" => flags.alpha = num(v)?,
                "p" => flags.p = num(v)?,
                _ => return Err(Error::Parse(format!("unknown IJ1 header field '{k}'"))),
            }
        }
        let mut rows = Vec::new();
        for line in lines {
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| Error::Parse(format!("bad IJ1 number '{w}'"))))
                .collect::<Result<_>>()?;
            if nums.len() != 3 || nums.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("IJ1 row must hold three finite numbers: '{line}'")));
            }
            rows.push((nums[0], nums[1], nums[2]));
        }
        let mut s: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut t: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for v in [&mut s, &mut t] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        if s.len() < 2 || t.len() < 2 || s.len() * t.len() != rows.len() {
            return Err(Error::Parse(
                "IJ1 rows must cover a full (s, t) lattice with at least two values per axis".into(),
            ));
        }
        let mut j = vec![f64::NAN; rows.len()];
        for (rs, rt, rj) in rows {
            let is = s.partition_point(|&v| v < rs);
            let it = t.partition_point(|&v| v < rt);
            let slot = &mut j[is * t.len() + it];
            if !slot.is_nan() {
                return Err(Error::Parse(format!("duplicate IJ1 node ({rs}, {rt})")));
            }
            *slot = rj;
        }
        Ok(Self { label, s, t, j, flags })
    }

    fn eval(&self, s: f64, t: f64) -> f64 {
        let s = s.abs().clamp(self.s[0], *self.s.last().unwrap());
        let (is, fs) = bracket(&self.s, s);
        let (it, ft) = bracket(&self.t, t);
        let nt = self.t.len();
        let at = |a: usize, b: usize| self.j[a * nt + b];
        let lo = at(is, it) + ft * (at(is, it + 1) - at(is, it));
        let hi = at(is + 1, it) + ft * (at(is + 1, it + 1) - at(is + 1, it));
        lo + fs * (hi - lo)
    }
}

/// Sampling plan for hypothesis audits.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub s_max: f64,
    pub t_max: f64,
    pub grid_points: usize,
    pub random_points: usize,
    pub seed: u64,
    /// Space dimension used by the growth estimates of coupling audits.
    pub dim: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Self {
            s_max: 10.0,
            t_max: 10.0,
            grid_points: 64,
            random_points: 1000,
            seed: 0,
            dim: 1,
        }
    }
}

impl Sampler {
    fn axis(&self, max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
    }
}

/// Running maximum of normalized residuals.
struct Worst {
    value: f64,
    samples: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            samples: 0,
        }
    }

    /// Records the violation `lhs − rhs` of `lhs ≤ rhs`, relative to `1 + scale`.
    fn le(&mut self, lhs: f64, rhs: f64, scale: f64) {
        let r = (lhs - rhs) / (1.0 + scale.abs());
        self.value = if r.is_nan() { f64::INFINITY } else { self.value.max(r) };
        self.samples += 1;
    }

    fn check(&self, name: &str) -> Check {
        Check::new(name, self.value, AUDIT_TOL, self.samples)
    }
}

/// Numerically checks convexity and monotonicity in `t`, nonnegativity,
/// coercivity `ν t^p ≤ j`, the sign condition `j(|s|, t) ≤ j(−|s|, t)`,
/// α-scaling for `λ ∈ [1, 10]` and strict convexity. Also estimates the
/// smallest admissible α.
pub fn audit_integrand(j: &Integrand, sampler: &Sampler) -> Report {
    let n = sampler.grid_points.max(2);
    let ss = sampler.axis(sampler.s_max, n);
    let ts = sampler.axis(sampler.t_max, n);
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let f = j.flags();

    let mut convex = Worst::new();
    let mut strict = Worst::new();
    let mut monotone = Worst::new();
    let mut nonneg = Worst::new();
    let mut coercive = Worst::new();
    let mut sign = Worst::new();

    let mut midpoint = |s: f64, a: f64, b: f64| {
        let (ja, jb, jm) = (j.eval(s, a), j.eval(s, b), j.eval(s, 0.5 * (a + b)));
        let scale = ja.abs() + jb.abs();
        convex.le(jm, 0.5 * (ja + jb), scale);
        // strictly convex: the gap must be positive, so record its negation
        if a != b {
            strict.le(jm - 0.5 * (ja + jb), 0.0, 0.0);
        }
    };
    for &s in &ss {
        for (ia, &a) in ts.iter().enumerate() {
            for &b in &ts[ia + 1..] {
                midpoint(s, a, b);
            }
        }
    }
    for _ in 0..sampler.random_points {
        let s = rng.gen::<f64>() * sampler.s_max;
        let a = rng.gen::<f64>() * sampler.t_max;
        let b = rng.gen::<f64>() * sampler.t_max;
        midpoint(s, a, b);
    }

    let mut point = |s: f64, t: f64, next_t: Option<f64>| {
        let v = j.eval(s, t);
        nonneg.le(0.0, v, 0.0);
        if let Some(tn) = next_t {
            let vn = j.eval(s, tn);
            monotone.le(v, vn, v.abs() + vn.abs());
        }
        coercive.le(f.nu * t.powf(f.p), v, v);
        let vm = j.eval(-s, t);
        sign.le(v, vm, v.abs() + vm.abs());
    };
    for &s in &ss {
        for w in ts.windows(2) {
            point(s, w[0], Some(w[1]));
        }
        point(s, ts[n - 1], None);
    }
    for _ in 0..sampler.random_points {
        let s = rng.gen::<f64>() * sampler.s_max;
        let t = rng.gen::<f64>() * sampler.t_max;
        let dt = rng.gen::<f64>() * sampler.t_max;
        point(s, t, Some(t + dt));
    }

    // α-scaling on a coarser lattice; λ up to 10 reaches 10·s_max.
    let coarse = 16.min(n);
    let cs = sampler.axis(sampler.s_max, coarse);
    let ct = sampler.axis(sampler.t_max, coarse);
    let mut lambdas = vec![1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0];
    lambdas.extend((0..32).map(|_| 1.0 + 9.0 * rng.gen::<f64>()));
    let mut scaling = Worst::new();
    let mut alpha_hat = f64::NEG_INFINITY;
    for &lam in &lambdas {
        for &s in &cs {
            for &t in &ct {
                let base = j.eval(s, t);
                let scaled = j.eval(lam * s, lam * t);
                let bound = lam.powf(f.alpha) * base;
                scaling.le(scaled, bound, bound);
                if lam >= 1.5 && base > 0.0 && scaled > 0.0 {
                    alpha_hat = alpha_hat.max((scaled / base).ln() / lam.ln());
                }
            }
        }
    }

    let mut report = Report::new(&format!("audit_integrand {}", j.name()));
    report.checks.push(convex.check("convex_in_t"));
    report.checks.push(monotone.check("nondecreasing_in_t"));
    report.checks.push(nonneg.check("nonnegative"));
    report
        .checks
        .push(coercive.check("coercivity").noted(format!("nu={} p={}", f.nu, f.p)));
    report.checks.push(sign.check("sign_condition"));
    report
        .checks
        .push(scaling.check("alpha_scaling").noted(format!("alpha={} lambda in [1,10]", f.alpha)));
    let mut strict_check = Check::new("strictly_convex_in_t", strict.value, 0.0, strict.samples);
    strict_check.pass = Some(strict.value < 0.0);
    report.checks.push(strict_check.noted("midpoint gap must be positive for every sampled pair"));
    report.set("alpha_declared", f.alpha);
    report.set("alpha_estimate", alpha_hat);
    report.set("nu", f.nu);
    for (flag, declared, name) in [
        ("convex_in_t", f.convex_in_t, "convex_in_t"),
        ("nondecreasing_in_t", f.nondecreasing_in_t, "nondecreasing_in_t"),
        ("strictly_convex_in_t", f.strictly_convex_in_t, "strictly_convex_in_t"),
    ] {
        let measured = report.check(name).and_then(|c| c.pass) == Some(true);
        if declared && !measured {
            report.flag(&format!("declared_{flag}_refuted"));
        }
    }
    report.notes.push(format!(
        "sampled on s in [0,{}], t in [0,{}], {}x{} lattice plus {} random points",
        sampler.s_max, sampler.t_max, n, n, sampler.random_points
    ));
    report
}

/// Constants a coupling declares for the lower bound
/// `F(r, s) ≥ Σ_k μ_k r^{−τ_k} s_k^{σ_k + p}` on `r > r₀`, `|s| ≤ δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingDecl {
    pub p: f64,
    pub r0: f64,
    pub delta: f64,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Exponent in `F(r, λs) ≥ λ^α F(r, s)`.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum CouplingKind {
    Zero,
    Product,
    NegProduct,
    RadialLinear { tau: f64 },
    PowerPair { p: f64, sigma: f64, beta: f64, tau: f64, mu: f64 },
}

/// A coupling term `F(|x|, s_1, …, s_m)`.
#[derive(Debug, Clone)]
pub struct Coupling {
    name: String,
    kind: CouplingKind,
    m: usize,
    decl: Option<CouplingDecl>,
    audit: Arc<OnceLock<Report>>,
}

impl Coupling {
    fn build(name: String, kind: CouplingKind, m: usize, decl: Option<CouplingDecl>) -> Self {
        Self {
            name,
            kind,
            m,
            decl,
            audit: Arc::new(OnceLock::new()),
        }
    }

    pub fn zero(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("component count must be >= 1".into()));
        }
        Ok(Self::build(format!("zero:m={m}"), CouplingKind::Zero, m, None))
    }

    /// `s₁ s₂`.
    pub fn product() -> Self {
        Self::build("product".into(), CouplingKind::Product, 2, None)
    }

    /// `−s₁ s₂`, which is not supermodular.
    pub fn neg_product() -> Self {
        Self::build("negproduct".into(), CouplingKind::NegProduct, 2, None)
    }

    /// `(1 + r)^{−τ} s` for one component.
    pub fn radial_linear(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
        }
        Ok(Self::build(
            format!("radial:tau={tau}"),
            CouplingKind::RadialLinear { tau },
            1,
            None,
        ))
    }

    /// `a(r)·μ/(p+σ)·[Σ_k |s_k|^{p+σ} + 2β Σ_{i<j} |s_i|^q |s_j|^q]` with
    /// `q = (p+σ)/2` and `a(r) = (1+r)^{−τ}`.
    pub fn power_pair(m: usize, p: f64, sigma: f64, beta: f64, tau: f64, mu: f64) -> Result<Self> {
        let p = exponent(p)?;
        if m == 0 {
            return Err(Error::InvalidParameter("component count must be >= 1".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0 && tau.is_finite() && tau >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter("need sigma >= 0, tau >= 0, finite beta".into()));
        }
        let mu = positive("mu", mu)?;
        let r0: f64 = 1.0;
        let decl = CouplingDecl {
            p,
            r0,
            delta: 1.0,
            mu: vec![mu * (r0 / (1.0 + r0)).powf(tau) / (p + sigma); m],
            tau: vec![tau; m],
            sigma: vec![sigma; m],
            alpha: p + sigma,
        };
        Ok(Self::build(
            format!("powerpair:m={m},p={p},sigma={sigma},beta={beta},tau={tau},mu={mu}"),
            CouplingKind::PowerPair { p, sigma, beta, tau, mu },
            m,
            Some(decl),
        ))
    }

    /// Parses `zero[:m=..]`, `product`, `negproduct`, `radial:tau=..` or
    /// `powerpair:p=..,sigma=..,beta=..,tau=..[,mu=..][,m=..]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let params = Params::parse(rest)?;
        let count = |default: f64| -> Result<usize> {
            let m = params.get("m", default)?;
            if m.fract() != 0.0 || m < 1.0 {
                return Err(Error::Parse(format!("m must be a positive integer, got {m}")));
            }
            Ok(m as usize)
        };
        let c = match kind {
            "zero" => Self::zero(count(1.0)?)?,
            "product" => Self::product(),
            "negproduct" => Self::neg_product(),
            "radial" => Self::radial_linear(params.get("tau", 1.0)?)?,
            "powerpair" => Self::power_pair(
                count(2.0)?,
                params.get("p", 2.0)?,
                params.get("sigma", 1.0)?,
                params.get("beta", 0.0)?,
                params.get("tau", 0.0)?,
                params.get("mu", 1.0)?,
            )?,
            _ => return Err(Error::Parse(format!("unknown coupling '{kind}'"))),
        };
        params.finish()?;
        Ok(c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn declared(&self) -> Option<&CouplingDecl> {
        self.decl.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.kind == CouplingKind::Zero
    }

    /// Radial weight and `s` dependence are separable with an r-independent part.
    pub fn depends_on_radius(&self) -> bool {
        match self.kind {
            CouplingKind::RadialLinear { tau } | CouplingKind::PowerPair { tau, .. } => tau != 0.0,
            _ => false,
        }
    }

    #[inline]
    pub fn eval(&self, r: f64, s: &[f64]) -> f64 {
        match &self.kind {
            CouplingKind::Zero => 0.0,
            CouplingKind::Product => s[0] * s[1],
            CouplingKind::NegProduct => -s[0] * s[1],
            CouplingKind::RadialLinear { tau } => (1.0 + r).powf(-tau) * s[0],
            CouplingKind::PowerPair { p, sigma, beta, tau, mu } => {
                let e = p + sigma;
                let mut sum: f64 = s.iter().map(|v| v.abs().powf(e)).sum();
                if *beta != 0.0 && s.len() > 1 {
                    let q = 0.5 * e;
                    let mut cross = 0.0;
                    for i in 0..s.len() {
                        for k in i + 1..s.len() {
                            cross += s[i].abs().powf(q) * s[k].abs().powf(q);
                        }
                    }
                    sum += 2.0 * beta * cross;
                }
                let weight = if *tau == 0.0 { 1.0 } else { (1.0 + r).powf(-tau) };
                weight * mu / e * sum
            }
        }
    }

    pub fn audit(&self) -> &Report {
        self.audit.get_or_init(|| audit_coupling(self, &Sampler::default()))
    }

    /// Fails unless the sampled supermodularity and radial cross conditions hold.
    pub fn require_cooperative(&self) -> Result<()> {
        let report = self.audit();
        for name in ["supermodularity", "radial_cross", "zero_at_origin"] {
            if report.check(name).and_then(|c| c.pass) != Some(true) {
                return Err(Error::Precondition(format!("coupling {} fails the {name} audit", self.name)));
            }
        }
        Ok(())
    }
}

/// Sampled audit of a coupling: `F(r, 0) = 0`, supermodularity, the radial
/// cross condition, `F(r, s) ≤ F(r, |s|)`, `F(r, λs) ≥ λ^α F(r, s)` and the
/// declared lower bound. Growth limits are reported as indicative trends.
pub fn audit_coupling(c: &Coupling, sampler: &Sampler) -> Report {
    let m = c.components();
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let n = sampler.random_points.max(1);
    let rmax = sampler.s_max;
    let draw = |rng: &mut ChaCha8Rng, max: f64| -> Vec<f64> { (0..m).map(|_| rng.gen::<f64>() * max).collect() };

    let mut origin = Worst::new();
    let zeros = vec![0.0; m];
    for i in 0..sampler.grid_points.max(2) {
        let r = rmax * i as f64 / (sampler.grid_points.max(2) - 1) as f64;
        let v = c.eval(r, &zeros);
        origin.le(v.abs(), 0.0, 0.0);
    }

    let mut supermod = Worst::new();
    let mut cross = Worst::new();
    let mut modulus = Worst::new();
    let mut homog = Worst::new();
    let alpha = c.declared().map(|d| d.alpha).unwrap_or(match c.kind {
        CouplingKind::Product | CouplingKind::NegProduct => 2.0,
        _ => 1.0,
    });
    for _ in 0..n {
        let r = rng.gen::<f64>() * rmax;
        let s = draw(&mut rng, sampler.s_max);
        let (hh, kk) = (rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 2.0);
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let mut sh = s.clone();
                sh[i] += hh;
                let mut sk = s.clone();
                sk[j] += kk;
                let mut shk = sh.clone();
                shk[j] += kk;
                let lhs = c.eval(r, &sh) + c.eval(r, &sk);
                let rhs = c.eval(r, &shk) + c.eval(r, &s);
                supermod.le(lhs, rhs, lhs.abs() + rhs.abs());
            }
        }
        let r0 = rng.gen::<f64>() * rmax;
        let r1 = r0 + rng.gen::<f64>() * rmax;
        if r1 > r0 && r0 > 0.0 {
            for i in 0..m {
                let mut sh = s.clone();
                sh[i] += hh;
                let lhs = c.eval(r1, &sh) + c.eval(r0, &s);
                let rhs = c.eval(r1, &s) + c.eval(r0, &sh);
                cross.le(lhs, rhs, lhs.abs() + rhs.abs());
            }
        }
        let signed: Vec<f64> = s.iter().map(|v| if rng.gen::<bool>() { -v } else { *v }).collect();
        let (a, b) = (c.eval(r, &signed), c.eval(r, &s));
        modulus.le(a, b, a.abs() + b.abs());
        let lam = 1.0 + 9.0 * rng.gen::<f64>();
        let scaled: Vec<f64> = s.iter().map(|v| lam * v).collect();
        let bound = lam.powf(alpha) * c.eval(r, &s);
        let got = c.eval(r, &scaled);
        homog.le(bound, got, bound.abs() + got.abs());
    }

    let mut report = Report::new(&format!("audit_coupling {}", c.name()));
    report.checks.push(origin.check("zero_at_origin"));
    let mut sm = supermod.check("supermodularity");
    if m < 2 {
        sm = Check::new("supermodularity", 0.0, AUDIT_TOL, 0).noted("vacuous for one component");
    }
    report.checks.push(sm);
    report.checks.push(cross.check("radial_cross"));
    report.checks.push(modulus.check("modulus"));
    report
        .checks
        .push(homog.check("alpha_superhomogeneity").noted(format!("alpha={alpha}")));

    if let Some(d) = c.declared() {
        let mut lower = Worst::new();
        for _ in 0..n {
            let r = d.r0 + rng.gen::<f64>() * rmax;
            let mut s = draw(&mut rng, 1.0);
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = d.delta * rng.gen::<f64>();
            if norm > 0.0 {
                s.iter_mut().for_each(|v| *v *= radius / norm);
            }
            let bound: f64 = (0..m)
                .map(|k| d.mu[k] * r.powf(-d.tau[k]) * s[k].powf(d.sigma[k] + d.p))
                .sum();
            let v = c.eval(r, &s);
            lower.le(bound, v, bound.abs() + v.abs());
            let inner = rng.gen::<f64>() * d.r0;
            let w = c.eval(inner, &s);
            lower.le(0.0, w, w);
        }
        report.checks.push(lower.check("lower_bound").noted(format!(
            "r0={} delta={} mu={:?} tau={:?} sigma={:?}",
            d.r0, d.delta, d.mu, d.tau, d.sigma
        )));
        let mut cond = Worst::new();
        for k in 0..m {
            let excess = sampler.dim as f64 * d.sigma[k] + d.p * d.tau[k] - d.p * d.p;
            cond.le(excess, 0.0, 0.0);
        }
        let mut cert = Check::new("certificate_exponents", cond.value, 0.0, cond.samples);
        cert.pass = Some(cond.value < 0.0);
        report.checks.push(cert.noted("N sigma_k + p tau_k - p^2 < 0"));
    }

    // growth trends along the diagonal s = (x, …, x)
    let p = c.declared().map(|d| d.p).unwrap_or(2.0);
    let crit = p + p * p / sampler.dim as f64;
    let diag = |x: f64| vec![x; m];
    let small: Vec<f64> = (1..=6)
        .map(|e| {
            let x = 10f64.powi(-e);
            c.eval(1.0, &diag(x)) / (m as f64 * x.powf(p))
        })
        .collect();
    let large: Vec<f64> = (1..=6)
        .map(|e| {
            let x = 10f64.powi(e);
            c.eval(1.0, &diag(x)) / (m as f64 * x.powf(crit))
        })
        .collect();
    let far: Vec<f64> = (1..=6)
        .map(|e| {
            let x = 10f64.powi(-e);
            let r = 10f64.powi(e);
            c.eval(r, &diag(x)) / (m as f64 * x.powf(p))
        })
        .collect();
    report.checks.push(Check::indicative(
        "growth_at_zero",
        *small.last().unwrap(),
        small.len(),
        "F/sum s^p along s -> 0; indicative only",
    ));
    report.checks.push(Check::indicative(
        "growth_at_infinity",
        *large.last().unwrap(),
        large.len(),
        "F/sum s^(p+p^2/N) along |s| -> inf; indicative only",
    ));
    report.checks.push(Check::indicative(
        "decay_far_field",
        *far.last().unwrap(),
        far.len(),
        "F/sum s^p as r -> inf and s -> 0; indicative only",
    ));
    report.series.insert("growth_at_zero".into(), small);
    report.series.insert("growth_at_infinity".into(), large);
    report.series.insert("decay_far_field".into(), far);
    report
}

/// `G(s) = c |s|^p`, p-homogeneous with `G(s) ≥ c |s|^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintDensity {
    pub c: f64,
    pub p: f64,
}

impl ConstraintDensity {
    pub fn power(c: f64, p: f64) -> Result<Self> {
        Ok(Self {
            c: positive("c", c)?,
            p: exponent(p)?,
        })
    }

    /// Parses `power:p=..[,c=..]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        if kind != "power" {
            return Err(Error::Parse(format!("unknown constraint '{kind}'")));
        }
        let params = Params::parse(rest)?;
        let g = Self::power(params.get("c", 1.0)?, params.get("p", 2.0)?)?;
        params.finish()?;
        Ok(g)
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.c * s.abs().powf(self.p)
    }

    pub fn gamma(&self) -> f64 {
        self.c
    }

    pub fn degree(&self) -> f64 {
        self.p
    }
}

pub(crate) fn j_raw(grid: &Grid, values: &[f64], j: &Integrand) -> Result<f64> {
    let terms: Vec<f64> = stencil_pairs(grid, values)
        .into_iter()
        .map(|(s, t)| j.eval(s, t))
        .collect();
    let total = pairwise_sum(&terms) * grid.cell_volume();
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("J accumulation with {}", j.name())));
    }
    Ok(total)
}

/// `Σ_i j(u_i, |∇u|_i) h^N` over the stencil, ghost layer included.
pub fn evaluate_j(u: &GridFunction, j: &Integrand) -> Result<f64> {
    j_raw(u.grid(), u.values(), j)
}

fn common_grid<'a>(grids: impl IntoIterator<Item = &'a Grid>, what: &str) -> Result<&'a Grid> {
    let mut it = grids.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidParameter(format!("{what}: no components")))?;
    if it.any(|g| !g.same_as(first)) {
        return Err(Error::GridMismatch(format!("{what}: components on different grids")));
    }
    Ok(first)
}

pub(crate) fn coupling_raw(grid: &Grid, comps: &[&[f64]], f: &Coupling) -> Result<f64> {
    if comps.len() != f.components() {
        return Err(Error::InvalidParameter(format!(
            "coupling {} takes {} components, got {}",
            f.name(),
            f.components(),
            comps.len()
        )));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let m = comps.len();
    let total = map_sum(grid.len(), |i| {
        let mut s = [0.0f64; 8];
        let mut heap;
        let s: &mut [f64] = if m <= 8 {
            &mut s[..m]
        } else {
            heap = vec![0.0; m];
            &mut heap
        };
        for (k, c) in comps.iter().enumerate() {
            s[k] = c[i];
        }
        f.eval(grid.radius(i), s)
    }) * grid.cell_volume();
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("coupling accumulation with {}", f.name())));
    }
    Ok(total)
}

/// `Σ_i F(|x_i|, u_1(x_i), …, u_m(x_i)) h^N`.
pub fn evaluate_coupling(u: &[GridFunction], f: &Coupling) -> Result<f64> {
    let grid = common_grid(u.iter().map(GridFunction::grid), "evaluate_coupling")?;
    let comps: Vec<&[f64]> = u.iter().map(GridFunction::values).collect();
    coupling_raw(grid, &comps, f)
}

pub(crate) fn constraint_raw(grid: &Grid, comps: &[&[f64]], g: &[ConstraintDensity]) -> Result<f64> {
    if comps.len() != g.len() {
        return Err(Error::InvalidParameter(format!(
            "{} constraint densities for {} components",
            g.len(),
            comps.len()
        )));
    }
    let per: Vec<f64> = comps
        .iter()
        .zip(g)
        .map(|(c, gk)| map_sum(c.len(), |i| gk.eval(c[i])))
        .collect();
    let total = pairwise_sum(&per) * grid.cell_volume();
    if !total.is_finite() {
        return Err(Error::NonFinite("constraint accumulation".into()));
    }
    Ok(total)
}

/// `Σ_k Σ_i G_k(u_k(x_i)) h^N`.
pub fn evaluate_constraint(u: &[GridFunction], g: &[ConstraintDensity]) -> Result<f64> {
    let grid = common_grid(u.iter().map(GridFunction::grid), "evaluate_constraint")?;
    let comps: Vec<&[f64]> = u.iter().map(GridFunction::values).collect();
    constraint_raw(grid, &comps, g)
}
