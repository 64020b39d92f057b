//! ADAM settings and a BFGS minimizer with a strong-Wolfe line search.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// A smooth function with gradient, as seen by [`bfgs`].
pub trait Objective {
    fn nu(&self) -> usize;
    fn value_grad(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_epochs: usize,
    /// Stage 1 stops once the epoch-mean loss improved by less than
    /// `plateau_tol` (relative) over the last `plateau_window` epochs.
    pub plateau_window: usize,
    pub plateau_tol: f64,
    /// Optional hard cap on mini-batch steps; `0` means none.
    pub max_steps: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_epochs: 200,
            plateau_window: 10,
            plateau_tol: 1e-3,
            max_steps: 0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.eps > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            bail!(Domain, "invalid ADAM settings {:?}", self);
        }
        if self.plateau_window == 0 || !(self.plateau_tol > 0.0) {
            bail!(Domain, "plateau window and tolerance must be positive");
        }
        Ok(())
    }
}

/// Moment estimates of one ADAM run.
#[derive(Clone, Debug)]
pub(crate) struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub(crate) fn new(cfg: AdamConfig, nu: usize) -> Self {
        Self { cfg, m: vec![0.0; nu], v: vec![0.0; nu], t: 0 }
    }

    pub(crate) fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - libm::pow(c.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(c.beta2, self.t as f64);
        for i in 0..theta.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            theta[i] -= c.learning_rate * mh / (libm::sqrt(vh) + c.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsConfig {
    pub c1: f64,
    pub c2: f64,
    pub grad_tol: f64,
    pub max_iterations: usize,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
    /// An accepted step is refined by cubic interpolation while
    /// `|φ'(α)| > line_slope_tol · |φ'(0)|`. Small values approach an exact
    /// line search, at one extra evaluation per iteration.
    pub line_slope_tol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 0.9, grad_tol: 1e-7, max_iterations: 200, max_line_search: 30, line_slope_tol: 1e-3 }
    }
}

impl BfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            bail!(Domain, "line-search constants must satisfy 0 < c1 < c2 < 1");
        }
        if !(self.grad_tol > 0.0) || self.max_line_search == 0 || !(self.line_slope_tol > 0.0) {
            bail!(Domain, "invalid BFGS settings {:?}", self);
        }
        Ok(())
    }
}

/// One accepted BFGS iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct BfgsStep {
    pub loss: f64,
    pub grad_norm: f64,
    /// The step came from the steepest-descent fallback.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsOutcome {
    pub theta: Vec<f64>,
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub steps: Vec<BfgsStep>,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

/// Minimizer of the cubic matching `(a, fa, da)` and `(b, fb, db)`, if any.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = libm::copysign(libm::sqrt(disc), b - a);
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let x = b - (b - a) * (db + d2 - d1) / denom;
    x.is_finite().then_some(x)
}

struct Point {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    d: f64,
}

struct LineSearch<'a, O: Objective + ?Sized> {
    obj: &'a mut O,
    x: &'a [f64],
    p: &'a [f64],
    f0: f64,
    d0: f64,
    cfg: &'a BfgsConfig,
    evals: usize,
}

impl<O: Objective + ?Sized> LineSearch<'_, O> {
    fn eval(&mut self, alpha: f64) -> Result<Point> {
        self.evals += 1;
        let (f, g) = self.obj.value_grad(&axpy(self.x, alpha, self.p))?;
        if !f.is_finite() {
            bail!(Numeric, "objective is not finite");
        }
        let d = dot(&g, self.p);
        Ok(Point { alpha, f, g, d })
    }

    fn armijo(&self, pt: &Point) -> bool {
        pt.f <= self.f0 + self.cfg.c1 * pt.alpha * self.d0
    }

    fn curvature(&self, pt: &Point) -> bool {
        pt.d.abs() <= -self.cfg.c2 * self.d0
    }

    fn run(&mut self, alpha0: f64) -> Result<Option<Point>> {
        let mut prev = Point { alpha: 0.0, f: self.f0, g: Vec::new(), d: self.d0 };
        let mut alpha = alpha0;
        for i in 0..self.cfg.max_line_search {
            let pt = self.eval(alpha)?;
            if !self.armijo(&pt) || (i > 0 && pt.f >= prev.f) {
                return self.zoom(prev, pt);
            }
            if self.curvature(&pt) {
                return Ok(Some(pt));
            }
            if pt.d >= 0.0 {
                return self.zoom(pt, prev);
            }
            alpha = 2.0 * pt.alpha;
            prev = pt;
        }
        Ok(None)
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Result<Option<Point>> {
        while self.evals < self.cfg.max_line_search {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= 1e-14 * b.max(1e-300) {
                return Ok(None);
            }
            let guess = cubic_min(lo.alpha, lo.f, lo.d, hi.alpha, hi.f, hi.d).unwrap_or(0.5 * (a + b));
            let alpha = guess.clamp(a + 0.1 * width, b - 0.1 * width);
            let pt = self.eval(alpha)?;
            if !self.armijo(&pt) || pt.f >= lo.f {
                hi = pt;
            } else {
                if self.curvature(&pt) {
                    return Ok(Some(pt));
                }
                if pt.d * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = pt;
            }
        }
        Ok(None)
    }

    /// One interpolation step from a Wolfe point towards the line minimum.
    ///
    /// The cubic through `(0, f0, d0)` and the accepted point is exact for
    /// quadratic objectives, which makes the line search exact there.
    fn refine(&mut self, pt: Point) -> Result<Point> {
        if pt.d.abs() <= self.cfg.line_slope_tol * self.d0.abs() || self.evals >= self.cfg.max_line_search {
            return Ok(pt);
        }
        let Some(alpha) = cubic_min(0.0, self.f0, self.d0, pt.alpha, pt.f, pt.d) else {
            return Ok(pt);
        };
        if !(alpha > 0.0) {
            return Ok(pt);
        }
        let cand = self.eval(alpha)?;
        if cand.f < pt.f && self.armijo(&cand) && self.curvature(&cand) {
            Ok(cand)
        } else {
            Ok(pt)
        }
    }
}

/// Backtracking along `−g` until the Armijo condition holds.
fn steepest_descent<O: Objective + ?Sized>(obj: &mut O, x: &[f64], f: f64, g: &[f64], cfg: &BfgsConfig, evals: &mut usize) -> Result<Option<Point>> {
    let gn = norm(g);
    let p: Vec<f64> = g.iter().map(|v| -v / gn).collect();
    let d0 = -gn;
    let mut alpha = 1.0;
    for _ in 0..60 {
        *evals += 1;
        let (fa, ga) = obj.value_grad(&axpy(x, alpha, &p))?;
        if !fa.is_finite() {
            bail!(Numeric, "objective is not finite");
        }
        if fa <= f + cfg.c1 * alpha * d0 {
            // Express the step in units of −g for the caller.
            return Ok(Some(Point { alpha: alpha / gn, f: fa, d: dot(&ga, &p), g: ga }));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

/// Quasi-Newton minimization with inverse-Hessian updates.
///
/// `on_step` sees every accepted iterate.
pub fn bfgs<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], cfg: &BfgsConfig, mut on_step: impl FnMut(&[f64], &BfgsStep)) -> Result<BfgsOutcome> {
    cfg.validate()?;
    let nu = obj.nu();
    if x0.len() != nu {
        bail!(Dimension, "start point has {} entries, objective {}", x0.len(), nu);
    }
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.value_grad(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        bail!(Numeric, "objective is not finite at the start point");
    }
    let mut evals = 1;
    let mut h = identity(nu);
    let mut fresh = true;
    let mut steps = Vec::new();
    let mut converged = norm(&g) <= cfg.grad_tol;
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iterations {
        let mut p: Vec<f64> = (0..nu).map(|i| -dot(&h[i], &g)).collect();
        if dot(&p, &g) >= 0.0 {
            h = identity(nu);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
        }
        let d0 = dot(&p, &g);
        let alpha0 = if fresh { (1.0 / norm(&p)).min(1.0) } else { 1.0 };
        let mut ls = LineSearch { obj: &mut *obj, x: &x, p: &p, f0: f, d0, cfg, evals: 0 };
        let found = match ls.run(alpha0)? {
            Some(pt) => Some(ls.refine(pt)?),
            None => None,
        };
        evals += ls.evals;
        let (pt, dir, fallback) = match found {
            Some(pt) => (pt, p, false),
            None => {
                h = identity(nu);
                fresh = true;
                match steepest_descent(obj, &x, f, &g, cfg, &mut evals)? {
                    Some(pt) => (pt, g.iter().map(|v| -v).collect(), true),
                    None => break,
                }
            }
        };
        let s: Vec<f64> = dir.iter().map(|v| pt.alpha * v).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if fresh {
                let scale = sy / dot(&y, &y);
                h = identity(nu);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
            }
            update_inverse_hessian(&mut h, &s, &y, sy);
            fresh = false;
        }
        x = axpy(&x, 1.0, &s);
        f = pt.f;
        g = pt.g;
        iterations += 1;
        let step = BfgsStep { loss: f, grad_norm: norm(&g), fallback };
        on_step(&x, &step);
        steps.push(step);
        converged = norm(&g) <= cfg.grad_tol;
    }
    Ok(BfgsOutcome { theta: x, loss: f, gradient: g, iterations, converged, steps, evaluations: evals })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`, `ρ = 1/(yᵀs)`.
fn update_inverse_hessian(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
