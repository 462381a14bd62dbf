//! Small numerical helpers: finite differences, BFGS, compass search, root
//! finding and pseudo-inverses.

use nalgebra::{DMatrix, DVector};
use roots::{find_root_brent, SimpleConvergency};

use crate::error::{Error, Result};

/// Central-difference step `eps^(1/3) max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient. Falls back to a one-sided difference where
/// one of the two evaluations is not finite.
pub fn gradient<F: Fn(&DVector<f64>) -> f64>(f: &F, x: &DVector<f64>, fx: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for j in 0..x.len() {
        let h = fd_step(x[j]);
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        g[j] = match (up.is_finite(), down.is_finite()) {
            (true, true) => (up - down) / (2.0 * h),
            (true, false) => (up - fx) / h,
            (false, true) => (fx - down) / h,
            (false, false) => f64::NAN,
        };
    }
    g
}

/// Finite-difference Hessian with step `eps^(1/4) max(1, |x|)`.
pub fn hessian<F: Fn(&DVector<f64>) -> f64>(f: &F, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| f64::EPSILON.powf(0.25) * v.abs().max(1.0)).collect();
    let f0 = f(x);
    let mut out = DMatrix::zeros(n, n);
    let mut p = x.clone();
    for i in 0..n {
        p[i] = x[i] + h[i];
        let up = f(&p);
        p[i] = x[i] - h[i];
        let down = f(&p);
        p[i] = x[i];
        out[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut at = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence when the sup-norm of the gradient falls below this.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub grad: DVector<f64>,
    pub inv_hessian: DMatrix<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub message: String,
}

/// Minimizes `f` by BFGS with a backtracking Armijo line search. Non-finite
/// values of `f` mark infeasible points and are backtracked away from.
pub fn bfgs_minimize<F: Fn(&DVector<f64>) -> f64>(f: F, x0: DVector<f64>, opts: BfgsOptions) -> BfgsResult {
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let f = |x: &DVector<f64>| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let mut x = x0;
    let mut fx = f(&x);
    let mut h = DMatrix::<f64>::identity(n, n);
    let finish = |x, fx, g, h, it, ok: bool, msg: &str| BfgsResult {
        x,
        f: fx,
        grad: g,
        inv_hessian: h,
        iterations: it,
        evaluations: evals.get(),
        converged: ok,
        message: msg.to_string(),
    };
    if !fx.is_finite() {
        return finish(x, fx, DVector::from_element(n, f64::NAN), h, 0, false, "infeasible start");
    }
    let mut g = gradient(&f, &x, fx);
    let mut first = true;
    let mut resets = 0;
    for it in 0..opts.max_iter {
        if g.iter().any(|v| !v.is_finite()) {
            return finish(x, fx, g, h, it, false, "non-finite gradient");
        }
        if g.amax() < opts.grad_tol {
            return finish(x, fx, g, h, it, true, "gradient below tolerance");
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + alpha * &d;
            let fn_ = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * alpha * slope {
                accepted = Some((xn, fn_));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if resets < 2 && !first {
                resets += 1;
                h = DMatrix::identity(n, n);
                first = true;
                continue;
            }
            return finish(x, fx, g, h, it, false, "line search failed");
        };
        let gn = gradient(&f, &xn, fn_);
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                h *= sy / y.dot(&y);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (rho * rho * yhy + rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        let stalled = (fx - fn_).abs() <= 1e-15 * fx.abs().max(1.0) && s.amax() < 1e-12;
        x = xn;
        fx = fn_;
        g = gn;
        if stalled {
            let ok = g.amax() < opts.grad_tol;
            return finish(x, fx, g, h, it + 1, ok, "no further progress");
        }
    }
    let ok = g.amax() < opts.grad_tol;
    finish(x, fx, g, h, opts.max_iter, ok, "iteration limit")
}

/// Derivative-free coordinate polish inside `[lower, upper]`: tries `+-step`
/// along each axis, halving the step when no move improves.
pub fn compass_search<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    x0: DVector<f64>,
    mut step: f64,
    min_step: f64,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> (DVector<f64>, f64) {
    let mut x = x0;
    let mut fx = f(&x);
    while step >= min_step {
        let mut improved = false;
        for j in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut p = x.clone();
                p[j] = (p[j] + dir * step).clamp(lower[j], upper[j]);
                if p[j] == x[j] {
                    continue;
                }
                let fp = f(&p);
                if fp < fx {
                    x = p;
                    fx = fp;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Brent's method on a sign-changing bracket.
pub fn brent_root<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut conv = SimpleConvergency { eps: tol, max_iter: 200 };
    find_root_brent(a, b, f, &mut conv).map_err(|e| Error::NoRoot(format!("{e:?} on [{a}, {b}]")))
}

/// Moore-Penrose inverse of a symmetric matrix and its numerical rank, with
/// eigenvalues below `rel_tol * max|eig|` treated as zero.
pub fn pinv_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let n = m.nrows();
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if top > 0.0 && lam.abs() > rel_tol * top {
            let v = eig.eigenvectors.column(k);
            inv += (v * v.transpose()) / lam;
            rank += 1;
        }
    }
    (inv, rank)
}
