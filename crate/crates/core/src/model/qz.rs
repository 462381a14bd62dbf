//! Complex generalized Schur (QZ) decomposition with eigenvalue reordering.
//!
//! For real square `A`, `B` this computes unitary `Q`, `Z` and upper
//! triangular `S`, `T` with `A = Q S Z^H` and `B = Q T Z^H`. The generalized
//! eigenvalues of the pencil are the pairs `(s_ii, t_ii)`; a pair with
//! `s_ii = 0` is an infinite root of `B - mu A`.
//!
//! The iteration is the single-shift complex QZ of Moler and Stewart. Before
//! iterating, the pair is replaced by `(B, A + c B)` for a scalar `c` chosen
//! so that `A + c B` is well conditioned. Both pencils share their Schur
//! vectors, and the triangular factor stays nonsingular, so infinite roots
//! never have to be deflated explicitly.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const MAX_SWEEPS_PER_ROOT: usize = 60;

/// Result of [`generalized_schur`].
#[derive(Debug, Clone)]
pub struct GeneralizedSchur {
    pub s: DMatrix<C>,
    pub t: DMatrix<C>,
    pub q: DMatrix<C>,
    pub z: DMatrix<C>,
}

impl GeneralizedSchur {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Diagonal pairs `(s_ii, t_ii)`.
    pub fn pairs(&self) -> Vec<(C, C)> {
        (0..self.dim()).map(|i| (self.s[(i, i)], self.t[(i, i)])).collect()
    }

    /// Moves every diagonal pair satisfying `select` to the leading block,
    /// preserving relative order within each group. Returns the number of
    /// selected pairs.
    pub fn reorder(&mut self, select: impl Fn(C, C) -> bool) -> usize {
        let n = self.dim();
        let mut placed = 0;
        for k in 0..n {
            if !select(self.s[(k, k)], self.t[(k, k)]) {
                continue;
            }
            let mut pos = k;
            while pos > placed {
                self.swap_adjacent(pos - 1);
                pos -= 1;
            }
            placed += 1;
        }
        placed
    }

    /// Exchanges the diagonal pairs at positions `k` and `k + 1`.
    fn swap_adjacent(&mut self, k: usize) {
        let (s11, s12, s22) = (self.s[(k, k)], self.s[(k, k + 1)], self.s[(k + 1, k + 1)]);
        let (t11, t12, t22) = (self.t[(k, k)], self.t[(k, k + 1)], self.t[(k + 1, k + 1)]);
        // Row vector of t22*S - s22*T; its null vector spans the eigenvector
        // of the trailing pair.
        let m0 = t22 * s11 - s22 * t11;
        let m1 = t22 * s12 - s22 * t12;
        let Some(rot) = ColRotation::annihilating(m0, m1) else {
            return;
        };
        rot.apply(&mut self.s, k);
        rot.apply(&mut self.t, k);
        rot.apply(&mut self.z, k);

        let use_s = self.s[(k, k)].norm() + self.s[(k + 1, k)].norm()
            >= self.t[(k, k)].norm() + self.t[(k + 1, k)].norm();
        let (f, g) = if use_s {
            (self.s[(k, k)], self.s[(k + 1, k)])
        } else {
            (self.t[(k, k)], self.t[(k + 1, k)])
        };
        let rot = RowRotation::new(f, g);
        rot.apply(&mut self.s, k);
        rot.apply(&mut self.t, k);
        rot.accumulate(&mut self.q, k);
        self.s[(k + 1, k)] = ZERO;
        self.t[(k + 1, k)] = ZERO;
    }
}

/// Left plane rotation `G = [c s; -conj(s) c]` on rows `(k, k+1)`.
#[derive(Debug, Clone, Copy)]
struct RowRotation {
    c: f64,
    s: C,
}

impl RowRotation {
    /// Rotation mapping `(f, g)` to `(r, 0)`.
    fn new(f: C, g: C) -> Self {
        let gn = g.norm();
        if gn == 0.0 {
            return Self { c: 1.0, s: ZERO };
        }
        let fn_ = f.norm();
        if fn_ == 0.0 {
            return Self { c: 0.0, s: g.conj() / gn };
        }
        let n = fn_.hypot(gn);
        Self {
            c: fn_ / n,
            s: (f / fn_) * g.conj() / n,
        }
    }

    fn apply(&self, m: &mut DMatrix<C>, k: usize) {
        for col in 0..m.ncols() {
            let a = m[(k, col)];
            let b = m[(k + 1, col)];
            m[(k, col)] = a * self.c + self.s * b;
            m[(k + 1, col)] = -self.s.conj() * a + b * self.c;
        }
    }

    /// `Q <- Q G^H`.
    fn accumulate(&self, q: &mut DMatrix<C>, k: usize) {
        for row in 0..q.nrows() {
            let a = q[(row, k)];
            let b = q[(row, k + 1)];
            q[(row, k)] = a * self.c + b * self.s.conj();
            q[(row, k + 1)] = -a * self.s + b * self.c;
        }
    }
}

/// Right rotation on columns `(k, k+1)` that sends a row `(x, y)` to `(0, r)`.
#[derive(Debug, Clone, Copy)]
struct ColRotation {
    // R = [[p, q], [-x/n, conj(y)/n]] with p = y/n, q = conj(x)/n
    x: C,
    y: C,
}

impl ColRotation {
    fn annihilating(x: C, y: C) -> Option<Self> {
        let n = x.norm().hypot(y.norm());
        if n == 0.0 {
            return None;
        }
        Some(Self { x: x / n, y: y / n })
    }

    fn apply(&self, m: &mut DMatrix<C>, k: usize) {
        for row in 0..m.nrows() {
            let a = m[(row, k)];
            let b = m[(row, k + 1)];
            m[(row, k)] = a * self.y - b * self.x;
            m[(row, k + 1)] = a * self.x.conj() + b * self.y.conj();
        }
    }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C> {
    m.map(|v| C::new(v, 0.0))
}

/// Picks `c` such that `A + c B` is far from singular.
fn conditioning_shift(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    const CANDIDATES: [f64; 8] = [0.0, 0.543_689, -1.271_8, 1.913_3, -0.301_1, 3.109_7, -2.718_3, 0.127_3];
    let mut best = (0.0, -1.0);
    for &c in &CANDIDATES {
        let m = a + b * c;
        let scale = m.norm().max(f64::MIN_POSITIVE);
        let r = m.qr().r();
        let min_diag = (0..r.nrows()).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        let score = min_diag / scale;
        if score > best.1 {
            best = (c, score);
        }
        if score > 1e-3 {
            break;
        }
    }
    if best.1 < 1e-13 {
        return Err(Error::Singular("matrix pencil is singular (det(A + cB) = 0 for all trial c)".into()));
    }
    Ok(best.0)
}

/// Computes the generalized Schur form of the real pencil `(A, B)`.
pub fn generalized_schur(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GeneralizedSchur> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Domain("QZ needs two square matrices of equal size".into()));
    }
    let shift = conditioning_shift(a, b)?;
    let mut h = to_complex(b);
    let mut t = to_complex(&(a + b * shift));
    let mut q = DMatrix::<C>::identity(n, n);
    let mut z = DMatrix::<C>::identity(n, n);

    triangularize(&mut h, &mut t, &mut q);
    hessenberg_triangular(&mut h, &mut t, &mut q, &mut z);
    qz_iterate(&mut h, &mut t, &mut q, &mut z)?;

    // Undo the shift: A = (A + cB) - cB.
    let s = &t - &h * C::new(shift, 0.0);
    let mut out = GeneralizedSchur { s, t: h, q, z };
    for i in 0..n {
        for j in 0..i {
            out.s[(i, j)] = ZERO;
            out.t[(i, j)] = ZERO;
        }
    }
    Ok(out)
}

/// Givens QR of `t`, applying the same row rotations to `h`.
fn triangularize(h: &mut DMatrix<C>, t: &mut DMatrix<C>, q: &mut DMatrix<C>) {
    let n = t.nrows();
    for col in 0..n {
        for row in ((col + 1)..n).rev() {
            if t[(row, col)] == ZERO {
                continue;
            }
            let rot = RowRotation::new(t[(row - 1, col)], t[(row, col)]);
            rot.apply(t, row - 1);
            rot.apply(h, row - 1);
            rot.accumulate(q, row - 1);
            t[(row, col)] = ZERO;
        }
    }
}

/// Reduces `h` to upper Hessenberg form while keeping `t` triangular.
fn hessenberg_triangular(h: &mut DMatrix<C>, t: &mut DMatrix<C>, q: &mut DMatrix<C>, z: &mut DMatrix<C>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for col in 0..(n - 2) {
        for row in ((col + 2)..n).rev() {
            if h[(row, col)] == ZERO {
                continue;
            }
            let rot = RowRotation::new(h[(row - 1, col)], h[(row, col)]);
            rot.apply(h, row - 1);
            rot.apply(t, row - 1);
            rot.accumulate(q, row - 1);
            h[(row, col)] = ZERO;

            if let Some(cr) = ColRotation::annihilating(t[(row, row - 1)], t[(row, row)]) {
                cr.apply(h, row - 1);
                cr.apply(t, row - 1);
                cr.apply(z, row - 1);
            }
            t[(row, row - 1)] = ZERO;
        }
    }
}

/// Eigenvalue of the trailing 2x2 pencil closest to `h22/t22`.
fn wilkinson_shift(h: &DMatrix<C>, t: &DMatrix<C>, k: usize) -> C {
    let (h11, h12, h21, h22) = (h[(k, k)], h[(k, k + 1)], h[(k + 1, k)], h[(k + 1, k + 1)]);
    let (t11, t12, t22) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k + 1)]);
    let qa = t11 * t22;
    let qb = -(h11 * t22 + h22 * t11 - t12 * h21);
    let qc = h11 * h22 - h12 * h21;
    let target = h22 / t22;
    let disc = (qb * qb - qa * qc * 4.0).sqrt();
    let r1 = (-qb + disc) / (qa * 2.0);
    let r2 = (-qb - disc) / (qa * 2.0);
    let pick = if (r1 - target).norm() <= (r2 - target).norm() { r1 } else { r2 };
    if pick.is_finite() {
        pick
    } else {
        target
    }
}

fn qz_iterate(h: &mut DMatrix<C>, t: &mut DMatrix<C>, q: &mut DMatrix<C>, z: &mut DMatrix<C>) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let h_norm = h.norm().max(f64::MIN_POSITIVE);
    let mut ihi = n - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;

    while ihi > 0 {
        // Locate the top of the active unreduced block.
        let mut lo = ihi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let scale = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if scale == 0.0 { h_norm } else { scale };
            if sub <= f64::EPSILON * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == ihi {
            ihi -= 1;
            sweeps = 0;
            continue;
        }

        sweeps += 1;
        total += 1;
        if total > MAX_SWEEPS_PER_ROOT * n {
            return Err(Error::NoConvergence("QZ iteration did not converge".into()));
        }

        let shift = if sweeps % 11 == 10 {
            // Exceptional shift to break cycles.
            let tt = t[(ihi, ihi)];
            h[(ihi, ihi)] / tt + h[(ihi, ihi - 1)].norm() / tt.norm().max(f64::MIN_POSITIVE) * 1.5
        } else {
            wilkinson_shift(h, t, ihi - 1)
        };

        let mut f = h[(lo, lo)] - shift * t[(lo, lo)];
        let mut g = h[(lo + 1, lo)];
        for k in lo..ihi {
            let rot = RowRotation::new(f, g);
            rot.apply(h, k);
            rot.apply(t, k);
            rot.accumulate(q, k);
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            if let Some(cr) = ColRotation::annihilating(t[(k + 1, k)], t[(k + 1, k + 1)]) {
                cr.apply(h, k);
                cr.apply(t, k);
                cr.apply(z, k);
            }
            t[(k + 1, k)] = ZERO;
            if k + 1 < ihi {
                f = h[(k + 1, k)];
                g = h[(k + 2, k)];
            }
        }
    }
    Ok(())
}
