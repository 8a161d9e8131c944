//! Finite-difference Poisson solver with pinned (Dirichlet) nodes.
//!
//! The (2d+1)-point Laplacian is assembled in weighted symmetric form: with
//! trapezoid node weights `W` the system is `A u = W f`, where `A` is the edge
//! Laplacian whose edge conductances carry the transverse trapezoid weights.
//! In the interior this is the textbook stencil `-Δ_h u = f`; on Neumann faces
//! it coincides with ghost-node reflection. Because `uᵀ A u = Σ_e κ_e (Δ_e u)²`
//! and `uᵀ W f` is the compliance quadrature, the discrete energy identity
//! holds up to the solver residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::domain::OuterBoundary;
use crate::pde::field::ScalarField;
use crate::pde::grid::Grid;
use crate::pde::mask::ObstacleMask;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Direct tridiagonal elimination in one dimension, PCG otherwise.
    #[default]
    Auto,
    /// Jacobi-preconditioned conjugate gradient.
    Cg,
    /// Tridiagonal elimination; one dimension only.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SolveOptions<T> {
    /// Relative residual target `‖b − A u‖ ≤ tol·‖b‖`.
    pub tol: T,
    /// Iteration cap; defaults to `50·√(free nodes)`.
    pub max_iterations: Option<usize>,
    pub method: LinearSolver,
    /// Accept sources with negative values (disables max-principle checks).
    pub allow_negative_source: bool,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-8).max(T::epsilon() * T::lit(64.0)),
            max_iterations: None,
            method: LinearSolver::Auto,
            allow_negative_source: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSolution<T> {
    pub u: ScalarField<T>,
    /// Final relative residual of the weighted system.
    pub residual: T,
    pub iterations: usize,
    pub method: LinearSolver,
}

/// Matrix-free weighted Laplacian restricted to free nodes.
pub(crate) struct Operator<'a, T> {
    nodes: [usize; 3],
    inv_h: [T; 3],
    cw: [Vec<T>; 3],
    pinned: &'a [bool],
    diag: Vec<T>,
}

impl<'a, T: Real> Operator<'a, T> {
    pub(crate) fn new(grid: &Grid<T>, mask: &'a ObstacleMask) -> Self {
        let nodes = grid.nodes();
        let mut inv_h = [T::zero(); 3];
        for (a, h) in grid.spacing().iter().enumerate() {
            inv_h[a] = h.recip();
        }
        let cw = grid.axis_weights();
        let mut op = Self {
            nodes,
            inv_h,
            cw,
            pinned: mask.pinned(),
            diag: Vec::new(),
        };
        op.diag = op.assemble_diag();
        op
    }

    #[inline]
    fn conductances(&self, m: [usize; 3]) -> [T; 3] {
        let w0 = self.cw[0][m[0]];
        let w1 = self.cw[1][m[1]];
        let w2 = self.cw[2][m[2]];
        [
            w1 * w2 * self.inv_h[0],
            w0 * w2 * self.inv_h[1],
            w0 * w1 * self.inv_h[2],
        ]
    }

    #[inline]
    pub(crate) fn weight(&self, m: [usize; 3]) -> T {
        self.cw[0][m[0]] * self.cw[1][m[1]] * self.cw[2][m[2]]
    }

    fn assemble_diag(&self) -> Vec<T> {
        let [n0, n1, n2] = self.nodes;
        let mut diag = vec![T::zero(); n0 * n1 * n2];
        let mut idx = 0;
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    if !self.pinned[idx] {
                        let m = [i, j, k];
                        let kap = self.conductances(m);
                        let mut acc = T::zero();
                        for a in 0..3 {
                            let links = (m[a] > 0) as usize + (m[a] + 1 < self.nodes[a]) as usize;
                            acc = acc + kap[a] * T::from_usize_lossy(links);
                        }
                        diag[idx] = acc;
                    }
                    idx += 1;
                }
            }
        }
        diag
    }

    /// `y = A x` on free nodes, zero on pinned nodes. Requires `x = 0` on pinned nodes.
    pub(crate) fn apply(&self, x: &[T], y: &mut [T]) {
        let [n0, n1, n2] = self.nodes;
        let s1 = n0;
        let s2 = n0 * n1;
        let cw0 = &self.cw[0];
        for k in 0..n2 {
            let w2 = self.cw[2][k];
            for j in 0..n1 {
                let w1 = self.cw[1][j];
                let kx = w1 * w2 * self.inv_h[0];
                let base = j * s1 + k * s2;
                #[allow(clippy::needless_range_loop)]
                for i in 0..n0 {
                    let idx = base + i;
                    if self.pinned[idx] {
                        y[idx] = T::zero();
                        continue;
                    }
                    let xi = x[idx];
                    let mut acc = T::zero();
                    if i > 0 {
                        acc = acc + kx * (xi - x[idx - 1]);
                    }
                    if i + 1 < n0 {
                        acc = acc + kx * (xi - x[idx + 1]);
                    }
                    if n1 > 1 {
                        let ky = cw0[i] * w2 * self.inv_h[1];
                        if j > 0 {
                            acc = acc + ky * (xi - x[idx - s1]);
                        }
                        if j + 1 < n1 {
                            acc = acc + ky * (xi - x[idx + s1]);
                        }
                    }
                    if n2 > 1 {
                        let kz = cw0[i] * w1 * self.inv_h[2];
                        if k > 0 {
                            acc = acc + kz * (xi - x[idx - s2]);
                        }
                        if k + 1 < n2 {
                            acc = acc + kz * (xi - x[idx + s2]);
                        }
                    }
                    y[idx] = acc;
                }
            }
        }
    }

    /// Sum of `κ_e (u_i − u_j)²` over all grid edges.
    pub(crate) fn energy(&self, u: &[T]) -> T {
        let [n0, n1, n2] = self.nodes;
        let strides = [1, n0, n0 * n1];
        let mut acc = T::zero();
        let mut idx = 0;
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    let m = [i, j, k];
                    let kap = self.conductances(m);
                    for a in 0..3 {
                        if m[a] + 1 < self.nodes[a] {
                            let du = u[idx + strides[a]] - u[idx];
                            acc = acc + kap[a] * du * du;
                        }
                    }
                    idx += 1;
                }
            }
        }
        acc
    }

    fn rhs(&self, f: &[T]) -> Vec<T> {
        let [n0, n1, n2] = self.nodes;
        let mut b = vec![T::zero(); f.len()];
        let mut idx = 0;
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    if !self.pinned[idx] {
                        b[idx] = self.weight([i, j, k]) * f[idx];
                    }
                    idx += 1;
                }
            }
        }
        b
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves `−Δu = f` on free nodes with `u = 0` on pinned nodes.
///
/// Neumann outer faces use ghost-node reflection and need at least one
/// pinned node. The source must be nonnegative unless
/// [`SolveOptions::allow_negative_source`] is set.
pub fn solve_poisson<T: Real>(
    mask: &ObstacleMask,
    f: &ScalarField<T>,
    opts: &SolveOptions<T>,
) -> Result<PoissonSolution<T>> {
    let grid = f.grid();
    mask.check_grid(grid)?;
    if !(opts.tol.is_finite() && opts.tol > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if !opts.allow_negative_source {
        if let Some(i) = f.values().iter().position(|&v| v < T::zero()) {
            return Err(Error::InvalidInput(format!(
                "source is negative at node {i}; set allow_negative_source to override"
            )));
        }
    }
    if grid.domain().outer() == OuterBoundary::Neumann && mask.pinned_count() == 0 {
        return Err(Error::Singular("Neumann outer boundary with no pinned node".into()));
    }
    let method = match opts.method {
        LinearSolver::Auto if grid.dim() == 1 => LinearSolver::Direct,
        LinearSolver::Auto => LinearSolver::Cg,
        LinearSolver::Direct if grid.dim() != 1 => {
            return Err(Error::InvalidInput("direct solver is one-dimensional only".into()))
        }
        m => m,
    };

    let op = Operator::new(grid, mask);
    let b = op.rhs(f.values());
    let bnorm = norm(&b);
    if bnorm == T::zero() {
        return Ok(PoissonSolution {
            u: ScalarField::zeros(grid.clone()),
            residual: T::zero(),
            iterations: 0,
            method,
        });
    }

    let (u, iterations) = match method {
        LinearSolver::Direct => (tridiagonal(&op, &b), 1),
        _ => {
            let cap = opts.max_iterations.unwrap_or_else(|| {
                let free = mask.free_count() as f64;
                ((50.0 * free.sqrt()).ceil() as usize).max(10)
            });
            pcg(&op, &b, opts.tol, cap)?
        }
    };

    let mut ax = vec![T::zero(); u.len()];
    op.apply(&u, &mut ax);
    let res = b
        .iter()
        .zip(&ax)
        .map(|(&bi, &ai)| (bi - ai) * (bi - ai))
        .sum::<T>()
        .sqrt()
        / bnorm;
    Ok(PoissonSolution {
        u: ScalarField::new(grid.clone(), u)?,
        residual: res,
        iterations,
        method,
    })
}

fn pcg<T: Real>(op: &Operator<'_, T>, b: &[T], tol: T, cap: usize) -> Result<(Vec<T>, usize)> {
    let n = b.len();
    let inv_diag: Vec<T> = op
        .diag
        .iter()
        .map(|&d| if d > T::zero() { d.recip() } else { T::zero() })
        .collect();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let bnorm = norm(b);
    let target = tol * bnorm;
    let mut rnorm = bnorm;

    for it in 1..=cap {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Singular(format!(
                "operator not positive definite (pᵀAp = {pap})"
            )));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] = x[i] + step * p[i];
            r[i] = r[i] - step * ap[i];
        }
        rnorm = norm(&r);
        if rnorm <= target {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        iterations: cap,
        residual: (rnorm / bnorm).as_f64(),
    })
}

/// Thomas elimination of the one-dimensional system; pinned rows are identity rows.
fn tridiagonal<T: Real>(op: &Operator<'_, T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let kap = op.cw[1][0] * op.cw[2][0] * op.inv_h[0];
    let free = |i: usize| !op.pinned[i];
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    for i in 0..n {
        let (lower, diag, upper, rhs) = if free(i) {
            let lower = if i > 0 && free(i - 1) { -kap } else { T::zero() };
            let upper = if i + 1 < n && free(i + 1) { -kap } else { T::zero() };
            (lower, op.diag[i], upper, b[i])
        } else {
            (T::zero(), T::one(), T::zero(), T::zero())
        };
        let (c_prev, d_prev) = if i > 0 {
            (cp[i - 1], dp[i - 1])
        } else {
            (T::zero(), T::zero())
        };
        let m = diag - lower * c_prev;
        cp[i] = upper / m;
        dp[i] = (rhs - lower * d_prev) / m;
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let next = if i + 1 < n { x[i + 1] } else { T::zero() };
        x[i] = dp[i] - cp[i] * next;
    }
    for (xi, &p) in x.iter_mut().zip(op.pinned) {
        if p {
            *xi = T::zero();
        }
    }
    x
}
