//! Log-barrier interior-point solver for the linearized max-min-distance
//! subproblem: maximize tau over (a, tau) subject to the linearized pair
//! constraints, per-column convex power constraints, and box bounds.
//!
//! Dimensions here are tiny (A*L + 1, a few dozen at most), so damped
//! Newton with a dense Cholesky is all that is needed.

use crate::codebook::problem::DistanceProblem;
use crate::error::{Error, Result};

/// Linearization of the pair constraints at an expansion point.
struct Linearized {
    /// Gradient vectors g_j = 2 R_j a_prev.
    grads: Vec<Vec<f64>>,
    /// Constants c_j = a_prev^T R_j a_prev.
    consts: Vec<f64>,
}

fn linearize(problem: &DistanceProblem, a_prev: &[f64]) -> Linearized {
    let grads: Vec<Vec<f64>> = problem
        .r_matrices
        .iter()
        .map(|r| {
            let mut g = r.matvec(a_prev);
            for v in &mut g {
                *v *= 2.0;
            }
            g
        })
        .collect();
    let consts = problem
        .r_matrices
        .iter()
        .map(|r| r.quad(a_prev))
        .collect();
    Linearized { grads, consts }
}

/// Surrogate distance of pair j at point a: g_j . a - c_j.
fn surrogate(lin: &Linearized, j: usize, a: &[f64]) -> f64 {
    lin.grads[j].iter().zip(a).map(|(g, ai)| g * ai).sum::<f64>() - lin.consts[j]
}

/// Move a point strictly inside box and power constraints. Columns whose
/// power sits on the budget are shrunk toward the lower corner, which is
/// feasible whenever the problem is feasible at all.
fn strictly_interior(problem: &DistanceProblem, a: &[f64]) -> Result<Vec<f64>> {
    let lo = problem.lower;
    let hi = problem.upper;
    let margin = 1e-7 * (hi - lo);
    let mut out: Vec<f64> = a
        .iter()
        .map(|&v| v.clamp(lo + margin, hi - margin))
        .collect();
    let l = problem.l_groups;
    for k in 0..problem.a_order {
        let corner_power = {
            let corner = vec![lo + margin; l];
            problem.f_matrix.quad(&corner)
        };
        if corner_power >= problem.p_a {
            return Err(Error::design(format!(
                "power budget infeasible: column at the lower bound already needs {corner_power:.3e} W > {:.3e} W",
                problem.p_a
            )));
        }
        let target = problem.p_a * (1.0 - 1e-9);
        if problem.column_power(&out, k) < target {
            continue;
        }
        // shrink along the segment from the lower corner: power is a convex
        // quadratic in the step, solve for the boundary crossing
        let col: Vec<f64> = problem.column(&out, k).to_vec();
        let corner = vec![lo + margin; l];
        let dir: Vec<f64> = col.iter().zip(&corner).map(|(c, b)| c - b).collect();
        let fb = problem.f_matrix.matvec(&corner);
        let fd = problem.f_matrix.matvec(&dir);
        let c0: f64 = fb.iter().zip(&corner).map(|(x, y)| x * y).sum();
        let c1: f64 = fd.iter().zip(&corner).map(|(x, y)| x * y).sum();
        let c2: f64 = fd.iter().zip(&dir).map(|(x, y)| x * y).sum();
        // c2 s^2 + 2 c1 s + c0 = target
        let s = if c2 <= 0.0 {
            0.0
        } else {
            let disc = (c1 * c1 + c2 * (target - c0)).max(0.0);
            ((-c1 + disc.sqrt()) / c2).clamp(0.0, 1.0)
        };
        for (i, d) in dir.iter().enumerate() {
            out[k * l + i] = corner[i] + s * 0.999 * d;
        }
    }
    Ok(out)
}

/// Dense Cholesky solve of H x = b, with a small ridge retry when H has lost
/// definiteness to roundoff.
fn cholesky_solve(h: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    for ridge_pow in 0..6 {
        let ridge = if ridge_pow == 0 {
            0.0
        } else {
            1e-12 * 10f64.powi(ridge_pow) * (0..n).map(|i| h[i * n + i]).fold(0.0f64, f64::max)
        };
        let mut l = h.to_vec();
        for i in 0..n {
            l[i * n + i] += ridge;
        }
        if let Some(x) = try_cholesky(&mut l, n, b) {
            return Some(x);
        }
    }
    None
}

fn try_cholesky(a: &mut [f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    for j in 0..n {
        for k in 0..j {
            let ljk = a[j * n + k];
            for i in j..n {
                a[i * n + j] -= a[i * n + k] * ljk;
            }
        }
        let d = a[j * n + j];
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let s = d.sqrt();
        for i in j..n {
            a[i * n + j] /= s;
        }
    }
    // forward/backward substitution
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Some(y)
}

struct BarrierState<'a> {
    problem: &'a DistanceProblem,
    lin: &'a Linearized,
}

impl BarrierState<'_> {
    /// Constraint values f_i(z) (all must stay negative). z = [a; tau].
    fn constraints(&self, z: &[f64]) -> Vec<f64> {
        let dim = self.problem.dim();
        let (a, tau) = (&z[..dim], z[dim]);
        let mut vals = Vec::new();
        for j in 0..self.lin.grads.len() {
            vals.push(tau - surrogate(self.lin, j, a));
        }
        for k in 0..self.problem.a_order {
            vals.push(self.problem.column_power(a, k) - self.problem.p_a);
        }
        for &ai in a {
            vals.push(self.problem.lower - ai);
            vals.push(ai - self.problem.upper);
        }
        vals
    }

    fn n_constraints(&self) -> usize {
        self.lin.grads.len() + self.problem.a_order + 2 * self.problem.dim()
    }

    /// Barrier objective -t*tau - sum log(-f_i); infinite outside the
    /// strictly feasible region.
    fn value(&self, z: &[f64], t: f64) -> f64 {
        let dim = self.problem.dim();
        let mut v = -t * z[dim];
        for f in self.constraints(z) {
            if f >= 0.0 {
                return f64::INFINITY;
            }
            v -= (-f).ln();
        }
        v
    }

    /// Gradient and Hessian of the barrier objective.
    fn derivatives(&self, z: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let dim = self.problem.dim();
        let n = dim + 1;
        let (a, tau) = (&z[..dim], z[dim]);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        grad[dim] = -t;

        fn rank_one(grad: &mut [f64], hess: &mut [f64], n: usize, gradient: &[f64], f: f64) {
            let inv = -1.0 / f; // f < 0
            for i in 0..n {
                grad[i] += gradient[i] * inv;
            }
            let inv_sq = inv * inv;
            for i in 0..n {
                if gradient[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    hess[i * n + j] += gradient[i] * gradient[j] * inv_sq;
                }
            }
        }

        // pair constraints: f = tau - g.a + c, grad = [-g; 1]
        let mut gbuf = vec![0.0; n];
        for j in 0..self.lin.grads.len() {
            let f = tau - surrogate(self.lin, j, a);
            for (i, g) in self.lin.grads[j].iter().enumerate() {
                gbuf[i] = -g;
            }
            gbuf[dim] = 1.0;
            rank_one(&mut grad, &mut hess, n, &gbuf, f);
        }

        // power constraints: f = a_k^T F a_k - P_a
        let l = self.problem.l_groups;
        for k in 0..self.problem.a_order {
            let col = self.problem.column(a, k);
            let f = self.problem.f_matrix.quad(col) - self.problem.p_a;
            let fa = self.problem.f_matrix.matvec(col);
            gbuf.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..l {
                gbuf[k * l + i] = 2.0 * fa[i];
            }
            rank_one(&mut grad, &mut hess, n, &gbuf, f);
            // curvature term 2F / (-f)
            let inv = -1.0 / f;
            for i in 0..l {
                for j in 0..l {
                    hess[(k * l + i) * n + (k * l + j)] +=
                        2.0 * self.problem.f_matrix.get(i, j) * inv;
                }
            }
        }

        // box constraints
        for (i, &ai) in a.iter().enumerate() {
            let lo_gap = ai - self.problem.lower; // > 0
            let hi_gap = self.problem.upper - ai; // > 0
            grad[i] += -1.0 / lo_gap + 1.0 / hi_gap;
            hess[i * n + i] += 1.0 / (lo_gap * lo_gap) + 1.0 / (hi_gap * hi_gap);
        }

        (grad, hess)
    }
}

/// Solve the linearized subproblem at expansion point `a_prev`.
///
/// Returns the maximizing stacked amplitude vector and the achieved tau (in
/// the problem's scaled distance units). `a_prev` must satisfy the box and
/// power constraints; it is nudged strictly inside automatically.
pub fn solve_sca_subproblem(problem: &DistanceProblem, a_prev: &[f64]) -> Result<(Vec<f64>, f64)> {
    let dim = problem.dim();
    if a_prev.len() != dim {
        return Err(Error::config("subproblem expansion point has wrong length"));
    }
    let lin = linearize(problem, a_prev);
    let state = BarrierState { problem, lin: &lin };

    let a0 = strictly_interior(problem, a_prev)?;
    let min_surr = (0..lin.grads.len())
        .map(|j| surrogate(&lin, j, &a0))
        .fold(f64::INFINITY, f64::min);
    let mut z: Vec<f64> = a0;
    z.push(min_surr - 0.1 * min_surr.abs().max(1e-3));

    let m = state.n_constraints() as f64;
    let mut t = 1.0;
    let n = dim + 1;
    while m / t > 1e-9 {
        // centering by damped Newton
        for _ in 0..60 {
            let (grad, hess) = state.derivatives(&z, t);
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let step = cholesky_solve(&hess, n, &rhs)
                .ok_or_else(|| Error::Numerical("barrier Hessian factorization failed".into()))?;
            let decrement: f64 = grad.iter().zip(&step).map(|(g, s)| -g * s).sum();
            if decrement / 2.0 < 1e-12 {
                break;
            }
            // backtracking line search, keeping strict feasibility
            let v0 = state.value(&z, t);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> =
                    z.iter().zip(&step).map(|(zi, s)| zi + alpha * s).collect();
                let v = state.value(&trial, t);
                if v < v0 - 0.25 * alpha * decrement {
                    z = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        t *= 20.0;
    }

    let tau = z[dim];
    let a = z[..dim].to_vec();
    Ok((a, tau))
}
