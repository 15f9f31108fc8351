//! Conjugate-gradient solves for the constant-coefficient implicit
//! operators on the uniform grid, with Dirichlet rows pinned.

use crate::fields::Grid;

/// Applies `out = x - c * Lap(x)` at interior nodes (5-point stencil),
/// identity at boundary nodes. `c = 0` is allowed.
pub(crate) fn apply_helmholtz(grid: &Grid, c: f64, x: &[f64], out: &mut [f64]) {
    let np = grid.nodes_per_side();
    let inv_h2 = (grid.n as f64) * (grid.n as f64);
    for j in 0..np {
        for i in 0..np {
            let idx = j * np + i;
            if grid.is_boundary(i, j) {
                out[idx] = x[idx];
            } else {
                let lap = (x[idx - 1] + x[idx + 1] + x[idx - np] + x[idx + np] - 4.0 * x[idx])
                    * inv_h2;
                out[idx] = x[idx] - c * lap;
            }
        }
    }
}

/// Applies minus the 5-point Laplacian at interior nodes, zero at
/// boundary nodes (for pure Dirichlet-Laplace solves).
pub(crate) fn apply_neg_laplace(grid: &Grid, x: &[f64], out: &mut [f64]) {
    let np = grid.nodes_per_side();
    let inv_h2 = (grid.n as f64) * (grid.n as f64);
    for j in 0..np {
        for i in 0..np {
            let idx = j * np + i;
            if grid.is_boundary(i, j) {
                out[idx] = 0.0;
            } else {
                out[idx] = (4.0 * x[idx]
                    - x[idx - 1]
                    - x[idx + 1]
                    - x[idx - np]
                    - x[idx + np])
                    * inv_h2;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CG on the interior unknowns for an SPD operator given as a closure;
/// boundary entries of `x` are held fixed and must already satisfy the
/// Dirichlet data. `b` holds the full right-hand side (its boundary
/// entries are ignored). Returns the iteration count.
pub(crate) fn cg_solve<F>(
    grid: &Grid,
    apply: F,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> usize
where
    F: Fn(&[f64], &mut [f64]),
{
    let np = grid.nodes_per_side();
    let count = np * np;
    let mut r = vec![0.0; count];
    let mut p = vec![0.0; count];
    let mut ap = vec![0.0; count];

    apply(x, &mut ap);
    let mut b_norm_sq = 0.0;
    for j in 0..np {
        for i in 0..np {
            let idx = j * np + i;
            if grid.is_boundary(i, j) {
                r[idx] = 0.0;
            } else {
                r[idx] = b[idx] - ap[idx];
                b_norm_sq += b[idx] * b[idx];
            }
        }
    }
    let stop = tol * tol * b_norm_sq.max(1e-300);
    let mut rsq = dot(&r, &r);
    if rsq <= stop {
        return 0;
    }
    p.copy_from_slice(&r);
    let mut iters = 0;
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        // Boundary rows of p are zero, so ap is consistent on interior.
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rsq / pap;
        for idx in 0..count {
            x[idx] += alpha * p[idx];
            r[idx] -= alpha * ap[idx];
        }
        let rsq_new = dot(&r, &r);
        iters += 1;
        if rsq_new <= stop {
            break;
        }
        let beta = rsq_new / rsq;
        rsq = rsq_new;
        for idx in 0..count {
            p[idx] = r[idx] + beta * p[idx];
        }
    }
    iters
}

/// Solves the discrete Dirichlet-Laplace problem `-Lap(phi) = rhs` in
/// the interior, with `phi` prescribed on the boundary (already stored
/// in `phi`). `rhs` is in physical units (already divided by nothing).
pub(crate) fn solve_dirichlet_poisson(grid: &Grid, rhs: &[f64], phi: &mut [f64], tol: f64) {
    let np = grid.nodes_per_side();
    let inv_h2 = (grid.n as f64) * (grid.n as f64);
    // Move the boundary contributions of -Lap to the right-hand side by
    // solving for the correction over a zero-boundary lift.
    let mut b = rhs.to_vec();
    for j in 1..grid.n {
        for i in 1..grid.n {
            let idx = j * np + i;
            let mut bc = 0.0;
            if i == 1 {
                bc += phi[idx - 1];
            }
            if i == grid.n - 1 {
                bc += phi[idx + 1];
            }
            if j == 1 {
                bc += phi[idx - np];
            }
            if j == grid.n - 1 {
                bc += phi[idx + np];
            }
            b[idx] += bc * inv_h2;
        }
    }
    let mut u = vec![0.0; phi.len()];
    let grid_copy = *grid;
    cg_solve(
        grid,
        move |x, out| apply_neg_laplace(&grid_copy, x, out),
        &b,
        &mut u,
        tol,
        20 * grid.n * grid.n,
    );
    for j in 1..grid.n {
        for i in 1..grid.n {
            let idx = j * np + i;
            phi[idx] = u[idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_recovers_harmonic_polynomial() {
        // u = x² - y² is harmonic and exactly represented by the 5-point
        // stencil, so the solve must reproduce it to solver tolerance.
        let grid = Grid::new(32);
        let np = grid.nodes_per_side();
        let mut phi = vec![0.0; grid.node_count()];
        let mut exact = vec![0.0; grid.node_count()];
        for j in 0..np {
            for i in 0..np {
                let (x, y) = grid.xy(i, j);
                exact[grid.idx(i, j)] = x * x - y * y;
                if grid.is_boundary(i, j) {
                    phi[grid.idx(i, j)] = x * x - y * y;
                }
            }
        }
        let rhs = vec![0.0; grid.node_count()];
        solve_dirichlet_poisson(&grid, &rhs, &mut phi, 1e-12);
        let max_err = phi
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-9, "max error {max_err}");
    }

    #[test]
    fn helmholtz_cg_matches_direct_check() {
        // Solve (I - c Lap) x = b and verify the residual directly.
        let grid = Grid::new(24);
        let np = grid.nodes_per_side();
        let c = 3e-4;
        let mut b = vec![0.0; grid.node_count()];
        let mut x = vec![0.0; grid.node_count()];
        for j in 0..np {
            for i in 0..np {
                let (px, py) = grid.xy(i, j);
                let v = (3.1 * px).sin() * (2.0 * py).cos();
                b[grid.idx(i, j)] = v;
                if grid.is_boundary(i, j) {
                    x[grid.idx(i, j)] = 0.25 * v;
                }
            }
        }
        // Fold the fixed boundary values into the right-hand side: CG
        // treats them as part of the initial iterate.
        let gc = grid;
        cg_solve(
            &grid,
            move |v, out| apply_helmholtz(&gc, c, v, out),
            &b,
            &mut x,
            1e-12,
            10_000,
        );
        let mut ax = vec![0.0; grid.node_count()];
        apply_helmholtz(&grid, c, &x, &mut ax);
        let mut max_res = 0.0f64;
        for j in 1..grid.n {
            for i in 1..grid.n {
                let idx = grid.idx(i, j);
                max_res = max_res.max((ax[idx] - b[idx]).abs());
            }
        }
        assert!(max_res < 1e-8, "residual {max_res}");
    }
}
