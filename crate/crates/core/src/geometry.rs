//! Minimal connections, canonical harmonic maps, the renormalized
//! energy and its interface-cost modification, the branch-cut director
//! lifting, and the Ginzburg-Landau core energy.

use serde::Serialize;

use crate::fields::{datum_angle, wrap_angle, Grid};
use crate::potential::PotentialConstants;
use crate::solver;
use crate::{Error, Result};

/// Hard cap on the number of points for exhaustive matching:
/// (2d-1)!! pairings, at most 2,027,025 for 16 points.
pub const MATCHING_CAPACITY: usize = 16;

/// A pairing of an even set of points into straight segments.
#[derive(Debug, Clone, Serialize)]
pub struct Connection {
    pub points: Vec<(f64, f64)>,
    /// Index pairs; every index appears in exactly one pair.
    pub pairing: Vec<(usize, usize)>,
    pub total_length: f64,
}

impl Connection {
    /// The connection of a single pair of points.
    pub fn single_pair(points: &[(f64, f64)]) -> Self {
        assert_eq!(points.len(), 2);
        Connection {
            points: points.to_vec(),
            pairing: vec![(0, 1)],
            total_length: dist(points[0], points[1]),
        }
    }

    /// Explicit pairing of the given points.
    pub fn with_pairing(points: &[(f64, f64)], pairing: Vec<(usize, usize)>) -> Self {
        let total_length = pairing
            .iter()
            .map(|&(a, b)| dist(points[a], points[b]))
            .sum();
        Connection {
            points: points.to_vec(),
            pairing,
            total_length,
        }
    }

    pub fn segments(&self) -> Vec<((f64, f64), (f64, f64))> {
        self.pairing
            .iter()
            .map(|&(a, b)| (self.points[a], self.points[b]))
            .collect()
    }
}

#[inline]
fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Exhaustive minimum-length pairing of an even set of points.
///
/// Enumerates all (2d-1)!! pairings in lexicographic order and keeps
/// the strictly best one, so ties resolve to the lexicographically
/// first pairing.
pub fn minimal_connection(points: &[(f64, f64)]) -> Result<Connection> {
    let n = points.len();
    if n > MATCHING_CAPACITY {
        return Err(Error::MatchingCapacity {
            n,
            max: MATCHING_CAPACITY,
        });
    }
    assert!(n >= 2 && n % 2 == 0, "need an even number (>= 2) of points");

    let mut used = vec![false; n];
    let mut current = Vec::with_capacity(n / 2);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    fn recurse(
        points: &[(f64, f64)],
        used: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        acc: f64,
        best: &mut Option<(f64, Vec<(usize, usize)>)>,
    ) {
        let first = match used.iter().position(|&u| !u) {
            Some(i) => i,
            None => {
                if best.as_ref().map_or(true, |(len, _)| acc < *len) {
                    *best = Some((acc, current.clone()));
                }
                return;
            }
        };
        used[first] = true;
        for j in first + 1..points.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            current.push((first, j));
            recurse(points, used, current, acc + dist(points[first], points[j]), best);
            current.pop();
            used[j] = false;
        }
        used[first] = false;
    }
    recurse(points, &mut used, &mut current, 0.0, &mut best);
    let (total_length, pairing) = best.expect("at least one pairing exists");
    Ok(Connection {
        points: points.to_vec(),
        pairing,
        total_length,
    })
}

/// Sign of the orientation of the triangle (a, b, c).
pub(crate) fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Whether closed segments [a, b] and [c, d] intersect.
pub(crate) fn segments_intersect(
    a: (f64, f64),
    b: (f64, f64),
    c: (f64, f64),
    d: (f64, f64),
) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        orient(p, q, r) == 0.0
            && r.0 >= p.0.min(q.0)
            && r.0 <= p.0.max(q.0)
            && r.1 >= p.1.min(q.1)
            && r.1 <= p.1.max(q.1)
    };
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

fn point_on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    orient(a, b, p) == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// Angle field of the canonical harmonic map with the prescribed
/// interior singularities and the degree-2k boundary q-angle.
#[derive(Debug, Clone)]
pub struct AngleField {
    pub grid: Grid,
    /// Total angle θ at each node; q* = (cos θ, sin θ). Defined up to
    /// 2π branch jumps in the interior; only wrapped differences and
    /// trigonometric values are meaningful.
    pub theta: Vec<f64>,
    /// Superposition of atan2 terms around the singular points.
    pub singular: Vec<f64>,
    /// Correction solving the discrete Laplace problem.
    pub harmonic: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

impl AngleField {
    /// Wrapped-difference discrete Laplacian of θ at an interior node.
    pub fn laplace_residual(&self, i: usize, j: usize) -> f64 {
        let grid = &self.grid;
        let np = grid.nodes_per_side();
        let idx = grid.idx(i, j);
        let c = self.theta[idx];
        let inv_h2 = (grid.n as f64) * (grid.n as f64);
        (wrap_angle(self.theta[idx - 1] - c)
            + wrap_angle(self.theta[idx + 1] - c)
            + wrap_angle(self.theta[idx - np] - c)
            + wrap_angle(self.theta[idx + np] - c))
            * inv_h2
    }

    /// Max |discrete Laplacian of θ| over interior nodes at distance
    /// at least `radius` from every singular point.
    pub fn max_residual_outside(&self, radius: f64) -> f64 {
        let grid = &self.grid;
        let mut max_res = 0.0f64;
        for j in 1..grid.n {
            for i in 1..grid.n {
                let (x, y) = grid.xy(i, j);
                let near = self
                    .points
                    .iter()
                    .any(|&p| dist((x, y), p) < radius);
                if !near {
                    max_res = max_res.max(self.laplace_residual(i, j).abs());
                }
            }
        }
        max_res
    }
}

// The canonical-angle correction must be resolved to the f64 floor:
// the RHS (wrapped Laplacian of the singular part) is O(1/h²) near the
// cores, so a relative CG tolerance of 1e-12 still leaves ~1e-8
// nodewise Laplacian residuals at n = 100.
const LINSOLVE_TOL: f64 = 1e-14;

/// Deterministically shifts a point off the grid lines by 1e-4·h per
/// coordinate that lies on one. `canonical_angle` and `sbv_lifting`
/// must see identical singular positions, so both route points through
/// this map. Idempotent: an already-nudged coordinate is left alone.
pub(crate) fn nudge_off_grid(p: (f64, f64), grid: &Grid) -> (f64, f64) {
    let h = grid.h();
    let nudge = |c: f64| {
        let r = c / h;
        if (r - r.round()).abs() < 1e-6 {
            (r.round() + 1e-4) * h
        } else {
            c
        }
    };
    (nudge(p.0), nudge(p.1))
}

/// Builds the discrete canonical harmonic angle field: the sum of polar
/// angles around the singular points plus a correction chosen so that
/// the wrapped-difference Laplacian of θ vanishes at interior nodes and
/// the boundary trace matches the degree-2k datum angle.
pub fn canonical_angle(points: &[(f64, f64)], k: i32, grid: &Grid) -> Result<AngleField> {
    let np = grid.nodes_per_side();
    let count = grid.node_count();

    // Nudge points off grid lines: a point exactly on a line puts two
    // adjacent nodes at antipodal polar angles (difference exactly π),
    // and the wrapped differences near the core then flip by 2π on
    // rounding noise, shifting the field energy by O(1). The nudge is
    // deterministic and far below any resolvable length scale.
    let points: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| nudge_off_grid((x, y), grid))
        .collect();
    let points = points.as_slice();

    let mut singular = vec![0.0; count];
    for j in 0..np {
        for i in 0..np {
            let (x, y) = grid.xy(i, j);
            singular[grid.idx(i, j)] = points
                .iter()
                .map(|&(ax, ay)| f64::atan2(y - ay, x - ax))
                .sum();
        }
    }

    // Unwrap the boundary traces of the datum angle and of the singular
    // part along the boundary loop, and check closure.
    let loop_nodes = grid.boundary_loop();
    let raw_datum: Vec<f64> = loop_nodes
        .iter()
        .map(|&(i, j)| {
            let (x, y) = grid.xy(i, j);
            2.0 * k as f64 * datum_angle(x, y)
        })
        .collect();
    let raw_sing: Vec<f64> = loop_nodes
        .iter()
        .map(|&(i, j)| singular[grid.idx(i, j)])
        .collect();
    let unwrap = |raw: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(raw.len() + 1);
        out.push(raw[0]);
        for w in 1..=raw.len() {
            let step = wrap_angle(raw[w % raw.len()] - raw[w - 1]);
            out.push(out[w - 1] + step);
        }
        out
    };
    let psi = unwrap(&raw_datum);
    let sng = unwrap(&raw_sing);
    let closure = (psi[loop_nodes.len()] - psi[0]) - (sng[loop_nodes.len()] - sng[0]);
    let winding = (closure / (2.0 * std::f64::consts::PI)).round() as i64;
    if winding != 0 {
        return Err(Error::BoundaryWinding { winding });
    }

    // Dirichlet data for the correction.
    let mut harmonic = vec![0.0; count];
    for (w, &(i, j)) in loop_nodes.iter().enumerate() {
        harmonic[grid.idx(i, j)] = psi[w] - sng[w];
    }

    // Right-hand side: minus the wrapped-difference Laplacian of the
    // singular part, so that θ = singular + harmonic is discretely
    // harmonic in the wrapped sense.
    let inv_h2 = (grid.n as f64) * (grid.n as f64);
    let mut rhs = vec![0.0; count];
    for j in 1..grid.n {
        for i in 1..grid.n {
            let idx = grid.idx(i, j);
            let c = singular[idx];
            rhs[idx] = (wrap_angle(singular[idx - 1] - c)
                + wrap_angle(singular[idx + 1] - c)
                + wrap_angle(singular[idx - np] - c)
                + wrap_angle(singular[idx + np] - c))
                * inv_h2;
        }
    }
    solver::solve_dirichlet_poisson(grid, &rhs, &mut harmonic, LINSOLVE_TOL);

    let theta: Vec<f64> = singular
        .iter()
        .zip(&harmonic)
        .map(|(s, p)| s + p)
        .collect();
    Ok(AngleField {
        grid: *grid,
        theta,
        singular,
        harmonic,
        points: points.to_vec(),
    })
}

/// Per-sigma renormalized-energy table entry.
#[derive(Debug, Clone, Serialize)]
pub struct RenormTableEntry {
    pub sigma: f64,
    /// ½ ∑_{cells outside the sigma balls} |∇θ|² h² - 2π|k| |log σ|.
    pub w_sigma: f64,
}

/// Renormalized energy of the canonical harmonic map: evaluates
/// W(σ) over the σ ladder and extrapolates σ → 0 by a linear fit.
pub fn renormalized_energy(
    points: &[(f64, f64)],
    k: i32,
    grid: &Grid,
    sigmas: &[f64],
) -> Result<(f64, Vec<RenormTableEntry>)> {
    for (a, &p) in points.iter().enumerate() {
        for &sigma in sigmas {
            let bd = p.0.min(p.1).min(1.0 - p.0).min(1.0 - p.1);
            if bd <= sigma {
                return Err(Error::SigmaBallInvalid { point: p, sigma });
            }
            for &q in points.iter().skip(a + 1) {
                if dist(p, q) <= 2.0 * sigma {
                    return Err(Error::SigmaBallInvalid { point: p, sigma });
                }
            }
        }
    }
    let field = canonical_angle(points, k, grid)?;
    let table = renorm_table(&field, sigmas);
    Ok((fit_intercept(&table), table))
}

/// W(σ) table for an already-built angle field.
pub fn renorm_table(field: &AngleField, sigmas: &[f64]) -> Vec<RenormTableEntry> {
    let grid = &field.grid;
    let np = grid.nodes_per_side();
    let h = grid.h();
    let deg = field.points.len() as f64 / 2.0;
    sigmas
        .iter()
        .map(|&sigma| {
            let mut energy = 0.0;
            for j in 0..grid.n {
                for i in 0..grid.n {
                    // Mask cells by their center: the staircase error of
                    // a center test is mean-zero around the ball rim,
                    // whereas an all-corners test systematically removes
                    // an extra half-cell ring and bends W(σ) away from
                    // linear at small σ.
                    let cx = (i as f64 + 0.5) * h;
                    let cy = (j as f64 + 0.5) * h;
                    let outside = field.points.iter().all(|&p| dist((cx, cy), p) >= sigma);
                    if !outside {
                        continue;
                    }
                    let idx = grid.idx(i, j);
                    // Symmetric cell quadrature: average the squared
                    // wrapped gradient over both opposite edge pairs.
                    let dxb = wrap_angle(field.theta[idx + 1] - field.theta[idx]) / h;
                    let dxt = wrap_angle(field.theta[idx + np + 1] - field.theta[idx + np]) / h;
                    let dyl = wrap_angle(field.theta[idx + np] - field.theta[idx]) / h;
                    let dyr = wrap_angle(field.theta[idx + np + 1] - field.theta[idx + 1]) / h;
                    energy += 0.25 * (dxb * dxb + dxt * dxt + dyl * dyl + dyr * dyr) * h * h;
                }
            }
            RenormTableEntry {
                sigma,
                w_sigma: energy - 2.0 * std::f64::consts::PI * deg * sigma.ln().abs(),
            }
        })
        .collect()
}

/// Least-squares intercept of w_sigma = A + B σ.
pub fn fit_intercept(table: &[RenormTableEntry]) -> f64 {
    let n = table.len() as f64;
    let sx: f64 = table.iter().map(|e| e.sigma).sum();
    let sy: f64 = table.iter().map(|e| e.w_sigma).sum();
    let sxx: f64 = table.iter().map(|e| e.sigma * e.sigma).sum();
    let sxy: f64 = table.iter().map(|e| e.sigma * e.w_sigma).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return sy / n;
    }
    let slope = (n * sxy - sx * sy) / denom;
    (sy - slope * sx) / n
}

/// Largest absolute residual of the linear fit over the table.
pub fn fit_residual(table: &[RenormTableEntry]) -> f64 {
    let a = fit_intercept(table);
    let n = table.len() as f64;
    let sx: f64 = table.iter().map(|e| e.sigma).sum();
    let sy: f64 = table.iter().map(|e| e.w_sigma).sum();
    let sxx: f64 = table.iter().map(|e| e.sigma * e.sigma).sum();
    let sxy: f64 = table.iter().map(|e| e.sigma * e.w_sigma).sum();
    let denom = n * sxx - sx * sx;
    let slope = if denom.abs() < 1e-300 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    };
    table
        .iter()
        .map(|e| (e.w_sigma - a - slope * e.sigma).abs())
        .fold(0.0f64, f64::max)
}

/// Default σ ladder tied to the grid spacing.
pub fn sigma_ladder(grid: &Grid) -> Vec<f64> {
    let h = grid.h();
    vec![4.0 * h, 8.0 * h, 16.0 * h]
}

/// σ ladder adapted to a point configuration: the standard ladder
/// {4h, 8h, 16h} clipped to a cap that keeps the σ-balls disjoint and
/// well inside the domain. Every σ stays ≥ 4h: smaller balls fail to
/// mask the defect-core cells, whose wrapped gradients are capped at
/// π/h and contribute grid-position-dependent jumps of order π².
/// Errors when the configuration is too tight for any valid σ.
pub fn adaptive_sigmas(points: &[(f64, f64)], grid: &Grid) -> Result<Vec<f64>> {
    let h = grid.h();
    let mut cap = 16.0 * h;
    let mut tightest = points[0];
    for (a, &p) in points.iter().enumerate() {
        // Keep σ well inside the boundary distance: with the ball rim
        // close to the wall the linear-in-σ extrapolation of W breaks
        // down and W is grossly underestimated.
        let bd = p.0.min(p.1).min(1.0 - p.0).min(1.0 - p.1);
        if 0.45 * bd < cap {
            cap = 0.45 * bd;
            tightest = p;
        }
        for &q in points.iter().skip(a + 1) {
            let d = dist(p, q);
            if 0.45 * d < cap {
                cap = 0.45 * d;
                tightest = p;
            }
        }
    }
    let ladder: Vec<f64> = [4.0 * h, 8.0 * h, 16.0 * h]
        .into_iter()
        .filter(|&s| s <= cap)
        .collect();
    if ladder.is_empty() {
        return Err(Error::SigmaBallInvalid {
            point: tightest,
            sigma: cap,
        });
    }
    Ok(ladder)
}

/// The defect-position energy: renormalized energy plus the interface
/// cost of a minimal connection.
pub fn w_beta(
    points: &[(f64, f64)],
    k: i32,
    consts: &PotentialConstants,
    grid: &Grid,
) -> Result<f64> {
    let sigmas = adaptive_sigmas(points, grid)?;
    let (w, _) = renormalized_energy(points, k, grid, &sigmas)?;
    let conn = minimal_connection(points)?;
    Ok(w + consts.c_beta * conn.total_length)
}

/// Result of the defect-position optimization.
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub points: Vec<(f64, f64)>,
    pub value: f64,
    /// Distinct local minima found across starts (position set, value).
    pub local_minima: Vec<(Vec<(f64, f64)>, f64)>,
}

/// Derivative-free minimization of 𝕎_β over the 4|k| defect
/// coordinates, with quadratic penalties outside the margin 4h from
/// the boundary and below pairwise separation 4h. Deterministic given
/// the starts; returns the best result over all starts.
pub fn minimize_w_beta(
    k: i32,
    consts: &PotentialConstants,
    grid: &Grid,
    starts: &[Vec<(f64, f64)>],
) -> Result<OptimizeResult> {
    let margin = 4.0 * grid.h();
    let sep = 4.0 * grid.h();
    let feasible = |pts: &[(f64, f64)]| {
        pts.iter()
            .all(|&(x, y)| x > margin && x < 1.0 - margin && y > margin && y < 1.0 - margin)
            && pts.iter().enumerate().all(|(a, &p)| {
                pts.iter().skip(a + 1).all(|&q| dist(p, q) > sep)
            })
    };
    if !starts.iter().any(|s| feasible(s)) {
        return Err(Error::NoFeasibleStart);
    }

    let penalty_scale = 1e3;
    let objective = |coords: &[f64]| -> f64 {
        let mut pts: Vec<(f64, f64)> = coords
            .chunks(2)
            .map(|c| (c[0], c[1]))
            .collect();
        let mut penalty = 0.0;
        for p in pts.iter_mut() {
            for v in [&mut p.0, &mut p.1] {
                if *v < margin {
                    penalty += ((margin - *v) / margin).powi(2);
                    *v = margin;
                } else if *v > 1.0 - margin {
                    penalty += ((*v - 1.0 + margin) / margin).powi(2);
                    *v = 1.0 - margin;
                }
            }
        }
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let d = dist(pts[a], pts[b]);
                if d < sep {
                    penalty += ((sep - d) / sep).powi(2);
                    // Evaluating W at nearly coincident points is
                    // meaningless; weight the penalty instead.
                }
            }
        }
        // Keep points strictly separated for the evaluation itself.
        let min_d = pts
            .iter()
            .enumerate()
            .flat_map(|(a, &p)| pts.iter().skip(a + 1).map(move |&q| dist(p, q)))
            .fold(f64::INFINITY, f64::min);
        if min_d < grid.h() {
            return 1e6 + penalty_scale * penalty;
        }
        match w_beta(&pts, k, consts, grid) {
            Ok(v) => v + penalty_scale * penalty,
            Err(_) => 1e6 + penalty_scale * penalty,
        }
    };

    let mut minima: Vec<(Vec<(f64, f64)>, f64)> = Vec::new();
    for start in starts.iter().filter(|s| feasible(s)) {
        let x0: Vec<f64> = start.iter().flat_map(|&(x, y)| [x, y]).collect();
        let (x, v) = nelder_mead(&objective, &x0, 0.05, 1e-7, 600);
        // Grid-induced steps in the objective can stall the simplex;
        // polish with a deterministic coordinate pattern search.
        let (x, value) = pattern_search(&objective, &x, v, grid.h());
        let pts: Vec<(f64, f64)> = x.chunks(2).map(|c| (c[0], c[1])).collect();
        let duplicate = minima.iter().any(|(mpts, _)| {
            mpts.iter()
                .zip(&pts)
                .all(|(a, b)| dist(*a, *b) < 2.0 * grid.h())
        });
        if !duplicate {
            minima.push((pts, value));
        }
    }
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (points, value) = minima[0].clone();
    Ok(OptimizeResult {
        points,
        value,
        local_minima: minima,
    })
}

/// Greedy coordinate pattern search: sweep ±step moves per coordinate,
/// shrinking the step from 8h down to h/2. Robust against the small
/// plateaus and jumps the σ-ball cell masks induce in the objective.
fn pattern_search<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    v0: f64,
    h: f64,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut v = v0;
    for &step in &[8.0 * h, 4.0 * h, 2.0 * h, h, 0.5 * h] {
        loop {
            let mut improved = false;
            for d in 0..x.len() {
                for s in [step, -step] {
                    let mut y = x.clone();
                    y[d] += s;
                    let fy = f(&y);
                    if fy < v {
                        x = y;
                        v = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    (x, v)
}

/// Standard Nelder-Mead simplex descent. Returns (best point, value).
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for d in 0..dim {
        let mut x = x0.to_vec();
        x[d] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[dim].1 - simplex[0].1).abs() < tol * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|(x, _)| x[d]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let reflect: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + alpha * (centroid[d] - worst.0[d]))
            .collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + gamma * (reflect[d] - centroid[d]))
                .collect();
            let fe = f(&expand);
            simplex[dim] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + rho * (worst.0[d] - centroid[d]))
                .collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[dim] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for d in 0..dim {
                        entry.0[d] = best[d] + sigma * (entry.0[d] - best[d]);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].clone()
}

/// Unit director field with a sign jump exactly across the connection
/// segments; magnitude λ*.
#[derive(Debug, Clone)]
pub struct LiftedDirector {
    pub grid: Grid,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    /// Sign assigned to each node by the flood fill.
    pub tau: Vec<i8>,
}

/// Constructs the branch-cut lifting of the director: n = (cos θ/2,
/// sin θ/2) with a sign field τ propagated by flood fill from the
/// boundary, never across an edge that crosses a connection segment.
/// The returned field is λ*·τ·n and equals the boundary magnetization
/// datum on ∂Ω after the global-sign normalization.
pub fn sbv_lifting(
    field: &AngleField,
    connection: &Connection,
    consts: &PotentialConstants,
) -> Result<LiftedDirector> {
    let grid = &field.grid;
    let np = grid.nodes_per_side();
    let count = grid.node_count();
    // Match the nudge applied to the singular points by canonical_angle
    // so the cut endpoints coincide with the field's singularities; a
    // gap between them would let the flood fill encircle a singularity
    // without crossing the cut, breaking the sign parity.
    let segments: Vec<((f64, f64), (f64, f64))> = connection
        .segments()
        .iter()
        .map(|&(a, b)| (nudge_off_grid(a, grid), nudge_off_grid(b, grid)))
        .collect();

    let nx: Vec<f64> = field.theta.iter().map(|t| (t / 2.0).cos()).collect();
    let ny: Vec<f64> = field.theta.iter().map(|t| (t / 2.0).sin()).collect();

    // An edge may be traversed unless the cut separates its endpoints.
    // A node lying exactly on a cut segment is assigned to the
    // positive-orientation side of that segment, so edges reaching it
    // from the negative side are blocked; without this, the flood fill
    // would walk straight through the cut wherever it passes exactly
    // through a grid node and smear the sign jump off the connection.
    let edge_open = |a: (usize, usize), b: (usize, usize)| -> bool {
        let pa = grid.xy(a.0, a.1);
        let pb = grid.xy(b.0, b.1);
        segments.iter().all(|&(c, d)| {
            if !segments_intersect(pa, pb, c, d) {
                return true;
            }
            let oa = orient(c, d, pa);
            let ob = orient(c, d, pb);
            let a_on = oa == 0.0 && point_on_segment(pa, c, d);
            let b_on = ob == 0.0 && point_on_segment(pb, c, d);
            if a_on && b_on {
                return true; // edge lies along the cut
            }
            if a_on {
                return pa == c || pa == d || ob > 0.0;
            }
            if b_on {
                return pb == c || pb == d || oa > 0.0;
            }
            // Proper crossing, including through a defect endpoint:
            // allowed only when the intersection point is c or d.
            let through_c = point_on_segment(c, pa, pb);
            let through_d = point_on_segment(d, pa, pb);
            through_c || through_d
        })
    };

    let mut tau = vec![0i8; count];
    let start = grid.idx(0, 0);
    tau[start] = 1;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((0usize, 0usize));
    while let Some((i, j)) = queue.pop_front() {
        let idx = grid.idx(i, j);
        let neighbors = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for &(ni, nj) in &neighbors {
            if ni >= np || nj >= np {
                continue;
            }
            let nidx = grid.idx(ni, nj);
            if tau[nidx] != 0 || !edge_open((i, j), (ni, nj)) {
                continue;
            }
            let dot = nx[idx] * nx[nidx] + ny[idx] * ny[nidx];
            tau[nidx] = if dot >= 0.0 { tau[idx] } else { -tau[idx] };
            queue.push_back((ni, nj));
        }
    }
    let unreached = tau.iter().filter(|&&t| t == 0).count();
    if unreached > 0 {
        return Err(Error::FloodFillDisconnected { unreached });
    }

    // Global sign: match the boundary datum at the start corner.
    let (x0, y0) = grid.xy(0, 0);
    let k = (connection.points.len() / 2) as f64;
    let kt = k * datum_angle(x0, y0);
    let dot_bd = kt.cos() * nx[start] * tau[start] as f64 + kt.sin() * ny[start] * tau[start] as f64;
    let flip = if dot_bd < 0.0 { -1.0 } else { 1.0 };

    let lam = consts.lambda_star;
    let m1: Vec<f64> = (0..count)
        .map(|idx| flip * lam * tau[idx] as f64 * nx[idx])
        .collect();
    let m2: Vec<f64> = (0..count)
        .map(|idx| flip * lam * tau[idx] as f64 * ny[idx])
        .collect();
    let tau: Vec<i8> = tau
        .iter()
        .map(|&t| if flip < 0.0 { -t } else { t })
        .collect();
    Ok(LiftedDirector {
        grid: *grid,
        m1,
        m2,
        tau,
    })
}

/// γ(ε) table entry of the core-energy cell problem.
#[derive(Debug, Clone, Serialize)]
pub struct CoreEnergyEntry {
    pub eps: f64,
    pub gamma: f64,
    /// γ(ε) - π |log ε|.
    pub gamma_minus_log: f64,
}

/// Solves the radially reduced Ginzburg-Landau cell problem on the unit
/// disk for each ε and extrapolates the core energy γ* by a linear fit
/// in ε² of γ(ε) - π|log ε|.
pub fn core_energy(eps_list: &[f64], grid_1d_n: usize) -> Result<(Vec<CoreEnergyEntry>, f64)> {
    let delta = 1.0 / grid_1d_n as f64;
    for w in eps_list.windows(2) {
        assert!(w[0] > w[1], "eps_list must be strictly decreasing");
    }
    for &eps in eps_list {
        assert!(eps >= 2.0 * delta, "eps must be resolvable by the 1-D grid");
    }
    let mut table = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let gamma = radial_core_minimum(eps, grid_1d_n)?;
        table.push(CoreEnergyEntry {
            eps,
            gamma,
            gamma_minus_log: gamma - std::f64::consts::PI * eps.ln().abs(),
        });
    }
    // Linear fit gamma_minus_log = γ* + C ε².
    let n = table.len() as f64;
    let sx: f64 = table.iter().map(|e| e.eps * e.eps).sum();
    let sy: f64 = table.iter().map(|e| e.gamma_minus_log).sum();
    let sxx: f64 = table.iter().map(|e| (e.eps * e.eps).powi(2)).sum();
    let sxy: f64 = table.iter().map(|e| e.eps * e.eps * e.gamma_minus_log).sum();
    let denom = n * sxx - sx * sx;
    let gamma_star = if denom.abs() < 1e-300 {
        sy / n
    } else {
        let slope = (n * sxy - sx * sy) / denom;
        (sy - slope * sx) / n
    };
    Ok((table, gamma_star))
}

/// Discrete radial energy E(f) = π Σ Δ r_m [ D² + f_m²/r_m² +
/// (1/(2ε²))(1-f_m²)² ] with midpoint quadrature.
fn radial_energy(f: &[f64], eps: f64) -> f64 {
    let n = f.len() - 1;
    let delta = 1.0 / n as f64;
    let mut e = 0.0;
    for i in 0..n {
        let d = (f[i + 1] - f[i]) / delta;
        let fm = 0.5 * (f[i] + f[i + 1]);
        let rm = (i as f64 + 0.5) * delta;
        let w = (1.0 - fm * fm).powi(2) / (2.0 * eps * eps);
        e += delta * rm * (d * d + fm * fm / (rm * rm) + w);
    }
    std::f64::consts::PI * e
}

/// Damped Newton minimization of the radial core profile; f(0) = 0,
/// f(1) = 1. Returns the minimal energy γ(ε).
fn radial_core_minimum(eps: f64, n: usize) -> Result<f64> {
    let delta = 1.0 / n as f64;
    let mut f: Vec<f64> = (0..=n).map(|i| (i as f64 * delta / eps).min(1.0)).collect();
    f[0] = 0.0;
    f[n] = 1.0;
    let unknowns = n - 1;

    let grad_hess = |f: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        // Tridiagonal Hessian: lower, diag, upper; plus gradient.
        let mut g = vec![0.0; unknowns];
        let mut dl = vec![0.0; unknowns];
        let mut dm = vec![0.0; unknowns];
        let mut du = vec![0.0; unknowns];
        let pi = std::f64::consts::PI;
        for i in 0..n {
            let d = (f[i + 1] - f[i]) / delta;
            let fm = 0.5 * (f[i] + f[i + 1]);
            let rm = (i as f64 + 0.5) * delta;
            let wp = -2.0 * fm * (1.0 - fm * fm) / (eps * eps);
            let wpp = (6.0 * fm * fm - 2.0) / (eps * eps);
            let common = fm / (rm * rm) + 0.5 * wp;
            let c2 = 0.5 / (rm * rm) + 0.25 * wpp;
            // d/d f_i and d/d f_{i+1} of the interval term, mapped to
            // the unknown indices (f_1 .. f_{n-1}).
            if i >= 1 {
                g[i - 1] += pi * delta * rm * (-2.0 * d / delta + common);
                dm[i - 1] += pi * delta * rm * (2.0 / (delta * delta) + c2);
            }
            if i + 1 <= n - 1 {
                g[i] += pi * delta * rm * (2.0 * d / delta + common);
                dm[i] += pi * delta * rm * (2.0 / (delta * delta) + c2);
            }
            if i >= 1 && i + 1 <= n - 1 {
                let off = pi * delta * rm * (-2.0 / (delta * delta) + c2);
                du[i - 1] += off;
                dl[i] += off;
            }
        }
        (g, dl, dm, du)
    };

    let mut energy = radial_energy(&f, eps);
    for _ in 0..200 {
        let (g, dl, dm, du) = grad_hess(&f);
        let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if gmax < 1e-11 * (1.0 + energy) {
            return Ok(energy);
        }
        // Thomas solve H step = -g, with a Levenberg shift fallback.
        let mut shift = 0.0;
        'newton: for _ in 0..20 {
            let mut c = vec![0.0; unknowns];
            let mut dvec = vec![0.0; unknowns];
            let mut ok = true;
            let mut denom = dm[0] + shift;
            if denom <= 0.0 {
                ok = false;
            } else {
                c[0] = du[0] / denom;
                dvec[0] = -g[0] / denom;
                for i in 1..unknowns {
                    denom = dm[i] + shift - dl[i] * c[i - 1];
                    if denom <= 0.0 {
                        ok = false;
                        break;
                    }
                    if i < unknowns - 1 {
                        c[i] = du[i] / denom;
                    }
                    dvec[i] = (-g[i] - dl[i] * dvec[i - 1]) / denom;
                }
            }
            if !ok {
                shift = if shift == 0.0 { 1.0 } else { shift * 10.0 };
                continue;
            }
            let mut step = vec![0.0; unknowns];
            step[unknowns - 1] = dvec[unknowns - 1];
            for i in (0..unknowns - 1).rev() {
                step[i] = dvec[i] - c[i] * step[i + 1];
            }
            // Backtracking on the energy.
            let mut t = 1.0;
            for _ in 0..40 {
                let mut trial = f.clone();
                for i in 0..unknowns {
                    trial[i + 1] += t * step[i];
                }
                let e_trial = radial_energy(&trial, eps);
                if e_trial < energy {
                    f = trial;
                    energy = e_trial;
                    break 'newton;
                }
                t *= 0.5;
            }
            shift = if shift == 0.0 { 1.0 } else { shift * 10.0 };
        }
        if shift > 1e12 {
            return Err(Error::CoreNewtonDiverged {
                eps,
                residual: gmax,
            });
        }
    }
    let (g, ..) = grad_hess(&f);
    let gmax = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if gmax < 1e-8 * (1.0 + energy) {
        Ok(energy)
    } else {
        Err(Error::CoreNewtonDiverged {
            eps,
            residual: gmax,
        })
    }
}
