//! Uniform-grid discretization of the unit square, field storage, and
//! the degree-k boundary/initial data.
//!
//! Fields are node-centered on the (n+1)×(n+1) lattice of [0,1]²,
//! stored row-major: index = j*(n+1) + i for the node (i*h, j*h).

use std::io::{BufRead, Write};

use crate::geometry::{self, Connection};
use crate::potential::{ModelParams, PotentialConstants};
use crate::{Error, Result};

/// Uniform square grid; the spacing is always derived from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 8, "grid must have at least 8 cells per side");
        Grid { n }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn nodes_per_side(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    #[inline]
    pub fn xy(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h(), j as f64 * self.h())
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// Boundary nodes in counterclockwise loop order, starting at (0, 0).
    pub fn boundary_loop(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        let mut loop_nodes = Vec::with_capacity(4 * n);
        for i in 0..n {
            loop_nodes.push((i, 0));
        }
        for j in 0..n {
            loop_nodes.push((n, j));
        }
        for i in 0..n {
            loop_nodes.push((n - i, n));
        }
        for j in 0..n {
            loop_nodes.push((0, n - j));
        }
        loop_nodes
    }
}

/// Q-tensor components and magnetization on the grid nodes.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub grid: Grid,
    pub q11: Vec<f64>,
    pub q12: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn zeros(grid: Grid) -> Self {
        let count = grid.node_count();
        FieldState {
            grid,
            q11: vec![0.0; count],
            q12: vec![0.0; count],
            m1: vec![0.0; count],
            m2: vec![0.0; count],
            time: 0.0,
        }
    }

    /// |Q| at a node.
    #[inline]
    pub fn q_norm(&self, idx: usize) -> f64 {
        (2.0 * (self.q11[idx] * self.q11[idx] + self.q12[idx] * self.q12[idx])).sqrt()
    }
}

/// The degree-k datum at an arbitrary point: the polar angle around the
/// center, shifted by -π/2; atan2(0, 0) = 0 at the center node.
#[inline]
pub fn datum_angle(x: f64, y: f64) -> f64 {
    f64::atan2(y - 0.5, x - 0.5) - std::f64::consts::FRAC_PI_2
}

/// Boundary datum values at a point: (q11, q12, m1, m2).
#[inline]
pub fn datum_at(x: f64, y: f64, k: i32, consts: &PotentialConstants) -> (f64, f64, f64, f64) {
    let theta = datum_angle(x, y);
    let kt = k as f64 * theta;
    let half = std::f64::consts::SQRT_2 / 2.0;
    (
        half * (2.0 * kt).cos(),
        half * (2.0 * kt).sin(),
        consts.lambda_star * kt.cos(),
        consts.lambda_star * kt.sin(),
    )
}

/// Dirichlet boundary data of degree k over the boundary loop, in loop
/// order. |M| = λ* and |Q| = 1 at every boundary node; the q-field
/// √2(Q11, Q12) winds 2k around the loop.
pub fn boundary_data(
    grid: &Grid,
    k: i32,
    consts: &PotentialConstants,
) -> Vec<((usize, usize), (f64, f64, f64, f64))> {
    grid.boundary_loop()
        .into_iter()
        .map(|(i, j)| {
            let (x, y) = grid.xy(i, j);
            ((i, j), datum_at(x, y, k, consts))
        })
        .collect()
}

/// The boundary formulas applied at every node; t = 0.
pub fn initial_condition(grid: Grid, k: i32, consts: &PotentialConstants) -> FieldState {
    let mut state = FieldState::zeros(grid);
    for j in 0..grid.nodes_per_side() {
        for i in 0..grid.nodes_per_side() {
            let (x, y) = grid.xy(i, j);
            let (q11, q12, m1, m2) = datum_at(x, y, k, consts);
            let idx = grid.idx(i, j);
            state.q11[idx] = q11;
            state.q12[idx] = q12;
            state.m1[idx] = m1;
            state.m2[idx] = m2;
        }
    }
    state
}

/// Builds a near-optimal state with prescribed defects and jump lines:
/// Q from the canonical harmonic angle field with |Q| truncated to
/// min(ρ/ε, 1)(1 + κ*ε) near each defect, M from the branch-cut
/// lifting at magnitude λ*, modulated by the tanh interface profile
/// across each connection segment.
pub fn seeded_state(
    grid: Grid,
    params: &ModelParams,
    consts: &PotentialConstants,
    defects: &[(f64, f64)],
    connection: &Connection,
) -> Result<FieldState> {
    let margin = 4.0 * grid.h();
    for &p in defects {
        if p.0 < margin || p.0 > 1.0 - margin || p.1 < margin || p.1 > 1.0 - margin {
            return Err(Error::PointNearBoundary { point: p, margin });
        }
    }
    let k = (defects.len() / 2) as i32;
    let angle = geometry::canonical_angle(defects, k, &grid)?;
    let director = geometry::sbv_lifting(&angle, connection, consts)?;

    let eps = params.eps;
    let sat = 1.0 + consts.kappa_star * eps;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut state = FieldState::zeros(grid);
    state.time = 0.0;
    for j in 0..grid.nodes_per_side() {
        for i in 0..grid.nodes_per_side() {
            let idx = grid.idx(i, j);
            let (x, y) = grid.xy(i, j);
            let rho = defects
                .iter()
                .map(|&(ax, ay)| ((x - ax).powi(2) + (y - ay).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            let qn = (rho / eps).min(1.0) * sat;
            let th = angle.theta[idx];
            state.q11[idx] = qn * th.cos() / sqrt2;
            state.q12[idx] = qn * th.sin() / sqrt2;
            // Interface profile across the nearest connection segment.
            let dist = connection
                .segments()
                .iter()
                .map(|&(a, b)| dist_point_segment((x, y), a, b))
                .fold(f64::INFINITY, f64::min);
            let modulation = (consts.lambda_star * (dist / eps) / sqrt2).tanh();
            state.m1[idx] = director.m1[idx] * modulation;
            state.m2[idx] = director.m2[idx] * modulation;
        }
    }
    // Boundary nodes carry the exact datum.
    for ((i, j), (q11, q12, m1, m2)) in boundary_data(&grid, k, consts) {
        let idx = grid.idx(i, j);
        state.q11[idx] = q11;
        state.q12[idx] = q12;
        state.m1[idx] = m1;
        state.m2[idx] = m2;
    }
    Ok(state)
}

pub(crate) fn dist_point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (px, py) = (p.0 - a.0, p.1 - a.1);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((px * dx + py * dy) / len_sq).clamp(0.0, 1.0)
    };
    let (cx, cy) = (px - t * dx, py - t * dy);
    (cx * cx + cy * cy).sqrt()
}

/// Winding number of a vector field along the boundary loop.
pub fn boundary_winding(grid: &Grid, vx: &[f64], vy: &[f64]) -> i64 {
    let loop_nodes = grid.boundary_loop();
    let mut total = 0.0;
    let mut prev = f64::atan2(
        vy[grid.idx(loop_nodes[0].0, loop_nodes[0].1)],
        vx[grid.idx(loop_nodes[0].0, loop_nodes[0].1)],
    );
    let first = prev;
    for &(i, j) in loop_nodes.iter().skip(1).chain(std::iter::once(&loop_nodes[0])) {
        let a = f64::atan2(vy[grid.idx(i, j)], vx[grid.idx(i, j)]);
        total += wrap_angle(a - prev);
        prev = a;
    }
    let _ = first;
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

/// Wraps an angle difference into (-π, π].
#[inline]
pub fn wrap_angle(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = d % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d <= -std::f64::consts::PI {
        d += two_pi;
    }
    d
}

/// Sign-preserving wrap to [-π, π]: unlike `wrap_angle`, satisfies
/// wrap(-d) = -wrap(d) including at d = ±π exactly. Winding sums must
/// use this variant so that an edge traversed in opposite directions
/// by two adjacent loops contributes cancelling amounts even when the
/// angle difference ties at exactly π (as happens for symmetric data
/// around a node).
pub fn wrap_angle_signed(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = d % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d < -std::f64::consts::PI {
        d += two_pi;
    }
    d
}

/// Writes the field CSV format: a header comment with the grid and
/// model metadata, then `x,y,q11,q12,m1,m2` rows in row-major order.
pub fn write_field_csv<W: Write>(
    w: &mut W,
    state: &FieldState,
    params: &ModelParams,
) -> std::io::Result<()> {
    let grid = &state.grid;
    writeln!(
        w,
        "# n={} h={:.17e} time={:.17e} beta={:.17e} eps={:.17e}",
        grid.n,
        grid.h(),
        state.time,
        params.beta,
        params.eps
    )?;
    for j in 0..grid.nodes_per_side() {
        for i in 0..grid.nodes_per_side() {
            let idx = grid.idx(i, j);
            let (x, y) = grid.xy(i, j);
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                x, y, state.q11[idx], state.q12[idx], state.m1[idx], state.m2[idx]
            )?;
        }
    }
    Ok(())
}

/// Reads the field CSV format; returns the state and the (beta, eps)
/// recorded in the header.
pub fn read_field_csv<R: BufRead>(r: R) -> Result<(FieldState, f64, f64)> {
    let mut lines = r.lines().enumerate();
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "empty field file"))?;
    let header = header?;
    if !header.starts_with('#') {
        return Err(parse_err(line_no + 1, 1, "missing header line"));
    }
    let mut n = None;
    let mut time = 0.0;
    let mut beta = f64::NAN;
    let mut eps = f64::NAN;
    for tok in header[1..].split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(1, 1, format!("malformed header token `{tok}`")))?;
        match key {
            "n" => {
                n = Some(value.parse::<usize>().map_err(|e| {
                    parse_err(1, 1, format!("bad n `{value}`: {e}"))
                })?)
            }
            "time" => time = parse_f64(value, 1)?,
            "beta" => beta = parse_f64(value, 1)?,
            "eps" => eps = parse_f64(value, 1)?,
            "h" => {} // derived from n
            _ => return Err(parse_err(1, 1, format!("unknown header key `{key}`"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(1, 1, "header missing n"))?;
    let grid = Grid::new(n);
    let mut state = FieldState::zeros(grid);
    state.time = time;
    let mut count = 0usize;
    for (line_no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(
                line_no + 1,
                1,
                format!("expected 6 comma-separated values, got {}", fields.len()),
            ));
        }
        if count >= grid.node_count() {
            return Err(parse_err(line_no + 1, 1, "too many rows for grid"));
        }
        state.q11[count] = parse_f64(fields[2], line_no + 1)?;
        state.q12[count] = parse_f64(fields[3], line_no + 1)?;
        state.m1[count] = parse_f64(fields[4], line_no + 1)?;
        state.m2[count] = parse_f64(fields[5], line_no + 1)?;
        count += 1;
    }
    if count != grid.node_count() {
        return Err(parse_err(
            0,
            0,
            format!("expected {} rows, got {count}", grid.node_count()),
        ));
    }
    Ok((state, beta, eps))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(line, 1, format!("bad float `{s}`: {e}")))
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}
