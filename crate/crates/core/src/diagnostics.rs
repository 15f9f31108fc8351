//! Discrete energies (total and decoupled split), per-plaquette winding
//! of the q-field, defect detection, the eigenframe decomposition of M,
//! and jump-set extraction.

use serde::Serialize;

use crate::fields::FieldState;
use crate::potential::{self, MValue, ModelParams, PotentialConstants, QValue};

/// Energy of a state under the cell quadrature: forward differences per
/// cell and four-corner averages of the potential terms.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    /// ½ ∫ |∇Q|².
    pub elastic_q: f64,
    /// (ε/2) ∫ |∇M|².
    pub elastic_m: f64,
    /// ε⁻² ∫ f_ε.
    pub potential: f64,
    pub total: f64,
    /// ∫ ½|∇Q|² + g_ε(|Q|) over cells with all corners |Q| ≥ ½.
    pub split_g: f64,
    /// ∫ (ε/2)|∇u|² + ε⁻¹ h(u) over the same cells, u the eigenframe
    /// components of M.
    pub split_mm: f64,
    /// total − split_g − split_mm.
    pub split_remainder: f64,
}

#[inline]
fn node_qm(state: &FieldState, idx: usize) -> (QValue, MValue) {
    (
        QValue {
            q11: state.q11[idx],
            q12: state.q12[idx],
        },
        MValue {
            m1: state.m1[idx],
            m2: state.m2[idx],
        },
    )
}

/// Eigenframe components of M at a node: u = (M·n, M·n⊥) with n the
/// director from the half-angle of (q11, q12). Sign is the per-node
/// principal branch; callers align signs where transport matters.
#[inline]
fn node_frame(state: &FieldState, idx: usize) -> (f64, f64, f64, f64) {
    let phi = 0.5 * f64::atan2(state.q12[idx], state.q11[idx]);
    let (nx, ny) = (phi.cos(), phi.sin());
    let u1 = state.m1[idx] * nx + state.m2[idx] * ny;
    let u2 = -state.m1[idx] * ny + state.m2[idx] * nx;
    (u1, u2, nx, ny)
}

/// ½ ∫ |∇Q|² restricted to the cells selected by the predicate
/// (arguments are the cell's lower-left indices).
pub fn elastic_q_over<F: FnMut(usize, usize) -> bool>(state: &FieldState, mut include: F) -> f64 {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let mut acc = 0.0;
    for j in 0..grid.n {
        for i in 0..grid.n {
            if !include(i, j) {
                continue;
            }
            let b = grid.idx(i, j);
            let dxq11 = state.q11[b + 1] - state.q11[b];
            let dyq11 = state.q11[b + np] - state.q11[b];
            let dxq12 = state.q12[b + 1] - state.q12[b];
            let dyq12 = state.q12[b + np] - state.q12[b];
            // h² · |d/h|² = |d|²; the spacing cancels.
            acc += dxq11 * dxq11 + dyq11 * dyq11 + dxq12 * dxq12 + dyq12 * dyq12;
        }
    }
    acc
}

/// Full energy breakdown. The `total` column is the Lyapunov functional
/// of the flow: its variational derivative matches `flow::rhs` exactly
/// on the same grid.
pub fn discrete_energy(
    state: &FieldState,
    params: &ModelParams,
    consts: &PotentialConstants,
) -> EnergyBreakdown {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let eps = params.eps;
    let h2 = grid.h() * grid.h();

    let mut elastic_q = 0.0;
    let mut elastic_m = 0.0;
    let mut pot = 0.0;
    let mut split_g = 0.0;
    let mut split_mm = 0.0;

    for j in 0..grid.n {
        for i in 0..grid.n {
            let b = grid.idx(i, j);
            let corners = [b, b + 1, b + np, b + np + 1];

            let dxq11 = state.q11[b + 1] - state.q11[b];
            let dyq11 = state.q11[b + np] - state.q11[b];
            let dxq12 = state.q12[b + 1] - state.q12[b];
            let dyq12 = state.q12[b + np] - state.q12[b];
            let eq = dxq11 * dxq11 + dyq11 * dyq11 + dxq12 * dxq12 + dyq12 * dyq12;
            elastic_q += eq;

            let dxm1 = state.m1[b + 1] - state.m1[b];
            let dym1 = state.m1[b + np] - state.m1[b];
            let dxm2 = state.m2[b + 1] - state.m2[b];
            let dym2 = state.m2[b + np] - state.m2[b];
            elastic_m += 0.5 * eps * (dxm1 * dxm1 + dym1 * dym1 + dxm2 * dxm2 + dym2 * dym2);

            let favg: f64 = corners
                .iter()
                .map(|&c| {
                    let (q, m) = node_qm(state, c);
                    potential::f_eps(&q, &m, params, consts)
                })
                .sum::<f64>()
                / 4.0;
            pot += h2 / (eps * eps) * favg;

            // Decoupled split on cells where the frame is defined.
            let good = corners.iter().all(|&c| state.q_norm(c) >= 0.5);
            if !good {
                continue;
            }
            let gavg: f64 = corners
                .iter()
                .map(|&c| potential::g_eps(state.q_norm(c), params, consts))
                .sum::<f64>()
                / 4.0;
            split_g += eq + h2 * gavg;

            // Frame components with sign transport from the base corner.
            let base = node_frame(state, corners[0]);
            let us: Vec<(f64, f64)> = corners
                .iter()
                .map(|&c| {
                    let f = node_frame(state, c);
                    if f.2 * base.2 + f.3 * base.3 < 0.0 {
                        (-f.0, -f.1)
                    } else {
                        (f.0, f.1)
                    }
                })
                .collect();
            let dxu1 = us[1].0 - us[0].0;
            let dyu1 = us[2].0 - us[0].0;
            let dxu2 = us[1].1 - us[0].1;
            let dyu2 = us[2].1 - us[0].1;
            let havg: f64 = us
                .iter()
                .map(|&(u1, u2)| potential::h(u1, u2, params))
                .sum::<f64>()
                / 4.0;
            split_mm += 0.5 * eps * (dxu1 * dxu1 + dyu1 * dyu1 + dxu2 * dxu2 + dyu2 * dyu2)
                + h2 / eps * havg;
        }
    }
    let total = elastic_q + elastic_m + pot;
    EnergyBreakdown {
        elastic_q,
        elastic_m,
        potential: pot,
        total,
        split_g,
        split_mm,
        split_remainder: total - split_g - split_mm,
    }
}

/// Per-plaquette winding of q = √2(q11, q12).
#[derive(Debug, Clone)]
pub struct WindingField {
    /// One entry per cell, row-major over the n×n cells.
    pub winding: Vec<i32>,
    /// Cells with a vanishing q at some corner, reported rather than
    /// silently zeroed.
    pub indeterminate: Vec<(usize, usize)>,
}

impl WindingField {
    pub fn total(&self) -> i64 {
        self.winding.iter().map(|&w| w as i64).sum()
    }
}

pub fn winding_field(state: &FieldState) -> WindingField {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let mut winding = vec![0i32; grid.n * grid.n];
    let mut indeterminate = Vec::new();
    for j in 0..grid.n {
        for i in 0..grid.n {
            let b = grid.idx(i, j);
            // Counterclockwise corner loop.
            let loop_idx = [b, b + 1, b + np + 1, b + np];
            if loop_idx
                .iter()
                .any(|&c| state.q11[c] == 0.0 && state.q12[c] == 0.0)
            {
                indeterminate.push((i, j));
                continue;
            }
            let angles: Vec<f64> = loop_idx
                .iter()
                .map(|&c| f64::atan2(state.q12[c], state.q11[c]))
                .collect();
            let mut total = 0.0;
            for w in 0..4 {
                total += crate::fields::wrap_angle_signed(angles[(w + 1) % 4] - angles[w]);
            }
            winding[j * grid.n + i] = (total / (2.0 * std::f64::consts::PI)).round() as i32;
        }
    }
    WindingField {
        winding,
        indeterminate,
    }
}

/// ∫ det ∇q by the forward-difference cell quadrature; concentrates at
/// π per unit winding for fields with saturated |q| away from cores.
pub fn jacobian_integral(state: &FieldState) -> f64 {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let mut acc = 0.0;
    for j in 0..grid.n {
        for i in 0..grid.n {
            let b = grid.idx(i, j);
            let dxq1 = state.q11[b + 1] - state.q11[b];
            let dyq1 = state.q11[b + np] - state.q11[b];
            let dxq2 = state.q12[b + 1] - state.q12[b];
            let dyq2 = state.q12[b + np] - state.q12[b];
            // q = √2 (q11, q12): the determinant carries the factor 2;
            // the h² cell area cancels the two 1/h differences.
            acc += 2.0 * (dxq1 * dyq2 - dxq2 * dyq1);
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct Defect {
    pub position: (f64, f64),
    pub q_winding: i32,
    /// q_winding / 2.
    pub q_charge: f64,
    /// Max distance from the centroid to a core node.
    pub core_radius: f64,
    /// Set when no enclosing loop with saturated |q| fits inside the
    /// domain around this core.
    pub boundary_adjacent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectSet {
    pub defects: Vec<Defect>,
}

impl DefectSet {
    pub fn total_winding(&self) -> i64 {
        self.defects.iter().map(|d| d.q_winding as i64).sum()
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.defects.iter().map(|d| d.position).collect()
    }
}

/// Clusters low-|Q| nodes into defect cores and reads each core's
/// charge from the q-winding on the smallest enclosing saturated loop.
/// The detection threshold is `threshold·(1 + κ*ε)` (the far-field |Q|
/// level), default threshold 0.5.
pub fn detect_defects(
    state: &FieldState,
    params: &ModelParams,
    consts: &PotentialConstants,
    threshold: f64,
) -> DefectSet {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let cut = threshold * (1.0 + consts.kappa_star * params.eps);
    let mut visited = vec![false; grid.node_count()];
    let mut defects = Vec::new();

    for j0 in 0..np {
        for i0 in 0..np {
            let start = grid.idx(i0, j0);
            if visited[start] || state.q_norm(start) >= cut {
                continue;
            }
            // BFS over the low-|Q| component.
            let mut component = Vec::new();
            let mut queue = std::collections::VecDeque::new();
            visited[start] = true;
            queue.push_back((i0, j0));
            while let Some((i, j)) = queue.pop_front() {
                component.push((i, j));
                for (ni, nj) in [
                    (i.wrapping_sub(1), j),
                    (i + 1, j),
                    (i, j.wrapping_sub(1)),
                    (i, j + 1),
                ] {
                    if ni >= np || nj >= np {
                        continue;
                    }
                    let nidx = grid.idx(ni, nj);
                    if !visited[nidx] && state.q_norm(nidx) < cut {
                        visited[nidx] = true;
                        queue.push_back((ni, nj));
                    }
                }
            }
            // |Q|-deficit-weighted centroid.
            let mut wsum = 0.0;
            let (mut cx, mut cy) = (0.0, 0.0);
            for &(i, j) in &component {
                let w = (cut - state.q_norm(grid.idx(i, j))).max(1e-12);
                let (x, y) = grid.xy(i, j);
                wsum += w;
                cx += w * x;
                cy += w * y;
            }
            cx /= wsum;
            cy /= wsum;
            let core_radius = component
                .iter()
                .map(|&(i, j)| {
                    let (x, y) = grid.xy(i, j);
                    ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
                })
                .fold(0.0f64, f64::max);

            let (q_winding, boundary_adjacent) =
                enclosing_loop_winding(state, (cx, cy), cut, &component);
            defects.push(Defect {
                position: (cx, cy),
                q_winding,
                q_charge: q_winding as f64 / 2.0,
                core_radius,
                boundary_adjacent,
            });
        }
    }
    DefectSet { defects }
}

/// Winding of q on the smallest square grid loop around the centroid
/// whose nodes all have |q| ≥ cut and which encloses the component.
fn enclosing_loop_winding(
    state: &FieldState,
    center: (f64, f64),
    cut: f64,
    component: &[(usize, usize)],
) -> (i32, bool) {
    let grid = &state.grid;
    let ci = (center.0 * grid.n as f64).round() as isize;
    let cj = (center.1 * grid.n as f64).round() as isize;
    let max_ext = component
        .iter()
        .map(|&(i, j)| {
            let di = (i as isize - ci).abs();
            let dj = (j as isize - cj).abs();
            di.max(dj)
        })
        .max()
        .unwrap_or(0);
    for half in (max_ext + 1)..(grid.n as isize) {
        let mut nodes = Vec::new();
        for di in -half..half {
            nodes.push((ci + di, cj - half));
        }
        for dj in -half..half {
            nodes.push((ci + half, cj + dj));
        }
        for di in -half..half {
            nodes.push((ci + half - di, cj + half));
        }
        for dj in -half..half {
            nodes.push((ci - half, cj + half - dj));
        }
        if nodes
            .iter()
            .any(|&(i, j)| i < 0 || j < 0 || i > grid.n as isize || j > grid.n as isize)
        {
            return (0, true);
        }
        let saturated = nodes
            .iter()
            .all(|&(i, j)| state.q_norm(grid.idx(i as usize, j as usize)) >= cut);
        if !saturated {
            continue;
        }
        let mut total = 0.0;
        for w in 0..nodes.len() {
            let (i0, j0) = nodes[w];
            let (i1, j1) = nodes[(w + 1) % nodes.len()];
            let a0 = f64::atan2(
                state.q12[grid.idx(i0 as usize, j0 as usize)],
                state.q11[grid.idx(i0 as usize, j0 as usize)],
            );
            let a1 = f64::atan2(
                state.q12[grid.idx(i1 as usize, j1 as usize)],
                state.q11[grid.idx(i1 as usize, j1 as usize)],
            );
            total += crate::fields::wrap_angle_signed(a1 - a0);
        }
        return ((total / (2.0 * std::f64::consts::PI)).round() as i32, false);
    }
    (0, true)
}

/// Eigenframe components of M where the frame is defined (|Q| ≥ ½).
/// Signs are per-node arbitrary; consumers must use sign-invariant
/// quantities.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub defined: Vec<bool>,
}

pub fn frame_decompose(state: &FieldState) -> FrameField {
    let count = state.grid.node_count();
    let mut u1 = vec![0.0; count];
    let mut u2 = vec![0.0; count];
    let mut defined = vec![false; count];
    for idx in 0..count {
        if state.q_norm(idx) < 0.5 {
            continue;
        }
        let (a, b, ..) = node_frame(state, idx);
        u1[idx] = a;
        u2[idx] = b;
        defined[idx] = true;
    }
    FrameField { u1, u2, defined }
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpComponent {
    /// Midpoints of the crossing edges.
    pub midpoints: Vec<(f64, f64)>,
    /// (number of crossings)·h.
    pub length_raw: f64,
    /// Staircase-corrected estimate: raw · π/4.
    pub length_corrected: f64,
    /// The two most separated midpoints.
    pub endpoints: ((f64, f64), (f64, f64)),
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpSet {
    pub components: Vec<JumpComponent>,
}

/// Extracts the magnetization jump set: grid edges where the
/// director-relative sign of M flips, with the director transported
/// consistently across each edge. Edges with both endpoints inside a
/// detected defect core are excluded (the frame itself rotates there).
pub fn extract_jump_set(state: &FieldState, defects: &DefectSet) -> JumpSet {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let h = grid.h();
    let in_core = |x: f64, y: f64| {
        defects.defects.iter().any(|d| {
            let r = ((x - d.position.0).powi(2) + (y - d.position.1).powi(2)).sqrt();
            r <= d.core_radius + h
        })
    };
    let mut midpoints = Vec::new();
    for j in 0..np {
        for i in 0..np {
            let idx = grid.idx(i, j);
            if state.q_norm(idx) < 0.5 {
                continue;
            }
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni >= np || nj >= np {
                    continue;
                }
                let nidx = grid.idx(ni, nj);
                if state.q_norm(nidx) < 0.5 {
                    continue;
                }
                let (xa, ya) = grid.xy(i, j);
                let (xb, yb) = grid.xy(ni, nj);
                if in_core(xa, ya) && in_core(xb, yb) {
                    continue;
                }
                let fa = node_frame(state, idx);
                let fb = node_frame(state, nidx);
                // Transport: pick the representative of n_b nearest n_a.
                let aligned = fa.2 * fb.2 + fa.3 * fb.3 >= 0.0;
                let sa = fa.0;
                let sb = if aligned { fb.0 } else { -fb.0 };
                if sa * sb < 0.0 {
                    midpoints.push(((xa + xb) / 2.0, (ya + yb) / 2.0));
                }
            }
        }
    }

    // Cluster crossings into components by midpoint proximity: adjacent
    // crossing edges have midpoints at distance ≤ h.
    let link = 1.2 * h;
    let mut assigned = vec![usize::MAX; midpoints.len()];
    let mut components: Vec<Vec<(f64, f64)>> = Vec::new();
    for s in 0..midpoints.len() {
        if assigned[s] != usize::MAX {
            continue;
        }
        let cid = components.len();
        let mut stack = vec![s];
        assigned[s] = cid;
        let mut members = Vec::new();
        while let Some(a) = stack.pop() {
            members.push(midpoints[a]);
            for b in 0..midpoints.len() {
                if assigned[b] != usize::MAX {
                    continue;
                }
                let d = ((midpoints[a].0 - midpoints[b].0).powi(2)
                    + (midpoints[a].1 - midpoints[b].1).powi(2))
                .sqrt();
                if d <= link {
                    assigned[b] = cid;
                    stack.push(b);
                }
            }
        }
        components.push(members);
    }

    let components = components
        .into_iter()
        .map(|mut members| {
            let raw = members.len() as f64 * h;
            // Terminate components at the defects they abut: the frame
            // is undefined inside a core, so the discrete crossing
            // edges stop at the rim even though the jump line ends at
            // the defect itself. A defect whose core touches the
            // component is appended as a member (it does not count
            // toward the crossing length).
            for d in &defects.defects {
                let reach = d.core_radius + 2.0 * h;
                let touches = members.iter().any(|&(x, y)| {
                    ((x - d.position.0).powi(2) + (y - d.position.1).powi(2)).sqrt() <= reach
                });
                if touches {
                    members.push(d.position);
                }
            }
            let mut endpoints = (members[0], members[0]);
            let mut best = -1.0;
            for a in 0..members.len() {
                for b in a..members.len() {
                    let d = ((members[a].0 - members[b].0).powi(2)
                        + (members[a].1 - members[b].1).powi(2))
                    .sqrt();
                    if d > best {
                        best = d;
                        endpoints = (members[a], members[b]);
                    }
                }
            }
            JumpComponent {
                length_raw: raw,
                length_corrected: raw * std::f64::consts::FRAC_PI_4,
                endpoints,
                midpoints: members,
            }
        })
        .collect();
    JumpSet { components }
}

/// Full analysis record for a state, serialized by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub energy: EnergyBreakdown,
    pub defects: Vec<Defect>,
    pub jump_components: Vec<JumpComponent>,
    pub total_winding: i64,
    pub indeterminate_plaquettes: usize,
}

pub fn analyze(
    state: &FieldState,
    params: &ModelParams,
    consts: &PotentialConstants,
) -> AnalysisSummary {
    let energy = discrete_energy(state, params, consts);
    let defects = detect_defects(state, params, consts, 0.5);
    let jumps = extract_jump_set(state, &defects);
    let wf = winding_field(state);
    AnalysisSummary {
        energy,
        total_winding: wf.total(),
        indeterminate_plaquettes: wf.indeterminate.len(),
        jump_components: jumps.components,
        defects: defects.defects,
    }
}
