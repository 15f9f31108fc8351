//! Time integration of the coupled (Q, M) L²-gradient flow to steady
//! state: Crank–Nicolson in time, five-point Laplacians in space, the
//! implicit constant-coefficient part solved by conjugate gradients
//! inside a damped Picard fixed-point loop, Dirichlet data re-pinned
//! after every inner solve.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics;
use crate::fields::FieldState;
use crate::potential::{self, MValue, ModelParams, PotentialConstants, QValue};
use crate::solver;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub params: ModelParams,
    pub tau: f64,
    pub t_end: f64,
    /// Requested snapshot times; each is emitted at the nearest step.
    pub snapshot_times: Vec<f64>,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linsolve_tol: f64,
    /// Steady-state threshold on max_update/τ.
    pub steady_tol: f64,
}

impl FlowConfig {
    pub fn new(params: ModelParams) -> Self {
        FlowConfig {
            params,
            tau: 1e-3,
            t_end: 1.0,
            snapshot_times: Vec::new(),
            picard_tol: 1e-10,
            picard_max: 50,
            linsolve_tol: 1e-10,
            steady_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub time: f64,
    pub energy_total: f64,
    pub energy_delta: f64,
    pub picard_iters: usize,
    /// Max-norm of the state update over all four fields.
    pub max_update: f64,
}

/// The four time-derivative fields of the gradient flow; boundary rows
/// are zero (Dirichlet data does not move).
pub struct Rates {
    pub q11: Vec<f64>,
    pub q12: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Rates {
    fn zeros(count: usize) -> Self {
        Rates {
            q11: vec![0.0; count],
            q12: vec![0.0; count],
            m1: vec![0.0; count],
            m2: vec![0.0; count],
        }
    }
}

/// Reaction (non-Laplacian) part of the rates at a node, from the
/// potential gradient: (−ε⁻²/(2η₁))∂f/∂Q and (−ε⁻²/η₂)∂f/∂M.
#[inline]
fn reaction_at(
    q11: f64,
    q12: f64,
    m1: f64,
    m2: f64,
    params: &ModelParams,
) -> (f64, f64, f64, f64) {
    let (dq, dm) = potential::grad_f_eps(
        &QValue { q11, q12 },
        &MValue { m1, m2 },
        params,
    );
    let inv_e2 = 1.0 / (params.eps * params.eps);
    let cq = -inv_e2 / (2.0 * params.eta1);
    let cm = -inv_e2 / params.eta2;
    (cq * dq.q11, cq * dq.q12, cm * dm.m1, cm * dm.m2)
}

/// Diffusivities of the four fields: Q components diffuse at 1/η₁,
/// M components at ε/η₂ (both 1 at the default η₁ = 1, η₂ = ε).
#[inline]
fn diffusivities(params: &ModelParams) -> (f64, f64) {
    (1.0 / params.eta1, params.eps / params.eta2)
}

/// Full right-hand side of the flow: diffusivity·Δ(field) + reaction,
/// with the five-point Laplacian and zero boundary rows.
pub fn rhs(state: &FieldState, params: &ModelParams) -> Rates {
    let grid = &state.grid;
    let np = grid.nodes_per_side();
    let inv_h2 = (grid.n as f64) * (grid.n as f64);
    let (dq, dm) = diffusivities(params);
    let mut rates = Rates::zeros(grid.node_count());
    for j in 1..grid.n {
        for i in 1..grid.n {
            let idx = grid.idx(i, j);
            let lap = |v: &[f64]| {
                (v[idx - 1] + v[idx + 1] + v[idx - np] + v[idx + np] - 4.0 * v[idx]) * inv_h2
            };
            let (rq11, rq12, rm1, rm2) = reaction_at(
                state.q11[idx],
                state.q12[idx],
                state.m1[idx],
                state.m2[idx],
                params,
            );
            rates.q11[idx] = dq * lap(&state.q11) + rq11;
            rates.q12[idx] = dq * lap(&state.q12) + rq12;
            rates.m1[idx] = dm * lap(&state.m1) + rm1;
            rates.m2[idx] = dm * lap(&state.m2) + rm2;
        }
    }
    rates
}

struct PicardOutcome {
    iters: usize,
    residual: f64,
    converged: bool,
}

/// One Crank–Nicolson solve advancing `state` by `tau` in place.
fn cn_substep(
    state: &mut FieldState,
    config: &FlowConfig,
    tau: f64,
) -> PicardOutcome {
    let params = &config.params;
    let grid = state.grid;
    let np = grid.nodes_per_side();
    let count = grid.node_count();
    let inv_h2 = (grid.n as f64) * (grid.n as f64);
    let (diff_q, diff_m) = diffusivities(params);

    let old = [
        state.q11.clone(),
        state.q12.clone(),
        state.m1.clone(),
        state.m2.clone(),
    ];
    // Explicit halves: u^n + (τ/2)·D·Lap(u^n), per field.
    let coeffs = [diff_q, diff_q, diff_m, diff_m];
    let mut explicit = Vec::with_capacity(4);
    for (f, &c) in old.iter().zip(&coeffs) {
        let mut e = f.clone();
        for j in 1..grid.n {
            for i in 1..grid.n {
                let idx = grid.idx(i, j);
                let lap =
                    (f[idx - 1] + f[idx + 1] + f[idx - np] + f[idx + np] - 4.0 * f[idx]) * inv_h2;
                e[idx] += 0.5 * tau * c * lap;
            }
        }
        explicit.push(e);
    }

    // Picard loop on the implicit system, with adaptive damping: the
    // raw fixed-point map can expand for small ε, where the reaction
    // Lipschitz constant times τ/ε² exceeds 1.
    let mut cur = old.clone();
    let mut omega = 1.0f64;
    let mut prev_diff = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    for it in 0..config.picard_max {
        iters = it + 1;
        // Reaction at the half-sum of the old state and current iterate.
        let mut b = explicit.clone();
        for idx in 0..count {
            let (rq11, rq12, rm1, rm2) = reaction_at(
                0.5 * (old[0][idx] + cur[0][idx]),
                0.5 * (old[1][idx] + cur[1][idx]),
                0.5 * (old[2][idx] + cur[2][idx]),
                0.5 * (old[3][idx] + cur[3][idx]),
                params,
            );
            b[0][idx] += tau * rq11;
            b[1][idx] += tau * rq12;
            b[2][idx] += tau * rm1;
            b[3][idx] += tau * rm2;
        }
        let mut next = cur.clone();
        // The four implicit solves are independent; boundary rows stay
        // at the Dirichlet data carried by the state (cg_solve never
        // touches them). Results are deterministic per field, so the
        // parallelism does not perturb bit-stability.
        next.par_iter_mut().enumerate().for_each(|(f, nf)| {
            let c = 0.5 * tau * coeffs[f];
            let gc = grid;
            solver::cg_solve(
                &grid,
                move |x, out| solver::apply_helmholtz(&gc, c, x, out),
                &b[f],
                nf,
                config.linsolve_tol,
                20 * grid.n * grid.n,
            );
        });
        let mut diff = 0.0f64;
        for f in 0..4 {
            for idx in 0..count {
                diff = diff.max((next[f][idx] - cur[f][idx]).abs());
            }
        }
        residual = diff;
        if diff < config.picard_tol {
            cur = next;
            return {
                state.q11 = cur[0].clone();
                state.q12 = cur[1].clone();
                state.m1 = cur[2].clone();
                state.m2 = cur[3].clone();
                state.time += tau;
                PicardOutcome {
                    iters,
                    residual,
                    converged: true,
                }
            };
        }
        if diff > 0.9 * prev_diff {
            omega = (omega * 0.5).max(1.0 / 16.0);
        }
        prev_diff = diff;
        for f in 0..4 {
            for idx in 0..count {
                cur[f][idx] = (1.0 - omega) * cur[f][idx] + omega * next[f][idx];
            }
        }
    }
    PicardOutcome {
        iters,
        residual,
        converged: false,
    }
}

/// Advances the state by the configured τ; on Picard failure the step
/// is retried with 2, 4, then 8 substeps of τ/2, τ/4, τ/8.
pub fn step(state: &mut FieldState, config: &FlowConfig, consts: &PotentialConstants) -> Result<StepReport> {
    let energy_before = diagnostics::discrete_energy(state, &config.params, consts).total;
    let before = [
        state.q11.clone(),
        state.q12.clone(),
        state.m1.clone(),
        state.m2.clone(),
    ];
    let time_before = state.time;

    let mut halvings = 0usize;
    let mut last_residual;
    loop {
        let nsub = 1usize << halvings;
        let sub_tau = config.tau / nsub as f64;
        let mut total_iters = 0;
        let mut failed = None;
        for _ in 0..nsub {
            let outcome = cn_substep(state, config, sub_tau);
            total_iters += outcome.iters;
            if !outcome.converged {
                failed = Some(outcome.residual);
                break;
            }
        }
        match failed {
            None => {
                let mut max_update = 0.0f64;
                for (new, old) in [
                    (&state.q11, &before[0]),
                    (&state.q12, &before[1]),
                    (&state.m1, &before[2]),
                    (&state.m2, &before[3]),
                ] {
                    for idx in 0..new.len() {
                        max_update = max_update.max((new[idx] - old[idx]).abs());
                    }
                }
                let energy_after =
                    diagnostics::discrete_energy(state, &config.params, consts).total;
                return Ok(StepReport {
                    time: state.time,
                    energy_total: energy_after,
                    energy_delta: energy_after - energy_before,
                    picard_iters: total_iters,
                    max_update,
                });
            }
            Some(residual) => {
                last_residual = residual;
                // Roll back and retry with finer substeps.
                state.q11 = before[0].clone();
                state.q12 = before[1].clone();
                state.m1 = before[2].clone();
                state.m2 = before[3].clone();
                state.time = time_before;
                halvings += 1;
                if halvings > 3 {
                    return Err(Error::PicardFailure {
                        time: time_before,
                        halvings: (halvings - 1) as u32,
                        residual: last_residual,
                    });
                }
            }
        }
    }
}

pub struct FlowResult {
    pub final_state: FieldState,
    /// (requested time, state at the nearest step).
    pub snapshots: Vec<(f64, FieldState)>,
    pub reports: Vec<StepReport>,
    /// True when the run ended on the steady-state criterion rather
    /// than on t_end.
    pub reached_steady: bool,
}

/// Integrates to t_end or until max_update/τ drops below steady_tol.
pub fn run(config: &FlowConfig, initial: FieldState, consts: &PotentialConstants) -> Result<FlowResult> {
    let mut state = initial;
    let mut reports = Vec::new();
    let mut snapshots = Vec::new();
    let mut snap_iter = config.snapshot_times.iter().copied().peekable();
    let mut reached_steady = false;

    if let Some(&t) = snap_iter.peek() {
        if t <= state.time {
            snapshots.push((t, state.clone()));
            snap_iter.next();
        }
    }
    while state.time < config.t_end - 0.5 * config.tau {
        let report = step(&mut state, config, consts)?;
        while let Some(&t) = snap_iter.peek() {
            // Snapshot at the nearest step: emit once the step midpoint
            // passes the requested time.
            if state.time + 0.5 * config.tau >= t {
                snapshots.push((t, state.clone()));
                snap_iter.next();
            } else {
                break;
            }
        }
        let steady = report.max_update / config.tau < config.steady_tol;
        reports.push(report);
        if steady {
            reached_steady = true;
            break;
        }
    }
    Ok(FlowResult {
        final_state: state,
        snapshots,
        reports,
        reached_steady,
    })
}
