//! The bulk potential, its minimizing constants, gradient, and the
//! auxiliary scalar functions entering the split form of the energy.
//!
//! All quantities are dimensionless. The potential is
//!
//! ```text
//! f(Q, M) = ¼(|Q|²-1)² + (ε/4)(|M|²-1)² - βε (QM·M) + κ_ε
//! ```
//!
//! with `κ_ε` fixed so that `inf f = 0`. Q-tensors are stored through
//! their two independent components: `Q = [[q11, q12], [q12, -q11]]`,
//! so `|Q|² = 2(q11² + q12²)`.

use crate::{Error, Result};

/// Physical model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Coupling strength between Q and M, > 0 (0 is the decoupled limit).
    pub beta: f64,
    /// Elastic/coherence parameter, > 0.
    pub eps: f64,
    /// Friction coefficient of the Q equation.
    pub eta1: f64,
    /// Friction coefficient of the M equation.
    pub eta2: f64,
}

impl ModelParams {
    /// Reference parameters: eta1 = 1, eta2 = eps.
    pub fn new(beta: f64, eps: f64) -> Self {
        assert!(beta >= 0.0 && eps > 0.0, "beta >= 0 and eps > 0 required");
        ModelParams {
            beta,
            eps,
            eta1: 1.0,
            eta2: eps,
        }
    }
}

/// Constants derived from the potential minimization.
#[derive(Debug, Clone, Copy)]
pub struct PotentialConstants {
    /// Root X of the cubic X(X - 1 - β²ε)² = β²ε²/2 with X > 1 + β²ε.
    pub x_eps: f64,
    /// √X, the optimal |Q|.
    pub s_eps: f64,
    /// Optimal |M|.
    pub lambda_eps: f64,
    /// Additive normalizing constant of the potential.
    pub kappa_eps: f64,
    /// κ* = β(√2β + 1)/(2√2).
    pub kappa_star: f64,
    /// Interface cost c_β = (2√2/3)(√2β + 1)^{3/2}.
    pub c_beta: f64,
    /// λ* = (√2β + 1)^{1/2}, the limiting |M|.
    pub lambda_star: f64,
}

/// Q-tensor value, components of [[q11, q12], [q12, -q11]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValue {
    pub q11: f64,
    pub q12: f64,
}

impl QValue {
    pub fn norm_sq(&self) -> f64 {
        2.0 * (self.q11 * self.q11 + self.q12 * self.q12)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Magnetization value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MValue {
    pub m1: f64,
    pub m2: f64,
}

impl MValue {
    pub fn norm_sq(&self) -> f64 {
        self.m1 * self.m1 + self.m2 * self.m2
    }
}

/// Solves X(X - 1 - β²ε)² = β²ε²/2 for the unique root X > 1 + β²ε.
///
/// Bisection on a guaranteed bracket followed by Newton polish; the
/// cubic is strictly increasing on the bracket. Returns 1 for β = 0
/// (the coupling-free degenerate limit).
pub fn solve_x_eps(params: &ModelParams) -> Result<f64> {
    let (beta, eps) = (params.beta, params.eps);
    if beta == 0.0 {
        return Ok(1.0);
    }
    let b2e = beta * beta * eps;
    let rhs = beta * beta * eps * eps / 2.0;
    let p = |x: f64| x * (x - 1.0 - b2e) * (x - 1.0 - b2e) - rhs;

    let mut lo = 1.0 + b2e;
    let mut hi = (2.0f64).max(1.0 + b2e + 2.0 * beta * eps);
    // P(hi) >= 4β²ε²(1+β²ε) - β²ε²/2 > 0, so the bracket is valid.
    debug_assert!(p(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    // Newton polish.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..60 {
        let r = p(x);
        let dp = (x - 1.0 - b2e) * (3.0 * x - 1.0 - b2e);
        if dp <= 0.0 {
            break;
        }
        let step = r / dp;
        x -= step;
        if step.abs() < 1e-16 * x.abs() {
            break;
        }
    }
    if p(x).abs() > 1e-12 {
        return Err(Error::RootSolve { beta, eps });
    }
    Ok(x)
}

/// Computes all derived potential constants for the given parameters.
///
/// `kappa_eps` is evaluated at the exact minimizer `|M| = λ_ε`,
/// `Q = √2 s_ε (M⊗M/λ_ε² - I/2)`, not from the small-ε expansion.
pub fn potential_constants(params: &ModelParams) -> Result<PotentialConstants> {
    let (beta, eps) = (params.beta, params.eps);
    let sqrt2 = std::f64::consts::SQRT_2;
    let lam_star_sq = sqrt2 * beta + 1.0;
    let kappa_star = beta * lam_star_sq / (2.0 * sqrt2);
    let c_beta = (2.0 * sqrt2 / 3.0) * lam_star_sq.powf(1.5);
    let lambda_star = lam_star_sq.sqrt();

    if beta == 0.0 {
        return Ok(PotentialConstants {
            x_eps: 1.0,
            s_eps: 1.0,
            lambda_eps: 1.0,
            kappa_eps: 0.0,
            kappa_star: 0.0,
            c_beta,
            lambda_star: 1.0,
        });
    }

    let x_eps = solve_x_eps(params)?;
    let s_eps = x_eps.sqrt();
    let lambda_eps_sq = (x_eps - 1.0) / (x_eps - 1.0 - beta * beta * eps);
    let lambda_eps = lambda_eps_sq.sqrt();
    let kappa_eps = -0.25 * (x_eps - 1.0) * (x_eps - 1.0)
        - 0.25 * eps * (lambda_eps_sq - 1.0) * (lambda_eps_sq - 1.0)
        + beta * eps / sqrt2 * s_eps * lambda_eps_sq;

    Ok(PotentialConstants {
        x_eps,
        s_eps,
        lambda_eps,
        kappa_eps,
        kappa_star,
        c_beta,
        lambda_star,
    })
}

/// QM·M for the stored component representation.
#[inline]
pub fn qmm(q: &QValue, m: &MValue) -> f64 {
    q.q11 * (m.m1 * m.m1 - m.m2 * m.m2) + 2.0 * q.q12 * m.m1 * m.m2
}

/// The potential f(Q, M).
#[inline]
pub fn f_eps(q: &QValue, m: &MValue, params: &ModelParams, consts: &PotentialConstants) -> f64 {
    let qn2 = q.norm_sq();
    let mn2 = m.norm_sq();
    0.25 * (qn2 - 1.0) * (qn2 - 1.0)
        + 0.25 * params.eps * (mn2 - 1.0) * (mn2 - 1.0)
        - params.beta * params.eps * qmm(q, m)
        + consts.kappa_eps
}

/// Gradient of f with respect to (q11, q12, m1, m2).
#[inline]
pub fn grad_f_eps(q: &QValue, m: &MValue, params: &ModelParams) -> (QValue, MValue) {
    let be = params.beta * params.eps;
    let qn2 = q.norm_sq();
    let mn2 = m.norm_sq();
    let dq = QValue {
        q11: 2.0 * (qn2 - 1.0) * q.q11 - be * (m.m1 * m.m1 - m.m2 * m.m2),
        q12: 2.0 * (qn2 - 1.0) * q.q12 - 2.0 * be * m.m1 * m.m2,
    };
    let dm = MValue {
        m1: params.eps * (mn2 - 1.0) * m.m1 - 2.0 * be * (q.q11 * m.m1 + q.q12 * m.m2),
        m2: params.eps * (mn2 - 1.0) * m.m2 - 2.0 * be * (q.q12 * m.m1 - q.q11 * m.m2),
    };
    (dq, dm)
}

/// g(|Q|) = ¼ε⁻²(|Q|²-1)² - (2κ*/ε)(|Q|-1) + κ*², the Q-part of the
/// split energy. Non-negative for all |Q| >= 0.
#[inline]
pub fn g_eps(q_norm: f64, params: &ModelParams, consts: &PotentialConstants) -> f64 {
    let eps = params.eps;
    let t = q_norm * q_norm - 1.0;
    0.25 * t * t / (eps * eps) - 2.0 * consts.kappa_star / eps * (q_norm - 1.0)
        + consts.kappa_star * consts.kappa_star
}

/// h(u) = ¼(|u|²-1)² - (β/√2)(u1²-u2²) + (β²+√2β)/2, the Modica-Mortola
/// well of the frame-relative magnetization. Zero exactly at (±λ*, 0).
#[inline]
pub fn h(u1: f64, u2: f64, params: &ModelParams) -> f64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    let beta = params.beta;
    let un2 = u1 * u1 + u2 * u2;
    0.25 * (un2 - 1.0) * (un2 - 1.0) - beta / sqrt2 * (u1 * u1 - u2 * u2)
        + 0.5 * (beta * beta + sqrt2 * beta)
}

/// H(u1) = √(2 h(u1, 0)) = (1/√2)|√2β + 1 - u1²|.
#[inline]
pub fn h_profile(u1: f64, params: &ModelParams) -> f64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    (sqrt2 * params.beta + 1.0 - u1 * u1).abs() / sqrt2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    /// Independent bisection oracle for the cubic, pure midpoint halving.
    fn x_eps_bisect_oracle(beta: f64, eps: f64) -> f64 {
        let b2e = beta * beta * eps;
        let rhs = beta * beta * eps * eps / 2.0;
        let p = |x: f64| x * (x - 1.0 - b2e).powi(2) - rhs;
        let (mut lo, mut hi) = (1.0 + b2e, 2.0f64.max(1.0 + b2e + 2.0 * beta * eps));
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn x_eps_degenerate_beta_zero() {
        let params = ModelParams::new(0.0, 0.1);
        assert_eq!(solve_x_eps(&params).unwrap(), 1.0);
    }

    #[test]
    fn x_eps_beta1_eps005() {
        let params = ModelParams::new(1.0, 0.05);
        let x = solve_x_eps(&params).unwrap();
        let oracle = x_eps_bisect_oracle(1.0, 0.05);
        assert!((x - oracle).abs() < 1e-13, "x={x} oracle={oracle}");
        // Expansion 1 + (1/√2)(√2β+1)βε - ¼(√2β+1)β²ε² = 1 + 0.085355... - 0.001509...
        assert!((x - 1.0838).abs() < 5e-4, "x={x}");
    }

    #[test]
    fn x_eps_small_eps_expansion() {
        // X_ε - 1 ~ (1/√2)(√2β+1)βε as ε → 0.
        let beta = 1.7;
        let lead = (SQRT2 * beta + 1.0) * beta / SQRT2;
        let mut prev_rel = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let x = solve_x_eps(&ModelParams::new(beta, eps)).unwrap();
            let rel = ((x - 1.0) / (lead * eps) - 1.0).abs();
            assert!(rel < prev_rel);
            prev_rel = rel;
        }
        assert!(prev_rel < 1e-3);
    }

    #[test]
    fn constants_beta1() {
        let c = potential_constants(&ModelParams::new(1.0, 0.05)).unwrap();
        assert!((c.kappa_star - 0.8535534).abs() < 1e-6);
        assert!((c.c_beta - 3.53670).abs() < 1e-4);
        assert!((c.lambda_star - 1.5537740).abs() < 1e-6);
        // Cross-check c_beta by quadrature of ∫√(2h(u,0))du over [0, λ*].
        let params = ModelParams::new(1.0, 0.05);
        let n = 20_000;
        let du = c.lambda_star / n as f64;
        let mut integral = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * du;
            integral += (2.0 * h(u, 0.0, &params)).sqrt() * du;
        }
        assert!((2.0 * integral - c.c_beta).abs() < 1e-6);
    }

    #[test]
    fn constants_beta_zero() {
        let c = potential_constants(&ModelParams::new(0.0, 0.03)).unwrap();
        assert_eq!(c.kappa_eps, 0.0);
        assert_eq!(c.lambda_star, 1.0);
        assert_eq!(c.kappa_star, 0.0);
    }

    #[test]
    fn kappa_eps_expansion() {
        // |κ_ε - ½(β²+√2β)ε - κ*²ε²| / ε² decreases toward 0.
        let beta = 1.0;
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let c = potential_constants(&ModelParams::new(beta, eps)).unwrap();
            let lead = 0.5 * (beta * beta + SQRT2 * beta) * eps
                + c.kappa_star * c.kappa_star * eps * eps;
            let rel = (c.kappa_eps - lead).abs() / (eps * eps);
            assert!(rel < prev, "eps={eps} rel={rel} prev={prev}");
            prev = rel;
        }
    }

    /// The exact minimizer of f: |M| = λ_ε, Q = √2 s_ε (M⊗M/λ_ε² - I/2).
    fn minimizer(angle: f64, c: &PotentialConstants) -> (QValue, MValue) {
        let m = MValue {
            m1: c.lambda_eps * angle.cos(),
            m2: c.lambda_eps * angle.sin(),
        };
        // √2 s (m⊗m/λ² - I/2): q11 = √2 s (m1²/λ² - ½), q12 = √2 s m1 m2/λ².
        let l2 = c.lambda_eps * c.lambda_eps;
        let q = QValue {
            q11: SQRT2 * c.s_eps * (m.m1 * m.m1 / l2 - 0.5),
            q12: SQRT2 * c.s_eps * (m.m1 * m.m2 / l2),
        };
        (q, m)
    }

    #[test]
    fn f_eps_zero_at_minimizer() {
        let params = ModelParams::new(1.0, 0.05);
        let c = potential_constants(&params).unwrap();
        for angle in [0.0, 0.7, 2.1, -1.3] {
            let (q, m) = minimizer(angle, &c);
            let v = f_eps(&q, &m, &params, &c);
            assert!(v.abs() < 1e-10, "f at minimizer = {v}");
        }
    }

    #[test]
    fn f_eps_boundary_relation_is_kappa_star_sq_eps_sq() {
        // At the boundary relation |M| = λ*, Q = √2(M⊗M/λ*² - I/2):
        // f = κ_ε - ½(β²+√2β)ε, which expands as κ*²ε² + o(ε²).
        let beta = 1.0;
        for eps in [1e-2, 1e-3] {
            let params = ModelParams::new(beta, eps);
            let c = potential_constants(&params).unwrap();
            let l2 = c.lambda_star * c.lambda_star;
            let m = MValue {
                m1: c.lambda_star * 0.6,
                m2: c.lambda_star * 0.8,
            };
            let q = QValue {
                q11: SQRT2 * (m.m1 * m.m1 / l2 - 0.5),
                q12: SQRT2 * m.m1 * m.m2 / l2,
            };
            let v = f_eps(&q, &m, &params, &c);
            let expected = c.kappa_star * c.kappa_star * eps * eps;
            assert!(
                (v - expected).abs() < 0.2 * expected,
                "eps={eps} f={v} expected~{expected}"
            );
        }
    }

    #[test]
    fn f_eps_at_zero() {
        let params = ModelParams::new(1.0, 0.05);
        let c = potential_constants(&params).unwrap();
        let v = f_eps(
            &QValue { q11: 0.0, q12: 0.0 },
            &MValue { m1: 0.0, m2: 0.0 },
            &params,
            &c,
        );
        assert!((v - (0.25 + params.eps / 4.0 + c.kappa_eps)).abs() < 1e-15);
    }

    #[test]
    fn grad_zero_at_minimizer() {
        let params = ModelParams::new(1.0, 0.05);
        let c = potential_constants(&params).unwrap();
        let (q, m) = minimizer(0.9, &c);
        let (dq, dm) = grad_f_eps(&q, &m, &params);
        for v in [dq.q11, dq.q12, dm.m1, dm.m2] {
            assert!(v.abs() < 1e-9, "gradient component {v}");
        }
    }

    #[test]
    fn grad_zero_m_zero_unit_q() {
        let params = ModelParams::new(1.0, 0.05);
        let q = QValue {
            q11: 0.5f64.sqrt() * 0.3f64.cos(),
            q12: 0.5f64.sqrt() * 0.3f64.sin(),
        };
        let m = MValue { m1: 0.0, m2: 0.0 };
        let (dq, dm) = grad_f_eps(&q, &m, &params);
        assert!(dq.q11.abs() < 1e-14 && dq.q12.abs() < 1e-14);
        assert!(dm.m1.abs() < 1e-14 && dm.m2.abs() < 1e-14);
    }

    #[test]
    fn g_eps_at_unit_norm() {
        let params = ModelParams::new(1.0, 0.05);
        let c = potential_constants(&params).unwrap();
        assert!((g_eps(1.0, &params, &c) - c.kappa_star * c.kappa_star).abs() < 1e-14);
    }

    #[test]
    fn g_eps_near_saturated_norm() {
        // |Q| = 1 + κ*ε gives g = κ*²(κ*ε + κ*²ε²/4).
        let params = ModelParams::new(1.0, 0.05);
        let c = potential_constants(&params).unwrap();
        let ks = c.kappa_star;
        let v = g_eps(1.0 + ks * params.eps, &params, &c);
        let expected =
            ks * ks * (ks * params.eps + ks * ks * params.eps * params.eps / 4.0);
        assert!((v - expected).abs() < 1e-12, "g={v} expected={expected}");
    }

    #[test]
    fn h_zero_set_and_center_value() {
        let params = ModelParams::new(1.0, 0.05);
        let lam = (SQRT2 + 1.0f64).sqrt();
        assert!(h(lam, 0.0, &params).abs() < 1e-14);
        assert!(h(-lam, 0.0, &params).abs() < 1e-14);
        // h(0,0) = ¼ + (β² + √2β)/2 = ¼ + (1+√2)/2 for β = 1.
        let v = h(0.0, 0.0, &params);
        assert!((v - (0.25 + (1.0 + SQRT2) / 2.0)).abs() < 1e-14);
        assert!((v - 1.4571068).abs() < 1e-6);
    }

    #[test]
    fn h_hessian_at_wells() {
        let params = ModelParams::new(1.0, 0.05);
        let lam = (SQRT2 * params.beta + 1.0).sqrt();
        let step = 1e-5;
        for u in [lam, -lam] {
            let d11 = (h(u + step, 0.0, &params) - 2.0 * h(u, 0.0, &params)
                + h(u - step, 0.0, &params))
                / (step * step);
            let d22 = (h(u, step, &params) - 2.0 * h(u, 0.0, &params) + h(u, -step, &params))
                / (step * step);
            assert!((d11 - (2.0 + 2.0 * SQRT2 * params.beta)).abs() < 1e-3);
            assert!((d22 - 2.0 * SQRT2 * params.beta).abs() < 1e-3);
        }
    }

    #[test]
    fn h_profile_closed_form() {
        let params = ModelParams::new(1.3, 0.05);
        for u in [0.0, 0.5, 1.0, 1.7, 3.0] {
            let expected = (SQRT2 * params.beta + 1.0 - u * u).abs() / SQRT2;
            assert!((h_profile(u, &params) - expected).abs() < 1e-15);
            assert!((h_profile(u, &params) - (2.0 * h(u, 0.0, &params)).sqrt()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cubic_residual_and_kappa_nonneg(
            beta in 0.1f64..10.0,
            eps_log in -4.0f64..-1.0,
        ) {
            let eps = 10f64.powf(eps_log);
            let params = ModelParams::new(beta, eps);
            let x = solve_x_eps(&params).unwrap();
            let b2e = beta * beta * eps;
            let residual = x * (x - 1.0 - b2e).powi(2) - beta * beta * eps * eps / 2.0;
            prop_assert!(residual.abs() < 1e-12);
            prop_assert!(x > 1.0 + b2e);
            let c = potential_constants(&params).unwrap();
            prop_assert!(c.kappa_eps >= -1e-12);
            prop_assert!((c.s_eps * c.s_eps - c.x_eps).abs() < 1e-14);
        }

        #[test]
        fn lemma_feps_lower_bounds(
            q11 in -1.5f64..1.5,
            q12 in -1.5f64..1.5,
            m1 in -2.0f64..2.0,
            m2 in -2.0f64..2.0,
        ) {
            let params = ModelParams::new(1.0, 0.05);
            let c = potential_constants(&params).unwrap();
            let q = QValue { q11, q12 };
            let m = MValue { m1, m2 };
            let eps = params.eps;
            let f = f_eps(&q, &m, &params, &c) / (eps * eps);
            let qn = q.norm();
            let mn2 = m.norm_sq();
            let quart = 0.25 * (qn * qn - 1.0).powi(2) / (eps * eps);
            let b1 = quart - params.beta / (SQRT2 * eps) * mn2 * (qn - 1.0).abs();
            let b2 = 0.5 * quart - params.beta * params.beta * mn2 * mn2;
            prop_assert!(f >= b1 - 1e-9 * (1.0 + f.abs()));
            prop_assert!(f >= b2 - 1e-9 * (1.0 + f.abs()));
        }

        #[test]
        fn g_eps_identity_and_nonneg(q_norm in 0.0f64..2.0) {
            let params = ModelParams::new(1.0, 0.05);
            let c = potential_constants(&params).unwrap();
            let g = g_eps(q_norm, &params, &c);
            prop_assert!(g >= -1e-12);
            let eps = params.eps;
            let t = q_norm - 1.0;
            let alt = (t / eps - c.kappa_star).powi(2)
                + t * t / (eps * eps) * (0.25 * (q_norm + 1.0).powi(2) - 1.0);
            prop_assert!((g - alt).abs() < 1e-12 * (1.0 + g.abs()));
        }

        #[test]
        fn h_even_in_each_argument(u1 in -3.0f64..3.0, u2 in -3.0f64..3.0) {
            let params = ModelParams::new(0.8, 0.05);
            let v = h(u1, u2, &params);
            prop_assert!(v >= -1e-14);
            prop_assert!((h(-u1, u2, &params) - v).abs() < 1e-14);
            prop_assert!((h(u1, -u2, &params) - v).abs() < 1e-14);
        }

        #[test]
        fn grad_matches_finite_difference(
            q11 in -1.2f64..1.2,
            q12 in -1.2f64..1.2,
            m1 in -1.8f64..1.8,
            m2 in -1.8f64..1.8,
        ) {
            let params = ModelParams::new(1.0, 0.05);
            let c = potential_constants(&params).unwrap();
            let step = 1e-6;
            let f = |q11: f64, q12: f64, m1: f64, m2: f64| {
                f_eps(&QValue { q11, q12 }, &MValue { m1, m2 }, &params, &c)
            };
            let (dq, dm) = grad_f_eps(&QValue { q11, q12 }, &MValue { m1, m2 }, &params);
            let fd = [
                (f(q11 + step, q12, m1, m2) - f(q11 - step, q12, m1, m2)) / (2.0 * step),
                (f(q11, q12 + step, m1, m2) - f(q11, q12 - step, m1, m2)) / (2.0 * step),
                (f(q11, q12, m1 + step, m2) - f(q11, q12, m1 - step, m2)) / (2.0 * step),
                (f(q11, q12, m1, m2 + step) - f(q11, q12, m1, m2 - step)) / (2.0 * step),
            ];
            let an = [dq.q11, dq.q12, dm.m1, dm.m2];
            for (a, b) in an.iter().zip(fd.iter()) {
                let scale = 1.0f64.max(a.abs());
                prop_assert!((a - b).abs() / scale < 1e-5, "an={a} fd={b}");
            }
        }
    }

    #[test]
    fn global_min_attained_at_lemma_minimizer() {
        // Scan a fine (|Q|, |M|, relative angle) grid; f must be >= -1e-10
        // everywhere and minimal near (s_eps, lambda_eps, aligned).
        let params = ModelParams::new(1.0, 0.05);
        let c = potential_constants(&params).unwrap();
        let mut best = f64::INFINITY;
        let mut best_at = (0.0, 0.0, 0.0);
        let n = 60;
        for iq in 0..=n {
            let qn = 2.0 * iq as f64 / n as f64;
            for im in 0..=n {
                let mn = 2.0 * im as f64 / n as f64;
                for ia in 0..=n {
                    let ang = std::f64::consts::PI * ia as f64 / n as f64;
                    // Q aligned with the x-axis, M at relative angle ang.
                    let q = QValue {
                        q11: qn / std::f64::consts::SQRT_2,
                        q12: 0.0,
                    };
                    let m = MValue {
                        m1: mn * ang.cos(),
                        m2: mn * ang.sin(),
                    };
                    let v = f_eps(&q, &m, &params, &c);
                    assert!(v >= -1e-10);
                    if v < best {
                        best = v;
                        best_at = (qn, mn, ang);
                    }
                }
            }
        }
        let (qn, mn, ang) = best_at;
        assert!((qn - c.s_eps).abs() < 2.0 / 60.0 + 1e-9, "qn={qn}");
        assert!((mn - c.lambda_eps).abs() < 2.0 / 60.0 + 1e-9, "mn={mn}");
        assert!(ang < std::f64::consts::PI / 60.0 + 1e-9, "ang={ang}");
    }
}
