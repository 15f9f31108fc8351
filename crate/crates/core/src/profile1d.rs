//! The one-dimensional optimal interface profile of the magnetization
//! jump and its energy, equal to half the interface cost c_β.

use crate::potential::{h, h_profile, ModelParams, PotentialConstants};

/// Monotone profile u(t) rising from 0 to λ*.
#[derive(Debug, Clone)]
pub struct Profile {
    pub ts: Vec<f64>,
    pub us: Vec<f64>,
    /// ∫ (½u′² + ½H²(u)) dt over [0, t_max].
    pub energy: f64,
}

/// Default integration horizon: tanh saturation to ~1e−9.
pub fn default_t_max(consts: &PotentialConstants) -> f64 {
    20.0 / consts.lambda_star
}

/// Closed-form profile λ*·tanh(λ*·t/√2), the solution of u′ = H(u)
/// with u(0) = 0.
pub fn reference_profile(t: f64, consts: &PotentialConstants) -> f64 {
    let lam = consts.lambda_star;
    lam * (lam * t / std::f64::consts::SQRT_2).tanh()
}

/// Integrates the first-integral form u′ = H(u) from u(0) = 0 by the
/// classical fourth-order Runge–Kutta method.
pub fn optimal_profile(params: &ModelParams, t_max: f64, n_samples: usize) -> Profile {
    assert!(t_max > 0.0 && n_samples >= 100);
    let dt = t_max / n_samples as f64;
    let mut ts = Vec::with_capacity(n_samples + 1);
    let mut us = Vec::with_capacity(n_samples + 1);
    let f = |u: f64| h_profile(u, params);
    let mut u = 0.0f64;
    ts.push(0.0);
    us.push(0.0);
    let lam = (std::f64::consts::SQRT_2 * params.beta + 1.0).sqrt();
    for s in 0..n_samples {
        let k1 = f(u);
        let k2 = f(u + 0.5 * dt * k1);
        let k3 = f(u + 0.5 * dt * k2);
        let k4 = f(u + dt * k3);
        u = (u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).min(lam);
        ts.push((s + 1) as f64 * dt);
        us.push(u);
    }
    let energy = profile_energy(params, &ts, &us);
    Profile { ts, us, energy }
}

/// ∫ (½u′² + ½H²(u)) dt by Simpson quadrature on the sample grid,
/// using the ODE identity u′ = H(u) pointwise.
fn profile_energy(params: &ModelParams, ts: &[f64], us: &[f64]) -> f64 {
    let density: Vec<f64> = us
        .iter()
        .map(|&u| {
            let hp = h_profile(u, params);
            hp * hp
        })
        .collect();
    simpson(ts, &density)
}

fn simpson(ts: &[f64], fs: &[f64]) -> f64 {
    let n = ts.len() - 1;
    let dt = ts[1] - ts[0];
    let mut acc = fs[0] + fs[n];
    for (s, &f) in fs.iter().enumerate().take(n).skip(1) {
        acc += if s % 2 == 1 { 4.0 * f } else { 2.0 * f };
    }
    if n % 2 == 0 {
        acc * dt / 3.0
    } else {
        // Odd interval count: Simpson on the first n−1, trapezoid last.
        let head = simpson(&ts[..n], &fs[..n]);
        head + 0.5 * dt * (fs[n - 1] + fs[n])
    }
}

/// Energy of a converged profile; equals ½·c_β.
pub fn profile_cost(profile: &Profile) -> f64 {
    profile.energy
}

/// ∫₀^{λ*} H(u) du by Simpson quadrature — the substitution form of
/// the same cost, used as an independent cross-check.
pub fn cost_by_substitution(params: &ModelParams, n: usize) -> f64 {
    let lam = (std::f64::consts::SQRT_2 * params.beta + 1.0).sqrt();
    let n = if n % 2 == 0 { n } else { n + 1 };
    let du = lam / n as f64;
    let ts: Vec<f64> = (0..=n).map(|s| s as f64 * du).collect();
    let fs: Vec<f64> = ts.iter().map(|&u| h_profile(u, params)).collect();
    simpson(&ts, &fs)
}

/// Cost of an arbitrary parametrized path u(t) in the (u1, u2) plane
/// under the geodesic functional ∫ √(2h(u)) |u′| dt, by trapezoid
/// quadrature on a sample sequence.
pub fn path_cost(params: &ModelParams, samples: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    for w in samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let hm = h(mid.0, mid.1, params).max(0.0);
        acc += (2.0 * hm).sqrt() * len;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::potential_constants;
    use proptest::prelude::*;

    #[test]
    fn matches_closed_form() {
        let params = ModelParams::new(1.0, 0.05);
        let consts = potential_constants(&params).unwrap();
        let profile = optimal_profile(&params, 20.0, 10_000);
        let mut max_err = 0.0f64;
        for (t, u) in profile.ts.iter().zip(&profile.us) {
            max_err = max_err.max((u - reference_profile(*t, &consts)).abs());
        }
        assert!(max_err < 1e-8, "max error {max_err}");
    }

    #[test]
    fn monotone_with_saturation() {
        let params = ModelParams::new(2.0, 0.05);
        let consts = potential_constants(&params).unwrap();
        let profile = optimal_profile(&params, default_t_max(&consts), 5000);
        assert_eq!(profile.us[0], 0.0);
        for w in profile.us.windows(2) {
            assert!(w[1] >= w[0], "not monotone");
        }
        let last = *profile.us.last().unwrap();
        assert!(last >= consts.lambda_star * (1.0 - 1e-6));
        assert!(last <= consts.lambda_star + 1e-12);
    }

    #[test]
    fn first_integral_residual() {
        let params = ModelParams::new(1.0, 0.05);
        let profile = optimal_profile(&params, 20.0, 40_000);
        let dt = profile.ts[1] - profile.ts[0];
        let mut max_res = 0.0f64;
        // Fourth-order derivative stencil: the check must resolve the
        // ODE identity, not the differentiation truncation error.
        for s in 2..profile.us.len() - 2 {
            let du = (-profile.us[s + 2] + 8.0 * profile.us[s + 1] - 8.0 * profile.us[s - 1]
                + profile.us[s - 2])
                / (12.0 * dt);
            let hp = h_profile(profile.us[s], &params);
            max_res = max_res.max((du * du - hp * hp).abs());
        }
        assert!(max_res < 1e-10, "residual {max_res}");
    }

    #[test]
    fn cost_matches_interface_constant() {
        for beta in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let params = ModelParams::new(beta, 0.05);
            let consts = potential_constants(&params).unwrap();
            let profile = optimal_profile(&params, default_t_max(&consts), 20_000);
            let cost = profile_cost(&profile);
            assert!(
                (cost - 0.5 * consts.c_beta).abs() < 1e-6,
                "β = {beta}: cost {cost} vs {}",
                0.5 * consts.c_beta
            );
            let sub = cost_by_substitution(&params, 20_000);
            assert!(
                (sub - 0.5 * consts.c_beta).abs() < 1e-8,
                "β = {beta}: substitution {sub}"
            );
        }
        // Spot values.
        let p1 = ModelParams::new(1.0, 0.05);
        let c1 = potential_constants(&p1).unwrap();
        assert!((0.5 * c1.c_beta - 1.76835).abs() < 1e-4);
        let p0 = ModelParams::new(0.0, 0.05);
        let c0 = potential_constants(&p0).unwrap();
        assert!((0.5 * c0.c_beta - 0.471405).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn competitor_paths_never_beat_the_cost(
            knots in proptest::collection::vec(0.0f64..1.0, 3..8),
            beta in 0.1f64..4.0,
        ) {
            // Monotone reparametrizations of the axis path from u₋ = -λ*
            // to u₊ = λ*: all have the same geodesic cost c_β; random
            // monotone sub-paths can only cost at least as much as the
            // optimum, never less.
            let params = ModelParams::new(beta, 0.05);
            let consts = potential_constants(&params).unwrap();
            let lam = consts.lambda_star;
            let mut us: Vec<f64> = knots.iter().map(|k| lam * (2.0 * k - 1.0)).collect();
            us.push(-lam);
            us.push(lam);
            us.sort_by(f64::total_cmp);
            // Densify each span for quadrature accuracy.
            let mut samples = Vec::new();
            for w in us.windows(2) {
                for s in 0..40 {
                    samples.push((w[0] + (w[1] - w[0]) * s as f64 / 40.0, 0.0));
                }
            }
            samples.push((lam, 0.0));
            let cost = path_cost(&params, &samples);
            prop_assert!(cost <= consts.c_beta * (1.0 + 1e-3),
                "monotone axis path cost {cost} > c_β {}", consts.c_beta);
            prop_assert!(cost >= consts.c_beta * (1.0 - 1e-2),
                "cost {cost} below the geodesic optimum {}", consts.c_beta);
        }

        #[test]
        fn off_axis_paths_cost_strictly_more(
            bump in 0.05f64..0.5,
            beta in 0.2f64..4.0,
        ) {
            // Lifting the path off the u2 = 0 axis increases the cost:
            // h grows in u2² and the path gets longer.
            let params = ModelParams::new(beta, 0.05);
            let consts = potential_constants(&params).unwrap();
            let lam = consts.lambda_star;
            let n = 400;
            let axis: Vec<(f64, f64)> = (0..=n)
                .map(|s| (lam * (2.0 * s as f64 / n as f64 - 1.0), 0.0))
                .collect();
            let lifted: Vec<(f64, f64)> = (0..=n)
                .map(|s| {
                    let t = s as f64 / n as f64;
                    (
                        lam * (2.0 * t - 1.0),
                        bump * (std::f64::consts::PI * t).sin(),
                    )
                })
                .collect();
            let ca = path_cost(&params, &axis);
            let cl = path_cost(&params, &lifted);
            prop_assert!(cl > ca * (1.0 + 1e-4),
                "lifted path cost {cl} does not exceed axis cost {ca}");
        }
    }
}
