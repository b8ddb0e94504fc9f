//! Matrix-valued second-order initial-value problems.
//!
//! Integrates `Ẍ = Ω(τ)·X + R(τ)` with classical fixed-step RK4 on the
//! first-order pair `(X, Ẋ)`, certifies accuracy by step halving, and
//! checks the a-priori growth envelope that a weighted matrix norm of
//! the solution must obey when `Ω` has bounded weighted row sums.

use crate::error::CoreError;
use crate::harmonic::{EvolutionMatrices, EvolutionSource};
use crate::linalg::RMat;
use crate::model::{site_distance, Boundary};

/// Value and derivative blocks of a trajectory point.
#[derive(Debug, Clone)]
pub struct SecondOrderState {
    pub x0: RMat,
    pub x1: RMat,
}

impl SecondOrderState {
    /// Start with the identity in the value slot (`X(s)=1`, `Ẋ(s)=0`).
    pub fn identity_value(n: usize) -> Self {
        SecondOrderState {
            x0: RMat::identity(n, n),
            x1: RMat::zeros(n, n),
        }
    }

    /// Start with the identity in the derivative slot (`X(s)=0`, `Ẋ(s)=1`).
    pub fn identity_slope(n: usize) -> Self {
        SecondOrderState {
            x0: RMat::zeros(n, n),
            x1: RMat::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.nrows()
    }
}

fn rhs(
    tau: f64,
    x0: &RMat,
    x1: &RMat,
    omega: &dyn Fn(f64) -> RMat,
    source: Option<&dyn Fn(f64) -> RMat>,
) -> (RMat, RMat) {
    let mut acc = omega(tau) * x0;
    if let Some(r) = source {
        acc += r(tau);
    }
    (x1.clone(), acc)
}

/// Integrate from `s` to `t` in `steps` RK4 steps, recording every
/// `record_every`-th accepted point (the final point is always recorded).
/// The returned trajectory starts with the initial state.
pub fn rk4_trajectory(
    omega: &dyn Fn(f64) -> RMat,
    source: Option<&dyn Fn(f64) -> RMat>,
    s: f64,
    t: f64,
    steps: usize,
    init: &SecondOrderState,
    record_every: usize,
) -> Result<Vec<(f64, SecondOrderState)>, CoreError> {
    if steps == 0 || record_every == 0 {
        return Err(CoreError::InvalidParameter(
            "steps and record_every must be positive".into(),
        ));
    }
    if init.x0.nrows() != init.x1.nrows() || init.x0.ncols() != init.x1.ncols() {
        return Err(CoreError::DimensionMismatch(
            "value and derivative blocks must have equal shape".into(),
        ));
    }
    let h = (t - s) / steps as f64;
    let mut x0 = init.x0.clone();
    let mut x1 = init.x1.clone();
    let mut out = vec![(s, init.clone())];
    for step in 0..steps {
        let tau = s + h * step as f64;
        let (a0, a1) = rhs(tau, &x0, &x1, omega, source);
        let (b0, b1) = rhs(
            tau + h / 2.0,
            &(&x0 + &a0 * (h / 2.0)),
            &(&x1 + &a1 * (h / 2.0)),
            omega,
            source,
        );
        let (c0, c1) = rhs(
            tau + h / 2.0,
            &(&x0 + &b0 * (h / 2.0)),
            &(&x1 + &b1 * (h / 2.0)),
            omega,
            source,
        );
        let (d0, d1) = rhs(
            tau + h,
            &(&x0 + &c0 * h),
            &(&x1 + &c1 * h),
            omega,
            source,
        );
        x0 += (a0 + &b0 * 2.0 + &c0 * 2.0 + d0) * (h / 6.0);
        x1 += (a1 + &b1 * 2.0 + &c1 * 2.0 + d1) * (h / 6.0);
        if (step + 1) % record_every == 0 || step + 1 == steps {
            out.push((
                s + h * (step + 1) as f64,
                SecondOrderState {
                    x0: x0.clone(),
                    x1: x1.clone(),
                },
            ));
        }
    }
    Ok(out)
}

/// Integrate from `s` to `t`, returning only the final state.
pub fn rk4_second_order(
    omega: &dyn Fn(f64) -> RMat,
    source: Option<&dyn Fn(f64) -> RMat>,
    s: f64,
    t: f64,
    steps: usize,
    init: &SecondOrderState,
) -> Result<SecondOrderState, CoreError> {
    Ok(rk4_trajectory(omega, source, s, t, steps, init, steps)?
        .pop()
        .expect("trajectory is never empty")
        .1)
}

/// Integrate at the given resolution and again at double resolution;
/// fail if the two final states differ entrywise by more than `tol`.
/// Returns the finer solution together with the observed discrepancy.
pub fn rk4_certified(
    omega: &dyn Fn(f64) -> RMat,
    source: Option<&dyn Fn(f64) -> RMat>,
    s: f64,
    t: f64,
    steps: usize,
    init: &SecondOrderState,
    tol: f64,
) -> Result<(SecondOrderState, f64), CoreError> {
    let coarse = rk4_second_order(omega, source, s, t, steps, init)?;
    let fine = rk4_second_order(omega, source, s, t, steps * 2, init)?;
    let diff = (&coarse.x0 - &fine.x0)
        .abs()
        .max()
        .max((&coarse.x1 - &fine.x1).abs().max());
    if diff > tol {
        return Err(CoreError::CertificationFailure(format!(
            "step-halving discrepancy {diff:.3e} exceeds tolerance {tol:.3e} at {steps} steps"
        )));
    }
    Ok((fine, diff))
}

/// Third route to the flow blocks: integrate `Ẍ = −W·X` from both
/// canonical starts and assemble `(A, B, Ȧ, Ḃ)` at time `t`.
pub fn evolve_matrices_ode(
    coupling: &RMat,
    t: f64,
    steps: usize,
) -> Result<EvolutionMatrices, CoreError> {
    let n = coupling.nrows();
    let omega = |_: f64| -coupling;
    let va = rk4_second_order(&omega, None, 0.0, t, steps, &SecondOrderState::identity_value(n))?;
    let vb = rk4_second_order(&omega, None, 0.0, t, steps, &SecondOrderState::identity_slope(n))?;
    Ok(EvolutionMatrices {
        t,
        q_from_q: va.x0,
        q_from_p: vb.x0,
        p_from_q: va.x1,
        p_from_p: vb.x1,
        source: EvolutionSource::SecondOrderOde,
    })
}

/// Weighted entry norm `sup_{λμ} e^{γ·d(λ,μ)}·|X_λμ|` with the lattice
/// distance for the given boundary; rows/columns are indexed by sites
/// `−n…n` in order.
pub fn weighted_entry_norm(x: &RMat, gamma: f64, boundary: Boundary, n_half: u32) -> f64 {
    let dim = 2 * n_half as usize + 1;
    assert_eq!(x.nrows(), dim, "matrix does not match the site range");
    assert_eq!(x.ncols(), dim, "matrix does not match the site range");
    let mut worst = 0.0_f64;
    for i in 0..dim {
        for j in 0..dim {
            let d = site_distance(
                boundary,
                n_half,
                i as i64 - n_half as i64,
                j as i64 - n_half as i64,
            );
            worst = worst.max((gamma * d as f64).exp() * x[(i, j)].abs());
        }
    }
    worst
}

/// Lyapunov-style combination `√S·‖X⁰‖_γ + ‖X¹‖_γ` whose log-derivative
/// along the flow is at most `√S` when the weighted row sums of `Ω`
/// stay below `S`.
pub fn weighted_phi(
    state: &SecondOrderState,
    gamma: f64,
    s_gamma: f64,
    boundary: Boundary,
    n_half: u32,
) -> f64 {
    s_gamma.sqrt() * weighted_entry_norm(&state.x0, gamma, boundary, n_half)
        + weighted_entry_norm(&state.x1, gamma, boundary, n_half)
}

/// Check the growth envelope `φ(t) ≤ φ(s)·e^{√S·|t−s|}` along a
/// trajectory.  Returns the worst observed ratio; fails if it exceeds
/// `1 + slack`.
pub fn verify_growth_envelope(
    trajectory: &[(f64, SecondOrderState)],
    s: f64,
    gamma: f64,
    s_gamma: f64,
    boundary: Boundary,
    n_half: u32,
    slack: f64,
) -> Result<f64, CoreError> {
    let first = trajectory.first().ok_or_else(|| {
        CoreError::InvalidParameter("empty trajectory".into())
    })?;
    let phi0 = weighted_phi(&first.1, gamma, s_gamma, boundary, n_half);
    if phi0 <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "initial state has zero weighted size".into(),
        ));
    }
    let rate = s_gamma.sqrt();
    let mut worst = 0.0_f64;
    for (t, state) in trajectory {
        let phi = weighted_phi(state, gamma, s_gamma, boundary, n_half);
        let cap = phi0 * (rate * (t - s).abs()).exp();
        worst = worst.max(phi / cap);
    }
    if worst > 1.0 + slack {
        return Err(CoreError::CertificationFailure(format!(
            "weighted growth envelope exceeded: worst ratio {worst:.6}"
        )));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::evolve_matrices_spectral;
    use crate::linalg::sym_matrix_function;
    use crate::model::{build_coupling, Boundary, ModelSpec};
    use approx::assert_relative_eq;

    fn ring52(n: u32) -> ModelSpec {
        ModelSpec::quadratic(n, Boundary::Cyclic, 5.0, 2.0)
    }

    #[test]
    fn free_particle_slope_start_is_linear_in_time() {
        let omega = |_: f64| RMat::zeros(3, 3);
        let end = rk4_second_order(&omega, None, 0.5, 2.5, 10, &SecondOrderState::identity_slope(3))
            .unwrap();
        assert!((end.x0 - RMat::identity(3, 3) * 2.0).abs().max() < 1e-13);
        assert!((end.x1 - RMat::identity(3, 3)).abs().max() < 1e-13);
    }

    #[test]
    fn matches_spectral_route_on_the_ring() {
        let spec = ring52(4);
        let w = build_coupling(&spec).unwrap().matrix;
        let t = 1.0;
        let ode = evolve_matrices_ode(&w, t, 1000).unwrap();
        let exact = evolve_matrices_spectral(&w, t).unwrap();
        assert!((&ode.q_from_q - &exact.q_from_q).abs().max() < 1e-8);
        assert!((&ode.q_from_p - &exact.q_from_p).abs().max() < 1e-8);
        assert!((&ode.p_from_q - &exact.p_from_q).abs().max() < 1e-8);
        assert!((&ode.p_from_p - &exact.p_from_p).abs().max() < 1e-8);
        assert_eq!(ode.source, EvolutionSource::SecondOrderOde);
    }

    #[test]
    fn certification_accepts_fine_and_rejects_coarse() {
        let spec = ring52(2);
        let w = build_coupling(&spec).unwrap().matrix;
        let n = w.nrows();
        let omega = |_: f64| -&w;
        let init = SecondOrderState::identity_value(n);
        let (_, diff) = rk4_certified(&omega, None, 0.0, 2.0, 500, &init, 1e-8).unwrap();
        assert!(diff < 1e-8);
        let err = rk4_certified(&omega, None, 0.0, 2.0, 3, &init, 1e-12).unwrap_err();
        assert!(matches!(err, CoreError::CertificationFailure(_)));
    }

    #[test]
    fn inhomogeneous_solution_matches_quadrature_oracle() {
        // Ẍ = −W·X + cos(τ)·M from a zero start has the closed form
        // X(t) = ∫₀ᵗ sin((t−τ)√W)/√W · cos(τ)·M dτ; compare RK4 with
        // a fine Simpson evaluation of that integral.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let spec = ring52(2);
        let w = build_coupling(&spec).unwrap().matrix;
        let n = w.nrows();
        let m = RMat::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let t = 1.3;

        let omega = |_: f64| -&w;
        let src = |tau: f64| &m * tau.cos();
        let zero = SecondOrderState {
            x0: RMat::zeros(n, n),
            x1: RMat::zeros(n, n),
        };
        let got = rk4_second_order(&omega, Some(&src), 0.0, t, 2000, &zero).unwrap();

        let kernel = |tau: f64| {
            sym_matrix_function(&w, |l| {
                let om = l.max(0.0).sqrt();
                let x = (t - tau) * om;
                if x.abs() < 1e-6 {
                    (t - tau) * (1.0 - x * x / 6.0)
                } else {
                    x.sin() / om
                }
            }) * tau.cos()
        };
        let segments = 200; // Simpson on 2·segments panels
        let h = t / (2 * segments) as f64;
        let mut acc = RMat::zeros(n, n);
        for k in 0..=(2 * segments) {
            let weight = if k == 0 || k == 2 * segments {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += kernel(k as f64 * h) * (weight * h / 3.0) * &m;
        }
        assert!((got.x0 - acc).abs().max() < 1e-6);
    }

    #[test]
    fn growth_envelope_holds_on_the_ring() {
        // √S·‖X⁰‖_γ + ‖X¹‖_γ grows at most like e^{√S·t} with
        // S = a + 2b·cosh γ for the ring coupling.
        let n_half = 4u32;
        let spec = ring52(n_half);
        let w = build_coupling(&spec).unwrap().matrix;
        let gamma = 0.5_f64;
        let s_gamma = 5.0 + 2.0 * 2.0 * gamma.cosh();
        let omega = |_: f64| -&w;
        for init in [
            SecondOrderState::identity_value(w.nrows()),
            SecondOrderState::identity_slope(w.nrows()),
        ] {
            let traj = rk4_trajectory(&omega, None, 0.0, 3.0, 600, &init, 30).unwrap();
            let worst = verify_growth_envelope(
                &traj,
                0.0,
                gamma,
                s_gamma,
                Boundary::Cyclic,
                n_half,
                1e-9,
            )
            .unwrap();
            assert!(worst <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn weighted_norm_weights_by_lattice_distance() {
        let mut x = RMat::zeros(5, 5);
        x[(0, 4)] = 0.25; // sites −2 and 2: open distance 4, ring distance 1
        assert_relative_eq!(
            weighted_entry_norm(&x, 1.0, Boundary::Open, 2),
            0.25 * 4.0f64.exp(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            weighted_entry_norm(&x, 1.0, Boundary::Cyclic, 2),
            0.25 * 1.0f64.exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_degenerate_requests() {
        let omega = |_: f64| RMat::zeros(2, 2);
        let init = SecondOrderState::identity_value(2);
        assert!(rk4_trajectory(&omega, None, 0.0, 1.0, 0, &init, 1).is_err());
        let bad = SecondOrderState {
            x0: RMat::zeros(2, 2),
            x1: RMat::zeros(3, 3),
        };
        assert!(rk4_second_order(&omega, None, 0.0, 1.0, 5, &bad).is_err());
    }
}
