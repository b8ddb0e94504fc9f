//! Model parameters: the oscillator chain, its quadratic coupling, the
//! Gaussian perturbation family, and the explicit constants derived from
//! them (hypothesis constants, interaction decay profile, convolution
//! constant, crude velocity bound).
//!
//! The chain lives on sites `λ ∈ {-n, …, n}`; the quadratic potential is
//! `(a/2)·Σ x_λ² − b·Σ x_λ x_{λ+1}` with `a > 2b > 0`, optionally closed
//! into a ring.  Perturbations are Gaussian bumps: one-site
//! `ε_s·exp(−x²/(2w²))` and pair `ε_p·e^{−γ₀|λ−μ|}·exp(−(x−y)²/(2w²))`.

use crate::error::CoreError;
use crate::linalg::RMat;
use serde::{Deserialize, Serialize};

/// Boundary condition of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Cyclic,
}

/// Gaussian perturbation family on top of the quadratic chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Amplitude of the one-site bump at every site.
    pub eps_self: f64,
    /// Amplitude of the pair bump (before the `e^{−γ₀|λ−μ|}` factor).
    pub eps_pair: f64,
    /// Common Gaussian width.
    pub w: f64,
    /// Spatial decay rate of the pair amplitudes.
    pub gamma0: f64,
    /// Largest `|λ−μ|` with a nonzero pair bump; `None` means unbounded
    /// range (amplitudes still decay like `e^{−γ₀|λ−μ|}`).
    pub range_cut: Option<u32>,
}

impl PerturbationSpec {
    /// No perturbation at all (pure quadratic chain).
    pub fn none() -> Self {
        PerturbationSpec {
            eps_self: 0.0,
            eps_pair: 0.0,
            w: 1.0,
            gamma0: 1.0,
            range_cut: Some(0),
        }
    }

    /// True when both amplitudes vanish.
    pub fn is_zero(&self) -> bool {
        self.eps_self == 0.0 && self.eps_pair == 0.0
    }
}

/// Full chain description.
///
/// `n_sites` is the half-width `n`: the chain has `2n+1` sites `-n..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_sites: u32,
    pub boundary: Boundary,
    pub a: f64,
    pub b: f64,
    pub perturbation: PerturbationSpec,
}

impl ModelSpec {
    /// Pure quadratic chain with the given size and couplings.
    pub fn quadratic(n: u32, boundary: Boundary, a: f64, b: f64) -> Self {
        ModelSpec {
            n_sites: n,
            boundary,
            a,
            b,
            perturbation: PerturbationSpec::none(),
        }
    }

    /// Number of sites, `2n+1`.
    pub fn dim(&self) -> usize {
        2 * self.n_sites as usize + 1
    }

    /// The site labels `-n..=n` in ascending order.
    pub fn sites(&self) -> Vec<i64> {
        let n = self.n_sites as i64;
        (-n..=n).collect()
    }

    /// Pair-bump amplitude between two sites (`ε_p e^{−γ₀|λ−μ|}` within
    /// the range cut, zero outside or on the diagonal).
    pub fn pair_amplitude(&self, lambda: i64, mu: i64) -> f64 {
        let h = (lambda - mu).unsigned_abs();
        if h == 0 {
            return 0.0;
        }
        if let Some(rc) = self.perturbation.range_cut {
            if h > rc as u64 {
                return 0.0;
            }
        }
        self.perturbation.eps_pair * (-self.perturbation.gamma0 * h as f64).exp()
    }
}

/// Distance on the chain: plain `|λ−μ|` for open boundary, wrap-around
/// minimum for the ring with `2n+1` sites.
pub fn site_distance(boundary: Boundary, n: u32, lambda: i64, mu: i64) -> u64 {
    let d = (lambda - mu).unsigned_abs();
    match boundary {
        Boundary::Open => d,
        Boundary::Cyclic => {
            let period = 2 * n as u64 + 1;
            let dm = d % period;
            dm.min(period - dm)
        }
    }
}

/// Symmetric coupling matrix of the quadratic part, indexed by site order.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub boundary: Boundary,
    pub matrix: RMat,
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Check the standing assumptions; returns human-readable findings
/// (empty when the spec conforms).  Report-style: callers decide whether
/// any finding is fatal for their use.
pub fn validate_spec(spec: &ModelSpec) -> Vec<String> {
    let mut findings = Vec::new();
    if spec.n_sites < 1 {
        findings.push(format!(
            "n_sites = {} below 1: single-site chain is outside the standing assumptions",
            spec.n_sites
        ));
    }
    if !(spec.a > 2.0 * spec.b) {
        findings.push(format!(
            "couplings must satisfy a > 2b (got a = {}, b = {})",
            spec.a, spec.b
        ));
    }
    if !(spec.b > 0.0) {
        findings.push(format!("coupling b must be positive (got {})", spec.b));
    }
    let p = &spec.perturbation;
    if !(p.w > 0.0) {
        findings.push(format!("bump width w must be positive (got {})", p.w));
    }
    if !(p.gamma0 > 0.0) {
        findings.push(format!("decay rate gamma0 must be positive (got {})", p.gamma0));
    }
    if p.eps_self < 0.0 || p.eps_pair < 0.0 {
        findings.push(format!(
            "bump amplitudes must be nonnegative (got eps_self = {}, eps_pair = {})",
            p.eps_self, p.eps_pair
        ));
    }
    findings
}

/// Build the coupling matrix: `a` on the diagonal, `−b` on the first
/// off-diagonals, and `−b` in the wrap-around corners for the ring.
pub fn build_coupling(spec: &ModelSpec) -> Result<CouplingMatrix, CoreError> {
    let dim = spec.dim();
    if spec.boundary == Boundary::Cyclic && dim < 3 {
        return Err(CoreError::InvalidParameter(format!(
            "cyclic boundary needs at least 3 sites (got {dim})"
        )));
    }
    let mut m = RMat::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = spec.a;
        if i + 1 < dim {
            m[(i, i + 1)] = -spec.b;
            m[(i + 1, i)] = -spec.b;
        }
    }
    if spec.boundary == Boundary::Cyclic {
        m[(0, dim - 1)] = -spec.b;
        m[(dim - 1, 0)] = -spec.b;
    }
    Ok(CouplingMatrix {
        boundary: spec.boundary,
        matrix: m,
    })
}

/// Interaction-strength decay profile `k(h)`: an explicit upper bound on
/// the gradient-coupling norms between sites at distance `h`, assembled
/// from the quadratic couplings and the Gaussian-bump Fourier bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KProfile {
    /// `k(0)`: diagonal strength.
    pub k0: f64,
    /// Nearest-neighbour quadratic coupling entering `k(1)`.
    pub nn: f64,
    /// Pair-bump second-derivative bound `ε_p/w²` (before spatial decay).
    pub pair_bound: f64,
    /// Spatial decay rate of the pair contributions.
    pub gamma0: f64,
    /// Range cut of the pair contributions (`None` = unbounded).
    pub range_cut: Option<u32>,
}

impl KProfile {
    /// Profile value at lag `h ≥ 0`.
    pub fn value(&self, h: u32) -> f64 {
        if h == 0 {
            return self.k0;
        }
        let pair = match self.range_cut {
            Some(rc) if h > rc => 0.0,
            _ => self.pair_bound * (-self.gamma0 * h as f64).exp(),
        };
        if h == 1 {
            self.nn + pair
        } else {
            pair
        }
    }
}

/// Explicit constants extracted from the perturbation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConstants {
    /// Uniform bound on the weighted Fourier integrals of the bumps.
    pub c0: f64,
    /// Spatial decay rate inherited from the pair amplitudes.
    pub gamma0: f64,
    /// Interaction decay profile `k(h)`.
    pub profile: KProfile,
}

/// Weighted Fourier moment `∫ |ξ|^m |v̂(ξ)| dξ` of the one-variable
/// Gaussian bump with amplitude `eps` and width `w`
/// (`v̂(ξ) = ε w √(2π) e^{−w²ξ²/2}`), in closed form for `m = 2, 3`.
pub fn gaussian_fourier_moment(eps: f64, w: f64, m: u32) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    match m {
        2 => two_pi * eps / (w * w),
        3 => 4.0 * two_pi.sqrt() * eps / (w * w * w),
        _ => panic!("moment order {m} not needed by the hypotheses"),
    }
}

/// Assemble the explicit constants: `C0` as the max of the one-site and
/// pair weighted-Fourier sums, and the decay profile `k(h)`.
///
/// The one-site sum is `Σ_{m=2,3} ∫|ξ|^m |v̂|`; the pair sum carries the
/// multiplicities 3 and 4 of the index pairs `(j,k)` with `j+k = 2, 3`.
/// The profile uses the second-derivative bounds `ε/w²`, with the pair
/// diagonal term summed over both-side partners within the range cut.
pub fn hypothesis_constants(spec: &ModelSpec) -> HypothesisConstants {
    let p = &spec.perturbation;
    let one_site =
        gaussian_fourier_moment(p.eps_self, p.w, 2) + gaussian_fourier_moment(p.eps_self, p.w, 3);
    let pair =
        3.0 * gaussian_fourier_moment(p.eps_pair, p.w, 2) + 4.0 * gaussian_fourier_moment(p.eps_pair, p.w, 3);
    let c0 = one_site.max(pair);

    let self_bound = p.eps_self / (p.w * p.w);
    let pair_bound = p.eps_pair / (p.w * p.w);
    // Both-side partner sum Σ_{h=1..rc} e^{−γ₀ h}, doubled.
    let partner_sum = match p.range_cut {
        Some(rc) => (1..=rc).map(|h| (-p.gamma0 * h as f64).exp()).sum::<f64>(),
        None => {
            let q = (-p.gamma0).exp();
            q / (1.0 - q)
        }
    };
    let k0 = spec.a + self_bound + 2.0 * pair_bound * partner_sum;
    HypothesisConstants {
        c0,
        gamma0: p.gamma0,
        profile: KProfile {
            k0,
            nn: spec.b,
            pair_bound,
            gamma0: p.gamma0,
            range_cut: p.range_cut,
        },
    }
}

impl HypothesisConstants {
    /// Convolution constant `S_γ = Σ_{h∈ℤ} k(|h|) e^{γh}
    /// = k(0) + 2·Σ_{h≥1} k(h) cosh(γh)`, in closed form.
    ///
    /// Term-wise this dominates the lattice convolution:
    /// `Σ_μ k(|λ−μ|) e^{−γ|μ−ν|} ≤ S_γ e^{−γ|λ−ν|}`, because
    /// `e^{−γ|x−h|} ≤ e^{γh} e^{−γ|x|}` for every integer pair `(x, h)`
    /// after reducing to `x ≥ 0` by symmetry of the profile.
    ///
    /// For an unbounded range cut the pair tail converges only for
    /// `γ < γ₀`.
    pub fn s_gamma(&self, gamma: f64) -> Result<f64, CoreError> {
        if gamma <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "convolution constant needs gamma > 0 (got {gamma})"
            )));
        }
        let p = &self.profile;
        let pair_tail = match p.range_cut {
            Some(rc) => (1..=rc)
                .map(|h| p.pair_bound * (-p.gamma0 * h as f64).exp() * (gamma * h as f64).cosh())
                .sum::<f64>(),
            None => {
                if gamma >= p.gamma0 {
                    return Err(CoreError::InvalidParameter(format!(
                        "unbounded pair range needs gamma < gamma0 (got gamma = {gamma}, gamma0 = {})",
                        p.gamma0
                    )));
                }
                // Σ_{h≥1} e^{−γ₀h} cosh(γh) = ½ [ q₊/(1−q₊) + q₋/(1−q₋) ]
                // with q± = e^{−(γ₀∓γ)}.
                let qp = (-(p.gamma0 - gamma)).exp();
                let qm = (-(p.gamma0 + gamma)).exp();
                0.5 * p.pair_bound * (qp / (1.0 - qp) + qm / (1.0 - qm))
            }
        };
        Ok(p.k0 + 2.0 * p.nn * gamma.cosh() + 2.0 * pair_tail)
    }
}

/// Crude velocity bound from the convolution constant: the minimum of
/// `2·√(S_γ)/γ` over the supplied grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityBound {
    pub value: f64,
    /// Grid point achieving the minimum.
    pub gamma_star: f64,
}

/// Minimize `2√(S_γ)/γ` over a positive grid.  With an unbounded pair
/// range every grid point must satisfy `γ < γ₀`.
pub fn velocity_bound_general(
    spec: &ModelSpec,
    gamma_grid: &[f64],
) -> Result<VelocityBound, CoreError> {
    if gamma_grid.is_empty() {
        return Err(CoreError::InvalidParameter(
            "velocity bound needs a nonempty gamma grid".into(),
        ));
    }
    let consts = hypothesis_constants(spec);
    let mut best: Option<VelocityBound> = None;
    for &g in gamma_grid {
        let s = consts.s_gamma(g)?;
        let v = 2.0 * s.sqrt() / g;
        if best.as_ref().map_or(true, |b| v < b.value) {
            best = Some(VelocityBound {
                value: v,
                gamma_star: g,
            });
        }
    }
    Ok(best.expect("nonempty grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad52(n: u32) -> ModelSpec {
        ModelSpec::quadratic(n, Boundary::Cyclic, 5.0, 2.0)
    }

    #[test]
    fn validate_passes_standing_assumptions() {
        assert!(validate_spec(&quad52(4)).is_empty());
        let mut bad = quad52(4);
        bad.a = 3.9;
        assert_eq!(validate_spec(&bad).len(), 1);
        let mut bad2 = quad52(4);
        bad2.b = -1.0;
        bad2.perturbation.w = 0.0;
        assert!(validate_spec(&bad2).len() >= 2);
    }

    #[test]
    fn coupling_matrix_ring_eigenvalues_three_sites() {
        // 3-site ring with a = 5, b = 2: eigenvalues a − 2b·cos(2πk/3)
        // = {1, 7, 7}.
        let w = build_coupling(&quad52(1)).unwrap();
        let mut eig: Vec<f64> = w.matrix.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert_relative_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 7.0, epsilon = 1e-12);
        assert_relative_eq!(eig[2], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn coupling_matrix_positive_definite_both_boundaries() {
        for boundary in [Boundary::Open, Boundary::Cyclic] {
            for n in [1u32, 2, 7, 33, 64] {
                let spec = ModelSpec::quadratic(n, boundary, 5.0, 2.0);
                let w = build_coupling(&spec).unwrap();
                assert_eq!(w.matrix, w.matrix.transpose());
                let min = w
                    .matrix
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    min >= 5.0 - 4.0 - 1e-10,
                    "min eigenvalue {min} under a − 2b for n = {n}"
                );
            }
        }
    }

    #[test]
    fn cyclic_needs_three_sites() {
        let spec = ModelSpec::quadratic(0, Boundary::Cyclic, 1.0, 0.0);
        assert!(build_coupling(&spec).is_err());
    }

    #[test]
    fn quadratic_profile_is_couplings_only() {
        let consts = hypothesis_constants(&quad52(4));
        assert_eq!(consts.profile.value(0), 5.0);
        assert_eq!(consts.profile.value(1), 2.0);
        assert_eq!(consts.profile.value(2), 0.0);
        assert_eq!(consts.c0, 0.0);
    }

    #[test]
    fn gaussian_moments_at_unit_width() {
        // Closed forms at w = 1: ∫ξ²|v̂| = 2πε and ∫|ξ|³|v̂| = 4ε√(2π).
        let eps = 0.3;
        assert_relative_eq!(
            gaussian_fourier_moment(eps, 1.0, 2),
            2.0 * std::f64::consts::PI * eps,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            gaussian_fourier_moment(eps, 1.0, 3),
            4.0 * eps * (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn c0_one_site_only_matches_closed_form() {
        let mut spec = quad52(2);
        spec.perturbation = PerturbationSpec {
            eps_self: 0.3,
            eps_pair: 0.0,
            w: 1.0,
            gamma0: 1.0,
            range_cut: Some(1),
        };
        let consts = hypothesis_constants(&spec);
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_relative_eq!(consts.c0, 0.3 * (two_pi + 4.0 * two_pi.sqrt()), epsilon = 1e-13);
    }

    #[test]
    fn convolution_constant_quadratic_value() {
        // Pure quadratic a = 5, b = 2 at γ = 0.5:
        // S = a + 2b·cosh(γ) = 5 + 4·cosh(0.5).
        let consts = hypothesis_constants(&quad52(8));
        let s = consts.s_gamma(0.5).unwrap();
        assert_relative_eq!(s, 5.0 + 4.0 * 0.5_f64.cosh(), epsilon = 1e-14);
        assert_relative_eq!(s, 9.510503860825523, epsilon = 1e-12);
    }

    #[test]
    fn convolution_constant_monotone_in_gamma() {
        let mut spec = quad52(4);
        spec.perturbation = PerturbationSpec {
            eps_self: 0.2,
            eps_pair: 0.2,
            w: 1.0,
            gamma0: 1.0,
            range_cut: Some(6),
        };
        let consts = hypothesis_constants(&spec);
        let mut prev = 0.0;
        for i in 1..=40 {
            let g = 0.05 * i as f64;
            let s = consts.s_gamma(g).unwrap();
            assert!(s >= prev, "S_γ not monotone at γ = {g}");
            prev = s;
        }
    }

    #[test]
    fn convolution_dominates_lattice_sum_brute_force() {
        // Σ_μ k(|λ−μ|) e^{−γ|μ−ν|} ≤ S_γ e^{−γ|λ−ν|} entrywise on chains
        // up to n = 32, for several γ below γ₀.
        let mut spec = ModelSpec::quadratic(32, Boundary::Open, 5.0, 2.0);
        spec.perturbation = PerturbationSpec {
            eps_self: 0.25,
            eps_pair: 0.2,
            w: 0.8,
            gamma0: 1.2,
            range_cut: None,
        };
        let consts = hypothesis_constants(&spec);
        let sites = spec.sites();
        for &gamma in &[0.25, 0.5, 0.9, 1.1] {
            let s = consts.s_gamma(gamma).unwrap();
            for &lam in &sites {
                for &nu in &sites {
                    let lhs: f64 = sites
                        .iter()
                        .map(|&mu| {
                            consts.profile.value((lam - mu).unsigned_abs() as u32)
                                * (-gamma * (mu - nu).abs() as f64).exp()
                        })
                        .sum();
                    let rhs = s * (-gamma * (lam - nu).abs() as f64).exp();
                    assert!(
                        lhs <= rhs * (1.0 + 1e-12),
                        "violation at λ={lam}, ν={nu}, γ={gamma}: {lhs} > {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn unbounded_range_needs_gamma_below_decay_rate() {
        let mut spec = quad52(4);
        spec.perturbation.range_cut = None;
        spec.perturbation.eps_pair = 0.1;
        let consts = hypothesis_constants(&spec);
        assert!(consts.s_gamma(0.99).is_ok());
        assert!(consts.s_gamma(1.0).is_err());
    }

    #[test]
    fn velocity_bound_scaling_law() {
        // Scaling (a, b) → (g²a, g²b) multiplies the bound by g exactly
        // on a shared grid.
        let grid: Vec<f64> = (1..=60).map(|i| 0.1 * i as f64).collect();
        let v1 = velocity_bound_general(&quad52(4), &grid).unwrap();
        let scaled = ModelSpec::quadratic(4, Boundary::Cyclic, 20.0, 8.0);
        let v2 = velocity_bound_general(&scaled, &grid).unwrap();
        assert_relative_eq!(v2.value, 2.0 * v1.value, epsilon = 1e-12);
        assert_eq!(v1.gamma_star, v2.gamma_star);
    }

    #[test]
    fn velocity_bound_stable_under_grid_refinement() {
        let coarse: Vec<f64> = (1..=30).map(|i| 0.2 * i as f64).collect();
        let v1 = velocity_bound_general(&quad52(4), &coarse).unwrap();
        // Refinement containing the coarse minimizer can only improve.
        let mut fine: Vec<f64> = (1..=120).map(|i| 0.05 * i as f64).collect();
        fine.push(v1.gamma_star);
        let v2 = velocity_bound_general(&quad52(4), &fine).unwrap();
        assert!(v2.value <= v1.value + 1e-15);
    }

    #[test]
    fn spec_json_round_trip_and_keys() {
        let mut spec = quad52(3);
        spec.perturbation = PerturbationSpec {
            eps_self: 0.1,
            eps_pair: 0.05,
            w: 1.5,
            gamma0: 0.9,
            range_cut: Some(4),
        };
        let text = serde_json::to_string(&spec).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = value.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["a", "b", "boundary", "n_sites", "perturbation"]);
        let pert = obj["perturbation"].as_object().unwrap();
        let mut pkeys: Vec<&str> = pert.keys().map(String::as_str).collect();
        pkeys.sort_unstable();
        assert_eq!(pkeys, ["eps_pair", "eps_self", "gamma0", "range_cut", "w"]);
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn site_distance_wraps_on_ring() {
        assert_eq!(site_distance(Boundary::Open, 2, -2, 2), 4);
        assert_eq!(site_distance(Boundary::Cyclic, 2, -2, 2), 1);
        assert_eq!(site_distance(Boundary::Cyclic, 2, 0, 2), 2);
    }
}
