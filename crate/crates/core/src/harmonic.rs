//! Closed-form Heisenberg evolution of the quadratic chain.
//!
//! With coupling matrix `W` the position/momentum blocks evolve as
//! `Q(t) = A(t)·Q(0) + B(t)·P(0)` and `P(t) = Ȧ(t)·Q(0) + Ḃ(t)·P(0)`
//! where `A = cos(t√W)`, `B = sin(t√W)/√W`, `Ȧ = −√W sin(t√W)`,
//! `Ḃ = A`.  Two independent computational routes are provided (dense
//! eigendecomposition, and circulant diagonalization for the ring), plus
//! the exact symplectic algebra for Weyl observables built on top.

use crate::dispersion::{radius_integral, DispersionParams, SymbolKind};
use crate::error::CoreError;
use crate::linalg::{sym_eigen, RMat, RVec};
use crate::model::{Boundary, ModelSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which route produced an [`EvolutionMatrices`] value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvolutionSource {
    Spectral,
    Circulant,
    SecondOrderOde,
}

/// The four real evolution blocks at one time.
///
/// Field names follow the Heisenberg flow they implement:
/// `Q(t) = q_from_q·Q(0) + q_from_p·P(0)`,
/// `P(t) = p_from_q·Q(0) + p_from_p·P(0)`.
#[derive(Debug, Clone)]
pub struct EvolutionMatrices {
    pub t: f64,
    pub q_from_q: RMat,
    pub q_from_p: RMat,
    pub p_from_q: RMat,
    pub p_from_p: RMat,
    pub source: EvolutionSource,
}

impl EvolutionMatrices {
    pub fn dim(&self) -> usize {
        self.q_from_q.nrows()
    }
}

/// Scalar spectral maps, stable near zero frequency.
fn cos_root(lambda: f64, t: f64) -> f64 {
    (t * lambda.max(0.0).sqrt()).cos()
}

fn sinc_root(lambda: f64, t: f64) -> f64 {
    let om = lambda.max(0.0).sqrt();
    let x = t * om;
    if x.abs() < 1e-6 {
        // sin(tω)/ω = t·(1 − x²/6 + x⁴/120 − …)
        t * (1.0 - x * x / 6.0 + x * x * x * x / 120.0)
    } else {
        x.sin() / om
    }
}

fn neg_root_sin(lambda: f64, t: f64) -> f64 {
    let om = lambda.max(0.0).sqrt();
    -om * (t * om).sin()
}

/// Spectral route: eigendecomposition of the coupling matrix, reusable
/// across a time grid.
pub struct SpectralEvolver {
    vals: RVec,
    vecs: RMat,
}

impl SpectralEvolver {
    /// The coupling must be symmetric positive semidefinite (up to
    /// round-off); genuinely negative modes are rejected.
    pub fn new(coupling: &RMat) -> Result<Self, CoreError> {
        if coupling.nrows() != coupling.ncols() {
            return Err(CoreError::DimensionMismatch(format!(
                "coupling must be square (got {}x{})",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        let (vals, vecs) = sym_eigen(coupling);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(CoreError::InvalidParameter(format!(
                "coupling has a negative mode (min eigenvalue {min}); oscillation frequencies undefined"
            )));
        }
        Ok(SpectralEvolver { vals, vecs })
    }

    fn block(&self, f: impl Fn(f64, f64) -> f64, t: f64) -> RMat {
        crate::linalg::sym_matrix_function_pre(&self.vals, &self.vecs, |x| f(x, t))
    }

    pub fn matrices(&self, t: f64) -> EvolutionMatrices {
        EvolutionMatrices {
            t,
            q_from_q: self.block(cos_root, t),
            q_from_p: self.block(sinc_root, t),
            p_from_q: self.block(neg_root_sin, t),
            p_from_p: self.block(cos_root, t),
            source: EvolutionSource::Spectral,
        }
    }
}

/// Spectral route, one-shot.
pub fn evolve_matrices_spectral(coupling: &RMat, t: f64) -> Result<EvolutionMatrices, CoreError> {
    Ok(SpectralEvolver::new(coupling)?.matrices(t))
}

/// Circulant route for the ring: mode frequencies
/// `ω_k² = a − 2b·cos(2πk/N)`, blocks filled from their first rows.
pub struct CirculantEvolver {
    omega2: Vec<f64>,
}

impl CirculantEvolver {
    pub fn new(spec: &ModelSpec) -> Result<Self, CoreError> {
        if spec.boundary != Boundary::Cyclic {
            return Err(CoreError::InvalidParameter(
                "circulant route needs the cyclic boundary".into(),
            ));
        }
        let n = spec.dim();
        if n < 3 {
            return Err(CoreError::InvalidParameter(format!(
                "ring needs at least 3 sites (got {n})"
            )));
        }
        let omega2 = (0..n)
            .map(|k| spec.a - 2.0 * spec.b * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        Ok(CirculantEvolver { omega2 })
    }

    fn first_row(&self, f: impl Fn(f64, f64) -> f64, t: f64) -> Vec<f64> {
        let n = self.omega2.len();
        (0..n)
            .map(|j| {
                self.omega2
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| {
                        f(l, t) * (2.0 * std::f64::consts::PI * k as f64 * j as f64 / n as f64).cos()
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }

    fn fill(row: &[f64]) -> RMat {
        let n = row.len();
        RMat::from_fn(n, n, |i, j| row[(j + n - i) % n])
    }

    pub fn matrices(&self, t: f64) -> EvolutionMatrices {
        EvolutionMatrices {
            t,
            q_from_q: Self::fill(&self.first_row(cos_root, t)),
            q_from_p: Self::fill(&self.first_row(sinc_root, t)),
            p_from_q: Self::fill(&self.first_row(neg_root_sin, t)),
            p_from_p: Self::fill(&self.first_row(cos_root, t)),
            source: EvolutionSource::Circulant,
        }
    }
}

/// Circulant route, one-shot.
pub fn evolve_matrices_circulant(spec: &ModelSpec, t: f64) -> Result<EvolutionMatrices, CoreError> {
    Ok(CirculantEvolver::new(spec)?.matrices(t))
}

/// Real phase point `(u, v)` of the canonical combination
/// `Π(u,v) = Σ_λ u_λ·P_λ + v_λ·Q_λ`, indexed in site order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub u: RVec,
    pub v: RVec,
}

/// Which canonical operator a scalar check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CanonicalKind {
    Position,
    Momentum,
}

impl PhasePoint {
    pub fn zero(dim: usize) -> Self {
        PhasePoint {
            u: RVec::zeros(dim),
            v: RVec::zeros(dim),
        }
    }

    /// Phase point of a single canonical operator with a coefficient.
    pub fn single(dim: usize, index: usize, kind: CanonicalKind, amplitude: f64) -> Self {
        let mut p = PhasePoint::zero(dim);
        match kind {
            CanonicalKind::Position => p.v[index] = amplitude,
            CanonicalKind::Momentum => p.u[index] = amplitude,
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// ℓ¹ size `Σ_λ (|u_λ| + |v_λ|)`.
    pub fn l1(&self) -> f64 {
        self.u.iter().map(|x| x.abs()).sum::<f64>() + self.v.iter().map(|x| x.abs()).sum::<f64>()
    }

    /// Indices carrying weight above a threshold.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.u[i].abs() > threshold || self.v[i].abs() > threshold)
            .collect()
    }
}

/// Transport a phase point along the flow: the evolved combination is
/// `Π(u', v')` with `u' = Ḃᵀu + Bᵀv` and `v' = Ȧᵀu + Aᵀv` (the blocks
/// are symmetric, so plain products are used).
pub fn symplectic_propagate(e: &EvolutionMatrices, p: &PhasePoint) -> Result<PhasePoint, CoreError> {
    if p.dim() != e.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "phase point dim {} vs evolution dim {}",
            p.dim(),
            e.dim()
        )));
    }
    Ok(PhasePoint {
        u: &e.p_from_p * &p.u + &e.q_from_p * &p.v,
        v: &e.p_from_q * &p.u + &e.q_from_q * &p.v,
    })
}

/// Symplectic form `σ(p, q) = Σ_λ (u_λ v'_λ − v_λ u'_λ)`.
pub fn symplectic_form(p: &PhasePoint, q: &PhasePoint) -> f64 {
    p.u.dot(&q.v) - p.v.dot(&q.u)
}

/// Exact commutator scalar between one evolved and one static canonical
/// operator: `[α^t(X_λ), Y_μ]` is `±i` times an evolution-matrix entry.
pub fn pair_commutator_scalar(
    e: &EvolutionMatrices,
    lambda: usize,
    mu: usize,
    evolved: CanonicalKind,
    static_side: CanonicalKind,
) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    match (evolved, static_side) {
        (CanonicalKind::Position, CanonicalKind::Position) => -i * e.q_from_p[(lambda, mu)],
        (CanonicalKind::Position, CanonicalKind::Momentum) => i * e.q_from_q[(lambda, mu)],
        (CanonicalKind::Momentum, CanonicalKind::Position) => -i * e.p_from_p[(lambda, mu)],
        (CanonicalKind::Momentum, CanonicalKind::Momentum) => i * e.p_from_q[(lambda, mu)],
    }
}

/// Exact norm of the commutator of two Weyl operators after evolving the
/// first: `‖[α^t(W(p₁)), W(p₂)]‖ = 2·|sin(σ(S(t)p₁, p₂)/2)|`.
pub fn weyl_commutator_norm_exact(
    e: &EvolutionMatrices,
    p1: &PhasePoint,
    p2: &PhasePoint,
) -> Result<f64, CoreError> {
    let moved = symplectic_propagate(e, p1)?;
    Ok(2.0 * (symplectic_form(&moved, p2) / 2.0).sin().abs())
}

/// Wrap-around geometric-series constant: the smallest `C` with
/// `Σ_{p∈ℤ} e^{−γ|j + pN|} ≤ C·e^{−γ·d_N(j)}` for all residues `j`,
/// where `d_N` is the ring distance.
pub fn aliasing_constant(gamma: f64, period: usize) -> f64 {
    let n = period as i64;
    let mut worst = 0.0_f64;
    for j in 0..n {
        let mut total = 0.0;
        for p in -80..=80_i64 {
            total += (-gamma * (j + p * n).abs() as f64).exp();
        }
        let d = j.min(n - j);
        worst = worst.max(total * (gamma * d as f64).exp());
    }
    worst
}

/// Combined circle-integral envelope `2·I_cos + I_sin/Ω + I_Ω·sin` at one
/// time (the cos symbol drives two of the four blocks).
pub fn envelope_profile(
    params: &DispersionParams,
    gamma: f64,
    t: f64,
    quad_points: usize,
) -> f64 {
    2.0 * radius_integral(params, SymbolKind::Cos, t, gamma, quad_points)
        + radius_integral(params, SymbolKind::SinOverOmega, t, gamma, quad_points)
        + radius_integral(params, SymbolKind::NegSinTimesOmega, t, gamma, quad_points)
}
