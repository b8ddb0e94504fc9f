//! Dispersion analysis of the quadratic chain.
//!
//! The translation-invariant coupling has symbol `Ω(z)² = a − b(z + 1/z)`
//! (so `Ω(e^{iθ}) = √(a − 2b·cosθ)` on the unit circle).  The module
//! computes `Ω` on circles `|z| = e^γ`, the growth rate
//! `M(γ) = sup_θ |Im Ω(e^γ e^{iθ})|`, the velocity bound `inf_γ M(γ)/γ`,
//! and Laurent coefficients of the three evolution symbols together with
//! their circle-integral decay bounds.

use crate::error::CoreError;
use crate::model::ModelSpec;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Couplings of the translation-invariant quadratic chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    pub a: f64,
    pub b: f64,
}

impl DispersionParams {
    pub fn new(a: f64, b: f64) -> Self {
        DispersionParams { a, b }
    }

    pub fn from_model(spec: &ModelSpec) -> Self {
        DispersionParams {
            a: spec.a,
            b: spec.b,
        }
    }

    /// `Ω(z) = √(a − b(z + 1/z))`, principal branch.
    ///
    /// Only even functions of `Ω` are consumed downstream, so the branch
    /// choice never matters there.
    pub fn omega(&self, z: Complex64) -> Complex64 {
        (Complex64::new(self.a, 0.0) - self.b * (z + z.inv())).sqrt()
    }

    /// `Ω` at `z = e^{γ} e^{iθ}`.
    pub fn omega_on_circle(&self, gamma: f64, theta: f64) -> Complex64 {
        self.omega(Complex64::from_polar(gamma.exp(), theta))
    }

    /// Real dispersion on the unit circle, `ω(θ) = √(a − 2b cos θ)`.
    pub fn omega_real(&self, theta: f64) -> f64 {
        (self.a - 2.0 * self.b * theta.cos()).sqrt()
    }

    /// Group velocity `b·sinθ/ω(θ)` at angle `θ`.
    pub fn group_velocity(&self, theta: f64) -> f64 {
        self.b * theta.sin() / self.omega_real(theta)
    }

    /// Maximum group velocity over the band (golden-section search; the
    /// speed profile has a single interior maximum for `a > 2b > 0`).
    pub fn group_velocity_max(&self) -> f64 {
        let mut lo = 0.0_f64;
        let mut hi = std::f64::consts::PI;
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = self.group_velocity(x1);
        let mut f2 = self.group_velocity(x2);
        for _ in 0..120 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = self.group_velocity(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = self.group_velocity(x1);
            }
        }
        f1.max(f2)
    }
}

/// `M(γ) = sup_θ |Im Ω(e^γ e^{iθ})|`, by dense grid plus golden-section
/// refinement around the grid maximizer.
pub fn m_gamma(params: &DispersionParams, gamma: f64, grid_size: usize) -> Result<f64, CoreError> {
    if gamma <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "growth rate needs gamma > 0 (got {gamma})"
        )));
    }
    if grid_size < 16 {
        return Err(CoreError::InvalidParameter(format!(
            "grid too coarse for the sup search ({grid_size} points)"
        )));
    }
    // |Im Ω| is symmetric under θ → −θ, so scanning [0, π] suffices.
    let im_at = |theta: f64| params.omega_on_circle(gamma, theta).im.abs();
    let mut best_theta = 0.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=grid_size {
        let theta = std::f64::consts::PI * i as f64 / grid_size as f64;
        let v = im_at(theta);
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    // Local refinement in a one-grid-step bracket around the maximizer.
    let step = std::f64::consts::PI / grid_size as f64;
    let mut lo = (best_theta - step).max(0.0);
    let mut hi = (best_theta + step).min(std::f64::consts::PI);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = im_at(x1);
    let mut f2 = im_at(x2);
    for _ in 0..90 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = im_at(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = im_at(x1);
        }
    }
    Ok(best.max(f1).max(f2))
}

/// Velocity bound for the quadratic chain: minimum of `M(γ)/γ` over the
/// supplied grid (the infimum may sit at the small-γ end, where the ratio
/// tends to the maximum group velocity).
pub fn velocity_bound_quadratic(
    params: &DispersionParams,
    gamma_grid: &[f64],
    grid_size: usize,
) -> Result<crate::model::VelocityBound, CoreError> {
    if gamma_grid.is_empty() {
        return Err(CoreError::InvalidParameter(
            "velocity bound needs a nonempty gamma grid".into(),
        ));
    }
    let mut best: Option<crate::model::VelocityBound> = None;
    for &g in gamma_grid {
        let ratio = m_gamma(params, g, grid_size)? / g;
        if best.as_ref().map_or(true, |b| ratio < b.value) {
            best = Some(crate::model::VelocityBound {
                value: ratio,
                gamma_star: g,
            });
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// Default logarithmic γ grid for the quadratic velocity bound.
pub fn default_gamma_grid() -> Vec<f64> {
    let lo: f64 = 1e-3;
    let hi: f64 = 5.0;
    let n = 128;
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// The three scalar evolution symbols, all even functions of `Ω` and so
/// analytic in `ℂ ∖ {0}` as functions of `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// `cos(tΩ)` — generates the position-from-position block.
    Cos,
    /// `sin(tΩ)/Ω` — generates the position-from-momentum block.
    SinOverOmega,
    /// `−Ω·sin(tΩ)` — generates the momentum-from-position block.
    NegSinTimesOmega,
}

/// Evaluate a symbol at `z`; numerically stable near `Ω = 0` (the
/// `sin/Ω` ratio switches to its even power series).
pub fn symbol_value(params: &DispersionParams, kind: SymbolKind, z: Complex64, t: f64) -> Complex64 {
    let omega = params.omega(z);
    let w = omega * t;
    match kind {
        SymbolKind::Cos => w.cos(),
        SymbolKind::SinOverOmega => {
            if w.norm() < 1e-4 {
                // t·(1 − (tΩ)²/6 + (tΩ)⁴/120 − …)
                let w2 = w * w;
                t * (Complex64::new(1.0, 0.0) - w2 / 6.0 + w2 * w2 / 120.0)
            } else {
                w.sin() / omega
            }
        }
        SymbolKind::NegSinTimesOmega => -omega * w.sin(),
    }
}

/// Laurent coefficients of one evolution symbol at one time, with the
/// circle-integral data needed for the decay bound
/// `|c_k| ≤ e^{−γ|k|} · (1/2π)∫|symbol(e^γ e^{iθ})| dθ`.
#[derive(Debug, Clone)]
pub struct LaurentTable {
    pub kind: SymbolKind,
    pub t: f64,
    pub k_max: usize,
    /// Decay rate used for the bound column.
    pub gamma: f64,
    /// Coefficients for `k = −k_max ..= k_max` in ascending `k`.
    pub coefficients: Vec<Complex64>,
    /// `(1/2π)∫|symbol(e^γ e^{iθ}, t)| dθ`.
    pub radius_integral: f64,
}

impl LaurentTable {
    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.coefficients[(k + self.k_max as i64) as usize]
    }

    /// Decay bound at index `k`.
    pub fn bound(&self, k: i64) -> f64 {
        (-self.gamma * k.abs() as f64).exp() * self.radius_integral
    }

    /// Rows `(k, Re c_k, Im c_k, bound)` in ascending `k`.
    pub fn rows(&self) -> Vec<(i64, f64, f64, f64)> {
        (-(self.k_max as i64)..=self.k_max as i64)
            .map(|k| {
                let c = self.coefficient(k);
                (k, c.re, c.im, self.bound(k))
            })
            .collect()
    }
}

/// `(1/2π)∫|symbol(e^γ e^{iθ}, t)| dθ` by the trapezoid rule on a uniform
/// periodic grid (spectrally accurate for smooth integrands).
pub fn radius_integral(
    params: &DispersionParams,
    kind: SymbolKind,
    t: f64,
    gamma: f64,
    quad_points: usize,
) -> f64 {
    let n = quad_points.max(64);
    let r = gamma.exp();
    (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            symbol_value(params, kind, Complex64::from_polar(r, theta), t).norm()
        })
        .sum::<f64>()
        / n as f64
}

/// Compute Laurent coefficients by FFT on the unit circle.
///
/// `fft_size` must be a power of two with `fft_size ≥ 4·k_max` so
/// sampling aliasing stays below the coefficient tail.
pub fn laurent_coefficients(
    params: &DispersionParams,
    kind: SymbolKind,
    t: f64,
    k_max: usize,
    fft_size: usize,
    gamma: f64,
    quad_points: usize,
) -> Result<LaurentTable, CoreError> {
    if !fft_size.is_power_of_two() || fft_size < 4 * k_max.max(1) {
        return Err(CoreError::InvalidParameter(format!(
            "fft_size must be a power of two at least 4·k_max (got {fft_size} for k_max {k_max})"
        )));
    }
    if gamma <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "decay bound needs gamma > 0 (got {gamma})"
        )));
    }
    let mut buf: Vec<Complex64> = (0..fft_size)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / fft_size as f64;
            symbol_value(params, kind, Complex64::from_polar(1.0, theta), t)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(fft_size).process(&mut buf);
    // Forward FFT gives Σ_j f_j e^{−2πi jk/N}; dividing by N yields c_k,
    // with negative k wrapped to index N − |k|.
    let coeff = |k: i64| -> Complex64 {
        let idx = k.rem_euclid(fft_size as i64) as usize;
        buf[idx] / fft_size as f64
    };
    let coefficients = (-(k_max as i64)..=k_max as i64).map(coeff).collect();
    let integral = radius_integral(params, kind, t, gamma, quad_points);
    Ok(LaurentTable {
        kind,
        t,
        k_max,
        gamma,
        coefficients,
        radius_integral: integral,
    })
}
