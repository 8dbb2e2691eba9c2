//! Closed-form retrieval dynamics for an ideal (infinite) frequency comb.
//!
//! With collective rate `Γ = πg²/c` and matching ratio `x = π²g²/(cΔ) = πΓ/Δ`,
//! the bright-mode amplitude during the first rephasing cycle is the free
//! comb signal divided by `1 + x`. This gives the amplitudes
//!
//! ```text
//! β_n(t) = e^{-iΔnt} [ c_n − (Γ/Δ)/(1+x) Σ_m e^{iΔ(n−m)t/2} K_{n−m}(t) c_m ],
//! K_d(t) = sin(Δ d t / 2) / (d / 2),   K_0(t) = Δ t,
//! ```
//!
//! and the efficiency factorizes as `η = η₀(g) η₁(t)` with
//! `η₀ = 4x/(1+x)²` and `η₁(t) = ∫₀^{Δt/2π} |Σ_n c_n e^{−2πinτ}|² dτ`.
//!
//! For a finite comb these expressions are approximations; the reduced ODE
//! in [`crate::reduced`] is exact.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{AmplitudeVector, Frame, SystemParams};
use crate::quadrature::integrate_adaptive;

/// Absolute tolerance of the `η₁` quadrature.
pub const ETA1_TOLERANCE: f64 = 1e-10;

/// Kernel argument below which the diagonal limit is used.
const KERNEL_LIMIT: f64 = 1e-12;

/// Collective decay rate `Γ = πg²/c`.
pub fn collective_rate(params: &SystemParams) -> f64 {
    params.decay_rate()
}

/// The coupling `g* = sqrt(cΔ)/π` solving the matching condition `π²g² = cΔ`.
pub fn optimal_coupling(params: &SystemParams) -> f64 {
    (params.light_speed() * params.comb_spacing()).sqrt() / PI
}

/// Matching ratio `x = π²g²/(cΔ)`; equals 1 at the optimum.
pub fn matching_ratio(coupling: f64, params: &SystemParams) -> f64 {
    PI * PI * coupling * coupling / (params.light_speed() * params.comb_spacing())
}

/// Impedance factor `η₀(g) = 4x/(1+x)²`.
pub fn eta0(coupling: f64, params: &SystemParams) -> f64 {
    let x = matching_ratio(coupling, params);
    4.0 * x / ((1.0 + x) * (1.0 + x))
}

/// Rephasing factor `η₁(t)`: fraction of the initial excitation whose
/// free-comb signal has left by time `t`. Equals `Σ|c_n|²` at `t = 2π/Δ`.
pub fn eta1(t: f64, init: &AmplitudeVector, params: &SystemParams) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    check_len(init, params)?;
    let upper = params.comb_spacing() * t / (2.0 * PI);
    let harmonics: Vec<(f64, Complex64)> = params
        .indices()
        .zip(init.values())
        .map(|(n, &c)| (n.value() as f64, c))
        .collect();
    let integrand = |tau: f64| {
        harmonics
            .iter()
            .map(|&(n, c)| c * Complex64::from_polar(1.0, -2.0 * PI * n * tau))
            .sum::<Complex64>()
            .norm_sqr()
    };
    // Whole cycles are integrated separately so panels never straddle a period.
    let whole = upper.floor();
    let mut total = 0.0;
    let cycles = whole as usize;
    for k in 0..cycles {
        total += integrate_adaptive(integrand, k as f64, k as f64 + 1.0, ETA1_TOLERANCE);
    }
    total += integrate_adaptive(integrand, whole, upper, ETA1_TOLERANCE);
    Ok(total)
}

/// Which form of the closed-form amplitudes to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosedForm {
    /// Solution derived from the reduced equations: kernel
    /// `sin(Δdt/2)/(d/2)` with diagonal limit `Δt`, and a minus sign.
    #[default]
    Derived,
    /// The typeset expression taken literally: kernel `sin(Δdt/2)/(dt/2)`
    /// with diagonal limit `Δ`, and a plus sign. Does not reduce to the
    /// initial condition at `t = 0`; kept for comparison only.
    Printed,
}

/// Prefactor `(πg²/(cΔ)) · [1 + π²g²/(cΔ)]⁻¹`, i.e. `(Γ/Δ)/(1+x)`.
pub fn closed_form_prefactor(params: &SystemParams) -> f64 {
    let gamma_over_delta = collective_rate(params) / params.comb_spacing();
    gamma_over_delta / (1.0 + matching_ratio(params.coupling(), params))
}

fn kernel(form: ClosedForm, d: f64, t: f64, delta: f64) -> f64 {
    match form {
        ClosedForm::Derived => {
            let a = 0.5 * d;
            if a.abs() < KERNEL_LIMIT {
                delta * t
            } else {
                (delta * a * t).sin() / a
            }
        }
        ClosedForm::Printed => {
            let a = 0.5 * d * t;
            if a.abs() < KERNEL_LIMIT {
                delta
            } else {
                (delta * a).sin() / a
            }
        }
    }
}

fn check_len(init: &AmplitudeVector, params: &SystemParams) -> Result<()> {
    if init.len() != params.n_resonators() {
        return Err(Error::LengthMismatch {
            expected: params.n_resonators(),
            got: init.len(),
        });
    }
    Ok(())
}

/// Closed-form rotating-frame amplitudes `β_n(t)` in the requested form.
pub fn beta_closed_form(
    t: f64,
    init: &AmplitudeVector,
    params: &SystemParams,
    form: ClosedForm,
) -> Result<AmplitudeVector> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    check_len(init, params)?;
    let delta = params.comb_spacing();
    let pref = closed_form_prefactor(params);
    let sign = match form {
        ClosedForm::Derived => -1.0,
        ClosedForm::Printed => 1.0,
    };
    let idx: Vec<f64> = params.indices().map(|n| n.value() as f64).collect();
    let c = init.values();
    let values = idx
        .iter()
        .zip(c)
        .map(|(&n, &cn)| {
            let mixed: Complex64 = idx
                .iter()
                .zip(c)
                .map(|(&m, &cm)| {
                    let d = n - m;
                    cm * Complex64::from_polar(kernel(form, d, t, delta), 0.5 * delta * d * t)
                })
                .sum();
            Complex64::from_polar(1.0, -delta * n * t) * (cn + sign * pref * mixed)
        })
        .collect();
    Ok(AmplitudeVector::new(values, Frame::Rotating))
}

/// Closed-form amplitudes (derived form).
pub fn beta_analytic(
    t: f64,
    init: &AmplitudeVector,
    params: &SystemParams,
) -> Result<AmplitudeVector> {
    beta_closed_form(t, init, params, ClosedForm::Derived)
}

/// `η = η₀ η₁` together with its factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyBreakdown {
    pub eta0: f64,
    pub eta1: f64,
    pub eta: f64,
}

/// Predicted retrieval efficiency at time `t` for coupling `coupling`.
pub fn efficiency_analytic(
    t: f64,
    coupling: f64,
    init: &AmplitudeVector,
    params: &SystemParams,
) -> Result<EfficiencyBreakdown> {
    let e0 = eta0(coupling, params);
    let e1 = eta1(t, init, params)?;
    Ok(EfficiencyBreakdown {
        eta0: e0,
        eta1: e1,
        eta: e0 * e1,
    })
}
