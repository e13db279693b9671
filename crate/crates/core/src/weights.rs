//! Weight profiles: the local-smoothing weight γ₀, the virial weight η and sech bumps.
//!
//! `γ₀(x) = 1 + ∫_{−∞}^x (1+y²)^{−(1+ε)/2} dy`. Derivatives are closed forms; the
//! weight itself uses `γ₀(x) = 1 + T/2 + sgn(x)∫₀^{|x|}` with the partial integral
//! mapped by `y = sinh u` to the smooth integrand `cosh^{−ε} u`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::special::{gamma, gauss_legendre, integrate};

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Gamma0 { epsilon: f64 },
    Gamma0Shifted { epsilon: f64, shift: f64 },
    Eta { center: f64 },
    Sech { center: f64, rate: f64 },
}

/// Sampled weight together with its first derivative.
///
/// Shifted weights use the minimal periodic image of `x − shift` for the derivative
/// (a localized bump), and the plain displacement for the monotone weight itself.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightProfile {
    pub kind: WeightKind,
    pub samples: Field,
    pub derivative: Field,
}

impl WeightProfile {
    pub fn epsilon(&self) -> Option<f64> {
        match self.kind {
            WeightKind::Gamma0 { epsilon } | WeightKind::Gamma0Shifted { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("epsilon", format!("{epsilon} not in (0, 1]")))
    }
}

/// `∫_ℝ (1+y²)^{−(1+ε)/2} dy = √π Γ(ε/2) / Γ((1+ε)/2)`.
pub fn gamma0_total(epsilon: f64) -> f64 {
    PI.sqrt() * gamma(0.5 * epsilon) / gamma(0.5 * (1.0 + epsilon))
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(12))
}

fn partial_integral(a: f64, epsilon: f64) -> f64 {
    let top = a.asinh();
    if top == 0.0 {
        return 0.0;
    }
    let panels = ((top / 0.25).ceil() as usize).max(1);
    integrate(|u| u.cosh().powf(-epsilon), 0.0, top, panels, rule())
}

pub fn gamma0(x: f64, epsilon: f64) -> f64 {
    1.0 + 0.5 * gamma0_total(epsilon) + x.signum() * partial_integral(x.abs(), epsilon)
}

pub fn gamma0_d1(x: f64, epsilon: f64) -> f64 {
    (1.0 + x * x).powf(-0.5 * (1.0 + epsilon))
}

pub fn gamma0_d2(x: f64, epsilon: f64) -> f64 {
    -(1.0 + epsilon) * x * (1.0 + x * x).powf(-0.5 * (3.0 + epsilon))
}

pub fn gamma0_d3(x: f64, epsilon: f64) -> f64 {
    let r = 1.0 + x * x;
    (1.0 + epsilon) * ((3.0 + epsilon) * x * x * r.powf(-0.5 * (5.0 + epsilon)) - r.powf(-0.5 * (3.0 + epsilon)))
}

/// Supremum over ℝ of `γ₀‴/γ₀′ = (1+ε)[(2+ε)u − (3+ε)u²]`, `u = 1/(1+x²)`.
pub fn stat_ratio_sup(epsilon: f64) -> f64 {
    (1.0 + epsilon) * (2.0 + epsilon).powi(2) / (4.0 * (3.0 + epsilon))
}

/// Largest `γ₀‴ − (2/3)γ₀′` over the grid points; non-positive when the condition holds.
pub fn stat_margin(grid: &GridSpec, epsilon: f64) -> f64 {
    grid.points()
        .iter()
        .map(|&x| gamma0_d3(x, epsilon) - 2.0 / 3.0 * gamma0_d1(x, epsilon))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// γ₀ on the grid, translated by `shift`.
pub fn gamma_weight(grid: GridSpec, epsilon: f64, shift: f64) -> Result<WeightProfile> {
    check_epsilon(epsilon)?;
    let samples = Field::from_fn(grid, |x| gamma0(x - shift, epsilon))?;
    let derivative = Field::from_fn(grid, |x| gamma0_d1(grid.wrap(x - shift), epsilon))?;
    let kind = if shift == 0.0 {
        WeightKind::Gamma0 { epsilon }
    } else {
        WeightKind::Gamma0Shifted { epsilon, shift }
    };
    Ok(WeightProfile { kind, samples, derivative })
}

/// `η(x) = (5/3) tanh(3x/2)`; η′ = Q₁³.
pub fn eta(x: f64) -> f64 {
    5.0 / 3.0 * (1.5 * x).tanh()
}

pub fn eta_d1(x: f64) -> f64 {
    let s = 1.0 / (1.5 * x).cosh();
    2.5 * s * s
}

pub fn eta_d2(x: f64) -> f64 {
    let s = 1.0 / (1.5 * x).cosh();
    -7.5 * s * s * (1.5 * x).tanh()
}

pub fn eta_d3(x: f64) -> f64 {
    let s = 1.0 / (1.5 * x).cosh();
    let t = (1.5 * x).tanh();
    -11.25 * s * s * (1.0 - 3.0 * t * t)
}

pub fn eta_weight(grid: GridSpec, center: f64) -> Result<WeightProfile> {
    Ok(WeightProfile {
        kind: WeightKind::Eta { center },
        samples: Field::from_fn(grid, |x| eta(grid.wrap(x - center)))?,
        derivative: Field::from_fn(grid, |x| eta_d1(grid.wrap(x - center)))?,
    })
}

/// `sech(rate·(x − center))`.
pub fn sech_weight(grid: GridSpec, center: f64, rate: f64) -> Result<WeightProfile> {
    if !(rate > 0.0) {
        return Err(Error::param("rate", "must be positive"));
    }
    let s = |x: f64| 1.0 / (rate * grid.wrap(x - center)).cosh();
    Ok(WeightProfile {
        kind: WeightKind::Sech { center, rate },
        samples: Field::from_fn(grid, s)?,
        derivative: Field::from_fn(grid, |x| {
            let z = rate * grid.wrap(x - center);
            -rate * z.tanh() / z.cosh()
        })?,
    })
}
