//! The soliton family `Q_{c,y}(x) = c^{2/3} (5/2)^{1/3} sech^{2/3}(3c(x−y)/2)`.
//!
//! All profiles are closed forms evaluated at the minimal periodic image of `x − y`.
//! `Q̃ = (2/3)Q + (x−y)Q′ = c ∂_c Q_c`, `Q̃̃ = (2/3)Q̃ + (x−y)Q̃′`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, Field, GridSpec};
use crate::special::gamma;

pub const POWER: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SolitonParams {
    c: f64,
    y: f64,
}

#[derive(Deserialize)]
struct RawParams {
    c: f64,
    y: f64,
}

impl TryFrom<RawParams> for SolitonParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        SolitonParams::new(r.c, r.y)
    }
}

impl SolitonParams {
    pub fn new(c: f64, y: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param("c", format!("{c} must be positive")));
        }
        if !y.is_finite() {
            return Err(Error::param("y", "must be finite"));
        }
        Ok(SolitonParams { c, y })
    }

    pub fn with_power(c: f64, y: f64, p: u32) -> Result<Self> {
        if p != POWER {
            return Err(Error::param("p", format!("only p = {POWER} is supported, got {p}")));
        }
        SolitonParams::new(c, y)
    }

    pub fn unit() -> Self {
        SolitonParams { c: 1.0, y: 0.0 }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn p(&self) -> u32 {
        POWER
    }

    /// Center after free travel for time `t` at speed c².
    pub fn travelled(&self, t: f64) -> Self {
        SolitonParams { c: self.c, y: self.y + self.c * self.c * t }
    }
}

const AMP: f64 = 1.357_208_808_297_453_2; // (5/2)^{1/3}

/// Profile values at displacement `d = x − y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValues {
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub tilde: f64,
    pub tilde1: f64,
    pub tilde2: f64,
    pub tilde_tilde: f64,
}

pub fn point_values(c: f64, d: f64) -> PointValues {
    let k = 1.5 * c;
    let z = k * d;
    // sech^{2/3} without overflow for large |z|
    let az = z.abs();
    let s23 = if az > 300.0 {
        (2.0f64).powf(2.0 / 3.0) * (-2.0 / 3.0 * az).exp()
    } else {
        (1.0 / az.cosh()).powf(2.0 / 3.0)
    };
    let t = z.tanh();
    let t2 = t * t;
    let amp = AMP * c.powf(2.0 / 3.0);
    let amp53 = AMP * c.powf(5.0 / 3.0);
    let q = amp * s23;
    let f = s23 * t;
    let fz = s23 * (1.0 - 5.0 / 3.0 * t2);
    let fzz = s23 * t * (-4.0 + 40.0 / 9.0 * t2);
    let q1 = -amp53 * f;
    let q2 = -amp53 * k * fz;
    let q3 = -amp53 * k * k * fzz;
    let tilde = 2.0 / 3.0 * q + d * q1;
    let tilde1 = 5.0 / 3.0 * q1 + d * q2;
    let tilde2 = 8.0 / 3.0 * q2 + d * q3;
    let tilde_tilde = 2.0 / 3.0 * tilde + d * tilde1;
    PointValues { q, q1, q2, q3, tilde, tilde1, tilde2, tilde_tilde }
}

/// `Q_c(d)` alone, for inner loops that do not need the derivatives.
pub(crate) fn q_point(c: f64, d: f64) -> f64 {
    let z = (1.5 * c * d).abs();
    // sech² = 4e^{−2z}/(1 + e^{−2z})²
    let e = (-2.0 * z).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    AMP * c.powf(2.0 / 3.0) * sech2.cbrt()
}

/// Every profile of the family sampled on one grid.
#[derive(Clone, Debug)]
pub struct Profiles {
    pub params: SolitonParams,
    pub q: Field,
    pub q1: Field,
    pub q2: Field,
    pub q3: Field,
    pub tilde: Field,
    pub tilde1: Field,
    pub tilde2: Field,
    pub tilde_tilde: Field,
}

impl Profiles {
    pub fn new(params: SolitonParams, grid: GridSpec) -> Self {
        let n = grid.n();
        let mut cols: [Vec<f64>; 8] = Default::default();
        for c in cols.iter_mut() {
            c.reserve_exact(n);
        }
        for i in 0..n {
            let v = point_values(params.c, grid.wrap(grid.x(i) - params.y));
            for (col, val) in cols
                .iter_mut()
                .zip([v.q, v.q1, v.q2, v.q3, v.tilde, v.tilde1, v.tilde2, v.tilde_tilde])
            {
                col.push(val);
            }
        }
        let [q, q1, q2, q3, tilde, tilde1, tilde2, tilde_tilde] = cols.map(|v| Field::from_raw(grid, v));
        Profiles { params, q, q1, q2, q3, tilde, tilde1, tilde2, tilde_tilde }
    }

    /// `𝓛Q″ = 12 Q² Q′²`, from differentiating `𝓛Q′ = 0`.
    pub fn l_of_q2(&self) -> Field {
        self.q.zip_map(&self.q1, |q, d| 12.0 * q * q * d * d).expect("same grid")
    }
}

pub fn profile(params: SolitonParams, grid: GridSpec) -> Field {
    sample(params, grid, |v| v.q)
}

pub fn profile_prime(params: SolitonParams, grid: GridSpec) -> Field {
    sample(params, grid, |v| v.q1)
}

pub fn tilde_profile(params: SolitonParams, grid: GridSpec) -> Field {
    sample(params, grid, |v| v.tilde)
}

pub fn tilde_tilde_profile(params: SolitonParams, grid: GridSpec) -> Field {
    sample(params, grid, |v| v.tilde_tilde)
}

fn sample(params: SolitonParams, grid: GridSpec, pick: impl Fn(&PointValues) -> f64) -> Field {
    let values = (0..grid.n())
        .map(|i| pick(&point_values(params.c, grid.wrap(grid.x(i) - params.y))))
        .collect();
    Field::from_raw(grid, values)
}

/// `‖Q_p‖²` for the unit soliton of power `p`:
/// `((p+1)/2)^{2/(p−1)} · Γ((p+1)/(p−1)) √π / Γ((p+3)/(2(p−1)))`.
pub fn mass_formula_p(p: u32) -> f64 {
    let p = p as f64;
    ((p + 1.0) / 2.0).powf(2.0 / (p - 1.0)) * gamma((p + 1.0) / (p - 1.0)) * PI.sqrt()
        / gamma((p + 3.0) / (2.0 * (p - 1.0)))
}

/// `‖Q₁‖² = (5/2)^{2/3} Γ(5/3) √π / Γ(7/6)`.
pub fn mass_formula() -> f64 {
    mass_formula_p(POWER)
}

pub fn mass_numeric(grid: GridSpec) -> f64 {
    profile(SolitonParams::unit(), grid).norm_l2().powi(2)
}

/// `‖Q_c‖² = c^{1/3} ‖Q₁‖²`.
pub fn mass_of(c: f64) -> f64 {
    c.powf(1.0 / 3.0) * mass_formula()
}

/// `‖Q′_c‖² = (3/7) c^{7/3} ‖Q₁‖²` (Pohozaev).
pub fn qprime_norm_sq(c: f64) -> f64 {
    3.0 / 7.0 * c.powf(7.0 / 3.0) * mass_formula()
}

/// `‖Q″ − c²Q + Q⁴‖_{L²}` with the second derivative taken spectrally.
pub fn euler_lagrange_residual(params: SolitonParams, grid: GridSpec) -> f64 {
    let q = profile(params, grid);
    residual_of(&q, params.c)
}

/// Same residual for an arbitrary candidate profile.
pub fn residual_of(q: &Field, c: f64) -> f64 {
    let q2 = derivative(q, 2).expect("order 2 is valid");
    let c2 = c * c;
    q2.zip_map(q, |d2, v| d2 - c2 * v + v.powi(4)).expect("same grid").norm_l2()
}
