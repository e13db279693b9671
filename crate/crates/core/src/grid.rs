//! Periodic grid on `[−L/2, L/2)`, real fields, spectral transforms and norms.
//!
//! Spectral coefficients are the unnormalized DFT of the samples indexed from the
//! left endpoint: `f̂_k = Σ_j f_j e^{−2πi jk/n}`, so `‖f‖²_{L²} = (L/n²) Σ |f̂_k|²`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    n: usize,
    length: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    n: usize,
    length: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        GridSpec::new(r.n, r.length)
    }
}

impl GridSpec {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two ≥ 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length = {length} must be positive")));
        }
        Ok(GridSpec { n, length })
    }

    /// The default laboratory grid: L = 80, n = 1024.
    pub fn standard() -> Self {
        GridSpec { n: 1024, length: 80.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Signed integer frequency index of DFT slot `k`; the Nyquist slot maps to −n/2.
    pub fn mode_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI / self.length * self.mode_index(k) as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Minimal periodic image of a displacement, in `[−L/2, L/2)`.
    pub fn wrap(&self, d: f64) -> f64 {
        let l = self.length;
        d - l * ((d + 0.5 * l) / l).floor()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_n: self.n,
                left_len: self.length,
                right_n: other.n,
                right_len: other.length,
            })
        }
    }
}

type Plan = Arc<dyn Fft<f64>>;
/// Planner plus forward/inverse plans keyed by length.
type PlanCache = Mutex<(FftPlanner<f64>, HashMap<usize, (Plan, Plan)>)>;

fn plan_cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

/// Forward and inverse FFT plans of length `n`, shared process-wide.
pub(crate) fn fft_plans(n: usize) -> (Plan, Plan) {
    let mut guard = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&n) {
        return p.clone();
    }
    let p = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    map.insert(n, p.clone());
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Field { grid, values })
    }

    /// Length is guaranteed by construction; finiteness is the caller's responsibility.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Field { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field { grid, values: vec![0.0; grid.n] }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Field { grid, values: vec![value; grid.n] }
    }

    /// Samples `f(x_i)`; non-finite output is an error.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, (0..grid.n).map(|i| f(grid.x(i))).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |u, v| u + a * v)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            self.max_abs()
        } else {
            (self.grid.dx() * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    /// Periodic shift by whole grid points: result(x) = self(x − k·dx).
    pub fn shift_points(&self, k: i64) -> Field {
        let n = self.grid.n as i64;
        let values = (0..n)
            .map(|i| self.values[(i - k).rem_euclid(n) as usize])
            .collect();
        Field::from_raw(self.grid, values)
    }

    /// result(x) = self(−x), exact on the grid.
    pub fn reflect(&self) -> Field {
        let n = self.grid.n;
        Field::from_raw(self.grid, (0..n).map(|i| self.values[(n - i) % n]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "{} coefficients for a grid of {} points",
                coefficients.len(),
                grid.n
            )));
        }
        Ok(SpectralField { grid, coefficients })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Pointwise multiplier `m(ξ_k, k)`.
    pub fn multiply(&self, m: impl Fn(f64, usize) -> Complex64) -> SpectralField {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * m(self.grid.wavenumber(k), k))
            .collect();
        SpectralField { grid: self.grid, coefficients }
    }

    /// Multiplication by `(iξ)^order`; the Nyquist slot is dropped for odd orders.
    pub fn differentiate(&self, order: u32) -> SpectralField {
        let nyq = self.grid.n / 2;
        self.multiply(|xi, k| {
            if order % 2 == 1 && k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi).powu(order)
            }
        })
    }
}

pub fn forward_transform(f: &Field) -> SpectralField {
    let (fwd, _) = fft_plans(f.grid.n);
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    SpectralField { grid: f.grid, coefficients: buf }
}

/// Real part of the inverse DFT.
pub fn inverse_transform(s: &SpectralField) -> Field {
    let (_, inv) = fft_plans(s.grid.n);
    let mut buf = s.coefficients.clone();
    inv.process(&mut buf);
    let scale = 1.0 / s.grid.n as f64;
    Field::from_raw(s.grid, buf.iter().map(|c| c.re * scale).collect())
}

pub fn derivative(f: &Field, order: u32) -> Result<Field> {
    if !(1..=4).contains(&order) {
        return Err(Error::param("order", format!("{order} not in 1..=4")));
    }
    Ok(inverse_transform(&forward_transform(f).differentiate(order)))
}

pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.grid.dx() * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>())
}

/// `‖⟨D⟩ˢ f‖_{L²}`.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    bessel_potential(f, s).norm_l2()
}

/// `(∫ |⟨D⟩ˢ f|² ρ² dx)^{1/2}` for strictly positive `rho`.
pub fn weighted_sobolev_norm(f: &Field, s: f64, rho: &Field) -> Result<f64> {
    f.grid.check_same(&rho.grid)?;
    if let Some(i) = rho.values.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::param("rho", format!("non-positive weight {} at index {i}", rho.values[i])));
    }
    let g = bessel_potential(f, s);
    let dx = f.grid.dx();
    Ok((dx * g.values.iter().zip(&rho.values).map(|(u, r)| u * u * r * r).sum::<f64>()).sqrt())
}

pub(crate) fn bessel_potential(f: &Field, s: f64) -> Field {
    if s == 0.0 {
        return f.clone();
    }
    let m = forward_transform(f).multiply(|xi, _| Complex64::new((1.0 + xi * xi).powf(0.5 * s), 0.0));
    inverse_transform(&m)
}
